//! Small least-squares helpers used to read rates and frequencies off
//! sampled oracle curves.

use std::f64::consts::PI;

/// Straight line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

/// Ordinary least squares. Returns `None` with fewer than two distinct `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for k in 0..n {
        let dx = x[k] - mx;
        sxx += dx * dx;
        sxy += dx * (y[k] - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x[..n]
        .iter()
        .zip(&y[..n])
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Some(LineFit { slope, intercept, rms })
}

/// Rate `γ` of `y ≈ A e^{−γt}` from a line through `ln y`.
/// Samples with `y ≤ 0` are skipped.
pub fn exponential_rate(t: &[f64], y: &[f64]) -> Option<f64> {
    let (xs, ls): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&a, &v)| (a, v.ln()))
        .unzip();
    linear_fit(&xs, &ls).map(|f| -f.slope)
}

/// Removes `2π` jumps between consecutive phases.
pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in phases {
        if let Some(q) = prev {
            offset -= 2.0 * PI * ((p - q) / (2.0 * PI)).round();
        }
        prev = Some(p);
        out.push(p + offset);
    }
    out
}

/// `n` points evenly spaced on `[a, b]`, inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` points geometrically spaced on `[a, b]`; requires `a > 0`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    linspace(la, lb, n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line() {
        let x = linspace(0.0, 4.0, 5);
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert_abs_diff_eq!(f.slope, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.intercept, 3.0, epsilon = 1e-14);
        assert!(f.rms < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[1.0], &[2.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn rate_of_pure_exponential() {
        let t = linspace(0.0, 10.0, 50);
        let y: Vec<f64> = t.iter().map(|v| 0.7 * (-0.3 * v).exp()).collect();
        assert_abs_diff_eq!(exponential_rate(&t, &y).unwrap(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn unwrap_recovers_ramp() {
        let t = linspace(0.0, 20.0, 400);
        let raw: Vec<f64> = t.iter().map(|v| (1.3 * v).sin().atan2((1.3 * v).cos())).collect();
        let un = unwrap_phase(&raw);
        for (u, v) in un.iter().zip(&t) {
            assert_abs_diff_eq!(*u, 1.3 * v, epsilon = 1e-10);
        }
    }

    #[test]
    fn logspace_endpoints() {
        let s = logspace(0.1, 100.0, 4);
        assert_abs_diff_eq!(s[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s[3], 100.0, epsilon = 1e-12);
    }
}
