//! WebAssembly bindings for the static page in `www/`.
//!
//! Each export takes plain numbers and slices and returns a JSON string. The
//! work happens in the `*_report` functions, which are ordinary Rust and are
//! tested natively.

use std::sync::Arc;

use pointer_basis::evolution::{decompose_initial, diagonal_evolution, evolve};
use pointer_basis::fit::linspace;
use pointer_basis::measurement::{pointer_weights, premeasure, readout, MeasurementSetup};
use pointer_basis::{build_grid, discretize, Complex64, ContinuumGrid, CouplingProfile, GridScheme, LiouvilleSpectrum, ModelSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const OMEGA_MAX: f64 = 10.0;
/// Grid used by the perturbative views.
pub const SPECTRUM_NODES: usize = 2000;
/// Largest grid the in-browser eigensolver is asked to handle.
pub const MAX_ORACLE_NODES: usize = 800;

#[derive(Debug, Serialize)]
pub struct LevelRow {
    pub omega: f64,
    pub gamma: f64,
    pub delta: f64,
    pub dressed: f64,
}

#[derive(Debug, Serialize)]
pub struct DecayReport {
    pub levels: Vec<LevelRow>,
    pub t: Vec<f64>,
    /// `populations[i][s]` at `t[s]`.
    pub populations: Vec<Vec<f64>>,
    pub pointers: Vec<Vec<f64>>,
    /// `|ρ_0j(t)|` for j ≥ 1.
    pub coherences: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct ReadoutReport {
    pub energies: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub t: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    pub pointers: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct DistributionReport {
    pub nodes: Vec<f64>,
    pub density: Vec<f64>,
    pub discrete: f64,
    pub within_window: bool,
    pub recurrence_time: f64,
    pub gamma: f64,
    pub dressed: f64,
    /// Weisskopf–Wigner line at the same `t`, normalized like `density`.
    pub predicted: Vec<f64>,
}

fn setup(levels: &[f64], coupling: f64, m: usize) -> Result<(Arc<ContinuumGrid>, LiouvilleSpectrum, pointer_basis::Model), String> {
    let model = ModelSpec::new(levels.to_vec(), OMEGA_MAX, CouplingProfile::constant(coupling))
        .validate()
        .map_err(|e| e.to_string())?;
    let mut grid = build_grid(OMEGA_MAX, m, GridScheme::UniformMidpoint).map_err(|e| e.to_string())?;
    grid.avoid_levels(levels);
    let spectrum = LiouvilleSpectrum::compute(&model, &grid).map_err(|e| e.to_string())?;
    Ok((Arc::new(grid), spectrum, model))
}

fn normalized(re: &[f64], im: &[f64]) -> Result<Vec<Complex64>, String> {
    if re.len() != im.len() {
        return Err(format!("{} real parts, {} imaginary parts", re.len(), im.len()));
    }
    let a: Vec<Complex64> = re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect();
    let norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err("amplitudes are all zero".into());
    }
    Ok(a.into_iter().map(|z| z / norm).collect())
}

fn transpose(rows: Vec<Vec<f64>>, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| rows.iter().map(|r| r[i]).collect()).collect()
}

/// Decay of an equal superposition of all levels over `[0, t_max]`.
pub fn decay_report(levels: &[f64], coupling: f64, t_max: f64, samples: usize) -> Result<DecayReport, String> {
    if !(t_max > 0.0) || samples < 2 {
        return Err("need t_max > 0 and at least two samples".into());
    }
    let (grid, spectrum, _) = setup(levels, coupling, SPECTRUM_NODES)?;
    let n = levels.len();
    let a = vec![Complex64::new((n as f64).sqrt().recip(), 0.0); n];
    let setup = MeasurementSetup::new(a).map_err(|e| e.to_string())?;
    let d = decompose_initial(&premeasure(&setup, grid), &spectrum).map_err(|e| e.to_string())?;
    let t = linspace(0.0, t_max, samples);
    let mut pops = Vec::with_capacity(samples);
    let mut pointers = Vec::with_capacity(samples);
    let mut coh = Vec::with_capacity(samples);
    for &ts in &t {
        let w = diagonal_evolution(&d, &spectrum, ts);
        pops.push(w.discrete);
        pointers.push(w.atoms);
        let e = evolve(&d, &spectrum, ts).map_err(|e| e.to_string())?;
        coh.push((1..n).map(|j| e.coherence(0, j).norm()).collect());
    }
    let rows = (0..n)
        .map(|i| LevelRow {
            omega: levels[i],
            gamma: spectrum.gamma()[i],
            delta: spectrum.shift()[i],
            dressed: spectrum.resonance_energy(i),
        })
        .collect();
    Ok(DecayReport {
        levels: rows,
        t,
        populations: transpose(pops, n),
        pointers: transpose(pointers, n),
        coherences: transpose(coh, n.saturating_sub(1)),
    })
}

/// Pointer probabilities for a premeasured superposition and how they build up.
pub fn readout_report(levels: &[f64], coupling: f64, re: &[f64], im: &[f64], samples: usize) -> Result<ReadoutReport, String> {
    if re.len() != levels.len() {
        return Err(format!("{} amplitudes for {} levels", re.len(), levels.len()));
    }
    let (grid, spectrum, _) = setup(levels, coupling, SPECTRUM_NODES)?;
    let setup = MeasurementSetup::new(normalized(re, im)?).map_err(|e| e.to_string())?;
    let outcomes = readout(&setup, &spectrum, Arc::clone(&grid)).map_err(|e| e.to_string())?;
    let slowest = spectrum.gamma().iter().copied().filter(|&g| g > 0.0).fold(f64::INFINITY, f64::min);
    let t_max = if slowest.is_finite() { 5.0 / slowest } else { 1.0 };
    let t = linspace(0.0, t_max, samples.max(2));
    let n = levels.len();
    let mut pops = Vec::new();
    let mut pointers = Vec::new();
    for &ts in &t {
        let w = pointer_weights(&setup, &spectrum, Arc::clone(&grid), ts).map_err(|e| e.to_string())?;
        pops.push(w.discrete);
        pointers.push(w.atoms);
    }
    Ok(ReadoutReport {
        energies: outcomes.iter().map(|o| o.energy).collect(),
        probabilities: outcomes.iter().map(|o| o.probability).collect(),
        t,
        populations: transpose(pops, n),
        pointers: transpose(pointers, n),
    })
}

/// Exact continuum occupation after a single level has decayed for time `t`.
pub fn distribution_report(level: f64, coupling: f64, m: usize, t: f64) -> Result<DistributionReport, String> {
    if m > MAX_ORACLE_NODES {
        return Err(format!("at most {MAX_ORACLE_NODES} nodes in the browser"));
    }
    let (grid, spectrum, model) = setup(&[level], coupling, m)?;
    let oracle = discretize(&model, &grid).map_err(|e| e.to_string())?;
    let sample = oracle
        .energy_distribution(&[Complex64::new(1.0, 0.0)], t)
        .map_err(|e| e.to_string())?;
    let gamma = spectrum.gamma()[0];
    let dressed = spectrum.resonance_energy(0);
    let decay = Complex64::new(-0.5 * gamma * t, 0.0);
    let predicted = grid
        .nodes()
        .iter()
        .map(|&w| {
            let x = w - dressed;
            let z = (decay - Complex64::new(0.0, x * t)).exp();
            coupling * coupling * (Complex64::new(1.0, 0.0) - z).norm_sqr() / (x * x + 0.25 * gamma * gamma)
        })
        .collect();
    Ok(DistributionReport {
        nodes: grid.nodes().to_vec(),
        density: sample.value.density,
        discrete: sample.value.discrete[0],
        within_window: sample.within_window,
        recurrence_time: oracle.recurrence_time(),
        gamma,
        dressed,
        predicted,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn decay_curves(levels: &[f64], coupling: f64, t_max: f64, samples: usize) -> Result<String, JsValue> {
    to_js(decay_report(levels, coupling, t_max, samples))
}

#[wasm_bindgen]
pub fn pointer_readout(levels: &[f64], coupling: f64, re: &[f64], im: &[f64], samples: usize) -> Result<String, JsValue> {
    to_js(readout_report(levels, coupling, re, im, samples))
}

#[wasm_bindgen]
pub fn energy_distribution(level: f64, coupling: f64, m: usize, t: f64) -> Result<String, JsValue> {
    to_js(distribution_report(level, coupling, m, t))
}
