//! The four subcommands. Each writes its CSV files and returns their paths.

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::sync::Arc;

use pointer_basis::evolution::{decompose_initial, diagonal_evolution, evolve as evolve_state, GeneralizedState};
use pointer_basis::fit::{linspace, logspace};
use pointer_basis::measurement::{pointer_weights, premeasure, readout as pointer_readout, MeasurementSetup};
use pointer_basis::oracle::discretize;
use pointer_basis::{build_grid, Complex64, ContinuumGrid, Error, LiouvilleSpectrum, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CompareConfig, InitialState, ResolvedConfig, Spacing};
use crate::output::{Header, Table};
use crate::CliError;

/// Default `t_end` when no level decays, as a fraction of the recurrence time.
const UNDAMPED_HORIZON: f64 = 0.4;
const NORM_TOLERANCE: f64 = 1e-10;

struct Run {
    model: Model,
    grid: Arc<ContinuumGrid>,
    spectrum: LiouvilleSpectrum,
    recurrence_time: f64,
}

fn setup(cfg: &ResolvedConfig) -> Result<Run, CliError> {
    let model = cfg
        .model
        .clone()
        .validate()
        .map_err(|e| CliError::ModelInvalid(e.to_string()))?;
    let mut grid = build_grid(model.omega_max(), cfg.grid.m, cfg.grid.scheme)
        .map_err(|e| CliError::ConfigParse(format!("grid: {e}")))?;
    grid.avoid_levels(model.levels());
    let spectrum = LiouvilleSpectrum::compute(&model, &grid).map_err(Error::from)?;
    let max_w = grid.weights().iter().copied().fold(0.0, f64::max);
    Ok(Run {
        model,
        grid: Arc::new(grid),
        spectrum,
        recurrence_time: TAU / max_w,
    })
}

impl Run {
    fn times(&self, cfg: &ResolvedConfig) -> Result<Vec<f64>, CliError> {
        let tc = &cfg.times;
        let t_end = match tc.t_end {
            Some(t) => t,
            None => {
                let slowest = self.spectrum.gamma().iter().copied().filter(|&g| g > 0.0).fold(f64::INFINITY, f64::min);
                if slowest.is_finite() {
                    5.0 / slowest
                } else {
                    UNDAMPED_HORIZON * self.recurrence_time
                }
            }
        };
        if !(t_end > tc.t_start) {
            return Err(CliError::ConfigParse(format!(
                "default t_end {t_end} does not exceed t_start {}",
                tc.t_start
            )));
        }
        Ok(match tc.spacing {
            Spacing::Linear => linspace(tc.t_start, t_end, tc.samples),
            Spacing::Log if tc.t_start > 0.0 => logspace(tc.t_start, t_end, tc.samples),
            Spacing::Log => {
                let mut t = vec![0.0];
                t.extend(logspace(t_end * 1e-3, t_end, tc.samples - 1));
                t
            }
        })
    }

    fn header(&self, cfg: &ResolvedConfig, times: &[f64]) -> Header {
        let within = times.iter().filter(|&&t| t < 0.5 * self.recurrence_time).count();
        Header {
            config_sha256: cfg.hash(),
            grid_m: self.grid.len(),
            scheme: self.grid.scheme().to_string(),
            coupling_scale: self.model.coupling_scale(),
            recurrence_time: self.recurrence_time,
            within_window: (within, times.len()),
        }
    }

    fn n(&self) -> usize {
        self.model.n_levels()
    }

    /// Pure amplitudes when the initial state has them, and the density matrix.
    fn initial(&self, cfg: &ResolvedConfig) -> Result<(Option<Vec<Complex64>>, GeneralizedState), CliError> {
        let n = self.n();
        let count = |len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(CliError::ConfigParse(format!("initial state has {len} entries for {n} levels")))
            }
        };
        let amplitudes = match &cfg.initial {
            InitialState::Level { level } => {
                if *level >= n {
                    return Err(CliError::ConfigParse(format!("initial level {level} out of range for {n} levels")));
                }
                (0..n).map(|i| Complex64::new(if i == *level { 1.0 } else { 0.0 }, 0.0)).collect()
            }
            InitialState::Populations { values } => {
                count(values.len())?;
                let state = GeneralizedState::from_populations(values, Arc::clone(&self.grid));
                state.validate().map_err(|e| CliError::ConfigParse(format!("initial populations: {e}")))?;
                return Ok((None, state));
            }
            InitialState::Amplitudes { values } => {
                count(values.len())?;
                to_complex(values)
            }
            InitialState::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let raw: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                raw.into_iter().map(|z| z / norm).collect()
            }
        };
        let amplitudes = normalized(amplitudes, "initial amplitudes")?;
        let setup = MeasurementSetup::new(amplitudes.clone()).map_err(Error::from)?;
        Ok((Some(amplitudes), premeasure(&setup, Arc::clone(&self.grid))))
    }
}

fn to_complex(values: &[[f64; 2]]) -> Vec<Complex64> {
    values.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

/// Rejects vectors off the unit sphere by more than input rounding, then
/// renormalizes so the library's tighter check sees an exact unit vector.
fn normalized(a: Vec<Complex64>, what: &str) -> Result<Vec<Complex64>, CliError> {
    let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(CliError::ConfigParse(format!("{what} have Σ|a|² = {norm}, expected 1")));
    }
    let scale = norm.sqrt();
    Ok(a.into_iter().map(|z| z / scale).collect())
}

fn s(v: impl ToString) -> String {
    v.to_string()
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|c| c.to_string()).collect()
}

pub fn spectrum(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let run = setup(cfg)?;
    let header = run.header(cfg, &[]);
    let sp = &run.spectrum;
    let mut table = Table::create(
        &cfg.output_dir,
        "spectrum.csv",
        &header,
        &columns(&["i", "j", "re_lambda", "im_lambda", "gamma_i", "delta_i"]),
    )?;
    for i in 0..run.n() {
        for j in 0..run.n() {
            let l = sp.lambda_d(i, j);
            table.row(&[s(i), s(j), s(l.re), s(l.im), s(sp.gamma()[i]), s(sp.shift()[i])])?;
        }
    }
    Ok(vec![table.finish()?])
}

pub fn evolve(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let run = setup(cfg)?;
    let times = run.times(cfg)?;
    let (_, state) = run.initial(cfg)?;
    let d = decompose_initial(&state, &run.spectrum).map_err(Error::from)?;
    let n = run.n();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut cols = vec![s("t")];
    cols.extend((0..n).map(|i| format!("rho_{i}{i}")));
    cols.extend((0..n).map(|i| format!("atom_{i}")));
    cols.extend(pairs.iter().map(|(i, j)| format!("abs_rho_{i}{j}")));
    let mut table = Table::create(&cfg.output_dir, "evolve.csv", &run.header(cfg, &times), &cols)?;
    for &t in &times {
        let w = diagonal_evolution(&d, &run.spectrum, t);
        let e = evolve_state(&d, &run.spectrum, t).map_err(Error::from)?;
        let mut row = vec![s(t)];
        row.extend(w.discrete.iter().map(s));
        row.extend(w.atoms.iter().map(s));
        row.extend(pairs.iter().map(|&(i, j)| s(e.coherence(i, j).norm())));
        table.row(&row)?;
    }
    Ok(vec![table.finish()?])
}

pub fn compare(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let run = setup(cfg)?;
    let times = run.times(cfg)?;
    let oracle = discretize(&run.model, &run.grid).map_err(Error::from)?;
    let n = run.n();
    let in_range = |i: usize| {
        if i < n {
            Ok(())
        } else {
            Err(CliError::ConfigParse(format!("compare level {i} out of range for {n} levels")))
        }
    };
    let mut table = Table::create(
        &cfg.output_dir,
        "compare.csv",
        &run.header(cfg, &times),
        &columns(&["t", "oracle", "perturbative", "rel_error", "valid"]),
    )?;
    let mut rows = Vec::with_capacity(times.len());
    match cfg.compare {
        CompareConfig::Survival { level } => {
            in_range(level)?;
            let gamma = run.spectrum.gamma()[level];
            for &t in &times {
                let sample = oracle.survival_probability(level, t).map_err(Error::from)?;
                rows.push((t, sample.value, (-gamma * t).exp(), sample.within_window));
            }
        }
        CompareConfig::Coherence { i, j } => {
            in_range(i)?;
            in_range(j)?;
            let (amplitudes, state) = run.initial(cfg)?;
            let amplitudes = amplitudes
                .ok_or_else(|| CliError::ConfigParse("coherence comparison needs a pure initial state".into()))?;
            let d = decompose_initial(&state, &run.spectrum).map_err(Error::from)?;
            let prepared = oracle.prepare(&amplitudes).map_err(Error::from)?;
            for &t in &times {
                let e = evolve_state(&d, &run.spectrum, t).map_err(Error::from)?;
                let exact = oracle.coherence_of(&prepared, i, j, t).norm();
                rows.push((t, exact, e.coherence(i, j).norm(), oracle.within_window(t)));
            }
        }
    }
    for (t, exact, predicted, valid) in rows {
        let diff = (exact - predicted).abs();
        let rel = if predicted != 0.0 { diff / predicted.abs() } else { diff };
        table.row(&[s(t), s(exact), s(predicted), s(rel), s(valid)])?;
    }
    Ok(vec![table.finish()?])
}

pub fn measure(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let mc = cfg
        .measure
        .as_ref()
        .ok_or_else(|| CliError::ConfigParse("measure needs `measure.amplitudes` or --amplitudes".into()))?;
    let run = setup(cfg)?;
    if mc.amplitudes.len() != run.n() {
        return Err(CliError::ConfigParse(format!(
            "{} amplitudes for {} levels",
            mc.amplitudes.len(),
            run.n()
        )));
    }
    let amplitudes = normalized(to_complex(&mc.amplitudes), "measurement amplitudes")?;
    let mut setup = MeasurementSetup::new(amplitudes).map_err(Error::from)?;
    if let Some(labels) = &mc.labels {
        setup = setup
            .with_labels(labels.clone())
            .map_err(|e| CliError::ConfigParse(e.to_string()))?;
    }
    let outcomes = pointer_readout(&setup, &run.spectrum, Arc::clone(&run.grid)).map_err(Error::from)?;
    let times = if mc.timeline { run.times(cfg)? } else { Vec::new() };
    let header = run.header(cfg, &times);
    let mut table = Table::create(
        &cfg.output_dir,
        "measure.csv",
        &header,
        &columns(&["level", "energy", "probability", "label"]),
    )?;
    for o in &outcomes {
        let label = o.label.map(s).unwrap_or_default();
        table.row(&[s(o.level), s(o.energy), s(o.probability), label])?;
    }
    let mut files = vec![table.finish()?];
    if mc.timeline {
        let n = run.n();
        let mut cols = vec![s("t")];
        cols.extend((0..n).map(|i| format!("rho_{i}{i}")));
        cols.extend((0..n).map(|i| format!("pointer_{i}")));
        let mut timeline = Table::create(&cfg.output_dir, "measure_timeline.csv", &header, &cols)?;
        for &t in &times {
            let w = pointer_weights(&setup, &run.spectrum, Arc::clone(&run.grid), t).map_err(Error::from)?;
            let mut row = vec![s(t)];
            row.extend(w.discrete.iter().map(s));
            row.extend(w.atoms.iter().map(s));
            timeline.row(&row)?;
        }
        files.push(timeline.finish()?);
    }
    Ok(files)
}
