//! Turning a [`RunConfig`] into concrete jobs.
//!
//! Figure presets fix the parameters their figure states and fill in the
//! rest with defaults. Every resolved value is recorded together with
//! whether it came from the file or from a default.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use corr1d_core::ensembles::Backend;
use corr1d_core::meanfield::{cls_shift, SlabMedium};
use corr1d_core::{AtomNumber, EnsembleKind, EnsembleSpec, WaveguideParams};
use serde::Serialize;
use serde_json::Value;

use crate::config::{BackendName, ConfigError, EnsembleConfig, Experiment, Kind, RunConfig};

pub const DEFAULT_REALIZATIONS: usize = 4096;
pub const DEFAULT_ATOMS: usize = 32;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUTPUT_DIR: &str = "corr1d-output";
const WAVELENGTH: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub value: Value,
    pub defaulted: bool,
}

/// Derived quantities of one spectrum curve, echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveInfo {
    pub curve: String,
    pub kind: &'static str,
    pub gamma_w_over_gamma_t: f64,
    /// Fixed atom number, or the Poisson mean.
    pub n_atoms: f64,
    pub poisson: bool,
    pub box_length: f64,
    pub rho_over_k: f64,
    pub kl: f64,
    pub doppler_width: f64,
    pub base_detuning: f64,
    pub n_realizations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPoint {
    pub series: String,
    pub x: f64,
    pub cls_prediction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumJob {
    pub params: WaveguideParams,
    pub spec: EnsembleSpec,
    pub deltas: Vec<f64>,
    pub backend: Backend,
    pub info: CurveInfo,
    pub shift: Option<ShiftPoint>,
}

/// Deterministic two-atom calculations.
#[derive(Debug, Clone, PartialEq)]
pub enum Analytic {
    /// Relative deviation versus Doppler width at zero separation phase.
    Doppler {
        params: WaveguideParams,
        delta: f64,
        widths: Vec<f64>,
    },
    /// Relative deviation versus density for exponential separations.
    Density {
        params: WaveguideParams,
        delta: f64,
        rhos: Vec<f64>,
    },
    /// Pair amplitude across a detuning grid.
    TwoAtom {
        params: WaveguideParams,
        rho: f64,
        doppler_width: f64,
        deltas: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub spectra: Vec<SpectrumJob>,
    /// Column name of the swept parameter in `shifts.csv`, if any.
    pub shift_axis: Option<&'static str>,
    pub analytic: Option<Analytic>,
    pub resolved: BTreeMap<String, Resolved>,
}

struct Resolver {
    resolved: BTreeMap<String, Resolved>,
}

impl Resolver {
    fn take<T: Serialize + Clone>(&mut self, key: &str, given: Option<T>, default: T) -> T {
        let defaulted = given.is_none();
        let value = given.unwrap_or(default);
        self.record(key, &value, defaulted);
        value
    }

    fn record<T: Serialize>(&mut self, key: &str, value: &T, defaulted: bool) {
        self.resolved.insert(
            key.to_owned(),
            Resolved {
                value: serde_json::to_value(value).expect("plain data serializes"),
                defaulted,
            },
        );
    }
}

/// Dotted names of every key present in the config.
fn present_keys(cfg: &RunConfig) -> Vec<String> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<String>) {
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, child, out);
                }
            }
            Value::Null => {}
            _ => out.push(prefix.to_owned()),
        }
    }
    let mut out = Vec::new();
    walk("", &serde_json::to_value(cfg).expect("config serializes"), &mut out);
    out
}

const COMMON_KEYS: &[&str] = &["experiment", "seed", "output_dir"];
const ENSEMBLE_KEYS: &[&str] = &[
    "ensemble.kind",
    "ensemble.n_atoms",
    "ensemble.nbar",
    "ensemble.box_length",
    "ensemble.box_length_over_lambda",
    "ensemble.rho_over_k",
    "ensemble.positions",
    "ensemble.doppler_width",
    "ensemble.base_detuning",
    "ensemble.n_realizations",
    "ensemble.backend",
];
const DELTA_GRID_KEYS: &[&str] = &["grid.delta_min", "grid.delta_max", "grid.delta_count"];

fn allowed_keys(e: Experiment) -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = COMMON_KEYS.to_vec();
    let run_keys = ["ensemble.n_realizations", "ensemble.backend"];
    match e {
        Experiment::Fig1 => {
            keys.extend(run_keys);
            keys.extend(DELTA_GRID_KEYS);
            keys.extend(["physics.gamma_w_over_gamma_t", "ensemble.n_atoms", "sweep.rho_over_k", "sweep.kinds"]);
        }
        Experiment::Fig2 | Experiment::Fig3b => {
            keys.extend(run_keys);
            keys.extend(DELTA_GRID_KEYS);
            keys.extend([
                "ensemble.n_atoms",
                "ensemble.box_length_over_lambda",
                "sweep.gamma_w_over_gamma_t",
                "sweep.kinds",
            ]);
        }
        Experiment::Fig3a => {
            keys.extend(run_keys);
            keys.extend(DELTA_GRID_KEYS);
            keys.extend([
                "ensemble.kind",
                "ensemble.rho_over_k",
                "grid.kl_min",
                "grid.kl_max",
                "grid.kl_count",
                "sweep.gamma_w_over_gamma_t",
            ]);
        }
        Experiment::FigA1a => keys.extend(["physics.gamma_w_over_gamma_t", "ensemble.base_detuning", "sweep.doppler_width"]),
        Experiment::FigA1b => keys.extend(["physics.gamma_w_over_gamma_t", "ensemble.base_detuning", "sweep.rho_over_k"]),
        Experiment::TwoAtom => {
            keys.extend(DELTA_GRID_KEYS);
            keys.extend(["physics.gamma_w_over_gamma_t", "ensemble.rho_over_k", "ensemble.doppler_width"]);
        }
        Experiment::Spectrum => {
            keys.extend(ENSEMBLE_KEYS);
            keys.extend(DELTA_GRID_KEYS);
            keys.push("physics.gamma_w_over_gamma_t");
        }
        Experiment::CustomSweep => {
            keys.extend(ENSEMBLE_KEYS);
            keys.extend(DELTA_GRID_KEYS);
            keys.extend([
                "physics.gamma_w_over_gamma_t",
                "sweep.gamma_w_over_gamma_t",
                "sweep.rho_over_k",
                "sweep.n_atoms",
                "sweep.doppler_width",
                "sweep.kinds",
            ]);
        }
    }
    keys
}

fn check_keys(cfg: &RunConfig) -> Result<(), ConfigError> {
    let allowed = allowed_keys(cfg.experiment);
    for key in present_keys(cfg) {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::invalid(
                key,
                format!("not used by experiment `{}`", cfg.experiment.name()),
            ));
        }
    }
    Ok(())
}

pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    (0..count)
        .map(|i| if i + 1 == count { max } else { min + (max - min) * i as f64 / (count - 1) as f64 })
        .collect()
}

pub fn geomspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    linspace(min.ln(), max.ln(), count).into_iter().map(f64::exp).collect()
}

fn params(key: &str, ratio: f64) -> Result<WaveguideParams, ConfigError> {
    if ratio == 1.0 {
        return Ok(WaveguideParams::lossless());
    }
    WaveguideParams::normalized(ratio).map_err(|e| ConfigError::invalid(key, e.to_string()))
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::invalid(key, "must be finite and positive"))
    }
}

fn non_empty<T>(key: &str, v: Vec<T>) -> Result<Vec<T>, ConfigError> {
    if v.is_empty() {
        Err(ConfigError::invalid(key, "list must not be empty"))
    } else {
        Ok(v)
    }
}

fn delta_grid(cfg: &RunConfig, r: &mut Resolver, default: (f64, f64, usize)) -> Result<Vec<f64>, ConfigError> {
    let min = r.take("grid.delta_min", cfg.grid.delta_min, default.0);
    let max = r.take("grid.delta_max", cfg.grid.delta_max, default.1);
    let count = r.take("grid.delta_count", cfg.grid.delta_count, default.2);
    grid("grid.delta", min, max, count)
}

fn grid(key: &str, min: f64, max: f64, count: usize) -> Result<Vec<f64>, ConfigError> {
    if !(min.is_finite() && max.is_finite()) {
        return Err(ConfigError::invalid(format!("{key}_min"), "grid bounds must be finite"));
    }
    match count {
        0 => Err(ConfigError::invalid(format!("{key}_count"), "must be at least 1")),
        1 if min != max => Err(ConfigError::invalid(format!("{key}_count"), "a single point needs min = max")),
        1 => Ok(vec![min]),
        _ if min >= max => Err(ConfigError::invalid(format!("{key}_max"), "must exceed the minimum")),
        _ => Ok(linspace(min, max, count)),
    }
}

fn backend(cfg: &RunConfig, r: &mut Resolver) -> Backend {
    match r.take("ensemble.backend", cfg.ensemble.backend, BackendName::Auto) {
        BackendName::Auto => Backend::Auto,
        BackendName::Dipole => Backend::Dipole,
        BackendName::Transfer => Backend::Transfer,
    }
}

fn kind_name(kind: &EnsembleKind) -> &'static str {
    match kind {
        EnsembleKind::ClassicalUniform => "classical",
        EnsembleKind::Fermionic => "fermionic",
        EnsembleKind::Custom(_) => "custom",
    }
}

fn kind_label(kind: Kind) -> &'static str {
    match kind {
        Kind::Classical => "classical",
        Kind::Fermionic => "fermionic",
        Kind::Custom => "custom",
    }
}

/// Common assembly of a spectrum job from a fully resolved ensemble.
fn spectrum_job(
    curve: String,
    params: WaveguideParams,
    spec: EnsembleSpec,
    deltas: &[f64],
    backend: Backend,
) -> Result<SpectrumJob, ConfigError> {
    spec.validate().map_err(|e| ConfigError::invalid("ensemble", e.to_string()))?;
    let (n_atoms, poisson) = match spec.atoms {
        AtomNumber::Fixed(n) => (n as f64, false),
        AtomNumber::Poisson { mean } => (mean, true),
    };
    let info = CurveInfo {
        curve,
        kind: kind_name(&spec.kind),
        gamma_w_over_gamma_t: params.gamma_w() / params.gamma_t(),
        n_atoms,
        poisson,
        box_length: spec.box_length,
        rho_over_k: spec.density() / params.k(),
        kl: params.k() * spec.box_length,
        doppler_width: spec.doppler_width,
        base_detuning: spec.base_detuning,
        n_realizations: spec.n_realizations,
    };
    Ok(SpectrumJob {
        params,
        spec,
        deltas: deltas.to_vec(),
        backend,
        info,
        shift: None,
    })
}

fn fixed_ensemble(kind: Kind, n: usize, length: f64) -> EnsembleSpec {
    match kind {
        Kind::Fermionic => EnsembleSpec::fermionic(n, length),
        _ => EnsembleSpec::classical(n, length),
    }
}

/// Ensemble from the `[ensemble]` table. Any two of atom number, length and
/// density determine the third.
fn resolve_ensemble(e: &EnsembleConfig, r: &mut Resolver, seed: u64) -> Result<EnsembleSpec, ConfigError> {
    let kind = r.take("ensemble.kind", e.kind, Kind::Classical);
    let doppler = r.take("ensemble.doppler_width", e.doppler_width, 0.0);
    let base = r.take("ensemble.base_detuning", e.base_detuning, 0.0);
    let n_realizations = r.take("ensemble.n_realizations", e.n_realizations, DEFAULT_REALIZATIONS);

    let spec = if kind == Kind::Custom {
        for (key, present) in [
            ("ensemble.n_atoms", e.n_atoms.is_some()),
            ("ensemble.nbar", e.nbar.is_some()),
            ("ensemble.box_length", e.box_length.is_some()),
            ("ensemble.box_length_over_lambda", e.box_length_over_lambda.is_some()),
            ("ensemble.rho_over_k", e.rho_over_k.is_some()),
        ] {
            if present {
                return Err(ConfigError::invalid(key, "custom positions fix the atom number and extent"));
            }
        }
        let positions = e
            .positions
            .clone()
            .ok_or_else(|| ConfigError::invalid("ensemble.positions", "required for kind = \"custom\""))?;
        r.record("ensemble.positions", &positions, false);
        EnsembleSpec::custom(positions)
    } else {
        if e.positions.is_some() {
            return Err(ConfigError::invalid("ensemble.positions", "only valid with kind = \"custom\""));
        }
        if e.n_atoms.is_some() && e.nbar.is_some() {
            return Err(ConfigError::invalid("ensemble.nbar", "conflicts with ensemble.n_atoms"));
        }
        if kind == Kind::Fermionic && e.nbar.is_some() {
            return Err(ConfigError::invalid("ensemble.nbar", "a fermionic ensemble needs a fixed atom number"));
        }
        let length = match (e.box_length, e.box_length_over_lambda) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::invalid(
                    "ensemble.box_length_over_lambda",
                    "conflicts with ensemble.box_length",
                ))
            }
            (Some(l), None) => Some(positive("ensemble.box_length", l)?),
            (None, Some(l)) => Some(positive("ensemble.box_length_over_lambda", l)? * WAVELENGTH),
            (None, None) => None,
        };
        let rho = e.rho_over_k.map(|v| positive("ensemble.rho_over_k", v)).transpose()?;
        let count = match (e.n_atoms, e.nbar) {
            (Some(n), _) => Some(n as f64),
            (_, Some(m)) if m.is_finite() && m >= 0.0 => Some(m),
            (_, Some(_)) => return Err(ConfigError::invalid("ensemble.nbar", "must be finite and non-negative")),
            _ => None,
        };
        let count_defaulted = count.is_none() && !(length.is_some() && rho.is_some());
        let length_defaulted = length.is_none() && rho.is_none();
        let (count, length) = match (count, length, rho) {
            (Some(_), Some(_), Some(_)) => {
                return Err(ConfigError::invalid(
                    "ensemble.rho_over_k",
                    "atom number, length and density over-determine the ensemble",
                ))
            }
            (Some(n), Some(l), None) => (n, l),
            (Some(n), None, Some(rho)) => (n, n / rho),
            (None, Some(l), Some(rho)) if e.nbar.is_some() => (rho * l, l),
            (None, Some(l), Some(rho)) => ((rho * l).round(), l),
            (None, Some(_), None) => {
                return Err(ConfigError::invalid(
                    "ensemble.n_atoms",
                    "a box length needs an atom number or a density",
                ))
            }
            (None, None, Some(rho)) => (DEFAULT_ATOMS as f64, DEFAULT_ATOMS as f64 / rho),
            (Some(n), None, None) => (n, 2.0 * WAVELENGTH),
            (None, None, None) => (DEFAULT_ATOMS as f64, 2.0 * WAVELENGTH),
        };
        if !(length.is_finite() && length > 0.0) {
            return Err(ConfigError::invalid("ensemble.box_length", "must be finite and positive"));
        }
        r.record("ensemble.box_length", &length, length_defaulted);
        if e.nbar.is_some() {
            r.record("ensemble.nbar", &count, false);
            fixed_ensemble(kind, 0, length).with_poisson_atoms(count)
        } else {
            r.record("ensemble.n_atoms", &(count as usize), count_defaulted);
            fixed_ensemble(kind, count as usize, length)
        }
    };
    Ok(spec
        .with_doppler_width(doppler)
        .with_base_detuning(base)
        .with_realizations(n_realizations)
        .with_seed(seed))
}

fn number_label(v: f64) -> String {
    format!("{v}")
}

pub fn plan(cfg: &RunConfig) -> Result<Plan, ConfigError> {
    check_keys(cfg)?;
    let mut r = Resolver {
        resolved: BTreeMap::new(),
    };
    r.record("experiment", &cfg.experiment.name(), false);
    let seed = r.take("seed", cfg.seed, DEFAULT_SEED);
    let output_dir = r.take("output_dir", cfg.output_dir.clone(), PathBuf::from(DEFAULT_OUTPUT_DIR));
    let mut spectra = Vec::new();
    let mut shift_axis = None;
    let mut analytic = None;
    let s = &cfg.sweep;

    match cfg.experiment {
        Experiment::Fig1 => {
            let ratio = r.take("physics.gamma_w_over_gamma_t", cfg.physics.gamma_w_over_gamma_t, 1.0);
            let p = params("physics.gamma_w_over_gamma_t", ratio)?;
            let n = r.take("ensemble.n_atoms", cfg.ensemble.n_atoms, DEFAULT_ATOMS);
            let rhos = non_empty("sweep.rho_over_k", r.take("sweep.rho_over_k", s.rho_over_k.clone(), vec![2.0, 8.0]))?;
            let kinds = panel_kinds(s.kinds.clone(), &mut r)?;
            let n_real = r.take("ensemble.n_realizations", cfg.ensemble.n_realizations, DEFAULT_REALIZATIONS);
            let backend = backend(cfg, &mut r);
            let deltas = delta_grid(cfg, &mut r, (-10.0, 30.0, 401))?;
            for &kind in &kinds {
                for &rho in &rhos {
                    let rho = positive("sweep.rho_over_k", rho)?;
                    let spec = fixed_ensemble(kind, n, n as f64 / rho).with_realizations(n_real).with_seed(seed);
                    let curve = format!("{}_rho{}", kind_label(kind), number_label(rho));
                    spectra.push(spectrum_job(curve, p, spec, &deltas, backend)?);
                }
            }
        }
        Experiment::Fig2 | Experiment::Fig3b => {
            let n = r.take("ensemble.n_atoms", cfg.ensemble.n_atoms, DEFAULT_ATOMS);
            let length = positive(
                "ensemble.box_length_over_lambda",
                r.take("ensemble.box_length_over_lambda", cfg.ensemble.box_length_over_lambda, 2.0),
            )? * WAVELENGTH;
            let ladder = non_empty(
                "sweep.gamma_w_over_gamma_t",
                r.take("sweep.gamma_w_over_gamma_t", s.gamma_w_over_gamma_t.clone(), vec![0.4, 0.2, 0.1, 0.05, 0.025]),
            )?;
            let kinds = panel_kinds(s.kinds.clone(), &mut r)?;
            let n_real = r.take("ensemble.n_realizations", cfg.ensemble.n_realizations, DEFAULT_REALIZATIONS);
            let backend = backend(cfg, &mut r);
            let deltas = delta_grid(cfg, &mut r, (-5.0, 5.0, 201))?;
            if cfg.experiment == Experiment::Fig3b {
                shift_axis = Some("gamma_w_over_gamma_t");
            }
            for &kind in &kinds {
                for &ratio in &ladder {
                    let p = params("sweep.gamma_w_over_gamma_t", ratio)?;
                    let spec = fixed_ensemble(kind, n, length).with_realizations(n_real).with_seed(seed);
                    let curve = format!("{}_gw{}", kind_label(kind), number_label(ratio));
                    let mut job = spectrum_job(curve, p, spec, &deltas, backend)?;
                    if shift_axis.is_some() {
                        job.shift = Some(ShiftPoint {
                            series: kind_label(kind).to_owned(),
                            x: ratio,
                            cls_prediction: cls_prediction(p, n as f64 / length, length)?,
                        });
                    }
                    spectra.push(job);
                }
            }
        }
        Experiment::Fig3a => {
            let kind = r.take("ensemble.kind", cfg.ensemble.kind, Kind::Classical);
            if kind == Kind::Custom {
                return Err(ConfigError::invalid("ensemble.kind", "fig3a needs a sampled ensemble"));
            }
            let rho = positive("ensemble.rho_over_k", r.take("ensemble.rho_over_k", cfg.ensemble.rho_over_k, 32.0 / PI))?;
            let ladder = non_empty(
                "sweep.gamma_w_over_gamma_t",
                r.take("sweep.gamma_w_over_gamma_t", s.gamma_w_over_gamma_t.clone(), vec![0.01, 0.02, 0.1]),
            )?;
            let kl_min = r.take("grid.kl_min", cfg.grid.kl_min, 1.0);
            let kl_max = r.take("grid.kl_max", cfg.grid.kl_max, 4.0 * PI);
            let kl_count = r.take("grid.kl_count", cfg.grid.kl_count, 24);
            let kls = grid("grid.kl", kl_min, kl_max, kl_count)?;
            let n_real = r.take("ensemble.n_realizations", cfg.ensemble.n_realizations, DEFAULT_REALIZATIONS);
            let backend = backend(cfg, &mut r);
            let deltas = delta_grid(cfg, &mut r, (-3.0, 3.0, 241))?;
            shift_axis = Some("kL");
            // The atom number is rounded and the length adjusted, so the
            // density stays exactly as requested.
            let mut counts: Vec<usize> = kls.iter().map(|kl| ((rho * kl).round() as usize).max(1)).collect();
            counts.dedup();
            for &ratio in &ladder {
                let p = params("sweep.gamma_w_over_gamma_t", ratio)?;
                for &n in &counts {
                    let length = n as f64 / rho;
                    let spec = fixed_ensemble(kind, n, length).with_realizations(n_real).with_seed(seed);
                    let curve = format!("gw{}_N{n}", number_label(ratio));
                    let mut job = spectrum_job(curve, p, spec, &deltas, backend)?;
                    job.shift = Some(ShiftPoint {
                        series: format!("gw{}", number_label(ratio)),
                        x: p.k() * length,
                        cls_prediction: cls_prediction(p, rho, length)?,
                    });
                    spectra.push(job);
                }
            }
        }
        Experiment::FigA1a => {
            let ratio = r.take("physics.gamma_w_over_gamma_t", cfg.physics.gamma_w_over_gamma_t, 1.0);
            let delta = r.take("ensemble.base_detuning", cfg.ensemble.base_detuning, 0.0);
            let widths = non_empty(
                "sweep.doppler_width",
                r.take("sweep.doppler_width", s.doppler_width.clone(), geomspace(0.1, 100.0, 31)),
            )?;
            for &w in &widths {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(ConfigError::invalid("sweep.doppler_width", "must be finite and non-negative"));
                }
            }
            analytic = Some(Analytic::Doppler {
                params: params("physics.gamma_w_over_gamma_t", ratio)?,
                delta: finite("ensemble.base_detuning", delta)?,
                widths,
            });
        }
        Experiment::FigA1b => {
            let ratio = r.take("physics.gamma_w_over_gamma_t", cfg.physics.gamma_w_over_gamma_t, 1.0);
            let delta = r.take("ensemble.base_detuning", cfg.ensemble.base_detuning, 0.1);
            let rhos = non_empty(
                "sweep.rho_over_k",
                r.take("sweep.rho_over_k", s.rho_over_k.clone(), geomspace(0.01, 10.0, 31)),
            )?;
            for &rho in &rhos {
                positive("sweep.rho_over_k", rho)?;
            }
            analytic = Some(Analytic::Density {
                params: params("physics.gamma_w_over_gamma_t", ratio)?,
                delta: finite("ensemble.base_detuning", delta)?,
                rhos,
            });
        }
        Experiment::TwoAtom => {
            let ratio = r.take("physics.gamma_w_over_gamma_t", cfg.physics.gamma_w_over_gamma_t, 1.0);
            let rho = positive("ensemble.rho_over_k", r.take("ensemble.rho_over_k", cfg.ensemble.rho_over_k, 1.0))?;
            let width = r.take("ensemble.doppler_width", cfg.ensemble.doppler_width, 0.0);
            if !(width.is_finite() && width >= 0.0) {
                return Err(ConfigError::invalid("ensemble.doppler_width", "must be finite and non-negative"));
            }
            let deltas = delta_grid(cfg, &mut r, (-5.0, 5.0, 201))?;
            analytic = Some(Analytic::TwoAtom {
                params: params("physics.gamma_w_over_gamma_t", ratio)?,
                rho,
                doppler_width: width,
                deltas,
            });
        }
        Experiment::Spectrum => {
            let ratio = r.take("physics.gamma_w_over_gamma_t", cfg.physics.gamma_w_over_gamma_t, 1.0);
            let p = params("physics.gamma_w_over_gamma_t", ratio)?;
            let spec = resolve_ensemble(&cfg.ensemble, &mut r, seed)?;
            let backend = backend(cfg, &mut r);
            let deltas = delta_grid(cfg, &mut r, (-5.0, 5.0, 201))?;
            spectra.push(spectrum_job("spectrum".to_owned(), p, spec, &deltas, backend)?);
        }
        Experiment::CustomSweep => {
            let ratio = r.take("physics.gamma_w_over_gamma_t", cfg.physics.gamma_w_over_gamma_t, 1.0);
            let backend = backend(cfg, &mut r);
            let deltas = delta_grid(cfg, &mut r, (-5.0, 5.0, 201))?;
            spectra = custom_sweep(cfg, &mut r, seed, ratio, backend, &deltas)?;
        }
    }

    Ok(Plan {
        experiment: cfg.experiment,
        seed,
        output_dir,
        spectra,
        shift_axis,
        analytic,
        resolved: r.resolved,
    })
}

fn finite(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::invalid(key, "must be finite"))
    }
}

fn cls_prediction(p: WaveguideParams, rho: f64, length: f64) -> Result<f64, ConfigError> {
    let slab = SlabMedium::new(p, rho, length).map_err(|e| ConfigError::invalid("ensemble", e.to_string()))?;
    Ok(cls_shift(&slab))
}

fn panel_kinds(given: Option<Vec<Kind>>, r: &mut Resolver) -> Result<Vec<Kind>, ConfigError> {
    let kinds = non_empty("sweep.kinds", r.take("sweep.kinds", given, vec![Kind::Classical, Kind::Fermionic]))?;
    if kinds.contains(&Kind::Custom) {
        return Err(ConfigError::invalid("sweep.kinds", "figure panels use sampled ensembles only"));
    }
    Ok(kinds)
}

fn custom_sweep(
    cfg: &RunConfig,
    r: &mut Resolver,
    seed: u64,
    base_ratio: f64,
    backend: Backend,
    deltas: &[f64],
) -> Result<Vec<SpectrumJob>, ConfigError> {
    let s = &cfg.sweep;
    if s.gamma_w_over_gamma_t.is_none()
        && s.rho_over_k.is_none()
        && s.n_atoms.is_none()
        && s.doppler_width.is_none()
        && s.kinds.is_none()
    {
        return Err(ConfigError::invalid("sweep", "custom-sweep needs at least one sweep list"));
    }
    let one = |v: Option<Vec<f64>>| v.map(|v| v.into_iter().map(Some).collect()).unwrap_or_else(|| vec![None]);
    let ratios: Vec<Option<f64>> = one(s.gamma_w_over_gamma_t.clone());
    let rhos: Vec<Option<f64>> = one(s.rho_over_k.clone());
    let widths: Vec<Option<f64>> = one(s.doppler_width.clone());
    let counts: Vec<Option<usize>> = s
        .n_atoms
        .clone()
        .map(|v| v.into_iter().map(Some).collect())
        .unwrap_or_else(|| vec![None]);
    let kinds: Vec<Option<Kind>> = s
        .kinds
        .clone()
        .map(|v| v.into_iter().map(Some).collect())
        .unwrap_or_else(|| vec![None]);
    for (key, len) in [
        ("sweep.gamma_w_over_gamma_t", ratios.len()),
        ("sweep.rho_over_k", rhos.len()),
        ("sweep.doppler_width", widths.len()),
        ("sweep.n_atoms", counts.len()),
        ("sweep.kinds", kinds.len()),
    ] {
        if len == 0 {
            return Err(ConfigError::invalid(key, "list must not be empty"));
        }
    }
    r.record("sweep", &s, false);

    let mut jobs = Vec::new();
    for &kind in &kinds {
        for &ratio in &ratios {
            for &rho in &rhos {
                for &n in &counts {
                    for &width in &widths {
                        let mut e = cfg.ensemble.clone();
                        let mut label = Vec::new();
                        if let Some(k) = kind {
                            e.kind = Some(k);
                            label.push(kind_label(k).to_owned());
                        }
                        if let Some(g) = ratio {
                            label.push(format!("gw{}", number_label(g)));
                        }
                        if let Some(v) = rho {
                            e.rho_over_k = Some(v);
                            label.push(format!("rho{}", number_label(v)));
                        }
                        if let Some(v) = n {
                            e.n_atoms = Some(v);
                            label.push(format!("N{v}"));
                        }
                        if let Some(v) = width {
                            e.doppler_width = Some(v);
                            label.push(format!("dw{}", number_label(v)));
                        }
                        let mut scratch = Resolver {
                            resolved: BTreeMap::new(),
                        };
                        let spec = resolve_ensemble(&e, &mut scratch, seed)?;
                        if jobs.is_empty() {
                            // Keys that vary per curve are reported in the
                            // curve table instead.
                            let varying: &[&str] = if rho.is_some() || n.is_some() {
                                &["ensemble.n_atoms", "ensemble.nbar", "ensemble.box_length"]
                            } else {
                                &[]
                            };
                            for (k, v) in scratch.resolved {
                                let swept = varying.contains(&k.as_str())
                                    || (width.is_some() && k == "ensemble.doppler_width")
                                    || (kind.is_some() && k == "ensemble.kind");
                                if !swept {
                                    r.resolved.insert(k, v);
                                }
                            }
                        }
                        let key = if ratio.is_some() { "sweep.gamma_w_over_gamma_t" } else { "physics.gamma_w_over_gamma_t" };
                        let p = params(key, ratio.unwrap_or(base_ratio))?;
                        jobs.push(spectrum_job(label.join("_"), p, spec, deltas, backend)?);
                    }
                }
            }
        }
    }
    Ok(jobs)
}
