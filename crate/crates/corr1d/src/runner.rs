//! Executes a [`Plan`].
//!
//! Realizations run in parallel in fixed-size chunks; each chunk is
//! collected in index order before it is accumulated, so the output does not
//! depend on the thread count.

use corr1d_core::ensembles::{mft_product, realization_seed, run_realization, SpectrumAccumulator, SpectrumPoint};
use corr1d_core::meanfield::{extract_peak_shift, PeakObservable};
use corr1d_core::params::Detuning;
use corr1d_core::transfer::{relative_deviation, two_atom_average_doppler, SeparationModel};
use corr1d_core::{AtomNumber, Complex64, Error as CoreError};
use rayon::prelude::*;

use crate::presets::{Analytic, CurveInfo, Plan, SpectrumJob};

const CHUNK: u64 = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub curve: String,
    pub delta: f64,
    pub mean_t: f64,
    pub stderr_t: f64,
    /// `−⟨ln T⟩ / (2Nγ_w/γ_t)`.
    pub mean_ln_t_scaled: f64,
    pub mft_t: f64,
    pub n_used: usize,
    pub n_diverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftRow {
    pub curve: String,
    pub x: f64,
    pub shift: f64,
    pub uncertainty: f64,
    pub cls_prediction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationRow {
    pub curve: String,
    pub x: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoAtomRow {
    pub curve: String,
    pub delta: f64,
    pub t12: Complex64,
    pub mft: Complex64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSummary {
    pub info: CurveInfo,
    pub n_failed: usize,
    pub n_diverged: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub results: Vec<ResultRow>,
    pub shifts: Vec<ShiftRow>,
    pub deviation: Vec<DeviationRow>,
    /// Column name of the deviation sweep parameter.
    pub deviation_axis: Option<&'static str>,
    pub two_atom: Vec<TwoAtomRow>,
    pub curves: Vec<CurveSummary>,
    /// Full statistics per spectrum curve, in plan order.
    pub spectra: Vec<Vec<SpectrumPoint>>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("curve `{curve}`: realization {index} (seed {seed}) failed: {source}")]
    Realization {
        curve: String,
        index: u64,
        seed: u64,
        source: CoreError,
    },
    #[error("{what}: {source}")]
    Calculation { what: String, source: CoreError },
}

pub fn run_spectrum(job: &SpectrumJob) -> Result<Vec<SpectrumPoint>, RunError> {
    let mut acc = SpectrumAccumulator::new(&job.deltas);
    let total = job.spec.n_realizations as u64;
    let mut start = 0;
    while start < total {
        let end = (start + CHUNK).min(total);
        let records: Vec<_> = (start..end)
            .into_par_iter()
            .map(|index| (index, run_realization(&job.params, &job.spec, index, &job.deltas, job.backend)))
            .collect();
        for (index, record) in records {
            let record = record.map_err(|source| RunError::Realization {
                curve: job.info.curve.clone(),
                index,
                seed: realization_seed(job.spec.seed, index),
                source,
            })?;
            acc.push(&record);
        }
        start = end;
    }
    Ok(acc.finish())
}

/// Mean-field `|⟨t⁽¹⁾⟩|^{2N}`, averaged over a Poisson atom number when the
/// ensemble has one.
fn mft_transmittance(job: &SpectrumJob, delta: f64) -> Result<f64, CoreError> {
    let d = Detuning::new(delta + job.spec.base_detuning)?;
    match job.spec.atoms {
        AtomNumber::Fixed(n) => {
            let n = u32::try_from(n).map_err(|_| CoreError::InvalidParameter {
                name: "n_atoms",
                reason: "too many atoms",
            })?;
            Ok(mft_product(&job.params, d, n, job.spec.doppler_width)?.norm_sqr())
        }
        AtomNumber::Poisson { mean } => {
            let single = mft_product(&job.params, d, 1, job.spec.doppler_width)?.norm_sqr();
            Ok((-mean * (1.0 - single)).exp())
        }
    }
}

fn spectrum_rows(job: &SpectrumJob, points: &[SpectrumPoint]) -> Result<Vec<ResultRow>, RunError> {
    let mft: Vec<f64> = job
        .deltas
        .par_iter()
        .map(|&delta| mft_transmittance(job, delta))
        .collect::<Result<_, _>>()
        .map_err(|source| RunError::Calculation {
            what: format!("mean-field transmission of `{}`", job.info.curve),
            source,
        })?;
    let scale = 2.0 * job.info.n_atoms * job.info.gamma_w_over_gamma_t;
    Ok(points
        .iter()
        .zip(mft)
        .map(|(p, mft_t)| ResultRow {
            curve: job.info.curve.clone(),
            delta: p.delta.value(),
            mean_t: p.mean_transmittance,
            stderr_t: p.stderr_transmittance,
            mean_ln_t_scaled: if scale > 0.0 { p.optical_thickness() / scale } else { f64::NAN },
            mft_t,
            n_used: p.n_used,
            n_diverged: p.n_diverged,
        })
        .collect())
}

fn deviation(exact: Result<Complex64, CoreError>, mft: Result<Complex64, CoreError>) -> Result<f64, CoreError> {
    match relative_deviation(exact?, mft?) {
        Err(CoreError::MftVanishes) => Ok(f64::NAN),
        other => other,
    }
}

fn run_analytic(analytic: &Analytic, out: &mut RunOutput) -> Result<(), RunError> {
    let fail = |what: &str| {
        let what = what.to_owned();
        move |source| RunError::Calculation { what, source }
    };
    match analytic {
        Analytic::Doppler { params, delta, widths } => {
            out.deviation_axis = Some("doppler_width_over_gamma_t");
            let d = Detuning::new(*delta).map_err(fail("detuning"))?;
            out.deviation = widths
                .par_iter()
                .map(|&w| {
                    let exact = two_atom_average_doppler(params, *delta, w, SeparationModel::Fixed(0.0));
                    let r = deviation(exact, mft_product(params, d, 2, w))?;
                    Ok(DeviationRow {
                        curve: "fixed_separation".to_owned(),
                        x: w,
                        r,
                    })
                })
                .collect::<Result<_, _>>()
                .map_err(fail("Doppler-averaged pair amplitude"))?;
        }
        Analytic::Density { params, delta, rhos } => {
            out.deviation_axis = Some("rho_over_k");
            let d = Detuning::new(*delta).map_err(fail("detuning"))?;
            out.deviation = rhos
                .par_iter()
                .map(|&rho| {
                    let exact = two_atom_average_doppler(params, *delta, 0.0, SeparationModel::Exponential { rho: rho * params.k() });
                    let r = deviation(exact, mft_product(params, d, 2, 0.0))?;
                    Ok(DeviationRow {
                        curve: "exponential_separation".to_owned(),
                        x: rho,
                        r,
                    })
                })
                .collect::<Result<_, _>>()
                .map_err(fail("separation-averaged pair amplitude"))?;
        }
        Analytic::TwoAtom {
            params,
            rho,
            doppler_width,
            deltas,
        } => {
            out.two_atom = deltas
                .par_iter()
                .map(|&delta| {
                    let d = Detuning::new(delta)?;
                    let t12 = two_atom_average_doppler(
                        params,
                        delta,
                        *doppler_width,
                        SeparationModel::Exponential { rho: rho * params.k() },
                    );
                    let t12 = match t12 {
                        Err(CoreError::ResonantDivergence) => Ok(Complex64::new(f64::NAN, f64::NAN)),
                        other => other,
                    }?;
                    let mft = mft_product(params, d, 2, *doppler_width)?;
                    let r = deviation(Ok(t12), Ok(mft))?;
                    Ok(TwoAtomRow {
                        curve: "pair".to_owned(),
                        delta,
                        t12,
                        mft,
                        r,
                    })
                })
                .collect::<Result<_, _>>()
                .map_err(fail("pair amplitude"))?;
        }
    }
    Ok(())
}

/// Runs every job of the plan on the current rayon pool.
pub fn run_plan(plan: &Plan) -> Result<RunOutput, RunError> {
    let mut out = RunOutput::default();
    for job in &plan.spectra {
        let points = run_spectrum(job)?;
        out.results.extend(spectrum_rows(job, &points)?);
        let mut note = None;
        if let Some(shift) = &job.shift {
            let (value, uncertainty) = match extract_peak_shift(&points, PeakObservable::OpticalThickness) {
                Ok(s) => (s.shift, s.uncertainty),
                Err(e) => {
                    note = Some(format!("peak shift unavailable: {e}"));
                    (f64::NAN, f64::NAN)
                }
            };
            out.shifts.push(ShiftRow {
                curve: shift.series.clone(),
                x: shift.x,
                shift: value,
                uncertainty,
                cls_prediction: shift.cls_prediction,
            });
        }
        out.curves.push(CurveSummary {
            info: job.info.clone(),
            n_failed: points.iter().map(|p| p.n_failed).sum(),
            n_diverged: points.iter().map(|p| p.n_diverged).sum(),
            note,
        });
        out.spectra.push(points);
    }
    if let Some(analytic) = &plan.analytic {
        run_analytic(analytic, &mut out)?;
    }
    Ok(out)
}

/// Runs the plan on a dedicated pool of `threads` workers.
pub fn run_with_threads(plan: &Plan, threads: usize) -> Result<RunOutput, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool construction");
    pool.install(|| run_plan(plan))
}
