//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p corr1d --test acceptance`. The process exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use corr1d::config::RunConfig;
use corr1d::presets::{plan, Plan};
use corr1d::runner::{run_plan, RunOutput};
use corr1d_core::ensembles::{mft_product, sample_configuration, FermionChain, SpectrumPoint};
use corr1d_core::meanfield::{extract_peak_shift, slab_spectrum, PeakObservable, SlabMedium};
use corr1d_core::params::Detuning;
use corr1d_core::transfer::{
    relative_deviation, two_atom_amplitude, two_atom_average_analytic, two_atom_average_doppler, SeparationModel,
};
use corr1d_core::{dipole, transfer, Complex64, Configuration, EnsembleSpec, WaveguideParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

struct Verdict {
    pass: bool,
    measured: String,
    tolerance: String,
}

fn verdict(pass: bool, measured: impl Into<String>, tolerance: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        measured: measured.into(),
        tolerance: tolerance.into(),
    }
}

fn run_config(text: &str) -> (Plan, RunOutput) {
    let cfg = RunConfig::from_toml(text).expect("valid config");
    let plan = plan(&cfg).expect("valid plan");
    let out = run_plan(&plan).expect("run succeeds");
    (plan, out)
}

/// `t = 1 + η`, `r = η e^{2ikx}` with `η = γ_w/(iδ − γ_t)`, in units `k = γ_t = 1`.
fn single_atom_closed_form(gamma_w: f64, delta: f64, x: f64) -> (Complex64, Complex64) {
    let eta = gamma_w / Complex64::new(-1.0, delta);
    (1.0 + eta, eta * Complex64::from_polar(1.0, 2.0 * x))
}

fn c1_single_atom() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let g = rng.random::<f64>();
        let delta = 20.0 * rng.random::<f64>() - 10.0;
        let x = 20.0 * rng.random::<f64>() - 10.0;
        let p = WaveguideParams::normalized(g).unwrap();
        let c = Configuration::uniform(vec![x], Detuning::new(delta).unwrap()).unwrap();
        let (t, r) = single_atom_closed_form(g, delta, x);
        for s in [dipole::scatter(&p, &c).unwrap(), transfer::scatter(&p, &c).unwrap()] {
            worst = worst.max((s.t - t).norm()).max((s.r - r).norm());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-12 && secs < 1.0,
        format!("max |Δ| = {worst:.2e}, {secs:.3} s"),
        "1e-12, < 1 s",
    )
}

fn random_configuration(rng: &mut ChaCha8Rng, lossless: bool) -> (WaveguideParams, Configuration) {
    let p = if lossless {
        WaveguideParams::lossless()
    } else {
        WaveguideParams::normalized(0.01 + 0.99 * rng.random::<f64>()).unwrap()
    };
    let n = rng.random_range(1..=64);
    let length = 0.5 + 40.0 * rng.random::<f64>();
    loop {
        let positions: Vec<f64> = (0..n).map(|_| length * rng.random::<f64>()).collect();
        let detunings: Vec<f64> = (0..n)
            .map(|_| {
                let d: f64 = 6.0 * rng.random::<f64>() - 3.0;
                if d.abs() < 1e-3 {
                    d + 0.01
                } else {
                    d
                }
            })
            .collect();
        if let Ok(c) = Configuration::new(positions, detunings) {
            return (p, c);
        }
    }
}

fn grand_sweep() -> Vec<(bool, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    (0..500)
        .map(|i| {
            let lossless = i % 5 == 0;
            let (p, c) = random_configuration(&mut rng, lossless);
            let a = dipole::scatter(&p, &c).unwrap();
            let b = transfer::scatter(&p, &c).unwrap();
            let diff = (a.t.re - b.t.re)
                .abs()
                .max((a.t.im - b.t.im).abs())
                .max((a.r.re - b.r.re).abs())
                .max((a.r.im - b.r.im).abs());
            let total = (a.transmittance() + a.reflectance()).max(b.transmittance() + b.reflectance());
            (lossless, diff, total)
        })
        .collect()
}

fn c2_grand_oracle(sweep: &[(bool, f64, f64)], secs: f64) -> Verdict {
    let worst = sweep.iter().map(|s| s.1).fold(0.0, f64::max);
    verdict(
        worst <= 1e-10 && secs < 30.0,
        format!("max componentwise |Δ| = {worst:.2e} over {} configurations, {secs:.2} s", sweep.len()),
        "1e-10, < 30 s",
    )
}

fn c3_unitarity(sweep: &[(bool, f64, f64)]) -> Verdict {
    let lossless = sweep.iter().filter(|s| s.0).map(|s| (s.2 - 1.0).abs()).fold(0.0, f64::max);
    let lossy = sweep.iter().filter(|s| !s.0).map(|s| s.2).fold(0.0, f64::max);
    verdict(
        lossless <= 1e-10 && lossy < 1.0,
        format!("lossless max |T+R−1| = {lossless:.2e}, lossy max T+R = {lossy:.6}"),
        "1e-10 and < 1",
    )
}

fn c4_two_atom() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let samples = 1_000_000;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = WaveguideParams::normalized(0.05 + 0.95 * rng.random::<f64>()).unwrap();
        let d = Detuning::new(6.0 * rng.random::<f64>() - 3.0).unwrap();
        let rho = 0.01 + 0.49 * rng.random::<f64>();
        let exact = two_atom_average_analytic(&p, d, rho).unwrap();
        let gaps = Exp::new(rho).unwrap();
        let (mut sum, mut sq_re, mut sq_im) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        for _ in 0..samples {
            let z = two_atom_amplitude(&p, d, d, gaps.sample(&mut rng)).unwrap();
            sum += z;
            sq_re += z.re * z.re;
            sq_im += z.im * z.im;
        }
        let n = samples as f64;
        let mean = sum / n;
        let se_re = ((sq_re / n - mean.re * mean.re) / (n - 1.0)).sqrt();
        let se_im = ((sq_im / n - mean.im * mean.im) / (n - 1.0)).sqrt();
        worst = worst
            .max((mean.re - exact.re).abs() / se_re)
            .max((mean.im - exact.im).abs() / se_im);
    }
    verdict(
        worst <= 3.0,
        format!("max |MC − closed form| = {worst:.2} standard errors over 20 points"),
        "3 standard errors per component",
    )
}

fn c5_mft_emergence() -> Verdict {
    let (plan, out) = run_config(
        "experiment = \"spectrum\"\n\
         [ensemble]\nkind = \"classical\"\nn_atoms = 8\nrho_over_k = 0.05\nn_realizations = 4096\n\
         [grid]\ndelta_min = -3.0\ndelta_max = 3.0\ndelta_count = 25\n",
    );
    let p = plan.spectra[0].params;
    let mut worst = (0.0f64, 0.0);
    let mut at_one = f64::NAN;
    for pt in &out.spectra[0] {
        let mft = mft_product(&p, pt.delta, 8, 0.0).unwrap();
        if let Ok(r) = relative_deviation(pt.mean_amplitude, mft) {
            if r > worst.0 {
                worst = (r, pt.delta.value());
            }
            if pt.delta.value() == 1.0 {
                at_one = r;
            }
        }
    }
    verdict(
        worst.0 < 0.02,
        format!(
            "max |⟨t⟩ − t₁^N|/|t₁^N| = {:.3} at δ = {}, {:.3} at δ = 1",
            worst.0, worst.1, at_one
        ),
        "0.02 for |δ| ≤ 3",
    )
}

/// The point with the largest `|⟨T⟩ − T_mft|` within one linewidth of
/// resonance, in units of the standard error of `⟨T⟩`.
fn c6_mft_breakdown(spectrum: &[SpectrumPoint], p: &WaveguideParams, n: u32) -> Verdict {
    let (mut dev, mut se, mut at) = (0.0f64, 0.0, 0.0);
    for pt in spectrum.iter().filter(|pt| pt.delta.value().abs() <= 1.0) {
        let mft = mft_product(p, pt.delta, n, 0.0).unwrap().norm_sqr();
        let d = (pt.mean_transmittance - mft).abs();
        if d > dev {
            (dev, se, at) = (d, pt.stderr_transmittance, pt.delta.value());
        }
    }
    let z = dev / se;
    verdict(
        z > 5.0,
        format!("|⟨T⟩ − T_mft| = {dev:.4} at δ = {at} is {z:.1} standard errors"),
        "> 5 standard errors",
    )
}

/// Full width of the transmission dip at the level halfway between its
/// minimum and unit transmission, from the innermost crossings on either
/// side of the minimum. The uncertainty propagates the standard error of
/// `⟨T⟩` through the local slope at each crossing.
fn half_depth_width(spectrum: &[SpectrumPoint]) -> Option<(f64, f64)> {
    let t: Vec<f64> = spectrum.iter().map(|p| p.mean_transmittance).collect();
    let x: Vec<f64> = spectrum.iter().map(|p| p.delta.value()).collect();
    let se: Vec<f64> = spectrum.iter().map(|p| p.stderr_transmittance).collect();
    let imin = (0..t.len()).min_by(|&a, &b| t[a].total_cmp(&t[b]))?;
    let level = 0.5 * (1.0 + t[imin]);
    let crossing = |i: usize, j: usize| {
        let slope = (t[j] - t[i]) / (x[j] - x[i]);
        let pos = x[i] + (level - t[i]) / slope;
        let err = 0.5 * (se[i] + se[j]) / slope.abs();
        (pos, err)
    };
    let left = (1..=imin).rev().find(|&i| t[i - 1] >= level).map(|i| crossing(i - 1, i))?;
    let right = (imin..t.len() - 1).find(|&i| t[i + 1] >= level).map(|i| crossing(i, i + 1))?;
    Some((right.0 - left.0, left.1.hypot(right.1)))
}

fn c7_narrowing(classical: &[SpectrumPoint], fermionic: &[SpectrumPoint]) -> Verdict {
    match (half_depth_width(classical), half_depth_width(fermionic)) {
        (Some((wc, sc)), Some((wf, sf))) => {
            let z = (wc - wf) / sc.hypot(sf);
            verdict(
                z > 5.0,
                format!("FWHM classical {wc:.3} ± {sc:.3}, fermionic {wf:.3} ± {sf:.3}, {z:.1}σ narrower"),
                "fermionic narrower at 5σ",
            )
        }
        _ => verdict(false, "half-depth crossings not found", "fermionic narrower at 5σ"),
    }
}

fn c8_strong_loss() -> Verdict {
    let ladder = [0.4, 0.2, 0.1, 0.05, 0.025];
    let (plan, out) = run_config(
        "experiment = \"fig2\"\n\
         [sweep]\ngamma_w_over_gamma_t = [0.4, 0.2, 0.1, 0.05, 0.025]\n\
         [grid]\ndelta_min = -3.0\ndelta_max = 3.0\ndelta_count = 25\n",
    );
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut at_zero: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for job in &plan.spectra {
        let rows = out.results.iter().filter(|r| r.curve == job.info.curve);
        for row in rows {
            if row.delta == 0.0 {
                at_zero.entry(job.info.kind).or_default().push(row.mean_ln_t_scaled);
            }
            if job.info.gamma_w_over_gamma_t == ladder[4] {
                let lorentzian = 1.0 / (1.0 + row.delta * row.delta);
                worst = worst.max((row.mean_ln_t_scaled - lorentzian).abs() / lorentzian);
            }
        }
    }
    let mut summary = Vec::new();
    for (kind, values) in &at_zero {
        monotone &= values.len() == ladder.len() && values.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
        summary.push(format!(
            "{kind} at δ=0: {}",
            values.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" → ")
        ));
    }
    verdict(
        worst <= 0.1 && monotone,
        format!("γ_w = 0.025 max relative deviation {worst:.3}; {}", summary.join("; ")),
        "0.1, monotone ladder",
    )
}

fn c9_shifts() -> Verdict {
    let mut slab_worst = 0.0f64;
    for rho in [1e-3, 1e-2] {
        let p = WaveguideParams::normalized(0.01).unwrap();
        let slab = SlabMedium::new(p, rho, PI).unwrap();
        let deltas: Vec<f64> = (0..201).map(|i| -0.05 + 0.1 * i as f64 / 200.0).collect();
        let shift = extract_peak_shift(&slab_spectrum(&slab, &deltas).unwrap(), PeakObservable::OpticalThickness)
            .unwrap()
            .shift;
        let kl = PI;
        let cls = 0.01 * rho / 2.0 * (1.0 - (2.0 * kl).sin() / (2.0 * kl));
        slab_worst = slab_worst.max((shift - cls).abs() / cls);
    }

    let (plan, out) = run_config(
        "experiment = \"custom-sweep\"\n\
         [ensemble]\nkind = \"classical\"\nn_atoms = 32\nbox_length_over_lambda = 0.5\nn_realizations = 4096\n\
         [grid]\ndelta_min = -1.5\ndelta_max = 1.5\ndelta_count = 61\n\
         [sweep]\ngamma_w_over_gamma_t = [0.01, 0.02, 0.05, 0.1]\n",
    );
    let mut ratios = Vec::new();
    for (job, spectrum) in plan.spectra.iter().zip(&out.spectra) {
        let shift = extract_peak_shift(spectrum, PeakObservable::OpticalThickness).map(|s| s.shift);
        let scale = job.info.gamma_w_over_gamma_t * job.info.rho_over_k / 2.0;
        ratios.push(shift.map(|s| s / scale).unwrap_or(f64::NAN));
    }
    let full_ok = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    verdict(
        slab_worst <= 0.1 && full_ok,
        format!(
            "slab max relative deviation from CLS {slab_worst:.4}; full shift/(γ_wρ/2k) = {}",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", ")
        ),
        "0.1; within a factor of 2",
    )
}

fn c10_doppler() -> Verdict {
    let p = WaveguideParams::lossless();
    let widths = [1.0, 10.0, 100.0];
    let r: Vec<f64> = widths
        .iter()
        .map(|&w| {
            let exact = two_atom_average_doppler(&p, 0.0, w, SeparationModel::Fixed(0.0)).unwrap();
            let mft = mft_product(&p, Detuning::new(0.0).unwrap(), 2, w).unwrap();
            relative_deviation(exact, mft).unwrap()
        })
        .collect();
    let decreasing = r.windows(2).all(|w| w[1] < w[0]);
    verdict(
        r[2] < 0.01 && decreasing,
        format!("r(1, 10, 100) = {:.4}, {:.4}, {:.5}", r[0], r[1], r[2]),
        "r(100) < 0.01, decreasing",
    )
}

fn c11_pair_correlation() -> Verdict {
    let (n, bins, configs, batches) = (32usize, 32usize, 10_000usize, 50usize);
    let length = 4.0 * PI;
    let rho = n as f64 / length;
    let width = length / 2.0 / bins as f64;
    let mut chain = FermionChain::new(n, length, ChaCha8Rng::seed_from_u64(111)).unwrap();
    let per_batch = configs / batches;
    let mut batch_means = Vec::new();
    for _ in 0..batches {
        let mut counts = vec![0.0; bins];
        for _ in 0..per_batch {
            let x = chain.next_configuration().unwrap();
            for i in 0..n {
                for j in 0..i {
                    let s = (x[i] - x[j]).rem_euclid(length);
                    let s = s.min(length - s);
                    counts[((s / width) as usize).min(bins - 1)] += 2.0;
                }
            }
        }
        let norm = per_batch as f64 * n as f64 * rho * 2.0 * width;
        batch_means.push(counts.iter().map(|c| c / norm).collect::<Vec<f64>>());
    }
    let sine_kernel = |x: f64| {
        let u = PI * rho * x;
        if u == 0.0 {
            0.0
        } else {
            1.0 - (u.sin() / u).powi(2)
        }
    };
    let b = batches as f64;
    let mut worst = 0.0f64;
    for k in 0..bins {
        let mean = batch_means.iter().map(|v| v[k]).sum::<f64>() / b;
        let var = batch_means.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / (b - 1.0);
        let lo = k as f64 * width;
        let exact = (0..400).map(|i| sine_kernel(lo + width * (i as f64 + 0.5) / 400.0)).sum::<f64>() / 400.0;
        worst = worst.max((mean - exact).abs() / (var / b).sqrt());
    }
    verdict(
        worst <= 4.0,
        format!("max |g_MC − (1 − sinc²)| = {worst:.2}σ over {bins} bins"),
        "4σ per bin",
    )
}

fn c12_poisson() -> Verdict {
    let realizations = 200_000;
    let mut worst = 0.0f64;
    for nbar in [1.0, 4.0] {
        for delta in [0.0, 1.0] {
            let t1 = (Complex64::new(-0.5, delta) / Complex64::new(-1.0, delta)).norm_sqr();
            let spec = EnsembleSpec::classical(1, 10.0).with_poisson_atoms(nbar);
            let mut rng = ChaCha8Rng::seed_from_u64(112);
            let samples: Vec<f64> = (0..realizations)
                .map(|_| t1.powi(sample_configuration(&spec, &mut rng).unwrap().len() as i32))
                .collect();
            let n = realizations as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt() / mean;
            let closed = (2.0 - 0.5) * nbar * 0.5 / (1.0 + delta * delta);
            worst = worst.max((-mean.ln() - closed).abs() / se);
        }
    }
    verdict(
        worst <= 3.0,
        format!("max |−ln⟨T₁^N⟩ − closed form| = {worst:.2} standard errors"),
        "3 standard errors",
    )
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn c13_determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("corr1d-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let configs = [
        ("fig1", "experiment = \"fig1\"\n[ensemble]\nn_realizations = 300\n[grid]\ndelta_count = 41\n"),
        ("fig3b", "experiment = \"fig3b\"\n[ensemble]\nn_realizations = 300\n[grid]\ndelta_count = 41\n"),
    ];
    let mut identical = true;
    let mut compared = 0;
    for (name, text) in configs {
        let config = dir.join(format!("{name}.toml"));
        std::fs::write(&config, text).unwrap();
        let mut outputs = Vec::new();
        for threads in ["1", "3"] {
            let out = dir.join(format!("{name}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_corr1d"))
                .args(["run", config.to_str().unwrap(), "--threads", threads, "--output", out.to_str().unwrap()])
                .env_remove("CORR1D_THREADS")
                .output()
                .unwrap()
                .status;
            identical &= status.success();
            outputs.push(csv_files(&out));
        }
        identical &= !outputs[0].is_empty() && outputs[0] == outputs[1];
        compared += outputs[0].len();
    }
    let _ = std::fs::remove_dir_all(&dir);
    verdict(
        identical,
        format!("{compared} CSV files compared between 1 and 3 threads, identical = {identical}"),
        "bitwise identical",
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, description: &str, v: Verdict| {
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("C{id} {status} {description} (measured {}; tolerance {})", v.measured, v.tolerance);
        if !v.pass {
            failures += 1;
        }
    };

    report(1, "single-atom exactness", c1_single_atom());
    let start = Instant::now();
    let sweep = grand_sweep();
    let secs = start.elapsed().as_secs_f64();
    report(2, "dipole and transfer solvers agree", c2_grand_oracle(&sweep, secs));
    report(3, "flux conservation", c3_unitarity(&sweep));
    report(4, "two-atom exponential-gap average", c4_two_atom());
    report(5, "mean field emerges at low density", c5_mft_emergence());

    let (plan, out) = run_config(
        "experiment = \"fig1\"\n[sweep]\nrho_over_k = [8.0]\nkinds = [\"classical\", \"fermionic\"]\n",
    );
    let classical = &out.spectra[0];
    let fermionic = &out.spectra[1];
    let job = &plan.spectra[0];
    report(
        6,
        "mean field fails at high density",
        c6_mft_breakdown(classical, &job.params, job.info.n_atoms as u32),
    );
    report(7, "fermionic line is narrower", c7_narrowing(classical, fermionic));

    report(8, "strong-loss convergence to the Lorentzian", c8_strong_loss());
    report(9, "collective line shifts", c9_shifts());
    report(10, "Doppler broadening restores the mean field", c10_doppler());
    report(11, "free-fermion pair correlation", c11_pair_correlation());
    report(12, "Poisson atom number mean field", c12_poisson());
    report(13, "thread-count determinism", c13_determinism());

    println!("{} of 13 criteria failed", failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
