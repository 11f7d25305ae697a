//! The invariant and property suite behind `sqg validate`: Littlewood-Paley
//! identities, Bernstein and coercivity ratios, the advection oracle, the
//! energy budget and the analytic decay solution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::littlewood_paley::{phi, ShellSystem};
use crate::operators::{advection, advection_oracle, lambda_pow, ForcingSpec, Modulation};
use crate::spectral::{random_field, Domain, PhysicalField, RandomSpectrum, SpectralField};
use crate::timestepper::{energy_budget, simulate, SimulationConfig, SqgParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Measured quantity the check is decided on.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckReport {
    fn at_most(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        CheckReport {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            detail,
        }
    }
}

/// `max |sum_q phi_q(r) - 1|` over `samples` seeded radii in `[0, R]`.
pub fn partition_of_unity(shells: &ShellSystem, samples: usize, seed: u64) -> f64 {
    let radius = shells.domain().dealias_radius() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let r = rng.gen_range(0.0..=radius);
            let sum: f64 = shells.shells().map(|q| phi(q, r)).sum();
            (sum - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Worst relative residuals `(reconstruction, telescoping)` over seeded fields.
pub fn lp_identities(shells: &ShellSystem, fields: u64) -> Result<(f64, f64)> {
    let d = *shells.domain();
    let spectrum = RandomSpectrum::new(1.0, (1.0, d.dealias_radius() as f64));
    let (mut recon, mut tele) = (0.0f64, 0.0f64);
    for seed in 0..fields {
        let theta = random_field(d, seed, &spectrum)?;
        let scale = theta.max_abs_coeff();
        let blocks: Vec<SpectralField> = shells
            .shells()
            .map(|q| shells.shell_project(&theta, q))
            .collect::<Result<_>>()?;
        let mut partial = SpectralField::zeros(d);
        for (q, block) in shells.shells().zip(&blocks) {
            partial = &partial + block;
            let low = shells.lowpass(&theta, q)?;
            tele = tele.max((&low - &partial).max_abs_coeff() / scale);
        }
        recon = recon.max((&partial - &theta).max_abs_coeff() / scale);
    }
    Ok((recon, tele))
}

/// Shell field with seeded amplitudes in `[1/2, 1]` and phases aligned at a
/// seeded point, so that its peak sits near the Bernstein extremal case.
pub fn coherent_shell_field(shells: &ShellSystem, q: i32, seed: u64) -> Result<SpectralField> {
    let d = *shells.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centre = (rng.gen::<f64>() * d.length(), rng.gen::<f64>() * d.length());
    let radius = d.dealias_radius() as i64;
    let mut modes = Vec::new();
    for k1 in 0..=radius {
        for k2 in -radius..=radius {
            if (k1 == 0 && k2 <= 0) || !d.is_retained(k1, k2) {
                continue;
            }
            let weight = phi(q, ((k1 * k1 + k2 * k2) as f64).sqrt());
            let amp = rng.gen_range(0.5..=1.0);
            if weight == 0.0 {
                continue;
            }
            let shift = -2.0 * PI * (k1 as f64 * centre.0 + k2 as f64 * centre.1) / d.length();
            modes.push(((k1, k2), Complex64::from_polar(weight * amp, shift)));
        }
    }
    SpectralField::from_modes(d, &modes)
}

/// Shell block of a seeded random-phase field.
pub fn random_shell_field(shells: &ShellSystem, q: i32, seed: u64) -> Result<SpectralField> {
    let d = *shells.domain();
    let theta = random_field(d, seed, &RandomSpectrum::new(0.0, (1.0, d.dealias_radius() as f64)))?;
    shells.shell_project(&theta, q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernsteinReport {
    pub s: f64,
    pub r: f64,
    /// Largest `||u_q||_r / (lambda_q^(2(1/s - 1/r)) ||u_q||_s)` per shell, from `q = 0`.
    pub max_ratio: Vec<f64>,
}

impl BernsteinReport {
    pub fn overall_max(&self) -> f64 {
        self.max_ratio.iter().cloned().fold(0.0, f64::max)
    }

    /// `max_q / min_q` of the per-shell maxima.
    pub fn spread(&self) -> f64 {
        let lo = self.max_ratio.iter().cloned().fold(f64::INFINITY, f64::min);
        self.overall_max() / lo
    }
}

fn inv(r: f64) -> f64 {
    if r.is_infinite() {
        0.0
    } else {
        1.0 / r
    }
}

/// Bernstein ratios over `fields` coherent shell fields per shell `q >= 0`.
/// The `q = -1` block vanishes on zero-mean fields and is skipped.
pub fn bernstein(shells: &ShellSystem, fields: u64, pairs: &[(f64, f64)]) -> Result<Vec<BernsteinReport>> {
    let fft = crate::spectral::Fft2::new(shells.domain().n());
    let mut reports: Vec<BernsteinReport> = pairs
        .iter()
        .map(|&(s, r)| BernsteinReport {
            s,
            r,
            max_ratio: Vec::new(),
        })
        .collect();
    for q in 0..=shells.q_max() {
        let lambda = shells.lambda(q);
        let mut worst = vec![0.0f64; pairs.len()];
        for seed in 0..fields {
            let u = fft.to_physical(&coherent_shell_field(shells, q, seed)?);
            for (w, &(s, r)) in worst.iter_mut().zip(pairs) {
                let ratio = u.lp_norm(r)? / (lambda.powf(2.0 * (inv(s) - inv(r))) * u.lp_norm(s)?);
                *w = w.max(ratio);
            }
        }
        for (rep, w) in reports.iter_mut().zip(worst) {
            rep.max_ratio.push(w);
        }
    }
    Ok(reports)
}

/// `l int u Lambda^alpha u |u|^(l-2) dx / (lambda_q^alpha ||u||_l^l)`.
pub fn coercivity_ratio(shells: &ShellSystem, u: &SpectralField, q: i32, l: f64, alpha: f64) -> Result<f64> {
    let fft = crate::spectral::Fft2::new(shells.domain().n());
    let (phys, lifted) = fft.to_physical_pair(u, &lambda_pow(u, alpha));
    let cell = shells.domain().spacing().powi(2);
    let integral: f64 = phys
        .samples()
        .iter()
        .zip(lifted.samples())
        .map(|(v, w)| v * w * v.abs().powf(l - 2.0))
        .sum::<f64>()
        * cell;
    Ok(l * integral / (shells.lambda(q).powf(alpha) * phys.lp_norm(l)?.powf(l)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReport {
    pub l: f64,
    pub alpha: f64,
    /// Smallest ratio over the seeded fields of every shell `q >= 0`.
    pub min_ratio: f64,
    /// Worst relative error of the single-mode ratio against `l (2 pi |k| / (lambda_q L))^alpha`.
    pub single_mode_error: f64,
}

pub fn coercivity(shells: &ShellSystem, fields: u64, ls: &[f64], alphas: &[f64]) -> Result<Vec<CoercivityReport>> {
    let d = *shells.domain();
    let mut out = Vec::new();
    for &l in ls {
        for &alpha in alphas {
            let mut min_ratio = f64::INFINITY;
            let mut single = 0.0f64;
            for q in 0..=shells.q_max() {
                for seed in 0..fields {
                    let u = random_shell_field(shells, q, seed)?;
                    min_ratio = min_ratio.min(coercivity_ratio(shells, &u, q, l, alpha)?);
                }
                let k = 2i64.pow(q as u32);
                if d.is_retained(k, 0) {
                    let mode = SpectralField::from_modes(d, &[((k, 0), Complex64::new(0.5, 0.0))])?;
                    let got = coercivity_ratio(shells, &mode, q, l, alpha)?;
                    let exact = l * (2.0 * PI * k as f64 / (shells.lambda(q) * d.length())).powf(alpha);
                    single = single.max((got - exact).abs() / exact);
                }
            }
            out.push(CoercivityReport {
                l,
                alpha,
                min_ratio,
                single_mode_error: single,
            });
        }
    }
    Ok(out)
}

/// Seeded field with between 1 and `max_pairs` random modes inside the dealiasing disc.
pub fn sparse_field(domain: Domain, seed: u64, max_pairs: usize) -> Result<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = domain.dealias_radius() as i64;
    let count = rng.gen_range(1..=max_pairs);
    let mut modes = Vec::with_capacity(count);
    while modes.len() < count {
        let k = (rng.gen_range(-radius..=radius), rng.gen_range(-radius..=radius));
        if k == (0, 0) || !domain.is_retained(k.0, k.1) {
            continue;
        }
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        modes.push((k, c));
    }
    SpectralField::from_modes(domain, &modes)
}

/// Worst relative gap between the pseudospectral advection and the exact
/// convolution over `fields` sparse fields.
pub fn oracle_gap(domain: Domain, fields: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for seed in 0..fields {
        let theta = sparse_field(domain, seed, 8)?;
        let exact = advection_oracle(&theta, 16)?;
        let fast = advection(&theta);
        let scale = exact.max_abs_coeff().max(theta.max_abs_coeff().powi(2));
        worst = worst.max((&fast - &exact).max_abs_coeff() / scale);
    }
    Ok(worst)
}

/// Grid errors of the two closed forms
/// `u . grad(sin 2 pi x1 + cos 2 pi x2) = 0` and
/// `u . grad(cos 2 pi x1 + cos 4 pi x2) = 2 pi sin(2 pi x1) sin(4 pi x2)` on the unit square.
pub fn closed_form_gaps(n: usize) -> Result<(f64, f64)> {
    let d = Domain::new(1.0, n)?;
    let steady = PhysicalField::from_fn(d, |x, y| (2.0 * PI * x).sin() + (2.0 * PI * y).cos());
    let a = advection(&steady.to_spectral()).to_physical().max_abs();
    let mixed = PhysicalField::from_fn(d, |x, y| (2.0 * PI * x).cos() + (4.0 * PI * y).cos());
    let got = advection(&mixed.to_spectral()).to_physical();
    let want = PhysicalField::from_fn(d, |x, y| 2.0 * PI * (2.0 * PI * x).sin() * (4.0 * PI * y).sin());
    let b = got
        .samples()
        .iter()
        .zip(want.samples())
        .map(|(g, w)| (g - w).abs())
        .fold(0.0, f64::max)
        / (2.0 * PI);
    Ok((a, b))
}

fn cos_mode(d: Domain) -> Result<SpectralField> {
    SpectralField::from_modes(d, &[((1, 0), Complex64::new(0.5, 0.0))])
}

/// Relative error of `theta(t)` against `e^(-nu (2 pi)^alpha t) cos(2 pi x1)`.
pub fn analytic_decay_error(n: usize, nu: f64, alpha: f64, dt: f64, horizon: f64) -> Result<f64> {
    let d = Domain::new(1.0, n)?;
    let theta0 = cos_mode(d)?;
    let params = SqgParams::new(nu, alpha, 4.0, 4.0, ForcingSpec::zero(d))?;
    let cfg = SimulationConfig {
        dt: Some(dt),
        dt_max: dt,
        cadence: usize::MAX,
        cfl_recheck: None,
    };
    let traj = simulate(&theta0, &params, horizon, &cfg, &mut |_, _| {})?;
    let exact = theta0.scale((-nu * (2.0 * PI).powf(alpha) * traj.final_state.t).exp());
    Ok((&traj.final_state.theta - &exact).l2_norm() / exact.l2_norm())
}

/// Budget residual of the unforced single-mode decay.
pub fn unforced_budget(n: usize, dt: f64, horizon: f64) -> Result<f64> {
    let d = Domain::new(1.0, n)?;
    let params = SqgParams::new(1.0, 1.5, 4.0, 4.0, ForcingSpec::zero(d))?;
    let cfg = SimulationConfig {
        dt: Some(dt),
        dt_max: dt,
        cadence: 1,
        cfl_recheck: None,
    };
    let traj = simulate(&cos_mode(d)?, &params, horizon, &cfg, &mut |_, _| {})?;
    energy_budget(&traj.energy_series(), params.nu)
}

/// Budget residual of a forced, fully nonlinear run from seeded data.
pub fn forced_budget(n: usize, dt: f64, horizon: f64, seed: u64) -> Result<f64> {
    let d = Domain::new(1.0, n)?;
    let a = Complex64::new(0.6, 0.0);
    let force = ForcingSpec::new(
        d,
        &[((1, 0), a), ((0, 1), a), ((1, 1), a * 0.5), ((2, -1), Complex64::new(0.0, 0.3))],
        Modulation::Sinusoid { frequency: 2.0 },
    )?;
    let params = SqgParams::new(0.5, 1.5, 4.0, 4.0, force)?;
    let theta0 = random_field(d, seed, &RandomSpectrum::new(1.0, (1.0, 12.0)).with_amplitude(0.2))?;
    let cfg = SimulationConfig {
        dt: Some(dt),
        dt_max: dt,
        cadence: 1,
        cfl_recheck: None,
    };
    let traj = simulate(&theta0, &params, horizon, &cfg, &mut |_, _| {})?;
    energy_budget(&traj.energy_series(), params.nu)
}

/// Smallest error reduction per halving of `dt` against the forced linear
/// solution `theta = (1 - e^(-s t)) / s g`.
pub fn temporal_order_ratio() -> Result<f64> {
    let d = Domain::new(1.0, 16)?;
    let g = cos_mode(d)?;
    let force = ForcingSpec::new(d, &[((1, 0), Complex64::new(0.5, 0.0))], Modulation::Constant)?;
    let params = SqgParams::new(1.0, 1.5, 4.0, 4.0, force)?;
    let s = (2.0 * PI).powf(1.5);
    let horizon = 0.4;
    let exact = g.scale(-(-s * horizon).exp_m1() / s);
    let mut errors = Vec::new();
    for dt in [0.04, 0.02, 0.01, 0.005] {
        let cfg = SimulationConfig {
            dt: Some(dt),
            dt_max: 1.0,
            cadence: usize::MAX,
            cfl_recheck: None,
        };
        let traj = simulate(&SpectralField::zeros(d), &params, horizon, &cfg, &mut |_, _| {})?;
        errors.push((&traj.final_state.theta - &exact).max_abs_coeff());
    }
    Ok(errors
        .windows(2)
        .map(|w| w[0] / w[1])
        .fold(f64::INFINITY, f64::min))
}

/// Problem sizes for [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteSize {
    /// Reduced counts and horizons; a few seconds.
    Quick,
    /// Full counts, `N = 128` and the long forced run.
    Full,
}

pub fn run_suite(size: SuiteSize) -> Result<Vec<CheckReport>> {
    let full = size == SuiteSize::Full;
    let mut out = Vec::new();
    let shells = ShellSystem::new(Domain::new(1.0, if full { 128 } else { 64 })?);

    let dev = partition_of_unity(&shells, 10_000, 7);
    out.push(CheckReport::at_most("partition_of_unity", dev, 1e-12, "max |sum_q phi_q - 1| over 10^4 radii".into()));

    let (recon, tele) = lp_identities(&shells, if full { 100 } else { 20 })?;
    out.push(CheckReport::at_most("lp_reconstruction", recon, 1e-12, "relative residual of sum_q Delta_q theta - theta".into()));
    out.push(CheckReport::at_most("lp_telescoping", tele, 1e-12, "relative residual of lowpass - partial shell sums".into()));

    let fields = if full { 200 } else { 20 };
    for rep in bernstein(&shells, fields, &[(2.0, f64::INFINITY), (2.0, 4.0), (4.0, f64::INFINITY)])? {
        let (max, spread) = (rep.overall_max(), rep.spread());
        out.push(CheckReport {
            name: format!("bernstein_{}_{}", rep.s, rep.r),
            passed: max <= 10.0 && spread < 2.0,
            value: max,
            threshold: 10.0,
            detail: format!("per-shell maxima {:?}, spread {spread:.4}", rep.max_ratio),
        });
    }

    let fields = if full { 200 } else { 10 };
    for rep in coercivity(&shells, fields, &[2.0, 4.0, 6.0], &[1.2, 1.5, 1.8])? {
        out.push(CheckReport {
            name: format!("coercivity_l{}_alpha{}", rep.l, rep.alpha),
            passed: rep.min_ratio > 0.0 && rep.single_mode_error <= 1e-10,
            value: rep.min_ratio,
            threshold: 0.0,
            detail: format!("single-mode relative error {:.3e}", rep.single_mode_error),
        });
    }

    let gap = oracle_gap(Domain::new(1.0, 32)?, 20)?;
    out.push(CheckReport::at_most("advection_oracle", gap, 1e-11, "20 sparse fields".into()));
    let (a, b) = closed_form_gaps(64)?;
    out.push(CheckReport::at_most("advection_closed_forms", a.max(b), 1e-11, format!("steady {a:.3e}, mixed {b:.3e}")));

    let decay = analytic_decay_error(64, 1.0, 1.5, 1e-3, 1.0)?;
    out.push(CheckReport::at_most("analytic_decay", decay, 1e-8, "N = 64, dt = 1e-3, t = 1".into()));
    let order = temporal_order_ratio()?;
    out.push(CheckReport {
        name: "temporal_order".into(),
        passed: order >= 8.0,
        value: order,
        threshold: 8.0,
        detail: "smallest error reduction per halving of dt".into(),
    });

    let unforced = unforced_budget(64, 1e-3, if full { 1.0 } else { 0.2 })?;
    out.push(CheckReport::at_most("energy_budget_unforced", unforced, 1e-8, "single mode, dt = 1e-3".into()));
    let (n, horizon) = if full { (128, 5.0) } else { (64, 0.5) };
    let forced = forced_budget(n, 1e-3, horizon, 11)?;
    out.push(CheckReport::at_most("energy_budget_forced", forced, 1e-5, format!("N = {n}, dt = 1e-3, horizon {horizon}")));
    Ok(out)
}
