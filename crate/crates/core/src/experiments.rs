//! Determining-modes experiments: twin runs whose low modes are slaved to a
//! reference solution after a free spin-up of both members, force
//! perturbations, threshold sweeps, decay fits and the discrete Gronwall check.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{compute_determining_q, compute_rinfty, CalibrationConstants};
use crate::error::{Result, SqgError};
use crate::littlewood_paley::ShellSystem;
use crate::operators::{lambda_pow, ForcingSpec, Modulation};
use crate::spectral::{random_field, Fft2, RandomSpectrum, SpectralField};
use crate::timestepper::{cfl_dt_with, Integrator, SimState, SqgParams};

/// `final / initial` of `besov_w` at or below which a run counts as synchronized.
pub const SYNC_TOLERANCE: f64 = 1e-6;
/// `final / initial` at or above which a run counts as not synchronized.
pub const DESYNC_THRESHOLD: f64 = 1e-1;
/// Decay fits stop once the series falls below this fraction of its first value.
pub const FIT_FLOOR: f64 = 1e-14;
/// Minimum number of points in a decay fit.
pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    /// Slave every mode in the support of the smooth low-pass `chi(|k| / 2^(Q+1))`.
    SmoothLp,
    /// Slave the modes with `|k| <= 2^Q`.
    SharpTruncation,
}

impl ProjectionKind {
    /// Which coefficients of `theta_2` are overwritten by those of `theta_1`.
    pub fn mask(self, shells: &ShellSystem, q: i32) -> Vec<bool> {
        match self {
            ProjectionKind::SmoothLp => shells.lowpass_support(q),
            ProjectionKind::SharpTruncation => {
                let cut = 2f64.powi(q);
                shells.domain().magnitudes().iter().map(|&m| m <= cut).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Synchronized,
    NotSynchronized,
    Inconclusive,
}

impl Verdict {
    pub fn from_ratio(ratio: f64) -> Self {
        if ratio <= SYNC_TOLERANCE {
            Verdict::Synchronized
        } else if ratio >= DESYNC_THRESHOLD {
            Verdict::NotSynchronized
        } else {
            Verdict::Inconclusive
        }
    }
}

/// The unnamed constants of the Gronwall inequality for the slaved difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GronwallConstants {
    /// `C` in `phi = (2 pi lambda_0)^alpha C nu / 2`.
    pub c_decay: f64,
    /// `C_2` in the low-mode source term.
    pub c_source: f64,
}

impl Default for GronwallConstants {
    fn default() -> Self {
        GronwallConstants {
            c_decay: 1.0,
            c_source: 1.0,
        }
    }
}

/// A perturbation `epsilon e^(-gamma t) g` added to the force of `theta_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcePerturbation {
    pub epsilon: f64,
    pub gamma: f64,
    pub profile: ForcingSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinConfig {
    pub params: SqgParams,
    pub q: i32,
    pub projection: ProjectionKind,
    pub seed1: u64,
    pub seed2: u64,
    /// Spectrum both initial data are drawn from.
    pub initial: RandomSpectrum,
    /// Free evolution of both members before slaving starts.
    pub spinup: f64,
    /// Slaved run length after the spin-up.
    pub horizon: f64,
    /// Steps between samples.
    pub cadence: usize,
    /// Fixed step; `None` takes the CFL step of the initial data.
    pub dt: Option<f64>,
    pub dt_max: f64,
    pub constants: CalibrationConstants,
    pub gronwall: GronwallConstants,
}

impl TwinConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.constants.validate()?;
        if !crate::bounds::admissible_l(self.params.alpha, self.params.l)? {
            return Err(SqgError::param(
                "l",
                format!(
                    "Besov exponent must satisfy l > alpha/(alpha-1) = {}, got {}",
                    self.params.alpha / (self.params.alpha - 1.0),
                    self.params.l
                ),
            ));
        }
        if self.q < 0 {
            return Err(SqgError::param("q", format!("slaving shell must be >= 0, got {}", self.q)));
        }
        if !(self.spinup >= 0.0 && self.spinup.is_finite()) {
            return Err(SqgError::param("spinup", format!("must be finite and >= 0, got {}", self.spinup)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SqgError::param("horizon", format!("must be finite and > 0, got {}", self.horizon)));
        }
        if self.cadence == 0 {
            return Err(SqgError::param("cadence", "must be at least one step"));
        }
        if !(self.dt_max > 0.0) {
            return Err(SqgError::param("dt_max", format!("must be > 0, got {}", self.dt_max)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(SqgError::param("dt", format!("must be finite and > 0, got {dt}")));
            }
        }
        Ok(())
    }

    pub fn with_q(&self, q: i32) -> Self {
        TwinConfig { q, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub r2: f64,
    /// Number of samples used.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncResult {
    pub q: i32,
    pub q_max: i32,
    pub l: f64,
    pub projection: ProjectionKind,
    pub dt: f64,
    /// Time at which slaving starts.
    pub slaving_start: f64,
    /// First sampled time with `||theta_1||_inf <= R_inf` (sharp, configured constants).
    pub entry_time: Option<f64>,
    pub rinfty: f64,
    pub times: Vec<f64>,
    pub besov_w: Vec<f64>,
    pub l2_w: Vec<f64>,
    pub linf_theta1: Vec<f64>,
    pub linf_theta2: Vec<f64>,
    pub force_gap: Vec<f64>,
    /// `||Delta_q w||_l` for `q = -1 ..= q_max` at every sample.
    pub shell_w: Vec<Vec<f64>>,
    /// `sum_{q <= Q} ||Delta_q w||_l^l`.
    pub low_mode_residual: Vec<f64>,
    pub fit: Option<DecayFit>,
    pub verdict: Verdict,
}

impl SyncResult {
    /// `besov_w(final) / besov_w(slaving start)`; 0 when `w` starts at zero.
    pub fn decay_ratio(&self) -> f64 {
        let first = self.besov_w[0];
        let last = *self.besov_w.last().expect("at least one sample");
        if first == 0.0 {
            0.0
        } else {
            last / first
        }
    }

    /// Decades of decay of `besov_w` over the slaved run.
    pub fn decades(&self) -> f64 {
        -self.decay_ratio().log10()
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("t,besov_w,l2_w,linf_theta1,linf_theta2,force_gap");
        for q in -1..=self.q_max {
            let _ = write!(h, ",shell_q{q}_w");
        }
        h
    }

    /// One row per sample, every float with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for i in 0..self.times.len() {
            let row = [
                self.times[i],
                self.besov_w[i],
                self.l2_w[i],
                self.linf_theta1[i],
                self.linf_theta2[i],
                self.force_gap[i],
            ];
            let cells: Vec<String> = row
                .iter()
                .chain(&self.shell_w[i])
                .map(|v| format_float(*v))
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Decimal float with 17 significant digits; round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Least-squares fit of `ln(values)` against `times`; returns the negated slope.
///
/// The series is cut at the first value below `1e-14` of the first one. A
/// constant series gives `rate = 0, r2 = 0`.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(SqgError::InsufficientData("times and values differ in length".into()));
    }
    let floor = values.first().map_or(0.0, |v| v * FIT_FLOOR);
    let end = values
        .iter()
        .position(|v| *v < floor)
        .unwrap_or(values.len());
    let (times, values) = (&times[..end], &values[..end]);
    if times.len() < MIN_FIT_SAMPLES {
        return Err(SqgError::InsufficientData(format!(
            "{} samples above the floor; at least {MIN_FIT_SAMPLES} are needed",
            times.len()
        )));
    }
    if let Some(bad) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(SqgError::InsufficientData(format!(
            "value {} at t = {} is not positive",
            values[bad], times[bad]
        )));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let ym = logs.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in times.iter().zip(&logs) {
        let (dt, dy) = (t - tm, y - ym);
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(SqgError::InsufficientData("all sample times coincide".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Ok(DecayFit {
        rate: if slope == 0.0 { 0.0 } else { -slope },
        r2,
        samples: times.len(),
    })
}

fn lowmode_residual(norms: &[f64], q: i32, l: f64) -> f64 {
    // norms start at q = -1
    norms
        .iter()
        .take((q + 2).max(0) as usize)
        .map(|n| n.powf(l))
        .sum()
}

/// `||Lambda^(-alpha (1 - 1/l)) g||_{B^0_{l,l}}`.
pub fn force_gap_norm(shells: &ShellSystem, g: &SpectralField, alpha: f64, l: f64) -> Result<f64> {
    shells.besov_norm(&lambda_pow(g, -alpha * (1.0 - 1.0 / l)), 0.0, l)
}

fn select_dt(cfg: &TwinConfig, a: &SpectralField, b: &SpectralField, fft: &Fft2) -> f64 {
    cfg.dt.unwrap_or_else(|| {
        cfl_dt_with(a, cfg.dt_max, fft).min(cfl_dt_with(b, cfg.dt_max, fft))
    })
}

fn steps_for(span: f64, dt: f64) -> u64 {
    if span <= 0.0 {
        0
    } else {
        (span / dt - 1e-9).ceil().max(1.0) as u64
    }
}

/// Twin run with `theta_2`'s low modes replaced by `theta_1`'s after every step.
pub fn twin_sync_run(cfg: &TwinConfig) -> Result<SyncResult> {
    run_twin(cfg, None)
}

/// As [`twin_sync_run`], with `theta_2` driven by `f_1 + epsilon e^(-gamma t) g`.
pub fn force_perturbation_run(cfg: &TwinConfig, perturbation: &ForcePerturbation) -> Result<SyncResult> {
    if !(perturbation.gamma >= 0.0) {
        return Err(SqgError::param("gamma", format!("must be >= 0, got {}", perturbation.gamma)));
    }
    if !perturbation.epsilon.is_finite() {
        return Err(SqgError::param("epsilon", "must be finite"));
    }
    if perturbation.epsilon == 0.0 || perturbation.profile.is_zero() {
        return run_twin(cfg, None);
    }
    let domain = *cfg.params.domain();
    let modes: Vec<_> = perturbation
        .profile
        .modes()
        .iter()
        .map(|(k, c)| (*k, c * perturbation.epsilon))
        .collect();
    let extra = ForcingSpec::new(
        domain,
        &modes,
        Modulation::ExpDecay {
            rate: perturbation.gamma,
        },
    )?;
    run_twin(cfg, Some(extra))
}

fn run_twin(cfg: &TwinConfig, extra: Option<ForcingSpec>) -> Result<SyncResult> {
    cfg.validate()?;
    let params = &cfg.params;
    let domain = *params.domain();
    let shells = ShellSystem::new(domain);
    let (l, alpha) = (params.l, params.alpha);
    let theta1 = random_field(domain, cfg.seed1, &cfg.initial)?;
    let theta2 = random_field(domain, cfg.seed2, &cfg.initial)?;

    let fft = Fft2::new(domain.n());
    let dt = select_dt(cfg, &theta1, &theta2, &fft);
    let master = Integrator::new(params, dt)?;
    let slave = match &extra {
        Some(e) => Integrator::new(params, dt)?.with_extra_forcing(e.clone()),
        None => master.clone(),
    };
    let (rinfty, _) = compute_rinfty(&params.forcing, params.nu, alpha, params.p, &cfg.constants)?;
    let mask = cfg.projection.mask(&shells, cfg.q);

    let mut s1 = SimState::new(theta1);
    let mut s2 = SimState::new(theta2);
    let mut entry_time = None;
    let mut note_entry = |s: &SimState, linf: f64| {
        if entry_time.is_none() && linf <= rinfty {
            entry_time = Some(s.t);
        }
    };
    note_entry(&s1, fft.to_physical(&s1.theta).max_abs());
    let spin_steps = steps_for(cfg.spinup, dt);
    for i in 1..=spin_steps {
        s1 = master.step(&s1)?;
        s2 = slave.step(&s2)?;
        if i % cfg.cadence as u64 == 0 {
            note_entry(&s1, fft.to_physical(&s1.theta).max_abs());
        }
    }
    let slaving_start = s1.t;

    let gap_profile = extra
        .as_ref()
        .map(|e| force_gap_norm(&shells, e.spatial(), alpha, l))
        .transpose()?;
    let mut out = SyncResult {
        q: cfg.q,
        q_max: shells.q_max(),
        l,
        projection: cfg.projection,
        dt,
        slaving_start,
        entry_time: None,
        rinfty,
        times: Vec::new(),
        besov_w: Vec::new(),
        l2_w: Vec::new(),
        linf_theta1: Vec::new(),
        linf_theta2: Vec::new(),
        force_gap: Vec::new(),
        shell_w: Vec::new(),
        low_mode_residual: Vec::new(),
        fit: None,
        verdict: Verdict::Inconclusive,
    };
    let record = |s1: &SimState, s2: &SimState, out: &mut SyncResult| -> Result<f64> {
        let w = &s1.theta - &s2.theta;
        let norms = shells.shell_norms(&w, l)?;
        let linf1 = fft.to_physical(&s1.theta).max_abs();
        out.times.push(s1.t);
        out.besov_w.push(shells.besov_from_shell_norms(&norms, 0.0, l));
        out.l2_w.push(w.l2_norm());
        out.linf_theta1.push(linf1);
        out.linf_theta2.push(fft.to_physical(&s2.theta).max_abs());
        out.force_gap.push(match (&extra, gap_profile) {
            (Some(e), Some(g)) => e.modulation().value(s1.t).abs() * g,
            _ => 0.0,
        });
        out.low_mode_residual.push(lowmode_residual(&norms, cfg.q, l));
        out.shell_w.push(norms);
        Ok(linf1)
    };
    let linf = record(&s1, &s2, &mut out)?;
    note_entry(&s1, linf);

    let run_steps = steps_for(cfg.horizon, dt);
    for i in 1..=run_steps {
        s1 = master.step(&s1)?;
        s2 = slave.step(&s2)?;
        let mut coeffs = s2.theta.coeffs().to_vec();
        for ((c, &m), src) in coeffs.iter_mut().zip(&mask).zip(s1.theta.coeffs()) {
            if m {
                *c = *src;
            }
        }
        s2.theta = SpectralField::from_coeffs_unchecked(domain, coeffs);
        if i % cfg.cadence as u64 == 0 || i == run_steps {
            let linf = record(&s1, &s2, &mut out)?;
            note_entry(&s1, linf);
        }
    }
    out.entry_time = entry_time;
    out.verdict = Verdict::from_ratio(out.decay_ratio());
    out.fit = fit_sync_decay(&out);
    Ok(out)
}

/// Fit over the slaved run, from the first slaved sample down to the floor.
/// `None` when too few samples stay above the floor.
fn fit_sync_decay(r: &SyncResult) -> Option<DecayFit> {
    if r.besov_w.len() < 2 {
        return None;
    }
    fit_decay_rate(&r.times[1..], &r.besov_w[1..]).ok()
}

/// Inputs to the discrete Gronwall check `d xi/dt + phi xi <= psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayDiagnostics {
    pub times: Vec<f64>,
    /// `||w||_{B^0_{l,l}}^l`
    pub xi: Vec<f64>,
    pub phi: f64,
    pub psi: Vec<f64>,
}

impl DecayDiagnostics {
    /// `phi = (2 pi lambda_0)^alpha C nu / 2`; `psi` combines the recorded force
    /// gap and low-mode residual.
    pub fn from_sync(result: &SyncResult, params: &SqgParams, constants: &GronwallConstants) -> Self {
        let (l, alpha, nu) = (params.l, params.alpha, params.nu);
        let lambda0 = params.domain().lambda0();
        let phi = 0.5 * (2.0 * std::f64::consts::PI * lambda0).powf(alpha) * constants.c_decay * nu;
        let lambda = lambda0 * 2f64.powi(result.q);
        let gap_weight = (2.0 / (constants.c_decay * nu)).powf(l - 1.0) * l.powf(l - 2.0);
        let low_weight =
            constants.c_source * lambda.powf((l - 1.0) * (alpha - 1.0)) * result.rinfty * l * l;
        let psi = result
            .force_gap
            .iter()
            .zip(&result.low_mode_residual)
            .map(|(g, r)| gap_weight * g.powf(l) + low_weight * r)
            .collect();
        DecayDiagnostics {
            times: result.times.clone(),
            xi: result.besov_w.iter().map(|b| b.powf(l)).collect(),
            phi,
            psi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallOutcome {
    pub holds: bool,
    /// Largest `(xi_{n+1} - xi_n)/dt + phi xi_n - psi_n - slack max(xi)`; `<= 0` when it holds.
    pub max_violation: f64,
}

pub fn gronwall_check(diag: &DecayDiagnostics, dt: f64, slack: f64) -> Result<GronwallOutcome> {
    let n = diag.xi.len();
    if diag.psi.len() != n || diag.times.len() != n {
        return Err(SqgError::InsufficientData("xi, psi and times differ in length".into()));
    }
    if n < 2 {
        return Err(SqgError::InsufficientData("at least two samples are needed".into()));
    }
    if !(dt > 0.0) {
        return Err(SqgError::param("dt", format!("sampling interval must be > 0, got {dt}")));
    }
    let scale = diag.xi.iter().cloned().fold(0.0, f64::max);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n - 1 {
        let lhs = (diag.xi[i + 1] - diag.xi[i]) / dt + diag.phi * diag.xi[i];
        worst = worst.max(lhs - diag.psi[i] - slack * scale);
    }
    Ok(GronwallOutcome {
        holds: worst <= 0.0,
        max_violation: worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub q: i32,
    pub verdict: Verdict,
    pub decay_ratio: f64,
    pub fitted_rate: Option<f64>,
    pub fit_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub q_crit: Option<i32>,
    /// `Q` from the closed form with `c_thm = 1`.
    pub theoretical_q: i32,
    pub rinfty: f64,
    /// `(lambda_0 2^Q_crit)^(alpha - 1) nu / (l^2 R_inf)`.
    pub implied_c_thm: Option<f64>,
    /// Shells that failed to synchronize although a smaller one did.
    pub monotonicity_violations: Vec<i32>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Q,verdict,decay_ratio,fitted_rate,fit_r2\n");
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map_or_else(String::new, format_float);
            let verdict = serde_plain_verdict(r.verdict);
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.q,
                verdict,
                format_float(r.decay_ratio),
                opt(r.fitted_rate),
                opt(r.fit_r2)
            );
        }
        out
    }
}

fn serde_plain_verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Synchronized => "synchronized",
        Verdict::NotSynchronized => "not_synchronized",
        Verdict::Inconclusive => "inconclusive",
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(serde_plain_verdict(*self))
    }
}

/// Worker count from `SQG_THREADS`, else the machine's parallelism.
pub fn worker_count() -> usize {
    std::env::var("SQG_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        })
}

/// Runs [`twin_sync_run`] for every `Q` in `q_list` (ascending), one run per worker.
pub fn threshold_sweep(base: &TwinConfig, q_list: &[i32]) -> Result<SweepResult> {
    if q_list.is_empty() {
        return Err(SqgError::param("q_list", "at least one shell index is required"));
    }
    if q_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SqgError::param("q_list", "shell indices must be strictly ascending"));
    }
    base.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| SqgError::param("SQG_THREADS", e.to_string()))?;
    let runs: Vec<Result<SyncResult>> =
        pool.install(|| q_list.par_iter().map(|&q| twin_sync_run(&base.with_q(q))).collect());
    let mut rows = Vec::with_capacity(runs.len());
    for run in runs {
        let r = run?;
        rows.push(SweepRow {
            q: r.q,
            verdict: r.verdict,
            decay_ratio: r.decay_ratio(),
            fitted_rate: r.fit.as_ref().map(|f| f.rate),
            fit_r2: r.fit.as_ref().map(|f| f.r2),
        });
    }
    if rows.iter().all(|r| r.verdict == Verdict::Inconclusive) {
        return Err(SqgError::InsufficientData(
            "every sweep point is inconclusive; lengthen the horizon".into(),
        ));
    }
    let q_crit = rows
        .iter()
        .find(|r| r.verdict == Verdict::Synchronized)
        .map(|r| r.q);
    let monotonicity_violations = match q_crit {
        Some(qc) => rows
            .iter()
            .filter(|r| r.q > qc && r.verdict != Verdict::Synchronized)
            .map(|r| r.q)
            .collect(),
        None => Vec::new(),
    };
    let p = &base.params;
    let (rinfty, _) = compute_rinfty(&p.forcing, p.nu, p.alpha, p.p, &base.constants)?;
    let lambda0 = p.domain().lambda0();
    let unit = CalibrationConstants {
        c_thm: 1.0,
        ..base.constants
    };
    let theoretical_q = compute_determining_q(rinfty, p.nu, p.alpha, p.l, &unit, lambda0)?.q;
    let implied_c_thm = q_crit.and_then(|qc| {
        (rinfty > 0.0).then(|| {
            (lambda0 * 2f64.powi(qc)).powf(p.alpha - 1.0) * p.nu / (p.l * p.l * rinfty)
        })
    });
    Ok(SweepResult {
        rows,
        q_crit,
        theoretical_q,
        rinfty,
        implied_c_thm,
        monotonicity_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Domain;
    use num_complex::Complex64;

    #[test]
    fn exact_exponential_fit() {
        let t: Vec<f64> = (0..31).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| 5.0 * (-2.0 * t).exp()).collect();
        let fit = fit_decay_rate(&t, &v).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        // scale invariance
        let w: Vec<f64> = v.iter().map(|x| x * 1e7).collect();
        let g = fit_decay_rate(&t, &w).unwrap();
        assert!((g.rate - fit.rate).abs() < 1e-12);
    }

    #[test]
    fn constant_and_degenerate_fits() {
        let t: Vec<f64> = (0..12).map(f64::from).collect();
        let fit = fit_decay_rate(&t, &[3.0; 12]).unwrap();
        assert_eq!((fit.rate, fit.r2), (0.0, 0.0));
        assert!(fit_decay_rate(&t[..9], &[1.0; 9]).is_err());
        let mut v = vec![1.0; 12];
        v[4] = -1.0;
        assert!(fit_decay_rate(&t, &v).is_err());
        // cut at the floor leaves too few samples
        let v: Vec<f64> = t.iter().map(|t| (-10.0 * t).exp()).collect();
        let err = fit_decay_rate(&t, &v).unwrap_err().to_string();
        assert!(err.contains("floor"), "{err}");
    }

    #[test]
    fn noisy_fit() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.05).collect();
        let v: Vec<f64> = t
            .iter()
            .map(|t| (-1.5 * t).exp() * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let fit = fit_decay_rate(&t, &v).unwrap();
        assert!((fit.rate - 1.5).abs() < 0.05 * 1.5);
        assert!(fit.r2 > 0.95);
    }

    #[test]
    fn gronwall_examples() {
        let dt = 1e-3;
        let times: Vec<f64> = (0..2000).map(|i| i as f64 * dt).collect();
        let decay = DecayDiagnostics {
            times: times.clone(),
            xi: times.iter().map(|t| (-t).exp()).collect(),
            phi: 1.0,
            psi: vec![0.0; times.len()],
        };
        // the forward difference is exact up to O(dt)
        let ok = gronwall_check(&decay, dt, dt).unwrap();
        assert!(ok.holds, "{ok:?}");
        assert!(!gronwall_check(&decay, dt, 0.0).unwrap().holds);
        let grow = DecayDiagnostics {
            xi: times.iter().map(|t| t.exp()).collect(),
            ..decay.clone()
        };
        assert!(!gronwall_check(&grow, dt, 1e-3).unwrap().holds);
        let short = DecayDiagnostics {
            psi: vec![0.0; 3],
            ..decay
        };
        assert!(gronwall_check(&short, dt, 0.0).is_err());
    }

    #[test]
    fn verdict_thresholds() {
        assert_eq!(Verdict::from_ratio(1e-6), Verdict::Synchronized);
        assert_eq!(Verdict::from_ratio(1e-3), Verdict::Inconclusive);
        assert_eq!(Verdict::from_ratio(0.1), Verdict::NotSynchronized);
        assert_eq!(Verdict::from_ratio(0.0), Verdict::Synchronized);
    }

    #[test]
    fn masks() {
        let d = Domain::new(1.0, 32).unwrap();
        let shells = ShellSystem::new(d);
        let mags = d.magnitudes();
        let smooth = ProjectionKind::SmoothLp.mask(&shells, 1);
        let sharp = ProjectionKind::SharpTruncation.mask(&shells, 1);
        for ((m, a), b) in mags.iter().zip(&smooth).zip(&sharp) {
            assert_eq!(*a, *m < 4.0);
            assert_eq!(*b, *m <= 2.0);
        }
    }

    pub(crate) fn small_config(seed2: u64) -> TwinConfig {
        let d = Domain::new(1.0, 32).unwrap();
        let a = Complex64::new(1.0, 0.0);
        let force = ForcingSpec::new(d, &[((1, 0), a), ((0, 1), a), ((1, 1), a * 0.5)], Modulation::Constant).unwrap();
        TwinConfig {
            params: SqgParams::new(0.5, 1.5, 4.0, 4.0, force).unwrap(),
            q: 0,
            projection: ProjectionKind::SmoothLp,
            seed1: 1,
            seed2,
            initial: RandomSpectrum::new(1.0, (1.0, 8.0)).with_amplitude(0.5),
            spinup: 0.2,
            horizon: 0.5,
            cadence: 2,
            dt: Some(5e-3),
            dt_max: 1e-2,
            constants: CalibrationConstants::default(),
            gronwall: GronwallConstants::default(),
        }
    }

    #[test]
    fn identical_data_stay_identical() {
        let r = twin_sync_run(&small_config(1)).unwrap();
        assert!(r.besov_w.iter().all(|v| *v == 0.0));
        assert_eq!(r.verdict, Verdict::Synchronized);
    }

    #[test]
    fn full_slaving_synchronizes_in_one_step() {
        let cfg = small_config(2);
        let q_max = ShellSystem::new(*cfg.params.domain()).q_max();
        let r = twin_sync_run(&cfg.with_q(q_max)).unwrap();
        assert!(r.besov_w[0] > 1e-2);
        assert!(r.besov_w[1..].iter().all(|v| *v <= 1e-13), "{:?}", &r.besov_w[..3]);
    }

    #[test]
    fn smooth_slaving_zeroes_the_low_pass_of_w() {
        let cfg = small_config(2).with_q(1);
        let r = twin_sync_run(&cfg).unwrap();
        assert!(r.low_mode_residual[1..].iter().all(|v| *v <= 1e-13));
        let sharp = twin_sync_run(&TwinConfig {
            projection: ProjectionKind::SharpTruncation,
            ..cfg
        })
        .unwrap();
        for row in &sharp.shell_w[1..] {
            let top = row.iter().cloned().fold(0.0, f64::max);
            // shells q <= Q - 1 = 0, i.e. the first two entries
            assert!(row[0] <= 1e-12 * top && row[1] <= 1e-12 * top, "{row:?}");
        }
    }

    #[test]
    fn zero_perturbation_reduces_to_twin_run() {
        let cfg = small_config(2);
        let d = *cfg.params.domain();
        let profile = ForcingSpec::new(d, &[((2, 1), Complex64::new(1.0, 0.0))], Modulation::Constant).unwrap();
        let base = twin_sync_run(&cfg).unwrap();
        let zero = force_perturbation_run(&cfg, &ForcePerturbation { epsilon: 0.0, gamma: 1.0, profile: profile.clone() }).unwrap();
        assert_eq!(base.to_csv(), zero.to_csv());
        let pert = force_perturbation_run(&cfg, &ForcePerturbation { epsilon: 0.1, gamma: 1.0, profile: profile.clone() }).unwrap();
        let shells = ShellSystem::new(d);
        let g = force_gap_norm(&shells, profile.spatial(), 1.5, 4.0).unwrap();
        for (t, gap) in pert.times.iter().zip(&pert.force_gap) {
            let expected = 0.1 * (-t).exp() * g;
            assert!((gap - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn csv_layout() {
        let r = twin_sync_run(&small_config(2)).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,besov_w,l2_w,linf_theta1,linf_theta2,force_gap,shell_q-1_w,shell_q0_w,shell_q1_w,shell_q2_w,shell_q3_w"
        );
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(first[1].to_bits(), r.besov_w[0].to_bits());
        assert_eq!(csv.lines().count(), r.times.len() + 1);
    }
}
