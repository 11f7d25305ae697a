//! Integrating-factor RK4 for `d theta/dt = -nu Lambda^alpha theta + f - u . grad theta`.
//!
//! The dissipation is diagonal in Fourier space and is propagated exactly by
//! `exp(-nu (2 pi |k| / L)^alpha dt)`; forcing and transport are the explicit
//! RK4 stages.

use std::sync::Mutex;

use num_complex::Complex64;

use crate::error::{Result, SqgError};
use crate::operators::{riesz_perp, Advection, ForcingSpec};
use crate::spectral::{Domain, Fft2, SpectralField};

/// Physical parameters of the forced SQG equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SqgParams {
    pub nu: f64,
    pub alpha: f64,
    pub p: f64,
    pub l: f64,
    pub forcing: ForcingSpec,
}

impl SqgParams {
    pub fn new(nu: f64, alpha: f64, p: f64, l: f64, forcing: ForcingSpec) -> Result<Self> {
        let params = SqgParams {
            nu,
            alpha,
            p,
            l,
            forcing,
        };
        params.validate()?;
        Ok(params)
    }

    /// Subcritical regime `1 < alpha < 2`, `nu > 0`, `p > 2/alpha`, `l >= 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(SqgError::param("nu", format!("viscosity must be > 0, got {}", self.nu)));
        }
        if !(self.alpha > 1.0 && self.alpha < 2.0) {
            return Err(SqgError::param(
                "alpha",
                format!("dissipation order must lie in (1, 2), got {}", self.alpha),
            ));
        }
        if !(self.p > 2.0 / self.alpha) {
            return Err(SqgError::param(
                "p",
                format!(
                    "force exponent must exceed 2/alpha = {}, got {}",
                    2.0 / self.alpha,
                    self.p
                ),
            ));
        }
        if !(self.l >= 1.0) {
            return Err(SqgError::param("l", format!("Besov exponent must be >= 1, got {}", self.l)));
        }
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        self.forcing.spatial().domain()
    }

    /// Dissipation symbol `nu (2 pi |k| / L)^alpha` at every flat index.
    pub fn dissipation_symbol(&self) -> Vec<f64> {
        self.domain()
            .zygmund_symbol()
            .into_iter()
            .map(|m| self.nu * m.powf(self.alpha))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub theta: SpectralField,
    pub t: f64,
    pub step_count: u64,
}

impl SimState {
    pub fn new(theta: SpectralField) -> Self {
        SimState {
            theta,
            t: 0.0,
            step_count: 0,
        }
    }
}

/// Fixed-step IF-RK4 integrator. Holds the exponential factors for one `dt`.
#[derive(Debug, Clone)]
pub struct Integrator {
    params: SqgParams,
    extra_forcing: Option<ForcingSpec>,
    dt: f64,
    decay_full: Vec<f64>,
    decay_half: Vec<f64>,
    advection: Advection,
    work: StageBuffers,
}

/// Reused RK stage slopes; clones start with their own.
#[derive(Debug, Default)]
struct StageBuffers(Mutex<[Vec<Complex64>; 4]>);

impl Clone for StageBuffers {
    fn clone(&self) -> Self {
        StageBuffers::default()
    }
}

impl Integrator {
    pub fn new(params: &SqgParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SqgError::param("dt", format!("time step must be > 0, got {dt}")));
        }
        let symbol = params.dissipation_symbol();
        Ok(Integrator {
            extra_forcing: None,
            dt,
            decay_full: symbol.iter().map(|s| (-s * dt).exp()).collect(),
            decay_half: symbol.iter().map(|s| (-s * dt * 0.5).exp()).collect(),
            advection: Advection::new(*params.domain()),
            work: StageBuffers::default(),
            params: params.clone(),
        })
    }

    /// Adds a second separable force on top of `params.forcing`.
    pub fn with_extra_forcing(mut self, forcing: ForcingSpec) -> Self {
        self.extra_forcing = Some(forcing);
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &SqgParams {
        &self.params
    }

    pub fn fft(&self) -> &Fft2 {
        self.advection.fft()
    }

    /// Total force at time `t`.
    pub fn forcing_at(&self, t: f64) -> SpectralField {
        let base = self.params.forcing.eval(t).into_owned();
        match &self.extra_forcing {
            Some(extra) => &base + extra.eval(t).as_ref(),
            None => base,
        }
    }

    /// `f(t) - u . grad theta`, written into `out`.
    fn rhs(&self, theta: &[Complex64], t: f64, out: &mut [Complex64]) {
        self.advection.apply_into(theta, out);
        let base = &self.params.forcing;
        let h = base.modulation().value(t);
        for (o, g) in out.iter_mut().zip(base.spatial().coeffs()) {
            *o = g * h - *o;
        }
        if let Some(extra) = &self.extra_forcing {
            let h = extra.modulation().value(t);
            for (o, g) in out.iter_mut().zip(extra.spatial().coeffs()) {
                *o += g * h;
            }
        }
    }

    /// One IF-RK4 step of length `dt`.
    pub fn step(&self, state: &SimState) -> Result<SimState> {
        let (dt, t) = (self.dt, state.t);
        let (e1, e2) = (&self.decay_full, &self.decay_half);
        let u = state.theta.coeffs();
        let len = u.len();
        let mut guard = self.work.0.lock().unwrap_or_else(|e| e.into_inner());
        let [k1, k2, k3, k4] = &mut *guard;
        for k in [&mut *k1, &mut *k2, &mut *k3, &mut *k4] {
            k.resize(len, Complex64::new(0.0, 0.0));
        }
        let mut stage = vec![Complex64::new(0.0, 0.0); len];

        self.rhs(u, t, k1);
        for j in 0..len {
            stage[j] = (u[j] + k1[j] * (0.5 * dt)) * e2[j];
        }
        self.rhs(&stage, t + 0.5 * dt, k2);
        for j in 0..len {
            stage[j] = u[j] * e2[j] + k2[j] * (0.5 * dt);
        }
        self.rhs(&stage, t + 0.5 * dt, k3);
        for j in 0..len {
            stage[j] = u[j] * e1[j] + k3[j] * (dt * e2[j]);
        }
        self.rhs(&stage, t + dt, k4);

        for j in 0..len {
            stage[j] = u[j] * e1[j]
                + (k1[j] * e1[j] + (k2[j] + k3[j]) * (2.0 * e2[j]) + k4[j]) * (dt / 6.0);
        }
        let next = stage;
        let t_next = t + dt;
        if let Some(bad) = next.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            let (k1, k2) = self.params.domain().wavevector(bad);
            return Err(SqgError::BlowUp {
                t: t_next,
                what: format!("non-finite coefficient at k = ({k1}, {k2})"),
            });
        }
        Ok(SimState {
            theta: SpectralField::from_coeffs_unchecked(*self.params.domain(), next),
            t: t_next,
            step_count: state.step_count + 1,
        })
    }
}

/// One IF-RK4 step; builds a throwaway [`Integrator`].
pub fn step(state: &SimState, params: &SqgParams, dt: f64) -> Result<SimState> {
    Integrator::new(params, dt)?.step(state)
}

/// CFL step `0.5 (L/N) / max|u|`, capped at `dt_max`.
pub fn cfl_dt(theta: &SpectralField, dt_max: f64) -> f64 {
    let fft = Fft2::new(theta.domain().n());
    cfl_dt_with(theta, dt_max, &fft)
}

pub fn cfl_dt_with(theta: &SpectralField, dt_max: f64, fft: &Fft2) -> f64 {
    const SAFETY: f64 = 0.5;
    let speed = riesz_perp(theta).max_speed(fft);
    (SAFETY * theta.domain().spacing() / speed.max(1e-30)).min(dt_max)
}

/// Time-stepping controls for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    /// Requested step; `None` uses the CFL step of the initial state.
    pub dt: Option<f64>,
    pub dt_max: f64,
    /// Steps between samples and hook calls.
    pub cadence: usize,
    /// Re-evaluate the CFL step every this many steps (the step only shrinks).
    pub cfl_recheck: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            dt: None,
            dt_max: 1e-2,
            cadence: 10,
            cfl_recheck: None,
        }
    }
}

/// Scalar diagnostics recorded at each sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub step: u64,
    /// `||theta||_2`
    pub l2: f64,
    /// `||theta||_inf` on the grid
    pub linf: f64,
    /// `||Lambda^(alpha/2) theta||_2^2`
    pub dissipation: f64,
    /// `(f, theta)`
    pub force_work: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub final_state: SimState,
    pub samples: Vec<Sample>,
    /// Step actually used (the last one, if the CFL recheck shrank it).
    pub dt: f64,
}

impl Trajectory {
    pub fn energy_series(&self) -> EnergySeries {
        EnergySeries {
            times: self.samples.iter().map(|s| s.t).collect(),
            l2_sq: self.samples.iter().map(|s| s.l2 * s.l2).collect(),
            dissipation: self.samples.iter().map(|s| s.dissipation).collect(),
            force_work: self.samples.iter().map(|s| s.force_work).collect(),
        }
    }
}

fn sample(integrator: &Integrator, state: &SimState, symbol: &[f64]) -> Result<Sample> {
    let theta = &state.theta;
    let length = theta.domain().length();
    let dissipation: f64 = theta
        .coeffs()
        .iter()
        .zip(symbol)
        .map(|(c, m)| m * c.norm_sqr())
        .sum::<f64>()
        * length
        * length;
    Ok(Sample {
        t: state.t,
        step: state.step_count,
        l2: theta.l2_norm(),
        linf: integrator.fft().to_physical(theta).max_abs(),
        dissipation,
        force_work: integrator.forcing_at(state.t).inner_product(theta)?,
    })
}

/// Advances `initial` to `t = horizon`, sampling at `t = 0` and every
/// `cadence` steps (plus the final step). `hook` runs at every sample after
/// the initial one.
pub fn simulate(
    initial: &SpectralField,
    params: &SqgParams,
    horizon: f64,
    config: &SimulationConfig,
    hook: &mut dyn FnMut(&SimState, &Sample),
) -> Result<Trajectory> {
    params.validate()?;
    if initial.domain() != params.domain() {
        return Err(SqgError::DomainMismatch);
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(SqgError::param("horizon", format!("must be >= 0, got {horizon}")));
    }
    if config.cadence == 0 {
        return Err(SqgError::param("cadence", "must be at least one step"));
    }
    let fft = Fft2::new(initial.domain().n());
    let requested = match config.dt {
        Some(dt) => dt,
        None => cfl_dt_with(initial, config.dt_max, &fft),
    };
    // power of alpha/2 of the Zygmund symbol, for the dissipation diagnostic
    let symbol: Vec<f64> = initial
        .domain()
        .zygmund_symbol()
        .into_iter()
        .map(|m| m.powf(params.alpha))
        .collect();

    let mut state = SimState::new(initial.clone());
    let mut steps_left = (horizon / requested - 1e-9).ceil().max(0.0) as u64;
    let mut integrator = Integrator::new(params, if steps_left > 0 { horizon / steps_left as f64 } else { requested })?;
    let mut samples = vec![sample(&integrator, &state, &symbol)?];

    let mut since_sample = 0usize;
    while steps_left > 0 {
        state = integrator.step(&state)?;
        steps_left -= 1;
        since_sample += 1;
        if steps_left == 0 {
            // land exactly on the horizon
            state.t = horizon;
        }
        if since_sample == config.cadence || steps_left == 0 {
            since_sample = 0;
            let s = sample(&integrator, &state, &symbol)?;
            hook(&state, &s);
            samples.push(s);
        }
        if let Some(every) = config.cfl_recheck {
            if every > 0 && state.step_count.is_multiple_of(every as u64) && steps_left > 0 {
                let cfl = cfl_dt_with(&state.theta, config.dt_max, &fft);
                if cfl < integrator.dt() {
                    let remaining = horizon - state.t;
                    steps_left = (remaining / cfl).ceil().max(1.0) as u64;
                    integrator = Integrator::new(params, remaining / steps_left as f64)?;
                }
            }
        }
    }
    Ok(Trajectory {
        final_state: state,
        samples,
        dt: integrator.dt(),
    })
}

/// Per-sample series entering the L^2 energy balance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    /// `||theta||_2^2`
    pub l2_sq: Vec<f64>,
    /// `||Lambda^(alpha/2) theta||_2^2`
    pub dissipation: Vec<f64>,
    /// `(f, theta)`
    pub force_work: Vec<f64>,
}

/// Largest relative residual of
/// `||theta(t)||^2 - ||theta(0)||^2 + 2 nu int D - 2 int (f, theta)` over the
/// samples. Normalised by `||theta(0)||^2`, or by the largest energy when the
/// initial state is zero. Time integrals use [`cumulative_integral`].
pub fn energy_budget(series: &EnergySeries, nu: f64) -> Result<f64> {
    let n = series.times.len();
    if n == 0 {
        return Err(SqgError::InsufficientData("empty energy series".into()));
    }
    if series.l2_sq.len() != n || series.dissipation.len() != n || series.force_work.len() != n {
        return Err(SqgError::InsufficientData("energy series columns differ in length".into()));
    }
    let rate: Vec<f64> = series
        .dissipation
        .iter()
        .zip(&series.force_work)
        .map(|(d, w)| -2.0 * nu * d + 2.0 * w)
        .collect();
    let integral = cumulative_integral(&series.times, &rate)?;
    let e0 = series.l2_sq[0];
    let scale = if e0 > 0.0 {
        e0
    } else {
        series.l2_sq.iter().cloned().fold(0.0, f64::max)
    };
    let worst = series
        .l2_sq
        .iter()
        .zip(&integral)
        .map(|(e, i)| (e - e0 - i).abs())
        .fold(0.0, f64::max);
    if worst == 0.0 {
        return Ok(0.0);
    }
    Ok(worst / scale)
}

/// Running integral `int_{t_0}^{t_i} y dt` at every sample.
///
/// Each interval is integrated exactly against the degree-5 Lagrange
/// interpolant through the six nearest samples (fewer near short series), so
/// the error is sixth order in the sample spacing. Sample times must be
/// strictly increasing but need not be uniform.
pub fn cumulative_integral(times: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    const STENCIL: usize = 6;
    // 3-point Gauss-Legendre on [-1, 1], exact for the quintic interpolant
    const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

    let n = times.len();
    if values.len() != n {
        return Err(SqgError::InsufficientData("times and values differ in length".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SqgError::InsufficientData("sample times must increase strictly".into()));
    }
    let width = STENCIL.min(n);
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    if n > 0 {
        out.push(0.0);
    }
    for i in 0..n.saturating_sub(1) {
        // stencil centred on [t_i, t_{i+1}], clamped to the series
        let start = (i + 1).saturating_sub(width / 2).min(n - width);
        let nodes = &times[start..start + width];
        let ys = &values[start..start + width];
        let (a, b) = (times[i], times[i + 1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut piece = 0.0;
        for (x, w) in NODES.iter().zip(WEIGHTS) {
            piece += w * lagrange(nodes, ys, mid + half * x);
        }
        acc += half * piece;
        out.push(acc);
    }
    Ok(out)
}

fn lagrange(nodes: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut sum = 0.0;
    for (j, (xj, yj)) in nodes.iter().zip(ys).enumerate() {
        let mut basis = 1.0;
        for (m, xm) in nodes.iter().enumerate() {
            if m != j {
                basis *= (x - xm) / (xj - xm);
            }
        }
        sum += yj * basis;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{lambda_pow, Modulation};
    use std::f64::consts::PI;

    fn unit(n: usize) -> Domain {
        Domain::new(1.0, n).unwrap()
    }

    fn cos1(d: Domain) -> SpectralField {
        SpectralField::from_modes(d, &[((1, 0), Complex64::new(0.5, 0.0))]).unwrap()
    }

    fn unforced(d: Domain, nu: f64, alpha: f64) -> SqgParams {
        SqgParams::new(nu, alpha, 4.0, 4.0, ForcingSpec::zero(d)).unwrap()
    }

    #[test]
    fn params_validation() {
        let d = unit(16);
        let f = ForcingSpec::zero(d);
        assert!(SqgParams::new(1.0, 2.5, 4.0, 4.0, f.clone()).is_err());
        assert!(SqgParams::new(1.0, 1.0, 4.0, 4.0, f.clone()).is_err());
        assert!(SqgParams::new(0.0, 1.5, 4.0, 4.0, f.clone()).is_err());
        assert!(SqgParams::new(1.0, 1.5, 1.3, 4.0, f.clone()).is_err());
        assert!(SqgParams::new(1.0, 1.5, 1.4, 4.0, f).is_ok());
    }

    #[test]
    fn single_mode_decays_at_the_dissipation_rate() {
        let d = unit(32);
        let params = unforced(d, 1.0, 1.5);
        let integrator = Integrator::new(&params, 1e-3).unwrap();
        let mut state = SimState::new(cos1(d));
        for _ in 0..10 {
            state = integrator.step(&state).unwrap();
        }
        let amplitude = 2.0 * state.theta.coeff(1, 0).re;
        // exp(-(2 pi)^1.5 * 0.01)
        assert!((amplitude - 0.854280145758232).abs() < 1e-12, "{amplitude}");
    }

    #[test]
    fn zero_stays_zero() {
        let d = unit(16);
        let params = unforced(d, 1.0, 1.5);
        let state = step(&SimState::new(SpectralField::zeros(d)), &params, 0.01).unwrap();
        assert!(state.theta.is_zero());
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn manufactured_steady_state_is_preserved() {
        let d = unit(32);
        let theta = SpectralField::from_modes(
            d,
            &[((1, 0), Complex64::new(0.0, -0.5)), ((0, 1), Complex64::new(0.5, 0.0))],
        )
        .unwrap();
        let (nu, alpha) = (0.5, 1.5);
        let f = lambda_pow(&theta, alpha).scale(nu);
        let modes: Vec<_> = [(1i64, 0i64), (0, 1)]
            .iter()
            .map(|&(a, b)| ((a, b), f.coeff(a, b)))
            .collect();
        let forcing = ForcingSpec::new(d, &modes, Modulation::Constant).unwrap();
        let params = SqgParams::new(nu, alpha, 4.0, 4.0, forcing).unwrap();
        let integrator = Integrator::new(&params, 5e-3).unwrap();
        let mut state = SimState::new(theta.clone());
        for _ in 0..200 {
            state = integrator.step(&state).unwrap();
        }
        // IF-RK4 is not exact for a constant source; the offset is O(dt^4)
        let drift = (&state.theta - &theta).max_abs_coeff();
        assert!(drift < 1e-8, "drift {drift}");
    }

    #[test]
    fn cfl_examples() {
        let d = unit(64);
        assert_eq!(cfl_dt(&SpectralField::zeros(d), 0.01), 0.01);
        // max |u| = 1 for theta = cos(2 pi x1): u = (0, -sin 2 pi x1)
        let dt = cfl_dt(&cos1(d), 1.0);
        assert!((dt - 0.0078125).abs() < 1e-15, "{dt}");
        let dt128 = cfl_dt(&cos1(unit(128)), 1.0);
        assert!((dt128 - dt / 2.0).abs() < 1e-15);
    }

    #[test]
    fn horizon_zero_returns_initial_without_hooks() {
        let d = unit(16);
        let params = unforced(d, 1.0, 1.5);
        let mut calls = 0;
        let traj = simulate(&cos1(d), &params, 0.0, &SimulationConfig::default(), &mut |_, _| calls += 1).unwrap();
        assert_eq!(calls, 0);
        assert_eq!(traj.final_state.theta, cos1(d));
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn simulate_lands_on_horizon_and_calls_hooks_at_cadence() {
        let d = unit(16);
        let params = unforced(d, 1.0, 1.5);
        let cfg = SimulationConfig {
            dt: Some(0.003),
            cadence: 4,
            ..Default::default()
        };
        let mut times = Vec::new();
        let traj = simulate(&cos1(d), &params, 0.1, &cfg, &mut |s, _| times.push(s.t)).unwrap();
        // ceil(0.1 / 0.003) = 34 steps, samples after 4, 8, ..., 32 and the final one
        assert_eq!(traj.final_state.step_count, 34);
        assert_eq!(traj.final_state.t, 0.1);
        assert_eq!(times.len(), 9);
        assert_eq!(traj.samples.len(), 10);
    }

    #[test]
    fn energy_budget_edge_cases() {
        assert!(energy_budget(&EnergySeries::default(), 1.0).is_err());
        let zeros = EnergySeries {
            times: vec![0.0, 1.0, 2.0],
            l2_sq: vec![0.0; 3],
            dissipation: vec![0.0; 3],
            force_work: vec![0.0; 3],
        };
        assert_eq!(energy_budget(&zeros, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cumulative_integral_is_high_order() {
        assert_eq!(cumulative_integral(&[], &[]).unwrap(), Vec::<f64>::new());
        assert_eq!(cumulative_integral(&[0.0, 2.0], &[1.0, 3.0]).unwrap(), vec![0.0, 4.0]);
        assert!(cumulative_integral(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        // quintics are integrated exactly, on a non-uniform grid
        let t: Vec<f64> = (0..12).map(|i| (i as f64 * 0.1).powf(1.3)).collect();
        let y: Vec<f64> = t.iter().map(|x| 1.0 - 2.0 * x + x.powi(5)).collect();
        let got = cumulative_integral(&t, &y).unwrap();
        for (x, g) in t.iter().zip(&got) {
            let exact = x - x * x + x.powi(6) / 6.0;
            assert!((g - exact).abs() < 1e-13, "{g} vs {exact}");
        }
        // exp(-30 t) at h = 1e-3
        let t: Vec<f64> = (0..=200).map(|i| i as f64 * 1e-3).collect();
        let y: Vec<f64> = t.iter().map(|x| (-30.0 * x).exp()).collect();
        let got = cumulative_integral(&t, &y).unwrap();
        let exact = (1.0 - (-30.0 * 0.2f64).exp()) / 30.0;
        assert!((got[200] - exact).abs() < 1e-13);
    }

    #[test]
    fn fourth_order_in_time() {
        // theta(0) = 0 under a constant single-mode source: theta = (1 - e^(-s t)) / s * g
        let d = unit(16);
        let g = cos1(d);
        let half = Complex64::new(0.5, 0.0);
        let force = ForcingSpec::new(d, &[((1, 0), half), ((-1, 0), half)], Modulation::Constant).unwrap();
        let params = SqgParams::new(1.0, 1.5, 4.0, 4.0, force).unwrap();
        let s = (2.0 * PI).powf(1.5);
        let horizon = 0.4;
        let exact = g.scale(-(-s * horizon).exp_m1() / s);
        let errors: Vec<f64> = [0.04, 0.02, 0.01, 0.005]
            .iter()
            .map(|&dt| {
                let cfg = SimulationConfig { dt: Some(dt), dt_max: 1.0, cadence: 1000, cfl_recheck: None };
                let traj = simulate(&SpectralField::zeros(d), &params, horizon, &cfg, &mut |_, _| {}).unwrap();
                (&traj.final_state.theta - &exact).max_abs_coeff()
            })
            .collect();
        for w in errors.windows(2) {
            assert!(w[0] / w[1] >= 8.0, "{errors:?}");
        }
        assert!(errors[3] > 1e-14, "{errors:?}");
    }

    #[test]
    fn unforced_decay_budget() {
        let d = unit(32);
        let params = unforced(d, 1.0, 1.5);
        let cfg = SimulationConfig {
            dt: Some(1e-3),
            cadence: 1,
            ..Default::default()
        };
        let traj = simulate(&cos1(d), &params, 0.2, &cfg, &mut |_, _| {}).unwrap();
        let residual = energy_budget(&traj.energy_series(), params.nu).unwrap();
        assert!(residual <= 1e-8, "{residual}");
        // dissipativity
        for w in traj.samples.windows(2) {
            assert!(w[1].l2 < w[0].l2);
        }
        let rate = (2.0 * PI).powf(1.5);
        let last = traj.samples.last().unwrap();
        assert!(last.l2 <= 0.5f64.sqrt() * (-rate * last.t).exp() * (1.0 + 1e-6));
    }
}
