//! Closed-form bounds: absorbing radii, transient and decay envelopes, and the
//! determining wavenumber.
//!
//! Every unnamed absolute constant is carried in [`CalibrationConstants`] and
//! defaults to 1.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::operators::{lambda_pow, ForcingSpec};
use crate::timestepper::{SqgParams, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConstants {
    pub c_infty: f64,
    pub c_thm: f64,
    pub c_linfty: f64,
}

impl Default for CalibrationConstants {
    fn default() -> Self {
        CalibrationConstants {
            c_infty: 1.0,
            c_thm: 1.0,
            c_linfty: 1.0,
        }
    }
}

impl CalibrationConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_infty", self.c_infty),
            ("c_thm", self.c_thm),
            ("c_linfty", self.c_linfty),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SqgError::param(name, format!("constant must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsorbingRadii {
    pub r2: f64,
    pub rinfty_sharp: f64,
    pub rinfty_simplified: f64,
    /// Force bound `F`.
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeterminingScale {
    pub lambda: f64,
    pub q: i32,
    pub l: f64,
    pub constants: CalibrationConstants,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(SqgError::param(
            "alpha",
            format!("dissipation order must lie in (1, 2), got {alpha}"),
        ));
    }
    Ok(())
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(SqgError::param("nu", format!("viscosity must be > 0, got {nu}")));
    }
    Ok(())
}

/// Smallest admissible Besov exponent is exclusive: `l > alpha / (alpha - 1)`.
pub fn l_threshold(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha / (alpha - 1.0))
}

pub fn admissible_l(alpha: f64, l: f64) -> Result<bool> {
    Ok(l > l_threshold(alpha)?)
}

/// Exponents `(a, b)` with `a + b = 1` in `(F/nu)^a X^b`; `p = inf` takes the limit.
fn interpolation_exponents(alpha: f64, p: f64) -> (f64, f64) {
    if p.is_infinite() {
        (1.0 / (1.0 + alpha), alpha / (1.0 + alpha))
    } else {
        let denom = p + p * alpha - 2.0;
        (p / denom, (p * alpha - 2.0) / denom)
    }
}

fn check_p(alpha: f64, p: f64) -> Result<()> {
    if !(p > 2.0 / alpha) {
        return Err(SqgError::param(
            "p",
            format!("force exponent must exceed 2/alpha = {}, got {p}", 2.0 / alpha),
        ));
    }
    Ok(())
}

/// `||Lambda^(-alpha/2) g||_2 sup|h|`.
pub fn negative_sobolev_norm(f: &ForcingSpec, alpha: f64) -> f64 {
    lambda_pow(f.spatial(), -0.5 * alpha).l2_norm() * f.modulation().sup()
}

/// `R_2 = ||Lambda^(-alpha/2) f||_2 / (nu lambda_0^(alpha/2))`.
pub fn compute_r2(f: &ForcingSpec, nu: f64, alpha: f64) -> Result<f64> {
    check_nu(nu)?;
    check_alpha(alpha)?;
    let lambda0 = f.spatial().domain().lambda0();
    Ok(negative_sobolev_norm(f, alpha) / (nu * lambda0.powf(0.5 * alpha)))
}

/// `(sharp, simplified)` L-infinity absorbing radii.
pub fn compute_rinfty(
    f: &ForcingSpec,
    nu: f64,
    alpha: f64,
    p: f64,
    constants: &CalibrationConstants,
) -> Result<(f64, f64)> {
    let r = absorbing_radii(f, nu, alpha, p, constants)?;
    Ok((r.rinfty_sharp, r.rinfty_simplified))
}

pub fn absorbing_radii(
    f: &ForcingSpec,
    nu: f64,
    alpha: f64,
    p: f64,
    constants: &CalibrationConstants,
) -> Result<AbsorbingRadii> {
    check_p(alpha, p)?;
    constants.validate()?;
    let r2 = compute_r2(f, nu, alpha)?;
    let big_f = f.bound(p)?;
    let lambda0 = f.spatial().domain().lambda0();
    let (a, b) = interpolation_exponents(alpha, p);
    let sharp = constants.c_infty * (big_f / nu).powf(a) * r2.powf(b);
    let decay = if p.is_infinite() { -alpha } else { 2.0 / p - alpha };
    let simplified = constants.c_infty * lambda0.powf(decay) * big_f / nu;
    Ok(AbsorbingRadii {
        r2,
        rinfty_sharp: sharp,
        rinfty_simplified: simplified,
        f: big_f,
    })
}

/// `Lambda = (c_thm l^2 R_inf / nu)^(1/(alpha-1))` and the smallest `Q >= 0`
/// with `lambda_0 2^Q >= Lambda`.
pub fn compute_determining_q(
    rinfty: f64,
    nu: f64,
    alpha: f64,
    l: f64,
    constants: &CalibrationConstants,
    lambda0: f64,
) -> Result<DeterminingScale> {
    check_nu(nu)?;
    constants.validate()?;
    if !admissible_l(alpha, l)? {
        return Err(SqgError::param(
            "l",
            format!(
                "Besov exponent must satisfy l > alpha/(alpha-1) = {}, got {l}",
                alpha / (alpha - 1.0)
            ),
        ));
    }
    if !(rinfty.is_finite() && rinfty >= 0.0) {
        return Err(SqgError::param("rinfty", format!("radius must be finite and >= 0, got {rinfty}")));
    }
    if !(lambda0.is_finite() && lambda0 > 0.0) {
        return Err(SqgError::param("lambda0", format!("must be > 0, got {lambda0}")));
    }
    let lambda = (constants.c_thm * l * l * rinfty / nu).powf(1.0 / (alpha - 1.0));
    Ok(DeterminingScale {
        lambda,
        q: shell_for(lambda, lambda0)?,
        l,
        constants: *constants,
    })
}

/// Smallest `Q >= 0` with `lambda_0 2^Q >= lambda`, up to a 1e-12 relative slack.
pub fn shell_for(lambda: f64, lambda0: f64) -> Result<i32> {
    if !lambda.is_finite() {
        return Err(SqgError::param("lambda", format!("wavenumber is not finite: {lambda}")));
    }
    let target = lambda * (1.0 - 1e-12);
    let mut q = (target / lambda0).log2().ceil().max(0.0);
    if q > i32::MAX as f64 {
        return Err(SqgError::param("lambda", format!("wavenumber {lambda} is out of range")));
    }
    while q > 0.0 && lambda0 * (q - 1.0).exp2() >= target {
        q -= 1.0;
    }
    while lambda0 * q.exp2() < target {
        q += 1.0;
    }
    Ok(q as i32)
}

/// Transient L-infinity bound
/// `c (||theta_0||_2 / (nu t)^(1/alpha) + (F/nu)^a ||theta_0||_2^b)`.
pub fn linfty_bound(
    t: f64,
    theta0_l2: f64,
    force_bound: f64,
    nu: f64,
    alpha: f64,
    p: f64,
    constants: &CalibrationConstants,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(SqgError::param("t", format!("time must be > 0, got {t}")));
    }
    check_nu(nu)?;
    check_alpha(alpha)?;
    check_p(alpha, p)?;
    let (a, b) = interpolation_exponents(alpha, p);
    let smoothing = theta0_l2 / (nu * t).powf(1.0 / alpha);
    let forced = (force_bound / nu).powf(a) * theta0_l2.powf(b);
    Ok(constants.c_linfty * (smoothing + forced))
}

/// Square root of
/// `||theta_0||^2 e^(-nu m t) + ||Lambda^(-alpha/2) f||^2 / (nu^2 m) (1 - e^(-nu m t))`
/// with `m = (2 pi lambda_0)^alpha`.
pub fn l2_envelope(t: f64, theta0_l2: f64, f: &ForcingSpec, nu: f64, alpha: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(SqgError::param("t", format!("time must be >= 0, got {t}")));
    }
    check_nu(nu)?;
    check_alpha(alpha)?;
    let m = (2.0 * std::f64::consts::PI * f.spatial().domain().lambda0()).powf(alpha);
    let decay = (-nu * m * t).exp();
    let g = negative_sobolev_norm(f, alpha);
    let sq = theta0_l2 * theta0_l2 * decay + g * g / (nu * nu * m) * (-(-nu * m * t).exp_m1());
    Ok(sq.sqrt())
}

/// Index of the first sample from which `||theta||_2` stays inside the
/// asymptotic band (the range over the final quarter of the run, widened by 1%).
pub fn settled_index(trajectory: &Trajectory) -> Result<usize> {
    let l2: Vec<f64> = trajectory.samples.iter().map(|s| s.l2).collect();
    let n = l2.len();
    if n < 8 {
        return Err(SqgError::InsufficientData(format!(
            "{n} samples; at least 8 are needed to locate the absorbing band"
        )));
    }
    let tail = &l2[n - n / 4..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if hi == 0.0 {
        return Err(SqgError::Calibration("the run decays to zero".into()));
    }
    let half = tail.len() / 2;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (early, late) = (mean(&tail[..half]), mean(&tail[half..]));
    if (early - late).abs() > 0.01 * late {
        return Err(SqgError::Calibration(format!(
            "||theta||_2 has not settled: final-quarter means {early} and {late} differ by more than 1%"
        )));
    }
    let (lo, hi) = (0.99 * lo, 1.01 * hi);
    let entry = l2
        .iter()
        .rposition(|v| *v < lo || *v > hi)
        .map_or(0, |i| i + 1);
    Ok(entry)
}

/// Sets `c_infty` so that the sharp radius equals the largest observed
/// `||theta||_inf` after the run settles. The other constants are kept.
pub fn calibrate(
    trajectory: &Trajectory,
    params: &SqgParams,
    base: &CalibrationConstants,
) -> Result<CalibrationConstants> {
    if params.forcing.is_zero() {
        return Err(SqgError::Calibration(
            "zero forcing has no absorbing radius to calibrate against".into(),
        ));
    }
    let entry = settled_index(trajectory)?;
    let observed = trajectory.samples[entry..]
        .iter()
        .fold(0.0f64, |m, s| m.max(s.linf));
    let unit = CalibrationConstants {
        c_infty: 1.0,
        ..*base
    };
    let (sharp, _) = compute_rinfty(&params.forcing, params.nu, params.alpha, params.p, &unit)?;
    Ok(CalibrationConstants {
        c_infty: observed / sharp,
        ..*base
    })
}
