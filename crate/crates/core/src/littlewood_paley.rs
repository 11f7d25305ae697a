//! Dyadic Littlewood-Paley blocks on the periodic square.
//!
//! The radial cutoff `chi` equals 1 on `[0, 3/4]`, vanishes on `[1, inf)` and
//! is a quintic smoothstep in between. Blocks are
//!
//! ```text
//! phi_{-1}(xi) = chi(xi),    phi_q(xi) = chi(xi / 2^(q+1)) - chi(xi / 2^q),  q >= 0,
//! ```
//!
//! evaluated at the integer lattice magnitude `|k|`, so that
//! `sum_{q <= Q} phi_q = chi(xi / 2^(Q+1))` telescopes exactly.

use std::ops::RangeInclusive;

use crate::error::{Result, SqgError};
use crate::spectral::{Domain, Fft2, PhysicalField, SpectralField};

/// Radial cutoff profile; errors on negative input.
pub fn chi(xi_norm: f64) -> Result<f64> {
    if xi_norm.is_nan() || xi_norm < 0.0 {
        return Err(SqgError::param(
            "xi_norm",
            format!("cutoff argument must be >= 0, got {xi_norm}"),
        ));
    }
    Ok(cutoff(xi_norm))
}

#[inline]
fn cutoff(r: f64) -> f64 {
    if r <= 0.75 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let t = 4.0 * (r - 0.75);
        1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Block profile `phi_q` evaluated at `|xi|`.
pub fn phi(q: i32, xi_norm: f64) -> f64 {
    if q < 0 {
        cutoff(xi_norm)
    } else {
        cutoff(xi_norm / 2f64.powi(q + 1)) - cutoff(xi_norm / 2f64.powi(q))
    }
}

/// Low-pass profile `sum_{p=-1}^{q} phi_p = chi(xi / 2^(q+1))`.
pub fn lowpass_profile(q: i32, xi_norm: f64) -> f64 {
    cutoff(xi_norm / 2f64.powi(q + 1))
}

/// The dyadic shell apparatus for one domain. Immutable once built.
#[derive(Debug, Clone)]
pub struct ShellSystem {
    domain: Domain,
    q_max: i32,
    fft: Fft2,
    magnitudes: Vec<f64>,
}

impl ShellSystem {
    pub fn new(domain: Domain) -> Self {
        // last shell whose support reaches into the dealiasing disc
        let radius = domain.dealias_radius() as f64;
        let mut q_max = 0;
        while 0.75 * 2f64.powi(q_max + 1) < radius {
            q_max += 1;
        }
        ShellSystem {
            domain,
            q_max,
            fft: Fft2::new(domain.n()),
            magnitudes: domain.magnitudes(),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Largest shell index with support inside the dealiasing disc. The low-pass
    /// filter at `q_max` is the identity on every dealiased field.
    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    pub fn shells(&self) -> RangeInclusive<i32> {
        -1..=self.q_max
    }

    /// Shell wavenumber `lambda_q = 2^q / L` (also used for `q = -1`).
    pub fn lambda(&self, q: i32) -> f64 {
        2f64.powi(q) / self.domain.length()
    }

    fn check_shell(&self, q: i32) -> Result<()> {
        if q < -1 || q > self.q_max {
            return Err(SqgError::ShellOutOfRange {
                q,
                min: -1,
                max: self.q_max,
            });
        }
        Ok(())
    }

    pub fn shell_multiplier(&self, q: i32) -> Vec<f64> {
        self.magnitudes.iter().map(|&m| phi(q, m)).collect()
    }

    pub fn lowpass_multiplier(&self, q: i32) -> Vec<f64> {
        self.magnitudes.iter().map(|&m| lowpass_profile(q, m)).collect()
    }

    /// Indicator of the support of the low-pass multiplier at `q`.
    pub fn lowpass_support(&self, q: i32) -> Vec<bool> {
        self.magnitudes
            .iter()
            .map(|&m| lowpass_profile(q, m) > 0.0)
            .collect()
    }

    /// `Delta_q theta`.
    pub fn shell_project(&self, theta: &SpectralField, q: i32) -> Result<SpectralField> {
        self.check_shell(q)?;
        Ok(theta.apply_multiplier(&self.shell_multiplier(q)))
    }

    /// `theta_{<= q}`; any `q >= q_max` acts as the identity on dealiased fields.
    pub fn lowpass(&self, theta: &SpectralField, q: i32) -> Result<SpectralField> {
        if q < -1 {
            return Err(SqgError::ShellOutOfRange {
                q,
                min: -1,
                max: i32::MAX,
            });
        }
        Ok(theta.apply_multiplier(&self.lowpass_multiplier(q)))
    }

    /// `sum_{q = q1}^{q2} Delta_q theta`.
    pub fn band_project(&self, theta: &SpectralField, q1: i32, q2: i32) -> Result<SpectralField> {
        if q1 > q2 {
            return Err(SqgError::param(
                "band",
                format!("shell range [{q1}, {q2}] is empty"),
            ));
        }
        self.check_shell(q1)?;
        self.check_shell(q2)?;
        let multiplier: Vec<f64> = self
            .magnitudes
            .iter()
            .map(|&m| (q1..=q2).map(|q| phi(q, m)).sum())
            .collect();
        Ok(theta.apply_multiplier(&multiplier))
    }

    /// Physical-space blocks `Delta_q theta` for every shell.
    pub fn shell_fields(&self, theta: &SpectralField) -> Vec<PhysicalField> {
        self.shells()
            .map(|q| {
                let block = theta.apply_multiplier(&self.shell_multiplier(q));
                self.fft.to_physical(&block)
            })
            .collect()
    }

    /// `||Delta_q theta||_r` for `q = -1 ..= q_max`.
    pub fn shell_norms(&self, theta: &SpectralField, r: f64) -> Result<Vec<f64>> {
        self.shell_fields(theta)
            .iter()
            .map(|p| p.lp_norm(r))
            .collect()
    }

    /// Rows `(q, ||Delta_q theta||_r)` for every shell.
    pub fn shell_spectrum(&self, theta: &SpectralField, r: f64) -> Result<Vec<(i32, f64)>> {
        Ok(self.shells().zip(self.shell_norms(theta, r)?).collect())
    }

    /// `(sum_q lambda_q^(s l) ||Delta_q theta||_l^l)^(1/l)`; `l = inf` gives the supremum.
    pub fn besov_norm(&self, theta: &SpectralField, s: f64, l: f64) -> Result<f64> {
        let norms = self.besov_checked_norms(theta, l)?;
        Ok(self.besov_from_shell_norms(&norms, s, l))
    }

    fn besov_checked_norms(&self, theta: &SpectralField, l: f64) -> Result<Vec<f64>> {
        if l.is_nan() || l < 1.0 {
            return Err(SqgError::InvalidExponent {
                value: l,
                reason: "Besov exponent must be >= 1",
            });
        }
        self.shell_norms(theta, l)
    }

    /// Aggregates precomputed shell norms (ordered from `q = -1`) into the Besov norm.
    pub fn besov_from_shell_norms(&self, norms: &[f64], s: f64, l: f64) -> f64 {
        let weighted = self.shells().zip(norms).map(|(q, n)| self.lambda(q).powf(s) * n);
        if l.is_infinite() {
            return weighted.fold(0.0, f64::max);
        }
        let peak = weighted.clone().fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let sum: f64 = weighted.map(|v| (v / peak).powf(l)).sum();
        peak * sum.powf(1.0 / l)
    }
}
