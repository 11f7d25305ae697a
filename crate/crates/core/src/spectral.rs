//! Real, zero-mean scalar fields on the periodic square `[0, L]^2`.
//!
//! A [`SpectralField`] stores the full `N x N` array of complex Fourier
//! coefficients in FFT order: row `i1` holds wavenumber `k1 = i1` for
//! `i1 < N/2` and `k1 = i1 - N` otherwise, and likewise for columns and `k2`.
//! The physical field is
//!
//! ```text
//! u(x) = sum_k c(k) exp(2 pi i k.x / L)
//! ```
//!
//! Every spectral field satisfies three invariants: Hermitian symmetry
//! `c(-k) = conj(c(k))`, a zero mean mode, and exact zeros outside the
//! circular 2/3-rule disc `|k| <= floor(N/3)`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Geometry and resolution of the periodic square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    length: f64,
    n: usize,
}

impl Domain {
    /// Square of side `length` sampled on `n x n` nodes; `n` must be even and at least 8.
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(SqgError::InvalidDomain(format!(
                "side length must be positive and finite, got {length}"
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(SqgError::InvalidDomain(format!(
                "grid size must be an even integer >= 8, got {n}"
            )));
        }
        Ok(Domain { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Base wavenumber `1/L`.
    pub fn lambda0(&self) -> f64 {
        1.0 / self.length
    }

    /// Largest retained integer wavenumber magnitude, `floor(N/3)`.
    pub fn dealias_radius(&self) -> usize {
        self.n / 3
    }

    /// Number of coefficients (and of grid nodes).
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `L/N`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Signed wavenumber stored at FFT position `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Flat index of wavevector `(k1, k2)`, if it lies in `[-N/2, N/2)^2`.
    pub fn index(&self, k1: i64, k2: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if !(-half..half).contains(&k1) || !(-half..half).contains(&k2) {
            return None;
        }
        let wrap = |k: i64| if k < 0 { (k + self.n as i64) as usize } else { k as usize };
        Some(wrap(k1) * self.n + wrap(k2))
    }

    /// Wavevector stored at flat index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        (self.wavenumber(idx / self.n), self.wavenumber(idx % self.n))
    }

    /// Flat index of `-k` for the wavevector stored at `idx`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let (i1, i2) = (idx / self.n, idx % self.n);
        ((self.n - i1) % self.n) * self.n + (self.n - i2) % self.n
    }

    /// True if `k` is a nonzero wavevector inside the dealiasing disc.
    #[inline]
    pub fn is_retained(&self, k1: i64, k2: i64) -> bool {
        let r = self.dealias_radius() as i64;
        (k1, k2) != (0, 0) && k1 * k1 + k2 * k2 <= r * r
    }

    /// Integer-lattice magnitude `|k|` at every flat index.
    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let (k1, k2) = self.wavevector(idx);
                ((k1 * k1 + k2 * k2) as f64).sqrt()
            })
            .collect()
    }

    /// Retention mask of the dealiasing rule at every flat index.
    pub fn retained_mask(&self) -> Vec<bool> {
        (0..self.len())
            .map(|idx| {
                let (k1, k2) = self.wavevector(idx);
                self.is_retained(k1, k2)
            })
            .collect()
    }

    /// Zygmund multiplier `2 pi |k| / L` at every flat index.
    pub fn zygmund_symbol(&self) -> Vec<f64> {
        let scale = 2.0 * PI / self.length;
        self.magnitudes().into_iter().map(|m| scale * m).collect()
    }
}

/// Fourier coefficients of a real, zero-mean, dealiased scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    domain: Domain,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(domain: Domain) -> Self {
        SpectralField {
            domain,
            coeffs: vec![ZERO; domain.len()],
        }
    }

    /// Field with `c(k) = a` and `c(-k) = conj(a)` for each supplied mode.
    ///
    /// Later entries overwrite earlier ones that touch the same `+-k` pair.
    pub fn from_modes(domain: Domain, modes: &[((i64, i64), Complex64)]) -> Result<Self> {
        let mut field = SpectralField::zeros(domain);
        for &((k1, k2), a) in modes {
            if (k1, k2) == (0, 0) {
                return Err(SqgError::InvalidMode {
                    k1,
                    k2,
                    reason: "the mean mode must stay zero".into(),
                });
            }
            if !domain.is_retained(k1, k2) {
                return Err(SqgError::InvalidMode {
                    k1,
                    k2,
                    reason: format!(
                        "|k| exceeds the dealiasing radius {}",
                        domain.dealias_radius()
                    ),
                });
            }
            let idx = domain.index(k1, k2).expect("retained modes are in range");
            field.coeffs[idx] = a;
            field.coeffs[domain.conjugate_index(idx)] = a.conj();
        }
        Ok(field)
    }

    /// Wraps a raw coefficient array after checking every field invariant.
    ///
    /// Hermitian symmetry is checked to a relative tolerance of `1e-12`; the
    /// mean and dealiased coefficients must be exactly zero.
    pub fn from_coeffs(domain: Domain, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != domain.len() {
            return Err(SqgError::SizeMismatch {
                expected: domain.len(),
                got: coeffs.len(),
            });
        }
        let field = SpectralField { domain, coeffs };
        field.check_invariants(1e-12)?;
        Ok(field)
    }

    pub(crate) fn from_coeffs_unchecked(domain: Domain, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), domain.len());
        let field = SpectralField { domain, coeffs };
        field.debug_check();
        field
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of wavevector `k`; zero for wavevectors outside the grid.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.domain
            .index(k1, k2)
            .map(|idx| self.coeffs[idx])
            .unwrap_or(ZERO)
    }

    /// Number of nonzero coefficients (each `+-k` pair counts twice).
    pub fn support(&self) -> usize {
        self.coeffs.iter().filter(|c| **c != ZERO).count()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Applies a real multiplier given per flat index. The multiplier must be
    /// even in `k` for the result to stay Hermitian.
    pub fn apply_multiplier(&self, multiplier: &[f64]) -> SpectralField {
        debug_assert_eq!(multiplier.len(), self.coeffs.len());
        let coeffs = self
            .coeffs
            .iter()
            .zip(multiplier)
            .map(|(c, m)| if *c == ZERO { ZERO } else { c * m })
            .collect();
        SpectralField::from_coeffs_unchecked(self.domain, coeffs)
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        let coeffs = self.coeffs.iter().map(|c| c * a).collect();
        SpectralField::from_coeffs_unchecked(self.domain, coeffs)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Result<SpectralField> {
        self.same_domain(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y * a)
            .collect();
        Ok(SpectralField::from_coeffs_unchecked(self.domain, coeffs))
    }

    /// L^2 norm from Parseval, `L * sqrt(sum |c(k)|^2)`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        self.domain.length * sum.sqrt()
    }

    /// L^r norm by grid-node quadrature; `r = f64::INFINITY` gives the node maximum.
    pub fn lebesgue_norm(&self, r: f64) -> Result<f64> {
        self.to_physical().lp_norm(r)
    }

    /// Real part of `L^2 sum_k a(k) conj(b(k))`.
    pub fn inner_product(&self, other: &SpectralField) -> Result<f64> {
        self.same_domain(other)?;
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(self.domain.length * self.domain.length * sum)
    }

    pub fn to_physical(&self) -> PhysicalField {
        Fft2::new(self.domain.n).to_physical(self)
    }

    /// Checks Hermitian symmetry to relative tolerance `tol`, and exact zeros
    /// at the mean mode and outside the dealiasing disc.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let d = &self.domain;
        if self.coeffs[0] != ZERO {
            return Err(SqgError::InvalidMode {
                k1: 0,
                k2: 0,
                reason: "mean mode is nonzero".into(),
            });
        }
        let scale = self.max_abs_coeff().max(f64::MIN_POSITIVE);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let (k1, k2) = d.wavevector(idx);
            if !d.is_retained(k1, k2) {
                if *c != ZERO {
                    return Err(SqgError::InvalidMode {
                        k1,
                        k2,
                        reason: "coefficient outside the dealiasing disc is nonzero".into(),
                    });
                }
                continue;
            }
            let mirror = self.coeffs[d.conjugate_index(idx)];
            if (c - mirror.conj()).norm() > tol * scale {
                return Err(SqgError::InvalidMode {
                    k1,
                    k2,
                    reason: "Hermitian symmetry violated".into(),
                });
            }
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn debug_check(&self) {
        #[cfg(debug_assertions)]
        if let Err(e) = self.check_invariants(1e-12) {
            panic!("spectral field invariant broken: {e}");
        }
    }

    pub(crate) fn same_domain(&self, other: &SpectralField) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(SqgError::DomainMismatch)
        }
    }
}

impl<'a> Add<&'a SpectralField> for &'a SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs).expect("adding fields on different domains")
    }
}

impl<'a> Sub<&'a SpectralField> for &'a SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
            .expect("subtracting fields on different domains")
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;

    fn mul(self, a: f64) -> SpectralField {
        self.scale(a)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;

    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

/// Real samples at the nodes `x = (i L/N, j L/N)`, stored row-major with `i` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    domain: Domain,
    samples: Vec<f64>,
}

impl PhysicalField {
    pub fn new(domain: Domain, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != domain.len() {
            return Err(SqgError::SizeMismatch {
                expected: domain.len(),
                got: samples.len(),
            });
        }
        Ok(PhysicalField { domain, samples })
    }

    /// Samples `f(x1, x2)` at every node.
    pub fn from_fn(domain: Domain, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = domain.spacing();
        let n = domain.n;
        let samples = (0..n * n)
            .map(|idx| f((idx / n) as f64 * h, (idx % n) as f64 * h))
            .collect();
        PhysicalField { domain, samples }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(sum_nodes |u|^r (L/N)^2)^(1/r)` for finite `r >= 1`, node maximum for `r = inf`.
    pub fn lp_norm(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 1.0 {
            return Err(SqgError::InvalidExponent {
                value: r,
                reason: "Lebesgue exponent must lie in [1, inf]",
            });
        }
        let peak = self.max_abs();
        if r.is_infinite() || peak == 0.0 {
            return Ok(peak);
        }
        let cell = self.domain.spacing() * self.domain.spacing();
        let sum: f64 = self.samples.iter().map(|v| (v.abs() / peak).powf(r)).sum();
        Ok(peak * (sum * cell).powf(1.0 / r))
    }

    /// Grid-quadrature integral of the field over the square.
    pub fn integral(&self) -> f64 {
        let cell = self.domain.spacing() * self.domain.spacing();
        self.samples.iter().sum::<f64>() * cell
    }

    pub fn to_spectral(&self) -> SpectralField {
        Fft2::new(self.domain.n).to_spectral(self)
    }
}

/// Forward/inverse 2-D FFT plans for one grid size. Cheap to clone and safe
/// to share; every call allocates its own scratch.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.n * self.n, "buffer does not match the plan");
        let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, self.n);
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, self.n);
    }

    /// Unnormalised inverse transform (positive exponent), in place.
    pub fn inverse_raw(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    /// Unnormalised forward transform (negative exponent), in place.
    pub fn forward_raw(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    pub fn to_physical(&self, field: &SpectralField) -> PhysicalField {
        let mut data = field.coeffs.clone();
        self.inverse_raw(&mut data);
        PhysicalField {
            domain: field.domain,
            samples: data.into_iter().map(|z| z.re).collect(),
        }
    }

    /// Two real fields from one complex transform (`a + i b`).
    pub fn to_physical_pair(
        &self,
        a: &SpectralField,
        b: &SpectralField,
    ) -> (PhysicalField, PhysicalField) {
        let mut data = self.pack_pair(a.coeffs(), b.coeffs());
        self.inverse_raw(&mut data);
        let (re, im) = data.into_iter().map(|z| (z.re, z.im)).unzip();
        (
            PhysicalField {
                domain: a.domain,
                samples: re,
            },
            PhysicalField {
                domain: a.domain,
                samples: im,
            },
        )
    }

    /// Coefficients `a + i b`; the inverse transform of this array carries
    /// the two real fields in its real and imaginary parts.
    pub(crate) fn pack_pair(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        a.iter().zip(b).map(|(x, y)| x + i * y).collect()
    }

    /// Forward transform followed by projection onto the field invariants:
    /// the mean and dealiased coefficients are zeroed and the retained pairs
    /// are symmetrised.
    pub fn to_spectral(&self, field: &PhysicalField) -> SpectralField {
        let mut data: Vec<Complex64> = field
            .samples
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.forward_raw(&mut data);
        project_coeffs(&field.domain, &mut data, 1.0 / (self.n * self.n) as f64);
        SpectralField::from_coeffs_unchecked(field.domain, data)
    }
}

/// Scales by `norm`, zeroes non-retained modes and symmetrises `+-k` pairs.
pub(crate) fn project_coeffs(domain: &Domain, data: &mut [Complex64], norm: f64) {
    for idx in 0..data.len() {
        let (k1, k2) = domain.wavevector(idx);
        if !domain.is_retained(k1, k2) {
            data[idx] = ZERO;
            continue;
        }
        let mirror = domain.conjugate_index(idx);
        if mirror < idx {
            continue;
        }
        let avg = (data[idx] + data[mirror].conj()) * (0.5 * norm);
        data[idx] = avg;
        data[mirror] = avg.conj();
    }
}

/// Precomputed form of [`project_coeffs`] for one domain: the retained
/// `(k, -k)` index pairs, each listed once.
#[derive(Debug, Clone)]
pub(crate) struct Projector {
    pairs: Vec<(u32, u32)>,
}

impl Projector {
    pub(crate) fn new(domain: &Domain) -> Self {
        let pairs = (0..domain.len())
            .filter_map(|idx| {
                let (k1, k2) = domain.wavevector(idx);
                let mirror = domain.conjugate_index(idx);
                (domain.is_retained(k1, k2) && mirror >= idx).then_some((idx as u32, mirror as u32))
            })
            .collect();
        Projector { pairs }
    }

    /// Same result as [`project_coeffs`], written into `out`.
    pub(crate) fn apply_into(&self, data: &[Complex64], norm: f64, out: &mut [Complex64]) {
        out.fill(ZERO);
        for &(i, m) in &self.pairs {
            let (i, m) = (i as usize, m as usize);
            let avg = (data[i] + data[m].conj()) * (0.5 * norm);
            out[i] = avg;
            out[m] = avg.conj();
        }
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    const BLOCK: usize = 16;
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Parameters of the synthetic random fields used as initial data and test input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpectrum {
    /// Coefficient magnitudes scale like `|k|^(-decay)`.
    pub decay: f64,
    /// Inclusive range of `|k|` (integer-lattice units) that receives energy.
    pub band: (f64, f64),
    /// When set, the field is rescaled to this L^2 norm.
    #[serde(default)]
    pub amplitude: Option<f64>,
}

impl RandomSpectrum {
    pub fn new(decay: f64, band: (f64, f64)) -> Self {
        RandomSpectrum {
            decay,
            band,
            amplitude: None,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = Some(amplitude);
        self
    }
}

/// Random-phase field with deterministic output per `seed`.
pub fn random_field(domain: Domain, seed: u64, spectrum: &RandomSpectrum) -> Result<SpectralField> {
    let (lo, hi) = spectrum.band;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(SqgError::param("band", format!("empty band [{lo}, {hi}]")));
    }
    if hi > domain.dealias_radius() as f64 {
        return Err(SqgError::param(
            "band",
            format!(
                "upper edge {hi} exceeds the dealiasing radius {}",
                domain.dealias_radius()
            ),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = domain.dealias_radius() as i64;
    let mut modes = Vec::new();
    for k1 in 0..=r {
        for k2 in -r..=r {
            if k1 == 0 && k2 <= 0 {
                continue;
            }
            if !domain.is_retained(k1, k2) {
                continue;
            }
            let mag = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if mag < lo || mag > hi {
                continue;
            }
            let phase = 2.0 * PI * rng.gen::<f64>();
            modes.push(((k1, k2), Complex64::from_polar(mag.powf(-spectrum.decay), phase)));
        }
    }
    if modes.is_empty() {
        return Err(SqgError::param(
            "band",
            format!("no lattice wavevectors with |k| in [{lo}, {hi}]"),
        ));
    }
    let field = SpectralField::from_modes(domain, &modes)?;
    Ok(match spectrum.amplitude {
        Some(a) => field.scale(a / field.l2_norm()),
        None => field,
    })
}

/// L^r norm by grid quadrature, see [`SpectralField::lebesgue_norm`].
pub fn lebesgue_norm(field: &SpectralField, r: f64) -> Result<f64> {
    field.lebesgue_norm(r)
}

/// L^2 inner product, see [`SpectralField::inner_product`].
pub fn inner_product(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    a.inner_product(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Domain {
        Domain::new(1.0, n).unwrap()
    }

    #[test]
    fn domain_arithmetic() {
        let d = Domain::new(1.0, 64).unwrap();
        assert_eq!(d.lambda0(), 1.0);
        assert_eq!(d.dealias_radius(), 21);
        let d = Domain::new(2.0, 128).unwrap();
        assert_eq!(d.lambda0(), 0.5);
        assert_eq!(d.lambda0() * d.length(), 1.0);
        assert_eq!(d.dealias_radius(), 42);
        assert!((d.dealias_radius() as f64) < d.n() as f64 / 2.0);
    }

    #[test]
    fn domain_rejects_bad_sizes() {
        assert!(Domain::new(1.0, 7).is_err());
        assert!(Domain::new(1.0, 6).is_err());
        assert!(Domain::new(0.0, 64).is_err());
        assert!(Domain::new(-1.0, 64).is_err());
        assert!(Domain::new(f64::NAN, 64).is_err());
    }

    #[test]
    fn index_and_conjugate_agree() {
        let d = unit(16);
        for idx in 0..d.len() {
            let (k1, k2) = d.wavevector(idx);
            assert_eq!(d.index(k1, k2), Some(idx));
            let c = d.conjugate_index(idx);
            if k1 != -8 && k2 != -8 {
                assert_eq!(d.wavevector(c), (-k1, -k2));
            }
        }
        assert_eq!(d.index(8, 0), None);
    }

    #[test]
    fn from_modes_builds_cosine_and_sine() {
        let d = unit(32);
        let f = SpectralField::from_modes(d, &[((1, 0), Complex64::new(0.5, 0.0))]).unwrap();
        let p = f.to_physical();
        let expect = PhysicalField::from_fn(d, |x, _| (2.0 * PI * x).cos());
        for (a, b) in p.samples().iter().zip(expect.samples()) {
            assert!((a - b).abs() < 1e-14);
        }

        let f = SpectralField::from_modes(d, &[((0, 2), Complex64::new(0.0, -0.5))]).unwrap();
        let p = f.to_physical();
        let expect = PhysicalField::from_fn(d, |_, y| (4.0 * PI * y).sin());
        for (a, b) in p.samples().iter().zip(expect.samples()) {
            assert!((a - b).abs() < 1e-14);
        }

        assert!(SpectralField::from_modes(d, &[]).unwrap().is_zero());
    }

    #[test]
    fn from_modes_rejects_mean_and_dealiased_modes() {
        let d = unit(32);
        let one = Complex64::new(1.0, 0.0);
        assert!(SpectralField::from_modes(d, &[((0, 0), one)]).is_err());
        assert!(SpectralField::from_modes(d, &[((11, 0), one)]).is_err());
        assert!(SpectralField::from_modes(d, &[((8, 8), one)]).is_err());
        assert!(SpectralField::from_modes(d, &[((10, 0), one)]).is_ok());
    }

    #[test]
    fn cosine_transforms_to_half_coefficients() {
        let d = unit(32);
        let p = PhysicalField::from_fn(d, |x, _| (2.0 * PI * x).cos());
        let s = p.to_spectral();
        assert!((s.coeff(1, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((s.coeff(-1, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        for (idx, c) in s.coeffs().iter().enumerate() {
            let (k1, k2) = d.wavevector(idx);
            if k2 != 0 || k1.abs() != 1 {
                assert!(c.norm() < 1e-16);
            }
        }
        let z = SpectralField::zeros(d);
        assert!(z.to_physical().samples().iter().all(|v| *v == 0.0));
        assert!(PhysicalField::from_fn(d, |_, _| 0.0).to_spectral().is_zero());
    }

    #[test]
    fn to_spectral_drops_mean_and_dealiases() {
        let d = unit(32);
        let p = PhysicalField::from_fn(d, |x, y| 3.0 + (2.0 * PI * 15.0 * x).cos() + (2.0 * PI * y).sin());
        let s = p.to_spectral();
        assert_eq!(s.coeff(0, 0), ZERO);
        assert_eq!(s.coeff(15, 0), ZERO);
        assert!((s.coeff(0, 1) - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        s.check_invariants(0.0).unwrap();
    }

    #[test]
    fn cosine_norms() {
        let d = unit(64);
        let f = SpectralField::from_modes(d, &[((1, 0), Complex64::new(0.5, 0.0))]).unwrap();
        // int cos^2 = 1/2 and int cos^4 = 3/8 over the unit square.
        assert!((f.lebesgue_norm(2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((f.lebesgue_norm(4.0).unwrap() - 0.375f64.powf(0.25)).abs() < 1e-14);
        assert!((f.lebesgue_norm(f64::INFINITY).unwrap() - 1.0).abs() < 1e-14);
        assert!((f.l2_norm() - 0.5f64.sqrt()).abs() < 1e-15);
        let z = SpectralField::zeros(d);
        for r in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(z.lebesgue_norm(r).unwrap(), 0.0);
        }
        assert!(f.lebesgue_norm(0.5).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let d = unit(32);
        let c = SpectralField::from_modes(d, &[((1, 0), Complex64::new(0.5, 0.0))]).unwrap();
        let s = SpectralField::from_modes(d, &[((1, 0), Complex64::new(0.0, -0.5))]).unwrap();
        assert!((c.inner_product(&c).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(c.inner_product(&s).unwrap(), 0.0);
        assert_eq!(c.inner_product(&SpectralField::zeros(d)).unwrap(), 0.0);
        let other = SpectralField::zeros(unit(16));
        assert!(matches!(c.inner_product(&other), Err(SqgError::DomainMismatch)));
    }

    #[test]
    fn random_field_is_deterministic_and_banded() {
        let d = unit(64);
        let spec = RandomSpectrum::new(2.0, (1.0, 10.0));
        let a = random_field(d, 7, &spec).unwrap();
        let b = random_field(d, 7, &spec).unwrap();
        let c = random_field(d, 8, &spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        a.check_invariants(0.0).unwrap();

        let unit_band = random_field(d, 3, &RandomSpectrum::new(0.0, (1.0, 1.0))).unwrap();
        for (idx, z) in unit_band.coeffs().iter().enumerate() {
            let (k1, k2) = d.wavevector(idx);
            if k1 * k1 + k2 * k2 != 1 {
                assert_eq!(*z, ZERO);
            } else {
                assert!((z.norm() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn random_field_parseval_by_direct_summation() {
        let d = unit(64);
        let f = random_field(d, 11, &RandomSpectrum::new(2.0, (1.0, 10.0))).unwrap();
        // magnitudes are exactly |k|^-2, so the L^2 norm is sum over the band of |k|^-4
        let mut sum = 0.0;
        for k1 in -10i64..=10 {
            for k2 in -10i64..=10 {
                let m2 = (k1 * k1 + k2 * k2) as f64;
                if (1.0..=100.0).contains(&m2) {
                    sum += m2.powi(-2);
                }
            }
        }
        let expect = sum.sqrt();
        assert!((f.l2_norm() - expect).abs() < 1e-14 * expect);
        assert!((f.lebesgue_norm(2.0).unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn random_field_rejects_bad_bands() {
        let d = unit(32);
        assert!(random_field(d, 0, &RandomSpectrum::new(1.0, (3.0, 2.0))).is_err());
        assert!(random_field(d, 0, &RandomSpectrum::new(1.0, (1.1, 1.3))).is_err());
        assert!(random_field(d, 0, &RandomSpectrum::new(1.0, (1.0, 11.0))).is_err());
    }

    #[test]
    fn amplitude_normalisation() {
        let d = unit(32);
        let f = random_field(d, 1, &RandomSpectrum::new(1.0, (1.0, 6.0)).with_amplitude(0.3)).unwrap();
        assert!((f.l2_norm() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn pair_transform_matches_single() {
        let d = unit(32);
        let spec = RandomSpectrum::new(1.0, (1.0, 10.0));
        let a = random_field(d, 1, &spec).unwrap();
        let b = random_field(d, 2, &spec).unwrap();
        let fft = Fft2::new(32);
        let (pa, pb) = fft.to_physical_pair(&a, &b);
        let (sa, sb) = (fft.to_physical(&a), fft.to_physical(&b));
        for i in 0..d.len() {
            assert!((pa.samples()[i] - sa.samples()[i]).abs() < 1e-14);
            assert!((pb.samples()[i] - sb.samples()[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn physical_mean_is_zero() {
        let d = unit(64);
        let f = random_field(d, 5, &RandomSpectrum::new(1.0, (1.0, 21.0))).unwrap();
        let p = f.to_physical();
        assert!(p.mean().abs() <= 1e-12 * p.max_abs());
    }
}
