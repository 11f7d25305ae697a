//! Fourier multipliers and the quadratic transport term of the SQG equation.

use std::borrow::Cow;
use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::spectral::{project_coeffs, Domain, Fft2, Projector, SpectralField};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest support the brute-force convolution accepts.
pub const ORACLE_MODE_LIMIT: usize = 64;

/// Fractional power of the Zygmund operator: multiplies `c(k)` by `(2 pi |k| / L)^s`.
pub fn lambda_pow(theta: &SpectralField, s: f64) -> SpectralField {
    if s == 0.0 {
        return theta.clone();
    }
    let symbol: Vec<f64> = theta
        .domain()
        .zygmund_symbol()
        .into_iter()
        .map(|m| if m == 0.0 { 0.0 } else { m.powf(s) })
        .collect();
    theta.apply_multiplier(&symbol)
}

/// Velocity `u = (u1, u2)` produced by the rotated Riesz transform.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl VelocityField {
    /// Largest `|2 pi i (k1 u1(k) + k2 u2(k)) / L|` over all wavevectors.
    pub fn divergence_max(&self) -> f64 {
        let d = self.u1.domain();
        let scale = 2.0 * PI / d.length();
        self.u1
            .coeffs()
            .iter()
            .zip(self.u2.coeffs())
            .enumerate()
            .map(|(idx, (a, b))| {
                let (k1, k2) = d.wavevector(idx);
                (a * k1 as f64 + b * k2 as f64).norm() * scale
            })
            .fold(0.0, f64::max)
    }

    /// Largest grid value of `|u|`.
    pub fn max_speed(&self, fft: &Fft2) -> f64 {
        let (a, b) = fft.to_physical_pair(&self.u1, &self.u2);
        a.samples()
            .iter()
            .zip(b.samples())
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0, f64::max)
    }
}

/// `u = R_perp theta = Lambda^{-1} (-d2 theta, d1 theta)`, i.e.
/// `u1(k) = -i k2/|k| theta(k)` and `u2(k) = i k1/|k| theta(k)`.
pub fn riesz_perp(theta: &SpectralField) -> VelocityField {
    let d = *theta.domain();
    let mut u1 = vec![Complex64::new(0.0, 0.0); d.len()];
    let mut u2 = u1.clone();
    for (idx, c) in theta.coeffs().iter().enumerate() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let (k1, k2) = d.wavevector(idx);
        let mag = ((k1 * k1 + k2 * k2) as f64).sqrt();
        u1[idx] = -I * (k2 as f64 / mag) * c;
        u2[idx] = I * (k1 as f64 / mag) * c;
    }
    VelocityField {
        u1: SpectralField::from_coeffs_unchecked(d, u1),
        u2: SpectralField::from_coeffs_unchecked(d, u2),
    }
}

/// Pseudospectral evaluator of the dealiased transport term `u . grad theta`
/// with `u = R_perp theta`.
#[derive(Debug, Clone)]
pub struct Advection {
    domain: Domain,
    fft: Fft2,
    // 2 pi k_j / L
    wave1: Vec<f64>,
    wave2: Vec<f64>,
    // k_j / |k|, zero at k = 0
    riesz1: Vec<f64>,
    riesz2: Vec<f64>,
    projector: Projector,
    scratch: Scratch,
}

/// Work buffers reused across evaluations; clones start with their own.
#[derive(Debug, Default)]
struct Scratch(Mutex<(Vec<Complex64>, Vec<Complex64>)>);

impl Clone for Scratch {
    fn clone(&self) -> Self {
        Scratch::default()
    }
}

impl Advection {
    pub fn new(domain: Domain) -> Self {
        let scale = 2.0 * PI / domain.length();
        let n = domain.len();
        let (mut wave1, mut wave2) = (vec![0.0; n], vec![0.0; n]);
        let (mut riesz1, mut riesz2) = (vec![0.0; n], vec![0.0; n]);
        for idx in 0..n {
            let (k1, k2) = domain.wavevector(idx);
            wave1[idx] = scale * k1 as f64;
            wave2[idx] = scale * k2 as f64;
            if (k1, k2) != (0, 0) {
                let mag = ((k1 * k1 + k2 * k2) as f64).sqrt();
                riesz1[idx] = k1 as f64 / mag;
                riesz2[idx] = k2 as f64 / mag;
            }
        }
        Advection {
            domain,
            fft: Fft2::new(domain.n()),
            wave1,
            wave2,
            riesz1,
            riesz2,
            projector: Projector::new(&domain),
            scratch: Scratch::default(),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Gradient and velocity are packed two-per-transform (`a + i b`), so one
    /// evaluation costs two inverse and one forward FFT.
    pub fn apply(&self, theta: &SpectralField) -> SpectralField {
        assert_eq!(theta.domain(), &self.domain, "advection evaluator built for another domain");
        let mut out = vec![Complex64::new(0.0, 0.0); theta.coeffs().len()];
        self.apply_into(theta.coeffs(), &mut out);
        SpectralField::from_coeffs_unchecked(self.domain, out)
    }

    /// [`Advection::apply`] on raw coefficients, written into `out`.
    pub(crate) fn apply_into(&self, c: &[Complex64], out: &mut [Complex64]) {
        let mut guard = self.scratch.0.lock().unwrap_or_else(|e| e.into_inner());
        let (grad, vel) = &mut *guard;
        // d1 theta + i d2 theta  <-  i w1 c + i (i w2 c)
        grad.clear();
        grad.extend((0..c.len()).map(|j| I * self.wave1[j] * c[j] - self.wave2[j] * c[j]));
        // u1 + i u2  <-  (-i r2 c) + i (i r1 c)
        vel.clear();
        vel.extend((0..c.len()).map(|j| -I * self.riesz2[j] * c[j] - self.riesz1[j] * c[j]));
        self.fft.inverse_raw(grad);
        self.fft.inverse_raw(vel);
        for (g, u) in grad.iter_mut().zip(vel.iter()) {
            *g = Complex64::new(u.re * g.re + u.im * g.im, 0.0);
        }
        self.fft.forward_raw(grad);
        let n = self.domain.n();
        self.projector.apply_into(grad, 1.0 / (n * n) as f64, out);
    }
}

/// Dealiased `u . grad theta`, see [`Advection`].
pub fn advection(theta: &SpectralField) -> SpectralField {
    Advection::new(*theta.domain()).apply(theta)
}

/// Exact convolution sum of `u . grad theta` over all pairs of supported
/// modes, followed by the same dealiasing and mean removal as [`advection`].
pub fn advection_oracle(theta: &SpectralField, max_modes: usize) -> Result<SpectralField> {
    if max_modes > ORACLE_MODE_LIMIT {
        return Err(SqgError::SupportTooLarge {
            support: max_modes,
            limit: ORACLE_MODE_LIMIT,
        });
    }
    let d = *theta.domain();
    let support: Vec<(i64, i64, Complex64)> = theta
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() != 0.0)
        .map(|(idx, c)| {
            let (k1, k2) = d.wavevector(idx);
            (k1, k2, *c)
        })
        .collect();
    if support.len() > max_modes {
        return Err(SqgError::SupportTooLarge {
            support: support.len(),
            limit: max_modes,
        });
    }
    let scale = 2.0 * PI / d.length();
    let mut out = vec![Complex64::new(0.0, 0.0); d.len()];
    for &(p1, p2, tp) in &support {
        let mag = ((p1 * p1 + p2 * p2) as f64).sqrt();
        let u1 = -I * (p2 as f64 / mag) * tp;
        let u2 = I * (p1 as f64 / mag) * tp;
        for &(q1, q2, tq) in &support {
            let (k1, k2) = (p1 + q1, p2 + q2);
            if !d.is_retained(k1, k2) {
                continue;
            }
            let grad_dot = (u1 * q1 as f64 + u2 * q2 as f64) * (I * scale);
            let idx = d.index(k1, k2).expect("retained modes are in range");
            out[idx] += grad_dot * tq;
        }
    }
    project_coeffs(&d, &mut out, 1.0);
    Ok(SpectralField::from_coeffs_unchecked(d, out))
}

/// Time modulation `h(t)` of a separable force `f(x, t) = h(t) g(x)`, normalised so `h(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulation {
    Constant,
    ExpDecay { rate: f64 },
    Sinusoid { frequency: f64 },
}

impl Modulation {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Modulation::Constant => 1.0,
            Modulation::ExpDecay { rate } => (-rate * t).exp(),
            Modulation::Sinusoid { frequency } => (frequency * t).cos(),
        }
    }

    /// `sup_{t >= 0} |h(t)|`.
    pub fn sup(&self) -> f64 {
        1.0
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Modulation::ExpDecay { rate } if !(rate.is_finite() && rate >= 0.0) => Err(
                SqgError::param("modulation.rate", format!("decay rate must be >= 0, got {rate}")),
            ),
            Modulation::Sinusoid { frequency } if !frequency.is_finite() => Err(SqgError::param(
                "modulation.frequency",
                format!("frequency must be finite, got {frequency}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Separable force `f(x, t) = h(t) g(x)` with `g` given by a list of Fourier modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    modes: Vec<((i64, i64), Complex64)>,
    modulation: Modulation,
    spatial: SpectralField,
}

impl ForcingSpec {
    pub fn new(
        domain: Domain,
        modes: &[((i64, i64), Complex64)],
        modulation: Modulation,
    ) -> Result<Self> {
        modulation.validate()?;
        let spatial = SpectralField::from_modes(domain, modes)?;
        Ok(ForcingSpec {
            modes: modes.to_vec(),
            modulation,
            spatial,
        })
    }

    pub fn zero(domain: Domain) -> Self {
        ForcingSpec {
            modes: Vec::new(),
            modulation: Modulation::Constant,
            spatial: SpectralField::zeros(domain),
        }
    }

    pub fn modes(&self) -> &[((i64, i64), Complex64)] {
        &self.modes
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// The spatial profile `g`.
    pub fn spatial(&self) -> &SpectralField {
        &self.spatial
    }

    pub fn is_zero(&self) -> bool {
        self.spatial.is_zero()
    }

    /// Force bound `F = ||g||_p sup_t |h(t)|`.
    pub fn bound(&self, p: f64) -> Result<f64> {
        Ok(self.spatial.lebesgue_norm(p)? * self.modulation.sup())
    }

    /// `f(., t)`; the constant modulation borrows the cached profile.
    pub fn eval(&self, t: f64) -> Cow<'_, SpectralField> {
        match self.modulation {
            Modulation::Constant => Cow::Borrowed(&self.spatial),
            m => Cow::Owned(self.spatial.scale(m.value(t))),
        }
    }
}

/// `f(., t) = h(t) g`.
pub fn force_eval(spec: &ForcingSpec, t: f64) -> Cow<'_, SpectralField> {
    spec.eval(t)
}
