//! Binary checkpoints of a spectral state.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `SQGF` |
//! | 4     | version `u32 = 1` |
//! | 4     | `N` as `u32` |
//! | 8     | `L` as `f64` |
//! | 8     | time `t` |
//! | 8     | `alpha` |
//! | 8     | `nu` |
//! | 16 N^2 | coefficients as `(re, im)` `f64` pairs |
//!
//! Coefficients are written row-major over `k1 = -N/2 .. N/2-1`, with `k2`
//! running fastest over the same range.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Result, SqgError};
use crate::spectral::{Domain, SpectralField};

pub const MAGIC: &[u8; 4] = b"SQGF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 * 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub field: SpectralField,
    pub t: f64,
    pub alpha: f64,
    pub nu: f64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.field.domain();
        let n = d.n();
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * n * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        for v in [d.length(), self.t, self.alpha, self.nu] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let half = (n / 2) as i64;
        for k1 in -half..half {
            for k2 in -half..half {
                let c = self.field.coeff(k1, k2);
                out.extend_from_slice(&c.re.to_le_bytes());
                out.extend_from_slice(&c.im.to_le_bytes());
            }
        }
        out
    }

    /// Parses a complete checkpoint. Nothing is returned unless the header,
    /// the length and every field invariant check out.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(SqgError::Checkpoint(format!(
                "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if &bytes[0..4] != MAGIC {
            return Err(SqgError::Checkpoint("bad magic, expected SQGF".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(SqgError::Checkpoint(format!(
                "unsupported version {version}, expected {VERSION}"
            )));
        }
        let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let f = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let (length, t, alpha, nu) = (f(12), f(20), f(28), f(36));
        let expected = HEADER_LEN + 16 * n * n;
        if bytes.len() != expected {
            return Err(SqgError::Checkpoint(format!(
                "length {} does not match N = {n} (expected {expected} bytes)",
                bytes.len()
            )));
        }
        let domain = Domain::new(length, n)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); domain.len()];
        let half = (n / 2) as i64;
        let mut at = HEADER_LEN;
        for k1 in -half..half {
            for k2 in -half..half {
                let idx = domain.index(k1, k2).expect("in range by construction");
                coeffs[idx] = Complex64::new(f(at), f(at + 8));
                at += 16;
            }
        }
        let field = SpectralField::from_coeffs(domain, coeffs)?;
        Ok(Checkpoint {
            field,
            t,
            alpha,
            nu,
        })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
