//! Binary on-disk cache for coefficient matrices and tensors.
//!
//! Layout: magic `STRC`, format version (`u32`), SHA-256 of the request key
//! (32 bytes), `N` (`u32`), the quadrature error estimate (`f64`, NaN when
//! absent), then the entries as `f64` in row-major order. Everything is
//! little-endian.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{CoefficientMatrix, CoefficientTensor};
use crate::basis::{BasisFamily, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::kernel::WeightFunction;
use crate::quadrature::QuadratureConfig;

pub const CACHE_MAGIC: [u8; 4] = *b"STRC";
pub const CACHE_VERSION: u32 = 1;
/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "STRC_CACHE_DIR";

const HEADER: usize = 4 + 4 + 32 + 4 + 8;

#[derive(Serialize)]
struct Key<'a> {
    kind: &'static str,
    family: BasisFamily,
    t0: u64,
    end: u64,
    weights: &'a [String],
    n: usize,
    quadrature: String,
}

fn key_hash(kind: &'static str, basis: &OrthonormalBasis, weights: &[String], n: usize, quad: &QuadratureConfig) -> [u8; 32] {
    let iv = basis.interval();
    let key = Key {
        kind,
        family: basis.family(),
        t0: iv.start().to_bits(),
        end: iv.end().to_bits(),
        weights,
        n,
        quadrature: quad.fingerprint(),
    };
    let bytes = serde_json::to_vec(&key).expect("cache key serializes");
    Sha256::digest(&bytes).into()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// File name for a matrix request inside `dir`.
pub fn cache_path(
    dir: &Path,
    phi: &WeightFunction,
    psi: &WeightFunction,
    basis: &OrthonormalBasis,
    n: usize,
    quad: &QuadratureConfig,
) -> PathBuf {
    let h = key_hash("matrix", basis, &[phi.id(), psi.id()], n, quad);
    dir.join(format!("matrix-{}.strc", &hex(&h)[..24]))
}

fn encode(key: &[u8; 32], n: usize, estimate: Option<f64>, entries: impl Iterator<Item = f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER);
    out.extend_from_slice(&CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(key);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&estimate.unwrap_or(f64::NAN).to_le_bytes());
    for v in entries {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8], key: &[u8; 32], n: usize, count: usize) -> Result<(Option<f64>, Vec<f64>)> {
    if bytes.len() < HEADER {
        return Err(Error::CorruptCache("truncated header".into()));
    }
    if bytes[..4] != CACHE_MAGIC {
        return Err(Error::CorruptCache("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != CACHE_VERSION {
        return Err(Error::CorruptCache(format!("unsupported version {version}")));
    }
    if bytes[8..40] != key[..] {
        return Err(Error::CacheKeyMismatch);
    }
    let stored_n = u32::from_le_bytes(bytes[40..44].try_into().expect("4 bytes")) as usize;
    if stored_n != n {
        return Err(Error::CacheKeyMismatch);
    }
    let estimate = f64::from_le_bytes(bytes[44..52].try_into().expect("8 bytes"));
    let estimate = (!estimate.is_nan()).then_some(estimate);
    let body = &bytes[HEADER..];
    if body.len() != count * 8 {
        return Err(Error::CorruptCache(format!(
            "expected {} payload bytes, found {}",
            count * 8,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((estimate, values))
}

impl CoefficientMatrix {
    fn key(&self) -> [u8; 32] {
        key_hash("matrix", &self.basis, &self.weights, self.n(), &self.quad)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(&self.key(), self.n(), self.error_estimate, self.entries.iter().copied())
    }

    pub fn store(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Restores a matrix saved for exactly this request. A file written for
    /// different inputs fails with [`Error::CacheKeyMismatch`].
    pub fn load(
        path: &Path,
        phi: &WeightFunction,
        psi: &WeightFunction,
        basis: &OrthonormalBasis,
        n: usize,
        quad: &QuadratureConfig,
    ) -> Result<Self> {
        let weights = [phi.id(), psi.id()];
        let key = key_hash("matrix", basis, &weights, n, quad);
        let (error_estimate, values) = decode(&fs::read(path)?, &key, n, n * n)?;
        Ok(Self {
            entries: Array2::from_shape_vec((n, n), values).expect("n × n entries"),
            basis: *basis,
            weights,
            quad: *quad,
            error_estimate,
        })
    }
}

impl CoefficientTensor {
    fn key(&self) -> [u8; 32] {
        key_hash("tensor", &self.basis, &self.weights, self.n(), &self.quad)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(&self.key(), self.n(), self.error_estimate, self.entries.iter().copied())
    }

    pub fn store(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(
        path: &Path,
        psi: [&WeightFunction; 3],
        basis: &OrthonormalBasis,
        n: usize,
        quad: &QuadratureConfig,
    ) -> Result<Self> {
        let weights = [psi[0].id(), psi[1].id(), psi[2].id()];
        let key = key_hash("tensor", basis, &weights, n, quad);
        let (error_estimate, values) = decode(&fs::read(path)?, &key, n, n * n * n)?;
        Ok(Self {
            entries: Array3::from_shape_vec((n, n, n), values).expect("n³ entries"),
            basis: *basis,
            weights,
            quad: *quad,
            error_estimate,
        })
    }
}

/// Loads `G` from `dir` when a valid file exists, otherwise computes and
/// stores it. Corrupt or mismatched files are recomputed and overwritten.
pub fn cached_coefficient_matrix(
    dir: &Path,
    phi: &WeightFunction,
    psi: &WeightFunction,
    basis: &OrthonormalBasis,
    n: usize,
    quad: &QuadratureConfig,
) -> Result<CoefficientMatrix> {
    let path = cache_path(dir, phi, psi, basis, n, quad);
    if let Ok(g) = CoefficientMatrix::load(&path, phi, psi, basis, n, quad) {
        return Ok(g);
    }
    let g = super::coefficient_matrix(phi, psi, basis, n, quad)?;
    g.store(&path)?;
    Ok(g)
}
