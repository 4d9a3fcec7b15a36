//! Binary checkpoints.
//!
//! Layout, all little-endian: the 8-byte magic `NSPCHK1\0`, `N` and `M` as
//! `u64`, then `L`, `n`, `t`, `μ`, `λ`, `ρ̄` as `f64`, then the coefficients
//! of `h`, `c` and the `N(N-1)/2` entries of `I` as interleaved `(re, im)`
//! `f64` pairs in lexicographic lattice order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{NspError, Result};
use crate::model::{FluidParams, NspState};
use crate::spectral::{FieldKind, Grid, SpectralField};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"NSPCHK1\0";

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub state: NspState,
    pub params: FluidParams,
    pub n: f64,
}

pub fn write_checkpoint(path: &Path, state: &NspState, params: &FluidParams, n: f64) -> Result<()> {
    let file = File::create(path).map_err(|e| NspError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let grid = state.grid();
    let mut bytes = Vec::with_capacity(80);
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&(grid.dim() as u64).to_le_bytes());
    bytes.extend_from_slice(&(grid.points() as u64).to_le_bytes());
    for v in [grid.length(), n, state.t, params.mu, params.lambda, params.rho_bar] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes).map_err(|e| NspError::io(path, e))?;
    for field in [&state.h, &state.c, &state.i] {
        let mut buf = Vec::with_capacity(16 * field.coeffs().len());
        for z in field.coeffs() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf).map_err(|e| NspError::io(path, e))?;
    }
    w.flush().map_err(|e| NspError::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path).map_err(|e| NspError::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| NspError::io(path, e))?;
    if bytes.len() < 72 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(NspError::Checkpoint(format!(
            "{}: bad magic or truncated header",
            path.display()
        )));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap() };
    let dim = u64::from_le_bytes(word(0)) as usize;
    let points = u64::from_le_bytes(word(1)) as usize;
    let [length, n, t, mu, lambda, rho_bar] = [2, 3, 4, 5, 6, 7].map(|i| f64::from_le_bytes(word(i)));
    let grid = Grid::new(dim, points, length)?;
    let params = FluidParams::new(mu, lambda, rho_bar, dim)?;
    let len = grid.len();
    let counts = [1, 1, FieldKind::Antisymmetric.components(dim)];
    let expected = 72 + 16 * len * counts.iter().sum::<usize>();
    if bytes.len() != expected {
        return Err(NspError::Checkpoint(format!(
            "{}: expected {expected} bytes, found {}",
            path.display(),
            bytes.len()
        )));
    }
    let mut offset = 72;
    let mut take = |kind: FieldKind, comps: usize| -> Result<SpectralField> {
        let coeffs = (0..comps * len)
            .map(|_| {
                let re = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
                let im = f64::from_le_bytes(bytes[offset + 8..offset + 16].try_into().unwrap());
                offset += 16;
                Complex64::new(re, im)
            })
            .collect();
        SpectralField::from_coeffs(&grid, kind, coeffs)
    };
    let h = take(FieldKind::Scalar, 1)?;
    let c = take(FieldKind::Scalar, 1)?;
    let i = take(FieldKind::Antisymmetric, counts[2])?;
    Ok(Checkpoint {
        state: NspState { h, c, i, t },
        params,
        n,
    })
}
