//! N-dimensional complex FFT built from 1-D rustfft passes along each axis.
//!
//! Coefficients follow the Fourier-series convention
//! `f(x) = Σ_ξ f̂(ξ) e^{iξ·x}`, so the forward transform carries the `1/M^N`
//! factor and the inverse is an unnormalized sum.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::Fft;

use super::grid::Grid;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// In-place N-D transform of one component buffer of length `M^N`.
pub(crate) fn transform(grid: &Grid, data: &mut [Complex64], dir: Direction) {
    debug_assert_eq!(data.len(), grid.len());
    let (fwd, inv) = grid.plans();
    let plan = match dir {
        Direction::Forward => fwd,
        Direction::Inverse => inv,
    };
    let m = grid.points();
    let dim = grid.dim();
    let mut scratch = grid.zero_buffer();
    for axis in 0..dim {
        if axis == dim - 1 {
            lines(plan.as_ref(), data, m);
        } else {
            let stride = m.pow((dim - 1 - axis) as u32);
            gather(data, &mut scratch, m, stride);
            lines(plan.as_ref(), &mut scratch, m);
            scatter(&scratch, data, m, stride);
        }
    }
    if dir == Direction::Forward {
        let scale = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }
}

/// Inverse transforms of real fields given by Hermitian spectra, two per
/// complex pass (`a + i b` inverts to `a(x) + i b(x)`).
pub(crate) fn inverse_real_many(grid: &Grid, spectra: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        let mut buf: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(x, y)| x + Complex64::i() * y).collect(),
            [a] => a.to_vec(),
            _ => unreachable!(),
        };
        transform(grid, &mut buf, Direction::Inverse);
        out.push(buf.iter().map(|z| z.re).collect());
        if pair.len() == 2 {
            out.push(buf.iter().map(|z| z.im).collect());
        }
    }
    out
}

/// Forward transforms of real nodal arrays, two per complex pass, split by
/// conjugate symmetry. Nyquist coefficients are zeroed.
pub(crate) fn forward_real_many(grid: &Grid, values: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let nyq = grid.nyquist_mask();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(values.len());
    for pair in values.chunks(2) {
        let mut buf: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect(),
            [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            _ => unreachable!(),
        };
        transform(grid, &mut buf, Direction::Forward);
        if pair.len() == 1 {
            for (z, &n) in buf.iter_mut().zip(nyq) {
                if n {
                    *z = zero;
                }
            }
            out.push(buf);
            continue;
        }
        let mut a = vec![zero; buf.len()];
        let mut b = vec![zero; buf.len()];
        for p in 0..buf.len() {
            if nyq[p] {
                continue;
            }
            let zq = buf[grid.conjugate_point(p)].conj();
            a[p] = (buf[p] + zq) * 0.5;
            b[p] = (buf[p] - zq) * Complex64::new(0.0, -0.5);
        }
        out.push(a);
        out.push(b);
    }
    out
}

fn lines(plan: &dyn Fft<f64>, data: &mut [Complex64], m: usize) {
    let scratch_len = plan.get_inplace_scratch_len();
    data.par_chunks_mut(m).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, line| plan.process_with_scratch(line, scratch),
    );
}

// Moves the axis with the given stride to the fastest position:
// block o, inner j, axis index i  ->  dst[(o*stride + j)*m + i].
fn gather(src: &[Complex64], dst: &mut [Complex64], m: usize, stride: usize) {
    let block = m * stride;
    dst.par_chunks_mut(block).zip(src.par_chunks(block)).for_each(|(d, s)| {
        for i in 0..m {
            for j in 0..stride {
                d[j * m + i] = s[i * stride + j];
            }
        }
    });
}

fn scatter(src: &[Complex64], dst: &mut [Complex64], m: usize, stride: usize) {
    let block = m * stride;
    dst.par_chunks_mut(block).zip(src.par_chunks(block)).for_each(|(d, s)| {
        for i in 0..m {
            for j in 0..stride {
                d[i * stride + j] = s[j * m + i];
            }
        }
    });
}
