//! Littlewood-Paley analysis on the torus: the smooth cutoff pair `ψ`, `φ`,
//! dyadic blocks `Δₖ`, homogeneous Besov norms `B^s` (p = 2, q = 1), hybrid
//! norms `B̃^{s,t}` and ratio checks for the product and composition bounds.
//!
//! Block weights `φ(2^{-k}|ξ|)` depend only on the grid, so they are built
//! once per grid shape and cached.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{NspError, Result};
use crate::spectral::{FieldKind, Grid, RealField, SpectralField};

/// Inner radius of the transition band of `ψ`.
pub const PSI_INNER: f64 = 0.75;
/// Outer radius of the transition band of `ψ`.
pub const PSI_OUTER: f64 = 4.0 / 3.0;
/// Support of `φ` is `[PHI_INNER, PHI_OUTER]`.
pub const PHI_INNER: f64 = 0.75;
pub const PHI_OUTER: f64 = 8.0 / 3.0;

const GL_NODES: usize = 16;
const GL_PANELS: usize = 24;

/// Radial cutoff `ψ` equal to 1 on `[0, 3/4]`, 0 on `[4/3, ∞)`, and a
/// normalized integral of the bump `exp(-1/(x(1-x)))` in between.
#[derive(Debug, Clone)]
pub struct CutoffProfile {
    nodes: [f64; GL_NODES],
    weights: [f64; GL_NODES],
    total: f64,
}

impl CutoffProfile {
    pub const RECIPE: &'static str = "bump-integral-gl16x24";

    pub fn standard() -> &'static CutoffProfile {
        static PROFILE: OnceLock<CutoffProfile> = OnceLock::new();
        PROFILE.get_or_init(CutoffProfile::build)
    }

    fn build() -> Self {
        let (nodes, weights) = gauss_legendre();
        let mut profile = CutoffProfile {
            nodes,
            weights,
            total: 1.0,
        };
        profile.total = profile.bump_integral(1.0);
        profile
    }

    fn bump(x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            (-1.0 / (x * (1.0 - x))).exp()
        }
    }

    /// `∫₀ˣ exp(-1/(y(1-y))) dy` by composite Gauss-Legendre on fixed panels.
    fn bump_integral(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let h = 1.0 / GL_PANELS as f64;
        let mut acc = 0.0;
        for panel in 0..GL_PANELS {
            let a = panel as f64 * h;
            if a >= x {
                break;
            }
            let b = (a + h).min(x);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            let mut s = 0.0;
            for (t, w) in self.nodes.iter().zip(&self.weights) {
                s += w * Self::bump(mid + half * t);
            }
            acc += half * s;
        }
        acc
    }

    pub fn psi(&self, r: f64) -> f64 {
        if r <= PSI_INNER {
            1.0
        } else if r >= PSI_OUTER {
            0.0
        } else {
            let x = (r - PSI_INNER) / (PSI_OUTER - PSI_INNER);
            1.0 - self.bump_integral(x) / self.total
        }
    }

    /// `φ(r) = ψ(r/2) - ψ(r)`.
    pub fn phi(&self, r: f64) -> f64 {
        self.psi(0.5 * r) - self.psi(r)
    }

    /// `Σₖ φ(2^{-k} r)` over every shell that can be nonzero at `r > 0`.
    pub fn partition_sum(&self, r: f64) -> f64 {
        let (lo, hi) = shell_range_for(r, r);
        (lo..=hi).map(|k| self.phi(r * 2f64.powi(-k))).sum()
    }
}

fn gauss_legendre() -> ([f64; GL_NODES], [f64; GL_NODES]) {
    let n = GL_NODES;
    let mut nodes = [0.0; GL_NODES];
    let mut weights = [0.0; GL_NODES];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Shells `k` whose annulus `[(3/4)2^k, (8/3)2^k]` meets `[r_min, r_max]`.
fn shell_range_for(r_min: f64, r_max: f64) -> (i32, i32) {
    let mut lo = (r_min / PHI_OUTER).log2().floor() as i32;
    while PHI_OUTER * 2f64.powi(lo) <= r_min {
        lo += 1;
    }
    let mut hi = (r_max / PHI_INNER).log2().ceil() as i32;
    while PHI_INNER * 2f64.powi(hi) >= r_max {
        hi -= 1;
    }
    (lo, hi)
}

/// Low/high-frequency regularity pair of a hybrid norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridIndex {
    pub s: f64,
    pub t: f64,
}

impl HybridIndex {
    pub fn new(s: f64, t: f64) -> Self {
        HybridIndex { s, t }
    }

    /// Weight exponent of shell `k`.
    pub fn exponent(&self, k: i32) -> f64 {
        if k <= 0 {
            self.s
        } else {
            self.t
        }
    }
}

/// One sparse entry of a shell: lattice point and `φ(2^{-k}|ξ|)`.
#[derive(Clone, Copy, Debug)]
pub struct ShellEntry {
    pub point: usize,
    pub weight: f64,
}

/// Cached per-grid dyadic block weights.
#[derive(Debug)]
pub struct DyadicTable {
    k_min: i32,
    k_max: i32,
    shells: Vec<Vec<ShellEntry>>,
}

type GridKey = (usize, usize, u64);

impl DyadicTable {
    pub fn for_grid(grid: &Grid) -> Arc<DyadicTable> {
        static CACHE: OnceLock<Mutex<HashMap<GridKey, Arc<DyadicTable>>>> = OnceLock::new();
        let key = (grid.dim(), grid.points(), grid.length().to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("dyadic cache poisoned");
        map.entry(key)
            .or_insert_with(|| Arc::new(DyadicTable::build(grid)))
            .clone()
    }

    fn build(grid: &Grid) -> Self {
        let profile = CutoffProfile::standard();
        let mag = grid.magnitude();
        let nyq = grid.nyquist_mask();
        let (k_min, k_max) = shell_range_for(grid.base_wavenumber(), grid.max_magnitude());
        // phi depends on |ξ| only: evaluate once per distinct radius
        let mut memo: HashMap<(i32, u64), f64> = HashMap::new();
        let mut shells = Vec::with_capacity((k_max - k_min + 1) as usize);
        for k in k_min..=k_max {
            let scale = 2f64.powi(-k);
            let lo = PHI_INNER / scale;
            let hi = PHI_OUTER / scale;
            let mut entries = Vec::new();
            for p in 0..grid.len() {
                let r = mag[p];
                if nyq[p] || r <= lo || r >= hi {
                    continue;
                }
                let w = *memo.entry((k, r.to_bits())).or_insert_with(|| profile.phi(r * scale));
                if w > 0.0 {
                    entries.push(ShellEntry { point: p, weight: w });
                }
            }
            shells.push(entries);
        }
        DyadicTable { k_min, k_max, shells }
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    pub fn shells(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    /// Entries of shell `k`; empty outside the grid's range.
    pub fn shell(&self, k: i32) -> &[ShellEntry] {
        if k < self.k_min || k > self.k_max {
            &[]
        } else {
            &self.shells[(k - self.k_min) as usize]
        }
    }
}

/// Per-shell `‖Δₖ f‖_{L²}` over the grid's shell range.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicSpectrum {
    pub k_min: i32,
    pub k_max: i32,
    pub block_norms: Vec<f64>,
}

impl DyadicSpectrum {
    pub fn get(&self, k: i32) -> f64 {
        if k < self.k_min || k > self.k_max {
            0.0
        } else {
            self.block_norms[(k - self.k_min) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        (self.k_min..=self.k_max).zip(self.block_norms.iter().copied())
    }

    /// `Σₖ 2^{k·exponent(k)} ‖Δₖ f‖`.
    pub fn weighted_sum(&self, idx: HybridIndex) -> f64 {
        self.weighted_terms(idx).iter().sum()
    }

    /// The summands `2^{k·exponent(k)} ‖Δₖ f‖`, ascending in `k`.
    pub fn weighted_terms(&self, idx: HybridIndex) -> Vec<f64> {
        self.iter()
            .map(|(k, n)| 2f64.powf(k as f64 * idx.exponent(k)) * n)
            .collect()
    }
}

/// `Δₖ f`.
pub fn dyadic_block(f: &SpectralField, k: i32) -> SpectralField {
    let table = DyadicTable::for_grid(f.grid());
    let grid = f.grid().clone();
    let mut out = SpectralField::zeros(&grid, f.kind());
    for c in 0..f.ncomp() {
        let src = f.component(c);
        let dst = out.component_mut(c);
        for e in table.shell(k) {
            dst[e.point] = src[e.point] * e.weight;
        }
    }
    out
}

/// `‖Λ^a Δₖ f‖_{L²}` for every shell, summing squares over components.
pub fn dyadic_spectrum_with_power(f: &SpectralField, a: f64) -> DyadicSpectrum {
    let grid = f.grid();
    let table = DyadicTable::for_grid(grid);
    let mag = grid.magnitude();
    let vol = grid.volume();
    let block_norms = table
        .shells()
        .map(|k| {
            let mut acc = 0.0;
            for c in 0..f.ncomp() {
                let comp = f.component(c);
                for e in table.shell(k) {
                    let m = if a == 0.0 { 1.0 } else { mag[e.point].powf(a) };
                    acc += (e.weight * m).powi(2) * comp[e.point].norm_sqr();
                }
            }
            (vol * acc).sqrt()
        })
        .collect();
    DyadicSpectrum {
        k_min: table.k_min(),
        k_max: table.k_max(),
        block_norms,
    }
}

pub fn dyadic_spectrum(f: &SpectralField) -> DyadicSpectrum {
    dyadic_spectrum_with_power(f, 0.0)
}

/// `‖f‖_{B^s} = Σₖ 2^{ks} ‖Δₖ f‖_{L²}`.
pub fn besov_norm(f: &SpectralField, s: f64) -> f64 {
    dyadic_spectrum(f).weighted_sum(HybridIndex::new(s, s))
}

/// `Σ_{k≤0} 2^{ks} ‖Δₖ f‖ + Σ_{k>0} 2^{kt} ‖Δₖ f‖`.
pub fn hybrid_norm(f: &SpectralField, idx: HybridIndex) -> f64 {
    dyadic_spectrum(f).weighted_sum(idx)
}

/// `‖Λ Δₖ f‖ / ‖Δₖ f‖`, confined to `[(3/4)2^k, (8/3)2^k]` by the support of `φ`.
pub fn bernstein_ratio(f: &SpectralField, k: i32) -> Result<f64> {
    let plain = dyadic_spectrum(f).get(k);
    if plain == 0.0 {
        return Err(NspError::EmptyBlock(k));
    }
    let lifted = dyadic_spectrum_with_power(f, 1.0).get(k);
    Ok(lifted / plain)
}

/// Largest deviation of `Σₖ φ(2^{-k}|ξ|)` from 1 over the grid's nonzero
/// lattice points.
pub fn partition_of_unity_defect(grid: &Grid) -> f64 {
    let table = DyadicTable::for_grid(grid);
    let mut sum = vec![0.0; grid.len()];
    for k in table.shells() {
        for e in table.shell(k) {
            sum[e.point] += e.weight;
        }
    }
    let nyq = grid.nyquist_mask();
    (1..grid.len())
        .filter(|&p| !nyq[p])
        .map(|p| (sum[p] - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `Σₖ Δₖ f`; equals `f` minus its mean for any grid function.
pub fn reconstruct(f: &SpectralField) -> SpectralField {
    let table = DyadicTable::for_grid(f.grid());
    let grid = f.grid().clone();
    let mut out = SpectralField::zeros(&grid, f.kind());
    for k in table.shells() {
        for c in 0..f.ncomp() {
            let src: Vec<Complex64> = f.component(c).to_vec();
            let dst = out.component_mut(c);
            for e in table.shell(k) {
                dst[e.point] += src[e.point] * e.weight;
            }
        }
    }
    out
}

fn sup_norm(f: &SpectralField) -> f64 {
    f.to_physical().max_abs()
}

fn pointwise_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.expect_kind(FieldKind::Scalar)?;
    f.ensure_compatible(g)?;
    let (a, b) = (f.to_physical(), g.to_physical());
    let values = a.values().iter().zip(b.values()).map(|(x, y)| x * y).collect();
    Ok(RealField::from_values(f.grid(), FieldKind::Scalar, values)?.to_spectral())
}

/// `‖fg‖_{B̃} / (‖f‖_∞ ‖g‖_{B̃} + ‖f‖_{B̃} ‖g‖_∞)` with all hybrid norms at `idx`.
pub fn product_estimate_ratio(f: &SpectralField, g: &SpectralField, idx: HybridIndex) -> Result<f64> {
    let fg = pointwise_product(f, g)?;
    let denom = sup_norm(f) * hybrid_norm(g, idx) + hybrid_norm(f, idx) * sup_norm(g);
    if denom == 0.0 {
        return Err(NspError::ZeroDenominator("product_estimate_ratio"));
    }
    Ok(hybrid_norm(&fg, idx) / denom)
}

/// Ratio for the second product bound, evaluated as displayed with the
/// `-N/2` shift: `‖fg‖_{B̃^{s₁+s₂-N/2, t₁+t₂-N/2}} / (‖f‖_{B̃^{s₁,t₁}} ‖g‖_{B̃^{s₂,t₂}})`.
///
/// The same statement names the target space with a `-1` shift instead; for
/// `N = 2` the two coincide.
pub fn product_pair_ratio(f: &SpectralField, g: &SpectralField, fi: HybridIndex, gi: HybridIndex) -> Result<f64> {
    let fg = pointwise_product(f, g)?;
    let half = f.grid().dim() as f64 / 2.0;
    let target = HybridIndex::new(fi.s + gi.s - half, fi.t + gi.t - half);
    let denom = hybrid_norm(f, fi) * hybrid_norm(g, gi);
    if denom == 0.0 {
        return Err(NspError::ZeroDenominator("product_pair_ratio"));
    }
    Ok(hybrid_norm(&fg, target) / denom)
}

/// `‖F(f)‖_{B^s} / ‖f‖_{B^s}` for `F(u) = u / (u + ρ̄)`.
pub fn composition_check(f: &SpectralField, s: f64, rho_bar: f64) -> Result<f64> {
    f.expect_kind(FieldKind::Scalar)?;
    let phys = f.to_physical();
    let sup = phys.max_abs();
    if sup >= rho_bar {
        return Err(NspError::PoleReachable { sup, rho_bar });
    }
    let denom = besov_norm(f, s);
    if denom == 0.0 {
        return Err(NspError::ZeroDenominator("composition_check"));
    }
    let values = phys.values().iter().map(|&u| u / (u + rho_bar)).collect();
    let composed = RealField::from_values(f.grid(), FieldKind::Scalar, values)?.to_spectral();
    Ok(besov_norm(&composed, s) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_values_and_support() {
        let p = CutoffProfile::standard();
        assert_eq!(p.psi(0.0), 1.0);
        assert_eq!(p.psi(0.75), 1.0);
        assert_eq!(p.psi(4.0 / 3.0), 0.0);
        assert_eq!(p.psi(5.0), 0.0);
        let mid = p.psi(0.5 * (0.75 + 4.0 / 3.0));
        // the bump is symmetric about the middle of the band
        assert!((mid - 0.5).abs() < 1e-14, "{mid}");
        let mut prev = 1.0;
        for i in 0..=200 {
            let v = p.psi(0.7 + i as f64 * 0.004);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn phi_support() {
        let p = CutoffProfile::standard();
        assert_eq!(p.phi(0.74), 0.0);
        assert_eq!(p.phi(2.7), 0.0);
        assert_eq!(p.phi(1.0), 1.0 - p.psi(1.0));
        assert_eq!(p.phi(1.5), 1.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre();
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn shell_range_on_default_torus() {
        let g = Grid::periodic(3, 32).unwrap();
        let t = DyadicTable::for_grid(&g);
        assert_eq!(t.k_min(), -1);
        // max |ξ| = 15√3 ≈ 25.98; (3/4)2^5 = 24 < 25.98 < 48
        assert_eq!(t.k_max(), 5);
    }

    #[test]
    fn bernstein_rejects_empty_block() {
        let g = Grid::periodic(2, 16).unwrap();
        let f = RealField::from_fn(&g, |x| x[0].cos()).to_spectral();
        assert!(matches!(bernstein_ratio(&f, 4), Err(NspError::EmptyBlock(4))));
    }
}
