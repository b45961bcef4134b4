//! Realizations of the log-field `omega_l(u) = P(A_l(u))` on a uniform grid.
//!
//! Gaussian fields are drawn by circulant embedding of the exact covariance
//! `lambda^2 mu_overlap(tau)`; a dense Cholesky sampler provides an
//! independent route for small grids. Compound-Poisson fields are built from
//! an explicit point process in the time-scale half-plane.

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::exponents::{Family, LevyExponent};
use crate::geometry::{mu_cone, mu_overlap, ConeSpec};

/// Relative size below which negative embedding eigenvalues count as round-off.
pub const EMBEDDING_TOLERANCE: f64 = 1e-8;
/// Largest circulant period accepted by the embedding sampler.
pub const MAX_EMBEDDING_LEN: usize = 1 << 26;
/// Largest grid accepted by the dense sampler.
pub const MAX_DENSE_POINTS: usize = 2048;
/// Default cap on the expected number of Poisson points per realization.
pub const DEFAULT_POINT_CAP: usize = 50_000_000;

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dyadic grid `u_i = i 2^-level`, `i < ceil(horizon 2^level)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    level: u32,
    horizon: f64,
}

impl GridSpec {
    pub fn new(level: u32, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            usage!("grid horizon must be positive, got {horizon}");
        }
        if level > 40 {
            usage!("grid level {level} is beyond double precision spacing");
        }
        Ok(Self { level, horizon })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn spacing(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_points(&self) -> usize {
        ceil_near_integer(self.horizon * (self.level as f64).exp2()) as usize
    }

    fn check_cone(&self, cone: &ConeSpec) -> Result<()> {
        if self.spacing() > cone.cutoff() * (1.0 + 1e-12) {
            usage!(
                "grid spacing {} exceeds the cone cutoff {}",
                self.spacing(),
                cone.cutoff()
            );
        }
        Ok(())
    }
}

/// `ceil` that treats values within round-off of an integer as that integer.
pub(crate) fn ceil_near_integer(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// `floor` that treats values within round-off of an integer as that integer.
pub(crate) fn floor_near_integer(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

/// A sampled field `omega_l` (or its tilt `omega_l^(q)`) with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaGrid {
    values: Vec<f64>,
    cone: ConeSpec,
    grid: GridSpec,
    family: LevyExponent,
    tilt_q: Option<f64>,
    seed: u64,
}

impl OmegaGrid {
    /// Wraps externally produced values; the length must match the grid.
    pub fn from_values(
        values: Vec<f64>,
        cone: ConeSpec,
        grid: GridSpec,
        family: LevyExponent,
        seed: u64,
    ) -> Result<Self> {
        if values.len() != grid.n_points() {
            usage!(
                "got {} values for a grid of {} points",
                values.len(),
                grid.n_points()
            );
        }
        grid.check_cone(&cone)?;
        Ok(Self {
            values,
            cone,
            grid,
            family,
            tilt_q: None,
            seed,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn family(&self) -> &LevyExponent {
        &self.family
    }

    pub fn tilt_q(&self) -> Option<f64> {
        self.tilt_q
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Circulant-embedding sampler. The spectrum is computed once and shared by
/// every realization drawn from it.
pub struct GaussianSampler {
    exp: LevyExponent,
    cone: ConeSpec,
    grid: GridSpec,
    mean: f64,
    sqrt_eigen: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GaussianSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaussianSampler")
            .field("cone", &self.cone)
            .field("grid", &self.grid)
            .field("period", &self.sqrt_eigen.len())
            .finish()
    }
}

fn gaussian_variance(exp: &LevyExponent) -> Result<f64> {
    match exp.family() {
        Family::Gaussian { variance } => Ok(variance),
        other => usage!("expected a gaussian exponent, got {other:?}"),
    }
}

impl GaussianSampler {
    pub fn new(exp: &LevyExponent, cone: &ConeSpec, grid: &GridSpec) -> Result<Self> {
        let variance = gaussian_variance(exp)?;
        grid.check_cone(cone)?;
        let dx = grid.spacing();
        let n = grid.n_points();
        // Support of the covariance is [0, T]; padding by 2T makes the wrap exact.
        let pad = ceil_near_integer(2.0 * cone.integral_scale() / dx) as usize;
        let m = (n + pad).next_power_of_two();
        if m > MAX_EMBEDDING_LEN {
            return Err(Error::Capacity {
                expected: m as f64,
                cap: MAX_EMBEDDING_LEN,
            });
        }

        let mut buf: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let lag = j.min(m - j) as f64 * dx;
                Complex::new(variance * mu_overlap(cone, lag), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut buf);

        let max = buf.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let min = buf.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min < -EMBEDDING_TOLERANCE * max {
            return Err(Error::NumericalEmbedding { min, max });
        }
        let scale = 1.0 / m as f64;
        let sqrt_eigen = buf.iter().map(|z| (z.re.max(0.0) * scale).sqrt()).collect();

        Ok(Self {
            exp: *exp,
            cone: *cone,
            grid: *grid,
            mean: exp.drift() * mu_cone(cone),
            sqrt_eigen,
            fft,
        })
    }

    /// Length of the circulant period.
    pub fn period(&self) -> usize {
        self.sqrt_eigen.len()
    }

    pub fn sample(&self, seed: u64) -> OmegaGrid {
        let mut rng = rng_from_seed(seed);
        let mut buf: Vec<Complex<f64>> = self
            .sqrt_eigen
            .iter()
            .map(|&s| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        let values = buf[..self.grid.n_points()]
            .iter()
            .map(|z| self.mean + z.re)
            .collect();
        OmegaGrid {
            values,
            cone: self.cone,
            grid: self.grid,
            family: self.exp,
            tilt_q: None,
            seed,
        }
    }
}

/// Exact sampler through the Cholesky factor of the full covariance matrix.
#[derive(Debug)]
pub struct DenseGaussianSampler {
    exp: LevyExponent,
    cone: ConeSpec,
    grid: GridSpec,
    mean: f64,
    factor: DMatrix<f64>,
}

impl DenseGaussianSampler {
    pub fn new(exp: &LevyExponent, cone: &ConeSpec, grid: &GridSpec) -> Result<Self> {
        let variance = gaussian_variance(exp)?;
        grid.check_cone(cone)?;
        let n = grid.n_points();
        if n > MAX_DENSE_POINTS {
            return Err(Error::Capacity {
                expected: n as f64,
                cap: MAX_DENSE_POINTS,
            });
        }
        let dx = grid.spacing();
        let cov = DMatrix::from_fn(n, n, |i, j| {
            variance * mu_overlap(cone, i.abs_diff(j) as f64 * dx)
        });
        let factor = cov
            .cholesky()
            .ok_or_else(|| Error::Usage("covariance matrix is not positive definite".into()))?
            .unpack();
        Ok(Self {
            exp: *exp,
            cone: *cone,
            grid: *grid,
            mean: exp.drift() * mu_cone(cone),
            factor,
        })
    }

    pub fn sample(&self, seed: u64) -> OmegaGrid {
        let mut rng = rng_from_seed(seed);
        let n = self.grid.n_points();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let x = &self.factor * z;
        OmegaGrid {
            values: x.iter().map(|v| self.mean + v).collect(),
            cone: self.cone,
            grid: self.grid,
            family: self.exp,
            tilt_q: None,
            seed,
        }
    }
}

pub fn sample_gaussian_omega(
    exp: &LevyExponent,
    cone: &ConeSpec,
    grid: &GridSpec,
    seed: u64,
) -> Result<OmegaGrid> {
    Ok(GaussianSampler::new(exp, cone, grid)?.sample(seed))
}

/// Compound-Poisson field: points of intensity `c l'^-2 dt' dl'` on the strip
/// `t' in [-T/2, H + T/2]`, each adding `x0` to every grid node inside its cone
/// footprint, plus the drift `a mu(A_l)`.
#[derive(Debug, Clone)]
pub struct PoissonSampler {
    exp: LevyExponent,
    cone: ConeSpec,
    grid: GridSpec,
    intensity: f64,
    jump: f64,
    point_cap: usize,
}

impl PoissonSampler {
    pub fn new(exp: &LevyExponent, cone: &ConeSpec, grid: &GridSpec) -> Result<Self> {
        let (intensity, jump) = match exp.family() {
            Family::CompoundPoisson { intensity, jump } => (intensity, jump),
            other => usage!("expected a compound-poisson exponent, got {other:?}"),
        };
        grid.check_cone(cone)?;
        Ok(Self {
            exp: *exp,
            cone: *cone,
            grid: *grid,
            intensity,
            jump,
            point_cap: DEFAULT_POINT_CAP,
        })
    }

    pub fn with_point_cap(mut self, cap: usize) -> Self {
        self.point_cap = cap;
        self
    }

    fn strip(&self) -> (f64, f64) {
        let extent = self.grid.n_points() as f64 * self.grid.spacing();
        let half = 0.5 * self.cone.integral_scale();
        (-half, extent + half)
    }

    /// Expected number of points on the sampling strip, `c (H + T) / l`.
    pub fn expected_points(&self) -> f64 {
        let (lo, hi) = self.strip();
        self.intensity * (hi - lo) / self.cone.cutoff()
    }

    pub fn sample(&self, seed: u64) -> Result<OmegaGrid> {
        let expected = self.expected_points();
        if expected > self.point_cap as f64 {
            return Err(Error::Capacity {
                expected,
                cap: self.point_cap,
            });
        }
        let mut rng = rng_from_seed(seed);
        let n = self.grid.n_points();
        let dx = self.grid.spacing();
        let (t_lo, t_hi) = self.strip();
        let width = t_hi - t_lo;
        let big_t = self.cone.integral_scale();
        let l = self.cone.cutoff();

        let mut diff = vec![0i64; n + 1];
        let mut deposit = |centre: f64, footprint: f64| {
            let lo = ((centre - 0.5 * footprint) / dx).ceil();
            let hi = ((centre + 0.5 * footprint) / dx).floor();
            let lo = lo.max(0.0);
            let hi = hi.min((n - 1) as f64);
            if lo <= hi {
                diff[lo as usize] += 1;
                diff[hi as usize + 1] -= 1;
            }
        };

        // Scales in [l, T]: 1/l' is uniform on [1/T, 1/l].
        let inner_mean = self.intensity * width * (1.0 / l - 1.0 / big_t);
        let inner = draw_poisson(&mut rng, inner_mean);
        for _ in 0..inner {
            let centre = t_lo + width * rng.random::<f64>();
            let inv = 1.0 / big_t + (1.0 / l - 1.0 / big_t) * rng.random::<f64>();
            deposit(centre, 1.0 / inv);
        }
        // Scales above T all have footprint T: a rate c/T process in t'.
        let outer = draw_poisson(&mut rng, self.intensity * width / big_t);
        for _ in 0..outer {
            let centre = t_lo + width * rng.random::<f64>();
            deposit(centre, big_t);
        }

        let base = self.exp.drift() * mu_cone(&self.cone);
        let mut count = 0i64;
        let values = diff[..n]
            .iter()
            .map(|d| {
                count += d;
                base + self.jump * count as f64
            })
            .collect();
        Ok(OmegaGrid {
            values,
            cone: self.cone,
            grid: self.grid,
            family: self.exp,
            tilt_q: None,
            seed,
        })
    }
}

fn draw_poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive mean");
    let k: f64 = d.sample(rng);
    k as u64
}

pub fn sample_poisson_omega(
    exp: &LevyExponent,
    cone: &ConeSpec,
    grid: &GridSpec,
    seed: u64,
) -> Result<OmegaGrid> {
    PoissonSampler::new(exp, cone, grid)?.sample(seed)
}

/// A reusable sampler for either family.
#[derive(Debug)]
pub enum OmegaSampler {
    Gaussian(GaussianSampler),
    Poisson(PoissonSampler),
}

impl OmegaSampler {
    pub fn new(exp: &LevyExponent, cone: &ConeSpec, grid: &GridSpec) -> Result<Self> {
        Ok(match exp.family() {
            Family::Gaussian { .. } => Self::Gaussian(GaussianSampler::new(exp, cone, grid)?),
            Family::CompoundPoisson { .. } => Self::Poisson(PoissonSampler::new(exp, cone, grid)?),
        })
    }

    pub fn sample(&self, seed: u64) -> Result<OmegaGrid> {
        match self {
            Self::Gaussian(s) => Ok(s.sample(seed)),
            Self::Poisson(s) => s.sample(seed),
        }
    }
}

/// `omega^(q) = q omega - mu(A_l) psi(q)`, the field of the tilted measure.
pub fn tilt_field(base: &OmegaGrid, q: f64) -> Result<OmegaGrid> {
    if let Some(prev) = base.tilt_q {
        usage!("field is already tilted at q = {prev}");
    }
    if !(q > 0.0) {
        usage!("tilt order must be positive, got {q}");
    }
    let shift = mu_cone(&base.cone) * base.family.psi(q)?;
    Ok(OmegaGrid {
        values: base.values.iter().map(|w| q * w - shift).collect(),
        tilt_q: Some(q),
        ..*base
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaHeader {
    pub family: Family,
    pub integral_scale: f64,
    pub cutoff: f64,
    pub level: u32,
    pub spacing: f64,
    pub horizon: f64,
    pub n_points: usize,
    pub seed: u64,
    pub tilt_q: Option<f64>,
}

impl OmegaGrid {
    pub fn header(&self) -> OmegaHeader {
        OmegaHeader {
            family: self.family.family(),
            integral_scale: self.cone.integral_scale(),
            cutoff: self.cone.cutoff(),
            level: self.grid.level(),
            spacing: self.grid.spacing(),
            horizon: self.grid.horizon(),
            n_points: self.values.len(),
            seed: self.seed,
            tilt_q: self.tilt_q,
        }
    }

    /// One JSON header line, then the values as little-endian `f64`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header())?;
        w.write_all(b"\n")?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

pub fn read_omega_dump<R: Read>(mut r: R) -> Result<(OmegaHeader, Vec<f64>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Usage("dump has no header line".into()))?;
    let header: OmegaHeader = serde_json::from_slice(&bytes[..split])?;
    let body = &bytes[split + 1..];
    if body.len() != 8 * header.n_points {
        usage!(
            "dump body holds {} bytes, header announces {} values",
            body.len(),
            header.n_points
        );
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn g02() -> LevyExponent {
        LevyExponent::gaussian(0.2).unwrap()
    }

    #[test]
    fn grid_counts() {
        let g = GridSpec::new(4, 1.0).unwrap();
        assert_eq!(g.n_points(), 16);
        assert_eq!(g.spacing(), 0.0625);
        assert_eq!(GridSpec::new(4, 1.01).unwrap().n_points(), 17);
        assert_eq!(GridSpec::new(10, 3.0).unwrap().n_points(), 3072);
        assert!(GridSpec::new(4, 0.0).is_err());
    }

    #[test]
    fn gaussian_moments_at_a_point() {
        let cone = ConeSpec::new(1.0, (-8f64).exp2()).unwrap();
        let grid = GridSpec::new(8, 1.0).unwrap();
        let sampler = GaussianSampler::new(&g02(), &cone, &grid).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|s| sampler.sample(s).values()[100]).collect();
        let (m, v) = (stats::mean(&xs), stats::variance(&xs));
        let var_true = 0.2 * (8.0 * 2f64.ln() + 1.0);
        assert!((var_true - 1.30904).abs() < 1e-5);
        let se_m = (var_true / xs.len() as f64).sqrt();
        assert!((m + 0.654518).abs() < 3.0 * se_m, "mean {m}");
        // Var of the sample variance is 2 sigma^4 / (R - 1) for a Gaussian.
        let se_v = var_true * (2.0 / (xs.len() - 1) as f64).sqrt();
        assert!((v - var_true).abs() < 3.0 * se_v, "var {v}");
        let e: Vec<f64> = xs.iter().map(|w| w.exp()).collect();
        assert!((stats::mean(&e) - 1.0).abs() < 4.0 * stats::std_error(&e));
    }

    #[test]
    fn gaussian_is_deterministic() {
        let cone = ConeSpec::new(1.0, 0.01).unwrap();
        let grid = GridSpec::new(7, 2.0).unwrap();
        let a = sample_gaussian_omega(&g02(), &cone, &grid, 42).unwrap();
        let b = sample_gaussian_omega(&g02(), &cone, &grid, 42).unwrap();
        let c = sample_gaussian_omega(&g02(), &cone, &grid, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
        assert_eq!(a.values().len(), 256);
    }

    #[test]
    fn rejects_coarse_grid_and_wrong_family() {
        let cone = ConeSpec::new(1.0, (-8f64).exp2()).unwrap();
        let grid = GridSpec::new(6, 1.0).unwrap();
        assert!(matches!(
            GaussianSampler::new(&g02(), &cone, &grid),
            Err(Error::Usage(_))
        ));
        let fine = GridSpec::new(8, 1.0).unwrap();
        let cp = LevyExponent::compound_poisson(1.0, -0.5).unwrap();
        assert!(GaussianSampler::new(&cp, &cone, &fine).is_err());
        assert!(PoissonSampler::new(&g02(), &cone, &fine).is_err());
    }

    #[test]
    fn embedding_spectrum_is_nonnegative_across_scales() {
        for (t_int, level) in [(1.0, 4), (1.0, 10), (0.5, 12), (2.0, 6)] {
            let dx = (-(level as f64)).exp2();
            let cone = ConeSpec::new(t_int, dx).unwrap();
            let grid = GridSpec::new(level, 3.0).unwrap();
            assert!(GaussianSampler::new(&g02(), &cone, &grid).is_ok());
        }
    }

    #[test]
    fn dense_and_embedding_agree_on_moments() {
        let cone = ConeSpec::new(1.0, (-6f64).exp2()).unwrap();
        let grid = GridSpec::new(6, 2.0).unwrap();
        let dense = DenseGaussianSampler::new(&g02(), &cone, &grid).unwrap();
        let fft = GaussianSampler::new(&g02(), &cone, &grid).unwrap();
        let pick = |g: OmegaGrid| (g.values()[5], g.values()[5] * g.values()[37]);
        let (a, b): (Vec<_>, Vec<_>) = (0..3000).map(|s| pick(dense.sample(s))).unzip();
        let (c, d): (Vec<_>, Vec<_>) = (0..3000).map(|s| pick(fft.sample(s + 10_000))).unzip();
        assert!(stats::ks_two_sample(&a, &c).p_value > 0.001);
        assert!(stats::ks_two_sample(&b, &d).p_value > 0.001);
    }

    #[test]
    fn poisson_point_count_matches_cone_mass() {
        // x0 = -1 with drift removed counts the points hitting each node.
        let cp = LevyExponent::compound_poisson(1.0, -0.5).unwrap();
        let cone = ConeSpec::new(1.0, (-6f64).exp2()).unwrap();
        let grid = GridSpec::new(6, 1.0).unwrap();
        let sampler = PoissonSampler::new(&cp, &cone, &grid).unwrap();
        let base = cp.drift() * mu_cone(&cone);
        let counts: Vec<f64> = (0..4000)
            .map(|s| (sampler.sample(s).unwrap().values()[20] - base) / -0.5)
            .collect();
        let want = mu_cone(&cone);
        assert!((want - 5.15888).abs() < 1e-5);
        assert!((stats::mean(&counts) - want).abs() < 3.0 * stats::std_error(&counts));
        let e: Vec<f64> = (0..4000)
            .map(|s| sampler.sample(s + 7).unwrap().values()[40].exp())
            .collect();
        assert!((stats::mean(&e) - 1.0).abs() < 3.0 * stats::std_error(&e));
    }

    #[test]
    fn poisson_degenerate_and_capacity() {
        let cone = ConeSpec::new(1.0, 0.125).unwrap();
        let grid = GridSpec::new(3, 1.0).unwrap();
        let flat = LevyExponent::compound_poisson(2.0, 0.0).unwrap();
        let g = sample_poisson_omega(&flat, &cone, &grid, 1).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));

        let cp = LevyExponent::compound_poisson(1.0, -0.5).unwrap();
        let capped = PoissonSampler::new(&cp, &cone, &grid).unwrap().with_point_cap(5);
        assert!(matches!(capped.sample(1), Err(Error::Capacity { .. })));
    }

    #[test]
    fn tilting() {
        let cone = ConeSpec::new(1.0, 0.0625).unwrap();
        let grid = GridSpec::new(4, 1.0).unwrap();
        let base = sample_gaussian_omega(&g02(), &cone, &grid, 5).unwrap();
        let same = tilt_field(&base, 1.0).unwrap();
        assert_eq!(same.values(), base.values());
        assert_eq!(same.tilt_q(), Some(1.0));
        let two = tilt_field(&base, 2.0).unwrap();
        let shift = mu_cone(&cone) * 0.2;
        for (w2, w) in two.values().iter().zip(base.values()) {
            assert!((w2 - (2.0 * w - shift)).abs() < 1e-14);
        }
        assert!(matches!(tilt_field(&two, 1.5), Err(Error::Usage(_))));
    }

    #[test]
    fn tilted_field_keeps_unit_mean() {
        let cone = ConeSpec::new(1.0, (-8f64).exp2()).unwrap();
        let grid = GridSpec::new(8, 1.0).unwrap();
        let sampler = GaussianSampler::new(&g02(), &cone, &grid).unwrap();
        let (mut e, mut w1, mut w2) = (Vec::new(), Vec::new(), Vec::new());
        for s in 0..6000 {
            let base = sampler.sample(s);
            let t = tilt_field(&base, 2.0).unwrap();
            e.push(t.values()[3].exp());
            w1.push(base.values()[3]);
            w2.push(t.values()[3]);
        }
        assert!((stats::mean(&e) - 1.0).abs() < 3.0 * stats::std_error(&e));
        assert!((stats::variance(&w2) - 4.0 * stats::variance(&w1)).abs() < 1e-9);
    }

    #[test]
    fn dump_round_trip() {
        let cone = ConeSpec::new(1.0, 0.0625).unwrap();
        let grid = GridSpec::new(4, 2.0).unwrap();
        let g = sample_gaussian_omega(&g02(), &cone, &grid, 9).unwrap();
        let mut buf = Vec::new();
        g.write_dump(&mut buf).unwrap();
        let (h, v) = read_omega_dump(buf.as_slice()).unwrap();
        assert_eq!(h, g.header());
        assert_eq!(v, g.values());
        assert!(read_omega_dump(&buf[..buf.len() - 3]).is_err());
    }
}
