//! Dyadic increments `b_{n,k}` of `M_l`, and of the walk `X = B(M)`.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::exponents::Family;
use crate::fields::{floor_near_integer, rng_from_seed, OmegaGrid};

/// Default number of extra dyadic levels between the analysis scale and the ω grid.
pub const DEFAULT_OVERSAMPLING: u32 = 4;

/// Analysis resolution `2^-n` and horizon `t 2^(n chi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub n: u32,
    pub t: f64,
    pub chi: f64,
}

impl Resolution {
    pub fn new(n: u32, t: f64, chi: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            usage!("horizon t must be positive, got {t}");
        }
        if !(chi.is_finite() && chi >= 0.0) {
            usage!("chi must be nonnegative and finite, got {chi}");
        }
        Ok(Self { n, t, chi })
    }

    /// `floor(t 2^(n (1 + chi)))`.
    pub fn cell_count(&self) -> usize {
        let n = self.n as f64;
        floor_near_integer(self.t * (n * (1.0 + self.chi)).exp2()) as usize
    }

    pub fn cell_width(&self) -> f64 {
        (-(self.n as f64)).exp2()
    }

    /// Time covered by the increments, `cell_count * 2^-n`.
    pub fn span(&self) -> f64 {
        self.cell_count() as f64 * self.cell_width()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub family: Family,
    pub integral_scale: f64,
    pub oversampling: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MrmPath {
    resolution: Resolution,
    increments: Vec<f64>,
    tilt_q: Option<f64>,
    provenance: Provenance,
}

impl MrmPath {
    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn tilt_q(&self) -> Option<f64> {
        self.tilt_q
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Path with a constant increment, the measure of a zero field.
    pub fn constant(resolution: Resolution, provenance: Provenance) -> Self {
        let increments = vec![resolution.cell_width(); resolution.cell_count()];
        Self {
            resolution,
            increments,
            tilt_q: None,
            provenance,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MrwPath {
    resolution: Resolution,
    increments: Vec<f64>,
    gaussian_seed: u64,
    provenance: Provenance,
}

impl MrwPath {
    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn gaussian_seed(&self) -> u64 {
        self.gaussian_seed
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Left-endpoint Riemann sums of `exp(omega)` over the dyadic cells of `res`.
pub fn integrate_mrm(omega: &OmegaGrid, res: Resolution) -> Result<MrmPath> {
    let level = omega.grid().level();
    if level < res.n {
        usage!(
            "omega grid level {level} is coarser than the analysis level {}",
            res.n
        );
    }
    let per_cell = 1usize << (level - res.n);
    let cells = res.cell_count();
    let needed = cells * per_cell;
    let values = omega.values();
    if values.len() < needed {
        usage!(
            "omega grid holds {} points, {} cells at level {} need {needed}",
            values.len(),
            cells,
            res.n
        );
    }
    let dx = omega.grid().spacing();
    let increments = values[..needed]
        .chunks_exact(per_cell)
        .map(|cell| dx * cell.iter().map(|w| w.exp()).sum::<f64>())
        .collect();
    Ok(MrmPath {
        resolution: res,
        increments,
        tilt_q: omega.tilt_q(),
        provenance: Provenance {
            seed: omega.seed(),
            family: omega.family().family(),
            integral_scale: omega.cone().integral_scale(),
            oversampling: level - res.n,
        },
    })
}

/// `M_l` over the covered span, `sum_k b_{n,k}`.
pub fn mrm_total(mrm: &MrmPath) -> f64 {
    mrm.increments.iter().sum()
}

/// `dX_k = sqrt(b_{n,k}) xi_k` with `xi_k` i.i.d. standard normal from `gaussian_seed`.
pub fn subordinate_brownian(mrm: &MrmPath, gaussian_seed: u64) -> Result<MrwPath> {
    if let Some(q) = mrm.tilt_q {
        usage!("cannot build a walk from a measure tilted at q = {q}");
    }
    let mut rng = rng_from_seed(gaussian_seed);
    let increments = mrm
        .increments
        .iter()
        .map(|b| {
            let xi: f64 = StandardNormal.sample(&mut rng);
            b.sqrt() * xi
        })
        .collect();
    Ok(MrwPath {
        resolution: mrm.resolution,
        increments,
        gaussian_seed,
        provenance: mrm.provenance,
    })
}

fn write_provenance<W: Write>(w: &mut W, res: &Resolution, p: &Provenance) -> Result<()> {
    writeln!(w, "# family: {}", serde_json::to_string(&p.family)?)?;
    writeln!(w, "# omega_seed: {}", p.seed)?;
    writeln!(w, "# T: {:?}", p.integral_scale)?;
    writeln!(w, "# n: {}", res.n)?;
    writeln!(w, "# chi: {:?}", res.chi)?;
    writeln!(w, "# t: {:?}", res.t)?;
    writeln!(w, "# oversampling: {}", p.oversampling)?;
    Ok(())
}

impl MrmPath {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write_provenance(&mut w, &self.resolution, &self.provenance)?;
        if let Some(q) = self.tilt_q {
            writeln!(w, "# tilt_q: {q:?}")?;
        }
        writeln!(w, "k,b")?;
        for (k, b) in self.increments.iter().enumerate() {
            writeln!(w, "{k},{b:?}")?;
        }
        Ok(())
    }
}

impl MrwPath {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write_provenance(&mut w, &self.resolution, &self.provenance)?;
        writeln!(w, "# xi_seed: {}", self.gaussian_seed)?;
        writeln!(w, "k,dX")?;
        for (k, dx) in self.increments.iter().enumerate() {
            writeln!(w, "{k},{dx:?}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::LevyExponent;
    use crate::fields::{sample_gaussian_omega, tilt_field, GaussianSampler, GridSpec};
    use crate::geometry::ConeSpec;
    use crate::stats;

    fn g02() -> LevyExponent {
        LevyExponent::gaussian(0.2).unwrap()
    }

    fn zero_field(level: u32, horizon: f64) -> OmegaGrid {
        let grid = GridSpec::new(level, horizon).unwrap();
        let cone = ConeSpec::new(1.0, grid.spacing()).unwrap();
        OmegaGrid::from_values(vec![0.0; grid.n_points()], cone, grid, g02(), 0).unwrap()
    }

    #[test]
    fn cell_counts() {
        assert_eq!(Resolution::new(3, 1.0, 0.0).unwrap().cell_count(), 8);
        assert_eq!(Resolution::new(6, 1.0, 1.0).unwrap().cell_count(), 4096);
        assert_eq!(Resolution::new(4, 1.5, 0.5).unwrap().cell_count(), 96);
        assert_eq!(Resolution::new(3, 1.3, 0.0).unwrap().cell_count(), 10);
        assert!(Resolution::new(3, 0.0, 0.0).is_err());
        assert!(Resolution::new(3, 1.0, -1.0).is_err());
    }

    #[test]
    fn zero_field_gives_uniform_increments() {
        let omega = zero_field(7, 1.0);
        let path = integrate_mrm(&omega, Resolution::new(3, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(path.increments(), &[0.125; 8]);
        assert_eq!(mrm_total(&path), 1.0);
        assert_eq!(path.provenance().oversampling, 4);
    }

    #[test]
    fn rejects_insufficient_grid() {
        let omega = zero_field(7, 1.0);
        assert!(integrate_mrm(&omega, Resolution::new(8, 1.0, 0.0).unwrap()).is_err());
        assert!(integrate_mrm(&omega, Resolution::new(3, 2.0, 0.0).unwrap()).is_err());
        assert!(integrate_mrm(&omega, Resolution::new(3, 1.0, 0.5).unwrap()).is_err());
    }

    #[test]
    fn total_telescopes_and_tilt_one_is_identity() {
        let cone = ConeSpec::new(1.0, (-10f64).exp2()).unwrap();
        let grid = GridSpec::new(10, 1.0).unwrap();
        let omega = sample_gaussian_omega(&g02(), &cone, &grid, 17).unwrap();
        let res = Resolution::new(5, 1.0, 0.0).unwrap();
        let path = integrate_mrm(&omega, res).unwrap();
        assert!(path.increments().iter().all(|&b| b > 0.0));
        let direct: f64 = omega.values().iter().map(|w| w.exp()).sum::<f64>() * grid.spacing();
        assert!((mrm_total(&path) - direct).abs() <= 1e-10 * direct);
        let tilted = integrate_mrm(&tilt_field(&omega, 1.0).unwrap(), res).unwrap();
        assert_eq!(tilted.increments(), path.increments());
        assert_eq!(tilted.tilt_q(), Some(1.0));
    }

    #[test]
    fn mean_measure_is_horizon() {
        let cone = ConeSpec::new(1.0, (-10f64).exp2()).unwrap();
        let grid = GridSpec::new(10, 1.0).unwrap();
        let sampler = GaussianSampler::new(&g02(), &cone, &grid).unwrap();
        let res = Resolution::new(6, 1.0, 0.0).unwrap();
        let totals: Vec<f64> = (0..2000)
            .map(|s| mrm_total(&integrate_mrm(&sampler.sample(s), res).unwrap()))
            .collect();
        assert!((stats::mean(&totals) - 1.0).abs() < 3.0 * stats::std_error(&totals));
    }

    #[test]
    fn constant_subordinator_gives_gaussian_increments() {
        let prov = Provenance {
            seed: 0,
            family: g02().family(),
            integral_scale: 1.0,
            oversampling: 0,
        };
        let mrm = MrmPath::constant(Resolution::new(10, 1.0, 0.0).unwrap(), prov);
        let mrw = subordinate_brownian(&mrm, 99).unwrap();
        let z: Vec<f64> = mrw.increments().iter().map(|x| x * 32.0).collect();
        assert!(stats::mean(&z).abs() < 4.0 / 32.0);
        assert!((stats::variance(&z) - 1.0).abs() < 0.15);
        assert_eq!(subordinate_brownian(&mrm, 99).unwrap(), mrw);
    }

    #[test]
    fn walk_moments_and_tilt_rejection() {
        let cone = ConeSpec::new(1.0, (-9f64).exp2()).unwrap();
        let grid = GridSpec::new(9, 1.0).unwrap();
        let sampler = GaussianSampler::new(&g02(), &cone, &grid).unwrap();
        let res = Resolution::new(5, 1.0, 0.0).unwrap();
        let (mut qv, mut sum) = (Vec::new(), Vec::new());
        for s in 0..2000 {
            let mrm = integrate_mrm(&sampler.sample(s), res).unwrap();
            let mrw = subordinate_brownian(&mrm, 1_000_000 + s).unwrap();
            for (dx, b) in mrw.increments().iter().zip(mrm.increments()) {
                assert!((dx * dx - b * (dx / b.sqrt()).powi(2)).abs() < 1e-15);
            }
            qv.push(mrw.increments().iter().map(|x| x * x).sum::<f64>());
            sum.push(mrw.increments().iter().sum::<f64>());
        }
        assert!((stats::mean(&qv) - 1.0).abs() < 3.0 * stats::std_error(&qv));
        assert!(stats::mean(&sum).abs() < 3.0 * stats::std_error(&sum));

        let tilted = integrate_mrm(&tilt_field(&sampler.sample(0), 2.0).unwrap(), res).unwrap();
        assert!(subordinate_brownian(&tilted, 1).is_err());
    }

    #[test]
    fn csv_layout() {
        let omega = zero_field(4, 1.0);
        let path = integrate_mrm(&omega, Resolution::new(2, 1.0, 0.0).unwrap()).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, ["k,b", "0,0.25", "1,0.25", "2,0.25", "3,0.25"]);
        assert!(text.contains("# oversampling: 2"));
    }
}
