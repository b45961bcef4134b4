//! Laplace exponents of the infinitely divisible seed law and the regime
//! thresholds derived from them.
//!
//! Two finite-activity families are supported: Gaussian with variance
//! `lambda2` and compound Poisson with intensity `c` and a single jump size
//! `x0`. In both cases the drift is solved from the normalization
//! `psi(1) = 0`, so `E[M(t)] = t` for the resulting measure.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Upper end of the bracketing scan for `q_star` and `q_chi`.
const SCAN_LIMIT: f64 = 1.0e6;
const SCAN_STEP: f64 = 0.5;
const BISECTION_RTOL: f64 = 1.0e-13;

/// An existential condition holds when its minimum over `epsilon` falls below this.
const EXISTENCE_THRESHOLD: f64 = -1.0e-12;
const EPS_MIN: f64 = 1.0e-8;
const EPS_MAX: f64 = 1.0;
const EPS_GRID: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Gaussian { variance: f64 },
    CompoundPoisson { intensity: f64, jump: f64 },
}

/// Laplace exponent `psi` of an infinitely divisible law, normalized by `psi(1) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyExponent {
    family: Family,
    drift: f64,
}

impl LevyExponent {
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            domain!("gaussian variance must be positive and finite, got {variance}");
        }
        Ok(Self {
            family: Family::Gaussian { variance },
            drift: -0.5 * variance,
        })
    }

    /// Compound Poisson family. A zero jump is accepted and gives the
    /// degenerate field `omega = 0`.
    pub fn compound_poisson(intensity: f64, jump: f64) -> Result<Self> {
        if !(intensity.is_finite() && intensity > 0.0) {
            domain!("poisson intensity must be positive and finite, got {intensity}");
        }
        if !jump.is_finite() {
            domain!("poisson jump must be finite, got {jump}");
        }
        Ok(Self {
            family: Family::CompoundPoisson { intensity, jump },
            drift: -intensity * jump.exp_m1(),
        })
    }

    pub fn from_family(family: Family) -> Result<Self> {
        match family {
            Family::Gaussian { variance } => Self::gaussian(variance),
            Family::CompoundPoisson { intensity, jump } => Self::compound_poisson(intensity, jump),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Drift `a` in the Lévy–Khinchine triplet.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, Family::Gaussian { .. })
    }

    /// `psi(q)` for `q >= 0`.
    pub fn psi(&self, q: f64) -> Result<f64> {
        check_order(q)?;
        Ok(self.psi_raw(q))
    }

    /// First derivative of `psi`.
    pub fn psi_prime(&self, q: f64) -> Result<f64> {
        check_order(q)?;
        Ok(self.psi_prime_raw(q))
    }

    /// Exponent of the tilted measure, `r -> psi(q r) - r psi(q)`.
    pub fn psi_tilted(&self, q: f64, r: f64) -> Result<f64> {
        if !(q > 0.0) {
            domain!("tilt order must be positive, got {q}");
        }
        check_order(r)?;
        Ok(self.psi_raw(q * r) - r * self.psi_raw(q))
    }

    /// Scaling exponent of the measure, `q - psi(q)`.
    pub fn zeta_m(&self, q: f64) -> Result<f64> {
        Ok(q - self.psi(q)?)
    }

    /// Scaling exponent of the walk, `p/2 - psi(p/2)`.
    pub fn zeta_x(&self, p: f64) -> Result<f64> {
        self.zeta_m(0.5 * p)
    }

    pub(crate) fn psi_raw(&self, q: f64) -> f64 {
        match self.family {
            Family::Gaussian { variance } => 0.5 * variance * q * (q - 1.0),
            Family::CompoundPoisson { intensity, jump } => {
                self.drift * q + intensity * (q * jump).exp_m1()
            }
        }
    }

    pub(crate) fn psi_prime_raw(&self, q: f64) -> f64 {
        match self.family {
            Family::Gaussian { variance } => variance * (q - 0.5),
            Family::CompoundPoisson { intensity, jump } => {
                self.drift + intensity * jump * (q * jump).exp()
            }
        }
    }
}

fn check_order(q: f64) -> Result<()> {
    if q.is_nan() || q < 0.0 {
        domain!("moment order must be nonnegative, got {q}");
    }
    Ok(())
}

/// Moment-existence and recoverability thresholds for one `chi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub q_star: f64,
    pub q_chi: f64,
    pub chi: f64,
}

impl RegimeThresholds {
    pub fn compute(exp: &LevyExponent, chi: f64) -> Result<Self> {
        Ok(Self {
            q_star: q_star(exp)?,
            q_chi: q_chi(exp, chi)?,
            chi,
        })
    }
}

/// Minimizes `g` over `epsilon in [EPS_MIN, EPS_MAX]`: log grid, then golden section.
fn min_over_epsilon(g: impl Fn(f64) -> f64) -> f64 {
    let ratio = (EPS_MAX / EPS_MIN).ln() / (EPS_GRID - 1) as f64;
    let grid = |i: usize| EPS_MIN * (ratio * i as f64).exp();

    let (best_i, best) = (0..EPS_GRID)
        .map(|i| (i, g(grid(i))))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });

    let mut lo = grid(best_i.saturating_sub(1));
    let mut hi = grid((best_i + 1).min(EPS_GRID - 1));
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..100 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = g(x2);
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    best.min(f1).min(f2)
}

/// Whether `psi(q(1+e)) < q(1+e) - 1` for some `e > 0` (requires `q >= 1`).
pub fn holds_aq(exp: &LevyExponent, q: f64) -> Result<bool> {
    if !(q >= 1.0) {
        domain!("moment condition is defined for q >= 1, got {q}");
    }
    let g = |e: f64| {
        let qe = q * (1.0 + e);
        exp.psi_raw(qe) - (qe - 1.0)
    };
    Ok(min_over_epsilon(g) < EXISTENCE_THRESHOLD)
}

/// Whether `psi_q(1+e) < e (1 + chi)` for some `e > 0`.
pub fn holds_bq(exp: &LevyExponent, q: f64, chi: f64) -> Result<bool> {
    if !(q > 0.0) {
        domain!("tilt order must be positive, got {q}");
    }
    check_chi(chi)?;
    let psi_q = exp.psi_raw(q);
    let g = |e: f64| {
        let r = 1.0 + e;
        (exp.psi_raw(q * r) - r * psi_q) - e * (1.0 + chi)
    };
    Ok(min_over_epsilon(g) < EXISTENCE_THRESHOLD)
}

fn check_chi(chi: f64) -> Result<()> {
    if chi.is_nan() || chi < 0.0 {
        domain!("chi must be nonnegative, got {chi}");
    }
    Ok(())
}

/// Smallest root above `start` of a function that is nonpositive at `start`,
/// by a fixed-step sign scan and bisection. `+inf` when no sign change occurs
/// below the scan limit.
fn first_root_above(start: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut lo = start;
    let mut k = 1u64;
    let hi = loop {
        let q = start + SCAN_STEP * k as f64;
        if q > SCAN_LIMIT {
            return f64::INFINITY;
        }
        if f(q) > 0.0 {
            break q;
        }
        lo = q;
        k += 1;
    };
    let mut hi = hi;
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `sup {q >= 1 : A_q holds}`, the root above 1 of `psi(q) = q - 1`.
pub fn q_star(exp: &LevyExponent) -> Result<f64> {
    if !holds_aq(exp, 1.0)? {
        return Err(Error::InvalidModel(
            "the normalized exponent violates the first-moment condition".into(),
        ));
    }
    Ok(first_root_above(1.0, |q| exp.psi_raw(q) - (q - 1.0)))
}

/// `sup {q > 0 : B_q(chi) holds}`.
///
/// `e -> psi_q(1+e) - e(1+chi)` is convex and vanishes at 0, so the condition
/// holds iff its slope at 0, `q psi'(q) - psi(q) - (1+chi)`, is negative.
/// That slope is nondecreasing in `q`, which makes the threshold its root.
pub fn q_chi(exp: &LevyExponent, chi: f64) -> Result<f64> {
    check_chi(chi)?;
    let slope = |q: f64| q * exp.psi_prime_raw(q) - exp.psi_raw(q) - (1.0 + chi);
    Ok(first_root_above(0.0, slope))
}

/// Almost-sure limit of `log2(Sigma_n(q)) / (-n)`.
pub fn predicted_slope(exp: &LevyExponent, q: f64, chi: f64) -> Result<f64> {
    if !(q > 0.0) {
        domain!("moment order must be positive, got {q}");
    }
    let qc = q_chi(exp, chi)?;
    if q < qc {
        Ok(q - exp.psi_raw(q) - 1.0 - chi)
    } else {
        Ok(q * (1.0 - exp.psi_prime_raw(qc)))
    }
}
