//! Measures of cones and partition sets under `mu(dt, dl) = l^-2 dt dl`.
//!
//! The closed forms come from integrating `l^-2` over slices of constant
//! `l`. `oracle_mu` integrates an arbitrary region predicate instead and is
//! the independent check used by the tests and `verify-geometry`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Integral scale `T` and cutoff `l` of the cone `A_l(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    integral_scale: f64,
    cutoff: f64,
}

impl ConeSpec {
    pub fn new(integral_scale: f64, cutoff: f64) -> Result<Self> {
        if !(integral_scale.is_finite() && integral_scale > 0.0) {
            domain!("integral scale must be positive, got {integral_scale}");
        }
        if !(cutoff > 0.0 && cutoff <= integral_scale) {
            domain!("cutoff must lie in (0, T = {integral_scale}], got {cutoff}");
        }
        Ok(Self {
            integral_scale,
            cutoff,
        })
    }

    pub fn integral_scale(&self) -> f64 {
        self.integral_scale
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Membership of `(t', l')` in `A_l(t)`, boundary included.
    pub fn contains(&self, t: f64, tp: f64, lp: f64) -> bool {
        lp >= self.cutoff && (t - tp).abs() <= 0.5 * lp.min(self.integral_scale)
    }
}

/// Split of the analysis level `n` at `m = floor((1 - delta) n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    n: u32,
    m: u32,
    delta: f64,
}

impl PartitionSpec {
    pub fn new(n: u32, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            domain!("delta must lie in (0, 1), got {delta}");
        }
        let m = ((1.0 - delta) * n as f64).floor() as u32;
        Ok(Self { n, m, delta })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Height `2^-m - 2^-n` separating the upper and lower parts of the cone remainder.
    pub fn split_height(&self) -> f64 {
        (-(self.m as f64)).exp2() - (-(self.n as f64)).exp2()
    }

    fn ratio(&self) -> Result<f64> {
        if self.m >= self.n {
            domain!("partition requires m < n, got m = {}, n = {}", self.m, self.n);
        }
        Ok((self.m as f64 - self.n as f64).exp2())
    }
}

/// `mu(A_l(t)) = log(T/l) + 1`.
pub fn mu_cone(spec: &ConeSpec) -> f64 {
    (spec.integral_scale / spec.cutoff).ln() + 1.0
}

/// `mu(A_l(t) ∩ A_l(t + tau))`, the covariance kernel of the Gaussian field up to `lambda^2`.
pub fn mu_overlap(spec: &ConeSpec, tau: f64) -> f64 {
    let tau = tau.abs();
    let (t_int, l) = (spec.integral_scale, spec.cutoff);
    if tau <= l {
        (t_int / l).ln() + 1.0 - tau / l
    } else if tau <= t_int {
        (t_int / tau).ln()
    } else {
        0.0
    }
}

/// `mu` of the common part of all cones over a dyadic cell of width `2^-n`.
pub fn mu_tilde(integral_scale: f64, n: u32) -> Result<f64> {
    let x = integral_scale * (n as f64).exp2();
    if !(x >= 1.0) {
        domain!("need T 2^n >= 1, got T = {integral_scale}, n = {n}");
    }
    Ok(x.ln())
}

/// `mu` of the upper remainder, `2^(m-n) / (1 - 2^(m-n))`.
pub fn mu_theta(p: &PartitionSpec) -> Result<f64> {
    let r = p.ratio()?;
    Ok(r / (1.0 - r))
}

/// `mu` of the lower remainder at cutoff `2^-n`, `1 - mu_theta`.
pub fn mu_beta(p: &PartitionSpec) -> Result<f64> {
    Ok(1.0 - mu_theta(p)?)
}

/// Integration window for `oracle_mu`: the hull of the cones with apex in
/// `[t_lo, t_hi]`, for scales in `[l_min, l_max]`. At scale `l'` the region
/// must lie within `[t_lo - w, t_hi + w]`, `w = min(l', T) / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub t_lo: f64,
    pub t_hi: f64,
    pub integral_scale: f64,
    pub l_min: f64,
    pub l_max: f64,
}

impl Bounds {
    /// Hull of the cones of `cone` over `[t_lo, t_hi]`, truncated where the
    /// scale tail carries at most `tol / 10` of mass per unit of width `T`.
    pub fn around_cone(cone: &ConeSpec, t_lo: f64, t_hi: f64, tol: f64) -> Self {
        Self {
            t_lo,
            t_hi,
            integral_scale: cone.integral_scale,
            l_min: cone.cutoff,
            l_max: 10.0 * cone.integral_scale / tol,
        }
    }

    fn window(&self, lp: f64) -> (f64, f64) {
        let w = 0.5 * lp.min(self.integral_scale);
        (self.t_lo - w, self.t_hi + w)
    }
}

const SLICE_SCAN: usize = 4096;
const MAX_SLICE_SCAN: usize = 1 << 20;
/// Scan step never exceeds this fraction of the cutoff.
const MIN_STEP_PER_CUTOFF: f64 = 1.0 / 32.0;
const MAX_DEPTH: u32 = 48;

/// Nested quadrature of `∫∫ 1_region(t', l') l'^-2 dt' dl'` over `bounds`.
///
/// The outer integral runs over `y = 1/l'`, which turns the weight into
/// Lebesgue measure, by adaptive Simpson with a Richardson stopping test.
/// Each inner slice is scanned on a uniform grid spanning the hull window at
/// that scale, with a step below both `1/4096` of the window and `l_min/32`,
/// and every sign change is bisected to machine precision.
pub fn oracle_mu<F>(region: F, bounds: Bounds, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> bool,
{
    if !(bounds.t_hi >= bounds.t_lo
        && bounds.integral_scale > 0.0
        && bounds.l_max > bounds.l_min
        && bounds.l_min > 0.0)
    {
        domain!("degenerate integration window {bounds:?}");
    }
    if !(tol > 0.0) {
        domain!("tolerance must be positive, got {tol}");
    }
    let slice = |y: f64| {
        let lp = 1.0 / y;
        let (lo, hi) = bounds.window(lp);
        let steps = ((hi - lo) / (MIN_STEP_PER_CUTOFF * bounds.l_min)).ceil() as usize;
        set_length(|tp| region(tp, lp), lo, hi, steps.clamp(SLICE_SCAN, MAX_SLICE_SCAN))
    };
    let (a, b) = (1.0 / bounds.l_max, 1.0 / bounds.l_min);
    let (fa, fm, fb) = (slice(a), slice(0.5 * (a + b)), slice(b));
    let whole = simpson(a, b, fa, fm, fb);
    let floor = 1e-10 * (b - a);
    adaptive_simpson(&slice, a, b, fa, fm, fb, whole, tol, floor, 0)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Below the width floor a jump in the slice length costs at most `floor * f`.
    if (delta.abs() <= 15.0 * tol && depth >= 4) || b - a <= floor {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::OracleFailure(format!(
            "no convergence on [{a}, {b}] after {MAX_DEPTH} refinements"
        )));
    }
    Ok(
        adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, floor, depth + 1)?
            + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, floor, depth + 1)?,
    )
}

/// Lebesgue measure of `{x in [lo, hi] : inside(x)}`.
fn set_length(inside: impl Fn(f64) -> bool, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let mut total = 0.0;
    let mut prev_x = lo;
    let mut prev_in = inside(lo);
    let mut start = if prev_in { Some(lo) } else { None };
    for i in 1..=steps {
        let x = if i == steps { hi } else { lo + h * i as f64 };
        let now_in = inside(x);
        if now_in != prev_in {
            let edge = bisect_edge(&inside, prev_x, x, prev_in);
            match start.take() {
                Some(s) => total += edge - s,
                None => start = Some(edge),
            }
        }
        prev_x = x;
        prev_in = now_in;
    }
    if let Some(s) = start {
        total += hi - s;
    }
    total
}

fn bisect_edge(inside: &impl Fn(f64) -> bool, mut a: f64, mut b: f64, a_in: bool) -> f64 {
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if inside(m) == a_in {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Region predicates for the sets measured above, for use with `oracle_mu`.
pub mod regions {
    use super::{ConeSpec, PartitionSpec};

    /// `A_l(t)`.
    pub fn cone(spec: ConeSpec, t: f64) -> impl Fn(f64, f64) -> bool {
        move |tp, lp| spec.contains(t, tp, lp)
    }

    /// `A_l(t) ∩ A_l(t + tau)`.
    pub fn overlap(spec: ConeSpec, t: f64, tau: f64) -> impl Fn(f64, f64) -> bool {
        move |tp, lp| spec.contains(t, tp, lp) && spec.contains(t + tau, tp, lp)
    }

    /// Intersection of the cones `A_l(v)` for `v` in the cell `[k 2^-n, (k+1) 2^-n]`.
    /// Only the two endpoint cones matter since each slice is an interval.
    pub fn cell_core(integral_scale: f64, n: u32, k: i64) -> impl Fn(f64, f64) -> bool {
        let s = (-(n as f64)).exp2();
        let (a, b) = (k as f64 * s, (k + 1) as f64 * s);
        move |tp, lp| {
            let w = 0.5 * lp.min(integral_scale);
            lp > 0.0 && (a - tp).abs() <= w && (b - tp).abs() <= w
        }
    }

    /// Part of `A_{2^-n}(u) \ core` above (`upper = true`) or below the split height.
    pub fn remainder(
        integral_scale: f64,
        p: PartitionSpec,
        u: f64,
        upper: bool,
    ) -> impl Fn(f64, f64) -> bool {
        let s = (-(p.n() as f64)).exp2();
        let k = (u / s).floor() as i64;
        let cone = ConeSpec {
            integral_scale,
            cutoff: s,
        };
        let core = cell_core(integral_scale, p.n(), k);
        let h = p.split_height();
        move |tp, lp| cone.contains(u, tp, lp) && !core(tp, lp) && ((lp >= h) == upper)
    }
}
