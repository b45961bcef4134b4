//! Structure functions of the measure (`Sigma_n`) and of the walk (`S_n`).

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::cascade::{MrmPath, MrwPath, Resolution};
use crate::error::{domain, usage, Error, Result};
use crate::exponents::{holds_aq, LevyExponent};
use crate::stats;

/// `Sigma_n(q) = sum_k b_{n,k}^q`.
pub fn sigma_n(mrm: &MrmPath, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        domain!("structure order must be positive, got {q}");
    }
    Ok(mrm.increments().iter().map(|b| b.powf(q)).sum())
}

/// `S_n(2q) = sum_k |dX_k|^(2q)`.
pub fn s_n(mrw: &MrwPath, two_q: f64) -> Result<f64> {
    if !(two_q > 0.0) {
        domain!("structure order must be positive, got {two_q}");
    }
    Ok(mrw.increments().iter().map(|x| x.abs().powf(two_q)).sum())
}

/// `E|xi|^p` for a standard normal, `2^(p/2) Gamma((p+1)/2) / sqrt(pi)`.
pub fn gaussian_abs_moment(two_q: f64) -> Result<f64> {
    if !(two_q > 0.0) {
        domain!("moment order must be positive, got {two_q}");
    }
    let q = 0.5 * two_q;
    Ok((q * std::f64::consts::LN_2 + ln_gamma(q + 0.5) - 0.5 * std::f64::consts::PI.ln()).exp())
}

/// `E[Sigma_{n1}(q)] / E[Sigma_{n2}(q)]` with the unknown prefactor cancelled.
pub fn expected_sigma_ratio(
    exp: &LevyExponent,
    q: f64,
    n1: u32,
    n2: u32,
    t: f64,
    chi: f64,
) -> Result<f64> {
    if q > 1.0 && !holds_aq(exp, q)? {
        return Err(Error::MomentDivergence { q });
    }
    let psi = exp.psi(q)?;
    let c1 = Resolution::new(n1, t, chi)?.cell_count() as f64;
    let c2 = Resolution::new(n2, t, chi)?.cell_count() as f64;
    Ok(c1 / c2 * ((n1 as f64 - n2 as f64) * (psi - q)).exp2())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    /// `Sigma_n(q)` of the measure.
    Sigma,
    /// `S_n(2q)` of the walk; `q_values` still holds `q`.
    S,
}

/// `value[q][n]` for one replicate (or an ensemble aggregate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureSeries {
    pub q_values: Vec<f64>,
    pub n_values: Vec<u32>,
    pub chi: f64,
    pub t: f64,
    pub kind: StructureKind,
    pub values: Vec<Vec<f64>>,
    pub replicate_id: u64,
}

fn common_resolution(mut it: impl Iterator<Item = Resolution>) -> Result<(f64, f64)> {
    let first = it
        .next()
        .ok_or_else(|| Error::Usage("no paths supplied".into()))?;
    for r in it {
        if r.t != first.t || r.chi != first.chi {
            usage!("paths mix horizons: ({}, {}) vs ({}, {})", first.t, first.chi, r.t, r.chi);
        }
    }
    Ok((first.t, first.chi))
}

impl StructureSeries {
    /// `Sigma_n(q)` for each path (one path per `n`) and each `q`.
    pub fn sigma(paths: &[MrmPath], q_values: &[f64], replicate_id: u64) -> Result<Self> {
        let (t, chi) = common_resolution(paths.iter().map(|p| p.resolution()))?;
        let values = q_values
            .iter()
            .map(|&q| paths.iter().map(|p| sigma_n(p, q)).collect())
            .collect::<Result<_>>()?;
        Ok(Self {
            q_values: q_values.to_vec(),
            n_values: paths.iter().map(|p| p.resolution().n).collect(),
            chi,
            t,
            kind: StructureKind::Sigma,
            values,
            replicate_id,
        })
    }

    /// `S_n(2q)` for each walk path (one per `n`) and each `q`.
    pub fn s(paths: &[MrwPath], q_values: &[f64], replicate_id: u64) -> Result<Self> {
        let (t, chi) = common_resolution(paths.iter().map(|p| p.resolution()))?;
        let values = q_values
            .iter()
            .map(|&q| paths.iter().map(|p| s_n(p, 2.0 * q)).collect())
            .collect::<Result<_>>()?;
        Ok(Self {
            q_values: q_values.to_vec(),
            n_values: paths.iter().map(|p| p.resolution().n).collect(),
            chi,
            t,
            kind: StructureKind::S,
            values,
            replicate_id,
        })
    }

    /// Order actually raised: `q` for `Sigma`, `2q` for `S`.
    pub fn order(&self, qi: usize) -> f64 {
        match self.kind {
            StructureKind::Sigma => self.q_values[qi],
            StructureKind::S => 2.0 * self.q_values[qi],
        }
    }

    fn same_layout(&self, other: &Self) -> bool {
        self.q_values == other.q_values
            && self.n_values == other.n_values
            && self.kind == other.kind
            && self.chi == other.chi
            && self.t == other.t
    }
}

/// Per-entry ensemble mean and its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub mean: StructureSeries,
    pub std_error: Vec<Vec<f64>>,
    pub replicates: usize,
}

pub fn summarize(ensemble: &[StructureSeries]) -> Result<EnsembleSummary> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::Usage("empty ensemble".into()))?;
    if let Some(bad) = ensemble.iter().find(|s| !first.same_layout(s)) {
        usage!("replicate {} has a different layout", bad.replicate_id);
    }
    let column = |qi: usize, ni: usize| -> Vec<f64> {
        ensemble.iter().map(|s| s.values[qi][ni]).collect()
    };
    let (nq, nn) = (first.q_values.len(), first.n_values.len());
    let mut mean = first.clone();
    let mut se = vec![vec![0.0; nn]; nq];
    for qi in 0..nq {
        for ni in 0..nn {
            let col = column(qi, ni);
            mean.values[qi][ni] = stats::mean(&col);
            se[qi][ni] = stats::std_error(&col);
        }
    }
    mean.replicate_id = u64::MAX;
    Ok(EnsembleSummary {
        mean,
        std_error: se,
        replicates: ensemble.len(),
    })
}

/// Divides every entry by its ensemble mean over replicates.
///
/// The expectation carries an unknown prefactor, so the normalization is
/// empirical and needs at least two replicates.
pub fn normalized_series(
    ensemble: &[StructureSeries],
    exp: &LevyExponent,
) -> Result<Vec<StructureSeries>> {
    if ensemble.len() < 2 {
        return Err(Error::CannotNormalize(ensemble.len()));
    }
    let summary = summarize(ensemble)?;
    for &q in &summary.mean.q_values {
        if q > 1.0 && !holds_aq(exp, q)? {
            return Err(Error::MomentDivergence { q });
        }
    }
    Ok(ensemble
        .iter()
        .map(|s| {
            let mut out = s.clone();
            for (row, mrow) in out.values.iter_mut().zip(&summary.mean.values) {
                for (v, m) in row.iter_mut().zip(mrow) {
                    *v /= m;
                }
            }
            out
        })
        .collect())
}
