//! Scaling-exponent estimation from structure-function series.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Error, Result};
use crate::exponents::{predicted_slope, q_chi, q_star, LevyExponent};
use crate::structure::{StructureKind, StructureSeries};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Least-squares slope of `log2(value)` against `-n`.
pub fn fit_slope(values: &[f64], n_values: &[u32]) -> Result<SlopeFit> {
    if values.len() != n_values.len() {
        usage!("{} values for {} levels", values.len(), n_values.len());
    }
    let mut distinct = n_values.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: distinct.len(),
        });
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        domain!("structure values must be positive and finite, got {v}");
    }
    let xs: Vec<f64> = n_values.iter().map(|&n| -(n as f64)).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.log2()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = if xs.len() > 2 {
        (ssr / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope,
        stderr,
        intercept,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `q < q_chi`: the slope tends to `q - psi(q) - 1 - chi`.
    Recoverable,
    /// `q >= q_chi`: the slope tends to `q (1 - psi'(q_chi))`.
    Linearized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeClass {
    pub regime: Regime,
    /// `q >= q_star`: the moment of order `q` of the measure is infinite.
    pub moment_divergent: bool,
}

impl RegimeClass {
    /// Whether the scaling exponent can be read off the slope.
    pub fn recoverable(&self) -> bool {
        self.regime == Regime::Recoverable && !self.moment_divergent
    }
}

pub fn classify_regime(exp: &LevyExponent, q: f64, chi: f64) -> Result<RegimeClass> {
    let qc = q_chi(exp, chi)?;
    let qs = q_star(exp)?;
    Ok(RegimeClass {
        regime: if q < qc {
            Regime::Recoverable
        } else {
            Regime::Linearized
        },
        // q_star is a bisection root; treat the boundary itself as divergent.
        moment_divergent: q >= qs * (1.0 - 1e-9),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub q: f64,
    /// Exponent actually applied to the increments (`q` or `2q`).
    pub order: f64,
    pub slope_hat: f64,
    pub stderr: f64,
    pub theory_slope: f64,
    pub regime: Regime,
    pub moment_divergent: bool,
    pub zeta_hat: Option<f64>,
    pub psi_hat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub chi: f64,
    pub t: f64,
    pub kind: StructureKind,
    pub n_values: Vec<u32>,
    pub q_star: f64,
    pub q_chi: f64,
    pub entries: Vec<ScalingEntry>,
}

/// Fits every `q` row of `series` and sets it against the predicted limit.
pub fn estimate_zeta(series: &StructureSeries, exp: &LevyExponent) -> Result<ScalingReport> {
    let chi = series.chi;
    let entries = series
        .q_values
        .iter()
        .enumerate()
        .map(|(qi, &q)| {
            let fit = fit_slope(&series.values[qi], &series.n_values)?;
            let class = classify_regime(exp, q, chi)?;
            let (zeta_hat, psi_hat) = match class.regime {
                Regime::Recoverable => {
                    let z = fit.slope + 1.0 + chi;
                    (Some(z), Some(q - z))
                }
                Regime::Linearized => (None, None),
            };
            Ok(ScalingEntry {
                q,
                order: series.order(qi),
                slope_hat: fit.slope,
                stderr: fit.stderr,
                theory_slope: predicted_slope(exp, q, chi)?,
                regime: class.regime,
                moment_divergent: class.moment_divergent,
                zeta_hat,
                psi_hat,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScalingReport {
        chi,
        t: series.t,
        kind: series.kind,
        n_values: series.n_values.clone(),
        q_star: q_star(exp)?,
        q_chi: q_chi(exp, chi)?,
        entries,
    })
}

/// Two-resolution estimate of `q - psi(q) - 1` at a long horizon.
pub fn fixed_resolution_estimate(s1: f64, s2: f64, n1: u32, n2: u32) -> Result<f64> {
    if n1 == n2 {
        usage!("the two resolutions must differ, got n1 = n2 = {n1}");
    }
    if !(s1 > 0.0 && s2 > 0.0) {
        domain!("structure values must be positive, got {s1} and {s2}");
    }
    Ok((s1.log2() - s2.log2()) / (n2 as f64 - n1 as f64))
}

impl ScalingReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# chi: {:?}", self.chi)?;
        writeln!(w, "# t: {:?}", self.t)?;
        writeln!(w, "# kind: {}", serde_json::to_string(&self.kind)?)?;
        writeln!(w, "q,order,slope_hat,stderr,theory_slope,regime,moment_divergent")?;
        for e in &self.entries {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{},{}",
                e.q,
                e.order,
                e.slope_hat,
                e.stderr,
                e.theory_slope,
                match e.regime {
                    Regime::Recoverable => "recoverable",
                    Regime::Linearized => "linearized",
                },
                e.moment_divergent
            )?;
        }
        Ok(())
    }
}
