//! Lists of possible degrees of mobility, and product cones realizing them.
//!
//! `D = k² + ℓ` is realized on the cone `ℝ^{2k} × C(k₁) × … × C(k_ℓ)` with
//! `Σ kᵢ = n + 1 − k`, where `C(kᵢ)` is an irreducible Kähler cone of complex
//! dimension `kᵢ`: the cone over flat `ℂ^{kᵢ−1}`, or in the Einstein case the
//! Ricci-flat cone over the Kähler–Einstein product `ℂP¹ × ℂP^{kᵢ−2}`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::CatalogEntry;
use crate::error::{LabError, Result};
use crate::holonomy::{self, HolonomyConfig, ParallelTensorDim};
use crate::kahler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    General,
    Einstein,
    Affine,
    EssentialGeneral,
    EssentialEinstein,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::General, Mode::Einstein, Mode::Affine, Mode::EssentialGeneral, Mode::EssentialEinstein];

    pub fn name(self) -> &'static str {
        match self {
            Mode::General => "general",
            Mode::Einstein => "einstein",
            Mode::Affine => "affine",
            Mode::EssentialGeneral => "essential_general",
            Mode::EssentialEinstein => "essential_einstein",
        }
    }

    fn einstein(self) -> bool {
        matches!(self, Mode::Einstein | Mode::EssentialEinstein)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Mode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s || m.name().replace('_', "-") == s)
            .ok_or_else(|| LabError::BadParams(format!("unknown mode '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MobilityList {
    pub n: usize,
    pub mode: Mode,
    pub values: Vec<usize>,
    /// Values attained by a metric admitting a c-projectively but not
    /// affinely equivalent one (for the degree lists: those `≥ 2`).
    pub attainable: Vec<usize>,
}

/// `(k, ℓ)` with `k ≤ n − 1` (`n − 2` Einstein) and `1 ≤ ℓ ≤ ⌊(n+1−k)/2⌋` (`/3`).
pub fn feasible_pairs(n: usize, einstein: bool) -> Vec<(usize, usize)> {
    let (kmax, div) = if einstein { (n.saturating_sub(2), 3) } else { (n - 1, 2) };
    let mut out = Vec::new();
    for k in 0..=kmax {
        for l in 1..=(n + 1 - k) / div {
            out.push((k, l));
        }
    }
    out
}

pub fn enumerate(n: usize, mode: Mode) -> Result<MobilityList> {
    if n < 2 {
        return Err(LabError::BadDimension(n));
    }
    let mut values = BTreeSet::new();
    match mode {
        Mode::General | Mode::Einstein => {
            values.insert(2);
            values.extend(feasible_pairs(n, mode.einstein()).into_iter().map(|(k, l)| k * k + l));
            values.insert((n + 1) * (n + 1));
        }
        Mode::EssentialGeneral | Mode::EssentialEinstein => {
            values.extend([0, 1]);
            values.extend(feasible_pairs(n, mode.einstein()).into_iter().map(|(k, l)| k * k + l - 1));
            values.insert((n + 1) * (n + 1) - 1);
        }
        Mode::Affine => {
            for k in 0..n {
                values.extend((1..=n - k).map(|l| k * k + l));
            }
            values.insert(n * n);
        }
    }
    let values: Vec<usize> = values.into_iter().collect();
    let attainable = match mode {
        Mode::General | Mode::Einstein => values.iter().copied().filter(|&v| v >= 2).collect(),
        _ => values.clone(),
    };
    Ok(MobilityList { n, mode, values, attainable })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationPlan {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub einstein: bool,
    pub factor_half_dims: Vec<usize>,
}

impl RealizationPlan {
    pub fn expected(&self) -> usize {
        self.k * self.k + self.l
    }

    pub fn cone_dim(&self) -> usize {
        2 * (self.n + 1)
    }

    /// JSON construct tree of the cone this plan builds.
    pub fn recipe(&self) -> serde_json::Value {
        use serde_json::json;
        let mut factors = Vec::new();
        if self.k > 0 {
            factors.push(json!({"construct": "catalog", "key": "flat", "params": {"complex_dim": self.k}}));
        }
        for &ki in &self.factor_half_dims {
            let base = if self.einstein {
                let d = (ki - 1) as f64;
                json!({"construct": "product", "factors": [
                    {"construct": "catalog", "key": "fubini_study", "params": {"n": 1, "scale": 2.0 / (d + 1.0)}},
                    {"construct": "catalog", "key": "fubini_study", "params": {"n": ki - 2, "scale": (d) / (d + 1.0)}},
                ]})
            } else {
                json!({"construct": "catalog", "key": "flat", "params": {"complex_dim": ki - 1}})
            };
            factors.push(json!({"construct": "conify", "base": base}));
        }
        if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            json!({"construct": "product", "factors": factors})
        }
    }
}

/// Greedy partition of `n + 1 − k` into `ℓ` parts `≥ 2` (`≥ 3` Einstein),
/// remainder on the first part. `k = n + 1`, `ℓ = 0` is the flat cone.
pub fn realization_plan(n: usize, k: usize, l: usize, einstein: bool) -> Result<RealizationPlan> {
    let infeasible = || LabError::Infeasible { n, k, l, mode: if einstein { "einstein" } else { "general" }.into() };
    if n < 1 {
        return Err(LabError::BadDimension(n));
    }
    if k == n + 1 && l == 0 {
        return Ok(RealizationPlan { n, k, l, einstein, factor_half_dims: Vec::new() });
    }
    let min = if einstein { 3 } else { 2 };
    if l == 0 || k > n || l * min > n + 1 - k {
        return Err(infeasible());
    }
    let mut parts = vec![min; l];
    parts[0] += n + 1 - k - min * l;
    Ok(RealizationPlan { n, k, l, einstein, factor_half_dims: parts })
}

pub fn build_plan(plan: &RealizationPlan) -> Result<CatalogEntry> {
    crate::catalog::ManifoldSpec::from_json(&plan.recipe().to_string())?.build()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationReport {
    pub plan: RealizationPlan,
    pub expected: usize,
    pub measured: ParallelTensorDim,
    /// Largest `|Ric|` at the base point (Einstein plans only).
    pub ricci: Option<f64>,
    pub pass: bool,
}

/// Largest allowed cone dimension.
pub const MAX_CONE_DIM: usize = 12;

pub fn realize_and_verify(plan: &RealizationPlan, cfg: &HolonomyConfig) -> Result<RealizationReport> {
    if plan.cone_dim() > MAX_CONE_DIM {
        return Err(LabError::BadParams(format!("cone dimension {} exceeds {MAX_CONE_DIM}", plan.cone_dim())));
    }
    let entry = build_plan(plan)?;
    let base = entry.structure.domain().center();
    let measured = holonomy::parallel_tensor_dim_report(&entry.structure, &base, cfg)?;
    let ricci = if plan.einstein {
        Some(kahler::einstein_residual(&entry.structure, std::slice::from_ref(&base))?.residual)
    } else {
        None
    };
    let expected = plan.expected();
    let pass = measured.stabilized && measured.dimension == expected && ricci.is_none_or(|r| r < 1e-6);
    Ok(RealizationReport { plan: plan.clone(), expected, measured, ricci, pass })
}

/// Every plan with cone dimension at most `max_cone_dim`: all feasible
/// `(n, k, ℓ)` with `n ≥ 2`, and the flat cones.
pub fn all_plans(max_cone_dim: usize, einstein: bool) -> Vec<RealizationPlan> {
    let mut out = Vec::new();
    for n in 2..=(max_cone_dim / 2).saturating_sub(1) {
        for (k, l) in feasible_pairs(n, einstein) {
            out.push(realization_plan(n, k, l, einstein).expect("feasible"));
        }
        out.push(realization_plan(n, n + 1, 0, einstein).expect("flat"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lists() {
        assert_eq!(enumerate(2, Mode::General).unwrap().values, vec![1, 2, 9]);
        assert_eq!(enumerate(3, Mode::General).unwrap().values, vec![1, 2, 5, 16]);
        assert_eq!(enumerate(3, Mode::Einstein).unwrap().values, vec![1, 2, 16]);
        assert_eq!(enumerate(2, Mode::EssentialGeneral).unwrap().values, vec![0, 1, 8]);
        assert_eq!(enumerate(2, Mode::General).unwrap().attainable, vec![2, 9]);
        assert!(matches!(enumerate(1, Mode::General), Err(LabError::BadDimension(1))));
    }

    #[test]
    fn plans() {
        assert_eq!(realization_plan(3, 0, 2, false).unwrap().factor_half_dims, vec![2, 2]);
        assert_eq!(realization_plan(5, 1, 1, true).unwrap().factor_half_dims, vec![5]);
        assert!(matches!(realization_plan(2, 1, 2, false), Err(LabError::Infeasible { .. })));
        let flat = realization_plan(2, 3, 0, false).unwrap();
        assert_eq!(flat.expected(), 9);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
    }
}
