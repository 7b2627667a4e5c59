//! Named prior configurations and a rule-based hyperparameter recommender.

use crate::error::{ensure, Error, Result};
use crate::prior::{beta_shapes_from_mean_precision, couple_ag_from_cg, couple_cg_from_ag, GroupStructure, Hyperparams};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Default R² tail shape.
pub const DEFAULT_A2: f64 = 0.5;
/// Within-group concentration of the `R2-aG` family.
pub const DEFAULT_CG: f64 = 0.5;
/// `a_G` for groups expected to carry few strong signals.
pub const CONCENTRATED_AG: f64 = 0.1;
/// `a_G` when groups of both kinds are expected.
pub const MIXED_AG: f64 = 0.5;
/// `a_G` for groups expected to spread signal over many members.
pub const DISTRIBUTED_AG: f64 = 1.0;

/// A named prior configuration.
///
/// Names: `R2-<a_G>` (e.g. `R2-0.5`), `R2-u`, `R2-c`, `R2-d`, and
/// `R2D2-<a_π>` for the nongrouped model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorPreset {
    /// `a1 = G a_G`, `a2 = 1/2`, `c_g = 1/2`.
    GroupR2 { a_g: f64 },
    /// Uniform R² and uniform simplices.
    Uniform,
    /// `(μ, ν) = (1/3, 3)` with `a_G = 1`, `c_g = 1/2`.
    Concentrated,
    /// `(μ, ν) = (1/3, 3)` with `a_G = 1/2`, `c_g = 1`.
    Distributed,
    /// One Dirichlet over all `p` coefficients, `a1 = G a_π`, `a2 = 1/2`.
    Nongrouped { a_pi: f64 },
}

impl PriorPreset {
    pub fn is_grouped(&self) -> bool {
        !matches!(self, PriorPreset::Nongrouped { .. })
    }

    /// The nongrouped model that pairs with this preset: same R² prior, one
    /// Dirichlet over all coefficients with `a_π = a_G`.
    pub fn nongrouped_counterpart(&self) -> PriorPreset {
        match *self {
            PriorPreset::GroupR2 { a_g } => PriorPreset::Nongrouped { a_pi: a_g },
            PriorPreset::Uniform => PriorPreset::Nongrouped { a_pi: 1.0 },
            PriorPreset::Concentrated => PriorPreset::Nongrouped { a_pi: 1.0 },
            PriorPreset::Distributed => PriorPreset::Nongrouped { a_pi: 0.5 },
            p @ PriorPreset::Nongrouped { .. } => p,
        }
    }

    /// The group structure the model is fitted with: `structure` itself, or a
    /// single group for the nongrouped preset.
    pub fn model_structure(&self, structure: &GroupStructure) -> GroupStructure {
        if self.is_grouped() {
            structure.clone()
        } else {
            GroupStructure::new(vec![structure.p()]).expect("p >= 1")
        }
    }
}

impl fmt::Display for PriorPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorPreset::GroupR2 { a_g } => write!(f, "R2-{a_g:?}"),
            PriorPreset::Uniform => write!(f, "R2-u"),
            PriorPreset::Concentrated => write!(f, "R2-c"),
            PriorPreset::Distributed => write!(f, "R2-d"),
            PriorPreset::Nongrouped { a_pi } => write!(f, "R2D2-{a_pi:?}"),
        }
    }
}

fn parse_positive(s: &str, name: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(Error::domain("PriorPreset", format!("unknown preset {name:?}"))),
    }
}

impl FromStr for PriorPreset {
    type Err = Error;
    fn from_str(name: &str) -> Result<Self> {
        match name {
            "R2-u" => Ok(PriorPreset::Uniform),
            "R2-c" => Ok(PriorPreset::Concentrated),
            "R2-d" => Ok(PriorPreset::Distributed),
            _ => {
                if let Some(v) = name.strip_prefix("R2D2-") {
                    Ok(PriorPreset::Nongrouped { a_pi: parse_positive(v, name)? })
                } else if let Some(v) = name.strip_prefix("R2-") {
                    Ok(PriorPreset::GroupR2 { a_g: parse_positive(v, name)? })
                } else {
                    Err(Error::domain("PriorPreset", format!("unknown preset {name:?}")))
                }
            }
        }
    }
}

impl Serialize for PriorPreset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PriorPreset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hyperparameters of the preset `name` for data grouped as `structure`.
///
/// For the nongrouped preset the result has a single concentration and goes
/// with [`PriorPreset::model_structure`].
pub fn resolve_preset(name: &str, structure: &GroupStructure) -> Result<Hyperparams> {
    name.parse::<PriorPreset>()?.resolve(structure)
}

impl PriorPreset {
    pub fn resolve(&self, structure: &GroupStructure) -> Result<Hyperparams> {
        let g = structure.n_groups();
        let gf = g as f64;
        match *self {
            PriorPreset::GroupR2 { a_g } => Hyperparams::uniform_c(gf * a_g, DEFAULT_A2, a_g, DEFAULT_CG, g),
            PriorPreset::Uniform => Hyperparams::uniform_c(1.0, 1.0, 1.0, 1.0, g),
            PriorPreset::Concentrated => {
                let (a1, a2) = beta_shapes_from_mean_precision(1.0 / 3.0, 3.0)?;
                Hyperparams::uniform_c(a1, a2, 1.0, 0.5, g)
            }
            PriorPreset::Distributed => {
                let (a1, a2) = beta_shapes_from_mean_precision(1.0 / 3.0, 3.0)?;
                Hyperparams::uniform_c(a1, a2, 0.5, 1.0, g)
            }
            // a_G is unused with one group
            PriorPreset::Nongrouped { a_pi } => Hyperparams::new(gf * a_pi, DEFAULT_A2, 1.0, vec![a_pi]),
        }
    }
}

/// Expected signal layout inside a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Concentrated,
    Distributed,
}

/// Which side of the coupling `c_g p_g = a_G` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Derive `c_g = a_G / p_g`.
    FromAg,
    /// Derive `a_G` from these within-group concentrations.
    FromCg(Vec<f64>),
}

/// What the analyst expects before seeing data. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Knowledge {
    pub r2_mean: Option<f64>,
    pub r2_precision: Option<f64>,
    /// One entry per group, or a single entry applied to every group.
    pub group_signal: Option<Vec<SignalKind>>,
    pub coupling: Option<Coupling>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub hyper: Hyperparams,
    /// One line per rule applied.
    pub rationale: Vec<String>,
}

/// Maps prior knowledge to hyperparameters by fixed rules.
///
/// - Nothing known: uniform R² and simplices (`R2-u`).
/// - R² mean and precision: Beta shapes from `(μ, ν)`; a mean alone keeps
///   `a2 = 1/2`; without R² knowledge `a2 = 1/2` and `a1 = G a_G`.
/// - Signal kinds: all concentrated gives `a_G = 0.1`, all distributed `1`,
///   a mixture `0.5`; `c_g = 1/2` unless coupled.
/// - Coupling: `c_g = a_G / p_g`, or `a_G` from given `c_g`, which must agree
///   across groups and cannot be combined with signal kinds.
pub fn recommend(knowledge: &Knowledge, structure: &GroupStructure) -> Result<Recommendation> {
    let g = structure.n_groups();
    let mut why = Vec::new();
    if *knowledge == Knowledge::default() {
        why.push("no prior knowledge: uniform R² (a1 = a2 = 1) and uniform simplices (a_G = c_g = 1)".to_string());
        return Ok(Recommendation { hyper: PriorPreset::Uniform.resolve(structure)?, rationale: why });
    }

    let kinds = match &knowledge.group_signal {
        None => None,
        Some(k) if k.len() == 1 => Some(vec![k[0]; g]),
        Some(k) => {
            ensure(k.len() == g, "recommend", || format!("{} signal kinds for {g} groups", k.len()))?;
            Some(k.clone())
        }
    };
    if matches!(knowledge.coupling, Some(Coupling::FromCg(_))) && kinds.is_some() {
        return Err(Error::domain("recommend", "a_G cannot be set both by signal kinds and by coupling from c_g"));
    }

    let (a_g, c) = match &knowledge.coupling {
        Some(Coupling::FromCg(c)) => {
            let a_g = couple_ag_from_cg(structure, c)?;
            let agree = structure.sizes().iter().zip(c).all(|(&p, &cg)| (p as f64 * cg - a_g).abs() <= 1e-12 * a_g);
            ensure(agree, "recommend", || format!("c_g p_g differs across groups for c = {c:?}, so no single a_G couples them"))?;
            why.push(format!("a_G = c_g p_g = {a_g} from the given within-group concentrations"));
            (a_g, c.clone())
        }
        other => {
            let a_g = match &kinds {
                None => {
                    why.push(format!("no signal-kind knowledge: a_G = {MIXED_AG}"));
                    MIXED_AG
                }
                Some(k) if k.iter().all(|&s| s == SignalKind::Concentrated) => {
                    why.push(format!("concentrated signals: small a_G = {CONCENTRATED_AG} for stronger shrinkage"));
                    CONCENTRATED_AG
                }
                Some(k) if k.iter().all(|&s| s == SignalKind::Distributed) => {
                    why.push(format!("distributed signals: large a_G = {DISTRIBUTED_AG} for less shrinkage"));
                    DISTRIBUTED_AG
                }
                Some(_) => {
                    why.push(format!("mixed signal kinds: intermediate a_G = {MIXED_AG}"));
                    MIXED_AG
                }
            };
            let c = if matches!(other, Some(Coupling::FromAg)) {
                why.push("coupling c_g = a_G / p_g".to_string());
                structure.sizes().iter().map(|&p| couple_cg_from_ag(a_g, p)).collect::<Result<Vec<_>>>()?
            } else {
                why.push(format!("c_g = {DEFAULT_CG}"));
                vec![DEFAULT_CG; g]
            };
            (a_g, c)
        }
    };

    let (a1, a2) = match (knowledge.r2_mean, knowledge.r2_precision) {
        (Some(mu), Some(nu)) => {
            let s = beta_shapes_from_mean_precision(mu, nu)?;
            why.push(format!("R² ~ Beta({}, {}) from mean {mu} and precision {nu}", s.0, s.1));
            s
        }
        (Some(mu), None) => {
            ensure(mu > 0.0 && mu < 1.0, "recommend", || format!("R² mean {mu} must lie in (0, 1)"))?;
            let a1 = mu * DEFAULT_A2 / (1.0 - mu);
            why.push(format!("a2 = {DEFAULT_A2} default, a1 = {a1} to match the R² mean {mu}"));
            (a1, DEFAULT_A2)
        }
        (None, Some(_)) => return Err(Error::domain("recommend", "an R² precision needs an R² mean")),
        (None, None) => {
            let a1 = g as f64 * a_g;
            why.push(format!("a2 = {DEFAULT_A2} default and a1 = G a_G = {a1}"));
            (a1, DEFAULT_A2)
        }
    };
    Ok(Recommendation { hyper: Hyperparams::new(a1, a2, a_g, c)?, rationale: why })
}
