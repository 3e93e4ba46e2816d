//! Modular gradual semantics: an aggregation function combines the strengths
//! of attackers and supporters into one scalar, and an influence function
//! moves the base score by that scalar.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Combines attacker and supporter strengths into a single aggregate.
pub trait AggregationRule {
    fn aggregate(&self, attackers: &[f64], supporters: &[f64]) -> f64;
}

/// Adjusts a base score by an aggregate.
pub trait InfluenceRule {
    fn influence(&self, base: f64, aggregate: f64) -> f64;
}

impl<F: Fn(&[f64], &[f64]) -> f64> AggregationRule for F {
    fn aggregate(&self, attackers: &[f64], supporters: &[f64]) -> f64 {
        self(attackers, supporters)
    }
}

impl<F: Fn(f64, f64) -> f64> InfluenceRule for F {
    fn influence(&self, base: f64, aggregate: f64) -> f64 {
        self(base, aggregate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Aggregation {
    /// `Π(1 − a) − Π(1 − s)`
    Product,
    /// `Σs − Σa`
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Influence {
    /// `f(x) = max{0, x}`
    DfQuad,
    /// `f(x) = max{0, x} / (1 + max{0, x})`
    QuadraticEnergy,
}

impl AggregationRule for Aggregation {
    fn aggregate(&self, attackers: &[f64], supporters: &[f64]) -> f64 {
        match self {
            Aggregation::Product => {
                let att: f64 = attackers.iter().map(|a| 1.0 - a).product();
                let sup: f64 = supporters.iter().map(|s| 1.0 - s).product();
                att - sup
            }
            Aggregation::Sum => {
                let sup: f64 = supporters.iter().sum();
                let att: f64 = attackers.iter().sum();
                sup - att
            }
        }
    }
}

impl Influence {
    fn shape(&self, x: f64) -> f64 {
        let pos = x.max(0.0);
        match self {
            Influence::DfQuad => pos,
            Influence::QuadraticEnergy => pos / (1.0 + pos),
        }
    }
}

impl InfluenceRule for Influence {
    fn influence(&self, base: f64, aggregate: f64) -> f64 {
        base - base * self.shape(-aggregate) + (1.0 - base) * self.shape(aggregate)
    }
}

fn check_unit(values: &[f64], what: &str) -> Result<()> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(domain(format!("{what} strength {v} outside [0,1]"))),
        None => Ok(()),
    }
}

fn check_base(base: f64) -> Result<()> {
    if (0.0..=1.0).contains(&base) {
        Ok(())
    } else {
        Err(domain(format!("base score {base} outside [0,1]")))
    }
}

/// Product aggregation, as used by DF-QuAD. Empty products are 1.
pub fn agg_product(attackers: &[f64], supporters: &[f64]) -> Result<f64> {
    check_unit(attackers, "attacker")?;
    check_unit(supporters, "supporter")?;
    Ok(Aggregation::Product.aggregate(attackers, supporters))
}

/// Sum aggregation, as used by quadratic energy.
pub fn agg_sum(attackers: &[f64], supporters: &[f64]) -> Result<f64> {
    check_unit(attackers, "attacker")?;
    check_unit(supporters, "supporter")?;
    Ok(Aggregation::Sum.aggregate(attackers, supporters))
}

pub fn infl_dfquad(base: f64, aggregate: f64) -> Result<f64> {
    check_base(base)?;
    Ok(Influence::DfQuad.influence(base, aggregate))
}

pub fn infl_qe(base: f64, aggregate: f64) -> Result<f64> {
    check_base(base)?;
    Ok(Influence::QuadraticEnergy.influence(base, aggregate))
}

/// A modular semantics: one aggregation paired with one influence function.
///
/// Serialized as a short name: `dfquad`, `quadratic-energy`, or
/// `<aggregation>+<influence>` for the non-canonical pairings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SemanticsSpec {
    pub aggregation: Aggregation,
    pub influence: Influence,
}

impl SemanticsSpec {
    pub const DF_QUAD: SemanticsSpec = SemanticsSpec {
        aggregation: Aggregation::Product,
        influence: Influence::DfQuad,
    };
    pub const QUADRATIC_ENERGY: SemanticsSpec = SemanticsSpec {
        aggregation: Aggregation::Sum,
        influence: Influence::QuadraticEnergy,
    };

    pub fn new(aggregation: Aggregation, influence: Influence) -> Self {
        Self {
            aggregation,
            influence,
        }
    }

    /// True for DF-QuAD and quadratic energy; mixed pairings exist only for
    /// property experiments.
    pub fn is_canonical(&self) -> bool {
        *self == Self::DF_QUAD || *self == Self::QUADRATIC_ENERGY
    }

    /// Strength of an argument given its base score and the strengths of its
    /// attackers and supporters.
    pub fn update(&self, base: f64, attackers: &[f64], supporters: &[f64]) -> Result<f64> {
        check_base(base)?;
        check_unit(attackers, "attacker")?;
        check_unit(supporters, "supporter")?;
        let aggregate = self.aggregation.aggregate(attackers, supporters);
        let strength = self.influence.influence(base, aggregate);
        // Only reachable with a non-canonical pairing such as sum + DF-QuAD.
        if !(0.0..=1.0).contains(&strength) {
            return Err(domain(format!("{self} produced strength {strength} outside [0,1]")));
        }
        Ok(strength)
    }
}

impl Default for SemanticsSpec {
    fn default() -> Self {
        Self::QUADRATIC_ENERGY
    }
}

impl fmt::Display for SemanticsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::DF_QUAD {
            return f.write_str("dfquad");
        }
        if *self == Self::QUADRATIC_ENERGY {
            return f.write_str("quadratic-energy");
        }
        let agg = match self.aggregation {
            Aggregation::Product => "product",
            Aggregation::Sum => "sum",
        };
        let infl = match self.influence {
            Influence::DfQuad => "dfquad",
            Influence::QuadraticEnergy => "quadratic-energy",
        };
        write!(f, "{agg}+{infl}")
    }
}

impl FromStr for SemanticsSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let influence = |name: &str| match name {
            "dfquad" | "df-quad" => Some(Influence::DfQuad),
            "qe" | "quadratic-energy" | "quadratic" => Some(Influence::QuadraticEnergy),
            _ => None,
        };
        if let Some((agg, infl)) = norm.split_once('+') {
            let aggregation = match agg {
                "product" => Aggregation::Product,
                "sum" => Aggregation::Sum,
                other => return Err(Error::Config(format!("unknown aggregation `{other}`"))),
            };
            let influence = influence(infl)
                .ok_or_else(|| Error::Config(format!("unknown influence `{infl}`")))?;
            return Ok(Self::new(aggregation, influence));
        }
        match influence(&norm) {
            Some(Influence::DfQuad) => Ok(Self::DF_QUAD),
            Some(Influence::QuadraticEnergy) => Ok(Self::QUADRATIC_ENERGY),
            None => Err(Error::Config(format!("unknown semantics `{s}`"))),
        }
    }
}

impl TryFrom<String> for SemanticsSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SemanticsSpec> for String {
    fn from(s: SemanticsSpec) -> String {
        s.to_string()
    }
}
