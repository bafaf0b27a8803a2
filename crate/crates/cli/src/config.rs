use anyhow::{bail, Context};
use lamshift::measure::FamilySpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Kakutani,
    SecondMoment,
    Hopf,
    MaharamOrbit,
    ProductCriterion,
    EssentialValue,
    Matching,
    SinaiFactor,
    FiniteFactor,
    PermV,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Kakutani => "kakutani",
            Command::SecondMoment => "second-moment",
            Command::Hopf => "hopf",
            Command::MaharamOrbit => "maharam-orbit",
            Command::ProductCriterion => "product-criterion",
            Command::EssentialValue => "essential-value",
            Command::Matching => "matching",
            Command::SinaiFactor => "sinai-factor",
            Command::FiniteFactor => "finite-factor",
            Command::PermV => "perm-v",
        }
    }
}

/// A number or a rational written as "p/q".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    F(f64),
    S(String),
}

impl Num {
    pub fn value(&self) -> anyhow::Result<f64> {
        match self {
            Num::F(x) => Ok(*x),
            Num::S(s) => {
                let (p, q) = s.split_once('/').with_context(|| format!("'{s}' is not of the form p/q"))?;
                let p: f64 = p.trim().parse().with_context(|| format!("bad numerator in '{s}'"))?;
                let q: f64 = q.trim().parse().with_context(|| format!("bad denominator in '{s}'"))?;
                if q == 0.0 {
                    bail!("zero denominator in '{s}'");
                }
                Ok(p / q)
            }
        }
    }
}

/// Every command reads the fields it needs and falls back to a default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_from: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_to: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinders: Option<Vec<Vec<[Num; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub family: FamilySpec,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).context("config does not match the schema")?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let l = self.family.lambda;
        if !(l > 0.0 && l < 1.0) {
            bail!("lambda must lie in (0,1), got {l}");
        }
        let p = &self.params;
        for (name, v) in [("trials", p.trials), ("windows", p.windows)] {
            if v == Some(0) {
                bail!("{name} must be at least 1");
            }
        }
        if let Some(e) = p.epsilon {
            if !(e > 0.0 && e <= 1.0) {
                bail!("epsilon must lie in (0,1], got {e}");
            }
        }
        for (name, v) in [("alpha", p.alpha), ("confidence", p.confidence)] {
            if let Some(x) = v {
                if !(x > 0.0 && x < 1.0) {
                    bail!("{name} must lie in (0,1), got {x}");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_json(r#"{"command":"kakutani","family":{"kind":"continuous","lambda":0.5}}"#).unwrap();
        assert_eq!(c.command, Command::Kakutani);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn rejects_bad_lambda_and_unknown_fields() {
        assert!(ExperimentConfig::from_json(r#"{"command":"kakutani","family":{"kind":"continuous","lambda":1.2}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"command":"kakutani","family":{"kind":"continuous","lambda":0.5},"params":{"nope":1}}"#).is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(Num::S("1/4".into()).value().unwrap(), 0.25);
        assert!(Num::S("1/0".into()).value().is_err());
        assert!(Num::S("x".into()).value().is_err());
    }
}
