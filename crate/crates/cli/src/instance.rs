//! Instance files: charges, domain and tolerances as JSON.

use equilibria_core::grid::{AxisBox, Halfspace, Polytope};
use equilibria_core::potential::{Charge, ChargeSystem};
use equilibria_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// A number given either as a decimal or as an integer fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Decimal(f64),
    Fraction { num: i64, den: i64 },
}

impl Num {
    pub fn value(&self) -> Result<f64> {
        match *self {
            Num::Decimal(v) if v.is_finite() => Ok(v),
            Num::Decimal(v) => Err(Error::InvalidInput(format!("non-finite number {v}"))),
            Num::Fraction { den: 0, .. } => Err(Error::InvalidInput("fraction with zero denominator".into())),
            Num::Fraction { num, den } => Ok(num as f64 / den as f64),
        }
    }
}

fn values(v: &[Num]) -> Result<Vec<f64>> {
    v.iter().map(Num::value).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeSpec {
    pub q: Num,
    pub position: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<Num>,
    pub hi: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub normal: Vec<Num>,
    pub offset: Num,
}

/// The search domain: a box or a list of half-spaces `normal · x ≤ offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainSpec {
    Box(BoxSpec),
    Polytope(Vec<RowSpec>),
}

/// Optional solver switches stored with the instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub auto: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub enumerate_all: bool,
}

impl ModeSpec {
    fn is_default(&self) -> bool {
        *self == ModeSpec::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub dimension: usize,
    pub charges: Vec<ChargeSpec>,
    pub domain: DomainSpec,
    pub epsilon: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Num>,
    #[serde(default, skip_serializing_if = "ModeSpec::is_default")]
    pub mode: ModeSpec,
}

/// A validated instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub file: InstanceFile,
    pub system: ChargeSystem,
    pub domain: Polytope,
    pub epsilon: f64,
    pub delta: Option<f64>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<InstanceFile> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("malformed instance: {e}")))
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn validate(self) -> Result<Instance> {
        let d = self.dimension;
        if d == 0 || d > equilibria_core::potential::MAX_DIM {
            return Err(Error::InvalidInput(format!("dimension must be between 1 and 4, got {d}")));
        }
        if self.charges.is_empty() {
            return Err(Error::InvalidInput("at least one charge is required".into()));
        }
        let mut charges = Vec::with_capacity(self.charges.len());
        for c in &self.charges {
            let pos = values(&c.position)?;
            if pos.len() != d {
                return Err(Error::InvalidInput(format!("charge position has {} coordinates, expected {d}", pos.len())));
            }
            charges.push(Charge::new(c.q.value()?, pos)?);
        }
        let system = ChargeSystem::new(charges)?;
        let domain = match &self.domain {
            DomainSpec::Box(b) => {
                let (lo, hi) = (values(&b.lo)?, values(&b.hi)?);
                if lo.len() != d || hi.len() != d {
                    return Err(Error::InvalidInput("box bounds must match the dimension".into()));
                }
                Polytope::from_box(&AxisBox::new(lo, hi)?)
            }
            DomainSpec::Polytope(rows) => {
                let rows = rows
                    .iter()
                    .map(|r| Ok(Halfspace::new(values(&r.normal)?, r.offset.value()?)))
                    .collect::<Result<Vec<_>>>()?;
                Polytope::new(d, rows)?
            }
        };
        let epsilon = self.epsilon.value()?;
        if !(epsilon > 0.0) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        let delta = self.delta.map(|v| v.value()).transpose()?;
        if let Some(dl) = delta {
            if !(dl > 0.0) {
                return Err(Error::InvalidInput(format!("delta must be positive, got {dl}")));
            }
        }
        Ok(Instance { file: self, system, domain, epsilon, delta })
    }
}

impl Instance {
    pub fn load(path: &std::path::Path) -> Result<Instance> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        InstanceFile::parse(&text)?.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &str = r#"{
        "dimension": 2,
        "charges": [{"q": 1, "position": [0, 0]}, {"q": 2, "position": [1, 0]}],
        "domain": {"box": {"lo": [-0.5, -0.5], "hi": [1.5, 0.5]}},
        "epsilon": 1e-6,
        "delta": {"num": 1, "den": 100000000}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let f = InstanceFile::parse(GOLDEN).unwrap();
        assert_eq!(f.delta, Some(Num::Fraction { num: 1, den: 100000000 }));
        assert_eq!(InstanceFile::parse(&f.to_json()).unwrap(), f);
        let inst = f.validate().unwrap();
        assert_eq!(inst.delta, Some(1e-8));
        assert_eq!(inst.system.len(), 2);
    }

    #[test]
    fn example_files_round_trip() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let f = InstanceFile::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
            assert_eq!(InstanceFile::parse(&f.to_json()).unwrap(), f, "{}", path.display());
            f.validate().unwrap();
            seen += 1;
        }
        assert!(seen >= 5);
    }

    #[test]
    fn rejects_bad_instances() {
        let no_charges = GOLDEN.replace(r#"[{"q": 1, "position": [0, 0]}, {"q": 2, "position": [1, 0]}]"#, "[]");
        assert!(InstanceFile::parse(&no_charges).unwrap().validate().is_err());
        let coincident = GOLDEN.replace("[1, 0]", "[0, 0]");
        assert!(matches!(
            InstanceFile::parse(&coincident).unwrap().validate(),
            Err(Error::CoincidentCharges(0, 1))
        ));
        let open = GOLDEN.replace(
            r#"{"box": {"lo": [-0.5, -0.5], "hi": [1.5, 0.5]}}"#,
            r#"{"polytope": [{"normal": [1, 0], "offset": 1}]}"#,
        );
        assert!(matches!(InstanceFile::parse(&open).unwrap().validate(), Err(Error::UnboundedDomain { .. })));
        assert!(InstanceFile::parse("{").is_err());
    }
}
