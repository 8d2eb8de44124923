//! JSON description of N-functions: `{"kind": ..., "params": {...}}`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Kind, NFunction, NFunctionError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NFunctionSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerParams {
    p: f64,
    #[serde(default = "one")]
    coef: f64,
    domain_cap: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ZygmundParams {
    p: f64,
    beta: f64,
    domain_cap: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CapOnly {
    domain_cap: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathologicalParams {
    p: f64,
    q: f64,
    domain_cap: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedParams {
    t: Vec<f64>,
    b: Vec<f64>,
    slopes: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DerivedParams {
    of: NFunctionSpec,
}

fn one() -> f64 {
    1.0
}

fn params<T: for<'de> Deserialize<'de>>(kind: &str, v: &Value) -> Result<T> {
    let v = if v.is_null() { json!({}) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| NFunctionError::InvalidParameter(format!("{kind}: {e}")))
}

fn capped(b: NFunction, cap: Option<f64>) -> Result<NFunction> {
    match cap {
        Some(c) => b.with_domain_cap(c),
        None => Ok(b),
    }
}

impl NFunctionSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| NFunctionError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn build(&self) -> Result<NFunction> {
        let k = self.kind.as_str();
        match k {
            "power" => {
                let p: PowerParams = params(k, &self.params)?;
                capped(NFunction::scaled_power(p.p, p.coef)?, p.domain_cap)
            }
            "zygmund" => {
                let p: ZygmundParams = params(k, &self.params)?;
                capped(NFunction::zygmund(p.p, p.beta)?, p.domain_cap)
            }
            "llogl" => capped(NFunction::llogl(), params::<CapOnly>(k, &self.params)?.domain_cap),
            "exp_conjugate" => capped(NFunction::exp_conjugate(), params::<CapOnly>(k, &self.params)?.domain_cap),
            "t_exp_t" => capped(NFunction::t_exp_t(), params::<CapOnly>(k, &self.params)?.domain_cap),
            "pathological" => {
                let p: PathologicalParams = params(k, &self.params)?;
                match p.domain_cap {
                    Some(c) => NFunction::pathological_with_cap(p.p, p.q, c),
                    None => NFunction::pathological(p.p, p.q),
                }
            }
            "tabulated" => {
                let p: TabulatedParams = params(k, &self.params)?;
                NFunction::tabulated(p.t, p.b, p.slopes)
            }
            "conjugate" => params::<DerivedParams>(k, &self.params)?.of.build()?.conjugate(),
            "origin_normalized" => Ok(params::<DerivedParams>(k, &self.params)?.of.build()?.normalize_origin()),
            other => Err(NFunctionError::InvalidParameter(format!("unknown kind `{other}`"))),
        }
    }
}

impl NFunction {
    pub fn from_json(text: &str) -> Result<Self> {
        NFunctionSpec::parse(text)?.build()
    }

    /// Spec that rebuilds this function.
    pub fn to_spec(&self) -> NFunctionSpec {
        let (kind, params) = match self.kind() {
            Kind::Power { p, coef } => ("power", json!({ "p": p, "coef": coef, "domain_cap": self.domain_cap() })),
            Kind::Zygmund { p, beta } => ("zygmund", json!({ "p": p, "beta": beta, "domain_cap": self.domain_cap() })),
            Kind::LLogL => ("llogl", json!({ "domain_cap": self.domain_cap() })),
            Kind::ExpConjugate => ("exp_conjugate", json!({ "domain_cap": self.domain_cap() })),
            Kind::TExpT => ("t_exp_t", json!({ "domain_cap": self.domain_cap() })),
            Kind::Pathological { segments } => {
                ("pathological", json!({ "p": segments.p, "q": segments.q, "domain_cap": self.domain_cap() }))
            }
            Kind::Tabulated { table } => {
                ("tabulated", json!({ "t": table.xs(), "b": table.ys(), "slopes": table.slopes() }))
            }
            Kind::Conjugate { of } => ("conjugate", json!({ "of": of.to_spec() })),
            Kind::OriginNormalized { of } => ("origin_normalized", json!({ "of": of.to_spec() })),
        };
        NFunctionSpec { kind: kind.to_string(), params }
    }
}
