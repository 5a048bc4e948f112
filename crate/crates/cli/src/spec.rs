//! JSON spec files: a `kind` tag selects the object, an optional `numerics`
//! object overrides tolerances and grids.

use serde::Deserialize;
use serde_json::Value;
use tradeoff::idp::{IdpSpec, MixtureSpec};
use tradeoff::{DiscreteDist, ExperimentPair, Numerics, ShiftFamily, ShiftKind, TradeoffCurve};

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Spec {
    Poisson { lambda1: f64, lambda2: f64 },
    Bernoulli { p: f64, q: f64 },
    Binomial { n: u64, p: f64, q: f64 },
    Gaussian { mu: f64 },
    Laplace { mu: f64 },
    Discrete { p: Vec<(f64, f64)>, q: Vec<(f64, f64)> },
    EpsDelta { eps: f64, delta: f64 },
    Idp {
        #[serde(default)]
        gaussian_k: f64,
        #[serde(default)]
        poisson: Vec<(f64, f64)>,
    },
    Mixture { components: Vec<(f64, f64)>, sigma: f64 },
}

/// A pair or closed-form curve to evaluate.
pub enum Subject {
    Pair(ExperimentPair),
    Curve(TradeoffCurve),
}

pub fn parse(text: &str, origin: &str) -> Result<(Spec, Numerics), String> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| format!("{origin}: line {}, column {}: {e}", e.line(), e.column()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| format!("{origin}: top level must be a JSON object"))?;
    let numerics = match obj.remove("numerics") {
        Some(n) => serde_json::from_value::<Numerics>(n).map_err(|e| format!("{origin}: field `numerics`: {e}"))?,
        None => Numerics::default(),
    };
    numerics.validate().map_err(|e| format!("{origin}: field `numerics`: {e}"))?;
    let spec = serde_json::from_value::<Spec>(value).map_err(|e| format!("{origin}: {e}"))?;
    Ok((spec, numerics))
}

impl Spec {
    pub fn subject(self, numerics: &Numerics) -> tradeoff::Result<Subject> {
        let pair = match self {
            Spec::Poisson { lambda1, lambda2 } => ExperimentPair::poisson_with(lambda1, lambda2, numerics)?,
            Spec::Bernoulli { p, q } => ExperimentPair::bernoulli(p, q)?,
            Spec::Binomial { n, p, q } => ExperimentPair::binomial(n, p, q)?,
            Spec::Gaussian { mu } => ExperimentPair::gaussian(mu)?,
            Spec::Laplace { mu } => ExperimentPair::shift(ShiftFamily::standard(ShiftKind::Laplace), mu)?,
            Spec::Discrete { p, q } => ExperimentPair::discrete(DiscreteDist::new(p)?, DiscreteDist::new(q)?),
            Spec::EpsDelta { eps, delta } => return Ok(Subject::Curve(TradeoffCurve::eps_delta(eps, delta)?)),
            Spec::Idp { .. } | Spec::Mixture { .. } => {
                return Err(tradeoff::Error::Spec("limit specs are handled by the `limit` command".into()))
            }
        };
        Ok(Subject::Pair(pair))
    }
}

pub enum Limit {
    Idp(IdpSpec),
    Mixture(MixtureSpec),
}

impl Spec {
    pub fn limit(self) -> Option<Limit> {
        match self {
            Spec::Idp { gaussian_k, poisson } => Some(Limit::Idp(IdpSpec { gaussian_k, poisson })),
            Spec::Mixture { components, sigma } => Some(Limit::Mixture(MixtureSpec { components, sigma })),
            _ => None,
        }
    }
}
