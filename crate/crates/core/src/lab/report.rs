use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::frame::Frame;
use crate::hilbert::Vector;
use crate::priors::{PriorSet, Provenance};

use super::ratio::{stability_ratio, RatioEval};

pub const SCHEMA_VERSION: u32 = 1;

// JSON has no infinity: infinite ratios travel as null
mod ratio_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

mod ratios_or_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Option<f64>> = xs.iter().map(|x| x.is_finite().then_some(*x)).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<Option<f64>>::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub f: Vector,
    pub g: Vector,
    pub dq: f64,
    pub dm: f64,
    #[serde(with = "ratio_or_null")]
    pub ratio: f64,
    pub injectivity_violation: bool,
    /// Where the pair came from: a seed, a sampled pair or a restart.
    pub source: String,
}

impl Witness {
    pub fn evaluate(frame: &Frame, f: Vector, g: Vector, source: impl Into<String>) -> Result<Self> {
        let RatioEval {
            dq,
            dm,
            ratio,
            injectivity_violation,
        } = stability_ratio(frame, &f, &g)?;
        Ok(Witness {
            f,
            g,
            dq,
            dm,
            ratio,
            injectivity_violation,
            source: source.into(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaFit {
    pub sigma: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub schema_version: u32,
    pub frame_id: String,
    pub prior_id: String,
    /// Improving chain: every entry beats all earlier ones.
    pub witnesses: Vec<Witness>,
    #[serde(with = "ratio_or_null")]
    pub max_ratio: f64,
    pub claimed_bound: Option<f64>,
    pub verdict: Verdict,
    pub sigma_fit: Option<SigmaFit>,
    pub injectivity_violation: bool,
    /// Best ratio after each search stage, nondecreasing.
    #[serde(with = "ratios_or_null")]
    pub trace: Vec<f64>,
    pub restarts: usize,
    pub converged_restarts: usize,
    pub notes: Vec<String>,
}

impl StabilityReport {
    pub fn new(frame_id: impl Into<String>, prior_id: impl Into<String>) -> Self {
        StabilityReport {
            schema_version: SCHEMA_VERSION,
            frame_id: frame_id.into(),
            prior_id: prior_id.into(),
            witnesses: Vec::new(),
            max_ratio: 0.0,
            claimed_bound: None,
            verdict: Verdict::Inconclusive,
            sigma_fit: None,
            injectivity_violation: false,
            trace: Vec::new(),
            restarts: 0,
            converged_restarts: 0,
            notes: Vec::new(),
        }
    }

    /// Appends `w` if it beats the current maximum.
    pub fn offer(&mut self, w: Witness) -> bool {
        let better = w.ratio > self.max_ratio || (self.witnesses.is_empty() && w.dq > 0.0);
        if better {
            self.max_ratio = self.max_ratio.max(w.ratio);
            self.injectivity_violation |= w.injectivity_violation;
            self.witnesses.push(w);
        }
        better
    }

    /// Records the running maximum at the end of a search stage.
    pub fn mark_stage(&mut self) {
        self.trace.push(self.max_ratio);
    }

    pub fn best(&self) -> Option<&Witness> {
        self.witnesses.last()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Identifier of a frame in reports.
pub fn frame_id(frame: &Frame) -> String {
    format!("frame[{},dim={},vectors={}]", frame.field(), frame.dim(), frame.len())
}

/// Identifier of a prior in reports.
pub fn prior_id(prior: &PriorSet) -> String {
    match prior.provenance() {
        Provenance::FromGrowth { gamma, r, .. } => {
            format!(
                "prior[growth,gamma={gamma},R={r},D={},head={}]",
                prior.dim(),
                prior.head_dim()
            )
        }
        Provenance::Direct => format!("prior[direct,D={},head={}]", prior.dim(), prior.head_dim()),
    }
}
