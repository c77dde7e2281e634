//! Metrics, truth-category sampling and the experiment sweeps.

mod metrics;
mod report;
mod sweeps;
mod truth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use metrics::{dcg_at_k, mann_whitney_u, ndcg_at_k, r_squared, ranking_relevances, welch_t, Gain, Stat};
pub use report::{Aggregate, Comparison, ExperimentReport, GroupKey, QueryRecord, RecordPath, Setting, SweepKind};
pub use sweeps::{
    path_template, run_parents_sweep, run_tautology_experiment, run_truth_sweep, SweepConfig, SweepInputs,
};
pub use truth::{sample_truth_queries, TruthCategory, TruthQuery};

/// An explanation method. Heuristic thresholds are kept in thousandths so
/// methods can be compared and ordered exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    LinkLogic,
    Heuristic { threshold_permille: u16 },
}

impl Method {
    pub fn heuristic(threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Config(format!("heuristic threshold must be in [0, 1], got {threshold}")));
        }
        Ok(Method::Heuristic { threshold_permille: (threshold * 1000.0).round() as u16 })
    }

    pub fn threshold(self) -> Option<f64> {
        match self {
            Method::LinkLogic => None,
            Method::Heuristic { threshold_permille } => Some(f64::from(threshold_permille) / 1000.0),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.threshold() {
            None => f.write_str("linklogic"),
            Some(t) => write!(f, "heuristic@{t}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linklogic" => Ok(Method::LinkLogic),
            "heuristic" => Method::heuristic(0.9),
            _ => {
                let t = s
                    .strip_prefix("heuristic@")
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))?;
                Method::heuristic(t)
            }
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
