//! Monte Carlo estimation of scaled rare-event probabilities, compared
//! against the analytic limits, plus weak-convergence (Frechet) checks
//! and scale-equivalence diagnostics.
//!
//! Reproducibility contract: replicates draw from disjoint RNG streams
//! keyed by `(seed, schedule slot, replicate index)` and aggregate by
//! order-independent counting, so results are bit-identical for a fixed
//! seed at any parallelism level.

mod diagnostics;
mod runner;

pub use diagnostics::{
    fit_tail_exponent, sigma_equivalence_check, weak_convergence_check, SigmaRecord, WeakReport,
};
pub use runner::{empirical_point_functional, run_ldp_experiment};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Regime, StableFieldSpec};
use crate::limits::{LimitValue, Side, TestFunctionPair};

/// Rare events of the experiment layer. Thresholds are in units of the
/// scaling sequence (`gamma_n` dissipative, `beta_n` conservative); the
/// conservative partial sum carries its extra `n^{p-d}` normalization
/// inside the event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum EventKind {
    OrderStats { y: Vec<f64> },
    Passage { a: f64, lambda: f64 },
    MaxExceed { y: f64 },
    SumExceed { y: f64 },
    Functional { pair: TestFunctionPair },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    #[serde(flatten)]
    pub kind: EventKind,
    #[serde(default = "default_side")]
    pub side: Side,
}

fn default_side() -> Side {
    Side::Upper
}

impl EventSpec {
    pub fn label(&self) -> String {
        let base = match &self.kind {
            EventKind::OrderStats { y } => {
                let ys: Vec<String> = y.iter().map(|v| format!("{v}")).collect();
                format!("order_stats({})", ys.join(";"))
            }
            EventKind::Passage { a, lambda } => format!("passage(a={a};lambda={lambda})"),
            EventKind::MaxExceed { y } => format!("max_exceed(y={y})"),
            EventKind::SumExceed { y } => format!("sum_exceed(y={y})"),
            EventKind::Functional { .. } => "functional".to_string(),
        };
        match self.side {
            Side::Upper => base,
            Side::TwoSided => format!("{base}|two_sided"),
        }
    }
}

/// One large-deviation experiment: field spec, window schedule, scaling
/// exponent `delta` (so `gamma_n = n^{d/alpha + delta}` or
/// `beta_n = n^{p/alpha + delta}`), replicate count, seed, and event.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: StableFieldSpec,
    pub n_schedule: Vec<i64>,
    pub delta_exponent: f64,
    pub replicates: u64,
    pub seed: u64,
    pub event: EventSpec,
    pub parallelism: usize,
}

impl ExperimentConfig {
    /// The scaling sequence value at window radius `n`.
    pub fn scaling(&self, n: i64) -> f64 {
        let eff = self.spec.effective_dim() as f64;
        (n as f64).powf(eff / self.spec.alpha + self.delta_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.n_schedule.is_empty() {
            return Err(Error::config(
                "experiment.nSchedule",
                "schedule must be nonempty",
            ));
        }
        if self.n_schedule.iter().any(|&n| n <= 0) {
            return Err(Error::config(
                "experiment.nSchedule",
                "window radii must be positive",
            ));
        }
        if self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "experiment.nSchedule",
                "schedule must be strictly increasing",
            ));
        }
        if !(self.delta_exponent > 0.0) {
            return Err(Error::config(
                "experiment.delta",
                "scaling exponent delta must be positive",
            ));
        }
        if self.replicates == 0 {
            return Err(Error::config(
                "experiment.replicates",
                "need at least one replicate",
            ));
        }
        match &self.event.kind {
            EventKind::OrderStats { y } => {
                if y.is_empty() || y.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::config(
                        "experiment.event.y",
                        "order-statistics thresholds must be positive",
                    ));
                }
                if self.spec.regime() == Regime::Conservative {
                    return Err(Error::config(
                        "experiment.event",
                        "order-statistics events have no conservative analytic limit; \
                         use maxExceed",
                    ));
                }
            }
            EventKind::Passage { a, lambda } => {
                if !(*a > 0.0) || !(*lambda > 0.0 && *lambda <= 1.0) {
                    return Err(Error::config(
                        "experiment.event",
                        "need a > 0 and lambda in (0,1]",
                    ));
                }
            }
            EventKind::MaxExceed { y } | EventKind::SumExceed { y } => {
                if !(*y > 0.0) {
                    return Err(Error::config(
                        "experiment.event.y",
                        "threshold must be positive",
                    ));
                }
            }
            EventKind::Functional { pair } => pair.validate("experiment.event.pair")?,
        }
        Ok(())
    }
}

/// One row of an experiment: scaled estimate against the analytic limit.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRecord {
    pub regime: Regime,
    pub event: String,
    pub n: i64,
    pub scaling: f64,
    pub replicates: u64,
    pub p_hat: f64,
    pub se: f64,
    pub scaled: f64,
    pub limit: Option<LimitValue>,
    /// `scaled / limit`; infinite when the limit is zero but the estimate
    /// is not (flagged, never a crash).
    pub ratio: f64,
}

impl EstimateRecord {
    pub(crate) fn finish(
        regime: Regime,
        event: String,
        n: i64,
        scaling: f64,
        replicates: u64,
        p_hat: f64,
        se: f64,
        scale_factor: f64,
        limit: Option<LimitValue>,
    ) -> Self {
        let scaled = scale_factor * p_hat;
        let ratio = match &limit {
            Some(l) if l.value > 0.0 => scaled / l.value,
            Some(_) if scaled > 0.0 => f64::INFINITY,
            Some(_) => f64::NAN,
            None => f64::NAN,
        };
        EstimateRecord {
            regime,
            event,
            n,
            scaling,
            replicates,
            p_hat,
            se,
            scaled,
            limit,
            ratio,
        }
    }
}

/// Deterministic pairwise sum (tree reduction) used wherever floats are
/// aggregated across replicates.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}
