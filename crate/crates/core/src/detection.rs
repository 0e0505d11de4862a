//! Per-pool detection reports and corpus-level runs.

use rayon::prelude::*;
use serde::Serialize;

use crate::address::Address;
use crate::decimal::{parse_dec, serde_dec, Dec};
use crate::frp::{classify_inflated_sellers, label_with, FrpLabel, InflatedSells};
use crate::ledger::{annotate, LedgerError, PoolTrace};
use crate::predicates::{canonical_detect_at, DetectorConfig, PredicateError, PredicateVerdict};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
}

impl DetectError {
    pub fn pool_id(&self) -> Option<&str> {
        match self {
            DetectError::Ledger(
                LedgerError::MissingDeploy { pool_id }
                | LedgerError::InconsistentInitialState { pool_id }
                | LedgerError::ReplayDivergence { pool_id, .. }
                | LedgerError::Replay { pool_id, .. },
            ) => Some(pool_id),
            DetectError::Predicate(
                PredicateError::MissingAnnotations { pool_id }
                | PredicateError::InvalidWitness { pool_id, .. },
            ) => Some(pool_id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Canonical,
    Frp,
    Neither,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Canonical => "canonical",
            Classification::Frp => "frp",
            Classification::Neither => "neither",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub pool_id: String,
    pub deployer: Address,
    pub dex_name: String,
    pub created_at: u64,
    pub lifetime_secs: u64,
    pub event_count: usize,
    pub classification: Classification,
    pub canonical: PredicateVerdict,
    pub frp: FrpLabel,
}

/// An annotated trace with its inflated-sell classification, ready to be
/// evaluated at any threshold.
#[derive(Debug, Clone)]
pub struct PoolAnalysis {
    pub trace: PoolTrace,
    pub inflated: InflatedSells,
}

impl PoolAnalysis {
    /// Replays the trace when it carries no reserve annotations.
    pub fn new(mut trace: PoolTrace, cfg: &DetectorConfig) -> Result<Self, DetectError> {
        if !trace.is_annotated() {
            annotate(&mut trace, cfg.fee_rate)?;
        }
        let inflated = classify_inflated_sellers(&trace);
        Ok(PoolAnalysis { trace, inflated })
    }

    pub fn verdict(
        &self,
        cfg: &DetectorConfig,
        theta: Dec,
    ) -> Result<PredicateVerdict, PredicateError> {
        canonical_detect_at(&self.trace, cfg, theta).map(|(_, v)| v)
    }

    pub fn label(&self, cfg: &DetectorConfig, theta: Dec) -> Result<FrpLabel, PredicateError> {
        label_with(&self.trace, &self.inflated, cfg, theta)
    }

    /// Full report at `cfg.theta`.
    pub fn report(&self, cfg: &DetectorConfig) -> Result<DetectionReport, PredicateError> {
        let canonical = self.verdict(cfg, cfg.theta)?;
        let frp = self.label(cfg, cfg.theta)?;
        let classification = if canonical.flagged() {
            Classification::Canonical
        } else if frp.is_frp {
            Classification::Frp
        } else {
            Classification::Neither
        };
        let t = &self.trace;
        Ok(DetectionReport {
            pool_id: t.pool_id.clone(),
            deployer: t.deployer,
            dex_name: t.dex_name.clone(),
            created_at: t.created_at(),
            lifetime_secs: t.lifetime_secs(),
            event_count: t.events.len(),
            classification,
            canonical,
            frp,
        })
    }
}

/// Analyzes one pool and reports at `cfg.theta`.
pub fn detect_pool(trace: PoolTrace, cfg: &DetectorConfig) -> Result<DetectionReport, DetectError> {
    Ok(PoolAnalysis::new(trace, cfg)?.report(cfg)?)
}

/// Analyzes every pool on the current rayon pool. Output order follows input order.
pub fn analyze_corpus(
    traces: Vec<PoolTrace>,
    cfg: &DetectorConfig,
) -> Vec<Result<PoolAnalysis, DetectError>> {
    traces
        .into_par_iter()
        .map(|t| PoolAnalysis::new(t, cfg))
        .collect()
}

/// Reports for every pool, in input order.
pub fn detect_corpus(
    traces: Vec<PoolTrace>,
    cfg: &DetectorConfig,
) -> Vec<Result<DetectionReport, DetectError>> {
    traces
        .into_par_iter()
        .map(|t| detect_pool(t, cfg))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub pools: usize,
    pub canonical: usize,
    pub frp: usize,
    pub neither: usize,
}

impl ClassCounts {
    pub fn add(&mut self, c: Classification) {
        self.pools += 1;
        match c {
            Classification::Canonical => self.canonical += 1,
            Classification::Frp => self.frp += 1,
            Classification::Neither => self.neither += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(with = "serde_dec")]
    pub theta: Dec,
    /// Pools with at least one exit above `theta`.
    pub high_impact: usize,
    pub canonical: usize,
    pub frp: usize,
    /// Pools flagged by both detectors; always zero.
    pub overlap: usize,
}

/// Counts per threshold over analyzed pools.
pub fn theta_sweep(
    pools: &[PoolAnalysis],
    cfg: &DetectorConfig,
    thetas: &[Dec],
) -> Result<Vec<SweepRow>, PredicateError> {
    thetas
        .iter()
        .map(|&theta| {
            let per_pool: Vec<(bool, bool, bool)> = pools
                .par_iter()
                .map(|p| {
                    let v = p.verdict(cfg, theta)?;
                    let l = p.label(cfg, theta)?;
                    Ok((v.b_high_impact, v.flagged(), l.is_frp))
                })
                .collect::<Result<_, PredicateError>>()?;
            Ok(SweepRow {
                theta,
                high_impact: per_pool.iter().filter(|r| r.0).count(),
                canonical: per_pool.iter().filter(|r| r.1).count(),
                frp: per_pool.iter().filter(|r| r.2).count(),
                overlap: per_pool.iter().filter(|r| r.1 && r.2).count(),
            })
        })
        .collect()
}

/// Parses `lo:hi:step` into the inclusive grid `lo, lo+step, …, ≤ hi`.
pub fn parse_theta_range(range: &str) -> Result<Vec<Dec>, String> {
    let parts: Vec<&str> = range.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("expected lo:hi:step, got {range:?}"));
    };
    let num = |s: &str| parse_dec(s).map_err(|e| e.to_string());
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if step <= Dec::ZERO {
        return Err("theta step must be positive".to_string());
    }
    if lo > hi {
        return Err("theta range is empty (lo > hi)".to_string());
    }
    let mut out = Vec::new();
    let mut t = lo;
    while t <= hi {
        if !(t > Dec::ZERO && t < Dec::ONE) {
            return Err(format!("theta {t} outside (0, 1)"));
        }
        out.push(t.reduce());
        t += step;
    }
    Ok(out)
}
