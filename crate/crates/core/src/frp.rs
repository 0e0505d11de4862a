//! Fragmented rug-pull labeling.
//!
//! A pool is labeled FRP when the deployer keeps LP control, inflated
//! supply is sold into the pool, and no owner transaction crosses the
//! canonical impact threshold. The extraction is then either split into
//! sub-threshold fragments or delegated to wallets outside the owner set.
//!
//! A sell is *inflated* when its actor has sold more paired tokens than it
//! ever obtained legitimately: from pool buys, from withdrawals of its own
//! liquidity, or by transfer of such tokens from another wallet. Tokens the
//! deployer seeded or minted never count as legitimate, so anything they
//! hand out is inflated supply wherever it ends up.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::address::Address;
use crate::decimal::{serde_dec_opt, Dec};
use crate::ledger::{within_lifetime, Asset, EventKind, PoolTrace};
use crate::predicates::{eval_predicate_a, DetectorConfig, PredicateError};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InflatedSells {
    /// Addresses with at least one inflated sell.
    pub sellers: BTreeSet<Address>,
    /// One flag per trace event; true only on inflated sells.
    pub flags: Vec<bool>,
    /// Inflated sell count per seller.
    pub per_wallet: BTreeMap<Address, usize>,
}

impl InflatedSells {
    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f)
            .map(|(i, _)| i)
    }
}

#[derive(Default, Clone, Copy)]
struct Account {
    legit_in: Dec,
    legit_out: Dec,
    sold: Dec,
}

impl Account {
    /// Legitimately acquired tokens not yet spent or sold.
    fn legit_available(&self) -> Dec {
        (self.legit_in - self.legit_out - self.sold).max(Dec::ZERO)
    }
}

/// Token-flow accounting over the trace.
///
/// Outgoing transfers and deposits spend legitimate balance first; only the
/// legitimate part is credited to the receiver. Without transfer events a
/// sell is inflated whenever it exceeds the seller's own buys.
pub fn classify_inflated_sellers(trace: &PoolTrace) -> InflatedSells {
    let mut accounts: HashMap<Address, Account> = HashMap::new();
    let mut out = InflatedSells {
        flags: vec![false; trace.events.len()],
        ..Default::default()
    };
    for (i, e) in trace.events.iter().enumerate() {
        match e.kind {
            EventKind::Deploy => {}
            EventKind::Buy | EventKind::Withdraw => {
                accounts.entry(e.actor).or_default().legit_in += e.token_amount;
            }
            EventKind::Deposit => {
                let acct = accounts.entry(e.actor).or_default();
                let portion = e.token_amount.min(acct.legit_available());
                acct.legit_out += portion;
            }
            EventKind::Transfer => {
                if e.asset != Asset::Token {
                    continue;
                }
                let Some(to) = e.counterparty else { continue };
                let from = accounts.entry(e.actor).or_default();
                let portion = e.token_amount.min(from.legit_available());
                from.legit_out += portion;
                accounts.entry(to).or_default().legit_in += portion;
            }
            EventKind::Sell => {
                let acct = accounts.entry(e.actor).or_default();
                acct.sold += e.token_amount;
                if acct.sold > acct.legit_in - acct.legit_out {
                    out.flags[i] = true;
                    out.sellers.insert(e.actor);
                    *out.per_wallet.entry(e.actor).or_insert(0) += 1;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrpLabel {
    pub is_frp: bool,
    /// The initial LP tranche was not fully burned or locked.
    pub control_retained: bool,
    /// Every inflated sell stays at or below `theta`.
    pub fragmented_ok: bool,
    /// Every inflated sell above `theta` was made outside the owner set.
    pub delegated: bool,
    /// Every owner sell or withdrawal stays at or below `theta`.
    pub ownership_ok: bool,
    pub within_lifetime: bool,
    pub inflated_sellers: BTreeSet<Address>,
    pub per_wallet_order_counts: BTreeMap<Address, usize>,
    pub inflated_sell_count: usize,
    /// Largest impact among owner sells and withdrawals, if any.
    #[serde(with = "serde_dec_opt")]
    pub max_owner_impact: Option<Dec>,
    /// Largest impact among inflated sells, if any.
    #[serde(with = "serde_dec_opt")]
    pub max_inflated_impact: Option<Dec>,
}

impl FrpLabel {
    pub fn seller_count(&self) -> usize {
        self.inflated_sellers.len()
    }
}

/// Labels a pool from a precomputed classification, at `theta`.
pub fn label_with(
    trace: &PoolTrace,
    inflated: &InflatedSells,
    cfg: &DetectorConfig,
    theta: Dec,
) -> Result<FrpLabel, PredicateError> {
    if !trace.is_annotated() {
        return Err(PredicateError::MissingAnnotations {
            pool_id: trace.pool_id.clone(),
        });
    }
    let control_retained = eval_predicate_a(trace, cfg);
    let mut max_owner_impact: Option<Dec> = None;
    let mut max_inflated_impact: Option<Dec> = None;
    let mut delegated = true;
    for (i, e) in trace.events.iter().enumerate() {
        let Some(impact) = trace.impact(i) else {
            continue;
        };
        let owner = cfg.is_owner(trace, &e.actor);
        if owner {
            max_owner_impact = Some(max_owner_impact.map_or(impact, |m| m.max(impact)));
        }
        if inflated.flags[i] {
            max_inflated_impact = Some(max_inflated_impact.map_or(impact, |m| m.max(impact)));
            if owner && impact > theta {
                delegated = false;
            }
        }
    }
    let fragmented_ok = max_inflated_impact.is_none_or(|m| m <= theta);
    let ownership_ok = max_owner_impact.is_none_or(|m| m <= theta);
    let in_window = within_lifetime(trace, cfg.max_lifetime_days);
    let is_frp = control_retained
        && (fragmented_ok || delegated)
        && ownership_ok
        && !inflated.sellers.is_empty()
        && in_window;
    Ok(FrpLabel {
        is_frp,
        control_retained,
        fragmented_ok,
        delegated,
        ownership_ok,
        within_lifetime: in_window,
        inflated_sellers: inflated.sellers.clone(),
        per_wallet_order_counts: inflated.per_wallet.clone(),
        inflated_sell_count: inflated.count(),
        max_owner_impact,
        max_inflated_impact,
    })
}

/// FRP label at `cfg.theta`.
pub fn label_frp(trace: &PoolTrace, cfg: &DetectorConfig) -> Result<FrpLabel, PredicateError> {
    let inflated = classify_inflated_sellers(trace);
    label_with(trace, &inflated, cfg, cfg.theta)
}
