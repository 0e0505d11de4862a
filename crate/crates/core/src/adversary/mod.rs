//! Exit-strategy synthesis.
//!
//! Plans are computed against a snapshot of the pool, then executed into a
//! ledger trace. Two shapes are produced:
//!
//! - a canonical exit: one owner transaction taking more than 90% of the
//!   base reserve, by withdrawal when the owner still holds LP, by a large
//!   sell otherwise;
//! - a fragmented exit: greedy sub-threshold sells spread round-robin over
//!   distributor wallets funded by the owner.
//!
//! A plan is feasible when `proceeds - costs >= v_min`, with costs
//! `gas_per_tx * orders + funding_cost_per_wallet * funded_wallets`.
//! Slippage is reported alongside but not subtracted again: realized sell
//! outputs already include it.

mod execute;
mod plan;
mod scenario;

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::amm::AmmError;
use crate::decimal::{serde_dec, Dec};

pub use execute::{
    evaluate_profit, execute_plan, launch, LaunchParams, LaunchedPool, NoiseSchedule,
};
pub use plan::{
    plan_canonical, plan_canonical_with, plan_fragmented, CanonicalExit, FragmentParams,
    MAX_FRAGMENTS,
};
pub use scenario::{
    generate, generate_pool, DecRange, GroundTruth, IntRange, Manifest, ManifestEntry,
    PoolScenario, ScenarioConfig, ScenarioMode, MANIFEST_SCHEMA_VERSION, PRESETS,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdversaryError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no order size reaches the requested impact")]
    InfeasibleImpact,
    #[error("even a single-order plan misses the minimum return (best net {best_net}, required {v_min})")]
    InfeasiblePlan { best_net: Dec, v_min: Dec },
    #[error("order {order} over-draws the pool: {source}")]
    ReserveExhausted { order: usize, source: AmmError },
    #[error(transparent)]
    Amm(#[from] AmmError),
}

/// Per-transaction and per-wallet costs, in base tokens.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GasModel {
    #[serde(with = "serde_dec")]
    pub gas_per_tx: Dec,
    #[serde(with = "serde_dec")]
    pub funding_cost_per_wallet: Dec,
}

impl GasModel {
    pub const FREE: GasModel = GasModel {
        gas_per_tx: Dec::ZERO,
        funding_cost_per_wallet: Dec::ZERO,
    };

    pub fn total(&self, orders: usize, funded_wallets: usize) -> Dec {
        self.gas_per_tx * Dec::from(orders as u64)
            + self.funding_cost_per_wallet * Dec::from(funded_wallets as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    Canonical,
    Fragmented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    Sell,
    /// Redeem LP; `volume` is the LP amount.
    Withdraw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Order {
    /// Index into [`ExitPlan::wallets`].
    pub wallet: usize,
    /// Seconds after the exit starts.
    pub offset_secs: u64,
    pub kind: OrderKind,
    #[serde(with = "serde_dec")]
    pub volume: Dec,
    /// Base proceeds on the planning snapshot, truncated like a recorded trace.
    #[serde(with = "serde_dec")]
    pub expected_out: Dec,
    #[serde(with = "serde_dec")]
    pub expected_impact: Dec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PlanOutcome {
    #[serde(with = "serde_dec")]
    pub total_proceeds: Dec,
    #[serde(with = "serde_dec")]
    pub total_slippage: Dec,
    #[serde(with = "serde_dec")]
    pub total_costs: Dec,
    #[serde(with = "serde_dec")]
    pub net_profit: Dec,
    pub feasible: bool,
}

impl PlanOutcome {
    /// The single place feasibility is decided.
    pub fn new(proceeds: Dec, slippage: Dec, costs: Dec, initial_stake: Dec, v_min: Dec) -> Self {
        let net_profit = proceeds - initial_stake - costs;
        PlanOutcome {
            total_proceeds: proceeds,
            total_slippage: slippage,
            total_costs: costs,
            net_profit,
            feasible: net_profit >= v_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitPlan {
    pub mode: PlanMode,
    pub owner: Address,
    /// Selling wallets. Every wallet has at least one order.
    pub wallets: Vec<Address>,
    /// All orders in execution order; offsets strictly increase.
    pub orders: Vec<Order>,
    pub owner_participates: bool,
    pub gas: GasModel,
    #[serde(with = "serde_dec")]
    pub v_min: Dec,
    #[serde(with = "serde_dec")]
    pub theta_target: Dec,
    pub outcome: PlanOutcome,
}

impl ExitPlan {
    pub fn wallet_count(&self) -> usize {
        self.wallets.len()
    }

    pub fn order_count(&self) -> usize {
        self.orders.len()
    }

    /// Orders per wallet, aligned with `wallets`.
    pub fn orders_per_wallet(&self) -> Vec<usize> {
        let mut counts = vec![0; self.wallets.len()];
        for o in &self.orders {
            counts[o.wallet] += 1;
        }
        counts
    }

    /// Wallets that need funding from the owner.
    pub fn funded_wallets(&self) -> usize {
        self.wallets.iter().filter(|w| **w != self.owner).count()
    }

    pub fn costs(&self) -> Dec {
        self.gas.total(self.orders.len(), self.funded_wallets())
    }

    /// Token volume each wallet must hold before the exit.
    pub fn token_needs(&self) -> Vec<Dec> {
        let mut needs = vec![Dec::ZERO; self.wallets.len()];
        for o in self.orders.iter().filter(|o| o.kind == OrderKind::Sell) {
            needs[o.wallet] += o.volume;
        }
        needs
    }
}
