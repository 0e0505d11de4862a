use serde::{Deserialize, Serialize};

use super::{AdversaryError, ExitPlan, GasModel, Order, OrderKind, PlanMode, PlanOutcome};
use crate::address::Address;
use crate::amm::PoolState;
use crate::decimal::{dec, quantize_down, Dec};

/// Hard cap on fragments per plan.
pub const MAX_FRAGMENTS: usize = 10_000;

/// Impact a canonical exit must exceed.
const CANONICAL_IMPACT: Dec = dec!(0.9);

/// Sell size, in multiples of the token reserve after fees, used by a
/// canonical sell: removes 10/11 of the base reserve.
const CANONICAL_SELL_MULTIPLE: Dec = dec!(10);

/// Smallest recorded amount: one unit at the 18th decimal place.
const RECORD_UNIT: Dec = dec!(1e-18);

fn quantize_up(d: Dec) -> Dec {
    let down = quantize_down(d);
    if down < d {
        down + RECORD_UNIT
    } else {
        down
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CanonicalExit {
    /// Withdraw when the owner's LP alone exceeds the impact target, else sell.
    #[default]
    Auto,
    Sell,
    Withdraw,
}

/// Canonical exit with no costs: see [`plan_canonical_with`].
pub fn plan_canonical(pool: &PoolState, owner: Address) -> Result<ExitPlan, AdversaryError> {
    plan_canonical_with(pool, owner, CanonicalExit::Auto, GasModel::FREE)
}

/// One owner transaction removing more than 90% of the base reserve.
pub fn plan_canonical_with(
    pool: &PoolState,
    owner: Address,
    exit: CanonicalExit,
    gas: GasModel,
) -> Result<ExitPlan, AdversaryError> {
    let y = pool.base_reserve();
    let lp = pool.lp_balance(&owner);
    let withdraw = if exit != CanonicalExit::Sell && lp > Dec::ZERO {
        pool.apply_withdraw(lp, owner)
            .ok()
            .map(|(_, r)| (r, quantize_down(r.base_out)))
            .filter(|(_, out)| *out / y > CANONICAL_IMPACT)
    } else {
        None
    };
    let order = match (withdraw, exit) {
        (Some((_, out)), _) => Order {
            wallet: 0,
            offset_secs: 0,
            kind: OrderKind::Withdraw,
            volume: lp,
            expected_out: out,
            expected_impact: out / y,
        },
        (None, CanonicalExit::Withdraw) => return Err(AdversaryError::InfeasibleImpact),
        (None, _) => {
            let keep = Dec::ONE - pool.fee_rate();
            let volume = quantize_up(CANONICAL_SELL_MULTIPLE * pool.token_reserve() / keep);
            let q = pool.quote_sell(volume)?;
            let out = quantize_down(q.amount_out);
            if out / y <= CANONICAL_IMPACT {
                return Err(AdversaryError::InfeasibleImpact);
            }
            Order {
                wallet: 0,
                offset_secs: 0,
                kind: OrderKind::Sell,
                volume,
                expected_out: out,
                expected_impact: out / y,
            }
        }
    };
    let slippage = match order.kind {
        OrderKind::Sell => pool.quote_sell(order.volume)?.slippage_cost,
        OrderKind::Withdraw => Dec::ZERO,
    };
    let outcome = PlanOutcome::new(
        order.expected_out,
        slippage,
        gas.total(1, 0),
        Dec::ZERO,
        Dec::ZERO,
    );
    Ok(ExitPlan {
        mode: PlanMode::Canonical,
        owner,
        wallets: vec![owner],
        orders: vec![order],
        owner_participates: true,
        gas,
        v_min: Dec::ZERO,
        theta_target: CANONICAL_IMPACT,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentParams {
    pub owner: Address,
    /// Distributor wallets, in round-robin order.
    pub wallets: Vec<Address>,
    /// Maximum orders per wallet, aligned with `wallets`; empty means no cap.
    /// With `owner_participates` the owner's quota comes first.
    pub quotas: Vec<usize>,
    /// Base proceeds at which the exit stops.
    pub v_total_target: Dec,
    /// Largest impact any single order may have.
    pub theta_target: Dec,
    pub gas: GasModel,
    pub v_min: Dec,
    /// Spacing between consecutive orders.
    pub interval_secs: u64,
    /// Put the owner first in the rotation.
    pub owner_participates: bool,
}

impl FragmentParams {
    pub fn new(
        owner: Address,
        wallets: Vec<Address>,
        v_total_target: Dec,
        theta_target: Dec,
    ) -> Self {
        FragmentParams {
            owner,
            wallets,
            quotas: Vec::new(),
            v_total_target,
            theta_target,
            gas: GasModel::FREE,
            v_min: Dec::ZERO,
            interval_secs: 3600,
            owner_participates: false,
        }
    }

    fn validate(&self) -> Result<(), AdversaryError> {
        let bad = |m: String| Err(AdversaryError::InvalidParameter(m));
        let n = self.wallets.len() + usize::from(self.owner_participates);
        if n == 0 {
            return bad("at least one selling wallet is required".into());
        }
        if !self.quotas.is_empty() && self.quotas.len() != n {
            return bad(format!("{} quotas for {n} wallets", self.quotas.len()));
        }
        if !(self.theta_target > Dec::ZERO && self.theta_target < Dec::ONE) {
            return bad(format!(
                "theta_target must lie in (0, 1), got {}",
                self.theta_target
            ));
        }
        if self.v_min < Dec::ZERO {
            return bad("v_min must be non-negative".into());
        }
        if self.v_total_target <= Dec::ZERO {
            return bad("v_total_target must be positive".into());
        }
        if self.gas.gas_per_tx < Dec::ZERO || self.gas.funding_cost_per_wallet < Dec::ZERO {
            return bad("costs must be non-negative".into());
        }
        if self.interval_secs == 0 {
            return bad("interval_secs must be positive".into());
        }
        Ok(())
    }
}

/// Largest sell whose impact on `pool` stays within `theta`, capped so the
/// output does not overshoot `remaining`.
fn next_fragment(
    pool: &PoolState,
    theta: Dec,
    remaining: Dec,
) -> Result<(Dec, Dec, Dec), AdversaryError> {
    let x = pool.token_reserve();
    let y = pool.base_reserve();
    let keep = Dec::ONE - pool.fee_rate();
    let mut volume = quantize_down(theta * x / (Dec::ONE - theta) / keep);
    if remaining < y {
        let trimmed = quantize_up(x * remaining / (y - remaining) / keep);
        volume = volume.min(trimmed);
    }
    let mut q = pool.quote_sell(volume)?;
    while q.amount_out / y > theta && volume > Dec::ZERO {
        // rounding at the 38th digit can land a hair above the bound
        volume = quantize_down(volume * (Dec::ONE - dec!(1e-15)));
        q = pool.quote_sell(volume)?;
    }
    Ok((volume, quantize_down(q.amount_out), q.slippage_cost))
}

/// Greedy fragmentation: repeatedly the largest sub-threshold sell,
/// assigned round-robin to wallets with remaining quota.
///
/// Stops at the proceeds target, when an order would not cover its gas,
/// when quotas run out, or at [`MAX_FRAGMENTS`]. Wallets left without
/// orders are dropped from the plan.
pub fn plan_fragmented(
    pool: &PoolState,
    params: &FragmentParams,
) -> Result<ExitPlan, AdversaryError> {
    params.validate()?;
    let mut wallets = Vec::with_capacity(params.wallets.len() + 1);
    if params.owner_participates {
        wallets.push(params.owner);
    }
    wallets.extend(params.wallets.iter().copied());
    let n = wallets.len();
    let mut quota: Vec<usize> = if params.quotas.is_empty() {
        vec![MAX_FRAGMENTS; n]
    } else {
        params.quotas.clone()
    };
    let funded = |w: &Address| usize::from(*w != params.owner);

    let mut sim = pool.clone();
    let mut orders: Vec<Order> = Vec::new();
    let mut proceeds = Dec::ZERO;
    let mut slippage = Dec::ZERO;
    let mut cursor = 0usize;
    let mut first_order_net: Option<Dec> = None;
    while orders.len() < MAX_FRAGMENTS {
        let remaining = params.v_total_target - proceeds;
        if remaining <= Dec::ZERO {
            break;
        }
        let Some(step) = (0..n).map(|i| (cursor + i) % n).find(|&i| quota[i] > 0) else {
            break;
        };
        let y = sim.base_reserve();
        let (volume, out, slip) = next_fragment(&sim, params.theta_target, remaining)?;
        if first_order_net.is_none() {
            let (_, best, _) = next_fragment(&sim, params.theta_target, y)?;
            first_order_net = Some(best - params.gas.total(1, funded(&wallets[step])));
        }
        if out <= Dec::ZERO || out <= params.gas.gas_per_tx {
            break;
        }
        sim.sell(volume)?;
        proceeds += out;
        slippage += slip;
        orders.push(Order {
            wallet: step,
            offset_secs: orders.len() as u64 * params.interval_secs,
            kind: OrderKind::Sell,
            volume,
            expected_out: out,
            expected_impact: out / y,
        });
        quota[step] -= 1;
        cursor = step + 1;
    }

    // drop idle wallets and renumber
    let mut used = vec![false; n];
    for o in &orders {
        used[o.wallet] = true;
    }
    let mut remap = vec![usize::MAX; n];
    let mut kept = Vec::new();
    for (i, w) in wallets.iter().enumerate() {
        if used[i] {
            remap[i] = kept.len();
            kept.push(*w);
        }
    }
    for o in &mut orders {
        o.wallet = remap[o.wallet];
    }
    let funded_count = kept.iter().map(funded).sum();
    let costs = params.gas.total(orders.len(), funded_count);
    let outcome = PlanOutcome::new(proceeds, slippage, costs, Dec::ZERO, params.v_min);
    let single_feasible = first_order_net.is_some_and(|net| net >= params.v_min);
    if orders.is_empty() || (!outcome.feasible && !single_feasible) {
        return Err(AdversaryError::InfeasiblePlan {
            best_net: first_order_net.unwrap_or(Dec::ZERO).max(outcome.net_profit),
            v_min: params.v_min,
        });
    }
    Ok(ExitPlan {
        mode: PlanMode::Fragmented,
        owner: params.owner,
        wallets: kept,
        orders,
        owner_participates: params.owner_participates,
        gas: params.gas,
        v_min: params.v_min,
        theta_target: params.theta_target,
        outcome,
    })
}
