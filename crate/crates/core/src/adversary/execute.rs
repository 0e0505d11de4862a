use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AdversaryError, ExitPlan, OrderKind, PlanOutcome};
use crate::address::Address;
use crate::amm::PoolState;
use crate::decimal::{dec, from_f64_rounded, quantize_down, serde_dec, Dec};
use crate::ledger::{replay, Asset, EventKind, LedgerError, PoolTrace, TxEvent};

/// Gap between the last launch event and the first funding transfer, and
/// between consecutive transfers.
const FUNDING_SPACING_SECS: u64 = 60;

/// Gap between the last funding transfer and the first exit order.
const EXIT_DELAY_SECS: u64 = 600;

pub(crate) fn random_address(rng: &mut ChaCha8Rng) -> Address {
    Address(rng.random())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaunchParams {
    pub pool_id: String,
    pub dex_name: String,
    pub deployer: Address,
    pub token_reserve: Dec,
    pub base_reserve: Dec,
    pub fee_rate: Dec,
    pub deploy_ts: u64,
    /// Send the whole initial LP tranche to the zero address right after deploy.
    pub burn_lp: bool,
    /// `(buyer, base paid)` in order.
    pub organic_buys: Vec<(Address, Dec)>,
    pub buy_spacing_secs: u64,
}

/// A deployed pool with its opening activity, ready for an exit.
#[derive(Debug, Clone, PartialEq)]
pub struct LaunchedPool {
    pub pool_id: String,
    pub dex_name: String,
    pub deployer: Address,
    pub pool: PoolState,
    pub events: Vec<TxEvent>,
    pub last_ts: u64,
}

fn record_buy(
    pool: &mut PoolState,
    who: Address,
    ts: u64,
    base: Dec,
) -> Result<TxEvent, AdversaryError> {
    let r = pool.buy(base)?;
    Ok(TxEvent::new(
        EventKind::Buy,
        who,
        ts,
        quantize_down(r.amount_out),
        base,
    ))
}

/// Deploys the pool, optionally burns the LP tranche, and runs organic buys.
pub fn launch(p: &LaunchParams) -> Result<LaunchedPool, AdversaryError> {
    let mut pool = PoolState::deploy(p.deployer, p.token_reserve, p.base_reserve, p.fee_rate)?;
    let mut events = vec![TxEvent::new(
        EventKind::Deploy,
        p.deployer,
        p.deploy_ts,
        p.token_reserve,
        p.base_reserve,
    )];
    let mut ts = p.deploy_ts;
    if p.burn_lp {
        let amount = quantize_down(pool.initial_lp());
        pool.burn_lp(p.deployer, Address::ZERO, amount)?;
        events.push(TxEvent::transfer(
            Asset::Lp,
            p.deployer,
            Address::ZERO,
            ts,
            amount,
        ));
    }
    for (buyer, base) in &p.organic_buys {
        ts += p.buy_spacing_secs;
        events.push(record_buy(&mut pool, *buyer, ts, *base)?);
    }
    Ok(LaunchedPool {
        pool_id: p.pool_id.clone(),
        dex_name: p.dex_name.clone(),
        deployer: p.deployer,
        pool,
        events,
        last_ts: ts,
    })
}

/// Small buys from fresh wallets mixed in after each exit order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub seed: u64,
    /// Mean buys inserted after each order.
    pub buys_per_gap: f64,
    /// Upper bound on one buy, as a fraction of the current base reserve.
    #[serde(with = "serde_dec")]
    pub max_base_fraction: Dec,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        NoiseSchedule {
            seed: 0,
            buys_per_gap: 1.0,
            max_base_fraction: dec!(0.005),
        }
    }
}

/// Runs `plan` on top of `launched` and returns the full trace, unannotated.
///
/// Non-owner wallets are first funded by token transfers from the owner
/// covering exactly their sell volume. Orders then run at their offsets;
/// recorded outputs are truncated to 18 decimal places.
pub fn execute_plan(
    launched: &LaunchedPool,
    plan: &ExitPlan,
    noise: Option<&NoiseSchedule>,
) -> Result<PoolTrace, AdversaryError> {
    let mut pool = launched.pool.clone();
    let mut events = launched.events.clone();
    let mut ts = launched.last_ts;

    for (wallet, need) in plan.wallets.iter().zip(plan.token_needs()) {
        if *wallet != plan.owner && need > Dec::ZERO {
            ts += FUNDING_SPACING_SECS;
            events.push(TxEvent::transfer(
                Asset::Token,
                plan.owner,
                *wallet,
                ts,
                need,
            ));
        }
    }

    let mut rng = noise.map(|n| ChaCha8Rng::seed_from_u64(n.seed));
    let mut noise_wallets: HashSet<Address> = HashSet::new();
    let start = ts + EXIT_DELAY_SECS;
    for (j, order) in plan.orders.iter().enumerate() {
        let who = plan.wallets[order.wallet];
        let at = start + order.offset_secs;
        let exhausted = |source| AdversaryError::ReserveExhausted { order: j, source };
        match order.kind {
            OrderKind::Sell => {
                let r = pool.sell(order.volume).map_err(exhausted)?;
                events.push(TxEvent::new(
                    EventKind::Sell,
                    who,
                    at,
                    order.volume,
                    quantize_down(r.amount_out),
                ));
            }
            OrderKind::Withdraw => {
                let r = pool.withdraw(order.volume, who).map_err(exhausted)?;
                events.push(TxEvent::new(
                    EventKind::Withdraw,
                    who,
                    at,
                    quantize_down(r.token_out),
                    quantize_down(r.base_out),
                ));
            }
        }
        let (Some(n), Some(rng)) = (noise, rng.as_mut()) else {
            continue;
        };
        let Some(next) = plan.orders.get(j + 1) else {
            continue;
        };
        let next_at = start + next.offset_secs;
        let whole = n.buys_per_gap.floor();
        let count =
            whole as u64 + u64::from(rng.random_bool((n.buys_per_gap - whole).clamp(0.0, 1.0)));
        for k in 0..count {
            let mut buyer = random_address(rng);
            while buyer == plan.owner
                || plan.wallets.contains(&buyer)
                || !noise_wallets.insert(buyer)
            {
                buyer = random_address(rng);
            }
            let fraction = from_f64_rounded(rng.random::<f64>(), 12) * n.max_base_fraction;
            let base = quantize_down(pool.base_reserve() * fraction);
            if base <= Dec::ZERO {
                continue;
            }
            let buy_at = (at + 1 + k).min(next_at);
            events.push(record_buy(&mut pool, buyer, buy_at, base)?);
        }
    }

    PoolTrace::from_events(launched.pool_id.clone(), launched.dex_name.clone(), events)
        .map_err(|e| AdversaryError::InvalidParameter(e.to_string()))
}

/// Realized outcome of `plan` in `trace`: proceeds are the recorded outputs
/// of the plan wallets' sells and withdrawals; slippage comes from replay.
pub fn evaluate_profit(
    trace: &PoolTrace,
    plan: &ExitPlan,
    initial_stake: Dec,
    fee_rate: Dec,
) -> Result<PlanOutcome, LedgerError> {
    let deploy = trace.deploy_event();
    let initial = PoolState::deploy(
        trace.deployer,
        deploy.token_amount,
        deploy.base_amount,
        fee_rate,
    )
    .map_err(|source| LedgerError::Replay {
        pool_id: trace.pool_id.clone(),
        event_index: 0,
        source,
    })?;
    let mut proceeds = Dec::ZERO;
    let mut slippage = Dec::ZERO;
    let mut prev = (initial.token_reserve(), initial.base_reserve());
    replay(trace, &initial, |step| {
        let e = step.event;
        if step.index > 0 && e.is_exit() && plan.wallets.contains(&e.actor) {
            proceeds += e.base_amount;
            if e.kind == EventKind::Sell && prev.0 > Dec::ZERO {
                slippage += e.token_amount * prev.1 / prev.0 - e.base_amount;
            }
        }
        prev = (step.pool.token_reserve(), step.pool.base_reserve());
    })?;
    Ok(PlanOutcome::new(
        proceeds,
        slippage,
        plan.costs(),
        initial_stake,
        plan.v_min,
    ))
}
