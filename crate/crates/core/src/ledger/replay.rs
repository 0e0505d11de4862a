use super::{Asset, EventKind, LedgerError, PoolTrace, TxEvent};
use crate::amm::{AmmError, PoolState};
use crate::decimal::{dec, relative_error, Dec};

/// Largest relative gap tolerated between a recorded output and its replay.
pub const REPLAY_TOLERANCE: Dec = dec!(1e-6);

/// One event as seen during replay.
pub struct ReplayStep<'a> {
    pub index: usize,
    pub event: &'a TxEvent,
    pub base_reserve_before: Dec,
    /// Pool state after the event has been applied.
    pub pool: &'a PoolState,
}

/// Replays every event of `trace` on a copy of `initial_state`, calling
/// `visit` after each one. Returns the final state.
///
/// `initial_state` is the pool right after the deploy; its reserves must
/// equal the deploy amounts.
pub fn replay<F>(
    trace: &PoolTrace,
    initial_state: &PoolState,
    mut visit: F,
) -> Result<PoolState, LedgerError>
where
    F: FnMut(ReplayStep<'_>),
{
    let deploy = trace
        .events
        .first()
        .filter(|e| e.kind == EventKind::Deploy)
        .ok_or_else(|| LedgerError::MissingDeploy {
            pool_id: trace.pool_id.clone(),
        })?;
    if initial_state.token_reserve() != deploy.token_amount
        || initial_state.base_reserve() != deploy.base_amount
    {
        return Err(LedgerError::InconsistentInitialState {
            pool_id: trace.pool_id.clone(),
        });
    }
    let mut pool = initial_state.clone();
    visit(ReplayStep {
        index: 0,
        event: deploy,
        base_reserve_before: Dec::ZERO,
        pool: &pool,
    });
    for (index, event) in trace.events.iter().enumerate().skip(1) {
        let before = pool.base_reserve();
        step(&mut pool, event).map_err(|e| match e {
            StepError::Amm(source) => LedgerError::Replay {
                pool_id: trace.pool_id.clone(),
                event_index: index,
                source,
            },
            StepError::Diverged {
                recorded,
                simulated,
            } => LedgerError::ReplayDivergence {
                pool_id: trace.pool_id.clone(),
                event_index: index,
                recorded,
                simulated,
            },
        })?;
        visit(ReplayStep {
            index,
            event,
            base_reserve_before: before,
            pool: &pool,
        });
    }
    Ok(pool)
}

enum StepError {
    Amm(AmmError),
    Diverged { recorded: Dec, simulated: Dec },
}

impl From<AmmError> for StepError {
    fn from(e: AmmError) -> Self {
        StepError::Amm(e)
    }
}

fn check(recorded: Dec, simulated: Dec) -> Result<(), StepError> {
    if relative_error(recorded, simulated) > REPLAY_TOLERANCE {
        Err(StepError::Diverged {
            recorded,
            simulated,
        })
    } else {
        Ok(())
    }
}

/// Caps `requested` at `available` when the excess is rounding noise.
fn within_balance(requested: Dec, available: Dec) -> Dec {
    if requested > available && relative_error(requested, available) <= REPLAY_TOLERANCE {
        available
    } else {
        requested
    }
}

fn step(pool: &mut PoolState, event: &TxEvent) -> Result<(), StepError> {
    match event.kind {
        EventKind::Deploy => unreachable!("trace has a single deploy"),
        EventKind::Buy => {
            let r = pool.buy(event.base_amount)?;
            check(event.token_amount, r.amount_out)
        }
        EventKind::Sell => {
            let r = pool.sell(event.token_amount)?;
            check(event.base_amount, r.amount_out)
        }
        EventKind::Deposit => {
            pool.deposit(event.token_amount, event.base_amount, event.actor)?;
            Ok(())
        }
        EventKind::Withdraw => {
            if pool.base_reserve() <= Dec::ZERO {
                return Err(AmmError::NonPositiveReserves.into());
            }
            let lp = pool.lp_total_supply() * event.base_amount / pool.base_reserve();
            let lp = within_balance(lp, pool.lp_balance(&event.actor));
            let r = pool.withdraw(lp, event.actor)?;
            check(event.base_amount, r.base_out)?;
            check(event.token_amount, r.token_out)
        }
        EventKind::Transfer => {
            if event.asset == Asset::Lp {
                let to = event
                    .counterparty
                    .expect("validated transfer has a counterparty");
                let amount = within_balance(event.token_amount, pool.lp_balance(&event.actor));
                pool.transfer_lp(event.actor, to, amount)?;
            }
            Ok(())
        }
    }
}

/// Returns a copy of `trace` with `base_reserve_before` filled from replay.
///
/// The deploy is annotated with zero: the pool is empty before it.
pub fn reconstruct_reserves(
    trace: &PoolTrace,
    initial_state: &PoolState,
) -> Result<PoolTrace, LedgerError> {
    let mut reserves = Vec::with_capacity(trace.events.len());
    replay(trace, initial_state, |s| {
        reserves.push(s.base_reserve_before)
    })?;
    let mut out = trace.clone();
    out.base_reserve_before = Some(reserves);
    Ok(out)
}

/// Annotates `trace` in place, seeding the pool from its deploy event.
pub fn annotate(trace: &mut PoolTrace, fee_rate: Dec) -> Result<(), LedgerError> {
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
    let mut reserves = Vec::with_capacity(trace.events.len());
    replay(trace, &initial, |s| reserves.push(s.base_reserve_before))?;
    trace.base_reserve_before = Some(reserves);
    Ok(())
}
