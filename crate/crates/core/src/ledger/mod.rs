//! Pool transaction traces: data model, file formats, reserve replay.

mod io;
mod replay;

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::amm::AmmError;
use crate::decimal::{serde_dec, Dec};

pub use io::{
    ingest_path, ingest_reader, ingest_traces, write_csv, write_jsonl, write_traces, Ingested,
    Reject, TraceFormat, CSV_COLUMNS,
};
pub use replay::{annotate, reconstruct_reserves, replay, ReplayStep};

pub const SECONDS_PER_DAY: u64 = 86_400;

/// Default observation window for pool lifetimes, in days.
pub const DEFAULT_MAX_LIFETIME_DAYS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Deploy,
    Buy,
    Sell,
    Deposit,
    Withdraw,
    Transfer,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Deploy => "deploy",
            EventKind::Buy => "buy",
            EventKind::Sell => "sell",
            EventKind::Deposit => "deposit",
            EventKind::Withdraw => "withdraw",
            EventKind::Transfer => "transfer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "deploy" => EventKind::Deploy,
            "buy" => EventKind::Buy,
            "sell" => EventKind::Sell,
            "deposit" => EventKind::Deposit,
            "withdraw" => EventKind::Withdraw,
            "transfer" => EventKind::Transfer,
            _ => return None,
        })
    }
}

/// What a `Transfer` moves. Other kinds always carry `Token`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Asset {
    #[default]
    Token,
    Lp,
}

impl Asset {
    pub fn as_str(self) -> &'static str {
        match self {
            Asset::Token => "token",
            Asset::Lp => "lp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "token" => Some(Asset::Token),
            "lp" => Some(Asset::Lp),
            _ => None,
        }
    }
}

/// One pool-affecting action.
///
/// Amount semantics by kind:
///
/// | kind     | `token_amount`        | `base_amount`         |
/// |----------|-----------------------|-----------------------|
/// | deploy   | seeded paired tokens  | seeded base tokens    |
/// | buy      | paired tokens out     | base tokens paid in   |
/// | sell     | paired tokens sold    | base tokens received  |
/// | deposit  | paired tokens added   | base tokens added     |
/// | withdraw | paired tokens out     | base tokens out       |
/// | transfer | amount of `asset`     | unused (0)            |
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TxEvent {
    pub kind: EventKind,
    pub actor: Address,
    pub timestamp: u64,
    #[serde(with = "serde_dec")]
    pub token_amount: Dec,
    #[serde(with = "serde_dec")]
    pub base_amount: Dec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterparty: Option<Address>,
    pub asset: Asset,
}

impl TxEvent {
    pub fn new(
        kind: EventKind,
        actor: Address,
        timestamp: u64,
        token_amount: Dec,
        base_amount: Dec,
    ) -> Self {
        TxEvent {
            kind,
            actor,
            timestamp,
            token_amount,
            base_amount,
            counterparty: None,
            asset: Asset::Token,
        }
    }

    pub fn transfer(asset: Asset, from: Address, to: Address, timestamp: u64, amount: Dec) -> Self {
        TxEvent {
            kind: EventKind::Transfer,
            actor: from,
            timestamp,
            token_amount: amount,
            base_amount: Dec::ZERO,
            counterparty: Some(to),
            asset,
        }
    }

    /// Sells and withdrawals: the transactions that can extract base value.
    pub fn is_exit(&self) -> bool {
        matches!(self.kind, EventKind::Sell | EventKind::Withdraw)
    }

    /// An exit that returned nothing; excluded from impact statistics.
    pub fn is_degenerate(&self) -> bool {
        self.is_exit() && self.base_amount <= Dec::ZERO
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LedgerError {
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("no valid pool traces in input")]
    EmptyCorpus,
    #[error("io error: {0}")]
    Io(String),
    #[error("pool {pool_id}: trace has no deploy event")]
    MissingDeploy { pool_id: String },
    #[error("pool {pool_id}: initial state does not match the deploy event")]
    InconsistentInitialState { pool_id: String },
    #[error(
        "pool {pool_id} event {event_index}: recorded {recorded} but replay gives {simulated}"
    )]
    ReplayDivergence {
        pool_id: String,
        event_index: usize,
        recorded: Dec,
        simulated: Dec,
    },
    #[error("pool {pool_id} event {event_index}: {source}")]
    Replay {
        pool_id: String,
        event_index: usize,
        source: AmmError,
    },
}

impl From<std::io::Error> for LedgerError {
    fn from(e: std::io::Error) -> Self {
        LedgerError::Io(e.to_string())
    }
}

/// Ordered activity of one pool.
///
/// `events[0]` is the deploy. `base_reserve_before`, when present, has one
/// entry per event: the pool's base reserve just before that event.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolTrace {
    pub pool_id: String,
    pub deployer: Address,
    pub dex_name: String,
    pub events: Vec<TxEvent>,
    pub base_reserve_before: Option<Vec<Dec>>,
}

impl PoolTrace {
    /// Builds a trace, ordering events by timestamp (ties keep input order).
    ///
    /// The deployer is taken from the single deploy event, which must be
    /// the earliest.
    pub fn from_events(
        pool_id: impl Into<String>,
        dex_name: impl Into<String>,
        mut events: Vec<TxEvent>,
    ) -> Result<Self, LedgerError> {
        let pool_id = pool_id.into();
        events.sort_by_key(|e| e.timestamp);
        let deploys = events
            .iter()
            .filter(|e| e.kind == EventKind::Deploy)
            .count();
        if deploys != 1 || events[0].kind != EventKind::Deploy {
            return Err(LedgerError::MissingDeploy { pool_id });
        }
        Ok(PoolTrace {
            deployer: events[0].actor,
            pool_id,
            dex_name: dex_name.into(),
            events,
            base_reserve_before: None,
        })
    }

    pub fn deploy_event(&self) -> &TxEvent {
        &self.events[0]
    }

    /// Timestamp of the deploy (pool creation).
    pub fn created_at(&self) -> u64 {
        self.events.first().map_or(0, |e| e.timestamp)
    }

    /// Last event timestamp minus first event timestamp.
    pub fn lifetime_secs(&self) -> u64 {
        match (self.events.first(), self.events.last()) {
            (Some(a), Some(b)) => b.timestamp.saturating_sub(a.timestamp),
            _ => 0,
        }
    }

    pub fn is_annotated(&self) -> bool {
        self.base_reserve_before
            .as_ref()
            .is_some_and(|v| v.len() == self.events.len())
    }

    /// `v_i / V_i` for a non-degenerate exit at `index`; `None` otherwise
    /// or when the trace carries no reserve annotations.
    pub fn impact(&self, index: usize) -> Option<Dec> {
        let event = self.events.get(index)?;
        if !event.is_exit() || event.is_degenerate() {
            return None;
        }
        let reserve = *self.base_reserve_before.as_ref()?.get(index)?;
        if reserve <= Dec::ZERO {
            return None;
        }
        Some(event.base_amount / reserve)
    }
}

/// Whether a trace's lifetime is at most `max_days` days (inclusive).
pub fn within_lifetime(trace: &PoolTrace, max_days: f64) -> bool {
    trace.lifetime_secs() as f64 <= max_days * SECONDS_PER_DAY as f64
}

/// Keeps traces whose lifetime does not exceed `max_days` days.
pub fn filter_by_lifetime(traces: Vec<PoolTrace>, max_days: f64) -> Vec<PoolTrace> {
    traces
        .into_iter()
        .filter(|t| within_lifetime(t, max_days))
        .collect()
}
