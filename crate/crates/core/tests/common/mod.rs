#![allow(dead_code)]

use rugscope::address::Address;
use rugscope::amm::PoolState;
use rugscope::decimal::{quantize_down, Dec};
use rugscope::detection::PoolAnalysis;
use rugscope::ledger::{Asset, EventKind, PoolTrace, TxEvent};
use rugscope::measurement::PoolProfile;
use rugscope::predicates::DetectorConfig;

pub const DAY: u64 = 86_400;

pub fn addr(tag: u32, n: u32) -> Address {
    let mut a = [0u8; 20];
    a[0] = 0x42;
    a[12..16].copy_from_slice(&tag.to_be_bytes());
    a[16..20].copy_from_slice(&n.to_be_bytes());
    Address(a)
}

pub fn d(s: &str) -> Dec {
    s.parse().unwrap()
}

/// Records events while driving a real pool, so amounts are replay-consistent.
pub struct TraceBuilder {
    pool_id: String,
    pool: PoolState,
    events: Vec<TxEvent>,
}

impl TraceBuilder {
    pub fn new(pool_id: impl Into<String>, deployer: Address, created_at: u64) -> Self {
        let (x, y) = (d("1000000000"), d("1000"));
        TraceBuilder {
            pool_id: pool_id.into(),
            pool: PoolState::deploy(deployer, x, y, d("0.003")).unwrap(),
            events: vec![TxEvent::new(EventKind::Deploy, deployer, created_at, x, y)],
        }
    }

    pub fn transfer(&mut self, from: Address, to: Address, amount: Dec, ts: u64) -> &mut Self {
        self.events
            .push(TxEvent::transfer(Asset::Token, from, to, ts, amount));
        self
    }

    /// Sells `amount` tokens; returns the recorded base output.
    pub fn sell(&mut self, who: Address, amount: Dec, ts: u64) -> Dec {
        let out = quantize_down(self.pool.sell(amount).unwrap().amount_out);
        self.events
            .push(TxEvent::new(EventKind::Sell, who, ts, amount, out));
        out
    }

    pub fn buy(&mut self, who: Address, base: Dec, ts: u64) -> Dec {
        let out = quantize_down(self.pool.buy(base).unwrap().amount_out);
        self.events
            .push(TxEvent::new(EventKind::Buy, who, ts, out, base));
        out
    }

    pub fn build(&self) -> PoolTrace {
        PoolTrace::from_events(self.pool_id.clone(), "uniswap-v2", self.events.clone()).unwrap()
    }
}

/// Detects the pool and returns its profile when labeled FRP.
pub fn labeled_profile(trace: PoolTrace) -> Option<PoolProfile> {
    let cfg = DetectorConfig::default();
    let analysis = PoolAnalysis::new(trace, &cfg).unwrap();
    let report = analysis.report(&cfg).unwrap();
    report
        .frp
        .is_frp
        .then(|| PoolProfile::new(&analysis.trace, &analysis.inflated, &cfg))
}
