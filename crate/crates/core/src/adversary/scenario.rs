//! Scenario files and labeled synthetic corpora.
//!
//! A scenario lists pool templates. Each template is expanded `count`
//! times; every numeric field may be a fixed value or a `[min, max]` range
//! sampled per pool. Pool `i` draws from its own ChaCha stream of the
//! scenario seed, so generation is deterministic and order-independent.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::execute::random_address;
use super::{
    execute_plan, launch, plan_canonical_with, plan_fragmented, AdversaryError, CanonicalExit,
    ExitPlan, FragmentParams, GasModel, LaunchParams, NoiseSchedule, PlanOutcome,
};
use crate::address::Address;
use crate::amm::{DEFAULT_FEE_RATE, MAX_FEE_RATE};
use crate::decimal::{dec, from_f64_rounded, quantize_down, serde_dec, Dec};
use crate::ledger::{EventKind, PoolTrace, TxEvent, DEFAULT_MAX_LIFETIME_DAYS, SECONDS_PER_DAY};
use crate::predicates::DEFAULT_THETA;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Built-in scenario names accepted by [`ScenarioConfig::preset`].
pub const PRESETS: [&str; 4] = ["libra", "canonical", "benign", "mixed"];

/// 2023-01-01T00:00:00Z
const DEFAULT_DEPLOY_TIME: u64 = 1_672_531_200;

/// An integer that is either fixed or drawn uniformly from `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntRange {
    pub min: u64,
    pub max: u64,
}

impl IntRange {
    pub const fn fixed(v: u64) -> Self {
        IntRange { min: v, max: v }
    }

    pub const fn between(min: u64, max: u64) -> Self {
        IntRange { min, max }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> u64 {
        if self.min >= self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IntRangeRepr {
    One(u64),
    Pair([u64; 2]),
}

impl<'de> Deserialize<'de> for IntRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match IntRangeRepr::deserialize(d)? {
            IntRangeRepr::One(v) => IntRange::fixed(v),
            IntRangeRepr::Pair([min, max]) => IntRange { min, max },
        })
    }
}

impl Serialize for IntRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.min == self.max {
            s.serialize_u64(self.min)
        } else {
            [self.min, self.max].serialize(s)
        }
    }
}

/// A decimal that is either fixed or drawn uniformly from `[min, max]`
/// (at nine decimal places of the unit interval).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecRange {
    pub min: Dec,
    pub max: Dec,
}

impl DecRange {
    pub const fn fixed(v: Dec) -> Self {
        DecRange { min: v, max: v }
    }

    pub const fn between(min: Dec, max: Dec) -> Self {
        DecRange { min, max }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Dec {
        if self.min >= self.max {
            return self.min;
        }
        let u = from_f64_rounded(rng.random::<f64>(), 9);
        quantize_down(self.min + (self.max - self.min) * u)
    }
}

#[derive(Deserialize, Serialize)]
struct DecValue(#[serde(with = "serde_dec")] Dec);

#[derive(Deserialize)]
#[serde(untagged)]
enum DecRangeRepr {
    One(DecValue),
    Pair([DecValue; 2]),
}

impl<'de> Deserialize<'de> for DecRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match DecRangeRepr::deserialize(d)? {
            DecRangeRepr::One(v) => DecRange::fixed(v.0),
            DecRangeRepr::Pair([a, b]) => DecRange { min: a.0, max: b.0 },
        })
    }
}

impl Serialize for DecRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.min == self.max {
            DecValue(self.min).serialize(s)
        } else {
            [DecValue(self.min), DecValue(self.max)].serialize(s)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioMode {
    /// One owner transaction above 90% impact.
    Canonical,
    /// Greedy sub-threshold sells by funded distributor wallets.
    Fragmented,
    /// Organic buys and partial resales only; LP burned by default.
    Benign,
}

/// Planted label of a generated pool. `Benign` covers every pool that is
/// neither a canonical nor a fragmented rug pull.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruth {
    Canonical,
    Frp,
    Benign,
}

/// One pool template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolScenario {
    pub mode: ScenarioMode,
    #[serde(default = "one")]
    pub count: usize,
    /// Prefix of generated pool ids; defaults to the mode name.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "default_dex")]
    pub dex_name: String,
    #[serde(default = "default_token_reserve")]
    pub token_reserve: DecRange,
    #[serde(default = "default_base_reserve")]
    pub base_reserve: DecRange,
    /// Distributor wallets (N) for fragmented exits.
    #[serde(default = "default_wallets")]
    pub wallets: IntRange,
    /// Order quota per distributor wallet, drawn per wallet.
    #[serde(default = "default_orders")]
    pub orders_per_wallet: IntRange,
    #[serde(default = "default_theta_target")]
    pub theta_target: DecRange,
    /// Exit proceeds target as a fraction of the base reserve at exit time.
    #[serde(default = "default_target_fraction")]
    pub target_fraction: DecRange,
    #[serde(default)]
    pub gas: GasModel,
    #[serde(default, with = "serde_dec")]
    pub v_min: Dec,
    #[serde(default = "default_interval")]
    pub interval_secs: IntRange,
    #[serde(default)]
    pub owner_participates: bool,
    #[serde(default = "default_canonical_exit")]
    pub canonical_exit: CanonicalExit,
    /// Defaults to true for benign pools and false otherwise.
    #[serde(default)]
    pub burn_lp: Option<bool>,
    #[serde(default = "default_organic_buys")]
    pub organic_buys: IntRange,
    /// Largest organic buy, as a fraction of the base reserve.
    #[serde(default = "default_buy_fraction", with = "serde_dec")]
    pub organic_buy_fraction: Dec,
    /// Resales by organic buyers in benign pools.
    #[serde(default = "default_benign_sells")]
    pub benign_sells: IntRange,
    /// Mean noise buys after each exit order.
    #[serde(default)]
    pub noise_buys_per_gap: f64,
    /// Deploy time, seconds since the epoch.
    #[serde(default = "default_deploy_time")]
    pub deploy_time: IntRange,
}

fn one() -> usize {
    1
}
fn default_dex() -> String {
    "uniswap-v2".to_string()
}
fn default_token_reserve() -> DecRange {
    DecRange::fixed(dec!(1000000000))
}
fn default_base_reserve() -> DecRange {
    DecRange::fixed(dec!(100))
}
fn default_wallets() -> IntRange {
    IntRange::fixed(4)
}
fn default_orders() -> IntRange {
    IntRange::between(2, 5)
}
fn default_theta_target() -> DecRange {
    DecRange::fixed(dec!(0.3))
}
fn default_target_fraction() -> DecRange {
    DecRange::fixed(dec!(0.95))
}
fn default_interval() -> IntRange {
    IntRange::fixed(3600)
}
fn default_canonical_exit() -> CanonicalExit {
    CanonicalExit::Sell
}
fn default_organic_buys() -> IntRange {
    IntRange::between(2, 6)
}
fn default_buy_fraction() -> Dec {
    dec!(0.02)
}
fn default_benign_sells() -> IntRange {
    IntRange::between(1, 3)
}
fn default_deploy_time() -> IntRange {
    IntRange::fixed(DEFAULT_DEPLOY_TIME)
}

impl PoolScenario {
    pub fn new(mode: ScenarioMode) -> Self {
        PoolScenario {
            mode,
            count: 1,
            label: None,
            dex_name: default_dex(),
            token_reserve: default_token_reserve(),
            base_reserve: default_base_reserve(),
            wallets: default_wallets(),
            orders_per_wallet: default_orders(),
            theta_target: default_theta_target(),
            target_fraction: default_target_fraction(),
            gas: GasModel::FREE,
            v_min: Dec::ZERO,
            interval_secs: default_interval(),
            owner_participates: false,
            canonical_exit: default_canonical_exit(),
            burn_lp: None,
            organic_buys: default_organic_buys(),
            organic_buy_fraction: default_buy_fraction(),
            benign_sells: default_benign_sells(),
            noise_buys_per_gap: 0.0,
            deploy_time: default_deploy_time(),
        }
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    fn burns_lp(&self) -> bool {
        self.burn_lp.unwrap_or(self.mode == ScenarioMode::Benign)
    }

    fn validate(&self) -> Result<(), String> {
        let ranges = [
            ("wallets", self.wallets),
            ("orders_per_wallet", self.orders_per_wallet),
            ("interval_secs", self.interval_secs),
            ("organic_buys", self.organic_buys),
            ("benign_sells", self.benign_sells),
            ("deploy_time", self.deploy_time),
        ];
        for (name, r) in ranges {
            if r.min > r.max {
                return Err(format!("{name}: min {} exceeds max {}", r.min, r.max));
            }
        }
        let dec_ranges = [
            ("token_reserve", self.token_reserve),
            ("base_reserve", self.base_reserve),
            ("theta_target", self.theta_target),
            ("target_fraction", self.target_fraction),
        ];
        for (name, r) in dec_ranges {
            if r.min > r.max {
                return Err(format!("{name}: min {} exceeds max {}", r.min, r.max));
            }
        }
        if self.count == 0 {
            return Err("count must be at least 1".into());
        }
        if self.token_reserve.min <= Dec::ZERO || self.base_reserve.min <= Dec::ZERO {
            return Err("reserves must be positive".into());
        }
        if self.mode == ScenarioMode::Fragmented {
            if self.wallets.min == 0 && !self.owner_participates {
                return Err("wallets must be at least 1".into());
            }
            if self.orders_per_wallet.min == 0 {
                return Err("orders_per_wallet must be at least 1".into());
            }
            if !(self.theta_target.min > Dec::ZERO && self.theta_target.max < DEFAULT_THETA) {
                return Err(format!(
                    "theta_target must lie in (0, {DEFAULT_THETA}), got [{}, {}]",
                    self.theta_target.min, self.theta_target.max
                ));
            }
            if !(self.target_fraction.min > Dec::ZERO && self.target_fraction.max < Dec::ONE) {
                return Err("target_fraction must lie in (0, 1)".into());
            }
            if self.interval_secs.min == 0 {
                return Err("interval_secs must be positive".into());
            }
            let orders = (self.wallets.max + u64::from(self.owner_participates))
                * self.orders_per_wallet.max;
            let span = orders.saturating_mul(self.interval_secs.max);
            if span as f64 > 0.9 * DEFAULT_MAX_LIFETIME_DAYS * SECONDS_PER_DAY as f64 {
                return Err(format!(
                    "up to {orders} orders every {} s may outlast the {DEFAULT_MAX_LIFETIME_DAYS}-day window",
                    self.interval_secs.max
                ));
            }
        }
        if !(self.organic_buy_fraction >= Dec::ZERO && self.organic_buy_fraction < Dec::ONE) {
            return Err("organic_buy_fraction must lie in [0, 1)".into());
        }
        if !(self.noise_buys_per_gap.is_finite() && self.noise_buys_per_gap >= 0.0) {
            return Err("noise_buys_per_gap must be a non-negative number".into());
        }
        if self.v_min < Dec::ZERO
            || self.gas.gas_per_tx < Dec::ZERO
            || self.gas.funding_cost_per_wallet < Dec::ZERO
        {
            return Err("costs and v_min must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_fee", with = "serde_dec")]
    pub fee_rate: Dec,
    pub pools: Vec<PoolScenario>,
}

fn default_fee() -> Dec {
    DEFAULT_FEE_RATE
}

impl ScenarioConfig {
    pub fn new(seed: u64, pools: Vec<PoolScenario>) -> Self {
        ScenarioConfig {
            seed,
            fee_rate: DEFAULT_FEE_RATE,
            pools,
        }
    }

    pub fn from_json(s: &str) -> Result<Self, String> {
        let cfg: ScenarioConfig = serde_json::from_str(s).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.fee_rate < Dec::ZERO || self.fee_rate > MAX_FEE_RATE {
            return Err(format!("fee_rate {} outside [0, 0.05]", self.fee_rate));
        }
        if self.pools.is_empty() {
            return Err("scenario lists no pools".into());
        }
        for (i, p) in self.pools.iter().enumerate() {
            p.validate().map_err(|e| format!("pools[{i}]: {e}"))?;
        }
        Ok(())
    }

    pub fn pool_count(&self) -> usize {
        self.pools.iter().map(|p| p.count).sum()
    }

    /// Built-in scenarios: see [`PRESETS`].
    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        let libra = || {
            let mut p = PoolScenario::new(ScenarioMode::Fragmented);
            p.label = Some("libra".into());
            p.wallets = IntRange::fixed(4);
            p.orders_per_wallet = IntRange::between(2, 5);
            p.theta_target = DecRange::between(dec!(0.2), dec!(0.6));
            p.interval_secs = IntRange::between(600, 1800);
            p.organic_buys = IntRange::between(4, 8);
            p.noise_buys_per_gap = 1.0;
            p
        };
        let canonical = || PoolScenario::new(ScenarioMode::Canonical);
        let benign = || PoolScenario::new(ScenarioMode::Benign);
        let pools = match name {
            "libra" => vec![libra()],
            "canonical" => vec![canonical()],
            "benign" => vec![benign()],
            "mixed" => {
                let mut frp = libra();
                frp.label = Some("frp".into());
                frp.wallets = IntRange::between(1, 6);
                frp.orders_per_wallet = IntRange::between(1, 8);
                vec![
                    canonical().with_count(3),
                    frp.with_count(5),
                    benign().with_count(2),
                ]
            }
            _ => return None,
        };
        Some(ScenarioConfig::new(seed, pools))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub pool_id: String,
    pub mode: ScenarioMode,
    pub ground_truth: GroundTruth,
    pub deployer: Address,
    /// Selling wallets (N); 0 for benign pools.
    pub wallets: usize,
    /// Orders per selling wallet.
    pub orders_per_wallet: BTreeMap<Address, usize>,
    pub event_count: usize,
    #[serde(with = "serde_dec")]
    pub theta_target: Dec,
    pub planned: Option<PlanOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(with = "serde_dec")]
    pub fee_rate: Dec,
    pub counts: BTreeMap<GroundTruth, usize>,
    pub pools: Vec<ManifestEntry>,
}

fn pool_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Generates pool `index` of the scenario from template `tpl`.
pub fn generate_pool(
    cfg: &ScenarioConfig,
    tpl: &PoolScenario,
    index: usize,
) -> Result<(PoolTrace, ManifestEntry), AdversaryError> {
    let mut rng = pool_rng(cfg.seed, index);
    let deployer = random_address(&mut rng);
    let token_reserve = tpl.token_reserve.sample(&mut rng);
    let base_reserve = tpl.base_reserve.sample(&mut rng);
    let n_buys = tpl.organic_buys.sample(&mut rng);
    let mut organic_buys = Vec::with_capacity(n_buys as usize);
    for _ in 0..n_buys {
        let buyer = random_address(&mut rng);
        let frac = from_f64_rounded(rng.random::<f64>(), 9) * tpl.organic_buy_fraction;
        let base = quantize_down(base_reserve * frac);
        if base > Dec::ZERO {
            organic_buys.push((buyer, base));
        }
    }
    let prefix = tpl.label.clone().unwrap_or_else(|| {
        match tpl.mode {
            ScenarioMode::Canonical => "canonical",
            ScenarioMode::Fragmented => "frp",
            ScenarioMode::Benign => "benign",
        }
        .to_string()
    });
    let burn_lp = tpl.burns_lp();
    let launched = launch(&LaunchParams {
        pool_id: format!("{prefix}-{index:06}"),
        dex_name: tpl.dex_name.clone(),
        deployer,
        token_reserve,
        base_reserve,
        fee_rate: cfg.fee_rate,
        deploy_ts: tpl.deploy_time.sample(&mut rng),
        burn_lp,
        organic_buys,
        buy_spacing_secs: 120,
    })?;
    let noise = (tpl.noise_buys_per_gap > 0.0).then(|| NoiseSchedule {
        seed: rng.random(),
        buys_per_gap: tpl.noise_buys_per_gap,
        ..NoiseSchedule::default()
    });

    let (trace, plan, ground_truth): (PoolTrace, Option<ExitPlan>, GroundTruth) = match tpl.mode {
        ScenarioMode::Canonical => {
            let plan = plan_canonical_with(&launched.pool, deployer, tpl.canonical_exit, tpl.gas)?;
            let trace = execute_plan(&launched, &plan, noise.as_ref())?;
            let truth = if burn_lp && plan.orders[0].kind == super::OrderKind::Sell {
                GroundTruth::Benign
            } else {
                GroundTruth::Canonical
            };
            (trace, Some(plan), truth)
        }
        ScenarioMode::Fragmented => {
            let n = tpl.wallets.sample(&mut rng) as usize;
            let wallets: Vec<Address> = (0..n).map(|_| random_address(&mut rng)).collect();
            let slots = n + usize::from(tpl.owner_participates);
            let quotas = (0..slots)
                .map(|_| tpl.orders_per_wallet.sample(&mut rng) as usize)
                .collect();
            let target =
                quantize_down(launched.pool.base_reserve() * tpl.target_fraction.sample(&mut rng));
            let params = FragmentParams {
                owner: deployer,
                wallets,
                quotas,
                v_total_target: target,
                theta_target: tpl.theta_target.sample(&mut rng),
                gas: tpl.gas,
                v_min: tpl.v_min,
                interval_secs: tpl.interval_secs.sample(&mut rng),
                owner_participates: tpl.owner_participates,
            };
            let plan = plan_fragmented(&launched.pool, &params)?;
            let trace = execute_plan(&launched, &plan, noise.as_ref())?;
            let truth = if burn_lp {
                GroundTruth::Benign
            } else {
                GroundTruth::Frp
            };
            (trace, Some(plan), truth)
        }
        ScenarioMode::Benign => {
            let trace = benign_resales(&launched, tpl.benign_sells.sample(&mut rng), &mut rng)?;
            (trace, None, GroundTruth::Benign)
        }
    };
    let orders_per_wallet = plan
        .as_ref()
        .map(|p| {
            p.wallets
                .iter()
                .copied()
                .zip(p.orders_per_wallet())
                .collect()
        })
        .unwrap_or_default();
    let entry = ManifestEntry {
        pool_id: trace.pool_id.clone(),
        mode: tpl.mode,
        ground_truth,
        deployer,
        wallets: plan.as_ref().map_or(0, |p| p.wallet_count()),
        orders_per_wallet,
        event_count: trace.events.len(),
        theta_target: plan.as_ref().map_or(Dec::ZERO, |p| p.theta_target),
        planned: plan.map(|p| p.outcome),
    };
    Ok((trace, entry))
}

/// Organic buyers sell back part of what they bought.
fn benign_resales(
    launched: &super::LaunchedPool,
    sells: u64,
    rng: &mut ChaCha8Rng,
) -> Result<PoolTrace, AdversaryError> {
    let mut pool = launched.pool.clone();
    let mut events = launched.events.clone();
    let mut ts = launched.last_ts;
    let buys: Vec<(Address, Dec)> = events
        .iter()
        .filter(|e| e.kind == EventKind::Buy)
        .map(|e| (e.actor, e.token_amount))
        .collect();
    let mut sold: BTreeMap<Address, Dec> = BTreeMap::new();
    for _ in 0..sells {
        if buys.is_empty() {
            break;
        }
        let (who, bought) = buys[rng.random_range(0..buys.len())];
        let already = sold.get(&who).copied().unwrap_or(Dec::ZERO);
        let amount = quantize_down((bought - already) / dec!(2));
        if amount <= Dec::ZERO {
            continue;
        }
        ts += 900;
        let r = pool.sell(amount)?;
        events.push(TxEvent::new(
            EventKind::Sell,
            who,
            ts,
            amount,
            quantize_down(r.amount_out),
        ));
        *sold.entry(who).or_insert(Dec::ZERO) += amount;
    }
    PoolTrace::from_events(launched.pool_id.clone(), launched.dex_name.clone(), events)
        .map_err(|e| AdversaryError::InvalidParameter(e.to_string()))
}

/// Expands the scenario into traces and a manifest, in template order.
pub fn generate(cfg: &ScenarioConfig) -> Result<(Vec<PoolTrace>, Manifest), AdversaryError> {
    cfg.validate().map_err(AdversaryError::InvalidParameter)?;
    let jobs: Vec<(usize, &PoolScenario)> = cfg
        .pools
        .iter()
        .flat_map(|tpl| std::iter::repeat_n(tpl, tpl.count))
        .enumerate()
        .collect();
    let results: Vec<(PoolTrace, ManifestEntry)> = jobs
        .into_par_iter()
        .map(|(i, tpl)| generate_pool(cfg, tpl, i))
        .collect::<Result<_, _>>()?;
    let mut counts = BTreeMap::new();
    let mut traces = Vec::with_capacity(results.len());
    let mut entries = Vec::with_capacity(results.len());
    for (t, e) in results {
        *counts.entry(e.ground_truth).or_insert(0) += 1;
        traces.push(t);
        entries.push(e);
    }
    Ok((
        traces,
        Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            seed: cfg.seed,
            fee_rate: cfg.fee_rate,
            counts,
            pools: entries,
        },
    ))
}
