//! Corpus measurements over FRP-labeled pools.
//!
//! Each pool is first reduced to a [`PoolProfile`] (parallelizable, no
//! shared state). All aggregates are then folded from integer counts,
//! integer second totals, and exact decimal sums, so they do not depend on
//! the order in which profiles were produced.

mod report;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Datelike};
use serde::Serialize;

use crate::address::Address;
use crate::decimal::{serde_dec, Dec};
use crate::frp::InflatedSells;
use crate::ledger::{PoolTrace, SECONDS_PER_DAY};
use crate::predicates::DetectorConfig;

pub use report::{write_bundle, BUNDLE_FILES, NO_LABELED_POOLS, REPORT_SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeasureError {
    #[error("no labeled pools to measure")]
    EmptyCorpus,
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MeasureError {
    fn from(e: std::io::Error) -> Self {
        MeasureError::Io(e.to_string())
    }
}

impl From<csv::Error> for MeasureError {
    fn from(e: csv::Error) -> Self {
        MeasureError::Io(e.to_string())
    }
}

/// One wallet's inflated selling inside one pool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SellerActivity {
    pub address: Address,
    pub inflated_sells: usize,
    /// Base tokens received from those sells.
    #[serde(with = "serde_dec")]
    pub proceeds: Dec,
}

/// Everything the measurements need from one labeled pool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolProfile {
    pub pool_id: String,
    pub deployer: Address,
    pub created_at: u64,
    pub lifetime_secs: u64,
    pub event_count: usize,
    /// Actors and transfer counterparties, sorted, burn addresses excluded.
    pub addresses: Vec<Address>,
    /// Sorted by address.
    pub sellers: Vec<SellerActivity>,
    pub first_sell_at: Option<u64>,
    pub last_sell_at: Option<u64>,
}

impl PoolProfile {
    pub fn new(trace: &PoolTrace, inflated: &InflatedSells, cfg: &DetectorConfig) -> Self {
        let mut addresses = BTreeSet::new();
        let mut sellers: BTreeMap<Address, (usize, Dec)> = BTreeMap::new();
        let (mut first, mut last) = (None, None);
        for (i, e) in trace.events.iter().enumerate() {
            addresses.insert(e.actor);
            if let Some(c) = e.counterparty {
                addresses.insert(c);
            }
            if inflated.flags.get(i).copied().unwrap_or(false) {
                let s = sellers.entry(e.actor).or_insert((0, Dec::ZERO));
                s.0 += 1;
                s.1 += e.base_amount;
                first = first.or(Some(e.timestamp));
                last = Some(e.timestamp);
            }
        }
        PoolProfile {
            pool_id: trace.pool_id.clone(),
            deployer: trace.deployer,
            created_at: trace.created_at(),
            lifetime_secs: trace.lifetime_secs(),
            event_count: trace.events.len(),
            addresses: addresses
                .into_iter()
                .filter(|a| !cfg.is_burn_address(a))
                .collect(),
            sellers: sellers
                .into_iter()
                .map(|(address, (inflated_sells, proceeds))| SellerActivity {
                    address,
                    inflated_sells,
                    proceeds,
                })
                .collect(),
            first_sell_at: first,
            last_sell_at: last,
        }
    }

    pub fn seller_count(&self) -> usize {
        self.sellers.len()
    }

    pub fn inflated_sell_count(&self) -> usize {
        self.sellers.iter().map(|s| s.inflated_sells).sum()
    }

    pub fn owner_involved(&self) -> bool {
        self.sellers.iter().any(|s| s.address == self.deployer)
    }

    /// UTC calendar year of the deploy.
    pub fn creation_year(&self) -> i32 {
        utc_year(self.created_at)
    }

    pub fn cohort(&self) -> Cohort {
        match (self.seller_count() <= 1, self.owner_involved()) {
            (true, true) => Cohort::SingleOwner,
            (true, false) => Cohort::SingleNonOwner,
            (false, true) => Cohort::MultiOwner,
            (false, false) => Cohort::MultiNonOwner,
        }
    }
}

pub fn utc_year(ts: u64) -> i32 {
    i64::try_from(ts)
        .ok()
        .and_then(|s| DateTime::from_timestamp(s, 0))
        .map_or(i32::MAX, |d| d.year())
}

fn fraction(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

fn secs_to_days(total_secs: u128, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total_secs as f64 / n as f64 / SECONDS_PER_DAY as f64
    }
}

// ---------------------------------------------------------------- actors

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActorRow {
    pub pool_id: String,
    pub year: i32,
    pub seller_count: usize,
    pub owner_involved: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct YearlyActors {
    pub pools: usize,
    pub single_wallet: usize,
    pub multi_wallet: usize,
    pub owner_involved: usize,
    pub single_fraction: f64,
    pub multi_fraction: f64,
    pub owner_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActorStats {
    pub pools: Vec<ActorRow>,
    /// `|S_P|` → number of pools.
    pub seller_distribution: BTreeMap<usize, usize>,
    pub single_fraction: f64,
    pub owner_fraction: f64,
    pub yearly: BTreeMap<i32, YearlyActors>,
}

/// Seller-set sizes and owner participation, overall and per creation year.
pub fn actor_centric(profiles: &[PoolProfile]) -> Result<ActorStats, MeasureError> {
    if profiles.is_empty() {
        return Err(MeasureError::EmptyCorpus);
    }
    let mut distribution = BTreeMap::new();
    let mut yearly: BTreeMap<i32, YearlyActors> = BTreeMap::new();
    let (mut single, mut owner) = (0, 0);
    let rows: Vec<ActorRow> = profiles
        .iter()
        .map(|p| {
            let row = ActorRow {
                pool_id: p.pool_id.clone(),
                year: p.creation_year(),
                seller_count: p.seller_count(),
                owner_involved: p.owner_involved(),
            };
            *distribution.entry(row.seller_count).or_insert(0) += 1;
            let y = yearly.entry(row.year).or_default();
            y.pools += 1;
            if row.seller_count <= 1 {
                single += 1;
                y.single_wallet += 1;
            } else {
                y.multi_wallet += 1;
            }
            if row.owner_involved {
                owner += 1;
                y.owner_involved += 1;
            }
            row
        })
        .collect();
    for y in yearly.values_mut() {
        y.single_fraction = fraction(y.single_wallet, y.pools);
        y.multi_fraction = fraction(y.multi_wallet, y.pools);
        y.owner_fraction = fraction(y.owner_involved, y.pools);
    }
    Ok(ActorStats {
        single_fraction: fraction(single, rows.len()),
        owner_fraction: fraction(owner, rows.len()),
        pools: rows,
        seller_distribution: distribution,
        yearly,
    })
}

// --------------------------------------------------------------- actions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    SingleOwner,
    SingleNonOwner,
    MultiOwner,
    MultiNonOwner,
}

impl Cohort {
    pub const ALL: [Cohort; 4] = [
        Cohort::SingleOwner,
        Cohort::SingleNonOwner,
        Cohort::MultiOwner,
        Cohort::MultiNonOwner,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Cohort::SingleOwner => "single_owner",
            Cohort::SingleNonOwner => "single_non_owner",
            Cohort::MultiOwner => "multi_owner",
            Cohort::MultiNonOwner => "multi_non_owner",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionStats {
    pub pool_id: String,
    pub cohort: Cohort,
    pub seller_count: usize,
    /// First inflated sell minus pool creation, in days. Never negative.
    pub first_sell_delay_days: f64,
    /// Last minus first inflated sell, in days; 0 for a single sell.
    pub sell_span_days: f64,
    pub n_sell: usize,
    pub first_sell_delay_secs: u64,
    pub sell_span_secs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortAggregate {
    pub cohort: Cohort,
    pub pools: usize,
    pub mean_first_sell_days: f64,
    pub mean_n_sell: f64,
    pub mean_sell_span_days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionReport {
    pub pools: Vec<ActionStats>,
    /// One entry per cohort, in [`Cohort::ALL`] order.
    pub cohorts: Vec<CohortAggregate>,
}

pub fn action_stats(p: &PoolProfile) -> Option<ActionStats> {
    let (first, last) = (p.first_sell_at?, p.last_sell_at?);
    let delay = first.saturating_sub(p.created_at);
    let span = last.saturating_sub(first);
    Some(ActionStats {
        pool_id: p.pool_id.clone(),
        cohort: p.cohort(),
        seller_count: p.seller_count(),
        first_sell_delay_days: delay as f64 / SECONDS_PER_DAY as f64,
        sell_span_days: span as f64 / SECONDS_PER_DAY as f64,
        n_sell: p.inflated_sell_count(),
        first_sell_delay_secs: delay,
        sell_span_secs: span,
    })
}

/// Timing and volume of inflated selling, stratified by cohort. Pools
/// without inflated sells are skipped.
pub fn action_centric(profiles: &[PoolProfile]) -> ActionReport {
    let pools: Vec<ActionStats> = profiles.iter().filter_map(action_stats).collect();
    let mut acc: BTreeMap<Cohort, (usize, u128, u128, u128)> = BTreeMap::new();
    for s in &pools {
        let a = acc.entry(s.cohort).or_default();
        a.0 += 1;
        a.1 += u128::from(s.first_sell_delay_secs);
        a.2 += s.n_sell as u128;
        a.3 += u128::from(s.sell_span_secs);
    }
    let cohorts = Cohort::ALL
        .iter()
        .map(|&cohort| {
            let (n, delay, sells, span) = acc.get(&cohort).copied().unwrap_or_default();
            CohortAggregate {
                cohort,
                pools: n,
                mean_first_sell_days: secs_to_days(delay, n),
                mean_n_sell: if n == 0 { 0.0 } else { sells as f64 / n as f64 },
                mean_sell_span_days: secs_to_days(span, n),
            }
        })
        .collect();
    ActionReport { pools, cohorts }
}

// ------------------------------------------------------------ categories

pub const WALLET_BINS: [&str; 4] = ["1", "2-4", "5-9", "10+"];
pub const SELL_BINS: [&str; 4] = ["0-9", "10-49", "50-249", "250+"];

/// Bin index for a seller-wallet count. Zero shares the first bin.
pub fn wallet_bin(wallets: usize) -> usize {
    match wallets {
        0..=1 => 0,
        2..=4 => 1,
        5..=9 => 2,
        _ => 3,
    }
}

/// Bin index for an inflated-sell count.
pub fn sell_bin(sells: usize) -> usize {
    match sells {
        0..=9 => 0,
        10..=49 => 1,
        50..=249 => 2,
        _ => 3,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    MinimalDrains,
    DistributedCampaigns,
    ModerateNetworks,
    Other,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::MinimalDrains,
        Category::DistributedCampaigns,
        Category::ModerateNetworks,
        Category::Other,
    ];

    /// `ModerateNetworks` includes exactly 50 sells; a distributed
    /// campaign needs ten or more wallets.
    pub fn of(wallets: usize, sells: usize) -> Category {
        if wallets <= 1 && sells <= 9 {
            Category::MinimalDrains
        } else if wallets >= 10 && (50..=249).contains(&sells) {
            Category::DistributedCampaigns
        } else if (2..=9).contains(&wallets) && sells <= 50 {
            Category::ModerateNetworks
        } else {
            Category::Other
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::MinimalDrains => "minimal_drains",
            Category::DistributedCampaigns => "distributed_campaigns",
            Category::ModerateNetworks => "moderate_networks",
            Category::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryShare {
    pub category: Category,
    pub pools: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryGrid {
    pub total: usize,
    /// `counts[wallet_bin][sell_bin]`.
    pub counts: [[usize; 4]; 4],
    pub shares: [[f64; 4]; 4],
    /// In [`Category::ALL`] order; shares sum to 1 when `total > 0`.
    pub named: Vec<CategoryShare>,
}

/// Places every pool in one (wallet-bin, sell-bin) cell and one category.
pub fn categorize(profiles: &[PoolProfile]) -> CategoryGrid {
    let mut counts = [[0usize; 4]; 4];
    let mut named: BTreeMap<Category, usize> = BTreeMap::new();
    for p in profiles {
        let (w, c) = (p.seller_count(), p.inflated_sell_count());
        counts[wallet_bin(w)][sell_bin(c)] += 1;
        *named.entry(Category::of(w, c)).or_insert(0) += 1;
    }
    let total = profiles.len();
    let shares = counts.map(|row| row.map(|n| fraction(n, total)));
    CategoryGrid {
        total,
        counts,
        shares,
        named: Category::ALL
            .iter()
            .map(|&category| {
                let pools = named.get(&category).copied().unwrap_or(0);
                CategoryShare {
                    category,
                    pools,
                    share: fraction(pools, total),
                }
            })
            .collect(),
    }
}

// ------------------------------------------------------------ recurrence

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrentWallet {
    pub address: Address,
    pub pool_count: usize,
    pub inflated_sells: usize,
    /// Base tokens received from inflated sells across all pools.
    #[serde(with = "serde_dec")]
    pub total_proceeds: Dec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceReport {
    pub distinct_sellers: usize,
    pub recurrent: usize,
    pub recurrence_share: f64,
    /// Wallets with inflated sells in at least two pools, by pool count
    /// descending, then address.
    pub wallets: Vec<RecurrentWallet>,
}

pub fn recurrent_wallets(profiles: &[PoolProfile]) -> RecurrenceReport {
    let mut by_wallet: BTreeMap<Address, RecurrentWallet> = BTreeMap::new();
    for p in profiles {
        for s in &p.sellers {
            let w = by_wallet.entry(s.address).or_insert(RecurrentWallet {
                address: s.address,
                pool_count: 0,
                inflated_sells: 0,
                total_proceeds: Dec::ZERO,
            });
            w.pool_count += 1;
            w.inflated_sells += s.inflated_sells;
            w.total_proceeds += s.proceeds;
        }
    }
    let distinct = by_wallet.len();
    let mut wallets: Vec<RecurrentWallet> = by_wallet
        .into_values()
        .filter(|w| w.pool_count >= 2)
        .collect();
    wallets.sort_by(|a, b| {
        b.pool_count
            .cmp(&a.pool_count)
            .then(a.address.cmp(&b.address))
    });
    RecurrenceReport {
        distinct_sellers: distinct,
        recurrent: wallets.len(),
        recurrence_share: fraction(wallets.len(), distinct),
        wallets,
    }
}

// --------------------------------------------------------------- summary

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub pools: usize,
    pub unique_addresses: usize,
    pub transactions: usize,
    pub mean_users_per_pool: f64,
    pub mean_transactions_per_pool: f64,
    pub inflated_sellers: usize,
    /// Inflated sellers over unique addresses.
    pub inflated_seller_share: f64,
    pub mean_lifetime_days: f64,
    pub pools_per_year: BTreeMap<i32, usize>,
}

pub fn corpus_summary(profiles: &[PoolProfile]) -> CorpusStats {
    let mut addresses: BTreeSet<Address> = BTreeSet::new();
    let mut sellers: BTreeSet<Address> = BTreeSet::new();
    let mut per_year = BTreeMap::new();
    let (mut transactions, mut users, mut lifetime) = (0usize, 0usize, 0u128);
    for p in profiles {
        addresses.extend(p.addresses.iter().copied());
        sellers.extend(p.sellers.iter().map(|s| s.address));
        *per_year.entry(p.creation_year()).or_insert(0) += 1;
        transactions += p.event_count;
        users += p.addresses.len();
        lifetime += u128::from(p.lifetime_secs);
    }
    let n = profiles.len();
    CorpusStats {
        pools: n,
        unique_addresses: addresses.len(),
        transactions,
        mean_users_per_pool: fraction(users, n),
        mean_transactions_per_pool: fraction(transactions, n),
        inflated_sellers: sellers.len(),
        inflated_seller_share: fraction(sellers.len(), addresses.len()),
        mean_lifetime_days: secs_to_days(lifetime, n),
        pools_per_year: per_year,
    }
}

/// All measurements of one labeled corpus. `actors` is `None` when the
/// corpus is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementBundle {
    pub summary: CorpusStats,
    pub actors: Option<ActorStats>,
    pub actions: ActionReport,
    pub categories: CategoryGrid,
    pub recurrence: RecurrenceReport,
}

impl MeasurementBundle {
    pub fn is_empty(&self) -> bool {
        self.summary.pools == 0
    }
}

pub fn measure(profiles: &[PoolProfile]) -> MeasurementBundle {
    MeasurementBundle {
        summary: corpus_summary(profiles),
        actors: actor_centric(profiles).ok(),
        actions: action_centric(profiles),
        categories: categorize(profiles),
        recurrence: recurrent_wallets(profiles),
    }
}
