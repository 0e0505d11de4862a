//! On-disk measurement bundle.
//!
//! | file                   | one row per                          |
//! |------------------------|--------------------------------------|
//! | `corpus_summary.json`  | (single object)                      |
//! | `actor_stats.csv`      | creation year                        |
//! | `action_stats.csv`     | labeled pool with inflated sells     |
//! | `category_grid.csv`    | (wallet bin, sell bin) cell          |
//! | `recurrent_wallets.csv`| wallet selling in two or more pools  |
//!
//! CSV files always carry their header, even when empty.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{MeasureError, MeasurementBundle, SELL_BINS, WALLET_BINS};
use crate::decimal::to_plain_string;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Status marker written when the corpus holds no FRP-labeled pool.
pub const NO_LABELED_POOLS: &str = "no labeled pools";

pub const BUNDLE_FILES: [&str; 5] = [
    "corpus_summary.json",
    "actor_stats.csv",
    "action_stats.csv",
    "category_grid.csv",
    "recurrent_wallets.csv",
];

#[derive(Serialize)]
struct SummaryDoc<'a, C: Serialize> {
    schema_version: u32,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    detection: Option<&'a C>,
    corpus: &'a super::CorpusStats,
    single_wallet_fraction: Option<f64>,
    owner_involved_fraction: Option<f64>,
    seller_distribution: Option<&'a std::collections::BTreeMap<usize, usize>>,
    cohorts: &'a [super::CohortAggregate],
    categories: &'a [super::CategoryShare],
    distinct_inflated_sellers: usize,
    recurrent_wallets: usize,
    recurrence_share: f64,
    notes: [&'static str; 2],
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>, MeasureError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    Ok(w)
}

/// Writes the five bundle files into `dir`, creating it if needed.
/// `detection` is embedded verbatim in the summary when given.
pub fn write_bundle<C: Serialize>(
    dir: &Path,
    bundle: &MeasurementBundle,
    detection: Option<&C>,
) -> Result<(), MeasureError> {
    std::fs::create_dir_all(dir)?;
    let actors = bundle.actors.as_ref();
    let doc = SummaryDoc {
        schema_version: REPORT_SCHEMA_VERSION,
        status: if bundle.is_empty() {
            NO_LABELED_POOLS
        } else {
            "ok"
        },
        detection,
        corpus: &bundle.summary,
        single_wallet_fraction: actors.map(|a| a.single_fraction),
        owner_involved_fraction: actors.map(|a| a.owner_fraction),
        seller_distribution: actors.map(|a| &a.seller_distribution),
        cohorts: &bundle.actions.cohorts,
        categories: &bundle.categories.named,
        distinct_inflated_sellers: bundle.recurrence.distinct_sellers,
        recurrent_wallets: bundle.recurrence.recurrent,
        recurrence_share: bundle.recurrence.recurrence_share,
        notes: [
            "moderate_networks includes pools with exactly 50 inflated sells and 2-9 wallets",
            "proceeds are in base-token units",
        ],
    };
    let mut f = BufWriter::new(File::create(dir.join(BUNDLE_FILES[0]))?);
    serde_json::to_writer_pretty(&mut f, &doc).map_err(|e| MeasureError::Io(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;

    let mut w = csv_writer(
        &dir.join(BUNDLE_FILES[1]),
        &[
            "year",
            "pools",
            "single_wallet",
            "multi_wallet",
            "owner_involved",
            "single_fraction",
            "multi_fraction",
            "owner_fraction",
        ],
    )?;
    for (year, y) in actors.map(|a| &a.yearly).into_iter().flatten() {
        w.serialize((
            year,
            y.pools,
            y.single_wallet,
            y.multi_wallet,
            y.owner_involved,
            y.single_fraction,
            y.multi_fraction,
            y.owner_fraction,
        ))?;
    }
    w.flush()?;

    let mut w = csv_writer(
        &dir.join(BUNDLE_FILES[2]),
        &[
            "pool_id",
            "cohort",
            "seller_count",
            "n_sell",
            "first_sell_delay_days",
            "sell_span_days",
        ],
    )?;
    for s in &bundle.actions.pools {
        w.serialize((
            &s.pool_id,
            s.cohort.as_str(),
            s.seller_count,
            s.n_sell,
            s.first_sell_delay_days,
            s.sell_span_days,
        ))?;
    }
    w.flush()?;

    let mut w = csv_writer(
        &dir.join(BUNDLE_FILES[3]),
        &["wallet_bin", "sell_bin", "pools", "share"],
    )?;
    let grid = &bundle.categories;
    for (wi, wb) in WALLET_BINS.iter().enumerate() {
        for (si, sb) in SELL_BINS.iter().enumerate() {
            w.serialize((wb, sb, grid.counts[wi][si], grid.shares[wi][si]))?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(
        &dir.join(BUNDLE_FILES[4]),
        &["address", "pool_count", "inflated_sells", "total_proceeds"],
    )?;
    for r in &bundle.recurrence.wallets {
        w.serialize((
            r.address.to_string(),
            r.pool_count,
            r.inflated_sells,
            to_plain_string(r.total_proceeds),
        ))?;
    }
    w.flush()?;
    Ok(())
}

impl MeasurementBundle {
    /// Plain-text category table for terminals.
    pub fn category_table(&self) -> String {
        let mut out = String::new();
        if self.is_empty() {
            out.push_str(NO_LABELED_POOLS);
            out.push('\n');
            return out;
        }
        out.push_str(&format!(
            "{:<22} {:>8} {:>8}\n",
            "category", "pools", "share"
        ));
        for c in &self.categories.named {
            out.push_str(&format!(
                "{:<22} {:>8} {:>7.2}%\n",
                c.category.as_str(),
                c.pools,
                c.share * 100.0
            ));
        }
        out
    }
}
