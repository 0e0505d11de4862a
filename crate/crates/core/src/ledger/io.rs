use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Asset, EventKind, LedgerError, PoolTrace, TxEvent};
use crate::address::Address;
use crate::decimal::{parse_dec, serde_dec_opt, to_plain_string, Dec};

/// CSV columns, schema version 1. The first seven are mandatory on input.
pub const CSV_COLUMNS: [&str; 9] = [
    "pool_id",
    "kind",
    "actor",
    "timestamp",
    "token_amount",
    "base_amount",
    "counterparty",
    "asset",
    "dex_name",
];
const CSV_MANDATORY: usize = 7;
const CSV_RESERVE_COLUMN: &str = "base_reserve_before";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Jsonl,
    Csv,
}

impl TraceFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Some(TraceFormat::Jsonl),
            "csv" => Some(TraceFormat::Csv),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Jsonl => "jsonl",
            TraceFormat::Csv => "csv",
        }
    }
}

impl FromStr for TraceFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(TraceFormat::Jsonl),
            "csv" => Ok(TraceFormat::Csv),
            other => Err(format!(
                "unknown trace format {other:?} (expected jsonl or csv)"
            )),
        }
    }
}

/// A record that failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub source: String,
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub traces: Vec<PoolTrace>,
    pub rejects: Vec<Reject>,
}

#[derive(Deserialize)]
struct JsonRecord {
    pool_id: String,
    kind: String,
    actor: String,
    timestamp: i64,
    #[serde(default, with = "serde_dec_opt")]
    token_amount: Option<Dec>,
    #[serde(default, with = "serde_dec_opt")]
    base_amount: Option<Dec>,
    #[serde(default)]
    counterparty: Option<String>,
    #[serde(default)]
    asset: Option<String>,
    #[serde(default)]
    dex_name: Option<String>,
    #[serde(default)]
    deployer: Option<String>,
    #[serde(default, with = "serde_dec_opt")]
    base_reserve_before: Option<Dec>,
}

struct RawFields<'a> {
    pool_id: &'a str,
    kind: &'a str,
    actor: &'a str,
    timestamp: Result<i64, String>,
    token_amount: Result<Option<Dec>, String>,
    base_amount: Result<Option<Dec>, String>,
    counterparty: Option<&'a str>,
    asset: Option<&'a str>,
    dex_name: Option<&'a str>,
    deployer: Option<&'a str>,
    base_reserve_before: Result<Option<Dec>, String>,
}

struct ParsedRecord {
    source: usize,
    line: usize,
    event: TxEvent,
    dex_name: Option<String>,
    reserve_before: Option<Dec>,
}

struct PoolBucket {
    pool_id: String,
    records: Vec<ParsedRecord>,
}

/// Accumulates records from one or more sources, grouping them by pool.
#[derive(Default)]
struct Ingestor {
    sources: Vec<String>,
    index: HashMap<String, usize>,
    pools: Vec<PoolBucket>,
    rejects: Vec<Reject>,
}

fn opt_str(s: Option<&str>) -> Option<&str> {
    s.map(str::trim).filter(|s| !s.is_empty())
}

fn validate(raw: RawFields<'_>) -> Result<(TxEvent, Option<String>, Option<Dec>), String> {
    let kind = EventKind::parse(raw.kind).ok_or_else(|| format!("unknown kind {:?}", raw.kind))?;
    let actor: Address = raw
        .actor
        .trim()
        .parse()
        .map_err(|e| format!("actor: {e}"))?;
    let timestamp = raw.timestamp?;
    if timestamp < 0 {
        return Err(format!("negative timestamp {timestamp}"));
    }
    let amount =
        |name: &str, v: Result<Option<Dec>, String>, required: bool| -> Result<Dec, String> {
            match v.map_err(|e| format!("{name}: {e}"))? {
                Some(d) if d < Dec::ZERO => Err(format!("negative {name} {}", to_plain_string(d))),
                Some(d) => Ok(d),
                None if required => Err(format!("missing {name}")),
                None => Ok(Dec::ZERO),
            }
        };
    let token_amount = amount("token_amount", raw.token_amount, true)?;
    let base_amount = amount("base_amount", raw.base_amount, kind != EventKind::Transfer)?;
    let counterparty = match opt_str(raw.counterparty) {
        Some(c) => Some(
            c.parse::<Address>()
                .map_err(|e| format!("counterparty: {e}"))?,
        ),
        None => None,
    };
    if kind == EventKind::Transfer && counterparty.is_none() {
        return Err("transfer without counterparty".to_string());
    }
    let asset = Asset::parse(opt_str(raw.asset).unwrap_or(""))
        .ok_or_else(|| format!("unknown asset {:?}", raw.asset.unwrap_or("")))?;
    if asset == Asset::Lp && kind != EventKind::Transfer {
        return Err("asset=lp is only valid on transfers".to_string());
    }
    if kind == EventKind::Deploy {
        if let Some(d) = opt_str(raw.deployer) {
            let d: Address = d.parse().map_err(|e| format!("deployer: {e}"))?;
            if d != actor {
                return Err("deploy actor and deployer differ".to_string());
            }
        }
    }
    let reserve = raw
        .base_reserve_before
        .map_err(|e| format!("base_reserve_before: {e}"))?;
    if reserve.is_some_and(|r| r < Dec::ZERO) {
        return Err("negative base_reserve_before".to_string());
    }
    let event = TxEvent {
        kind,
        actor,
        timestamp: timestamp as u64,
        token_amount,
        base_amount,
        counterparty,
        asset,
    };
    Ok((event, opt_str(raw.dex_name).map(str::to_string), reserve))
}

impl Ingestor {
    fn source(&mut self, name: &str) -> usize {
        self.sources.push(name.to_string());
        self.sources.len() - 1
    }

    fn reject(&mut self, source: usize, line: usize, pool_id: Option<&str>, reason: String) {
        self.rejects.push(Reject {
            source: self.sources[source].clone(),
            line,
            pool_id: pool_id.map(str::to_string),
            reason,
        });
    }

    fn accept(&mut self, source: usize, line: usize, raw: RawFields<'_>) {
        let pool_id = raw.pool_id.trim();
        if pool_id.is_empty() {
            self.reject(source, line, None, "empty pool_id".to_string());
            return;
        }
        match validate(raw) {
            Ok((event, dex_name, reserve_before)) => {
                let idx = match self.index.get(pool_id) {
                    Some(&i) => i,
                    None => {
                        self.pools.push(PoolBucket {
                            pool_id: pool_id.to_string(),
                            records: Vec::new(),
                        });
                        self.index.insert(pool_id.to_string(), self.pools.len() - 1);
                        self.pools.len() - 1
                    }
                };
                self.pools[idx].records.push(ParsedRecord {
                    source,
                    line,
                    event,
                    dex_name,
                    reserve_before,
                });
            }
            Err(reason) => self.reject(source, line, Some(pool_id), reason),
        }
    }

    fn push_jsonl<R: Read>(&mut self, reader: R, name: &str) -> Result<(), LedgerError> {
        let source = self.source(name);
        let reader = BufReader::new(reader);
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    self.reject(source, line_no, None, e.to_string());
                    continue;
                }
            };
            let raw = RawFields {
                pool_id: &rec.pool_id,
                kind: &rec.kind,
                actor: &rec.actor,
                timestamp: Ok(rec.timestamp),
                token_amount: Ok(rec.token_amount),
                base_amount: Ok(rec.base_amount),
                counterparty: rec.counterparty.as_deref(),
                asset: rec.asset.as_deref(),
                dex_name: rec.dex_name.as_deref(),
                deployer: rec.deployer.as_deref(),
                base_reserve_before: Ok(rec.base_reserve_before),
            };
            self.accept(source, line_no, raw);
        }
        Ok(())
    }

    fn push_csv<R: Read>(&mut self, reader: R, name: &str) -> Result<(), LedgerError> {
        let source = self.source(name);
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| LedgerError::MalformedRecord {
                line: 1,
                reason: format!("{name}: unreadable header: {e}"),
            })?
            .clone();
        let col = |n: &str| headers.iter().position(|h| h.trim() == n);
        let mut mandatory = [0usize; CSV_MANDATORY];
        for (slot, name_) in mandatory.iter_mut().zip(CSV_COLUMNS.iter()) {
            *slot = col(name_).ok_or_else(|| LedgerError::MalformedRecord {
                line: 1,
                reason: format!("{name}: missing mandatory column {name_:?}"),
            })?;
        }
        let asset_col = col("asset");
        let dex_col = col("dex_name");
        let deployer_col = col("deployer");
        let reserve_col = col(CSV_RESERVE_COLUMN);
        let parse_amount = |s: Option<&str>| -> Result<Option<Dec>, String> {
            match opt_str(s) {
                Some(v) => parse_dec(v).map(Some).map_err(|e| e.reason),
                None => Ok(None),
            }
        };
        let mut record = csv::StringRecord::new();
        loop {
            let line_no = match rdr.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => record.position().map_or(0, |p| p.line() as usize),
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    self.reject(source, line, None, e.to_string());
                    if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                        return Err(LedgerError::Io(e.to_string()));
                    }
                    continue;
                }
            };
            let get = |i: usize| record.get(i);
            let field = |i: Option<usize>| i.and_then(|i| record.get(i));
            let ts = get(mandatory[3]).unwrap_or("").trim();
            let raw = RawFields {
                pool_id: get(mandatory[0]).unwrap_or(""),
                kind: get(mandatory[1]).unwrap_or(""),
                actor: get(mandatory[2]).unwrap_or(""),
                timestamp: ts
                    .parse::<i64>()
                    .map_err(|_| format!("invalid timestamp {ts:?}")),
                token_amount: parse_amount(get(mandatory[4])),
                base_amount: parse_amount(get(mandatory[5])),
                counterparty: get(mandatory[6]),
                asset: field(asset_col),
                dex_name: field(dex_col),
                deployer: field(deployer_col),
                base_reserve_before: parse_amount(field(reserve_col)),
            };
            self.accept(source, line_no, raw);
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Ingested, LedgerError> {
        let mut traces = Vec::with_capacity(self.pools.len());
        let pools = std::mem::take(&mut self.pools);
        for mut bucket in pools {
            bucket.records.sort_by_key(|r| r.event.timestamp);
            let Some(deploy_pos) = bucket
                .records
                .iter()
                .position(|r| r.event.kind == EventKind::Deploy)
            else {
                for r in &bucket.records {
                    self.reject(
                        r.source,
                        r.line,
                        Some(&bucket.pool_id),
                        "pool has no deploy event".to_string(),
                    );
                }
                continue;
            };
            let mut kept = Vec::with_capacity(bucket.records.len());
            let mut dex_name = None;
            for (i, r) in bucket.records.into_iter().enumerate() {
                if i < deploy_pos {
                    self.reject(
                        r.source,
                        r.line,
                        Some(&bucket.pool_id),
                        "event precedes the deploy".to_string(),
                    );
                } else if i > deploy_pos && r.event.kind == EventKind::Deploy {
                    self.reject(
                        r.source,
                        r.line,
                        Some(&bucket.pool_id),
                        "duplicate deploy event".to_string(),
                    );
                } else {
                    if i == deploy_pos {
                        dex_name = r.dex_name.clone();
                    }
                    kept.push(r);
                }
            }
            let annotated = kept.iter().all(|r| r.reserve_before.is_some());
            let reserves =
                annotated.then(|| kept.iter().map(|r| r.reserve_before.unwrap()).collect());
            let events: Vec<TxEvent> = kept.into_iter().map(|r| r.event).collect();
            traces.push(PoolTrace {
                pool_id: bucket.pool_id,
                deployer: events[0].actor,
                dex_name: dex_name.unwrap_or_else(|| "unknown".to_string()),
                events,
                base_reserve_before: reserves,
            });
        }
        if traces.is_empty() && self.rejects.is_empty() {
            return Err(LedgerError::EmptyCorpus);
        }
        Ok(Ingested {
            traces,
            rejects: self.rejects,
        })
    }
}

/// Reads traces from any reader. `source` names the input in reject entries.
///
/// Fails with `EmptyCorpus` only when the input held no records at all.
pub fn ingest_reader<R: Read>(
    reader: R,
    format: TraceFormat,
    source: &str,
) -> Result<Ingested, LedgerError> {
    let mut ing = Ingestor::default();
    match format {
        TraceFormat::Jsonl => ing.push_jsonl(reader, source)?,
        TraceFormat::Csv => ing.push_csv(reader, source)?,
    }
    ing.finish()
}

/// Reads one trace file.
pub fn ingest_traces(path: &Path, format: TraceFormat) -> Result<Ingested, LedgerError> {
    let file = File::open(path)?;
    ingest_reader(file, format, &path.display().to_string())
}

/// Reads a file, or every `.jsonl`/`.csv` file of a directory in name order.
///
/// With `format` unset each file's format follows its extension.
pub fn ingest_path(path: &Path, format: Option<TraceFormat>) -> Result<Ingested, LedgerError> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && TraceFormat::from_path(p).is_some())
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut ing = Ingestor::default();
    for f in &files {
        let fmt = format
            .or_else(|| TraceFormat::from_path(f))
            .unwrap_or(TraceFormat::Jsonl);
        let reader = File::open(f)?;
        let name = f.display().to_string();
        match fmt {
            TraceFormat::Jsonl => ing.push_jsonl(reader, &name)?,
            TraceFormat::Csv => ing.push_csv(reader, &name)?,
        }
    }
    ing.finish()
}

#[derive(Serialize)]
struct OutRecord<'a> {
    pool_id: &'a str,
    kind: &'static str,
    actor: Address,
    timestamp: u64,
    token_amount: String,
    base_amount: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    counterparty: Option<Address>,
    #[serde(skip_serializing_if = "Option::is_none")]
    asset: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dex_name: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deployer: Option<Address>,
    #[serde(skip_serializing_if = "Option::is_none")]
    base_reserve_before: Option<String>,
}

/// Writes one JSON object per event. The deploy line carries `deployer` and `dex_name`.
pub fn write_jsonl<W: Write>(traces: &[PoolTrace], writer: W) -> Result<(), LedgerError> {
    let mut w = BufWriter::new(writer);
    for t in traces {
        for (i, e) in t.events.iter().enumerate() {
            let is_deploy = e.kind == EventKind::Deploy;
            let rec = OutRecord {
                pool_id: &t.pool_id,
                kind: e.kind.as_str(),
                actor: e.actor,
                timestamp: e.timestamp,
                token_amount: to_plain_string(e.token_amount),
                base_amount: to_plain_string(e.base_amount),
                counterparty: e.counterparty,
                asset: (e.asset != Asset::Token).then(|| e.asset.as_str()),
                dex_name: is_deploy.then_some(t.dex_name.as_str()),
                deployer: is_deploy.then_some(t.deployer),
                base_reserve_before: t
                    .base_reserve_before
                    .as_ref()
                    .and_then(|r| r.get(i))
                    .map(|d| to_plain_string(*d)),
            };
            serde_json::to_writer(&mut w, &rec).map_err(|e| LedgerError::Io(e.to_string()))?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the versioned CSV schema, adding `base_reserve_before` when any trace is annotated.
pub fn write_csv<W: Write>(traces: &[PoolTrace], writer: W) -> Result<(), LedgerError> {
    let io = |e: csv::Error| LedgerError::Io(e.to_string());
    let with_reserves = traces.iter().any(PoolTrace::is_annotated);
    let mut w = csv::Writer::from_writer(BufWriter::new(writer));
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    if with_reserves {
        header.push(CSV_RESERVE_COLUMN);
    }
    w.write_record(&header).map_err(io)?;
    for t in traces {
        for (i, e) in t.events.iter().enumerate() {
            let mut row = vec![
                t.pool_id.clone(),
                e.kind.as_str().to_string(),
                e.actor.to_string(),
                e.timestamp.to_string(),
                to_plain_string(e.token_amount),
                to_plain_string(e.base_amount),
                e.counterparty.map(|c| c.to_string()).unwrap_or_default(),
                if e.asset == Asset::Token {
                    String::new()
                } else {
                    e.asset.as_str().to_string()
                },
                if e.kind == EventKind::Deploy {
                    t.dex_name.clone()
                } else {
                    String::new()
                },
            ];
            if with_reserves {
                row.push(
                    t.base_reserve_before
                        .as_ref()
                        .filter(|r| r.len() == t.events.len())
                        .map(|r| to_plain_string(r[i]))
                        .unwrap_or_default(),
                );
            }
            w.write_record(&row).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_traces(
    path: &Path,
    traces: &[PoolTrace],
    format: TraceFormat,
) -> Result<(), LedgerError> {
    let f = File::create(path)?;
    match format {
        TraceFormat::Jsonl => write_jsonl(traces, f),
        TraceFormat::Csv => write_csv(traces, f),
    }
}
