use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use rugscope::address::Address;
use rugscope::adversary::{generate, AdversaryError, GroundTruth, ScenarioConfig, PRESETS};
use rugscope::decimal::parse_dec;
use rugscope::detection::{
    analyze_corpus, parse_theta_range, theta_sweep, ClassCounts, DetectionReport, PoolAnalysis,
};
use rugscope::ledger::{ingest_path, write_traces, Ingested, LedgerError, Reject, TraceFormat};
use rugscope::measurement::{measure, write_bundle, PoolProfile};
use rugscope::predicates::DetectorConfig;
use serde::Serialize;

use crate::args::{DetectArgs, DetectorArgs, MeasureArgs, SimulateArgs};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("no valid pool traces in input")]
    EmptyCorpus,
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::EmptyCorpus => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| io_err(path, e))?;
    f.write_all(b"\n")
        .and_then(|_| f.flush())
        .map_err(|e| io_err(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

pub fn simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let mut cfg = if let Some(path) = &args.scenario {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        ScenarioConfig::from_json(&text).map_err(CliError::Config)?
    } else {
        let name = args.preset.as_deref().unwrap_or_default();
        ScenarioConfig::preset(name, 0).ok_or_else(|| {
            CliError::Config(format!(
                "unknown preset {name:?}; expected one of {}",
                PRESETS.join(", ")
            ))
        })?
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(fee) = &args.fee {
        cfg.fee_rate = parse_dec(fee).map_err(|e| CliError::Config(e.to_string()))?;
    }
    cfg.validate().map_err(CliError::Config)?;
    let (traces, manifest) = generate(&cfg).map_err(|e| match e {
        AdversaryError::InvalidParameter(m) => CliError::Config(m),
        other => CliError::Runtime(other.to_string()),
    })?;
    create_dir(&args.out)?;
    let format = TraceFormat::from(args.format);
    let trace_path = args.out.join(format!("traces.{}", format.extension()));
    write_traces(&trace_path, &traces, format).map_err(|e| io_err(&trace_path, e))?;
    write_json(&args.out.join("manifest.json"), &manifest)?;
    let count = |g| manifest.counts.get(&g).copied().unwrap_or(0);
    Ok(format!(
        "simulated {} pools: canonical={} frp={} benign={}",
        traces.len(),
        count(GroundTruth::Canonical),
        count(GroundTruth::Frp),
        count(GroundTruth::Benign)
    ))
}

fn parse_addresses(raw: &[String], what: &str) -> Result<Vec<Address>, CliError> {
    raw.iter()
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|e| CliError::Config(format!("{what} {s:?}: {e}")))
        })
        .collect()
}

pub fn detector_config(d: &DetectorArgs) -> Result<DetectorConfig, CliError> {
    let mut cfg = DetectorConfig {
        theta: parse_dec(&d.theta).map_err(|e| CliError::Config(e.to_string()))?,
        max_lifetime_days: d.max_lifetime_days,
        fee_rate: parse_dec(&d.fee).map_err(|e| CliError::Config(e.to_string()))?,
        owner_set_extension: parse_addresses(&d.owner_addresses, "owner address")?,
        ..DetectorConfig::default()
    };
    for a in parse_addresses(&d.burn_addresses, "burn address")? {
        if !cfg.burn_addresses.contains(&a) {
            cfg.burn_addresses.push(a);
        }
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

fn load(d: &DetectorArgs) -> Result<Ingested, CliError> {
    if !d.input.exists() {
        return Err(CliError::Runtime(format!(
            "input not found: {}",
            d.input.display()
        )));
    }
    ingest_path(&d.input, d.format.map(TraceFormat::from)).map_err(|e| match e {
        LedgerError::EmptyCorpus => CliError::EmptyCorpus,
        other => io_err(&d.input, other),
    })
}

/// Analyzes every trace; pools that fail replay become rejects.
fn analyze(ingested: Ingested, cfg: &DetectorConfig) -> (Vec<PoolAnalysis>, Vec<Reject>) {
    let mut rejects = ingested.rejects;
    let mut pools = Vec::with_capacity(ingested.traces.len());
    for r in analyze_corpus(ingested.traces, cfg) {
        match r {
            Ok(a) => pools.push(a),
            Err(e) => rejects.push(Reject {
                source: "replay".into(),
                line: 0,
                pool_id: e.pool_id().map(str::to_string),
                reason: e.to_string(),
            }),
        }
    }
    (pools, rejects)
}

#[derive(Serialize)]
struct DetectSummary<'a> {
    schema_version: u32,
    theta: String,
    max_lifetime_days: f64,
    fee_rate: String,
    #[serde(flatten)]
    counts: &'a ClassCounts,
    rejected_records: usize,
}

fn summary_line(counts: &ClassCounts, rejects: usize) -> String {
    format!(
        "pools={} canonical={} frp={} neither={} rejected={}",
        counts.pools, counts.canonical, counts.frp, counts.neither, rejects
    )
}

fn reports(pools: &[PoolAnalysis], cfg: &DetectorConfig) -> Result<Vec<DetectionReport>, CliError> {
    pools
        .par_iter()
        .map(|p| p.report(cfg).map_err(|e| CliError::Runtime(e.to_string())))
        .collect()
}

fn finish_with_rejects(out: &Path, rejects: &[Reject], line: String) -> Result<String, CliError> {
    write_json(&out.join("rejects.json"), &rejects)?;
    if rejects.is_empty() {
        Ok(line)
    } else {
        Err(CliError::Runtime(format!(
            "{line}\n{} malformed records; see {}",
            rejects.len(),
            out.join("rejects.json").display()
        )))
    }
}

pub fn detect(args: &DetectArgs) -> Result<String, CliError> {
    let cfg = detector_config(&args.detector)?;
    let thetas = args
        .theta_sweep
        .as_deref()
        .map(parse_theta_range)
        .transpose()
        .map_err(CliError::Config)?;
    let out = &args.detector.out;
    let (pools, rejects) = analyze(load(&args.detector)?, &cfg);
    create_dir(out)?;

    let reports = reports(&pools, &cfg)?;
    let mut counts = ClassCounts::default();
    let path = out.join("reports.jsonl");
    let mut w = BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?);
    for r in &reports {
        counts.add(r.classification);
        serde_json::to_writer(&mut w, r).map_err(|e| io_err(&path, e))?;
        w.write_all(b"\n").map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;

    if let Some(thetas) = thetas {
        let rows =
            theta_sweep(&pools, &cfg, &thetas).map_err(|e| CliError::Runtime(e.to_string()))?;
        let path = out.join("theta_sweep.csv");
        let mut w = BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?);
        writeln!(w, "theta,high_impact,canonical,frp,overlap").map_err(|e| io_err(&path, e))?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.theta, r.high_impact, r.canonical, r.frp, r.overlap
            )
            .map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }

    write_json(
        &out.join("summary.json"),
        &DetectSummary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            theta: cfg.theta.to_string(),
            max_lifetime_days: cfg.max_lifetime_days,
            fee_rate: cfg.fee_rate.to_string(),
            counts: &counts,
            rejected_records: rejects.len(),
        },
    )?;
    finish_with_rejects(out, &rejects, summary_line(&counts, rejects.len()))
}

pub fn measure_cmd(args: &MeasureArgs) -> Result<String, CliError> {
    let cfg = detector_config(&args.detector)?;
    let out = &args.detector.out;
    let (pools, rejects) = analyze(load(&args.detector)?, &cfg);
    create_dir(out)?;

    let per_pool: Vec<(DetectionReport, Option<PoolProfile>)> = pools
        .par_iter()
        .map(|p| {
            let report = p
                .report(&cfg)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let profile = report
                .frp
                .is_frp
                .then(|| PoolProfile::new(&p.trace, &p.inflated, &cfg));
            Ok((report, profile))
        })
        .collect::<Result<_, CliError>>()?;
    drop(pools);
    let mut counts = ClassCounts::default();
    let mut profiles = Vec::new();
    for (report, profile) in per_pool {
        counts.add(report.classification);
        profiles.extend(profile);
    }
    let bundle = measure(&profiles);
    let detection = DetectSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        theta: cfg.theta.to_string(),
        max_lifetime_days: cfg.max_lifetime_days,
        fee_rate: cfg.fee_rate.to_string(),
        counts: &counts,
        rejected_records: rejects.len(),
    };
    write_bundle(out, &bundle, Some(&detection)).map_err(|e| io_err(out, e))?;
    let line = format!(
        "{}\n{}",
        summary_line(&counts, rejects.len()),
        bundle.category_table().trim_end()
    );
    finish_with_rejects(out, &rejects, line)
}
