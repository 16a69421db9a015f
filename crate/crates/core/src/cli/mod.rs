use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use tempoq::gdn::{Engine, GdnNetwork, MatchReport};
use tempoq::logs::{self, LogSpec};
use tempoq::model::snapshot::Snapshot;
use tempoq::model::{HistoryGraph, TypeGraph};
use tempoq::mtgl::{parse, CompiledQuery};
use tempoq::oracle;
use tempoq::shs::{self, run_loop, LoopConfig, RunReport, Variant};

const MISMATCH: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "tempoq", version, about = "Temporal graph queries over runtime models with history")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize an event log from a JSON log spec.
    GenLog {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec's seed. TEMPOQ_SEED is used when neither is set.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Replay a log through the adaptation loop.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Query file; the bundled sepsis queries when omitted.
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long, default_value = "intempo-plus")]
        variant: Variant,
        #[arg(long, default_value_t = shs::DEFAULT_PERIOD)]
        period: u64,
        #[arg(long, default_value_t = shs::DEFAULT_RETENTION)]
        retention: u64,
        /// JSON summary path; per-invocation rows go next to it as CSV.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        no_timing: bool,
        /// Record the serialized model size at every invocation.
        #[arg(long)]
        model_bytes: bool,
    },
    /// Run queries once over a model snapshot.
    Query {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        now: u64,
        #[arg(long)]
        query: Option<String>,
    },
    /// Evaluate queries with the brute-force checker.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        horizon: u64,
        #[arg(long)]
        query: Option<String>,
        /// Compare against the network engine.
        #[arg(long)]
        diff: bool,
        /// Compare against expected results in a JSON file.
        #[arg(long)]
        expect: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GenLog { spec, out, seed } => gen_log(&spec, &out, seed),
        Command::Replay { log, queries, variant, period, retention, report, no_timing, model_bytes } => {
            let queries = match queries {
                Some(q) => load_queries(&q, &shs::shs_type_graph(), None)?,
                None => shs::bundled_queries(),
            };
            let mut config = LoopConfig::new(variant, queries).with_period(period);
            config.retention = retention;
            config.timing = !no_timing;
            config.model_bytes = model_bytes;
            replay(&log, &config, report.as_deref())
        }
        Command::Query { model, queries, now, query } => {
            let graph = load_model(&model)?;
            let mut reports = Vec::new();
            for q in load_queries(&queries, graph.types(), query.as_deref())? {
                let report = engine_report(&graph, &q)?;
                reports.push(report.classified(q.future_horizon, now));
            }
            println!("{}", serde_json::to_string_pretty(&reports)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { model, queries, horizon, query, diff, expect } => {
            oracle_cmd(&model, &queries, horizon, query.as_deref(), diff, expect.as_deref())
        }
    }
}

fn load_model(path: &Path) -> Result<HistoryGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let snap = Snapshot::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    snap.into_graph().with_context(|| format!("loading {}", path.display()))
}

fn load_queries(path: &Path, types: &Arc<TypeGraph>, only: Option<&str>) -> Result<Vec<Arc<CompiledQuery>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = parse(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let compiled = file.compile(types).with_context(|| format!("compiling {}", path.display()))?;
    let qs: Vec<Arc<CompiledQuery>> =
        compiled.into_iter().filter(|q| only.is_none_or(|n| q.name == n)).map(Arc::new).collect();
    if qs.is_empty() {
        bail!("no matching query in {}", path.display());
    }
    Ok(qs)
}

fn engine_report(graph: &HistoryGraph, q: &Arc<CompiledQuery>) -> Result<MatchReport> {
    let net = Arc::new(GdnNetwork::build(q.clone(), graph.types()));
    let mut engine = Engine::new(net, graph.types().clone());
    Ok(engine.execute_full(graph)?)
}

fn gen_log(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<ExitCode> {
    let text = fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let mut spec: LogSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    if seed.is_some() {
        spec.seed = seed;
    }
    if spec.seed.is_none() {
        if let Ok(v) = std::env::var("TEMPOQ_SEED") {
            spec.seed = Some(v.trim().parse().context("TEMPOQ_SEED is not an integer")?);
        }
    }
    let events = logs::synthesize(&spec)?;
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    logs::write_log(std::io::BufWriter::new(file), &events)?;
    let mean = logs::mean_er_gap(&events).unwrap_or(0.0);
    println!("trajectories: {}, mean IAT_ER: {mean:.1} s", logs::trajectory_count(&events));
    Ok(ExitCode::SUCCESS)
}

fn replay(log: &Path, config: &LoopConfig, report: Option<&Path>) -> Result<ExitCode> {
    let events = logs::ingest(log).with_context(|| format!("reading {}", log.display()))?;
    let outcome = run_loop(&events, config)?;
    let run = RunReport::new(config, outcome, Some(log.display().to_string()));
    if let Some(path) = report {
        let (json, csv) = report_paths(path);
        fs::write(&json, run.to_json()).with_context(|| format!("writing {}", json.display()))?;
        let f = fs::File::create(&csv).with_context(|| format!("creating {}", csv.display()))?;
        run.write_csv(f)?;
    }
    println!(
        "invocations: {}, violations: {}, peak elements: {}, reaction time: {:.3} s",
        run.invocations,
        run.violations.len(),
        run.peak_elements,
        run.totals.reaction_s
    );
    Ok(ExitCode::SUCCESS)
}

fn report_paths(path: &Path) -> (PathBuf, PathBuf) {
    if path.extension().is_some_and(|e| e == "csv") {
        (path.with_extension("json"), path.to_path_buf())
    } else {
        (path.to_path_buf(), path.with_extension("csv"))
    }
}

fn oracle_cmd(
    model: &Path,
    queries: &Path,
    horizon: u64,
    only: Option<&str>,
    diff: bool,
    expect: Option<&Path>,
) -> Result<ExitCode> {
    let graph = load_model(model)?;
    let qs = load_queries(queries, graph.types(), only)?;
    let expected: Vec<MatchReport> = match expect {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            if v.is_array() {
                serde_json::from_value(v)?
            } else {
                vec![serde_json::from_value(v)?]
            }
        }
        None => Vec::new(),
    };
    let mut mismatches = 0;
    let mut out = Vec::new();
    for q in &qs {
        let result = oracle::evaluate(&graph, q, horizon)?;
        let mut against: Vec<(&str, MatchReport)> = Vec::new();
        if diff {
            against.push(("engine", engine_report(&graph, q)?));
        }
        if expect.is_some() {
            let Some(e) = expected.iter().find(|e| e.query == q.name) else {
                bail!("no expected result for query {}", q.name);
            };
            against.push(("expected", e.clone()));
        }
        for (label, report) in against {
            for (m, o, e) in oracle::diff(&result, &report) {
                eprintln!("{}: {m:?}: oracle {o}, {label} {e}", q.name);
                mismatches += 1;
            }
        }
        out.push(serde_json::from_str::<serde_json::Value>(&result.to_json())?);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    if mismatches > 0 {
        eprintln!("{mismatches} mismatching bindings");
        return Ok(ExitCode::from(MISMATCH));
    }
    Ok(ExitCode::SUCCESS)
}
