use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::event::ShsEvent;
use super::model::{shs_type_graph, ShsModel};
use crate::gdn::{classify_matches, definite_part, Engine, EngineError, GdnNetwork};
use crate::model::snapshot::Snapshot;
use crate::model::{ElementId, ModelError};
use crate::mtgl::CompiledQuery;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Incremental execution over the full history.
    Intempo,
    /// Incremental execution with cut-off based pruning.
    IntempoPlus,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Intempo => "intempo",
            Variant::IntempoPlus => "intempo-plus",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "intempo" => Ok(Variant::Intempo),
            "intempo-plus" => Ok(Variant::IntempoPlus),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

pub const DEFAULT_PERIOD: u64 = 3600;
pub const DEFAULT_RETENTION: u64 = 30 * 24 * 3600;

#[derive(Clone, Debug)]
pub struct LoopConfig {
    pub period: u64,
    pub variant: Variant,
    pub queries: Vec<Arc<CompiledQuery>>,
    /// Patients with no event for this long are discharged.
    pub retention: u64,
    /// Keep invoking at least until this time.
    pub until: Option<u64>,
    pub timing: bool,
    pub model_bytes: bool,
}

impl LoopConfig {
    pub fn new(variant: Variant, queries: Vec<Arc<CompiledQuery>>) -> Self {
        LoopConfig {
            period: DEFAULT_PERIOD,
            variant,
            queries,
            retention: DEFAULT_RETENTION,
            until: None,
            timing: true,
            model_bytes: false,
        }
    }

    pub fn with_period(mut self, period: u64) -> Self {
        self.period = period;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopStats {
    pub invocation: usize,
    pub time: u64,
    pub analysis_s: f64,
    pub plan_s: f64,
    pub execute_s: f64,
    pub maintain_s: f64,
    pub reaction_s: f64,
    pub elements: usize,
    pub markings: usize,
    pub model_bytes: usize,
    pub new_violations: usize,
    pub pending: usize,
}

/// One detected violation: the patient, the query, when the violating match
/// starts and the invocation that reported it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub patient: String,
    pub query: String,
    pub start: u64,
    pub detected_at: u64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LoopOutcome {
    pub kappa: u64,
    pub stats: Vec<LoopStats>,
    pub violations: Vec<Violation>,
}

impl LoopOutcome {
    /// Violations without detection times, sorted.
    pub fn ledger(&self) -> Vec<(String, String, u64)> {
        let mut v: Vec<_> = self.violations.iter().map(|v| (v.patient.clone(), v.query.clone(), v.start)).collect();
        v.sort();
        v
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoopError {
    #[error("log is not sorted by timestamp at event {index}")]
    Unsorted { index: usize },
    #[error("invalid loop configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

struct Analyzer {
    query: Arc<CompiledQuery>,
    engine: Engine,
}

/// The adaptation loop state: the runtime model plus one engine per query.
pub struct AdaptationLoop {
    config: LoopConfig,
    model: ShsModel,
    analyzers: Vec<Analyzer>,
    kappa: u64,
    invocation: usize,
    violations: Vec<Violation>,
}

fn secs(t: Instant, timing: bool) -> f64 {
    if timing {
        t.elapsed().as_secs_f64()
    } else {
        0.0
    }
}

impl AdaptationLoop {
    pub fn new(config: LoopConfig) -> Result<Self, LoopError> {
        if config.period == 0 {
            return Err(LoopError::Config("period must be positive".into()));
        }
        let types = shs_type_graph();
        let kappa = config.queries.iter().map(|q| q.cutoff).max().unwrap_or(0);
        if config.retention < kappa {
            return Err(LoopError::Config(format!(
                "retention {} is shorter than the cut-off {kappa}",
                config.retention
            )));
        }
        let analyzers = config
            .queries
            .iter()
            .map(|q| {
                let net = Arc::new(GdnNetwork::build(q.clone(), &types));
                Analyzer { query: q.clone(), engine: Engine::new(net, types.clone()) }
            })
            .collect();
        let model = ShsModel::new(types)?;
        Ok(AdaptationLoop { config, model, analyzers, kappa, invocation: 0, violations: Vec::new() })
    }

    pub fn model(&self) -> &ShsModel {
        &self.model
    }

    pub fn kappa(&self) -> u64 {
        self.kappa
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn monitor(&mut self, event: &ShsEvent) -> Result<bool, LoopError> {
        Ok(self.model.monitor(event)?)
    }

    /// Runs analyze, plan, execute and, for the pruning variant, maintain.
    pub fn invoke(&mut self, now: u64) -> Result<LoopStats, LoopError> {
        let timing = self.config.timing;
        self.invocation += 1;
        let mut stats = LoopStats { invocation: self.invocation, time: now, ..Default::default() };

        let t = Instant::now();
        let journal = self.model.graph_mut().take_journal();
        let mut found: Vec<(String, String, u64)> = Vec::new();
        for a in &mut self.analyzers {
            let report = a.engine.execute_incremental(self.model.graph(), &journal)?;
            let fh = a.query.future_horizon;
            let split = classify_matches(&report, fh, now);
            stats.pending += split.pending.len();
            for m in &split.definite {
                let Some(patient) = monitoring_patient(&self.model, &m.elements) else { continue };
                if self.model.has_issue(&patient, &a.query.name)
                    || found.iter().any(|f| f.0 == patient && f.1 == a.query.name)
                {
                    continue;
                }
                let start = definite_part(&m.lambda, fh, now).lower().and_then(|p| p.ticks()).unwrap_or(now);
                found.push((patient, a.query.name.clone(), start));
            }
        }
        for (patient, query, _) in &found {
            self.model.raise_issue(patient, query, now)?;
        }
        stats.analysis_s = secs(t, timing);
        stats.new_violations = found.len();

        let t = Instant::now();
        let mut effectors = Vec::new();
        for (patient, query, _) in &found {
            effectors.push((patient.clone(), query.clone(), self.model.attach_effector(patient, now)?));
        }
        stats.plan_s = secs(t, timing);

        let t = Instant::now();
        for (patient, query, e) in &effectors {
            self.model.enact(patient, query, *e, now)?;
        }
        stats.execute_s = secs(t, timing);

        for patient in self.model.due_for_discharge(now, self.kappa, self.config.retention) {
            self.model.discharge(&patient, now)?;
        }

        if self.config.variant == Variant::IntempoPlus {
            let t = Instant::now();
            self.model.prune(now, self.kappa)?;
            let journal = self.model.graph_mut().take_journal();
            for a in &mut self.analyzers {
                a.engine.execute_incremental(self.model.graph(), &journal)?;
            }
            stats.maintain_s = secs(t, timing);
        }
        stats.reaction_s = stats.analysis_s + stats.plan_s + stats.execute_s + stats.maintain_s;
        stats.elements = self.model.graph().len();
        stats.markings = self.analyzers.iter().map(|a| a.engine.marking_count()).sum();
        if self.config.model_bytes {
            let snap = Snapshot::from_graph(self.model.graph());
            stats.model_bytes = serde_json::to_vec(&snap).map(|v| v.len()).unwrap_or(0);
        }
        self.violations.extend(found.into_iter().map(|(patient, query, start)| Violation {
            patient,
            query,
            start,
            detected_at: now,
        }));
        Ok(stats)
    }
}

fn monitoring_patient(model: &ShsModel, elements: &[ElementId]) -> Option<String> {
    let g = model.graph();
    elements.iter().find_map(|id| {
        let e = g.get(*id)?;
        (g.types().name(e.ty) == "PMonitoringService").then(|| model.patient_of(*id)).flatten()
    })
}

/// Replays a sorted log through the loop, invoking it every period until
/// every event is analyzed and every pending match has settled.
pub fn run_loop(log: &[ShsEvent], config: &LoopConfig) -> Result<LoopOutcome, LoopError> {
    if let Some(i) = log.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
        return Err(LoopError::Unsorted { index: i + 1 });
    }
    let mut lp = AdaptationLoop::new(config.clone())?;
    let p = config.period;
    let settle = config.queries.iter().map(|q| q.future_horizon).max().unwrap_or(0);
    let first = log.first().map_or(0, |e| e.timestamp / p * p);
    let last = log.last().map_or(0, |e| e.timestamp.saturating_add(settle));
    let last = last.max(config.until.unwrap_or(0));
    let mut stats = Vec::new();
    let mut next = 0;
    let mut now = first;
    loop {
        now += p;
        while next < log.len() && log[next].timestamp <= now {
            lp.monitor(&log[next])?;
            next += 1;
        }
        stats.push(lp.invoke(now)?);
        if now >= last && next == log.len() {
            break;
        }
    }
    Ok(LoopOutcome { kappa: lp.kappa, stats, violations: lp.violations })
}
