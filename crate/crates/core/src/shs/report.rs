use std::io::Write;

use serde::Serialize;

use super::run::{LoopConfig, LoopOutcome, LoopStats, Variant, Violation};

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub variant: Variant,
    pub period: u64,
    pub retention: u64,
    pub queries: Vec<String>,
    pub kappa: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Totals {
    pub analysis_s: f64,
    pub plan_s: f64,
    pub execute_s: f64,
    pub maintain_s: f64,
    pub reaction_s: f64,
}

/// Summary of one replay: the configuration, every invocation and the
/// violations found.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub totals: Totals,
    pub peak_elements: usize,
    pub invocations: usize,
    pub violations: Vec<Violation>,
    #[serde(skip)]
    pub rows: Vec<LoopStats>,
}

impl RunReport {
    pub fn new(config: &LoopConfig, outcome: LoopOutcome, log: Option<String>) -> Self {
        let mut totals = Totals::default();
        for r in &outcome.stats {
            totals.analysis_s += r.analysis_s;
            totals.plan_s += r.plan_s;
            totals.execute_s += r.execute_s;
            totals.maintain_s += r.maintain_s;
            totals.reaction_s += r.reaction_s;
        }
        RunReport {
            config: ConfigEcho {
                variant: config.variant,
                period: config.period,
                retention: config.retention,
                queries: config.queries.iter().map(|q| q.name.clone()).collect(),
                kappa: outcome.kappa,
                log,
            },
            totals,
            peak_elements: outcome.stats.iter().map(|s| s.elements).max().unwrap_or(0),
            invocations: outcome.stats.len(),
            violations: outcome.violations,
            rows: outcome.stats,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shs::{bundled_queries, run_loop, EventKind, ShsEvent};

    #[test]
    fn totals_are_column_sums() {
        let cfg = LoopConfig::new(Variant::IntempoPlus, bundled_queries());
        let log = [ShsEvent::new(EventKind::ER, "a", 5), ShsEvent::new(EventKind::ER, "b", 4000)];
        let out = run_loop(&log, &cfg).unwrap();
        let r = RunReport::new(&cfg, out, None);
        let sum: f64 = r.rows.iter().map(|s| s.maintain_s).sum();
        assert!((r.totals.maintain_s - sum).abs() < 1e-12);
        assert_eq!(r.violations.len(), 4);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("invocation,time,analysis_s,plan_s,execute_s,maintain_s,reaction_s,elements,markings"));
        assert_eq!(text.lines().count(), r.invocations + 1);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["config"]["variant"], "intempo-plus");
    }
}
