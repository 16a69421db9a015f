//! Smart healthcare scenario and the monitor, analyze, plan, execute and
//! maintain loop around it.

mod event;
mod model;
mod report;
mod run;

use std::sync::Arc;

pub use event::{EventKind, ShsEvent};
pub use model::{shs_type_graph, ShsModel, SHS_TYPES};
pub use report::{ConfigEcho, RunReport, Totals};
pub use run::{
    run_loop, AdaptationLoop, LoopConfig, LoopError, LoopOutcome, LoopStats, Variant, Violation, DEFAULT_PERIOD,
    DEFAULT_RETENTION,
};

use crate::mtgl::{parse, CompiledQuery};

pub const PHI1: &str = include_str!("../../assets/phi1.tq");
pub const PHI2: &str = include_str!("../../assets/phi2.tq");

/// The bundled sepsis queries compiled over the scenario type graph.
pub fn bundled_queries() -> Vec<Arc<CompiledQuery>> {
    let types = shs_type_graph();
    [PHI1, PHI2]
        .iter()
        .flat_map(|src| parse(src).expect("bundled query parses").compile(&types).expect("bundled query compiles"))
        .map(Arc::new)
        .collect()
}

pub fn bundled_query(name: &str) -> Option<Arc<CompiledQuery>> {
    bundled_queries().into_iter().find(|q| q.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use EventKind::*;

    fn run(log: &[ShsEvent], query: &str, variant: Variant) -> LoopOutcome {
        let mut cfg = LoopConfig::new(variant, vec![bundled_query(query).unwrap()]);
        cfg.timing = false;
        run_loop(log, &cfg).unwrap()
    }

    fn ev(kind: EventKind, p: &str, t: u64) -> ShsEvent {
        ShsEvent::new(kind, p, t)
    }

    #[test]
    fn cutoffs_of_bundled_queries() {
        for q in bundled_queries() {
            assert_eq!(q.cutoff, 3600, "{}", q.name);
            assert_eq!(q.future_horizon, 3600, "{}", q.name);
        }
    }

    #[test]
    fn untreated_triage_is_a_violation() {
        let t = 7200;
        let out = run(&[ev(ER, "a", t)], "phi1", Variant::Intempo);
        assert_eq!(out.violations.len(), 1);
        let v = &out.violations[0];
        assert_eq!((v.patient.as_str(), v.start, v.detected_at), ("a", t, t + 3600));
    }

    #[test]
    fn timely_antibiotics_never_violate() {
        for variant in [Variant::Intempo, Variant::IntempoPlus] {
            let out = run(&[ev(ER, "a", 100), ev(IV, "a", 1900)], "phi1", variant);
            assert!(out.violations.is_empty());
            assert!(out.stats.iter().all(|s| s.new_violations == 0));
        }
    }

    #[test]
    fn release_before_treatment_violates_phi2() {
        let log = [ev(ER, "a", 100), ev(RE, "a", 700)];
        assert_eq!(run(&log, "phi2", Variant::IntempoPlus).violations.len(), 1);
        let log = [ev(ER, "a", 100), ev(IV, "a", 500), ev(RE, "a", 700)];
        assert!(run(&log, "phi2", Variant::IntempoPlus).violations.is_empty());
        let log = [ev(ER, "a", 100), ev(RE, "a", 300), ev(IV, "a", 500)];
        assert_eq!(run(&log, "phi2", Variant::Intempo).violations.len(), 1);
    }

    #[test]
    fn adaptation_does_not_raise_again() {
        let log = [ev(ER, "a", 0), ev(ER, "b", 10_000)];
        let out = run(&log, "phi1", Variant::Intempo);
        assert_eq!(out.ledger().iter().filter(|v| v.0 == "a").count(), 1);
        assert_eq!(out.violations.len(), 2);
        let mut cfg = LoopConfig::new(Variant::Intempo, vec![bundled_query("phi1").unwrap()]);
        cfg.timing = false;
        let mut lp = AdaptationLoop::new(cfg).unwrap();
        lp.monitor(&ev(ER, "a", 0)).unwrap();
        assert_eq!(lp.invoke(3600).unwrap().new_violations, 1);
        let g = lp.model().graph();
        let count = |ty: &str| g.elements().filter(|e| g.types().name(e.ty) == ty).count();
        assert_eq!((count("Effector"), count("DrugService"), count("AdaptationAction")), (1, 1, 1));
        for k in 2..5 {
            assert_eq!(lp.invoke(3600 * k).unwrap().new_violations, 0);
        }
    }

    #[test]
    fn empty_log_keeps_model_constant() {
        let mut cfg = LoopConfig::new(Variant::IntempoPlus, bundled_queries());
        cfg.until = Some(5 * 3600);
        let out = run_loop(&[], &cfg).unwrap();
        assert_eq!(out.stats.len(), 5);
        assert!(out.stats.iter().all(|s| s.elements == 1 && s.new_violations == 0));
    }

    #[test]
    fn unsorted_log_is_rejected() {
        let cfg = LoopConfig::new(Variant::Intempo, bundled_queries());
        assert!(matches!(run_loop(&[ev(ER, "a", 9), ev(ER, "b", 3)], &cfg), Err(LoopError::Unsorted { index: 1 })));
    }

    #[test]
    fn pruning_is_transparent_on_a_small_log() {
        let log = [
            ev(ER, "a", 0),
            ev(ER, "b", 1000),
            ev(IV, "b", 2000),
            ev(ER, "c", 5000),
            ev(RE, "c", 5100),
            ev(IV, "c", 7000),
            ev(RE, "a", 20_000),
        ];
        for q in ["phi1", "phi2"] {
            let full = run(&log, q, Variant::Intempo);
            let plus = run(&log, q, Variant::IntempoPlus);
            assert_eq!(full.violations, plus.violations, "{q}");
            assert!(plus.stats.last().unwrap().elements < full.stats.last().unwrap().elements);
        }
    }
}
