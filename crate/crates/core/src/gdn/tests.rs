use std::sync::Arc;

use super::*;
use crate::interval::{FragmentedInterval, TimePoint};
use crate::model::snapshot::Snapshot;
use crate::model::{HistoryGraph, TypeGraph};
use crate::mtgl::{parse, CompiledQuery};

const ZETA: &str = include_str!("../../assets/zeta.tq");
const ZETA_MODEL: &str = include_str!("../../assets/zeta_model.json");

fn fi(s: &str) -> FragmentedInterval {
    s.parse().unwrap()
}

fn compile(src: &str, types: &TypeGraph) -> Arc<CompiledQuery> {
    Arc::new(parse(src).unwrap().compile(types).unwrap().remove(0))
}

fn step(engine: &mut Engine, g: &mut HistoryGraph) -> MatchReport {
    let journal = g.take_journal();
    engine.execute_incremental(g, &journal).unwrap()
}

fn lambdas(engine: &Engine, n: NodeId) -> Vec<String> {
    engine.markings(n).map(|m| m.lambda.to_string()).collect()
}

#[test]
fn worked_example_phases() {
    let graph = Snapshot::from_json(ZETA_MODEL).unwrap().into_graph().unwrap();
    let types = graph.types().clone();
    let net = Arc::new(GdnNetwork::build(compile(ZETA, &types), &types));
    let mut engine = Engine::new(net.clone(), types);
    let report = engine.execute_full(&graph).unwrap();

    let n11 = net.pattern_node("n1_1").unwrap();
    let n12 = net.pattern_node("n1_2").unwrap();
    let u = net.temporal_nodes().next().unwrap();
    assert_eq!(lambdas(&engine, n11), ["[5,7]"]);
    assert_eq!(lambdas(&engine, net.alpha_over(n11).unwrap()), ["[5,7]"]);
    assert_eq!(lambdas(&engine, n12), ["[6,8]", "[8,9]"]);
    assert_eq!(lambdas(&engine, net.alpha_over(n12).unwrap()), ["[6,9]"]);
    assert_eq!(lambdas(&engine, u), ["[5,9]"]);
    assert_eq!(lambdas(&engine, net.alpha_over(u).unwrap()), ["[5,9]"]);
    assert_eq!(report.matches.len(), 1);
    assert_eq!(report.matches[0].lambda, fi("[5,9]"));
}

#[test]
fn empty_graph_gives_empty_report() {
    let graph = Snapshot::from_json(ZETA_MODEL).unwrap().into_graph().unwrap();
    let types = graph.types().clone();
    let empty = HistoryGraph::new(types.clone());
    let net = Arc::new(GdnNetwork::build(compile(ZETA, &types), &types));
    let mut engine = Engine::new(net, types);
    assert!(engine.execute_full(&empty).unwrap().matches.is_empty());
    assert_eq!(engine.marking_count(), 0);
}

#[test]
fn incremental_replay_of_the_worked_example() {
    let full = Snapshot::from_json(ZETA_MODEL).unwrap().into_graph().unwrap();
    let types = full.types().clone();
    let net = Arc::new(GdnNetwork::build(compile(ZETA, &types), &types));
    let t = TimePoint::new;

    let mut g = HistoryGraph::new(types.clone());
    let mut inc = Engine::new(net.clone(), types.clone());
    let x = g.create_vertex("X", [], t(0)).unwrap();
    step(&mut inc, &mut g);
    let y = g.create_vertex("Y", [], t(5)).unwrap();
    g.create_edge("xy", x, y, t(5)).unwrap();
    step(&mut inc, &mut g);
    let z1 = g.create_vertex("Z", [], t(6)).unwrap();
    g.create_edge("xz", x, z1, t(6)).unwrap();
    step(&mut inc, &mut g);
    g.delete_element(y, t(7)).unwrap();
    step(&mut inc, &mut g);
    g.delete_element(z1, t(8)).unwrap();
    let z2 = g.create_vertex("Z", [], t(8)).unwrap();
    g.create_edge("xz", x, z2, t(8)).unwrap();
    step(&mut inc, &mut g);
    g.delete_element(z2, t(9)).unwrap();
    let report = step(&mut inc, &mut g);
    assert_eq!(report.matches[0].lambda, fi("[5,9]"));

    let mut fresh = Engine::new(net, types);
    fresh.execute_full(&g).unwrap();
    assert_eq!(inc.marking_state(), fresh.marking_state());
}

#[test]
fn marking_ids_survive_unrelated_changes() {
    let graph = Snapshot::from_json(ZETA_MODEL).unwrap().into_graph().unwrap();
    let types = graph.types().clone();
    let net = Arc::new(GdnNetwork::build(compile(ZETA, &types), &types));
    let mut g = graph.clone();
    g.take_journal();
    let mut engine = Engine::new(net.clone(), types);
    engine.execute_full(&g).unwrap();
    let before: Vec<u64> = engine.markings(net.terminal()).map(|m| m.id).collect();
    let x = g.elements().find(|e| g.types().name(e.ty) == "X").unwrap().id;
    let z = g.create_vertex("Z", [], TimePoint::new(20)).unwrap();
    g.create_edge("xz", x, z, TimePoint::new(20)).unwrap();
    let report = step(&mut engine, &mut g);
    assert_eq!(report.matches[0].lambda, fi("[5,9]∪[20,inf]"));
    let after: Vec<u64> = engine.markings(net.terminal()).map(|m| m.id).collect();
    assert_eq!(before, after);
}

#[test]
fn type_graph_mismatch_is_rejected() {
    let graph = Snapshot::from_json(ZETA_MODEL).unwrap().into_graph().unwrap();
    let types = graph.types().clone();
    let net = Arc::new(GdnNetwork::build(compile(ZETA, &types), &types));
    let other = Snapshot::from_json(r#"{"types": {"vertex_types": [{"name": "Q"}]}}"#).unwrap().into_graph().unwrap();
    let mut engine = Engine::new(net, types);
    assert!(engine.execute_full(&other).is_err());
}
