#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tempoq::interval::TimePoint;
use tempoq::model::snapshot::{ElementRecord, Snapshot};
use tempoq::model::{ElementId, HistoryGraph, TypeGraphDecl, Value};

pub const TYPES: &str = r#"{
  "vertex_types": [
    { "name": "N", "abstract": true },
    { "name": "A", "supertypes": ["N"], "attributes": { "k": "integer" } },
    { "name": "B", "supertypes": ["N"] },
    { "name": "C" }
  ],
  "edge_types": [
    { "name": "r", "source": "N", "target": "N" },
    { "name": "s", "source": "N", "target": "C" }
  ]
}"#;

pub struct Instance {
    pub snapshot: Snapshot,
    pub source: String,
    pub horizon: u64,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_graph(rng: &mut ChaCha8Rng, max_vertices: usize, max_time: u64) -> Snapshot {
    let types: TypeGraphDecl = serde_json::from_str(TYPES).unwrap();
    let n = rng.gen_range(1..=max_vertices);
    let mut elements: Vec<ElementRecord> = Vec::new();
    let mut next = 1;
    for _ in 0..n {
        let ty = ["A", "B", "C"].choose(rng).unwrap().to_string();
        let cts = rng.gen_range(0..=max_time * 5 / 6);
        let dts = if rng.gen_bool(0.4) { TimePoint::INFINITY } else { TimePoint::new(rng.gen_range(cts..=max_time)) };
        let mut attrs = BTreeMap::new();
        if ty == "A" {
            attrs.insert("k".to_string(), Value::Int(rng.gen_range(0..3)));
        }
        elements.push(ElementRecord {
            id: ElementId(next),
            ty,
            attrs,
            cts: TimePoint::new(cts),
            dts,
            source: None,
            target: None,
        });
        next += 1;
    }
    let vertices = elements.clone();
    let sources: Vec<&ElementRecord> = vertices.iter().filter(|v| v.ty != "C").collect();
    let edges = if sources.is_empty() { 0 } else { rng.gen_range(n / 2..=2 * n) };
    for _ in 0..edges {
        let s = *sources.choose(rng).unwrap();
        let t = vertices.choose(rng).unwrap();
        if t.id == s.id {
            continue;
        }
        let lo = s.cts.max(t.cts);
        let hi = s.dts.min(t.dts);
        let Some(lo_t) = lo.ticks() else { continue };
        let hi_t = hi.ticks().unwrap_or(max_time);
        if hi_t < lo_t {
            continue;
        }
        let cts = rng.gen_range(lo_t..=hi_t);
        let dts = if hi.is_finite() || rng.gen_bool(0.5) {
            TimePoint::new(rng.gen_range(cts..=hi_t))
        } else {
            TimePoint::INFINITY
        };
        elements.push(ElementRecord {
            id: ElementId(next),
            ty: if t.ty == "C" { "s" } else { "r" }.to_string(),
            attrs: BTreeMap::new(),
            cts: TimePoint::new(cts),
            dts,
            source: Some(s.id),
            target: Some(t.id),
        });
        next += 1;
    }
    Snapshot { types, elements }
}

struct FormulaGen<'a> {
    rng: &'a mut ChaCha8Rng,
    patterns: Vec<String>,
    vars: usize,
    max_bound: u64,
}

impl FormulaGen<'_> {
    fn var(&mut self) -> String {
        self.vars += 1;
        format!("v{}", self.vars)
    }

    fn interval(&mut self) -> String {
        let a = self.rng.gen_range(0..=self.max_bound);
        let b = self.rng.gen_range(a..=self.max_bound);
        format!("<{a},{b}>")
    }

    /// Declares a pattern over `scope` and returns its name and new vertices.
    fn pattern(&mut self, scope: &[(String, &'static str)], root: bool) -> (String, Vec<(String, &'static str)>) {
        let name = format!("p{}", self.patterns.len());
        let mut body = String::new();
        let mut bound: Vec<(String, &'static str)> = Vec::new();
        if !root && !scope.is_empty() {
            let mut s = scope.to_vec();
            s.shuffle(self.rng);
            bound = s.into_iter().take(self.rng.gen_range(0..=2)).collect();
        }
        let max_new = 3 - bound.len();
        let min_new = if bound.is_empty() { 1 } else { 0 };
        let fresh: Vec<(String, &'static str)> = (0..self.rng.gen_range(min_new..=max_new.min(2)))
            .map(|_| (self.var(), *["N", "N", "A", "B", "C"].choose(self.rng).unwrap()))
            .collect();
        if !bound.is_empty() {
            let names: Vec<&str> = bound.iter().map(|(n, _)| n.as_str()).collect();
            body += &format!("  bind {};\n", names.join(", "));
        }
        for (v, ty) in &fresh {
            let constraint = if *ty == "A" && self.rng.gen_bool(0.3) { " [k = 1]" } else { "" };
            body += &format!("  vertex {v}: {ty}{constraint};\n");
        }
        let all: Vec<(String, &'static str)> = bound.iter().chain(&fresh).cloned().collect();
        let mut edge_count = 0;
        for (i, (v, ty)) in all.iter().enumerate() {
            let must = i >= bound.len() && bound.len() + i > 0 && all.len() > 1;
            if !(must || self.rng.gen_bool(0.2)) {
                continue;
            }
            let (other, oty) = all.choose(self.rng).unwrap().clone();
            if other == *v {
                continue;
            }
            let pair = match (*ty, oty) {
                (_, "C") if *ty != "C" => Some((v.clone(), other.clone(), "s")),
                ("C", o) if o != "C" => Some((other.clone(), v.clone(), "s")),
                ("C", "C") => None,
                _ => Some((v.clone(), other.clone(), "r")),
            };
            if let Some((src, tgt, ety)) = pair {
                edge_count += 1;
                body += &format!("  edge e{edge_count}: {ety}({src} -> {tgt});\n");
            }
        }
        if fresh.iter().any(|(_, t)| *t != "C") && self.rng.gen_bool(0.2) {
            let (v, _) = fresh.iter().find(|(_, t)| *t != "C").unwrap().clone();
            let w = self.var();
            body += &format!("  forbid {{ vertex {w}: C; edge f: s({v} -> {w}); }}\n");
        }
        self.patterns.push(format!("pattern {name} {{\n{body}}}\n"));
        (name, fresh)
    }

    fn cond(&mut self, scope: &[(String, &'static str)], depth: usize) -> String {
        if depth == 0 {
            return match self.rng.gen_range(0..6) {
                0 => "TOP".into(),
                _ => self.pattern(scope, false).0,
            };
        }
        match self.rng.gen_range(0..9) {
            0 => self.pattern(scope, false).0,
            1 => {
                let (name, fresh) = self.pattern(scope, false);
                let inner: Vec<_> = scope.iter().cloned().chain(fresh).collect();
                let c = self.cond(&inner, depth - 1);
                format!("({name}, {c})")
            }
            2 => format!("!({})", self.cond(scope, depth - 1)),
            3 => format!("({}) & ({})", self.cond(scope, depth - 1), self.cond(scope, depth - 1)),
            4 | 5 => {
                let op = if self.rng.gen_bool(0.5) { "U" } else { "S" };
                let i = self.interval();
                format!("({}) {op}{i} ({})", self.cond(scope, depth - 1), self.cond(scope, depth - 1))
            }
            _ => {
                let op = if self.rng.gen_bool(0.5) { "E" } else { "O" };
                let i = self.interval();
                format!("{op}{i} ({})", self.cond(scope, depth - 1))
            }
        }
    }
}

/// A random query of bounded depth over the test type graph.
pub fn random_query(rng: &mut ChaCha8Rng, depth: usize, max_bound: u64) -> String {
    let mut g = FormulaGen { rng, patterns: Vec::new(), vars: 0, max_bound };
    let (root, fresh) = g.pattern(&[], true);
    let d = g.rng.gen_range(1..=depth);
    let cond = g.cond(&fresh, d);
    format!("{}query q = {root}, {cond}\n", g.patterns.concat())
}

pub fn instance(rng: &mut ChaCha8Rng) -> Instance {
    let snapshot = random_graph(rng, 12, 30);
    let source = random_query(rng, 3, 8);
    let latest = snapshot.elements.iter().flat_map(|e| [e.cts.ticks(), e.dts.ticks()]).flatten().max().unwrap_or(0);
    let horizon = latest + rng.gen_range(0..=4);
    Instance { snapshot, source, horizon }
}

enum Step {
    Create(ElementId),
    Delete(ElementId),
}

/// Rebuilds `snapshot` chronologically through the public mutation API,
/// calling `after` once per journal batch. Deleted elements are pruned
/// occasionally.
pub fn replay(
    snapshot: &Snapshot,
    rng: &mut ChaCha8Rng,
    prune: bool,
    mut after: impl FnMut(&mut HistoryGraph),
) -> HistoryGraph {
    let types = std::sync::Arc::new(tempoq::model::TypeGraph::new(snapshot.types.clone()).unwrap());
    let mut graph = HistoryGraph::new(types);
    let by_id: BTreeMap<ElementId, &ElementRecord> = snapshot.elements.iter().map(|e| (e.id, e)).collect();
    let mut steps: Vec<(u64, u8, ElementId, Step)> = Vec::new();
    for e in &snapshot.elements {
        let edge = e.source.is_some();
        steps.push((e.cts.ticks().unwrap(), if edge { 1 } else { 0 }, e.id, Step::Create(e.id)));
        if let Some(d) = e.dts.ticks() {
            steps.push((d, if edge { 2 } else { 3 }, e.id, Step::Delete(e.id)));
        }
    }
    steps.sort_by_key(|(t, o, id, _)| (*t, *o, *id));
    let mut map: BTreeMap<ElementId, ElementId> = BTreeMap::new();
    let mut dead: Vec<ElementId> = Vec::new();
    let mut i = 0;
    while i < steps.len() {
        let batch_end_time = steps[i].0 + rng.gen_range(0..=3);
        while i < steps.len() && steps[i].0 <= batch_end_time {
            let (t, _, _, step) = &steps[i];
            let at = TimePoint::new(*t);
            match step {
                Step::Create(id) => {
                    let e = by_id[id];
                    let new = match (e.source, e.target) {
                        (Some(s), Some(tg)) => graph.create_edge(&e.ty, map[&s], map[&tg], at).unwrap(),
                        _ => graph.create_vertex(&e.ty, e.attrs.clone(), at).unwrap(),
                    };
                    map.insert(*id, new);
                }
                Step::Delete(id) => {
                    let g = map[id];
                    if graph.get(g).is_some_and(|el| el.is_live()) {
                        graph.delete_element(g, at).unwrap();
                    }
                    dead.push(g);
                }
            }
            i += 1;
        }
        if prune && !dead.is_empty() && rng.gen_bool(0.3) {
            let victim = dead.swap_remove(rng.gen_range(0..dead.len()));
            if graph.contains(victim) {
                graph.prune_element(victim).unwrap();
            }
        }
        after(&mut graph);
    }
    graph
}
