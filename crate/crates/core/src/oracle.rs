//! Brute-force pointwise evaluation of compiled queries, used to cross-check
//! the network engine on small instances.
//!
//! Truth values are tabulated on the half-tick grid: index `2t` is the point
//! `t` and index `2t+1` stands for the open segment `(t, t+1)`. Since every
//! timestamp and operator bound is an integer, truth is constant on each of
//! these cells and the tabulation is exact.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use crate::gdn::{MatchEntry, MatchReport};
use crate::interval::{FragmentedInterval, Interval, TimePoint};
use crate::model::pattern::Pattern;
use crate::model::{Element, ElementId, ElementKind, HistoryGraph};
use crate::mtgl::{CompiledQuery, Cond};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("horizon {horizon} is before the latest timestamp {latest}")]
    HorizonTooEarly { horizon: u64, latest: u64 },
}

/// Satisfaction sets per root match, restricted to `[0, horizon]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleResult {
    pub query: String,
    pub horizon: u64,
    pub matches: BTreeMap<Vec<ElementId>, FragmentedInterval>,
}

impl OracleResult {
    pub fn to_report(&self) -> MatchReport {
        let matches = self
            .matches
            .iter()
            .map(|(elements, lambda)| MatchEntry {
                elements: elements.clone(),
                lambda: lambda.clone(),
                classification: None,
            })
            .collect();
        MatchReport { query: self.query.clone(), matches }
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self.to_report()).expect("report serializes");
        v["horizon"] = self.horizon.into();
        serde_json::to_string_pretty(&v).expect("value serializes")
    }
}

type Env = BTreeMap<String, ElementId>;
type Truth = Rc<Vec<bool>>;

pub fn evaluate(graph: &HistoryGraph, query: &CompiledQuery, horizon: u64) -> Result<OracleResult, OracleError> {
    let latest = graph.max_timestamp();
    if horizon < latest {
        return Err(OracleError::HorizonTooEarly { horizon, latest });
    }
    let cells = 2 * (horizon + query.future_horizon) as usize + 3;
    let mut ctx = Ctx { graph, cells, memo: HashMap::new() };
    let mut matches = BTreeMap::new();
    for m in ctx.matches(&query.root, &Env::new()) {
        let mut env = Env::new();
        for (v, id) in query.root.vertices.iter().zip(&m) {
            env.insert(v.name.clone(), *id);
        }
        let alive = ctx.alive(&m);
        let cond = ctx.conjunction(&query.condition, &env);
        let truth: Vec<bool> = (0..cells).map(|p| alive[p] && cond[p]).collect();
        let set = assemble(&truth, 2 * horizon as usize);
        if !set.is_empty() {
            matches.insert(m, set);
        }
    }
    Ok(OracleResult { query: query.name.clone(), horizon, matches })
}

/// Differences between the oracle and an engine report clipped to the same
/// horizon, as `(match, oracle, engine)`.
pub fn diff(
    oracle: &OracleResult,
    report: &MatchReport,
) -> Vec<(Vec<ElementId>, FragmentedInterval, FragmentedInterval)> {
    let mut engine: BTreeMap<Vec<ElementId>, FragmentedInterval> = BTreeMap::new();
    for m in &report.matches {
        let clipped = m.lambda.clip(oracle.horizon);
        if !clipped.is_empty() {
            engine.insert(m.elements.clone(), clipped);
        }
    }
    let keys: BTreeSet<&Vec<ElementId>> = oracle.matches.keys().chain(engine.keys()).collect();
    keys.into_iter()
        .filter_map(|k| {
            let a = oracle.matches.get(k).cloned().unwrap_or_default();
            let b = engine.get(k).cloned().unwrap_or_default();
            (a != b).then(|| (k.clone(), a, b))
        })
        .collect()
}

fn assemble(truth: &[bool], last: usize) -> FragmentedInterval {
    let mut parts = Vec::new();
    let mut p = 0;
    while p <= last {
        if !truth[p] {
            p += 1;
            continue;
        }
        let start = p;
        while p < last && truth[p + 1] {
            p += 1;
        }
        // cell index to a real interval: even cells are points, odd cells open segments
        let (lo, lc) = if start % 2 == 0 { (start / 2, true) } else { ((start - 1) / 2, false) };
        let (hi, hc) = if p % 2 == 0 { (p / 2, true) } else { (p.div_ceil(2), false) };
        parts.push(Interval::new(TimePoint::new(lo as u64), lc, TimePoint::new(hi as u64), hc).expect("non-empty run"));
        p += 1;
    }
    FragmentedInterval::from_parts(parts)
}

struct Ctx<'a> {
    graph: &'a HistoryGraph,
    cells: usize,
    memo: HashMap<(usize, Vec<ElementId>), Truth>,
}

fn alive_at(e: &Element, cell: usize) -> bool {
    let lo = 2 * e.cts.ticks().expect("finite cts") as usize;
    match e.dts.ticks() {
        Some(d) => cell >= lo && cell <= 2 * d as usize,
        None => cell >= lo,
    }
}

fn strip(c: &Cond) -> (&Cond, bool) {
    let mut c = c;
    let mut positive = true;
    while let Cond::Not(inner) = c {
        positive = !positive;
        c = inner;
    }
    (c, positive)
}

fn conjuncts(c: &Cond) -> Vec<&Cond> {
    match c {
        Cond::And(a, b) => {
            let mut out = conjuncts(a);
            out.extend(conjuncts(b));
            out
        }
        other => vec![other],
    }
}

impl Ctx<'_> {
    fn alive(&self, ids: &[ElementId]) -> Vec<bool> {
        let els: Vec<&Element> = ids.iter().map(|i| self.graph.get(*i).expect("element")).collect();
        (0..self.cells).map(|p| els.iter().all(|e| alive_at(e, p))).collect()
    }

    fn env_ids(env: &Env, names: &BTreeSet<String>) -> Vec<ElementId> {
        names.iter().map(|n| env[n]).collect()
    }

    /// Every injective occurrence of `p` agreeing with `env` on bound vertices.
    fn matches(&self, p: &Pattern, env: &Env) -> Vec<Vec<ElementId>> {
        let vertices: Vec<&Element> = self.graph.elements().filter(|e| e.is_vertex()).collect();
        let edges: Vec<&Element> = self.graph.elements().filter(|e| !e.is_vertex()).collect();
        let mut out = Vec::new();
        let mut assign: Vec<ElementId> = Vec::new();
        self.assign_vertices(p, env, &vertices, &edges, &mut assign, &mut out);
        out
    }

    fn assign_vertices(
        &self,
        p: &Pattern,
        env: &Env,
        vertices: &[&Element],
        edges: &[&Element],
        assign: &mut Vec<ElementId>,
        out: &mut Vec<Vec<ElementId>>,
    ) {
        let types = self.graph.types();
        let k = assign.len();
        if k == p.vertices.len() {
            let attr = |i: usize, a: &str| self.graph.get(assign[i]).and_then(|e| e.attrs.get(a)).cloned();
            for (i, v) in p.vertices.iter().enumerate() {
                for (a, val) in &v.consts {
                    if attr(i, a).as_ref() != Some(val) {
                        return;
                    }
                }
                for (a, j, b) in &v.refs {
                    let (x, y) = (attr(i, a), attr(*j, b));
                    if x.is_none() || x != y {
                        return;
                    }
                }
            }
            let mut used = Vec::new();
            self.assign_edges(p, assign, edges, &mut used, out);
            return;
        }
        let pv = &p.vertices[k];
        for v in vertices {
            if k < p.bound && env.get(&pv.name) != Some(&v.id) {
                continue;
            }
            if !types.conforms(v.ty, pv.ty) || assign.contains(&v.id) {
                continue;
            }
            assign.push(v.id);
            self.assign_vertices(p, env, vertices, edges, assign, out);
            assign.pop();
        }
    }

    fn assign_edges(
        &self,
        p: &Pattern,
        vs: &[ElementId],
        edges: &[&Element],
        used: &mut Vec<ElementId>,
        out: &mut Vec<Vec<ElementId>>,
    ) {
        let k = used.len();
        if k == p.edges.len() {
            if self.nacs_hold(p, vs) {
                let mut m = vs.to_vec();
                m.extend_from_slice(used);
                out.push(m);
            }
            return;
        }
        let pe = &p.edges[k];
        for e in edges {
            let ElementKind::Edge { source, target } = e.kind else { continue };
            if source != vs[pe.source] || target != vs[pe.target] {
                continue;
            }
            if !self.graph.types().conforms(e.ty, pe.ty) || used.contains(&e.id) {
                continue;
            }
            used.push(e.id);
            self.assign_edges(p, vs, edges, used, out);
            used.pop();
        }
    }

    fn nacs_hold(&self, p: &Pattern, vs: &[ElementId]) -> bool {
        let env: Env = p.vertices.iter().map(|v| v.name.clone()).zip(vs.iter().copied()).collect();
        p.nacs.iter().all(|nac| self.matches(nac, &env).is_empty())
    }

    /// Truth of every conjunct of `c` under α semantics.
    fn conjunction(&mut self, c: &Cond, env: &Env) -> Truth {
        let mut acc = vec![true; self.cells];
        for part in conjuncts(c) {
            if *part == Cond::Top {
                continue;
            }
            let t = self.alpha(part, env, &part.free());
            for (a, b) in acc.iter_mut().zip(t.iter()) {
                *a &= *b;
            }
        }
        Rc::new(acc)
    }

    /// Kernel vertices alive and `c` (negations folded) true.
    fn alpha(&mut self, c: &Cond, env: &Env, kernel: &BTreeSet<String>) -> Truth {
        let (inner, positive) = strip(c);
        let alive = self.alive(&Self::env_ids(env, kernel));
        let v = self.holds(inner, env);
        Rc::new((0..self.cells).map(|p| alive[p] && (v[p] == positive)).collect())
    }

    fn holds(&mut self, c: &Cond, env: &Env) -> Truth {
        let key = (c as *const Cond as usize, Self::env_ids(env, &c.free()));
        if let Some(t) = self.memo.get(&key) {
            return t.clone();
        }
        let n = self.cells;
        let t: Truth = match c {
            Cond::Top => Rc::new(vec![true; n]),
            Cond::Exists(p, child) => {
                let mut acc = vec![false; n];
                for m in self.matches(p, env) {
                    let mut inner = env.clone();
                    for (v, id) in p.vertices.iter().zip(&m) {
                        inner.insert(v.name.clone(), *id);
                    }
                    let alive = self.alive(&m);
                    let cond = self.conjunction(child, &inner);
                    for p in 0..n {
                        acc[p] |= alive[p] && cond[p];
                    }
                }
                Rc::new(acc)
            }
            Cond::Not(x) => Rc::new(self.holds(x, env).iter().map(|b| !b).collect()),
            Cond::And(..) => {
                let alive = self.alive(&Self::env_ids(env, &c.free()));
                let conj = self.conjunction(c, env);
                Rc::new((0..n).map(|p| alive[p] && conj[p]).collect())
            }
            Cond::Until(i, l, r) => {
                let kernel = c.free();
                let (lt, rt) = (self.alpha(l, env, &kernel), self.alpha(r, env, &kernel));
                let (a, b) = (2 * i.lo as usize, 2 * i.hi as usize);
                Rc::new(
                    (0..n)
                        .map(|p| {
                            (p + a..=(p + b).min(n - 1)).any(|q| {
                                // a witness inside an open segment needs the left side there too
                                rt[q] && (q == p || (p..q + q % 2).all(|x| lt[x]))
                            })
                        })
                        .collect(),
                )
            }
            Cond::Since(i, l, r) => {
                let kernel = c.free();
                let (lt, rt) = (self.alpha(l, env, &kernel), self.alpha(r, env, &kernel));
                let (a, b) = (2 * i.lo as usize, 2 * i.hi as usize);
                Rc::new(
                    (0..n)
                        .map(|p| {
                            if p < a {
                                return false;
                            }
                            (p.saturating_sub(b)..=p - a)
                                .any(|q| rt[q] && (q == p || (q + 1 - q % 2..=p).all(|x| lt[x])))
                        })
                        .collect(),
                )
            }
        };
        self.memo.insert(key, t.clone());
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdn::{Engine, GdnNetwork};
    use crate::model::snapshot::Snapshot;
    use crate::mtgl::parse;
    use std::sync::Arc;

    const ZETA: &str = include_str!("../assets/zeta.tq");
    const ZETA_MODEL: &str = include_str!("../assets/zeta_model.json");

    #[test]
    fn worked_example() {
        let g = Snapshot::from_json(ZETA_MODEL).unwrap().into_graph().unwrap();
        let q = parse(ZETA).unwrap().compile(g.types()).unwrap().remove(0);
        let r = evaluate(&g, &q, 9).unwrap();
        assert_eq!(r.matches.len(), 1);
        assert_eq!(r.matches.values().next().unwrap().to_string(), "[5,9]");
        assert!(evaluate(&g, &q, 5).is_err());

        let q = Arc::new(q);
        let mut engine = Engine::new(Arc::new(GdnNetwork::build(q, g.types())), g.types().clone());
        let report = engine.execute_full(&g).unwrap();
        assert!(diff(&r, &report).is_empty());
    }

    #[test]
    fn top_holds_everywhere() {
        let g = Snapshot::from_json(ZETA_MODEL).unwrap().into_graph().unwrap();
        let src = "pattern e { } query q = e, TOP";
        let q = parse(src).unwrap().compile(g.types()).unwrap().remove(0);
        let r = evaluate(&g, &q, 12).unwrap();
        assert_eq!(r.matches.get(&vec![]).unwrap().to_string(), "[0,12]");
    }

    #[test]
    fn assemble_runs() {
        let t = [true, true, false, true, true, true, false];
        assert_eq!(assemble(&t, 6).to_string(), "[0,1)∪(1,3)");
        assert_eq!(assemble(&t, 4).to_string(), "[0,1)∪(1,2]");
    }
}
