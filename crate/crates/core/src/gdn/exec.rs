use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use super::network::{GdnNetwork, NodeId, NodeKind, Src};
use super::report::{MatchEntry, MatchReport};
use super::rules::{alpha_lifespan, since_satisfaction, until_satisfaction};
use crate::interval::FragmentedInterval;
use crate::model::pattern::{find_matches, Match};
use crate::model::{ChangeRecord, ElementId, HistoryGraph, TypeGraph, TypeId};

pub type Binding = Vec<ElementId>;

/// One recorded match of a network node together with its lifespan.
#[derive(Clone, Debug, PartialEq)]
pub struct Marking {
    pub id: u64,
    pub lambda: FragmentedInterval,
    pub elements: Vec<ElementId>,
}

#[derive(Clone, Debug, Default)]
struct Group {
    union: FragmentedInterval,
    items: BTreeMap<Match, Marking>,
}

#[derive(Clone, Debug, Default)]
struct NodeState {
    domain: BTreeSet<Binding>,
    matches: BTreeMap<Binding, Vec<Match>>,
    groups: BTreeMap<Binding, Group>,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("graph was built over a different type graph than the network")]
    TypeGraphMismatch,
}

/// Per-node marking state, comparable across executions (ids excluded).
pub type MarkingState = Vec<BTreeMap<(Binding, Match), FragmentedInterval>>;

/// Executes one network over one history graph, keeping markings between
/// executions.
#[derive(Clone, Debug)]
pub struct Engine {
    network: Arc<GdnNetwork>,
    types: Arc<TypeGraph>,
    states: Vec<NodeState>,
    by_type: HashMap<TypeId, Vec<NodeId>>,
    next_marking: u64,
    executed: bool,
    last_dirty: usize,
}

impl Engine {
    pub fn new(network: Arc<GdnNetwork>, types: Arc<TypeGraph>) -> Engine {
        let mut by_type: HashMap<TypeId, Vec<NodeId>> = HashMap::new();
        for n in network.nodes() {
            for t in &n.trigger_types {
                by_type.entry(*t).or_default().push(n.id);
            }
        }
        let states = vec![NodeState::default(); network.len()];
        Engine { network, types, states, by_type, next_marking: 1, executed: false, last_dirty: 0 }
    }

    pub fn network(&self) -> &Arc<GdnNetwork> {
        &self.network
    }

    fn check_types(&self, graph: &HistoryGraph) -> Result<(), EngineError> {
        if Arc::ptr_eq(graph.types(), &self.types) || graph.types().decl() == self.types.decl() {
            Ok(())
        } else {
            Err(EngineError::TypeGraphMismatch)
        }
    }

    /// Recomputes every node from scratch.
    pub fn execute_full(&mut self, graph: &HistoryGraph) -> Result<MatchReport, EngineError> {
        self.check_types(graph)?;
        self.states = vec![NodeState::default(); self.network.len()];
        self.next_marking = 1;
        let dirty = vec![true; self.network.len()];
        self.run(graph, dirty);
        self.executed = true;
        Ok(self.report())
    }

    /// Recomputes the nodes affected by the journaled changes.
    pub fn execute_incremental(
        &mut self,
        graph: &HistoryGraph,
        journal: &[ChangeRecord],
    ) -> Result<MatchReport, EngineError> {
        if !self.executed {
            return self.execute_full(graph);
        }
        self.check_types(graph)?;
        let mut dirty = vec![false; self.network.len()];
        let mut seen: BTreeSet<TypeId> = BTreeSet::new();
        for r in journal {
            if seen.insert(r.ty) {
                for n in self.by_type.get(&r.ty).into_iter().flatten() {
                    dirty[*n] = true;
                }
            }
        }
        self.run(graph, dirty);
        Ok(self.report())
    }

    /// Number of nodes recomputed by the last execution.
    pub fn last_dirty_count(&self) -> usize {
        self.last_dirty
    }

    fn run(&mut self, graph: &HistoryGraph, mut structural: Vec<bool>) {
        let net = self.network.clone();
        let terminal = net.terminal();
        if self.states[terminal].domain.is_empty() {
            self.states[terminal].domain.insert(Vec::new());
            structural[terminal] = true;
        }
        if let Some(top) = net.top() {
            if self.states[top].domain.is_empty() {
                self.states[top].domain.insert(Vec::new());
                structural[top] = true;
            }
        }
        // top-down: structural matches and demanded bindings
        for n in (0..net.len()).rev() {
            if !structural[n] {
                continue;
            }
            let node = net.node(n);
            let mut demands: Vec<BTreeSet<Binding>> = vec![BTreeSet::new(); node.deps.len()];
            match &node.kind {
                NodeKind::Top => {}
                NodeKind::Pattern(p) => {
                    let bound = node.bound_from_key();
                    let mut matches = BTreeMap::new();
                    for key in &self.states[n].domain {
                        let mut partial = vec![None; p.vertices.len()];
                        for (i, k) in bound.iter().enumerate() {
                            partial[i] = Some(key[*k]);
                        }
                        let ms = find_matches(graph, p, &partial).unwrap_or_default();
                        for m in &ms {
                            for (d, dep) in node.deps.iter().enumerate() {
                                demands[d].insert(project(&dep.projection, key, m));
                            }
                        }
                        matches.insert(key.clone(), ms);
                    }
                    self.states[n].matches = matches;
                }
                NodeKind::Alpha { .. } | NodeKind::Until(_) | NodeKind::Since(_) => {
                    for key in &self.states[n].domain {
                        for (d, dep) in node.deps.iter().enumerate() {
                            demands[d].insert(project(&dep.projection, key, &[]));
                        }
                    }
                }
            }
            for (dep, demand) in node.deps.iter().zip(demands) {
                if Some(dep.node) == net.top() {
                    continue;
                }
                if self.states[dep.node].domain != demand {
                    self.states[dep.node].domain = demand;
                    structural[dep.node] = true;
                }
            }
        }
        // bottom-up: lifespans of every node depending on a changed one
        let mut dirty = structural;
        for n in 0..net.len() {
            if !dirty[n] && net.node(n).deps.iter().any(|d| dirty[d.node]) {
                dirty[n] = true;
            }
        }
        self.last_dirty = dirty.iter().filter(|d| **d).count();
        for n in (0..net.len()).filter(|&n| dirty[n]) {
            self.recompute(graph, n);
        }
    }

    fn lifetime(graph: &HistoryGraph, ids: &[ElementId]) -> FragmentedInterval {
        let mut acc = FragmentedInterval::universe();
        for id in ids {
            match graph.lifetime(*id) {
                Ok(l) => acc = acc.intersect(&l.into()),
                Err(_) => return FragmentedInterval::empty(),
            }
            if acc.is_empty() {
                break;
            }
        }
        acc
    }

    fn sat(&self, node: NodeId, key: &Binding) -> FragmentedInterval {
        self.states[node].groups.get(key).map(|g| g.union.clone()).unwrap_or_default()
    }

    fn recompute(&mut self, graph: &HistoryGraph, n: NodeId) {
        let net = self.network.clone();
        let node = net.node(n);
        let mut rows: Vec<(Binding, Match, FragmentedInterval, Vec<ElementId>)> = Vec::new();
        match &node.kind {
            NodeKind::Top => rows.push((vec![], vec![], FragmentedInterval::universe(), vec![])),
            NodeKind::Pattern(_) => {
                for (key, ms) in &self.states[n].matches {
                    for m in ms {
                        let mut lambda = Self::lifetime(graph, m);
                        for dep in &node.deps {
                            if lambda.is_empty() {
                                break;
                            }
                            lambda = lambda.intersect(&self.sat(dep.node, &project(&dep.projection, key, m)));
                        }
                        rows.push((key.clone(), m.clone(), lambda, m.clone()));
                    }
                }
            }
            NodeKind::Alpha { positive } => {
                let dep = &node.deps[0];
                for key in &self.states[n].domain {
                    let kernel = Self::lifetime(graph, key);
                    let child = self.sat(dep.node, &project(&dep.projection, key, &[]));
                    let lambda = alpha_lifespan(&kernel, [&child], *positive);
                    rows.push((key.clone(), vec![], lambda, key.clone()));
                }
            }
            NodeKind::Until(i) | NodeKind::Since(i) => {
                let (l, r) = (node.deps[0].node, node.deps[1].node);
                for key in &self.states[n].domain {
                    let (left, right) = (self.sat(l, key), self.sat(r, key));
                    let lambda = match node.kind {
                        NodeKind::Until(_) => until_satisfaction(&left, &right, *i),
                        _ => since_satisfaction(&left, &right, *i),
                    };
                    rows.push((key.clone(), vec![], lambda, key.clone()));
                }
            }
        }
        let old = std::mem::take(&mut self.states[n].groups);
        let mut groups: BTreeMap<Binding, Group> = BTreeMap::new();
        for (key, m, lambda, elements) in rows {
            if lambda.is_empty() {
                continue;
            }
            let id = match old.get(&key).and_then(|g| g.items.get(&m)) {
                Some(prev) => prev.id,
                None => {
                    self.next_marking += 1;
                    self.next_marking - 1
                }
            };
            let g = groups.entry(key).or_default();
            g.union = g.union.union(&lambda);
            g.items.insert(m, Marking { id, lambda, elements });
        }
        self.states[n].groups = groups;
    }

    /// Markings of node `n`, in key and match order.
    pub fn markings(&self, n: NodeId) -> impl Iterator<Item = &Marking> {
        self.states[n].groups.values().flat_map(|g| g.items.values())
    }

    pub fn marking_count(&self) -> usize {
        self.states.iter().flat_map(|s| s.groups.values()).map(|g| g.items.len()).sum()
    }

    pub fn marking_state(&self) -> MarkingState {
        self.states
            .iter()
            .map(|s| {
                s.groups
                    .iter()
                    .flat_map(|(k, g)| g.items.iter().map(|(m, mk)| ((k.clone(), m.clone()), mk.lambda.clone())))
                    .collect()
            })
            .collect()
    }

    pub fn report(&self) -> MatchReport {
        let matches = self
            .markings(self.network.terminal())
            .map(|m| MatchEntry { elements: m.elements.clone(), lambda: m.lambda.clone(), classification: None })
            .collect();
        MatchReport { query: self.network.query.name.clone(), matches }
    }
}

fn project(srcs: &[Src], key: &[ElementId], m: &[ElementId]) -> Binding {
    srcs.iter()
        .map(|s| match s {
            Src::Key(i) => key[*i],
            Src::Match(i) => m[*i],
        })
        .collect()
}
