use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::model::pattern::Pattern;
use crate::model::{TypeGraph, TypeId};
use crate::mtgl::{CompiledQuery, Cond, OpInterval};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Sole,
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Top,
    Pattern(Arc<Pattern>),
    Alpha { positive: bool },
    Until(OpInterval),
    Since(OpInterval),
}

/// Where a value of a dependency's binding comes from in a pattern node row:
/// the node's own key binding or the structural match.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Src {
    Key(usize),
    Match(usize),
}

#[derive(Clone, Debug)]
pub struct Dependency {
    pub node: NodeId,
    pub role: Role,
    /// Builds the dependency's key from this node's key (and match).
    pub projection: Vec<Src>,
}

#[derive(Clone, Debug)]
pub struct GdnNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub deps: Vec<Dependency>,
    pub parents: Vec<NodeId>,
    /// Context vertices keying this node's markings, sorted by name.
    pub key: Vec<String>,
    pub key_types: Vec<TypeId>,
    /// Concrete element types whose changes make this node dirty.
    pub trigger_types: Vec<TypeId>,
    pub label: String,
}

impl GdnNode {
    pub fn pattern(&self) -> Option<&Arc<Pattern>> {
        match &self.kind {
            NodeKind::Pattern(p) => Some(p),
            _ => None,
        }
    }

    /// For pattern nodes: the key positions of the pattern's bound vertices.
    pub fn bound_from_key(&self) -> Vec<usize> {
        let p = self.pattern().expect("pattern node");
        p.vertices[..p.bound]
            .iter()
            .map(|v| self.key.iter().position(|k| *k == v.name).expect("bound vertex is keyed"))
            .collect()
    }
}

/// A temporal discrimination network for one query. Node ids are a
/// topological order: every dependency has a smaller id than its dependant.
#[derive(Clone, Debug)]
pub struct GdnNetwork {
    pub query: Arc<CompiledQuery>,
    nodes: Vec<GdnNode>,
    terminal: NodeId,
    top: Option<NodeId>,
}

impl GdnNetwork {
    pub fn build(query: Arc<CompiledQuery>, types: &TypeGraph) -> GdnNetwork {
        let mut b = Builder { types, nodes: Vec::new(), top: None };
        let terminal = b.exists(&query.root, &query.condition, &BTreeSet::new(), &[], true);
        let Builder { mut nodes, top, .. } = b;
        for i in 0..nodes.len() {
            for d in nodes[i].deps.clone() {
                nodes[d.node].parents.push(i);
            }
        }
        GdnNetwork { query, nodes, terminal, top }
    }

    pub fn nodes(&self) -> &[GdnNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &GdnNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn terminal(&self) -> NodeId {
        self.terminal
    }

    pub fn top(&self) -> Option<NodeId> {
        self.top
    }

    /// The pattern node created for the pattern named `name`.
    pub fn pattern_node(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.pattern().is_some_and(|p| p.name == name))
    }

    /// The α node depending on `child`, if any.
    pub fn alpha_over(&self, child: NodeId) -> Option<NodeId> {
        self.nodes[child].parents.iter().copied().find(|p| matches!(self.nodes[*p].kind, NodeKind::Alpha { .. }))
    }

    pub fn temporal_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Until(_) | NodeKind::Since(_))).map(|n| n.id)
    }
}

impl fmt::Display for GdnNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            let deps: Vec<String> = n.deps.iter().map(|d| format!("{}:{:?}", d.node, d.role)).collect();
            writeln!(f, "{:>3} {} [{}] <- {}", n.id, n.label, n.key.join(","), deps.join(" "))?;
        }
        Ok(())
    }
}

struct Builder<'a> {
    types: &'a TypeGraph,
    nodes: Vec<GdnNode>,
    top: Option<NodeId>,
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

impl Builder<'_> {
    fn push(&mut self, kind: NodeKind, deps: Vec<Dependency>, key: Vec<(String, TypeId)>, label: String) -> NodeId {
        let id = self.nodes.len();
        let trigger_types = match &kind {
            NodeKind::Pattern(p) => p.element_types(self.types),
            NodeKind::Alpha { .. } => {
                let mut t: Vec<TypeId> = key.iter().flat_map(|(_, ty)| self.types.conforming(*ty).to_vec()).collect();
                t.sort();
                t.dedup();
                t
            }
            _ => Vec::new(),
        };
        let (key, key_types) = key.into_iter().unzip();
        self.nodes.push(GdnNode { id, kind, deps, parents: Vec::new(), key, key_types, trigger_types, label });
        id
    }

    fn top(&mut self) -> NodeId {
        if let Some(t) = self.top {
            return t;
        }
        let t = self.push(NodeKind::Top, vec![], vec![], "TOP".into());
        self.top = Some(t);
        t
    }

    fn typed(scope: &[(String, TypeId)], names: &BTreeSet<String>) -> Vec<(String, TypeId)> {
        names
            .iter()
            .map(|n| {
                let ty = scope.iter().rev().find(|(m, _)| m == n).expect("free vertex in scope").1;
                (n.clone(), ty)
            })
            .collect()
    }

    /// Pattern node for `∃(pattern, child)` keyed by `key` (a superset of the
    /// pattern's bound vertices).
    fn exists(
        &mut self,
        pattern: &Arc<Pattern>,
        child: &Cond,
        key: &BTreeSet<String>,
        scope: &[(String, TypeId)],
        root: bool,
    ) -> NodeId {
        let key_typed = Self::typed(scope, key);
        let key_names: Vec<String> = key.iter().cloned().collect();
        let mut inner = scope.to_vec();
        inner.extend(pattern.vertices.iter().map(|v| (v.name.clone(), v.ty)));
        let mut deps = Vec::new();
        for c in conjuncts(child) {
            if *c == Cond::Top {
                // a nested `∃(n, ⊤)` needs no dependency at all
                if !root {
                    continue;
                }
                deps.push(Dependency { node: self.top(), role: Role::Sole, projection: vec![] });
                continue;
            }
            let kernel = c.free();
            let projection = kernel
                .iter()
                .map(|n| match pattern.vertex_index(n) {
                    Some(i) => Src::Match(i),
                    None => Src::Key(key_names.iter().position(|k| k == n).expect("kernel vertex keyed")),
                })
                .collect();
            let node = self.alpha(c, &kernel, &inner);
            deps.push(Dependency { node, role: Role::Sole, projection });
        }
        self.push(NodeKind::Pattern(pattern.clone()), deps, key_typed, pattern.name.clone())
    }

    /// α node with the given kernel over `c`, negations folded into polarity.
    fn alpha(&mut self, c: &Cond, kernel: &BTreeSet<String>, scope: &[(String, TypeId)]) -> NodeId {
        let mut positive = true;
        let mut c = c;
        while let Cond::Not(inner) = c {
            positive = !positive;
            c = inner;
        }
        let child = self.inner(c, scope);
        let kernel_names: Vec<String> = kernel.iter().cloned().collect();
        let projection = self.nodes[child]
            .key
            .iter()
            .map(|n| Src::Key(kernel_names.iter().position(|k| k == n).expect("child key within kernel")))
            .collect();
        let label = format!("{}α({})", if positive { "+" } else { "-" }, self.nodes[child].label);
        self.push(
            NodeKind::Alpha { positive },
            vec![Dependency { node: child, role: Role::Sole, projection }],
            Self::typed(scope, kernel),
            label,
        )
    }

    fn inner(&mut self, c: &Cond, scope: &[(String, TypeId)]) -> NodeId {
        match c {
            Cond::Top => self.top(),
            Cond::Exists(p, child) => self.exists(p, child, &c.free(), scope, false),
            Cond::And(..) => {
                let free = c.free();
                let vertices = Self::typed(scope, &free)
                    .into_iter()
                    .map(|(name, ty)| crate::model::pattern::PVertex { name, ty, consts: vec![], refs: vec![] })
                    .collect::<Vec<_>>();
                let bound = vertices.len();
                let kernel = Pattern { name: "∧".into(), vertices, edges: vec![], bound, nacs: vec![] };
                self.exists(&Arc::new(kernel), c, &free, scope, false)
            }
            Cond::Until(i, l, r) | Cond::Since(i, l, r) => {
                let kernel = c.free();
                let left = self.alpha(l, &kernel, scope);
                let right = self.alpha(r, &kernel, scope);
                let n = kernel.len();
                let ident: Vec<Src> = (0..n).map(Src::Key).collect();
                let deps = vec![
                    Dependency { node: left, role: Role::Left, projection: ident.clone() },
                    Dependency { node: right, role: Role::Right, projection: ident },
                ];
                let (kind, label) = match c {
                    Cond::Until(..) => (NodeKind::Until(*i), format!("U{i}")),
                    _ => (NodeKind::Since(*i), format!("S{i}")),
                };
                self.push(kind, deps, Self::typed(scope, &kernel), label)
            }
            Cond::Not(_) => unreachable!("negation is folded into α polarity"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{TypeGraphDecl, VertexTypeDecl};
    use crate::mtgl::parse;

    fn types() -> TypeGraph {
        let vt = |n: &str| VertexTypeDecl {
            name: n.into(),
            attributes: Default::default(),
            supertypes: vec![],
            is_abstract: false,
        };
        TypeGraph::new(TypeGraphDecl { vertex_types: vec![vt("X"), vt("Y"), vt("Z")], edge_types: vec![] }).unwrap()
    }

    fn network(src: &str) -> GdnNetwork {
        let tg = types();
        let file = parse(src).unwrap();
        let q = file.compile(&tg).unwrap().remove(0);
        GdnNetwork::build(Arc::new(q), &tg)
    }

    const PATTERNS: &str = "pattern n1 { vertex x: X; } pattern n1_1 { bind x; vertex y: Y; } \
                            pattern n1_2 { bind x; vertex z: Z; } ";

    #[test]
    fn zeta_shape() {
        let net = network(&format!("{PATTERNS} query zeta = n1, (n1_1 U<0,2> n1_2)"));
        assert_eq!(net.len(), 7);
        let n11 = net.pattern_node("n1_1").unwrap();
        let n12 = net.pattern_node("n1_2").unwrap();
        let a11 = net.alpha_over(n11).unwrap();
        let a12 = net.alpha_over(n12).unwrap();
        let u = net.temporal_nodes().next().unwrap();
        let deps: Vec<(NodeId, Role)> = net.node(u).deps.iter().map(|d| (d.node, d.role)).collect();
        assert_eq!(deps, vec![(a11, Role::Left), (a12, Role::Right)]);
        let au = net.alpha_over(u).unwrap();
        assert_eq!(net.node(net.terminal()).deps[0].node, au);
        assert_eq!(net.terminal(), net.len() - 1);
        assert_eq!(net.node(u).key, vec!["x".to_string()]);
    }

    #[test]
    fn eventually_under_negation() {
        let net = network(&format!("{PATTERNS} query q = n1, !(E<0,3600> n1_2)"));
        let n12 = net.pattern_node("n1_2").unwrap();
        let a = net.alpha_over(n12).unwrap();
        assert!(matches!(net.node(a).kind, NodeKind::Alpha { positive: true }));
        let u = net.node(a).parents[0];
        assert!(matches!(net.node(u).kind, NodeKind::Until(_)));
        let top = net.node(u).deps[0].node;
        let top_alpha = net.node(top).deps[0].node;
        assert!(matches!(net.node(top_alpha).kind, NodeKind::Top));
        let neg = net.alpha_over(u).unwrap();
        assert!(matches!(net.node(neg).kind, NodeKind::Alpha { positive: false }));
        assert_eq!(net.node(net.terminal()).deps[0].node, neg);
    }

    #[test]
    fn top_condition_has_two_nodes() {
        let net = network("pattern a { vertex x: X; } query q = a, TOP");
        assert_eq!(net.len(), 2);
        assert!(matches!(net.node(net.top().unwrap()).kind, NodeKind::Top));
    }

    #[test]
    fn double_negation_collapses() {
        let net = network(&format!("{PATTERNS} query q = n1, !!n1_1"));
        assert_eq!(net.len(), 3);
        let a = net.node(net.terminal()).deps[0].node;
        assert!(matches!(net.node(a).kind, NodeKind::Alpha { positive: true }));
    }

    #[test]
    fn conjunction_in_temporal_operand_gets_kernel_pattern() {
        let net = network(&format!("{PATTERNS} query q = n1, E<1,2> (n1_1 & !n1_2)"));
        let kernel = net.nodes().iter().find(|n| n.label == "∧").unwrap();
        assert_eq!(kernel.deps.len(), 2);
        assert_eq!(kernel.key, vec!["x".to_string()]);
        // only α nodes carry negative polarity and the network is a DAG in id order
        for n in net.nodes() {
            assert!(n.deps.iter().all(|d| d.node < n.id));
        }
    }
}
