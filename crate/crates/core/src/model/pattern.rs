//! Graph patterns with attribute constraints and negative fragments, and an
//! injective local-search matcher over a [`HistoryGraph`].

use std::collections::BTreeMap;

use super::graph::{ElementId, ElementKind, HistoryGraph};
use super::types::{TypeGraph, TypeId, Value};
use super::ModelError;

/// Right-hand side of an attribute equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttrRhs {
    Const(Value),
    Ref { vertex: String, attr: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexDecl {
    pub name: String,
    pub ty: String,
    pub constraints: Vec<(String, AttrRhs)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeDecl {
    pub name: String,
    pub ty: String,
    pub source: String,
    pub target: String,
}

/// Uncompiled pattern as written in a query file.
///
/// `bind` lists vertices taken from the enclosing context. A `forbid`
/// fragment may mention any vertex of the enclosing pattern.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PatternDecl {
    pub name: String,
    pub bind: Vec<String>,
    pub vertices: Vec<VertexDecl>,
    pub edges: Vec<EdgeDecl>,
    pub forbid: Vec<PatternDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PVertex {
    pub name: String,
    pub ty: TypeId,
    pub consts: Vec<(String, Value)>,
    /// `(attr, other vertex index, other attr)`
    pub refs: Vec<(String, usize, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PEdge {
    pub name: String,
    pub ty: TypeId,
    pub source: usize,
    pub target: usize,
}

/// A compiled pattern. Context (bound) vertices come first, in `bind` order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub name: String,
    pub vertices: Vec<PVertex>,
    pub edges: Vec<PEdge>,
    pub bound: usize,
    pub nacs: Vec<Pattern>,
}

/// One occurrence: vertex images in pattern order, then edge images.
pub type Match = Vec<ElementId>;

impl Pattern {
    /// An empty pattern, which matches exactly once.
    pub fn empty(name: &str) -> Self {
        Pattern { name: name.to_string(), vertices: vec![], edges: vec![], bound: 0, nacs: vec![] }
    }

    /// Compiles `decl` given the context vertices visible at its position.
    pub fn compile(decl: &PatternDecl, types: &TypeGraph, context: &[(String, TypeId)]) -> Result<Pattern, ModelError> {
        let err = |reason: String| ModelError::InvalidPattern { pattern: decl.name.clone(), reason };
        let mut vertices: Vec<PVertex> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for b in &decl.bind {
            let (_, ty) = context
                .iter()
                .find(|(n, _)| n == b)
                .ok_or_else(|| err(format!("bound vertex `{b}` is not in scope")))?;
            if index.insert(b.clone(), vertices.len()).is_some() {
                return Err(err(format!("vertex `{b}` bound twice")));
            }
            vertices.push(PVertex { name: b.clone(), ty: *ty, consts: vec![], refs: vec![] });
        }
        for v in &decl.vertices {
            let ty = types.vertex_type(&v.ty).map_err(|_| err(format!("unknown vertex type `{}`", v.ty)))?;
            if index.contains_key(&v.name) || context.iter().any(|(n, _)| *n == v.name) {
                return Err(err(format!("vertex `{}` shadows an existing vertex", v.name)));
            }
            index.insert(v.name.clone(), vertices.len());
            vertices.push(PVertex { name: v.name.clone(), ty, consts: vec![], refs: vec![] });
        }
        // constraints may reference any vertex of this pattern
        for v in &decl.vertices {
            let i = index[&v.name];
            for (attr, rhs) in &v.constraints {
                let kind = types
                    .attribute(vertices[i].ty, attr)
                    .ok_or_else(|| err(format!("`{}` has no attribute `{attr}`", v.ty)))?;
                match rhs {
                    AttrRhs::Const(c) => {
                        if !c.kind_matches(kind) {
                            return Err(err(format!("constant for `{}.{attr}` has the wrong kind", v.name)));
                        }
                        vertices[i].consts.push((attr.clone(), c.clone()));
                    }
                    AttrRhs::Ref { vertex, attr: other } => {
                        let j = *index
                            .get(vertex)
                            .ok_or_else(|| err(format!("unknown vertex `{vertex}` in constraint")))?;
                        if types.attribute(vertices[j].ty, other) != Some(kind) {
                            return Err(err(format!("`{vertex}.{other}` is missing or of another kind")));
                        }
                        vertices[i].refs.push((attr.clone(), j, other.clone()));
                    }
                }
            }
        }
        let mut edges = Vec::new();
        for e in &decl.edges {
            let ty = types.edge_type(&e.ty).map_err(|_| err(format!("unknown edge type `{}`", e.ty)))?;
            let (st, tt) = types.endpoints(ty).expect("edge type");
            let end = |n: &String, want: TypeId| -> Result<usize, ModelError> {
                let i = *index.get(n).ok_or_else(|| err(format!("unknown vertex `{n}` in edge `{}`", e.name)))?;
                let have = vertices[i].ty;
                // a vertex whose type can never be an endpoint is a modelling error
                if !types.conforming(have).iter().any(|c| types.conforms(*c, want)) {
                    return Err(err(format!("vertex `{n}` cannot be an endpoint of `{}`", e.ty)));
                }
                Ok(i)
            };
            edges.push(PEdge { name: e.name.clone(), ty, source: end(&e.source, st)?, target: end(&e.target, tt)? });
        }
        let scope: Vec<(String, TypeId)> = vertices.iter().map(|v| (v.name.clone(), v.ty)).collect();
        let mut nacs = Vec::new();
        for (k, f) in decl.forbid.iter().enumerate() {
            let mut f = f.clone();
            if f.name.is_empty() {
                f.name = format!("{}#forbid{k}", decl.name);
            }
            // every enclosing vertex the fragment mentions becomes bound in it
            let mut mentioned: Vec<String> = Vec::new();
            let mut mention = |n: &String| {
                if index.contains_key(n) && !mentioned.contains(n) {
                    mentioned.push(n.clone());
                }
            };
            for e in &f.edges {
                mention(&e.source);
                mention(&e.target);
            }
            for v in &f.vertices {
                for (_, rhs) in &v.constraints {
                    if let AttrRhs::Ref { vertex, .. } = rhs {
                        mention(vertex);
                    }
                }
            }
            for b in &f.bind {
                mention(b);
            }
            f.bind = mentioned;
            nacs.push(Pattern::compile(&f, types, &scope)?);
        }
        Ok(Pattern { name: decl.name.clone(), vertices, edges, bound: decl.bind.len(), nacs })
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.name == name)
    }

    pub fn arity(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }

    /// Every concrete type whose changes can affect this pattern's matches,
    /// including those of negative fragments.
    pub fn element_types(&self, types: &TypeGraph) -> Vec<TypeId> {
        let mut out = Vec::new();
        self.collect_types(types, &mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_types(&self, types: &TypeGraph, out: &mut Vec<TypeId>) {
        for v in &self.vertices {
            out.extend_from_slice(types.conforming(v.ty));
        }
        for e in &self.edges {
            out.push(e.ty);
        }
        for n in &self.nacs {
            n.collect_types(types, out);
        }
    }
}

/// All occurrences of `pattern` extending `partial` (indexed like
/// `pattern.vertices`). Deleted elements match as well.
pub fn find_matches(
    graph: &HistoryGraph,
    pattern: &Pattern,
    partial: &[Option<ElementId>],
) -> Result<Vec<Match>, ModelError> {
    let mut out = Vec::new();
    search(graph, pattern, partial, &mut |m| {
        out.push(m);
        true
    })?;
    Ok(out)
}

/// Like [`find_matches`] with bindings by vertex name.
pub fn find_matches_named(
    graph: &HistoryGraph,
    pattern: &Pattern,
    bindings: &BTreeMap<String, ElementId>,
) -> Result<Vec<Match>, ModelError> {
    let mut partial = vec![None; pattern.vertices.len()];
    for (name, id) in bindings {
        let i = pattern.vertex_index(name).ok_or_else(|| ModelError::InvalidPattern {
            pattern: pattern.name.clone(),
            reason: format!("no vertex `{name}`"),
        })?;
        partial[i] = Some(*id);
    }
    find_matches(graph, pattern, &partial)
}

/// True iff at least one occurrence extends `partial`.
pub fn has_match(graph: &HistoryGraph, pattern: &Pattern, partial: &[Option<ElementId>]) -> Result<bool, ModelError> {
    let mut found = false;
    search(graph, pattern, partial, &mut |_| {
        found = true;
        false
    })?;
    Ok(found)
}

fn search(
    graph: &HistoryGraph,
    pattern: &Pattern,
    partial: &[Option<ElementId>],
    sink: &mut dyn FnMut(Match) -> bool,
) -> Result<(), ModelError> {
    assert_eq!(partial.len(), pattern.vertices.len(), "binding arity");
    let types = graph.types();
    let mut assign: Vec<Option<ElementId>> = partial.to_vec();
    for (i, b) in partial.iter().enumerate() {
        if let Some(id) = b {
            let ok = graph.get(*id).is_some_and(|e| e.is_vertex() && types.conforms(e.ty, pattern.vertices[i].ty));
            if !ok {
                return Err(ModelError::InvalidPattern {
                    pattern: pattern.name.clone(),
                    reason: format!("binding of `{}` to {id:?} does not conform", pattern.vertices[i].name),
                });
            }
        }
    }
    let mut ids: Vec<ElementId> = assign.iter().flatten().copied().collect();
    ids.sort();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Ok(());
    }
    let mut m = Matcher { graph, pattern, sink };
    if (0..pattern.vertices.len()).all(|i| assign[i].is_none() || m.consistent(&assign, i)) && m.edges_feasible(&assign)
    {
        m.extend(&mut assign);
    }
    Ok(())
}

struct Matcher<'a, 's> {
    graph: &'a HistoryGraph,
    pattern: &'a Pattern,
    sink: &'s mut dyn FnMut(Match) -> bool,
}

enum Source {
    Adjacent { edge: usize, from_source: bool },
    Const(usize),
    Ref(usize),
    Extent,
}

impl Matcher<'_, '_> {
    /// Returns false once the sink asks to stop.
    fn extend(&mut self, assign: &mut Vec<Option<ElementId>>) -> bool {
        let Some((v, source)) = self.pick(assign) else {
            return self.finish_edges(assign, 0, &mut Vec::new());
        };
        for c in self.candidates(assign, v, &source) {
            if assign.contains(&Some(c)) {
                continue;
            }
            let Some(e) = self.graph.get(c) else { continue };
            if !self.graph.types().conforms(e.ty, self.pattern.vertices[v].ty) {
                continue;
            }
            assign[v] = Some(c);
            if self.consistent(assign, v) && self.edges_feasible(assign) && !self.extend(assign) {
                assign[v] = None;
                return false;
            }
            assign[v] = None;
        }
        true
    }

    /// The unbound vertex with the fewest candidates, ties by declaration order.
    fn pick(&self, assign: &[Option<ElementId>]) -> Option<(usize, Source)> {
        let mut best: Option<(usize, usize, Source)> = None;
        for v in 0..self.pattern.vertices.len() {
            if assign[v].is_some() {
                continue;
            }
            let (n, src) = self.estimate(assign, v);
            if best.as_ref().is_none_or(|(bn, _, _)| n < *bn) {
                best = Some((n, v, src));
            }
        }
        best.map(|(_, v, s)| (v, s))
    }

    fn estimate(&self, assign: &[Option<ElementId>], v: usize) -> (usize, Source) {
        let types = self.graph.types();
        let pv = &self.pattern.vertices[v];
        let mut best = (usize::MAX, Source::Extent);
        let offer = |n: usize, s: Source, best: &mut (usize, Source)| {
            if n < best.0 {
                *best = (n, s);
            }
        };
        for (k, e) in self.pattern.edges.iter().enumerate() {
            if e.target == v {
                if let Some(s) = assign[e.source] {
                    offer(self.graph.out_edges(s).len(), Source::Adjacent { edge: k, from_source: true }, &mut best);
                }
            }
            if e.source == v {
                if let Some(t) = assign[e.target] {
                    offer(self.graph.in_edges(t).len(), Source::Adjacent { edge: k, from_source: false }, &mut best);
                }
            }
        }
        for (k, (attr, val)) in pv.consts.iter().enumerate() {
            let n = types
                .conforming(pv.ty)
                .iter()
                .filter_map(|c| self.graph.lookup_attr(*c, attr, val))
                .map(|s| s.len())
                .sum();
            offer(n, Source::Const(k), &mut best);
        }
        for (k, (attr, j, other)) in pv.refs.iter().enumerate() {
            if let Some(o) = assign[*j] {
                let n = match self.graph.get(o).and_then(|e| e.attrs.get(other)) {
                    Some(val) => types
                        .conforming(pv.ty)
                        .iter()
                        .filter_map(|c| self.graph.lookup_attr(*c, attr, val))
                        .map(|s| s.len())
                        .sum(),
                    None => 0,
                };
                offer(n, Source::Ref(k), &mut best);
            }
        }
        if best.0 == usize::MAX {
            let n = types.conforming(pv.ty).iter().map(|c| self.graph.extent(*c).len()).sum();
            best = (n, Source::Extent);
        }
        best
    }

    fn candidates(&self, assign: &[Option<ElementId>], v: usize, source: &Source) -> Vec<ElementId> {
        let types = self.graph.types();
        let pv = &self.pattern.vertices[v];
        let by_value = |attr: &str, val: &Value| -> Vec<ElementId> {
            let mut out: Vec<ElementId> = types
                .conforming(pv.ty)
                .iter()
                .filter_map(|c| self.graph.lookup_attr(*c, attr, val))
                .flatten()
                .copied()
                .collect();
            out.sort();
            out
        };
        match source {
            Source::Adjacent { edge, from_source } => {
                let pe = &self.pattern.edges[*edge];
                let mut out: Vec<ElementId> = if *from_source {
                    let s = assign[pe.source].unwrap();
                    self.graph
                        .out_edges(s)
                        .iter()
                        .filter_map(|e| self.graph.get(*e))
                        .filter(|e| types.conforms(e.ty, pe.ty))
                        .filter_map(|e| match e.kind {
                            ElementKind::Edge { target, .. } => Some(target),
                            ElementKind::Vertex => None,
                        })
                        .collect()
                } else {
                    let t = assign[pe.target].unwrap();
                    self.graph
                        .in_edges(t)
                        .iter()
                        .filter_map(|e| self.graph.get(*e))
                        .filter(|e| types.conforms(e.ty, pe.ty))
                        .filter_map(|e| match e.kind {
                            ElementKind::Edge { source, .. } => Some(source),
                            ElementKind::Vertex => None,
                        })
                        .collect()
                };
                out.sort();
                out.dedup();
                out
            }
            Source::Const(k) => {
                let (attr, val) = &pv.consts[*k];
                by_value(attr, val)
            }
            Source::Ref(k) => {
                let (attr, j, other) = &pv.refs[*k];
                match self.graph.get(assign[*j].unwrap()).and_then(|e| e.attrs.get(other)) {
                    Some(val) => by_value(attr, val),
                    None => vec![],
                }
            }
            Source::Extent => {
                let mut out: Vec<ElementId> =
                    types.conforming(pv.ty).iter().flat_map(|c| self.graph.extent(*c)).copied().collect();
                out.sort();
                out
            }
        }
    }

    /// Attribute constraints involving `v` that can be checked now.
    fn consistent(&self, assign: &[Option<ElementId>], v: usize) -> bool {
        let attr_of = |i: usize, a: &str| self.graph.get(assign[i].unwrap()).and_then(|e| e.attrs.get(a));
        let pv = &self.pattern.vertices[v];
        for (attr, val) in &pv.consts {
            if attr_of(v, attr) != Some(val) {
                return false;
            }
        }
        for (i, u) in self.pattern.vertices.iter().enumerate() {
            if assign[i].is_none() {
                continue;
            }
            for (attr, j, other) in &u.refs {
                if (i == v || *j == v) && assign[*j].is_some() {
                    match (attr_of(i, attr), attr_of(*j, other)) {
                        (Some(a), Some(b)) if a == b => {}
                        _ => return false,
                    }
                }
            }
        }
        true
    }

    fn edge_images(&self, assign: &[Option<ElementId>], k: usize) -> Vec<ElementId> {
        let pe = &self.pattern.edges[k];
        let (Some(s), Some(t)) = (assign[pe.source], assign[pe.target]) else {
            return vec![];
        };
        let types = self.graph.types();
        let (out, inc) = (self.graph.out_edges(s), self.graph.in_edges(t));
        let scan = if out.len() <= inc.len() { out } else { inc };
        let mut found: Vec<ElementId> = scan
            .iter()
            .copied()
            .filter(|e| {
                self.graph.get(*e).is_some_and(|el| {
                    types.conforms(el.ty, pe.ty)
                        && matches!(el.kind, ElementKind::Edge { source, target } if source == s && target == t)
                })
            })
            .collect();
        found.sort();
        found
    }

    fn edges_feasible(&self, assign: &[Option<ElementId>]) -> bool {
        (0..self.pattern.edges.len()).all(|k| {
            let pe = &self.pattern.edges[k];
            assign[pe.source].is_none() || assign[pe.target].is_none() || !self.edge_images(assign, k).is_empty()
        })
    }

    fn finish_edges(&mut self, assign: &[Option<ElementId>], k: usize, used: &mut Vec<ElementId>) -> bool {
        if k == self.pattern.edges.len() {
            if !self.nacs_clear(assign) {
                return true;
            }
            let mut m: Match = assign.iter().map(|a| a.unwrap()).collect();
            m.extend_from_slice(used);
            return (self.sink)(m);
        }
        for e in self.edge_images(assign, k) {
            if used.contains(&e) {
                continue;
            }
            used.push(e);
            let go_on = self.finish_edges(assign, k + 1, used);
            used.pop();
            if !go_on {
                return false;
            }
        }
        true
    }

    fn nacs_clear(&self, assign: &[Option<ElementId>]) -> bool {
        self.pattern.nacs.iter().all(|nac| {
            let mut partial = vec![None; nac.vertices.len()];
            for (i, slot) in partial.iter_mut().enumerate().take(nac.bound) {
                let outer = self.pattern.vertex_index(&nac.vertices[i].name).expect("nac scope");
                *slot = assign[outer];
            }
            !has_match(self.graph, nac, &partial).unwrap_or(false)
        })
    }
}
