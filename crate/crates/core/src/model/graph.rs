use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::types::{TypeGraph, TypeId, Value};
use super::ModelError;
use crate::interval::{Interval, TimePoint};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u64);

impl fmt::Debug for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    Vertex,
    Edge { source: ElementId, target: ElementId },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub id: ElementId,
    pub ty: TypeId,
    pub kind: ElementKind,
    pub attrs: BTreeMap<String, Value>,
    pub cts: TimePoint,
    pub dts: TimePoint,
}

impl Element {
    pub fn is_live(&self) -> bool {
        !self.dts.is_finite()
    }

    pub fn lifetime(&self) -> Interval {
        Interval::lifetime(self.cts, self.dts).expect("cts <= dts")
    }

    pub fn is_vertex(&self) -> bool {
        self.kind == ElementKind::Vertex
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    Created,
    Deleted,
    Pruned,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChangeRecord {
    pub change: Change,
    pub element: ElementId,
    pub ty: TypeId,
    pub time: TimePoint,
}

/// A typed attributed graph whose elements keep their creation and deletion
/// timestamps, plus the journal of changes since the last consumer drained it.
#[derive(Clone, Debug)]
pub struct HistoryGraph {
    types: Arc<TypeGraph>,
    elements: BTreeMap<ElementId, Element>,
    next_id: u64,
    /// Per concrete type.
    extent: Vec<BTreeSet<ElementId>>,
    out_edges: HashMap<ElementId, Vec<ElementId>>,
    in_edges: HashMap<ElementId, Vec<ElementId>>,
    attr_index: HashMap<(TypeId, String, Value), BTreeSet<ElementId>>,
    journal: Vec<ChangeRecord>,
}

impl HistoryGraph {
    pub fn new(types: Arc<TypeGraph>) -> Self {
        let n = types.len();
        HistoryGraph {
            types,
            elements: BTreeMap::new(),
            next_id: 1,
            extent: vec![BTreeSet::new(); n],
            out_edges: HashMap::new(),
            in_edges: HashMap::new(),
            attr_index: HashMap::new(),
            journal: Vec::new(),
        }
    }

    pub fn types(&self) -> &Arc<TypeGraph> {
        &self.types
    }

    pub fn create_vertex(
        &mut self,
        type_name: &str,
        attrs: impl IntoIterator<Item = (String, Value)>,
        cts: TimePoint,
    ) -> Result<ElementId, ModelError> {
        let ty = self.types.vertex_type(type_name)?;
        let id = ElementId(self.next_id);
        self.insert_vertex(id, ty, attrs.into_iter().collect(), cts, TimePoint::INFINITY)?;
        Ok(id)
    }

    pub fn create_edge(
        &mut self,
        type_name: &str,
        source: ElementId,
        target: ElementId,
        cts: TimePoint,
    ) -> Result<ElementId, ModelError> {
        let ty = self.types.edge_type(type_name)?;
        for end in [source, target] {
            let e = self.elements.get(&end).ok_or(ModelError::DanglingEndpoint(end))?;
            if !e.is_live() || !e.is_vertex() {
                return Err(ModelError::DanglingEndpoint(end));
            }
        }
        let id = ElementId(self.next_id);
        self.insert_edge(id, ty, source, target, cts, TimePoint::INFINITY)?;
        Ok(id)
    }

    fn check_attrs(&self, ty: TypeId, attrs: &BTreeMap<String, Value>) -> Result<(), ModelError> {
        for (k, v) in attrs {
            match self.types.attribute(ty, k) {
                Some(kind) if v.kind_matches(kind) => {}
                Some(_) => {
                    return Err(ModelError::AttributeKind { ty: self.types.name(ty).to_string(), attr: k.clone() })
                }
                None => {
                    return Err(ModelError::UnknownAttribute { ty: self.types.name(ty).to_string(), attr: k.clone() })
                }
            }
        }
        Ok(())
    }

    /// Inserts a vertex with explicit id and lifetime (snapshot loading).
    pub(crate) fn insert_vertex(
        &mut self,
        id: ElementId,
        ty: TypeId,
        attrs: BTreeMap<String, Value>,
        cts: TimePoint,
        dts: TimePoint,
    ) -> Result<(), ModelError> {
        if self.types.is_abstract(ty) {
            return Err(ModelError::AbstractType(self.types.name(ty).to_string()));
        }
        if !cts.is_finite() || cts > dts {
            return Err(ModelError::BadLifetime(id));
        }
        if self.elements.contains_key(&id) {
            return Err(ModelError::DuplicateId(id));
        }
        self.check_attrs(ty, &attrs)?;
        for (k, v) in &attrs {
            self.attr_index.entry((ty, k.clone(), v.clone())).or_default().insert(id);
        }
        self.extent[ty.0 as usize].insert(id);
        self.elements.insert(id, Element { id, ty, kind: ElementKind::Vertex, attrs, cts, dts });
        self.next_id = self.next_id.max(id.0 + 1);
        self.journal.push(ChangeRecord { change: Change::Created, element: id, ty, time: cts });
        Ok(())
    }

    pub(crate) fn insert_edge(
        &mut self,
        id: ElementId,
        ty: TypeId,
        source: ElementId,
        target: ElementId,
        cts: TimePoint,
        dts: TimePoint,
    ) -> Result<(), ModelError> {
        if !cts.is_finite() || cts > dts {
            return Err(ModelError::BadLifetime(id));
        }
        if self.elements.contains_key(&id) {
            return Err(ModelError::DuplicateId(id));
        }
        let (src_ty, tgt_ty) = self.types.endpoints(ty).expect("edge type");
        for (end, want) in [(source, src_ty), (target, tgt_ty)] {
            let e = self.elements.get(&end).ok_or(ModelError::DanglingEndpoint(end))?;
            if !e.is_vertex() {
                return Err(ModelError::DanglingEndpoint(end));
            }
            if !self.types.conforms(e.ty, want) {
                return Err(ModelError::EndpointType { edge: self.types.name(ty).to_string(), endpoint: end });
            }
            if cts < e.cts || dts > e.dts {
                return Err(ModelError::LifetimeContainment { edge: id, endpoint: end });
            }
        }
        self.extent[ty.0 as usize].insert(id);
        self.out_edges.entry(source).or_default().push(id);
        self.in_edges.entry(target).or_default().push(id);
        self.elements.insert(
            id,
            Element { id, ty, kind: ElementKind::Edge { source, target }, attrs: BTreeMap::new(), cts, dts },
        );
        self.next_id = self.next_id.max(id.0 + 1);
        self.journal.push(ChangeRecord { change: Change::Created, element: id, ty, time: cts });
        Ok(())
    }

    /// Sets the deletion timestamp. Deleting a vertex also deletes its live
    /// incident edges at the same time point.
    pub fn delete_element(&mut self, id: ElementId, dts: TimePoint) -> Result<(), ModelError> {
        let e = self.elements.get(&id).ok_or(ModelError::UnknownElement(id))?;
        if !e.is_live() {
            return Err(ModelError::AlreadyDeleted(id));
        }
        if !dts.is_finite() || dts < e.cts {
            return Err(ModelError::BadLifetime(id));
        }
        let mut victims = Vec::new();
        if e.is_vertex() {
            for edge in self.incident(id) {
                let ee = &self.elements[&edge];
                if ee.is_live() {
                    if dts < ee.cts {
                        return Err(ModelError::BadLifetime(edge));
                    }
                    victims.push(edge);
                }
            }
        }
        victims.push(id);
        for v in victims {
            let el = self.elements.get_mut(&v).unwrap();
            el.dts = dts;
            self.journal.push(ChangeRecord { change: Change::Deleted, element: v, ty: el.ty, time: dts });
        }
        Ok(())
    }

    pub fn lifetime(&self, id: ElementId) -> Result<Interval, ModelError> {
        self.elements.get(&id).map(Element::lifetime).ok_or(ModelError::UnknownElement(id))
    }

    /// Physically removes a deleted element. Pruning a vertex also prunes its
    /// incident edges, which are necessarily deleted as well.
    pub fn prune_element(&mut self, id: ElementId) -> Result<(), ModelError> {
        let e = self.elements.get(&id).ok_or(ModelError::UnknownElement(id))?;
        if e.is_live() {
            return Err(ModelError::PruneLive(id));
        }
        if e.is_vertex() {
            for edge in self.incident(id) {
                self.remove(edge);
            }
        }
        self.remove(id);
        Ok(())
    }

    fn remove(&mut self, id: ElementId) {
        let Some(e) = self.elements.remove(&id) else { return };
        self.extent[e.ty.0 as usize].remove(&id);
        match e.kind {
            ElementKind::Vertex => {
                for (k, v) in e.attrs {
                    let key = (e.ty, k, v);
                    if let Some(set) = self.attr_index.get_mut(&key) {
                        set.remove(&id);
                        if set.is_empty() {
                            self.attr_index.remove(&key);
                        }
                    }
                }
                self.out_edges.remove(&id);
                self.in_edges.remove(&id);
            }
            ElementKind::Edge { source, target } => {
                if let Some(v) = self.out_edges.get_mut(&source) {
                    v.retain(|x| *x != id);
                }
                if let Some(v) = self.in_edges.get_mut(&target) {
                    v.retain(|x| *x != id);
                }
            }
        }
        self.journal.push(ChangeRecord { change: Change::Pruned, element: id, ty: e.ty, time: e.dts });
    }

    fn incident(&self, v: ElementId) -> Vec<ElementId> {
        let mut out: Vec<ElementId> = self.out_edges(v).iter().chain(self.in_edges(v)).copied().collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn get(&self, id: ElementId) -> Option<&Element> {
        self.elements.get(&id)
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.elements.contains_key(&id)
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.elements.values()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn out_edges(&self, v: ElementId) -> &[ElementId] {
        self.out_edges.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn in_edges(&self, v: ElementId) -> &[ElementId] {
        self.in_edges.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Instances of exactly the concrete type `ty`.
    pub fn extent(&self, ty: TypeId) -> &BTreeSet<ElementId> {
        &self.extent[ty.0 as usize]
    }

    /// Vertices of exactly type `ty` with `attr == value`.
    pub fn lookup_attr(&self, ty: TypeId, attr: &str, value: &Value) -> Option<&BTreeSet<ElementId>> {
        self.attr_index.get(&(ty, attr.to_string(), value.clone()))
    }

    pub fn journal(&self) -> &[ChangeRecord] {
        &self.journal
    }

    pub fn take_journal(&mut self) -> Vec<ChangeRecord> {
        std::mem::take(&mut self.journal)
    }

    /// Latest finite timestamp stored on any element.
    pub fn max_timestamp(&self) -> u64 {
        self.elements.values().flat_map(|e| [e.cts, e.dts]).filter_map(TimePoint::ticks).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::types::{AttrKind, EdgeTypeDecl, TypeGraphDecl, VertexTypeDecl};
    use proptest::prelude::*;

    fn tiny_types() -> Arc<TypeGraph> {
        let mut probe = VertexTypeDecl {
            name: "Probe".into(),
            attributes: BTreeMap::new(),
            supertypes: vec![],
            is_abstract: false,
        };
        probe.attributes.insert("status".into(), AttrKind::String);
        let svc = VertexTypeDecl { name: "Svc".into(), ..probe.clone() };
        Arc::new(
            TypeGraph::new(TypeGraphDecl {
                vertex_types: vec![probe, svc],
                edge_types: vec![EdgeTypeDecl { name: "probe".into(), source: "Svc".into(), target: "Probe".into() }],
            })
            .unwrap(),
        )
    }

    fn t(v: u64) -> TimePoint {
        TimePoint::new(v)
    }

    #[test]
    fn create_and_delete() {
        let mut g = HistoryGraph::new(tiny_types());
        let p = g.create_vertex("Probe", [("status".to_string(), "sepsis".into())], t(100)).unwrap();
        assert!(g.get(p).unwrap().is_live());
        assert_eq!(g.lifetime(p).unwrap().to_string(), "[100,inf]");
        let s = g.create_vertex("Svc", [], t(60)).unwrap();
        assert!(matches!(g.create_edge("probe", s, p, t(50)), Err(ModelError::LifetimeContainment { .. })));
        let e = g.create_edge("probe", s, p, t(120)).unwrap();
        g.delete_element(s, t(130)).unwrap();
        assert_eq!(g.lifetime(e).unwrap().to_string(), "[120,130]");
        assert!(matches!(g.delete_element(s, t(140)), Err(ModelError::AlreadyDeleted(_))));
        assert!(matches!(g.delete_element(p, t(10)), Err(ModelError::BadLifetime(_))));
        assert!(matches!(g.create_edge("probe", s, p, t(140)), Err(ModelError::DanglingEndpoint(_))));
        assert!(matches!(g.create_vertex("Nope", [], t(1)), Err(ModelError::UnknownType(_))));
        assert!(matches!(
            g.create_vertex("Probe", [("colour".to_string(), "red".into())], t(1)),
            Err(ModelError::UnknownAttribute { .. })
        ));
    }

    #[test]
    fn prune_cascades_to_edges() {
        let mut g = HistoryGraph::new(tiny_types());
        let s = g.create_vertex("Svc", [], t(1)).unwrap();
        let p = g.create_vertex("Probe", [("status".to_string(), "x".into())], t(1)).unwrap();
        let e = g.create_edge("probe", s, p, t(2)).unwrap();
        assert!(matches!(g.prune_element(s), Err(ModelError::PruneLive(_))));
        g.delete_element(s, t(5)).unwrap();
        g.take_journal();
        g.prune_element(s).unwrap();
        assert!(!g.contains(e) && !g.contains(s) && g.contains(p));
        assert!(g.lifetime(s).is_err());
        assert!(g.out_edges(s).is_empty() && g.in_edges(p).is_empty());
        let journal = g.take_journal();
        assert_eq!(journal.len(), 2);
        assert!(journal.iter().all(|r| r.change == Change::Pruned));
        assert!(g.lookup_attr(g.types().lookup("Probe").unwrap(), "status", &"x".into()).is_some());
    }

    proptest! {
        #[test]
        fn edges_stay_within_endpoint_lifetimes(ops in proptest::collection::vec((0u8..4, 0usize..8, 0usize..8, 0u64..5), 1..40)) {
            let mut g = HistoryGraph::new(tiny_types());
            let mut now = 0u64;
            let mut ids: Vec<ElementId> = Vec::new();
            for (op, a, b, dt) in ops {
                now += dt;
                let pick = |i: usize| ids.get(i % ids.len().max(1)).copied();
                let _ = match op {
                    0 => g.create_vertex("Svc", [], t(now)).map(|id| ids.push(id)),
                    1 => g.create_vertex("Probe", [], t(now)).map(|id| ids.push(id)),
                    2 => match (pick(a), pick(b)) {
                        (Some(x), Some(y)) => g.create_edge("probe", x, y, t(now)).map(|id| ids.push(id)),
                        _ => Ok(()),
                    },
                    _ => match pick(a) {
                        Some(x) => g.delete_element(x, t(now)),
                        None => Ok(()),
                    },
                };
            }
            for e in g.elements() {
                if let ElementKind::Edge { source, target } = e.kind {
                    for end in [source, target] {
                        let v = g.get(end).unwrap();
                        prop_assert!(v.cts <= e.cts && e.dts <= v.dts);
                    }
                }
            }
        }
    }
}
