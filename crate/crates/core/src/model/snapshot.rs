//! JSON snapshots of a type graph together with a history graph.
//!
//! ```json
//! { "types": { "vertex_types": [...], "edge_types": [...] },
//!   "elements": [ { "id": 1, "type": "Probe", "attrs": {"status": "sepsis"},
//!                   "cts": 5, "dts": "inf" },
//!                 { "id": 2, "type": "probe", "source": 7, "target": 1,
//!                   "cts": 5, "dts": 7 } ] }
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::graph::{ElementId, ElementKind, HistoryGraph};
use super::types::{TypeGraph, TypeGraphDecl, Value};
use super::ModelError;
use crate::interval::TimePoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub id: ElementId,
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, Value>,
    pub cts: TimePoint,
    #[serde(default = "infinity")]
    pub dts: TimePoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<ElementId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ElementId>,
}

fn infinity() -> TimePoint {
    TimePoint::INFINITY
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub types: TypeGraphDecl,
    #[serde(default)]
    pub elements: Vec<ElementRecord>,
}

impl Snapshot {
    pub fn from_graph(graph: &HistoryGraph) -> Snapshot {
        let types = graph.types();
        let elements = graph
            .elements()
            .map(|e| {
                let (source, target) = match e.kind {
                    ElementKind::Vertex => (None, None),
                    ElementKind::Edge { source, target } => (Some(source), Some(target)),
                };
                ElementRecord {
                    id: e.id,
                    ty: types.name(e.ty).to_string(),
                    attrs: e.attrs.clone(),
                    cts: e.cts,
                    dts: e.dts,
                    source,
                    target,
                }
            })
            .collect();
        Snapshot { types: types.decl().clone(), elements }
    }

    /// Rebuilds the graph. Vertices are inserted before edges so records may
    /// appear in any order. The resulting journal lists every element.
    pub fn into_graph(self) -> Result<HistoryGraph, ModelError> {
        let types = Arc::new(TypeGraph::new(self.types)?);
        let mut g = HistoryGraph::new(types.clone());
        let mut records = self.elements;
        records.sort_by_key(|r| (r.source.is_some(), r.id));
        for r in records {
            let ty = types.lookup(&r.ty).ok_or_else(|| ModelError::UnknownType(r.ty.clone()))?;
            match (types.is_vertex_type(ty), r.source, r.target) {
                (true, None, None) => g.insert_vertex(r.id, ty, r.attrs, r.cts, r.dts)?,
                (false, Some(s), Some(t)) => {
                    if !r.attrs.is_empty() {
                        return Err(ModelError::Snapshot(format!("edge {:?} carries attributes", r.id)));
                    }
                    g.insert_edge(r.id, ty, s, t, r.cts, r.dts)?
                }
                _ => return Err(ModelError::Snapshot(format!("element {:?} has inconsistent endpoints", r.id))),
            }
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Snapshot, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Snapshot(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }
}
