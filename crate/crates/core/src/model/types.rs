use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Index of a vertex or edge type inside a [`TypeGraph`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TypeId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Integer,
    String,
    Timestamp,
}

/// An attribute value. Timestamps are stored as integers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl Value {
    pub fn kind_matches(&self, kind: AttrKind) -> bool {
        match self {
            Value::Int(v) => kind == AttrKind::Integer || (kind == AttrKind::Timestamp && *v >= 0),
            Value::Str(_) => kind == AttrKind::String,
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexTypeDecl {
    pub name: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttrKind>,
    #[serde(default)]
    pub supertypes: Vec<String>,
    #[serde(default, rename = "abstract")]
    pub is_abstract: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeTypeDecl {
    pub name: String,
    pub source: String,
    pub target: String,
}

/// Serialized form of a type graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeGraphDecl {
    pub vertex_types: Vec<VertexTypeDecl>,
    #[serde(default)]
    pub edge_types: Vec<EdgeTypeDecl>,
}

#[derive(Clone, Debug)]
enum TypeShape {
    Vertex {
        /// Declared plus inherited attributes.
        attributes: BTreeMap<String, AttrKind>,
        is_abstract: bool,
    },
    Edge {
        source: TypeId,
        target: TypeId,
    },
}

#[derive(Clone, Debug)]
struct TypeInfo {
    name: String,
    shape: TypeShape,
    /// Concrete types conforming to this one, itself included (if concrete).
    conforming: Vec<TypeId>,
    /// `conforms_to[t]` for every type `t`.
    conforms_to: Vec<bool>,
}

/// Vertex and edge types with flattened subtyping.
///
/// `cts`/`dts` are implicit on every type and never declared.
#[derive(Clone, Debug)]
pub struct TypeGraph {
    decl: TypeGraphDecl,
    types: Vec<TypeInfo>,
    by_name: HashMap<String, TypeId>,
}

impl TypeGraph {
    pub fn new(decl: TypeGraphDecl) -> Result<Self, ModelError> {
        let mut by_name = HashMap::new();
        let names = decl.vertex_types.iter().map(|v| &v.name).chain(decl.edge_types.iter().map(|e| &e.name));
        for (i, name) in names.enumerate() {
            if name == "cts" || name == "dts" || name.is_empty() {
                return Err(ModelError::InvalidTypeGraph(format!("reserved type name `{name}`")));
            }
            if by_name.insert(name.clone(), TypeId(i as u32)).is_some() {
                return Err(ModelError::InvalidTypeGraph(format!("duplicate type `{name}`")));
            }
        }
        let nv = decl.vertex_types.len();
        let vertex_id = |n: &str| -> Result<TypeId, ModelError> {
            match by_name.get(n) {
                Some(id) if (id.0 as usize) < nv => Ok(*id),
                _ => Err(ModelError::InvalidTypeGraph(format!("unknown vertex type `{n}`"))),
            }
        };

        // direct supertypes, then transitive closure with cycle detection
        let mut supers: Vec<Vec<usize>> = Vec::with_capacity(nv);
        for v in &decl.vertex_types {
            let mut s = Vec::new();
            for sup in &v.supertypes {
                s.push(vertex_id(sup)?.0 as usize);
            }
            supers.push(s);
        }
        let mut ancestors = vec![vec![false; nv]; nv];
        for (t, anc) in ancestors.iter_mut().enumerate() {
            let mut stack = supers[t].clone();
            while let Some(s) = stack.pop() {
                if s == t {
                    return Err(ModelError::InvalidTypeGraph(format!(
                        "supertype cycle through `{}`",
                        decl.vertex_types[t].name
                    )));
                }
                if !anc[s] {
                    anc[s] = true;
                    stack.extend(supers[s].iter().copied());
                }
            }
        }

        let total = nv + decl.edge_types.len();
        let mut types = Vec::with_capacity(total);
        for (t, v) in decl.vertex_types.iter().enumerate() {
            let mut attributes = BTreeMap::new();
            for (a, anc) in ancestors[t].iter().enumerate() {
                if *anc {
                    for (k, kind) in &decl.vertex_types[a].attributes {
                        merge_attr(&mut attributes, k, *kind, &v.name)?;
                    }
                }
            }
            for (k, kind) in &v.attributes {
                if k == "cts" || k == "dts" {
                    return Err(ModelError::InvalidTypeGraph(format!("`{k}` is implicit on `{}`", v.name)));
                }
                merge_attr(&mut attributes, k, *kind, &v.name)?;
            }
            let mut conforms_to = vec![false; total];
            conforms_to[t] = true;
            for (a, anc) in ancestors[t].iter().enumerate() {
                conforms_to[a] |= *anc;
            }
            types.push(TypeInfo {
                name: v.name.clone(),
                shape: TypeShape::Vertex { attributes, is_abstract: v.is_abstract },
                conforming: Vec::new(),
                conforms_to,
            });
        }
        for (k, e) in decl.edge_types.iter().enumerate() {
            let id = nv + k;
            let mut conforms_to = vec![false; total];
            conforms_to[id] = true;
            types.push(TypeInfo {
                name: e.name.clone(),
                shape: TypeShape::Edge { source: vertex_id(&e.source)?, target: vertex_id(&e.target)? },
                conforming: Vec::new(),
                conforms_to,
            });
        }
        for t in 0..total {
            let concrete = |c: &TypeInfo| !matches!(c.shape, TypeShape::Vertex { is_abstract: true, .. });
            let conforming = (0..total)
                .filter(|&c| types[c].conforms_to[t] && concrete(&types[c]))
                .map(|c| TypeId(c as u32))
                .collect();
            types[t].conforming = conforming;
        }
        Ok(TypeGraph { decl, types, by_name })
    }

    pub fn decl(&self) -> &TypeGraphDecl {
        &self.decl
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<TypeId> {
        self.by_name.get(name).copied()
    }

    pub fn vertex_type(&self, name: &str) -> Result<TypeId, ModelError> {
        self.lookup(name).filter(|t| self.is_vertex_type(*t)).ok_or_else(|| ModelError::UnknownType(name.to_string()))
    }

    pub fn edge_type(&self, name: &str) -> Result<TypeId, ModelError> {
        self.lookup(name).filter(|t| !self.is_vertex_type(*t)).ok_or_else(|| ModelError::UnknownType(name.to_string()))
    }

    pub fn name(&self, t: TypeId) -> &str {
        &self.types[t.0 as usize].name
    }

    pub fn is_vertex_type(&self, t: TypeId) -> bool {
        matches!(self.types[t.0 as usize].shape, TypeShape::Vertex { .. })
    }

    pub fn is_abstract(&self, t: TypeId) -> bool {
        matches!(self.types[t.0 as usize].shape, TypeShape::Vertex { is_abstract: true, .. })
    }

    /// `sub` equals `sup` or inherits from it.
    pub fn conforms(&self, sub: TypeId, sup: TypeId) -> bool {
        self.types[sub.0 as usize].conforms_to[sup.0 as usize]
    }

    /// Concrete types whose instances match a pattern element of type `t`.
    pub fn conforming(&self, t: TypeId) -> &[TypeId] {
        &self.types[t.0 as usize].conforming
    }

    pub fn attribute(&self, t: TypeId, attr: &str) -> Option<AttrKind> {
        match &self.types[t.0 as usize].shape {
            TypeShape::Vertex { attributes, .. } => attributes.get(attr).copied(),
            TypeShape::Edge { .. } => None,
        }
    }

    /// Declared endpoint types of an edge type.
    pub fn endpoints(&self, t: TypeId) -> Option<(TypeId, TypeId)> {
        match self.types[t.0 as usize].shape {
            TypeShape::Edge { source, target } => Some((source, target)),
            TypeShape::Vertex { .. } => None,
        }
    }
}

fn merge_attr(
    into: &mut BTreeMap<String, AttrKind>,
    name: &str,
    kind: AttrKind,
    owner: &str,
) -> Result<(), ModelError> {
    match into.insert(name.to_string(), kind) {
        Some(prev) if prev != kind => {
            Err(ModelError::InvalidTypeGraph(format!("conflicting kinds for attribute `{name}` on `{owner}`")))
        }
        _ => Ok(()),
    }
}

impl Serialize for TypeGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.decl.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TypeGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        TypeGraph::new(TypeGraphDecl::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
