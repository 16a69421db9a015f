//! Typed attributed history graphs, graph patterns and pattern matching.

mod graph;
pub mod pattern;
pub mod snapshot;
mod types;

pub use graph::{Change, ChangeRecord, Element, ElementId, ElementKind, HistoryGraph};
pub use types::{AttrKind, EdgeTypeDecl, TypeGraph, TypeGraphDecl, TypeId, Value, VertexTypeDecl};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid type graph: {0}")]
    InvalidTypeGraph(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("type `{0}` is abstract")]
    AbstractType(String),
    #[error("unknown attribute `{attr}` on `{ty}`")]
    UnknownAttribute { ty: String, attr: String },
    #[error("attribute `{attr}` on `{ty}` has the wrong kind")]
    AttributeKind { ty: String, attr: String },
    #[error("edge endpoint {0:?} is missing, deleted or not a vertex")]
    DanglingEndpoint(ElementId),
    #[error("endpoint {endpoint:?} does not conform to the declared endpoint type of `{edge}`")]
    EndpointType { edge: String, endpoint: ElementId },
    #[error("lifetime of edge {edge:?} is not contained in that of endpoint {endpoint:?}")]
    LifetimeContainment { edge: ElementId, endpoint: ElementId },
    #[error("invalid lifetime for element {0:?}")]
    BadLifetime(ElementId),
    #[error("element {0:?} is already deleted")]
    AlreadyDeleted(ElementId),
    #[error("element {0:?} does not exist or was pruned")]
    UnknownElement(ElementId),
    #[error("element {0:?} is live and cannot be pruned")]
    PruneLive(ElementId),
    #[error("duplicate element id {0:?}")]
    DuplicateId(ElementId),
    #[error("invalid pattern `{pattern}`: {reason}")]
    InvalidPattern { pattern: String, reason: String },
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}
