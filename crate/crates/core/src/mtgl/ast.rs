use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::model::pattern::{Pattern, PatternDecl};
use crate::model::{ModelError, TypeGraph, TypeId};

/// A closed operator interval `[lo, hi]` with finite integer bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OpInterval {
    pub lo: u64,
    pub hi: u64,
}

impl OpInterval {
    pub fn new(lo: u64, hi: u64) -> Option<OpInterval> {
        (lo <= hi).then_some(OpInterval { lo, hi })
    }
}

impl fmt::Display for OpInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.lo, self.hi)
    }
}

/// Metric temporal graph condition. Patterns are referenced by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mtgc {
    Top,
    Exists { pattern: String, child: Box<Mtgc> },
    Not(Box<Mtgc>),
    And(Box<Mtgc>, Box<Mtgc>),
    Until { interval: OpInterval, left: Box<Mtgc>, right: Box<Mtgc> },
    Since { interval: OpInterval, left: Box<Mtgc>, right: Box<Mtgc> },
}

impl Mtgc {
    pub fn exists(pattern: &str, child: Mtgc) -> Mtgc {
        Mtgc::Exists { pattern: pattern.to_string(), child: Box::new(child) }
    }

    pub fn pattern(pattern: &str) -> Mtgc {
        Mtgc::exists(pattern, Mtgc::Top)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Mtgc) -> Mtgc {
        Mtgc::Not(Box::new(c))
    }

    pub fn and(a: Mtgc, b: Mtgc) -> Mtgc {
        Mtgc::And(Box::new(a), Box::new(b))
    }

    pub fn until(interval: OpInterval, left: Mtgc, right: Mtgc) -> Mtgc {
        Mtgc::Until { interval, left: Box::new(left), right: Box::new(right) }
    }

    pub fn since(interval: OpInterval, left: Mtgc, right: Mtgc) -> Mtgc {
        Mtgc::Since { interval, left: Box::new(left), right: Box::new(right) }
    }

    /// `◇_I c`, sugar for `⊤ U_I c`.
    pub fn eventually(interval: OpInterval, c: Mtgc) -> Mtgc {
        Mtgc::until(interval, Mtgc::Top, c)
    }

    /// `◆_I c`, sugar for `⊤ S_I c`.
    pub fn once(interval: OpInterval, c: Mtgc) -> Mtgc {
        Mtgc::since(interval, Mtgc::Top, c)
    }

    /// Nesting depth of logical and temporal operators.
    pub fn depth(&self) -> usize {
        match self {
            Mtgc::Top => 0,
            Mtgc::Exists { child, .. } | Mtgc::Not(child) => 1 + child.depth(),
            Mtgc::And(a, b) | Mtgc::Until { left: a, right: b, .. } | Mtgc::Since { left: a, right: b, .. } => {
                1 + a.depth().max(b.depth())
            }
        }
    }
}

/// One `query <name> = <root>, <condition>` declaration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub name: String,
    pub root: String,
    pub condition: Mtgc,
}

impl Query {
    /// The whole formula `∃(root, condition)`.
    pub fn formula(&self) -> Mtgc {
        Mtgc::exists(&self.root, self.condition.clone())
    }
}

/// Contents of a query file: pattern declarations followed by queries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueryFile {
    pub patterns: Vec<PatternDecl>,
    pub queries: Vec<Query>,
}

impl QueryFile {
    pub fn pattern(&self, name: &str) -> Option<&PatternDecl> {
        self.patterns.iter().find(|p| p.name == name)
    }

    pub fn query(&self, name: &str) -> Option<&Query> {
        self.queries.iter().find(|q| q.name == name)
    }

    /// Compiles every query against `types`.
    pub fn compile(&self, types: &TypeGraph) -> Result<Vec<CompiledQuery>, ModelError> {
        self.queries.iter().map(|q| CompiledQuery::new(self, q, types)).collect()
    }
}

/// A condition whose patterns are compiled against a type graph and their
/// binding context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    Top,
    Exists(Arc<Pattern>, Box<Cond>),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Until(OpInterval, Box<Cond>, Box<Cond>),
    Since(OpInterval, Box<Cond>, Box<Cond>),
}

impl Cond {
    /// Context vertices this condition refers to, sorted by name.
    pub fn free(&self) -> BTreeSet<String> {
        match self {
            Cond::Top => BTreeSet::new(),
            Cond::Exists(p, c) => {
                let mut out: BTreeSet<String> = c.free();
                for v in &p.vertices[p.bound..] {
                    out.remove(&v.name);
                }
                out.extend(p.vertices[..p.bound].iter().map(|v| v.name.clone()));
                out
            }
            Cond::Not(c) => c.free(),
            Cond::And(a, b) | Cond::Until(_, a, b) | Cond::Since(_, a, b) => {
                let mut out = a.free();
                out.extend(b.free());
                out
            }
        }
    }

    fn compile(file: &QueryFile, c: &Mtgc, types: &TypeGraph, scope: &[(String, TypeId)]) -> Result<Cond, ModelError> {
        let rec = |c: &Mtgc| Cond::compile(file, c, types, scope).map(Box::new);
        Ok(match c {
            Mtgc::Top => Cond::Top,
            Mtgc::Exists { pattern, child } => {
                let decl = file.pattern(pattern).ok_or_else(|| ModelError::InvalidPattern {
                    pattern: pattern.clone(),
                    reason: "undeclared pattern".into(),
                })?;
                let p = Pattern::compile(decl, types, scope)?;
                let mut inner = scope.to_vec();
                inner.extend(p.vertices[p.bound..].iter().map(|v| (v.name.clone(), v.ty)));
                let child = Cond::compile(file, child, types, &inner)?;
                Cond::Exists(Arc::new(p), Box::new(child))
            }
            Mtgc::Not(a) => Cond::Not(rec(a)?),
            Mtgc::And(a, b) => Cond::And(rec(a)?, rec(b)?),
            Mtgc::Until { interval, left, right } => Cond::Until(*interval, rec(left)?, rec(right)?),
            Mtgc::Since { interval, left, right } => Cond::Since(*interval, rec(left)?, rec(right)?),
        })
    }
}

/// A query ready for execution.
#[derive(Clone, Debug)]
pub struct CompiledQuery {
    pub name: String,
    pub source: Query,
    pub root: Arc<Pattern>,
    pub condition: Cond,
    pub cutoff: u64,
    pub future_horizon: u64,
}

impl CompiledQuery {
    pub fn new(file: &QueryFile, query: &Query, types: &TypeGraph) -> Result<CompiledQuery, ModelError> {
        let Cond::Exists(root, condition) = Cond::compile(file, &query.formula(), types, &[])? else {
            unreachable!("formula is an existential")
        };
        Ok(CompiledQuery {
            name: query.name.clone(),
            source: query.clone(),
            root,
            condition: *condition,
            cutoff: super::cutoff(&query.formula()),
            future_horizon: super::future_horizon(&query.formula()),
        })
    }

    /// Vertex names in scope for the condition, with their types.
    pub fn root_scope(&self) -> Vec<(String, TypeId)> {
        self.root.vertices.iter().map(|v| (v.name.clone(), v.ty)).collect()
    }
}
