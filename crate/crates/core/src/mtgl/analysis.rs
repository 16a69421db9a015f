use super::ast::Mtgc;

/// How long after its deletion an element can still influence the formula.
pub fn cutoff(c: &Mtgc) -> u64 {
    match c {
        Mtgc::Top => 0,
        Mtgc::Exists { child, .. } | Mtgc::Not(child) => cutoff(child),
        Mtgc::And(a, b) => cutoff(a).max(cutoff(b)),
        Mtgc::Until { interval, left, right } | Mtgc::Since { interval, left, right } => {
            interval.hi + cutoff(left).max(cutoff(right))
        }
    }
}

/// How far past a time point events can still change satisfaction there.
pub fn future_horizon(c: &Mtgc) -> u64 {
    match c {
        Mtgc::Top => 0,
        Mtgc::Exists { child, .. } | Mtgc::Not(child) => future_horizon(child),
        Mtgc::And(a, b) | Mtgc::Since { left: a, right: b, .. } => future_horizon(a).max(future_horizon(b)),
        Mtgc::Until { interval, left, right } => interval.hi + future_horizon(left).max(future_horizon(right)),
    }
}

/// Maximum cut-off over several formulas.
pub fn cutoff_all<'a>(cs: impl IntoIterator<Item = &'a Mtgc>) -> u64 {
    cs.into_iter().map(cutoff).max().unwrap_or(0)
}
