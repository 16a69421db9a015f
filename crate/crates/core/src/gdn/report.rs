use serde::{Deserialize, Serialize};

use crate::interval::{FragmentedInterval, Interval, TimePoint};
use crate::model::ElementId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Definite,
    Pending,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub elements: Vec<ElementId>,
    pub lambda: FragmentedInterval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
}

/// Terminal matches of a query with their validity.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub query: String,
    pub matches: Vec<MatchEntry>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Classified {
    pub definite: Vec<MatchEntry>,
    pub pending: Vec<MatchEntry>,
}

/// The part of a lifespan that no future event can change any more.
pub fn definite_part(lambda: &FragmentedInterval, future_horizon: u64, now: u64) -> FragmentedInterval {
    match now.checked_sub(future_horizon) {
        Some(edge) => {
            lambda.intersect(&Interval::new(TimePoint::ZERO, true, TimePoint::new(edge), true).unwrap().into())
        }
        None => FragmentedInterval::empty(),
    }
}

/// Splits matches into those with a settled violation and those that may
/// still change.
pub fn classify_matches(report: &MatchReport, future_horizon: u64, now: u64) -> Classified {
    let mut out = Classified::default();
    for m in &report.matches {
        let mut m = m.clone();
        if definite_part(&m.lambda, future_horizon, now).is_empty() {
            m.classification = Some(Classification::Pending);
            out.pending.push(m);
        } else {
            m.classification = Some(Classification::Definite);
            out.definite.push(m);
        }
    }
    out
}

impl MatchReport {
    /// Copy with every match annotated for `now`.
    pub fn classified(&self, future_horizon: u64, now: u64) -> MatchReport {
        let c = classify_matches(self, future_horizon, now);
        let mut matches: Vec<MatchEntry> = c.definite.into_iter().chain(c.pending).collect();
        matches.sort_by(|a, b| a.elements.cmp(&b.elements));
        MatchReport { query: self.query.clone(), matches }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(lambda: &str) -> MatchReport {
        MatchReport {
            query: "q".into(),
            matches: vec![MatchEntry {
                elements: vec![ElementId(1)],
                lambda: lambda.parse().unwrap(),
                classification: None,
            }],
        }
    }

    #[test]
    fn horizon_boundary() {
        let t0 = 10_000;
        let r = report(&format!("[{t0},{t0}]"));
        assert_eq!(classify_matches(&r, 3600, t0 + 3599).pending.len(), 1);
        assert_eq!(classify_matches(&r, 3600, t0 + 3600).definite.len(), 1);
        assert_eq!(classify_matches(&r, 3600, t0 + 3601).definite.len(), 1);
        assert_eq!(classify_matches(&r, 0, t0).definite.len(), 1);
        assert_eq!(classify_matches(&r, 3600, 5).pending.len(), 1);
    }

    #[test]
    fn json_shape() {
        let r = report("[5,9]").classified(0, 9);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["matches"][0]["lambda"], "[5,9]");
        assert_eq!(v["matches"][0]["classification"], "definite");
        assert_eq!(v["matches"][0]["elements"][0], 1);
    }
}
