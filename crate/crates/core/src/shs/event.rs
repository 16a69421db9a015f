use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// Sepsis triage at the emergency room.
    ER,
    /// Intravenous antibiotics.
    IV,
    /// Release from the ward.
    RE,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::ER => "ER",
            EventKind::IV => "IV",
            EventKind::RE => "RE",
        })
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ER" => Ok(EventKind::ER),
            "IV" => Ok(EventKind::IV),
            "RE" => Ok(EventKind::RE),
            other => Err(format!("unknown event `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShsEvent {
    pub kind: EventKind,
    pub patient_id: String,
    pub timestamp: u64,
}

impl ShsEvent {
    pub fn new(kind: EventKind, patient_id: impl Into<String>, timestamp: u64) -> Self {
        ShsEvent { kind, patient_id: patient_id.into(), timestamp }
    }
}
