use std::collections::BTreeMap;
use std::sync::Arc;

use log::warn;

use super::event::{EventKind, ShsEvent};
use crate::interval::TimePoint;
use crate::model::{ElementId, HistoryGraph, ModelError, TypeGraph, TypeGraphDecl, Value};

pub const SHS_TYPES: &str = include_str!("../../assets/shs_types.json");

pub fn shs_type_graph() -> Arc<TypeGraph> {
    let decl: TypeGraphDecl = serde_json::from_str(SHS_TYPES).expect("bundled type graph parses");
    Arc::new(TypeGraph::new(decl).expect("bundled type graph is valid"))
}

#[derive(Clone, Debug)]
struct Patient {
    pm: ElementId,
    drugs: Vec<ElementId>,
    released: bool,
    last_event: u64,
}

/// Runtime model of the smart healthcare system: one root service, one
/// monitoring service per admitted patient.
#[derive(Clone, Debug)]
pub struct ShsModel {
    graph: HistoryGraph,
    root: ElementId,
    patients: BTreeMap<String, Patient>,
    issues: BTreeMap<(String, String), (ElementId, Option<ElementId>)>,
}

impl ShsModel {
    pub fn new(types: Arc<TypeGraph>) -> Result<Self, ModelError> {
        let mut graph = HistoryGraph::new(types);
        let root = graph.create_vertex("SHSService", [], TimePoint::ZERO)?;
        Ok(ShsModel { graph, root, patients: BTreeMap::new(), issues: BTreeMap::new() })
    }

    pub fn graph(&self) -> &HistoryGraph {
        &self.graph
    }

    pub fn graph_mut(&mut self) -> &mut HistoryGraph {
        &mut self.graph
    }

    pub fn root(&self) -> ElementId {
        self.root
    }

    pub fn admitted(&self) -> usize {
        self.patients.len()
    }

    pub fn monitoring_service(&self, patient: &str) -> Option<ElementId> {
        self.patients.get(patient).map(|p| p.pm)
    }

    /// Patient id carried by a service vertex.
    pub fn patient_of(&self, service: ElementId) -> Option<String> {
        match self.graph.get(service)?.attrs.get("patientID")? {
            Value::Str(s) => Some(s.clone()),
            Value::Int(_) => None,
        }
    }

    fn momentary_probe(&mut self, service: ElementId, status: &str, at: TimePoint) -> Result<(), ModelError> {
        let p = self.graph.create_vertex("Probe", [("status".to_string(), Value::from(status))], at)?;
        self.graph.create_edge("probe", service, p, at)?;
        self.graph.delete_element(p, at)
    }

    fn service(&mut self, ty: &str, patient: &str, at: TimePoint) -> Result<ElementId, ModelError> {
        let s = self.graph.create_vertex(ty, [("patientID".to_string(), Value::from(patient))], at)?;
        self.graph.create_edge("invokes", self.root, s, at)?;
        Ok(s)
    }

    /// Reflects one log event. Returns false when the event was skipped.
    pub fn monitor(&mut self, e: &ShsEvent) -> Result<bool, ModelError> {
        let at = TimePoint::new(e.timestamp);
        let id = e.patient_id.as_str();
        match e.kind {
            EventKind::ER => {
                let pm = match self.patients.get(id) {
                    Some(p) => p.pm,
                    None => {
                        let pm = self.service("PMonitoringService", id, at)?;
                        self.patients
                            .insert(id.to_string(), Patient { pm, drugs: Vec::new(), released: false, last_event: 0 });
                        pm
                    }
                };
                self.momentary_probe(pm, "sepsis", at)?;
            }
            EventKind::IV | EventKind::RE => {
                let Some(p) = self.patients.get(id) else {
                    warn!("{} for unknown patient {id} at {}, skipped", e.kind, e.timestamp);
                    return Ok(false);
                };
                let pm = p.pm;
                if e.kind == EventKind::IV {
                    self.administer(id, at)?;
                } else {
                    self.momentary_probe(pm, "release", at)?;
                    self.patients.get_mut(id).expect("admitted").released = true;
                }
            }
        }
        self.patients.get_mut(id).expect("admitted").last_event = e.timestamp;
        Ok(true)
    }

    /// A drug service invocation delivering antibiotics to `patient`.
    fn administer(&mut self, patient: &str, at: TimePoint) -> Result<ElementId, ModelError> {
        let d = self.service("DrugService", patient, at)?;
        self.momentary_probe(d, "antibiotics", at)?;
        self.patients.get_mut(patient).expect("admitted").drugs.push(d);
        Ok(d)
    }

    pub fn has_issue(&self, patient: &str, query: &str) -> bool {
        self.issues.contains_key(&(patient.to_string(), query.to_string()))
    }

    /// Annotates the patient's monitoring service with an Issue for `query`.
    pub fn raise_issue(&mut self, patient: &str, query: &str, now: u64) -> Result<ElementId, ModelError> {
        let at = TimePoint::new(now);
        let pm = self.patients[patient].pm;
        let i = self.graph.create_vertex("Issue", [("query".to_string(), Value::from(query))], at)?;
        self.graph.create_edge("annotates", i, pm, at)?;
        self.issues.insert((patient.to_string(), query.to_string()), (i, None));
        Ok(i)
    }

    pub fn attach_effector(&mut self, patient: &str, now: u64) -> Result<ElementId, ModelError> {
        let at = TimePoint::new(now);
        let pm = self.patients[patient].pm;
        let e = self.graph.create_vertex("Effector", [], at)?;
        self.graph.create_edge("effector", pm, e, at)?;
        Ok(e)
    }

    /// Consumes an effector: antibiotics are administered and the action is
    /// recorded against the issue.
    pub fn enact(&mut self, patient: &str, query: &str, effector: ElementId, now: u64) -> Result<(), ModelError> {
        let at = TimePoint::new(now);
        self.graph.delete_element(effector, at)?;
        self.administer(patient, at)?;
        let key = (patient.to_string(), query.to_string());
        let issue = self.issues[&key].0;
        let a = self.graph.create_vertex("AdaptationAction", [], at)?;
        self.graph.create_edge("handles", a, issue, at)?;
        self.issues.insert(key, (issue, Some(a)));
        Ok(())
    }

    /// Patients released at least `settle` ago, or silent for `retention`.
    pub fn due_for_discharge(&self, now: u64, settle: u64, retention: u64) -> Vec<String> {
        self.patients
            .iter()
            .filter(|(_, p)| {
                (p.released && p.last_event.saturating_add(settle) <= now)
                    || p.last_event.saturating_add(retention) <= now
            })
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Ends every service and adaptation record of a patient.
    pub fn discharge(&mut self, patient: &str, now: u64) -> Result<(), ModelError> {
        let at = TimePoint::new(now);
        let Some(p) = self.patients.remove(patient) else { return Ok(()) };
        let keys: Vec<(String, String)> = self
            .issues
            .range((patient.to_string(), String::new())..)
            .take_while(|(k, _)| k.0 == patient)
            .map(|(k, _)| k.clone())
            .collect();
        for k in keys {
            let (issue, action) = self.issues.remove(&k).expect("listed");
            if let Some(a) = action {
                self.graph.delete_element(a, at)?;
            }
            self.graph.delete_element(issue, at)?;
        }
        for d in p.drugs {
            self.graph.delete_element(d, at)?;
        }
        self.graph.delete_element(p.pm, at)
    }

    /// Prunes every element whose relevance window `[cts, dts + kappa]`
    /// ended before `now`. Returns the number of removed elements.
    pub fn prune(&mut self, now: u64, kappa: u64) -> Result<usize, ModelError> {
        let stale: Vec<ElementId> = self
            .graph
            .elements()
            .filter(|e| e.dts.ticks().is_some_and(|d| d.saturating_add(kappa) < now))
            .map(|e| e.id)
            .collect();
        let before = self.graph.len();
        for id in stale {
            if self.graph.contains(id) {
                self.graph.prune_element(id)?;
            }
        }
        Ok(before - self.graph.len())
    }
}
