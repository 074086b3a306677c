use std::collections::{BTreeMap, BTreeSet, HashMap};

use opedit_core::corpus::{reference_from_json, reference_to_json};
use opedit_core::{apply_reference, CorrectionInstance, ErrorType, Reference, Sentence};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

pub const MAX_REFERENCES: usize = 5;
pub const MIN_REPLICATION: usize = 2;
pub const MAX_REPLICATION: usize = 4;

/// Actor recorded when matching submissions resolve a task on their own.
pub const AGREEMENT_ACTOR: &str = "agreement";

mod wire {
    use super::*;

    pub fn serialize<S: Serializer>(refs: &[Reference], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(refs.iter().map(reference_to_json))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Reference>, D::Error> {
        Vec::<Value>::deserialize(d)?
            .iter()
            .map(|v| reference_from_json(v).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Open,
    Conflicting,
    Resolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub sentence: String,
    pub error_flag: bool,
    #[serde(default)]
    pub error_types: Vec<ErrorType>,
    pub replication: usize,
    /// Raw JSON kept for export.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub annotator: String,
    #[serde(with = "wire")]
    pub references: Vec<Reference>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub expert: String,
    #[serde(with = "wire")]
    pub references: Vec<Reference>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    pub actor: String,
    pub action: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    #[serde(flatten)]
    pub spec: TaskSpec,
    pub assigned: Vec<String>,
    pub submissions: Vec<Submission>,
    pub status: Status,
    pub resolution: Option<Resolution>,
    pub revision: u64,
    pub audit: Vec<AuditEntry>,
}

impl Task {
    fn new(spec: TaskSpec) -> Self {
        Task {
            spec,
            assigned: Vec::new(),
            submissions: Vec::new(),
            status: Status::Open,
            resolution: None,
            revision: 0,
            audit: Vec::new(),
        }
    }

    pub fn sentence(&self) -> Sentence {
        Sentence::new(&self.spec.sentence)
    }

    pub fn submission(&self, annotator: &str) -> Option<&Submission> {
        self.submissions.iter().find(|s| s.annotator == annotator)
    }

    pub fn is_assigned(&self, annotator: &str) -> bool {
        self.assigned.iter().any(|a| a == annotator)
    }

    fn all_submitted(&self) -> bool {
        self.assigned.len() == self.spec.replication
            && self.assigned.iter().all(|a| self.submission(a).is_some())
    }

    /// Final references if the task is resolved, otherwise every submitted
    /// reference deduplicated by output.
    pub fn export_references(&self) -> Vec<Reference> {
        let refs = match &self.resolution {
            Some(r) => r.references.clone(),
            None => {
                let all: Vec<Reference> = self.submissions.iter().flat_map(|s| s.references.clone()).collect();
                dedupe_by_output(&self.sentence(), all)
            }
        };
        if refs.is_empty() {
            vec![Reference::empty()]
        } else {
            refs
        }
    }

    pub fn to_instance(&self) -> CorrectionInstance {
        CorrectionInstance {
            id: self.spec.id.clone(),
            sentence: self.sentence(),
            error_flag: self.spec.error_flag,
            error_types: self.spec.error_types.iter().copied().collect(),
            references: self.export_references(),
            external: self.spec.external.clone(),
        }
    }
}

/// Sentences realized by a reference set. An empty set, or an empty
/// reference, realizes the source itself.
pub fn realized_outputs(s: &Sentence, refs: &[Reference]) -> BTreeSet<String> {
    if refs.is_empty() {
        return BTreeSet::from([s.to_string()]);
    }
    refs.iter()
        .map(|r| {
            apply_reference(s, r)
                .map(|t| t.to_string())
                .unwrap_or_else(|_| s.to_string())
        })
        .collect()
}

/// Keeps the first reference for each realized sentence.
pub fn dedupe_by_output(s: &Sentence, refs: Vec<Reference>) -> Vec<Reference> {
    let mut seen = BTreeSet::new();
    refs.into_iter()
        .filter(|r| {
            let out = apply_reference(s, r).map(|t| t.to_string()).unwrap_or_default();
            seen.insert(out)
        })
        .collect()
}

/// Final reference set for a resolution, or why it is not acceptable:
/// duplicates by output are dropped, and an erroneous sentence needs at
/// least one reference that changes it while a correct one needs none.
pub fn final_references(task: &TaskSpec, refs: Vec<Reference>) -> Result<Vec<Reference>, FinalSetError> {
    let s = Sentence::new(&task.sentence);
    let changing: Vec<Reference> = refs.into_iter().filter(|r| !r.is_empty()).collect();
    match (task.error_flag, changing.is_empty()) {
        (true, true) => Err(FinalSetError::Empty),
        (true, false) => Ok(dedupe_by_output(&s, changing)),
        (false, true) => Ok(vec![Reference::empty()]),
        (false, false) => Err(FinalSetError::FlagMismatch),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FinalSetError {
    Empty,
    FlagMismatch,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairDiff {
    pub first: String,
    pub second: String,
    pub agree: bool,
    pub only_first: Vec<String>,
    pub only_second: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementDiff {
    pub task: String,
    pub agreement: bool,
    /// Realized sentences per annotator, keyed by annotator id.
    pub outputs: BTreeMap<String, BTreeSet<String>>,
    pub pairs: Vec<PairDiff>,
}

/// Compares the realized outputs of every pair of submissions. Symmetric and
/// independent of submission order: annotators are visited in id order.
pub fn diff_submissions(task: &Task) -> AgreementDiff {
    let s = task.sentence();
    let outputs: BTreeMap<String, BTreeSet<String>> = task
        .submissions
        .iter()
        .map(|sub| (sub.annotator.clone(), realized_outputs(&s, &sub.references)))
        .collect();
    let ids: Vec<&String> = outputs.keys().collect();
    let mut pairs = Vec::new();
    for (k, a) in ids.iter().enumerate() {
        for b in &ids[k + 1..] {
            let (oa, ob) = (&outputs[*a], &outputs[*b]);
            pairs.push(PairDiff {
                first: (*a).clone(),
                second: (*b).clone(),
                agree: oa == ob,
                only_first: oa.difference(ob).cloned().collect(),
                only_second: ob.difference(oa).cloned().collect(),
            });
        }
    }
    AgreementDiff {
        task: task.spec.id.clone(),
        agreement: pairs.iter().all(|p| p.agree),
        outputs,
        pairs,
    }
}

/// One persisted state change. Replaying the log in order rebuilds the state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created(TaskSpec),
    Assigned {
        task: String,
        annotator: String,
    },
    Submitted {
        task: String,
        annotator: String,
        #[serde(with = "wire")]
        references: Vec<Reference>,
    },
    Resolved {
        task: String,
        expert: String,
        #[serde(with = "wire")]
        references: Vec<Reference>,
    },
}

impl Event {
    pub fn task(&self) -> &str {
        match self {
            Event::Created(spec) => &spec.id,
            Event::Assigned { task, .. } | Event::Submitted { task, .. } | Event::Resolved { task, .. } => task,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub tasks: Vec<Task>,
    /// Where the next assignment scan starts.
    pub cursor: usize,
    /// Number of events applied so far.
    pub seq: u64,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl State {
    pub fn rebuild_index(&mut self) {
        self.index = self
            .tasks
            .iter()
            .enumerate()
            .map(|(k, t)| (t.spec.id.clone(), k))
            .collect();
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Task> {
        self.position(id).map(|k| &self.tasks[k])
    }

    /// Applies a validated event. Events that name unknown tasks are ignored,
    /// which only happens for a log edited by hand.
    pub fn apply(&mut self, ev: &Event) {
        self.seq += 1;
        let seq = self.seq;
        if let Event::Created(spec) = ev {
            if self.position(&spec.id).is_none() {
                self.index.insert(spec.id.clone(), self.tasks.len());
                let mut task = Task::new(spec.clone());
                task.audit.push(AuditEntry {
                    seq,
                    actor: "system".into(),
                    action: "created".into(),
                });
                self.tasks.push(task);
            }
            return;
        }
        let Some(k) = self.position(ev.task()) else {
            return;
        };
        let task = &mut self.tasks[k];
        task.revision += 1;
        match ev {
            Event::Created(_) => unreachable!(),
            Event::Assigned { annotator, .. } => {
                task.assigned.push(annotator.clone());
                task.audit.push(AuditEntry {
                    seq,
                    actor: annotator.clone(),
                    action: "assigned".into(),
                });
                self.cursor = k + 1;
            }
            Event::Submitted { annotator, references, .. } => {
                let sub = Submission {
                    annotator: annotator.clone(),
                    references: references.clone(),
                };
                match task.submissions.iter_mut().find(|s| &s.annotator == annotator) {
                    Some(old) => *old = sub,
                    None => task.submissions.push(sub),
                }
                task.audit.push(AuditEntry {
                    seq,
                    actor: annotator.clone(),
                    action: format!("submitted {} reference(s)", references.len()),
                });
                if task.all_submitted() {
                    let diff = diff_submissions(task);
                    let merged = task.submissions.iter().flat_map(|s| s.references.clone()).collect();
                    match final_references(&task.spec, merged) {
                        Ok(refs) if diff.agreement => {
                            task.status = Status::Resolved;
                            task.resolution = Some(Resolution {
                                expert: AGREEMENT_ACTOR.into(),
                                references: refs,
                            });
                            task.audit.push(AuditEntry {
                                seq,
                                actor: AGREEMENT_ACTOR.into(),
                                action: "resolved by agreement".into(),
                            });
                        }
                        _ => task.status = Status::Conflicting,
                    }
                }
            }
            Event::Resolved { expert, references, .. } => {
                let action = if task.status == Status::Resolved {
                    "re-resolved"
                } else {
                    "resolved"
                };
                task.status = Status::Resolved;
                task.resolution = Some(Resolution {
                    expert: expert.clone(),
                    references: references.clone(),
                });
                task.audit.push(AuditEntry {
                    seq,
                    actor: expert.clone(),
                    action: format!("{action} with {} reference(s)", references.len()),
                });
            }
        }
    }

    /// Task the annotator should work on next: one already assigned to them
    /// and not yet submitted, else the next open task (scanning round-robin
    /// from the cursor) that still needs annotators and does not have them.
    pub fn next_for(&self, annotator: &str) -> NextTask {
        if let Some(t) = self
            .tasks
            .iter()
            .find(|t| t.status == Status::Open && t.is_assigned(annotator) && t.submission(annotator).is_none())
        {
            return NextTask::Existing(t.spec.id.clone());
        }
        let n = self.tasks.len();
        (0..n)
            .map(|k| (self.cursor + k) % n)
            .map(|k| &self.tasks[k])
            .find(|t| t.status == Status::Open && t.assigned.len() < t.spec.replication && !t.is_assigned(annotator))
            .map_or(NextTask::None, |t| NextTask::Assign(t.spec.id.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NextTask {
    Existing(String),
    Assign(String),
    None,
}
