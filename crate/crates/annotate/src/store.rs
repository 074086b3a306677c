//! Task store persisted as an append-only event log plus periodic snapshots.
//!
//! The data directory holds `events.jsonl` (one [`Event`] per line, never
//! rewritten) and `snapshot.json` (the state after the first `seq` events).
//! Opening a directory loads the snapshot and replays the events after it.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use opedit_core::corpus::{reference_from_json, reference_to_json, serialize_corpus};
use opedit_core::{apply_reference, normalize_reference, validate_reference, CorrectionInstance, ErrorType, Reference, Sentence};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{ApiError, ErrorCode};
use crate::task::{
    diff_submissions, final_references, AgreementDiff, Event, FinalSetError, NextTask, State, Status, Task, TaskSpec,
    MAX_REFERENCES, MAX_REPLICATION, MIN_REPLICATION,
};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const DEFAULT_REPLICATION: usize = 2;
const SNAPSHOT_EVERY: u64 = 256;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

/// Suggests a reference from a free-text correction prompt. None ship with
/// the service; deployments may plug in their own rules.
pub trait PromptConverter: Send + Sync {
    fn convert(&self, sentence: &Sentence, prompt: &str) -> Option<Reference>;
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ErrorTypes {
    Joined(String),
    List(Vec<String>),
}

impl ErrorTypes {
    fn parse(&self) -> Result<Vec<ErrorType>, String> {
        let parts: Vec<&str> = match self {
            ErrorTypes::Joined(s) => s.split([';', ',', ' ']).filter(|p| !p.is_empty()).collect(),
            ErrorTypes::List(v) => v.iter().map(String::as_str).collect(),
        };
        let mut out: Vec<ErrorType> = parts.into_iter().map(str::parse).collect::<Result<_, _>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateTask {
    pub id: String,
    pub sentence: String,
    #[serde(default = "yes")]
    pub error_flag: bool,
    #[serde(default)]
    pub error_type: Option<ErrorTypes>,
    #[serde(default)]
    pub replication: Option<usize>,
    #[serde(default)]
    pub external: Option<Value>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    pub annotator: String,
    pub references: Vec<Value>,
    /// Task revision the client last saw; a stale value is rejected.
    #[serde(default)]
    pub revision: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolveRequest {
    pub expert: String,
    pub references: Vec<Value>,
    #[serde(default)]
    pub revision: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubmitResponse {
    pub task: String,
    pub revision: u64,
    pub status: Status,
    pub references: Vec<Value>,
    pub preview: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreviewResponse {
    pub source: String,
    pub preview: Vec<String>,
    /// Minimal labels for each reference.
    pub normalized: Vec<Value>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskSummary {
    pub id: String,
    pub status: Status,
    pub assigned: usize,
    pub submissions: usize,
    pub replication: usize,
    pub revision: u64,
}

struct EventLog {
    dir: PathBuf,
    file: File,
    since_snapshot: u64,
}

impl EventLog {
    fn append(&mut self, ev: &Event) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(ev).expect("events serialize");
        line.push('\n');
        let path = self.dir.join(EVENTS_FILE);
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|source| StoreError::Io { path, source })
    }

    fn write_snapshot(&mut self, state: &State) -> Result<(), StoreError> {
        let path = self.dir.join(SNAPSHOT_FILE);
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let body = serde_json::to_vec(state).expect("state serializes");
        fs::write(&tmp, body)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|source| StoreError::Io { path, source })?;
        self.since_snapshot = 0;
        Ok(())
    }
}

struct Inner {
    state: State,
    log: Option<EventLog>,
}

pub struct Store {
    inner: RwLock<Inner>,
    converter: Option<Box<dyn PromptConverter>>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses, validates and normalizes request references. Field paths in
/// errors are relative to the request body, e.g. `references[1].Insert[0].label`.
fn parse_references(s: &Sentence, values: &[Value], field: &str) -> Result<(Vec<Reference>, Vec<String>), ApiError> {
    let mut out = Vec::with_capacity(values.len());
    let mut warnings = Vec::new();
    for (k, v) in values.iter().enumerate() {
        let here = format!("{field}[{k}]");
        let r = reference_from_json(v).map_err(|e| {
            ApiError::new(ErrorCode::InvalidReference, e.message.clone())
                .at(format!("{here}{}", e.path.trim_start_matches('$')))
        })?;
        let violations = validate_reference(s, &r);
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(ApiError::new(ErrorCode::InvalidReference, msg.join("; ")).at(here));
        }
        let norm = normalize_reference(s, &r).map_err(|e| ApiError::new(ErrorCode::InvalidReference, e.to_string()).at(&here))?;
        if norm.is_empty() && !r.is_empty() {
            warnings.push(format!("{here} does not change the sentence and was stored as an empty reference"));
        }
        out.push(norm);
    }
    Ok((out, warnings))
}

fn previews(s: &Sentence, refs: &[Reference]) -> Vec<String> {
    refs.iter()
        .map(|r| apply_reference(s, r).expect("validated").to_string())
        .collect()
}

fn check_revision(task: &Task, seen: Option<u64>) -> Result<(), ApiError> {
    match seen {
        Some(rev) if rev != task.revision => Err(ApiError::new(
            ErrorCode::RevisionConflict,
            format!("task is at revision {}, request was based on {rev}", task.revision),
        )
        .at("revision")),
        _ => Ok(()),
    }
}

/// Stateless validation and preview of one reference or a list of them.
pub fn preview(src: &str, ops: &Value) -> Result<PreviewResponse, ApiError> {
    let s = Sentence::new(src);
    if s.is_empty() {
        return Err(ApiError::new(ErrorCode::InvalidRequest, "source sentence is empty").at("src"));
    }
    let list = match ops {
        Value::Array(items) => items.clone(),
        other => vec![other.clone()],
    };
    if list.len() > MAX_REFERENCES {
        return Err(too_many(list.len(), "ops"));
    }
    let (normalized, warnings) = parse_references(&s, &list, "ops")?;
    Ok(PreviewResponse {
        source: s.to_string(),
        preview: previews(&s, &normalized),
        normalized: normalized.iter().map(reference_to_json).collect(),
        warnings,
    })
}

fn too_many(found: usize, field: &str) -> ApiError {
    ApiError::new(
        ErrorCode::TooManyReferences,
        format!("at most {MAX_REFERENCES} references are allowed, got {found}"),
    )
    .at(field)
}

impl Store {
    pub fn in_memory() -> Self {
        Store {
            inner: RwLock::new(Inner {
                state: State::default(),
                log: None,
            }),
            converter: None,
        }
    }

    /// Opens (or initializes) a data directory and replays its log.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;

        let snap_path = dir.join(SNAPSHOT_FILE);
        let mut state: State = match fs::read(&snap_path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
                path: snap_path.clone(),
                message: e.to_string(),
            })?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => State::default(),
            Err(e) => return Err(io_err(&snap_path)(e)),
        };
        state.rebuild_index();

        let log_path = dir.join(EVENTS_FILE);
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&log_path)
            .map_err(io_err(&log_path))?;
        let replayed = replay(&mut file, &log_path, &mut state)?;
        if replayed > 0 {
            tracing::info!(replayed, seq = state.seq, "replayed annotation events");
        }
        Ok(Store {
            inner: RwLock::new(Inner {
                state,
                log: Some(EventLog {
                    dir,
                    file,
                    since_snapshot: replayed,
                }),
            }),
            converter: None,
        })
    }

    pub fn with_converter(mut self, converter: Box<dyn PromptConverter>) -> Self {
        self.converter = Some(converter);
        self
    }

    /// Suggestion from the configured prompt converter, if any.
    pub fn suggest(&self, id: &str, prompt: &str) -> Result<Option<Value>, ApiError> {
        let task = self.task(id)?;
        Ok(self
            .converter
            .as_ref()
            .and_then(|c| c.convert(&task.sentence(), prompt))
            .filter(|r| validate_reference(&task.sentence(), r).is_empty())
            .map(|r| reference_to_json(&r)))
    }

    /// Writes a snapshot now, if the store is persistent.
    pub fn snapshot(&self) -> Result<(), StoreError> {
        let mut inner = self.inner.write();
        let Inner { state, log } = &mut *inner;
        match log {
            Some(log) => log.write_snapshot(state),
            None => Ok(()),
        }
    }

    fn commit(inner: &mut Inner, ev: Event) -> Result<(), ApiError> {
        if let Some(log) = &mut inner.log {
            log.append(&ev).map_err(ApiError::storage)?;
        }
        inner.state.apply(&ev);
        if let Some(log) = &mut inner.log {
            log.since_snapshot += 1;
            if log.since_snapshot >= SNAPSHOT_EVERY {
                if let Err(e) = log.write_snapshot(&inner.state) {
                    tracing::warn!(error = %e, "snapshot failed; the event log remains authoritative");
                }
            }
        }
        Ok(())
    }

    pub fn create_task(&self, req: CreateTask) -> Result<Task, ApiError> {
        let spec = task_spec(req)?;
        let mut inner = self.inner.write();
        if inner.state.position(&spec.id).is_some() {
            return Err(ApiError::new(ErrorCode::DuplicateTask, format!("task {:?} already exists", spec.id)).at("id"));
        }
        let id = spec.id.clone();
        Self::commit(&mut inner, Event::Created(spec))?;
        Ok(inner.state.get(&id).expect("just created").clone())
    }

    /// Creates one task per instance, skipping ids that already exist.
    /// Returns the number of tasks created.
    pub fn import(&self, instances: &[CorrectionInstance], replication: usize) -> Result<usize, ApiError> {
        check_replication(replication)?;
        let mut inner = self.inner.write();
        let mut created = 0;
        for inst in instances {
            if inner.state.position(&inst.id).is_some() {
                continue;
            }
            let spec = TaskSpec {
                id: inst.id.clone(),
                sentence: inst.sentence.to_string(),
                error_flag: inst.error_flag,
                error_types: inst.error_types.iter().copied().collect(),
                replication,
                external: inst.external.clone(),
            };
            Self::commit(&mut inner, Event::Created(spec))?;
            created += 1;
        }
        Ok(created)
    }

    pub fn task(&self, id: &str) -> Result<Task, ApiError> {
        self.inner.read().state.get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    pub fn list(&self, status: Option<Status>) -> Vec<TaskSummary> {
        self.inner
            .read()
            .state
            .tasks
            .iter()
            .filter(|t| status.map_or(true, |s| t.status == s))
            .map(|t| TaskSummary {
                id: t.spec.id.clone(),
                status: t.status,
                assigned: t.assigned.len(),
                submissions: t.submissions.len(),
                replication: t.spec.replication,
                revision: t.revision,
            })
            .collect()
    }

    pub fn next_task(&self, annotator: &str) -> Result<Task, ApiError> {
        if annotator.trim().is_empty() {
            return Err(ApiError::new(ErrorCode::InvalidRequest, "annotator id is empty").at("annotator"));
        }
        let mut inner = self.inner.write();
        let id = match inner.state.next_for(annotator) {
            NextTask::Existing(id) => id,
            NextTask::Assign(id) => {
                Self::commit(
                    &mut inner,
                    Event::Assigned {
                        task: id.clone(),
                        annotator: annotator.to_string(),
                    },
                )?;
                id
            }
            NextTask::None => {
                return Err(ApiError::new(
                    ErrorCode::NoTaskAvailable,
                    format!("no open task needs annotator {annotator:?}"),
                ))
            }
        };
        Ok(inner.state.get(&id).expect("known task").clone())
    }

    pub fn submit(&self, id: &str, req: SubmitRequest) -> Result<SubmitResponse, ApiError> {
        if req.references.len() > MAX_REFERENCES {
            return Err(too_many(req.references.len(), "references"));
        }
        let mut inner = self.inner.write();
        let task = inner.state.get(id).ok_or_else(|| ApiError::not_found(id))?;
        if !task.is_assigned(&req.annotator) {
            return Err(ApiError::new(
                ErrorCode::NotAssigned,
                format!("annotator {:?} is not assigned to task {id:?}", req.annotator),
            )
            .at("annotator"));
        }
        if task.status == Status::Resolved {
            return Err(ApiError::new(ErrorCode::TaskResolved, format!("task {id:?} is already resolved")));
        }
        check_revision(task, req.revision)?;
        let s = task.sentence();
        let (refs, warnings) = parse_references(&s, &req.references, "references")?;
        let preview = previews(&s, &refs);
        let json = refs.iter().map(reference_to_json).collect();
        Self::commit(
            &mut inner,
            Event::Submitted {
                task: id.to_string(),
                annotator: req.annotator,
                references: refs,
            },
        )?;
        let task = inner.state.get(id).expect("known task");
        Ok(SubmitResponse {
            task: id.to_string(),
            revision: task.revision,
            status: task.status,
            references: json,
            preview,
            warnings,
        })
    }

    pub fn diff(&self, id: &str) -> Result<AgreementDiff, ApiError> {
        let inner = self.inner.read();
        let task = inner.state.get(id).ok_or_else(|| ApiError::not_found(id))?;
        if task.submissions.len() < 2 {
            return Err(ApiError::new(
                ErrorCode::InsufficientSubmissions,
                format!("task {id:?} has {} submission(s); at least 2 are needed", task.submissions.len()),
            ));
        }
        Ok(diff_submissions(task))
    }

    pub fn resolve(&self, id: &str, req: ResolveRequest) -> Result<Task, ApiError> {
        if req.expert.trim().is_empty() {
            return Err(ApiError::new(ErrorCode::InvalidRequest, "expert id is empty").at("expert"));
        }
        let mut inner = self.inner.write();
        let task = inner.state.get(id).ok_or_else(|| ApiError::not_found(id))?;
        check_revision(task, req.revision)?;
        let (refs, _) = parse_references(&task.sentence(), &req.references, "references")?;
        let refs = final_references(&task.spec, refs).map_err(|e| match e {
            FinalSetError::Empty => ApiError::new(
                ErrorCode::EmptyResolution,
                "an erroneous sentence needs at least one reference that changes it",
            )
            .at("references"),
            FinalSetError::FlagMismatch => ApiError::new(
                ErrorCode::FlagMismatch,
                "the sentence is marked correct, so no reference may change it",
            )
            .at("references"),
        })?;
        if refs.len() > MAX_REFERENCES {
            return Err(too_many(refs.len(), "references"));
        }
        Self::commit(
            &mut inner,
            Event::Resolved {
                task: id.to_string(),
                expert: req.expert,
                references: refs,
            },
        )?;
        Ok(inner.state.get(id).expect("known task").clone())
    }

    /// FCGEC JSON of resolved tasks, or of every task when `all` is set.
    pub fn export(&self, all: bool) -> String {
        let inner = self.inner.read();
        let instances: Vec<CorrectionInstance> = inner
            .state
            .tasks
            .iter()
            .filter(|t| all || t.status == Status::Resolved)
            .map(Task::to_instance)
            .collect();
        serialize_corpus(&instances).expect("instances serialize")
    }
}

fn check_replication(r: usize) -> Result<(), ApiError> {
    if (MIN_REPLICATION..=MAX_REPLICATION).contains(&r) {
        Ok(())
    } else {
        Err(ApiError::new(
            ErrorCode::InvalidRequest,
            format!("replication must be between {MIN_REPLICATION} and {MAX_REPLICATION}, got {r}"),
        )
        .at("replication"))
    }
}

fn task_spec(req: CreateTask) -> Result<TaskSpec, ApiError> {
    if req.id.trim().is_empty() {
        return Err(ApiError::new(ErrorCode::InvalidRequest, "task id is empty").at("id"));
    }
    if req.sentence.is_empty() {
        return Err(ApiError::new(ErrorCode::InvalidRequest, "sentence is empty").at("sentence"));
    }
    let replication = req.replication.unwrap_or(DEFAULT_REPLICATION);
    check_replication(replication)?;
    let error_types = match &req.error_type {
        Some(t) => t
            .parse()
            .map_err(|e| ApiError::new(ErrorCode::InvalidRequest, e).at("error_type"))?,
        None => Vec::new(),
    };
    Ok(TaskSpec {
        id: req.id,
        sentence: req.sentence,
        error_flag: req.error_flag,
        error_types,
        replication,
        external: req.external.map(|v| v.to_string()),
    })
}

/// Applies the log lines after the snapshot. A torn final line (from a
/// crash mid-append) is cut off; anything else unreadable is an error.
fn replay(file: &mut File, path: &Path, state: &mut State) -> Result<u64, StoreError> {
    file.seek(SeekFrom::Start(0)).map_err(io_err(path))?;
    let mut reader = BufReader::new(&*file);
    let mut line = Vec::new();
    let (mut offset, mut lineno, mut replayed) = (0u64, 0u64, 0u64);
    let skip = state.seq;
    let mut torn_at = None;
    loop {
        line.clear();
        let read = reader.read_until(b'\n', &mut line).map_err(io_err(path))?;
        if read == 0 {
            break;
        }
        let complete = line.last() == Some(&b'\n');
        lineno += 1;
        if lineno > skip {
            match serde_json::from_slice::<Event>(&line) {
                Ok(ev) if complete => {
                    state.apply(&ev);
                    replayed += 1;
                }
                _ if !complete => {
                    torn_at = Some(offset);
                    break;
                }
                Ok(_) => unreachable!(),
                Err(e) => {
                    return Err(StoreError::Corrupt {
                        path: path.to_path_buf(),
                        message: format!("line {lineno}: {e}"),
                    })
                }
            }
        }
        offset += read as u64;
    }
    if lineno < skip {
        return Err(StoreError::Corrupt {
            path: path.to_path_buf(),
            message: format!("snapshot covers {skip} events but the log has {lineno}"),
        });
    }
    if let Some(at) = torn_at {
        tracing::warn!(offset = at, "discarding incomplete final log line");
        file.set_len(at).map_err(io_err(path))?;
    }
    Ok(replayed)
}
