//! FCGEC JSON reading and writing.
//!
//! The top level maps instance ids to records:
//!
//! ```json
//! {"1": {"sentence": "...", "error_flag": 1, "error_type": "IWO",
//!        "operation": [{"Switch": [0, 2, 1, 3, 4]}], "external": ...}}
//! ```
//!
//! `operation` may also arrive as a string holding that JSON array. Insert
//! and Modify items carry a `tag` of the form `INS_k` (k inserted characters)
//! or `MOD_k` (k replaced characters) and a `label` that is either a string
//! or a list of strings whose concatenation is the generated text.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;

use indexmap::IndexMap;
use serde::Deserialize;
use serde_json::value::RawValue;
use serde_json::{json, Map, Value};

use crate::model::{CorrectionInstance, ErrorType, Insert, Modify, Reference, Sentence};

/// A record that does not follow the schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaError {
    pub id: String,
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "record {}: {}: {}", self.id, self.path, self.message)
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("reading corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus is not a JSON object of records: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Collect per-record failures instead of stopping at the first one.
    pub lenient: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ParseOutcome {
    pub instances: Vec<CorrectionInstance>,
    pub failures: Vec<SchemaError>,
}

#[derive(Deserialize)]
struct RawRecord {
    sentence: Option<Value>,
    error_flag: Option<Value>,
    error_type: Option<Value>,
    operation: Option<Value>,
    external: Option<Box<RawValue>>,
}

pub fn parse_corpus<R: Read>(mut reader: R, opts: ParseOptions) -> Result<ParseOutcome, CorpusError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_corpus_str(&text, opts)
}

pub fn parse_corpus_str(text: &str, opts: ParseOptions) -> Result<ParseOutcome, CorpusError> {
    let records: IndexMap<String, Box<RawValue>> = serde_json::from_str(text)?;
    let mut out = ParseOutcome::default();
    for (id, raw) in records {
        match parse_record(&id, raw.get()) {
            Ok(inst) => out.instances.push(inst),
            Err(e) if opts.lenient => out.failures.push(e),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

struct Ctx<'a> {
    id: &'a str,
}

impl Ctx<'_> {
    fn err(&self, path: impl Into<String>, message: impl Into<String>) -> SchemaError {
        SchemaError {
            id: self.id.to_string(),
            path: path.into(),
            message: message.into(),
        }
    }
}

fn parse_record(id: &str, raw: &str) -> Result<CorrectionInstance, SchemaError> {
    let cx = Ctx { id };
    let rec: RawRecord = serde_json::from_str(raw).map_err(|e| cx.err("$", e.to_string()))?;

    let sentence = match rec.sentence {
        Some(Value::String(s)) if !s.is_empty() => Sentence::new(&s),
        Some(Value::String(_)) => return Err(cx.err("sentence", "sentence is empty")),
        Some(_) => return Err(cx.err("sentence", "expected a string")),
        None => return Err(cx.err("sentence", "missing field")),
    };

    let error_flag = match rec.error_flag {
        Some(Value::Bool(b)) => b,
        Some(Value::Number(n)) if n.as_u64() == Some(0) => false,
        Some(Value::Number(n)) if n.as_u64() == Some(1) => true,
        Some(_) => return Err(cx.err("error_flag", "expected a boolean or 0/1")),
        None => return Err(cx.err("error_flag", "missing field")),
    };

    let error_types = parse_error_types(&cx, rec.error_type.as_ref())?;

    let operations = match rec.operation {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::String(s)) if s.trim().is_empty() => Vec::new(),
        Some(Value::String(s)) => match serde_json::from_str::<Value>(&s) {
            Ok(Value::Array(a)) => a,
            Ok(_) => return Err(cx.err("operation", "embedded operation text is not a JSON array")),
            Err(e) => return Err(cx.err("operation", format!("embedded operation text: {e}"))),
        },
        Some(Value::Array(a)) => a,
        Some(_) => return Err(cx.err("operation", "expected an array")),
    };
    let references = operations
        .iter()
        .enumerate()
        .map(|(k, v)| parse_reference_at(&cx, &format!("operation[{k}]"), v))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(CorrectionInstance {
        id: id.to_string(),
        sentence,
        error_flag,
        error_types,
        references,
        external: rec.external.map(|r| r.get().to_string()),
    })
}

fn parse_error_types(cx: &Ctx<'_>, v: Option<&Value>) -> Result<BTreeSet<ErrorType>, SchemaError> {
    let names: Vec<String> = match v {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::String(s)) => s
            .split([';', ',', ' '])
            .filter(|p| !p.trim().is_empty())
            .map(str::to_string)
            .collect(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(k, it)| {
                it.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| cx.err(format!("error_type[{k}]"), "expected a string"))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(cx.err("error_type", "expected a string or a list of strings")),
    };
    names
        .iter()
        .map(|n| n.parse::<ErrorType>().map_err(|e| cx.err("error_type", e)))
        .collect()
}

/// Parses one reference object, e.g. `{"Delete": [3]}`.
pub fn reference_from_json(v: &Value) -> Result<Reference, SchemaError> {
    parse_reference_at(&Ctx { id: "-" }, "$", v)
}

fn parse_reference_at(cx: &Ctx<'_>, path: &str, v: &Value) -> Result<Reference, SchemaError> {
    let obj = v
        .as_object()
        .ok_or_else(|| cx.err(path, "expected an object"))?;
    let mut r = Reference::empty();
    for (key, val) in obj {
        let here = format!("{path}.{key}");
        match key.as_str() {
            "Switch" => r.switch = Some(index_list(cx, &here, val)?),
            "Delete" => r.deletes = index_list(cx, &here, val)?,
            "Insert" => {
                for (k, item) in items(cx, &here, val)?.iter().enumerate() {
                    let (pos, count, label) = parse_item(cx, &format!("{here}[{k}]"), item, "INS_")?;
                    if count != label.len() {
                        return Err(cx.err(
                            format!("{here}[{k}].label"),
                            format!("tag declares {count} characters but label has {}", label.len()),
                        ));
                    }
                    r.inserts.push(Insert { pos, count, label });
                }
            }
            "Modify" => {
                for (k, item) in items(cx, &here, val)?.iter().enumerate() {
                    let (pos, span, label) = parse_item(cx, &format!("{here}[{k}]"), item, "MOD_")?;
                    if label.is_empty() {
                        return Err(cx.err(format!("{here}[{k}].label"), "modify label is empty"));
                    }
                    r.modifies.push(Modify { pos, span, label });
                }
            }
            other => return Err(cx.err(here, format!("unknown operation `{other}`"))),
        }
    }
    Ok(r)
}

fn index_list(cx: &Ctx<'_>, path: &str, v: &Value) -> Result<Vec<usize>, SchemaError> {
    items(cx, path, v)?
        .iter()
        .enumerate()
        .map(|(k, x)| {
            x.as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| cx.err(format!("{path}[{k}]"), "expected a non-negative integer"))
        })
        .collect()
}

fn items<'v>(cx: &Ctx<'_>, path: &str, v: &'v Value) -> Result<&'v Vec<Value>, SchemaError> {
    v.as_array().ok_or_else(|| cx.err(path, "expected an array"))
}

fn parse_item(cx: &Ctx<'_>, path: &str, v: &Value, prefix: &str) -> Result<(usize, usize, Vec<char>), SchemaError> {
    let obj = v
        .as_object()
        .ok_or_else(|| cx.err(path, "expected an object"))?;
    let pos = obj
        .get("pos")
        .and_then(Value::as_u64)
        .ok_or_else(|| cx.err(format!("{path}.pos"), "expected a non-negative integer"))? as usize;
    let tag = obj
        .get("tag")
        .and_then(Value::as_str)
        .ok_or_else(|| cx.err(format!("{path}.tag"), "expected a string"))?;
    let count = tag
        .strip_prefix(prefix)
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| cx.err(format!("{path}.tag"), format!("expected `{prefix}k` with k ≥ 1, found `{tag}`")))?;
    let label = match obj.get("label") {
        Some(Value::String(s)) => s.chars().collect(),
        Some(Value::Array(parts)) => {
            let mut label = Vec::new();
            for (k, p) in parts.iter().enumerate() {
                let s = p
                    .as_str()
                    .ok_or_else(|| cx.err(format!("{path}.label[{k}]"), "expected a string"))?;
                label.extend(s.chars());
            }
            label
        }
        _ => return Err(cx.err(format!("{path}.label"), "expected a string or a list of strings")),
    };
    Ok((pos, count, label))
}

fn label_json(label: &[char]) -> Value {
    Value::Array(label.iter().map(|c| Value::String(c.to_string())).collect())
}

/// JSON object for one reference; keys in the order Switch, Delete, Insert, Modify.
pub fn reference_to_json(r: &Reference) -> Value {
    let mut obj = Map::new();
    if let Some(order) = &r.switch {
        obj.insert("Switch".into(), json!(order));
    }
    if !r.deletes.is_empty() {
        obj.insert("Delete".into(), json!(r.deletes));
    }
    if !r.inserts.is_empty() {
        let items = r
            .inserts
            .iter()
            .map(|i| json!({"pos": i.pos, "tag": format!("INS_{}", i.count), "label": label_json(&i.label)}))
            .collect();
        obj.insert("Insert".into(), Value::Array(items));
    }
    if !r.modifies.is_empty() {
        let items = r
            .modifies
            .iter()
            .map(|m| json!({"pos": m.pos, "tag": format!("MOD_{}", m.span), "label": label_json(&m.label)}))
            .collect();
        obj.insert("Modify".into(), Value::Array(items));
    }
    Value::Object(obj)
}

fn record_json(inst: &CorrectionInstance) -> Result<Value, serde_json::Error> {
    let types: Vec<&str> = inst.error_types.iter().map(|t| t.as_str()).collect();
    let mut obj = Map::new();
    obj.insert("sentence".into(), Value::String(inst.sentence.to_string()));
    obj.insert("error_flag".into(), json!(u8::from(inst.error_flag)));
    obj.insert("error_type".into(), Value::String(types.join(";")));
    obj.insert(
        "operation".into(),
        Value::Array(inst.references.iter().map(reference_to_json).collect()),
    );
    if let Some(ext) = &inst.external {
        obj.insert("external".into(), Value::String(ext.clone()));
    }
    Ok(Value::Object(obj))
}

/// Writes instances as an FCGEC JSON object, one record per line. The
/// `external` field is emitted verbatim.
pub fn serialize_corpus(instances: &[CorrectionInstance]) -> Result<String, serde_json::Error> {
    let mut out = String::from("{");
    for (k, inst) in instances.iter().enumerate() {
        out.push_str(if k == 0 { "\n  " } else { ",\n  " });
        out.push_str(&serde_json::to_string(&inst.id)?);
        out.push_str(": ");
        let mut rec = record_json(inst)?;
        let external = rec.as_object_mut().and_then(|o| o.shift_remove("external"));
        let body = serde_json::to_string(&rec)?;
        match external {
            Some(Value::String(raw)) => {
                // splice the raw text in place of a re-encoded value
                out.push_str(&body[..body.len() - 1]);
                out.push_str(",\"external\":");
                out.push_str(&raw);
                out.push('}');
            }
            _ => out.push_str(&body),
        }
    }
    out.push_str(if instances.is_empty() { "}\n" } else { "\n}\n" });
    Ok(out)
}
