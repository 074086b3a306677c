use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::model::{apply_reference_with, validate_reference_with, CorrectionInstance, ValidationOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    InvalidReference,
    FlagMismatch,
    DuplicateReference,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub id: String,
    pub kind: IssueKind,
    /// Index into the instance's references, when the issue concerns one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reference {
            Some(k) => write!(f, "{} operation[{k}]: {}", self.id, self.message),
            None => write!(f, "{}: {}", self.id, self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub instances: usize,
    pub references: usize,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    /// True when nothing beyond informational duplicate notes was found.
    pub fn is_clean(&self) -> bool {
        self.issues
            .iter()
            .all(|i| i.kind == IssueKind::DuplicateReference)
    }

    pub fn count(&self, kind: IssueKind) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }
}

/// Checks every instance: each reference fits its sentence, the error flag
/// agrees with the references and error types, and references realizing the
/// same sentence are noted as duplicates.
pub fn validate_corpus(instances: &[CorrectionInstance], opts: ValidationOptions) -> ValidationReport {
    let mut report = ValidationReport {
        instances: instances.len(),
        ..Default::default()
    };
    for inst in instances {
        report.references += inst.references.len();
        let mut realized: HashMap<String, usize> = HashMap::new();
        for (k, r) in inst.references.iter().enumerate() {
            let violations = validate_reference_with(&inst.sentence, r, opts);
            if !violations.is_empty() {
                for v in violations {
                    report.issues.push(Issue {
                        id: inst.id.clone(),
                        kind: IssueKind::InvalidReference,
                        reference: Some(k),
                        message: v.to_string(),
                    });
                }
                continue;
            }
            if r.is_empty() {
                continue;
            }
            let out = apply_reference_with(&inst.sentence, r, opts)
                .expect("validated")
                .to_string();
            if let Some(&first) = realized.get(&out) {
                report.issues.push(Issue {
                    id: inst.id.clone(),
                    kind: IssueKind::DuplicateReference,
                    reference: Some(k),
                    message: format!("realizes the same sentence as operation[{first}]"),
                });
            } else {
                realized.insert(out, k);
            }
        }
        for problem in inst.flag_consistency() {
            report.issues.push(Issue {
                id: inst.id.clone(),
                kind: IssueKind::FlagMismatch,
                reference: None,
                message: problem,
            });
        }
    }
    report
}
