//! Per-conversation state.

use std::path::{Path, PathBuf};

use bpmn_core::ir::IssueCode;
use bpmn_core::layout::layout_xml;
use bpmn_core::xml::{reconstruct_ir, to_bpmn_xml, validate_xml_structure, ReconstructError};
use bpmn_core::ir::ValidationIssue;
use bpmn_core::{parse_process, serialize_process, ProcessModel, ValidationReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assistant::Modality;
use crate::provider::Message;

/// The diagram a session works on.
#[derive(Debug, Clone, PartialEq)]
pub enum CurrentModel {
    Model(ProcessModel),
    /// XML that is either produced in the xml modality or could not be
    /// turned into the block-structured form.
    Document { xml: String, structured: bool },
}

impl CurrentModel {
    /// XML without diagram information.
    pub fn semantic_xml(&self) -> Result<String, bpmn_core::XmlError> {
        match self {
            CurrentModel::Model(m) => to_bpmn_xml(m),
            CurrentModel::Document { xml, .. } => Ok(xml.clone()),
        }
    }

    /// The block-structured model, reconstructing it from XML if needed.
    pub fn to_ir(&self) -> Result<ProcessModel, ReconstructError> {
        match self {
            CurrentModel::Model(m) => Ok(m.clone()),
            CurrentModel::Document { xml, .. } => reconstruct_ir(xml),
        }
    }

    /// Text shown to the model when the user asks about the diagram.
    pub fn context_text(&self) -> String {
        match self {
            CurrentModel::Model(m) => serialize_process(m),
            CurrentModel::Document { xml, .. } => xml.clone(),
        }
    }
}

// Persisted form: the IR as its JSON text, documents as XML.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum StoredModel {
    Model { json: String },
    Document { xml: String, structured: bool },
}

impl Serialize for CurrentModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CurrentModel::Model(m) => StoredModel::Model { json: serialize_process(m) },
            CurrentModel::Document { xml, structured } => StoredModel::Document { xml: xml.clone(), structured: *structured },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CurrentModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match StoredModel::deserialize(d)? {
            StoredModel::Model { json } => CurrentModel::Model(parse_process(&json).map_err(serde::de::Error::custom)?),
            StoredModel::Document { xml, structured } => CurrentModel::Document { xml, structured },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub history: Vec<Message>,
    pub current: Option<CurrentModel>,
    pub modality: Modality,
    pub model_name: String,
    /// DI-enriched XML last sent for display; downloads return these bytes.
    pub last_xml: Option<String>,
    /// Progress messages of the latest turn, for polling clients.
    #[serde(default)]
    pub status: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UploadError {
    #[error("file is {size} bytes, the limit is {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("not a well-formed XML document: {}", .0.summary())]
    MalformedXml(ValidationReport),
    #[error("the BPMN document is invalid: {}", .0.summary())]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UploadOutcome {
    pub report: ValidationReport,
    /// Whether the diagram can be edited through function calls.
    pub editable: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("the session has no diagram to download")]
pub struct NothingToDownload;

impl Session {
    pub fn new(id: impl Into<String>, model_name: impl Into<String>, modality: Modality) -> Self {
        Session {
            id: id.into(),
            history: Vec::new(),
            current: None,
            modality,
            model_name: model_name.into(),
            last_xml: None,
            status: Vec::new(),
        }
    }

    /// Stores an uploaded diagram. Structured diagrams become editable IR;
    /// anything else is kept read-only for viewing and questions.
    pub fn upload(&mut self, bytes: &[u8], limit: usize) -> Result<UploadOutcome, UploadError> {
        if bytes.len() > limit {
            return Err(UploadError::TooLarge { size: bytes.len(), limit });
        }
        let text = match std::str::from_utf8(bytes) {
            Ok(t) => t,
            Err(e) => {
                return Err(UploadError::MalformedXml(ValidationReport::from_issues(vec![ValidationIssue::error(
                    IssueCode::MalformedXml,
                    None,
                    format!("not UTF-8: {e}"),
                )])))
            }
        };
        let report = validate_xml_structure(text);
        if report.has(IssueCode::MalformedXml) {
            return Err(UploadError::MalformedXml(report));
        }
        if !report.ok {
            return Err(UploadError::Invalid(report));
        }
        let mut issues = report.issues;
        let (current, editable) = match reconstruct_ir(text) {
            Ok(model) => (CurrentModel::Model(model), true),
            Err(e) => {
                let code = match e {
                    ReconstructError::UnsupportedElement(_) => IssueCode::UnsupportedElement,
                    _ => IssueCode::Unstructured,
                };
                issues.push(ValidationIssue::warning(code, None, format!("{e}; the diagram is read-only")));
                let xml = bpmn_core::xml::strip_di(text).unwrap_or_else(|_| text.to_string());
                (CurrentModel::Document { xml, structured: false }, false)
            }
        };
        // Keep the uploaded bytes, refreshing only the diagram section.
        self.last_xml = Some(layout_xml(text).unwrap_or_else(|_| text.to_string()));
        self.current = Some(current);
        Ok(UploadOutcome { report: ValidationReport::from_issues(issues), editable })
    }

    pub fn download(&self) -> Result<&str, NothingToDownload> {
        self.last_xml.as_deref().ok_or(NothingToDownload)
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", self.id));
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self).map_err(std::io::Error::other)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> std::io::Result<Session> {
        let bytes = std::fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(std::io::Error::other)
    }
}
