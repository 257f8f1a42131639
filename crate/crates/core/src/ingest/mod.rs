//! Parsers for external score sources: a Standard MIDI File subset and the
//! JSON interchange format that carries chord and key annotations.
//!
//! Both parsers are total: any byte/text input produces either a valid
//! [`Score`](crate::score::Score) or a typed error — never a panic or a
//! hang. Non-fatal oddities (missing key signature, implicit note-offs)
//! are reported as warnings in [`ParseDiagnostics`].

pub mod smf;
pub mod text;

pub use smf::{parse_smf, SmfError};
pub use text::{
    parse_chord_sidecar, parse_score_text, serialize_score, serialize_score_pretty,
    validate_score, TextError, Violation,
};

use serde::{Deserialize, Serialize};

/// Where a parsed score came from.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Smf,
    ScoreText,
}

/// Non-fatal findings attached to a successful parse.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub source_format: SourceFormat,
    /// (location, message) pairs; locations are byte offsets for SMF and
    /// JSON paths for the text format.
    pub warnings: Vec<(String, String)>,
}

impl ParseDiagnostics {
    pub fn new(source_format: SourceFormat) -> ParseDiagnostics {
        ParseDiagnostics { source_format, warnings: Vec::new() }
    }

    pub fn warn(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push((location.into(), message.into()));
    }
}
