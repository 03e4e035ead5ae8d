//! Static, language-independent fault localization: ranks source files by
//! textual similarity to a natural-language defect report.
//!
//! Pipeline: tokenize ([`textkit`]), decompose source files
//! ([`code_ingest`]) and defect reports ([`report_ingest`]), attach version
//! history ([`history_ingest`]), build corpus statistics ([`index`]), rank
//! via weighted substructure similarities ([`simrank`]), learn the weights
//! ([`train`]), and evaluate against baselines ([`evalbench`]).

pub mod code_ingest;
pub mod error;
pub mod evalbench;
pub mod history_ingest;
pub mod index;
pub mod report_ingest;
pub mod simrank;
pub mod textkit;
pub mod train;

pub use code_ingest::{LanguageProfile, SourceDocument};
pub use error::{Error, Result};
pub use history_ingest::{ChangeRecord, GroundTruthLink};
pub use index::CorpusIndex;
pub use report_ingest::DefectReport;
pub use simrank::{CodeField, FeatureKey, RankedList, ReportField, WeightModel};
pub use textkit::{Term, TermVector};
