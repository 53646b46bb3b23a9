//! Analysis toolkit for Docker Compose corpora.
//!
//! The pipeline runs in stages, each usable on its own:
//! parse ([`parser`]) -> merge/extends resolution ([`merge`]) ->
//! service classification ([`classify`]) -> orchestration graph
//! ([`graph`]) -> pattern detection ([`patterns`]), with frequent
//! itemset mining ([`mining`]) and rank statistics ([`stats`]) over
//! whole corpora and [`report`] tying it together for the CLI.

pub mod classify;
pub mod graph;
pub mod merge;
pub mod mining;
pub mod model;
pub mod parser;
pub mod patterns;
pub mod report;
pub mod stats;

pub use classify::{classify_image, classify_service, ClassifiedService, ServiceType};
pub use graph::{build_graph, Edge, EdgeKind, OrchestrationGraph};
pub use merge::{apply_override, merge_service, replay_override, resolve_extends};
pub use mining::{mine_frequent_itemsets, ItemsetResult};
pub use model::{ComposeDocument, FileRole, FileRoleKind, ServiceSpec};
pub use parser::{interpolate, parse_document, resolve_document};
pub use patterns::{detect_all, explain, PatternFinding, PatternId, Strictness};
pub use report::{render_report, scan_path, CorpusReport, ReportFormat, ScanOptions};
pub use stats::{cliffs_delta, mann_whitney_u, Alternative, EffectSize, StatsResult};
