//! Cognitive Process Language toolkit: parse `.cpl` scene scripts, check
//! their consistency and derive the frequency grid, concept forest, process
//! cycles, ensemble hierarchy and memory-vote predictions.

pub mod ast;
pub mod check;
pub mod cli;
pub mod cycles;
pub mod diag;
mod dot;
pub mod forest;
pub mod format;
pub mod grid;
pub mod hierarchy;
mod lexer;
pub mod memory;
pub mod parser;

pub use ast::{
    derive_result, is_reverse_pair, normalize_relation, Amount, Chain, ConceptId, Entity, Operand,
    Quantity, Relation, RelationKind, RelationOp, Rule, Scene, Term, TermElement,
};
pub use check::{check_scene, validate_rule, RelationStore};
pub use cycles::{extract_cycles, CycleReport, ProcessCycle, ProcessGraph, UniLink, UniLinkKind};
pub use diag::{Diagnostic, Severity, SourceMap, Span};
pub use forest::{build_forest, OccurrenceForest};
pub use format::format_scene;
pub use grid::{
    build_grid, cluster, primary_clusters, secondary_links, Clustering, FrequencyGrid, Link,
};
pub use hierarchy::{
    build_ensemble, build_hierarchy, select_root, ConstructionTrace, Ensemble, Hierarchy,
    HierarchyError, TraceEvent,
};
pub use memory::{scene_features, MemoryError, MemoryStore, Prediction, Ranked};
pub use parser::{parse_scene, parse_scene_with_spans};

/// The bundled eight-rule egg-cooking scene.
pub const COOKING_SCENE: &str = include_str!("../examples/cooking.cpl");
