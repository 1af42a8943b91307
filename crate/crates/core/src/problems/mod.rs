//! Data sources: the merged-glyph dataset and an analytic bi-objective problem.

pub mod analytic;
pub mod glyphs;

pub use analytic::{analytic_eval, analytic_grads, analytic_pareto_front, AnalyticProblem};
pub use glyphs::{
    epoch_batches, generate_glyph_dataset, GlyphDataset, LabeledExample, MergedGlyphConfig, Split,
};
