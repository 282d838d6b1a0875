//! Benchmark harness for short-term heart-rate gap imputation.
//!
//! The pipeline: [`ingest`] cleans and grids raw CSV samples,
//! [`gap_protocol`] plans and masks artificial gaps, [`imputers`] fills them
//! with linear, PCHIP, B-spline or KNN interpolation, [`metrics`] scores each
//! gap, and [`evaluator`] pools the scores into per-dataset tables that
//! [`report`] renders.

pub mod cli;
pub mod evaluator;
pub mod gap_protocol;
pub mod imputers;
pub mod ingest;
pub mod metrics;
pub mod report;
