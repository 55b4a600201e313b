//! Experiment harness around `slicebench-core`: dataset ingestion, oracle
//! ground truth, the model gateway, resumable experiment runs, scoring,
//! improvement runs and the triage HTTP API.

pub mod config;
pub mod dataset;
pub mod gateway;
pub mod improve;
pub mod records;
pub mod report;
pub mod runner;
pub mod server;
pub mod truth;
