//! Flow analysis: per-method CFGs, post-dominators, control dependence,
//! reaching definitions, and the whole-program dependence graph.

pub mod cfg;
pub mod control;
pub mod pdg;
pub mod postdom;
pub mod reaching;

pub use cfg::{build_cfg, Cfg, CfgEdge, CfgNode, EdgeLabel, ENTRY, EXIT};
pub use control::control_dependences;
pub use pdg::{build_pdg, EdgeKind, Pdg, PdgEdge};
pub use postdom::PostDom;
pub use reaching::{reaching_definitions, ReachingDefs};

use crate::lang::ParseError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("internal flow error: {0}")]
    Internal(String),
}

/// Parse and build the dependence graph in one step.
pub fn pdg_from_source(source: &str, id: &str) -> Result<(crate::lang::Ast, Pdg), FlowError> {
    let ast = crate::lang::parse_program(source, id)?;
    let pdg = build_pdg(&ast)?;
    Ok((ast, pdg))
}
