//! Tracing interpreter for the Java subset and backward dynamic slicing.
//!
//! Dependences are recorded per statement instance: each read points at the
//! instance that last wrote the variable in the same frame (or globally, for
//! fields), and each instance points at its governing predicate instance.

pub mod builtins;
pub mod interp;
pub mod trace;
pub mod value;

pub use interp::{execute, execute_with, ExecConfig, ExecError, RuntimeErrorKind};
pub use trace::{
    dynamic_backward_slice, dynamic_slice_instances, DynamicDependenceGraph, DynamicSliceError, EntryKind, ExecutionTrace,
    TraceEntry,
};
pub use value::Value;
