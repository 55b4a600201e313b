pub mod lang;
pub mod flow;
pub mod slice;
pub mod dynamic;
pub mod prompt;
pub mod metrics;
pub mod taxonomy;
pub mod improve;
