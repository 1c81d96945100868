pub mod agents;
pub mod attacks_metrics;
pub mod bundled;
pub mod codec;
pub mod crypto;
pub mod distribution;
mod interval;
pub mod pipeline;
pub mod semantic_space;

pub use interval::Interval;
