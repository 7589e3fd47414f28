//! Software pipelining for one-dimensional quantum loop programs.

pub mod aliasing;
pub mod frontend;
pub mod gate_algebra;
pub mod ir;
pub mod compaction;
pub mod loop_transform;
pub mod qdg;
pub mod scheduler;
pub mod codegen;
pub mod pipeline;
pub mod verifier;
