//! Decoupled spatial query: evaluate the conditioning network once, freeze
//! the produced spatial parameters, then answer many point and gradient
//! queries at a cost independent of the conditioning network's size.

mod bench;
mod compile;
mod flops;

pub use bench::{run_benchmark, BenchEntry, QueryBenchConfig, QueryBenchReport};
pub use compile::{compile, CompiledField, FieldProvenance};
pub use flops::{affine_flops, flops_per_point, flops_per_point_with_cost, FlopMode, DEFAULT_ACT_COST};
