pub mod compile;
pub mod float_err;
pub mod simplify;

pub use compile::{compile, compile_closed, weaken_by, CompileError, CompileOpts, CompileResult, Derivation, Rule, SideCondition};
