pub mod approx;
pub mod checker;
pub mod eval;
pub mod lang;
pub mod num;
pub mod oracle;
pub mod quant;
pub mod report;
pub mod sample;
pub mod transform;
