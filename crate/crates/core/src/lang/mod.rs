pub mod ast;
pub mod parse;
pub mod print;
pub mod typeck;

pub use ast::{fresh_name, redseq_sites, site_label, ErrVal, Expr, Op, Ty, E};
pub use parse::{parse, parse_program, parse_type, ParseError, Parsed};
pub use print::{pretty, print};
pub use typeck::{check_type, elaborate, infer_type, kind_check, TyCtx, TypeError};
