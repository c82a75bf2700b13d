//! A small declarative language for spaces, sets, functions and the
//! commands that run constructions on them.
//!
//! ```text
//! space X = unit;
//! set A = union(closed([0,1/2]), open((3/4,1)));
//! func f = step { A -> 0, complement(A) -> 1 };
//! extend f from closed([0,1/2]) in X alpha 1 stages 6 tol 1/6;
//! ```

pub mod ast;
mod lexer;
mod parser;
mod run;

pub use ast::*;
pub use lexer::Pos;
pub use parser::{parse, parse_func, parse_rational_lit, parse_set, parse_target};
pub use run::{check_space, reports_json, run, run_source, RunConfig, Runner};
