//! Formula-editor expressions: text syntax, evaluation and printing.
//!
//! Grammar (loosest binding first, all binary operators left-associative):
//!
//! ```text
//! formula    = or
//! or         = and { "OR" and }
//! and        = not { "AND" not }
//! not        = "NOT" not | comparison
//! comparison = additive { ("<" | "<=" | "=" | "!=" | ">=" | ">") additive }
//! additive   = term { ("+" | "-") term }
//! term       = negation { ("*" | "/" | "%") negation }
//! negation   = "-" negation | primary
//! primary    = number | sensor | function "(" [ formula { "," formula } ] ")"
//!            | variable | "(" formula ")"
//! number     = digit { digit } [ "." digit { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ]
//! ```
//!
//! `≤`, `≥` and `≠` are accepted as spellings of `<=`, `>=` and `!=`. Sensor
//! and function names are reserved; any other identifier is a variable.

mod ast;
mod eval;
mod parser;
mod print;

pub use ast::{is_variable_name, BinaryOp, Formula, Function, SensorKind, UnaryOp};
pub use eval::{
    cos_deg, evaluate, format_path, normalize_degrees, sin_deg, Environment, EvalContext,
    EvalError, EvalErrorKind,
};
pub use parser::{parse_formula, parse_formula_with_limit, ParseError, DEFAULT_DEPTH_LIMIT};
pub use print::pretty_print;
