use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// An expression as built in the formula editor.
///
/// Number literals are always finite and non-negative; a negative constant is
/// written (and parsed) as a unary minus applied to a literal.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Number(f64),
    Binary {
        op: BinaryOp,
        left: Box<Formula>,
        right: Box<Formula>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Formula>,
    },
    Call {
        function: Function,
        args: Vec<Formula>,
    },
    Sensor(SensorKind),
    Variable(String),
}

impl Formula {
    pub fn number(value: f64) -> Self {
        Formula::Number(value)
    }

    pub fn binary(op: BinaryOp, left: Formula, right: Formula) -> Self {
        Formula::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn unary(op: UnaryOp, operand: Formula) -> Self {
        Formula::Unary {
            op,
            operand: Box::new(operand),
        }
    }

    pub fn call(function: Function, args: Vec<Formula>) -> Self {
        Formula::Call { function, args }
    }

    pub fn variable(name: impl Into<String>) -> Self {
        Formula::Variable(name.into())
    }

    /// Height of the tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Number(_) | Formula::Sensor(_) | Formula::Variable(_) => 1,
            Formula::Binary { left, right, .. } => 1 + left.depth().max(right.depth()),
            Formula::Unary { operand, .. } => 1 + operand.depth(),
            Formula::Call { args, .. } => 1 + args.iter().map(Formula::depth).max().unwrap_or(0),
        }
    }

    /// Names of all variables referenced anywhere in the tree, in first-use order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Formula::Variable(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Formula::Binary { left, right, .. } => {
                left.collect_variables(out);
                right.collect_variables(out);
            }
            Formula::Unary { operand, .. } => operand.collect_variables(out),
            Formula::Call { args, .. } => args.iter().for_each(|a| a.collect_variables(out)),
            Formula::Number(_) | Formula::Sensor(_) => {}
        }
    }

    /// Follows a child-index path from this node.
    pub fn subtree(&self, path: &[usize]) -> Option<&Formula> {
        let Some((&first, rest)) = path.split_first() else {
            return Some(self);
        };
        let child = match (self, first) {
            (Formula::Binary { left, .. }, 0) => left.as_ref(),
            (Formula::Binary { right, .. }, 1) => right.as_ref(),
            (Formula::Unary { operand, .. }, 0) => operand.as_ref(),
            (Formula::Call { args, .. }, i) => args.get(i)?,
            _ => return None,
        };
        child.subtree(rest)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::pretty_print(self))
    }
}

impl FromStr for Formula {
    type Err = super::ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        super::parse_formula(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
    And,
    Or,
}

/// Binding strength, loosest first. Unary minus binds tighter than any
/// binary operator; `NOT` sits between comparisons and `AND`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Precedence {
    Or,
    And,
    Not,
    Comparison,
    Additive,
    Multiplicative,
    Negation,
    Atom,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 13] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Mod,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::Ge,
        BinaryOp::Gt,
        BinaryOp::And,
        BinaryOp::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "!=",
            BinaryOp::Ge => ">=",
            BinaryOp::Gt => ">",
            BinaryOp::And => "AND",
            BinaryOp::Or => "OR",
        }
    }

    pub(crate) fn precedence(self) -> Precedence {
        match self {
            BinaryOp::Or => Precedence::Or,
            BinaryOp::And => Precedence::And,
            BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Eq
            | BinaryOp::Ne
            | BinaryOp::Ge
            | BinaryOp::Gt => Precedence::Comparison,
            BinaryOp::Add | BinaryOp::Sub => Precedence::Additive,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => Precedence::Multiplicative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

impl UnaryOp {
    pub(crate) fn precedence(self) -> Precedence {
        match self {
            UnaryOp::Neg => Precedence::Negation,
            UnaryOp::Not => Precedence::Not,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Sin,
    Cos,
    Tan,
    Abs,
    Sqrt,
    Round,
    Floor,
    Ceil,
    Min,
    Max,
    Rand,
}

impl Function {
    pub const ALL: [Function; 11] = [
        Function::Sin,
        Function::Cos,
        Function::Tan,
        Function::Abs,
        Function::Sqrt,
        Function::Round,
        Function::Floor,
        Function::Ceil,
        Function::Min,
        Function::Max,
        Function::Rand,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Tan => "tan",
            Function::Abs => "abs",
            Function::Sqrt => "sqrt",
            Function::Round => "round",
            Function::Floor => "floor",
            Function::Ceil => "ceil",
            Function::Min => "min",
            Function::Max => "max",
            Function::Rand => "rand",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Function::Min | Function::Max | Function::Rand => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Function> {
        Function::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Simulated device sensors readable from formulas.
///
/// Ranges follow common phone conventions: compass heading in `[0, 360)`,
/// tilt in `[-90, 90]` degrees, acceleration in `[-100, 100]` m/s², and
/// loudness in `[0, 100]` percent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    CompassDirection,
    InclinationX,
    InclinationY,
    AccelerationX,
    AccelerationY,
    AccelerationZ,
    Loudness,
}

impl SensorKind {
    pub const ALL: [SensorKind; 7] = [
        SensorKind::CompassDirection,
        SensorKind::InclinationX,
        SensorKind::InclinationY,
        SensorKind::AccelerationX,
        SensorKind::AccelerationY,
        SensorKind::AccelerationZ,
        SensorKind::Loudness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::CompassDirection => "compass_direction",
            SensorKind::InclinationX => "inclination_x",
            SensorKind::InclinationY => "inclination_y",
            SensorKind::AccelerationX => "acceleration_x",
            SensorKind::AccelerationY => "acceleration_y",
            SensorKind::AccelerationZ => "acceleration_z",
            SensorKind::Loudness => "loudness",
        }
    }

    pub fn from_name(name: &str) -> Option<SensorKind> {
        SensorKind::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Whether `value` is an admissible reading.
    pub fn accepts(self, value: f64) -> bool {
        if !value.is_finite() {
            return false;
        }
        match self {
            SensorKind::CompassDirection => (0.0..360.0).contains(&value),
            SensorKind::InclinationX | SensorKind::InclinationY => (-90.0..=90.0).contains(&value),
            SensorKind::AccelerationX | SensorKind::AccelerationY | SensorKind::AccelerationZ => {
                (-100.0..=100.0).contains(&value)
            }
            SensorKind::Loudness => (0.0..=100.0).contains(&value),
        }
    }

    /// Pulls an arbitrary reading into range. Compass headings wrap, everything
    /// else saturates.
    pub fn clamp(self, value: f64) -> f64 {
        if value.is_nan() {
            return 0.0;
        }
        match self {
            SensorKind::CompassDirection => crate::formula::normalize_degrees(value),
            SensorKind::InclinationX | SensorKind::InclinationY => value.clamp(-90.0, 90.0),
            SensorKind::AccelerationX | SensorKind::AccelerationY | SensorKind::AccelerationZ => {
                value.clamp(-100.0, 100.0)
            }
            SensorKind::Loudness => value.clamp(0.0, 100.0),
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) const KEYWORDS: [&str; 3] = ["AND", "OR", "NOT"];

/// Whether `name` can appear as a variable reference in formula text.
pub fn is_variable_name(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
        && Function::from_name(name).is_none()
        && SensorKind::from_name(name).is_none()
}
