use std::fmt;

use thiserror::Error;

use super::ast::{BinaryOp, Formula, Function, SensorKind, UnaryOp};
use crate::rng::Rng;

/// Where sensor readings and variable values come from during evaluation.
pub trait Environment {
    fn sensor(&self, kind: SensorKind) -> f64;
    fn variable(&self, name: &str) -> Option<f64>;
}

pub struct EvalContext<'a> {
    pub env: &'a dyn Environment,
    pub rng: &'a mut Rng,
}

impl<'a> EvalContext<'a> {
    pub fn new(env: &'a dyn Environment, rng: &'a mut Rng) -> Self {
        EvalContext { env, rng }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalErrorKind {
    #[error("division by zero")]
    DivisionByZero,
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("{0} is undefined for this argument")]
    Domain(Function),
    #[error("result is not a finite number")]
    NonFinite,
}

/// An evaluation failure and the child-index path of the failing node.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub path: Vec<usize>,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind, format_path(&self.path))
    }
}

/// Renders a subtree path as `/0/1`; the root is `/`.
pub fn format_path(path: &[usize]) -> String {
    if path.is_empty() {
        return "/".to_string();
    }
    path.iter().map(|i| format!("/{i}")).collect()
}

fn fail(kind: EvalErrorKind, path: &[usize]) -> EvalError {
    EvalError {
        kind,
        path: path.to_vec(),
    }
}

/// Maps any angle to `[0, 360)`. Negative zero becomes zero.
pub fn normalize_degrees(degrees: f64) -> f64 {
    let r = degrees.rem_euclid(360.0);
    if r >= 360.0 || r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Sine of an angle in degrees, exact at multiples of 90.
pub fn sin_deg(degrees: f64) -> f64 {
    let r = normalize_degrees(degrees);
    match r {
        0.0 | 180.0 => 0.0,
        90.0 => 1.0,
        270.0 => -1.0,
        _ => libm::sin(r.to_radians()),
    }
}

/// Cosine of an angle in degrees, exact at multiples of 90.
pub fn cos_deg(degrees: f64) -> f64 {
    let r = normalize_degrees(degrees);
    match r {
        0.0 => 1.0,
        90.0 | 270.0 => 0.0,
        180.0 => -1.0,
        _ => libm::cos(r.to_radians()),
    }
}

fn truthy(value: f64) -> bool {
    value != 0.0
}

fn boolean(flag: bool) -> f64 {
    if flag {
        1.0
    } else {
        0.0
    }
}

/// Evaluates a formula. Comparisons and logic yield 1 or 0, trigonometry works
/// in degrees, `%` is a floored modulo, and `rand` draws from the context's
/// generator (an integer draw when both bounds are whole numbers).
pub fn evaluate(formula: &Formula, ctx: &mut EvalContext<'_>) -> Result<f64, EvalError> {
    let mut path = Vec::new();
    eval_node(formula, ctx, &mut path)
}

fn eval_child(
    formula: &Formula,
    index: usize,
    ctx: &mut EvalContext<'_>,
    path: &mut Vec<usize>,
) -> Result<f64, EvalError> {
    path.push(index);
    let value = eval_node(formula, ctx, path);
    path.pop();
    value
}

fn eval_node(
    formula: &Formula,
    ctx: &mut EvalContext<'_>,
    path: &mut Vec<usize>,
) -> Result<f64, EvalError> {
    let value = match formula {
        Formula::Number(value) => *value,
        Formula::Sensor(kind) => ctx.env.sensor(*kind),
        Formula::Variable(name) => ctx
            .env
            .variable(name)
            .ok_or_else(|| fail(EvalErrorKind::UnknownVariable(name.clone()), path))?,
        Formula::Unary { op, operand } => {
            let v = eval_child(operand, 0, ctx, path)?;
            match op {
                UnaryOp::Neg => -v,
                UnaryOp::Not => boolean(!truthy(v)),
            }
        }
        Formula::Binary { op, left, right } => {
            let l = eval_child(left, 0, ctx, path)?;
            match op {
                BinaryOp::And if !truthy(l) => return Ok(0.0),
                BinaryOp::Or if truthy(l) => return Ok(1.0),
                _ => {}
            }
            let r = eval_child(right, 1, ctx, path)?;
            match op {
                BinaryOp::Add => l + r,
                BinaryOp::Sub => l - r,
                BinaryOp::Mul => l * r,
                BinaryOp::Div => {
                    if r == 0.0 {
                        return Err(fail(EvalErrorKind::DivisionByZero, path));
                    }
                    l / r
                }
                BinaryOp::Mod => {
                    if r == 0.0 {
                        return Err(fail(EvalErrorKind::DivisionByZero, path));
                    }
                    let m = l % r;
                    if m != 0.0 && (m < 0.0) != (r < 0.0) {
                        m + r
                    } else {
                        m
                    }
                }
                BinaryOp::Lt => boolean(l < r),
                BinaryOp::Le => boolean(l <= r),
                BinaryOp::Eq => boolean(l == r),
                BinaryOp::Ne => boolean(l != r),
                BinaryOp::Ge => boolean(l >= r),
                BinaryOp::Gt => boolean(l > r),
                BinaryOp::And | BinaryOp::Or => boolean(truthy(r)),
            }
        }
        Formula::Call { function, args } => {
            let mut values = [0.0; 2];
            for (i, arg) in args.iter().enumerate().take(2) {
                values[i] = eval_child(arg, i, ctx, path)?;
            }
            let [a, b] = values;
            match function {
                Function::Sin => sin_deg(a),
                Function::Cos => cos_deg(a),
                Function::Tan => {
                    let c = cos_deg(a);
                    if c == 0.0 {
                        return Err(fail(EvalErrorKind::Domain(*function), path));
                    }
                    sin_deg(a) / c
                }
                Function::Abs => a.abs(),
                Function::Sqrt => {
                    if a < 0.0 {
                        return Err(fail(EvalErrorKind::Domain(*function), path));
                    }
                    a.sqrt()
                }
                Function::Round => a.round(),
                Function::Floor => a.floor(),
                Function::Ceil => a.ceil(),
                Function::Min => a.min(b),
                Function::Max => a.max(b),
                Function::Rand => {
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    let u = ctx.rng.next_f64();
                    if lo.fract() == 0.0 && hi.fract() == 0.0 {
                        (lo + (u * (hi - lo + 1.0)).floor()).min(hi)
                    } else {
                        lo + (hi - lo) * u
                    }
                }
            }
        }
    };
    if !value.is_finite() {
        return Err(fail(EvalErrorKind::NonFinite, path));
    }
    // -0.0 and 0.0 compare equal but serialize differently
    Ok(if value == 0.0 { 0.0 } else { value })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::formula::parse_formula;

    struct Fixed {
        sensors: BTreeMap<SensorKind, f64>,
        vars: BTreeMap<String, f64>,
    }

    impl Environment for Fixed {
        fn sensor(&self, kind: SensorKind) -> f64 {
            self.sensors.get(&kind).copied().unwrap_or(0.0)
        }
        fn variable(&self, name: &str) -> Option<f64> {
            self.vars.get(name).copied()
        }
    }

    fn env() -> Fixed {
        Fixed {
            sensors: [(SensorKind::CompassDirection, 90.0)].into_iter().collect(),
            vars: [("score".to_string(), 3.0)].into_iter().collect(),
        }
    }

    fn eval(src: &str) -> Result<f64, EvalError> {
        let env = env();
        let mut rng = Rng::seed_from_u64(0);
        evaluate(&parse_formula(src).unwrap(), &mut EvalContext::new(&env, &mut rng))
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(eval("1+2*3").unwrap(), 7.0);
        assert_eq!(eval("(1+2)*3").unwrap(), 9.0);
        assert_eq!(eval("-2*3").unwrap(), -6.0);
        assert_eq!(eval("score * 2").unwrap(), 6.0);
    }

    #[test]
    fn sensor_passthrough() {
        assert_eq!(eval("compass_direction").unwrap(), 90.0);
        assert_eq!(eval("loudness").unwrap(), 0.0);
    }

    #[test]
    fn trig_in_degrees() {
        assert_eq!(eval("sin(90)").unwrap(), 1.0);
        assert_eq!(eval("cos(90)").unwrap(), 0.0);
        assert_eq!(eval("cos(180)").unwrap(), -1.0);
        assert_eq!(eval("sin(-90)").unwrap(), -1.0);
        assert!((eval("sin(30)").unwrap() - 0.5).abs() < 1e-12);
        assert!((eval("tan(45)").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logic_yields_one_or_zero() {
        assert_eq!(eval("1 < 2").unwrap(), 1.0);
        assert_eq!(eval("2 < 1").unwrap(), 0.0);
        assert_eq!(eval("NOT 0").unwrap(), 1.0);
        assert_eq!(eval("3 AND 4").unwrap(), 1.0);
        assert_eq!(eval("0 OR 0").unwrap(), 0.0);
        assert_eq!(eval("1 = 1 AND 2 != 3").unwrap(), 1.0);
    }

    #[test]
    fn logic_short_circuits() {
        assert_eq!(eval("0 AND 1/0").unwrap(), 0.0);
        assert_eq!(eval("1 OR 1/0").unwrap(), 1.0);
    }

    #[test]
    fn floored_modulo() {
        assert_eq!(eval("7 % 3").unwrap(), 1.0);
        assert_eq!(eval("-7 % 3").unwrap(), 2.0);
        assert_eq!(eval("7 % -3").unwrap(), -2.0);
    }

    #[test]
    fn errors_carry_subtree_path() {
        let err = eval("3/0").unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
        assert!(err.path.is_empty());

        let err = eval("1 + sqrt(-(4))").unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::Domain(Function::Sqrt));
        assert_eq!(err.path, vec![1]);

        let err = eval("max(1, 2 * lives)").unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::UnknownVariable("lives".into()));
        assert_eq!(err.path, vec![1, 1]);
        assert_eq!(format_path(&err.path), "/1/1");

        assert_eq!(eval("tan(90)").unwrap_err().kind, EvalErrorKind::Domain(Function::Tan));
        assert_eq!(eval("5 % 0").unwrap_err().kind, EvalErrorKind::DivisionByZero);
    }

    #[test]
    fn overflow_is_an_error() {
        let big = format!("{} * {}", f64::MAX, f64::MAX);
        assert_eq!(eval(&big).unwrap_err().kind, EvalErrorKind::NonFinite);
    }

    #[test]
    fn rand_stays_in_bounds_and_is_seeded() {
        let env = env();
        let f = parse_formula("rand(6, 1)").unwrap();
        let g = parse_formula("rand(0, 0.5)").unwrap();
        let mut rng = Rng::seed_from_u64(99);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let mut ctx = EvalContext::new(&env, &mut rng);
            let v = evaluate(&f, &mut ctx).unwrap();
            assert!((1.0..=6.0).contains(&v) && v.fract() == 0.0);
            seen[v as usize] = true;
            let w = evaluate(&g, &mut ctx).unwrap();
            assert!((0.0..=0.5).contains(&w));
        }
        assert!(seen[1..].iter().all(|s| *s));

        let draw = |seed| {
            let mut rng = Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| evaluate(&g, &mut EvalContext::new(&env, &mut rng)).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn normalize() {
        assert_eq!(normalize_degrees(-90.0), 270.0);
        assert_eq!(normalize_degrees(720.0), 0.0);
        assert_eq!(normalize_degrees(-0.0).to_bits(), 0.0f64.to_bits());
        assert_eq!(normalize_degrees(-1e-20), 0.0);
    }
}
