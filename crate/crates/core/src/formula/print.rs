use super::ast::{Formula, Precedence, UnaryOp};

/// Renders a formula with the fewest parentheses that still parse back to the
/// same tree.
pub fn pretty_print(formula: &Formula) -> String {
    let mut out = String::new();
    write_formula(formula, &mut out);
    out
}

fn precedence(formula: &Formula) -> Precedence {
    match formula {
        Formula::Binary { op, .. } => op.precedence(),
        Formula::Unary { op, .. } => op.precedence(),
        _ => Precedence::Atom,
    }
}

fn write_child(child: &Formula, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write_formula(child, out);
        out.push(')');
    } else {
        write_formula(child, out);
    }
}

fn write_formula(formula: &Formula, out: &mut String) {
    match formula {
        Formula::Number(value) => out.push_str(&format!("{value}")),
        Formula::Sensor(kind) => out.push_str(kind.name()),
        Formula::Variable(name) => out.push_str(name),
        Formula::Call { function, args } => {
            out.push_str(function.name());
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_formula(arg, out);
            }
            out.push(')');
        }
        Formula::Unary { op, operand } => {
            let own = op.precedence();
            match op {
                UnaryOp::Neg => out.push('-'),
                UnaryOp::Not => out.push_str("NOT "),
            }
            write_child(operand, precedence(operand) < own, out);
        }
        Formula::Binary { op, left, right } => {
            let own = op.precedence();
            write_child(left, precedence(left) < own, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_child(right, precedence(right) <= own, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, BinaryOp};

    #[test]
    fn no_parens_when_precedence_allows() {
        let f = Formula::binary(
            BinaryOp::Add,
            Formula::Number(1.0),
            Formula::binary(BinaryOp::Mul, Formula::Number(2.0), Formula::Number(3.0)),
        );
        assert_eq!(pretty_print(&f), "1 + 2 * 3");
    }

    #[test]
    fn forced_parens() {
        let f = Formula::binary(
            BinaryOp::Mul,
            Formula::binary(BinaryOp::Add, Formula::Number(1.0), Formula::Number(2.0)),
            Formula::Number(3.0),
        );
        assert_eq!(pretty_print(&f), "(1 + 2) * 3");
    }

    #[test]
    fn right_operand_of_equal_precedence_is_parenthesized() {
        let f = parse_formula("1 - (2 - 3)").unwrap();
        assert_eq!(pretty_print(&f), "1 - (2 - 3)");
        let g = parse_formula("(1 - 2) - 3").unwrap();
        assert_eq!(pretty_print(&g), "1 - 2 - 3");
    }

    #[test]
    fn unary_forms() {
        for (src, expected) in [
            ("-(2 * 3)", "-(2 * 3)"),
            ("--x", "--x"),
            ("1 - -2", "1 - -2"),
            ("(NOT a) < b", "(NOT a) < b"),
            ("NOT a AND NOT b", "NOT a AND NOT b"),
            ("NOT (a OR b)", "NOT (a OR b)"),
            ("1 + (NOT x)", "1 + (NOT x)"),
            ("-(NOT x)", "-(NOT x)"),
            ("NOT NOT x = 1", "NOT NOT x = 1"),
        ] {
            let f = parse_formula(src).unwrap();
            assert_eq!(pretty_print(&f), expected, "{src}");
            assert_eq!(parse_formula(expected).unwrap(), f);
        }
    }

    #[test]
    fn numbers_print_shortest_round_trip() {
        assert_eq!(pretty_print(&Formula::Number(0.2)), "0.2");
        assert_eq!(pretty_print(&Formula::Number(90.0)), "90");
        let tiny = Formula::Number(1e-7);
        assert_eq!(parse_formula(&pretty_print(&tiny)).unwrap(), tiny);
    }

    #[test]
    fn calls() {
        let f = parse_formula("max(rand(1,6),  abs(-x))").unwrap();
        assert_eq!(pretty_print(&f), "max(rand(1, 6), abs(-x))");
    }
}
