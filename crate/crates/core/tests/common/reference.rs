//! A shunting-yard formula parser written independently of the crate's
//! recursive-descent one. It produces S-expressions directly so the two can
//! be compared on shape alone.

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(String),
    LParen,
    RParen,
    Comma,
}

const SENSORS: [&str; 7] = [
    "compass_direction",
    "inclination_x",
    "inclination_y",
    "acceleration_x",
    "acceleration_y",
    "acceleration_z",
    "loudness",
];

const FUNCTIONS: [(&str, usize); 11] = [
    ("sin", 1),
    ("cos", 1),
    ("tan", 1),
    ("abs", 1),
    ("sqrt", 1),
    ("round", 1),
    ("floor", 1),
    ("ceil", 1),
    ("min", 2),
    ("max", 2),
    ("rand", 2),
];

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Tok::Num(text.parse().map_err(|_| format!("bad number {text}"))?));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match word.as_str() {
                "AND" | "OR" | "NOT" => out.push(Tok::Op(word)),
                _ => out.push(Tok::Ident(word)),
            }
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (tok, len) = match (c, two.as_str()) {
                (_, "<=") => (Tok::Op("<=".into()), 2),
                (_, ">=") => (Tok::Op(">=".into()), 2),
                (_, "!=") => (Tok::Op("!=".into()), 2),
                ('≤', _) => (Tok::Op("<=".into()), 1),
                ('≥', _) => (Tok::Op(">=".into()), 1),
                ('≠', _) => (Tok::Op("!=".into()), 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('+' | '-' | '*' | '/' | '%' | '<' | '>' | '=', _) => (Tok::Op(c.to_string()), 1),
                _ => return Err(format!("unexpected {c}")),
            };
            out.push(tok);
            i += len;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum StackItem {
    Binary(String, u8),
    Prefix(&'static str, u8),
    Paren,
    Call(String, usize),
}

fn binary_prec(op: &str) -> u8 {
    match op {
        "OR" => 1,
        "AND" => 2,
        "<" | "<=" | "=" | "!=" | ">=" | ">" => 4,
        "+" | "-" => 5,
        _ => 6,
    }
}

fn apply(item: StackItem, output: &mut Vec<String>) -> Result<(), String> {
    match item {
        StackItem::Binary(op, _) => {
            let r = output.pop().ok_or("missing operand")?;
            let l = output.pop().ok_or("missing operand")?;
            output.push(format!("({op} {l} {r})"));
        }
        StackItem::Prefix(name, _) => {
            let x = output.pop().ok_or("missing operand")?;
            output.push(format!("({name} {x})"));
        }
        _ => return Err("unbalanced".into()),
    }
    Ok(())
}

/// Parses `src` into an S-expression, or an error message.
pub fn parse_sexpr(src: &str) -> Result<String, String> {
    let tokens = tokenize(src)?;
    let mut output: Vec<String> = Vec::new();
    let mut stack: Vec<StackItem> = Vec::new();
    let mut expect_operand = true;
    let mut i = 0;
    while i < tokens.len() {
        let tok = tokens[i].clone();
        match tok {
            Tok::Num(v) if expect_operand => {
                output.push(format!("{v}"));
                expect_operand = false;
            }
            Tok::Ident(name) if expect_operand => {
                if let Some(&(_, arity)) = FUNCTIONS.iter().find(|(f, _)| *f == name) {
                    if tokens.get(i + 1) != Some(&Tok::LParen) {
                        return Err(format!("{name} needs arguments"));
                    }
                    stack.push(StackItem::Call(name, arity));
                    i += 1;
                    stack.push(StackItem::Paren);
                } else if SENSORS.contains(&name.as_str()) {
                    output.push(name);
                    expect_operand = false;
                } else {
                    output.push(format!("${name}"));
                    expect_operand = false;
                }
            }
            Tok::Op(op) if expect_operand && op == "-" => stack.push(StackItem::Prefix("neg", 7)),
            Tok::Op(op) if expect_operand && op == "NOT" => {
                stack.push(StackItem::Prefix("not", 3))
            }
            Tok::LParen if expect_operand => stack.push(StackItem::Paren),
            Tok::Op(op) if !expect_operand && op != "NOT" => {
                let prec = binary_prec(&op);
                while let Some(top) = stack.last() {
                    let top_prec = match top {
                        StackItem::Binary(_, p) | StackItem::Prefix(_, p) => *p,
                        _ => break,
                    };
                    if top_prec < prec {
                        break;
                    }
                    let item = stack.pop().expect("non-empty");
                    apply(item, &mut output)?;
                }
                stack.push(StackItem::Binary(op, prec));
                expect_operand = true;
            }
            Tok::Comma | Tok::RParen if !expect_operand => {
                loop {
                    match stack.pop() {
                        Some(StackItem::Paren) => break,
                        Some(item) => apply(item, &mut output)?,
                        None => return Err("unbalanced".into()),
                    }
                }
                if tok == Tok::Comma {
                    match stack.last_mut() {
                        Some(StackItem::Call(_, _)) => {}
                        _ => return Err("comma outside call".into()),
                    }
                    stack.push(StackItem::Paren);
                    // mark one argument consumed
                    if let Some(StackItem::Call(name, remaining)) = stack.iter_mut().rev().nth(1) {
                        if *remaining == 0 {
                            return Err(format!("too many arguments to {name}"));
                        }
                        *remaining -= 1;
                    }
                    expect_operand = true;
                } else if let Some(StackItem::Call(_, _)) = stack.last() {
                    let Some(StackItem::Call(name, remaining)) = stack.pop() else {
                        unreachable!()
                    };
                    if remaining != 1 {
                        return Err(format!("wrong argument count for {name}"));
                    }
                    let arity = FUNCTIONS.iter().find(|(f, _)| *f == name).unwrap().1;
                    let at = output.len().checked_sub(arity).ok_or("missing argument")?;
                    let args = output.split_off(at);
                    output.push(format!("({name} {})", args.join(" ")));
                }
            }
            other => return Err(format!("unexpected {other:?}")),
        }
        i += 1;
    }
    if expect_operand {
        return Err("unexpected end".into());
    }
    while let Some(item) = stack.pop() {
        apply(item, &mut output)?;
    }
    if output.len() != 1 {
        return Err("dangling operands".into());
    }
    Ok(output.pop().expect("one result"))
}
