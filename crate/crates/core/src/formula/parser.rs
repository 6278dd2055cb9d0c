use thiserror::Error;

use super::ast::{BinaryOp, Formula, Function, SensorKind, UnaryOp, KEYWORDS};

pub const DEFAULT_DEPTH_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("{function} takes {want} argument(s), got {got}")]
    Arity {
        function: Function,
        got: usize,
        want: usize,
    },
    #[error("formula nesting exceeds the depth limit of {limit}")]
    DepthExceeded { limit: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(BinaryOp),
    Minus,
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    offset: usize,
}

fn syntax(offset: usize, expected: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        offset,
        expected: expected.into(),
    }
}

fn tokenize(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = source[i..].chars().next().expect("in bounds");
        let start = i;
        let token = match c {
            c if c.is_whitespace() => {
                i += c.len_utf8();
                continue;
            }
            '0'..='9' | '.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac {
                        return Err(syntax(i, "digit after '.'"));
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    let digits = j;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j > digits {
                        i = j;
                    }
                }
                let text = &source[start..i];
                if text.starts_with('.') {
                    return Err(syntax(start, "digit"));
                }
                let value: f64 = text.parse().map_err(|_| syntax(start, "number"))?;
                if !value.is_finite() {
                    return Err(syntax(start, "finite number"));
                }
                Token::Number(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Token::Ident(source[start..i].to_string())
            }
            _ => {
                let rest = &source[i..];
                let (token, len) = if rest.starts_with("<=") {
                    (Token::Op(BinaryOp::Le), 2)
                } else if rest.starts_with(">=") {
                    (Token::Op(BinaryOp::Ge), 2)
                } else if rest.starts_with("!=") {
                    (Token::Op(BinaryOp::Ne), 2)
                } else {
                    let token = match c {
                        '+' => Token::Op(BinaryOp::Add),
                        '-' => Token::Minus,
                        '*' => Token::Op(BinaryOp::Mul),
                        '/' => Token::Op(BinaryOp::Div),
                        '%' => Token::Op(BinaryOp::Mod),
                        '<' => Token::Op(BinaryOp::Lt),
                        '>' => Token::Op(BinaryOp::Gt),
                        '=' => Token::Op(BinaryOp::Eq),
                        '≤' => Token::Op(BinaryOp::Le),
                        '≥' => Token::Op(BinaryOp::Ge),
                        '≠' => Token::Op(BinaryOp::Ne),
                        '(' => Token::LParen,
                        ')' => Token::RParen,
                        ',' => Token::Comma,
                        _ => return Err(syntax(start, "operator, operand or parenthesis")),
                    };
                    (token, c.len_utf8())
                };
                i += len;
                token
            }
        };
        tokens.push(Spanned {
            token,
            offset: start,
        });
    }
    tokens.push(Spanned {
        token: Token::End,
        offset: source.len(),
    });
    Ok(tokens)
}

/// Recursive-descent parser with one function per precedence level.
struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    depth: usize,
    limit: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].token
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].token.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn at_keyword(&self, keyword: &str) -> bool {
        matches!(self.peek(), Token::Ident(name) if name == keyword)
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > self.limit {
            return Err(ParseError::DepthExceeded { limit: self.limit });
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), ParseError> {
        if *self.peek() == token {
            self.advance();
            Ok(())
        } else {
            Err(syntax(self.offset(), what))
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.and()?;
        while self.at_keyword("OR") {
            self.advance();
            let right = self.and()?;
            left = Formula::binary(BinaryOp::Or, left, right);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.not()?;
        while self.at_keyword("AND") {
            self.advance();
            let right = self.not()?;
            left = Formula::binary(BinaryOp::And, left, right);
        }
        Ok(left)
    }

    fn not(&mut self) -> Result<Formula, ParseError> {
        if self.at_keyword("NOT") {
            self.advance();
            self.enter()?;
            let operand = self.not()?;
            self.leave();
            return Ok(Formula::unary(UnaryOp::Not, operand));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.additive()?;
        while let Token::Op(op @ (BinaryOp::Lt
        | BinaryOp::Le
        | BinaryOp::Eq
        | BinaryOp::Ne
        | BinaryOp::Ge
        | BinaryOp::Gt)) = *self.peek()
        {
            self.advance();
            let right = self.additive()?;
            left = Formula::binary(op, left, right);
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Token::Op(BinaryOp::Add) => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => return Ok(left),
            };
            self.advance();
            let right = self.multiplicative()?;
            left = Formula::binary(op, left, right);
        }
    }

    fn multiplicative(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.negation()?;
        while let Token::Op(op @ (BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod)) = *self.peek() {
            self.advance();
            let right = self.negation()?;
            left = Formula::binary(op, left, right);
        }
        Ok(left)
    }

    fn negation(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Token::Minus {
            self.advance();
            self.enter()?;
            let operand = self.negation()?;
            self.leave();
            return Ok(Formula::unary(UnaryOp::Neg, operand));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let offset = self.offset();
        match self.advance() {
            Token::Number(value) => Ok(Formula::Number(value)),
            Token::LParen => {
                self.enter()?;
                let inner = self.or()?;
                self.leave();
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(syntax(offset, "operand"));
                }
                if let Some(function) = Function::from_name(&name) {
                    return self.call(function);
                }
                if let Some(sensor) = SensorKind::from_name(&name) {
                    return Ok(Formula::Sensor(sensor));
                }
                Ok(Formula::Variable(name))
            }
            _ => Err(syntax(offset, "operand")),
        }
    }

    fn call(&mut self, function: Function) -> Result<Formula, ParseError> {
        self.expect(Token::LParen, "'(' after function name")?;
        let mut args = Vec::new();
        if *self.peek() != Token::RParen {
            loop {
                self.enter()?;
                args.push(self.or()?);
                self.leave();
                if *self.peek() == Token::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Token::RParen, "',' or ')'")?;
        if args.len() != function.arity() {
            return Err(ParseError::Arity {
                function,
                got: args.len(),
                want: function.arity(),
            });
        }
        Ok(Formula::Call { function, args })
    }
}

/// Parses formula text with the default depth limit.
pub fn parse_formula(source: &str) -> Result<Formula, ParseError> {
    parse_formula_with_limit(source, DEFAULT_DEPTH_LIMIT)
}

pub fn parse_formula_with_limit(source: &str, limit: usize) -> Result<Formula, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        depth: 0,
        limit,
    };
    let formula = parser.or()?;
    if *parser.peek() != Token::End {
        return Err(syntax(parser.offset(), "operator or end of formula"));
    }
    if formula.depth() > limit {
        return Err(ParseError::DepthExceeded { limit });
    }
    Ok(formula)
}
