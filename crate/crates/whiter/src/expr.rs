//! A small expression language for symbols given as text, either on the
//! command line or inside a config file.
//!
//! Grammar: `+ - * /`, parentheses, integer powers with `^`, the functions
//! `exp(z)` and `sqrt(z)` (with `sqrt(z, -1)` for the opposite sheet), and
//! the names `a`/`alpha` (the transform variable), `i`, `lam`/`lambda` (the
//! coupling parameter), and `L`/`len` (the carrier length). Imaginary
//! literals are written with a suffix, `2.5i`.

use num_complex::Complex64 as C64;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Imag(f64),
    Alpha,
    Lambda,
    Len,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, i32),
    Exp(Box<Node>),
    /// square root on the given sheet, `+1` or `-1`
    Sqrt(Box<Node>, i32),
}

#[derive(Debug, Clone)]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: {}", self.pos, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Which of the named variables an expression mentions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Uses {
    pub alpha: bool,
    pub lambda: bool,
    pub len: bool,
}

pub fn uses(node: &Node) -> Uses {
    fn walk(node: &Node, u: &mut Uses) {
        match node {
            Node::Alpha => u.alpha = true,
            Node::Lambda => u.lambda = true,
            Node::Len => u.len = true,
            Node::Num(_) | Node::Imag(_) => {}
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                walk(a, u);
                walk(b, u);
            }
            Node::Neg(a) | Node::Exp(a) | Node::Sqrt(a, _) => walk(a, u),
            Node::Pow(a, _) => walk(a, u),
        }
    }
    let mut u = Uses::default();
    walk(node, &mut u);
    u
}

/// Evaluate at a point. Total: variables not mentioned are simply unused.
pub fn eval(node: &Node, alpha: C64, lambda: C64, len: f64) -> C64 {
    match node {
        Node::Num(x) => C64::new(*x, 0.0),
        Node::Imag(x) => C64::new(0.0, *x),
        Node::Alpha => alpha,
        Node::Lambda => lambda,
        Node::Len => C64::new(len, 0.0),
        Node::Add(a, b) => eval(a, alpha, lambda, len) + eval(b, alpha, lambda, len),
        Node::Sub(a, b) => eval(a, alpha, lambda, len) - eval(b, alpha, lambda, len),
        Node::Mul(a, b) => eval(a, alpha, lambda, len) * eval(b, alpha, lambda, len),
        Node::Div(a, b) => eval(a, alpha, lambda, len) / eval(b, alpha, lambda, len),
        Node::Neg(a) => -eval(a, alpha, lambda, len),
        Node::Pow(a, k) => eval(a, alpha, lambda, len).powi(*k),
        Node::Exp(a) => eval(a, alpha, lambda, len).exp(),
        Node::Sqrt(a, sheet) => {
            let r = eval(a, alpha, lambda, len).sqrt();
            if *sheet < 0 {
                -r
            } else {
                r
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | ',' => {
                let tok = match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => Tok::Comma,
                };
                out.push((i, tok));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if i < b.len() && b[i] == b'.' {
                    i += 1;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // exponent only when it is actually followed by digits,
                // so "2e" in "2exp(a)" stays a name boundary
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    pos: start,
                    message: format!("bad number literal '{}'", text),
                })?;
                // an immediate 'i' suffix makes the literal imaginary
                if i < b.len()
                    && b[i] == b'i'
                    && !(i + 1 < b.len() && (b[i + 1].is_ascii_alphanumeric() || b[i + 1] == b'_'))
                {
                    i += 1;
                    out.push((start, Tok::Imag(value)));
                } else {
                    out.push((start, Tok::Num(value)));
                }
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
            }
            _ => {
                return Err(ParseError {
                    pos: i,
                    message: format!("unexpected character '{}'", c),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src_len, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {}", what)))
        }
    }

    fn err(&self, message: String) -> ParseError {
        ParseError { pos: self.here(), message }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut node = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    node = Node::Add(Box::new(node), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    node = Node::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut node = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    node = Node::Mul(Box::new(node), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    node = Node::Div(Box::new(node), Box::new(self.unary()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let negative = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        let pos = self.here();
        match self.bump() {
            Some(Tok::Num(x)) if x.fract() == 0.0 && x.abs() <= 64.0 => {
                let k = x as i32;
                Ok(Node::Pow(Box::new(base), if negative { -k } else { k }))
            }
            _ => Err(ParseError {
                pos,
                message: "the exponent must be an integer between -64 and 64".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Num(x)) => Ok(Node::Num(x)),
            Some(Tok::Imag(x)) => Ok(Node::Imag(x)),
            Some(Tok::LParen) => {
                let node = self.expr()?;
                self.expect(Tok::RParen, "a closing ')'")?;
                Ok(node)
            }
            Some(Tok::Ident(name)) => self.name(name),
            _ => Err(ParseError {
                pos,
                message: "expected a number, a name, or '('".into(),
            }),
        }
    }

    fn name(&mut self, name: String) -> Result<Node, ParseError> {
        match name.as_str() {
            "a" | "alpha" => Ok(Node::Alpha),
            "i" => Ok(Node::Imag(1.0)),
            "lam" | "lambda" => Ok(Node::Lambda),
            "L" | "len" => Ok(Node::Len),
            "exp" => {
                self.expect(Tok::LParen, "'(' after exp")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "a closing ')'")?;
                Ok(Node::Exp(Box::new(arg)))
            }
            "sqrt" => {
                self.expect(Tok::LParen, "'(' after sqrt")?;
                let arg = self.expr()?;
                let mut sheet = 1;
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    let negative = if self.peek() == Some(&Tok::Minus) {
                        self.pos += 1;
                        true
                    } else {
                        false
                    };
                    let pos = self.here();
                    match self.bump() {
                        Some(Tok::Num(x)) if x == 1.0 => sheet = if negative { -1 } else { 1 },
                        _ => {
                            return Err(ParseError {
                                pos,
                                message: "the sheet selector must be 1 or -1".into(),
                            })
                        }
                    }
                }
                self.expect(Tok::RParen, "a closing ')'")?;
                Ok(Node::Sqrt(Box::new(arg), sheet))
            }
            _ => Err(ParseError {
                pos: self.toks[self.pos - 1].0,
                message: format!(
                    "unknown name '{}'; available: alpha, i, lam, L, exp, sqrt",
                    name
                ),
            }),
        }
    }
}

pub fn parse(src: &str) -> Result<Node, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks: &toks, pos: 0, src_len: src.len() };
    let node = p.expr()?;
    if p.pos != toks.len() {
        return Err(p.err("unexpected trailing input".into()));
    }
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, alpha: C64) -> C64 {
        eval(&parse(src).unwrap(), alpha, C64::new(0.0, 0.0), 0.0)
    }

    #[test]
    fn arithmetic_follows_the_usual_precedence() {
        assert_eq!(at("1+2*3^2", C64::new(0.0, 0.0)), C64::new(19.0, 0.0));
        assert_eq!(at("(1+2)*3", C64::new(0.0, 0.0)), C64::new(9.0, 0.0));
        assert_eq!(at("-2^2", C64::new(0.0, 0.0)), C64::new(-4.0, 0.0));
        assert_eq!(at("2^-1", C64::new(0.0, 0.0)), C64::new(0.5, 0.0));
    }

    #[test]
    fn a_rational_symbol_evaluates_like_its_closure() {
        let node = parse("(alpha^2+1)/(alpha^2+4)").unwrap();
        for re in [-3.0, -0.5, 0.0, 1.2, 7.0] {
            let z = C64::new(re, 0.3);
            let direct = (z * z + 1.0) / (z * z + 4.0);
            assert!((eval(&node, z, C64::new(0.0, 0.0), 0.0) - direct).norm() < 1e-15);
        }
    }

    #[test]
    fn imaginary_literals_and_the_unit_agree() {
        assert_eq!(at("2.5i", C64::new(0.0, 0.0)), C64::new(0.0, 2.5));
        assert_eq!(at("2.5*i", C64::new(0.0, 0.0)), C64::new(0.0, 2.5));
        assert_eq!(at("1/(a-1.5i)", C64::new(2.0, 0.0)), 1.0 / C64::new(2.0, -1.5));
    }

    #[test]
    fn named_variables_flow_through() {
        let node = parse("lam*exp(-L)+alpha").unwrap();
        let got = eval(&node, C64::new(1.0, 0.0), C64::new(3.0, 0.0), 2.0);
        assert!((got - (3.0 * (-2.0f64).exp() + 1.0)).norm() < 1e-15);
        let u = uses(&node);
        assert!(u.alpha && u.lambda && u.len);
        assert_eq!(uses(&parse("3+0.5i").unwrap()), Uses::default());
    }

    #[test]
    fn sqrt_sheets_are_opposite() {
        let z = C64::new(-1.0, 0.7);
        let plus = at("sqrt(a)", z);
        let node = parse("sqrt(a, -1)").unwrap();
        let minus = eval(&node, z, C64::new(0.0, 0.0), 0.0);
        assert!((plus + minus).norm() < 1e-15);
        assert!((plus * plus - z).norm() < 1e-15);
    }

    #[test]
    fn scientific_literals_lex_next_to_names() {
        assert_eq!(at("1e-4", C64::new(0.0, 0.0)), C64::new(1e-4, 0.0));
        assert_eq!(at("1E+2", C64::new(0.0, 0.0)), C64::new(100.0, 0.0));
        assert_eq!(at(".5", C64::new(0.0, 0.0)), C64::new(0.5, 0.0));
        // the 'e' in "2e" must not swallow the name that follows it
        assert_eq!(at("2*exp(0)", C64::new(0.0, 0.0)), C64::new(2.0, 0.0));
    }

    #[test]
    fn errors_carry_a_position() {
        let e = parse("alpha+*2").unwrap_err();
        assert_eq!(e.pos, 6);
        assert!(parse("bogus(3)").is_err());
        assert!(parse("2exp(0)").is_err(), "no implicit multiplication");
        assert!(parse("(alpha").is_err());
        assert!(parse("alpha^2.5").is_err(), "fractional powers are not in the language");
        assert!(parse("sqrt(a, 2)").is_err());
        assert!(parse("alpha 3").is_err(), "trailing input");
    }
}
