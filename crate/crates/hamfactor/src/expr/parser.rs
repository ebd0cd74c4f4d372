//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := base ("^" integer)?
//! base   := number | var | func "(" expr ")" | "(" expr ")" | "-" base
//! var    := ("x" | "y") positive-integer
//! func   := "exp" | "bump" | "step"
//! ```
//!
//! Numbers are decimal literals with an optional exponent; whitespace is
//! insignificant. Quotients are rejected at parse time unless the denominator
//! has a structural positive lower bound.

use super::support::positive_lower_bound;
use super::{HamiltonianExpr, Node};

/// Parse failure, with the byte offset where it happened.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {position}: {kind}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("invalid number literal {0:?}")]
    InvalidNumber(String),
    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),
    #[error("variable index must be a positive integer")]
    VarIndexZero,
    #[error("variable index {index} exceeds half-dimension {n}")]
    VarIndexOutOfRange { index: usize, n: usize },
    #[error("exponent must be a non-negative integer")]
    BadExponent,
    #[error("quotient denominator has no structural positive lower bound")]
    UnguardedQuotient,
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: &'static str, found: String },
    #[error("trailing input")]
    TrailingInput,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                tokens.push((Token::Plus, i));
                i += 1;
            }
            '-' => {
                tokens.push((Token::Minus, i));
                i += 1;
            }
            '*' => {
                tokens.push((Token::Star, i));
                i += 1;
            }
            '/' => {
                tokens.push((Token::Slash, i));
                i += 1;
            }
            '^' => {
                tokens.push((Token::Caret, i));
                i += 1;
            }
            '(' => {
                tokens.push((Token::LParen, i));
                i += 1;
            }
            ')' => {
                tokens.push((Token::RParen, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| ParseError {
                    position: start,
                    kind: ParseErrorKind::InvalidNumber(lit.to_string()),
                })?;
                tokens.push((Token::Number(value), start));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric()) {
                    i += 1;
                }
                tokens.push((Token::Ident(text[start..i].to_string()), start));
            }
            other => {
                return Err(ParseError {
                    position: i,
                    kind: ParseErrorKind::UnexpectedChar(other),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [(Token, usize)],
    pos: usize,
    n: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or(self.end)
    }

    fn bump_token(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t);
        self.pos += 1;
        t
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => format!("{t:?}"),
            None => "end of input".to_string(),
        }
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            position: self.here(),
            kind,
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut node = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    node = Node::Add(Box::new(node), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    node = Node::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut node = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    node = Node::Mul(Box::new(node), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    let at = self.here();
                    self.pos += 1;
                    let den = self.factor()?;
                    if positive_lower_bound(&den).is_none() {
                        return Err(ParseError {
                            position: at,
                            kind: ParseErrorKind::UnguardedQuotient,
                        });
                    }
                    node = Node::Div(Box::new(node), Box::new(den));
                }
                _ => return Ok(node),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            match self.bump_token().cloned() {
                Some(Token::Number(v)) if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 => {
                    Ok(Node::Pow(Box::new(base), v as u32))
                }
                _ => {
                    self.pos -= 1;
                    Err(self.err(ParseErrorKind::BadExponent))
                }
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Node, ParseError> {
        let at = self.here();
        match self.bump_token().cloned() {
            Some(Token::Number(v)) => Ok(Node::Const(v)),
            Some(Token::Minus) => Ok(Node::Neg(Box::new(self.base()?))),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.bump_token() {
                    Some(Token::RParen) => Ok(inner),
                    _ => {
                        self.pos -= 1;
                        Err(self.err(ParseErrorKind::Unexpected {
                            expected: "')'",
                            found: self.found(),
                        }))
                    }
                }
            }
            Some(Token::Ident(name)) => self.ident(at, &name),
            _ => {
                self.pos -= 1;
                Err(self.err(ParseErrorKind::Unexpected {
                    expected: "number, variable, function, '(' or '-'",
                    found: self.found(),
                }))
            }
        }
    }

    fn ident(&mut self, at: usize, name: &str) -> Result<Node, ParseError> {
        if name == "exp" || name == "bump" || name == "step" {
            match self.bump_token() {
                Some(Token::LParen) => {}
                _ => {
                    self.pos -= 1;
                    return Err(self.err(ParseErrorKind::Unexpected {
                        expected: "'('",
                        found: self.found(),
                    }));
                }
            }
            let arg = self.expr()?;
            match self.bump_token() {
                Some(Token::RParen) => {}
                _ => {
                    self.pos -= 1;
                    return Err(self.err(ParseErrorKind::Unexpected {
                        expected: "')'",
                        found: self.found(),
                    }));
                }
            }
            let arg = Box::new(arg);
            return Ok(match name {
                "exp" => Node::Exp(arg),
                "bump" => Node::Bump(arg),
                _ => Node::Step(arg),
            });
        }

        // Variables: x<k> or y<k> with a positive decimal index.
        let mut chars = name.chars();
        let head = chars.next();
        let rest: String = chars.collect();
        if let Some(axis) = head.filter(|c| *c == 'x' || *c == 'y') {
            if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                let index: usize = rest.parse().map_err(|_| ParseError {
                    position: at,
                    kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
                })?;
                if index == 0 {
                    return Err(ParseError {
                        position: at,
                        kind: ParseErrorKind::VarIndexZero,
                    });
                }
                if index > self.n {
                    return Err(ParseError {
                        position: at,
                        kind: ParseErrorKind::VarIndexOutOfRange { index, n: self.n },
                    });
                }
                let slot = 2 * (index - 1) + if axis == 'y' { 1 } else { 0 };
                return Ok(Node::Var(slot));
            }
        }
        Err(ParseError {
            position: at,
            kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
        })
    }
}

/// Parse `text` as a scalar field on R^2n.
pub fn parse(text: &str, n: usize) -> Result<HamiltonianExpr, ParseError> {
    assert!(n >= 1, "half-dimension must be positive");
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        n,
        end: text.len(),
    };
    let root = parser.expr()?;
    if parser.pos != tokens.len() {
        return Err(parser.err(ParseErrorKind::TrailingInput));
    }
    Ok(HamiltonianExpr::from_node(n, root))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_zero() {
        let e = parse("0", 1).unwrap();
        assert_eq!(*e.root(), Node::Const(0.0));
    }

    #[test]
    fn parses_cutoff_product() {
        let e = parse("3*y1*step((y1+1)/0.5)*step((1-y1)/0.5)", 1).unwrap();
        // value checks: plateau of width 1 around 0 times 3*y1
        assert!((e.eval(&[0.0, 0.5]) - 1.5).abs() < 1e-12);
        assert_eq!(e.eval(&[0.0, 2.0]), 0.0);
    }

    #[test]
    fn rejects_out_of_range_variable() {
        let err = parse("x2", 1).unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::VarIndexOutOfRange { index: 2, n: 1 }
        );
    }

    #[test]
    fn rejects_unknown_identifier() {
        let err = parse("sin(x1)", 1).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));
        assert_eq!(err.position, 0);
    }

    #[test]
    fn rejects_unguarded_quotient() {
        let err = parse("1/x1", 2).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnguardedQuotient);
    }

    #[test]
    fn accepts_guarded_quotient() {
        assert!(parse("y1/(x1^2+1)", 1).is_ok());
        assert!(parse("(y1+1)/0.5", 1).is_ok());
    }

    #[test]
    fn rejects_zero_index_and_negative_exponent() {
        assert_eq!(parse("x0", 1).unwrap_err().kind, ParseErrorKind::VarIndexZero);
        assert_eq!(parse("x1^-2", 1).unwrap_err().kind, ParseErrorKind::BadExponent);
    }

    #[test]
    fn reports_syntax_error_position() {
        let err = parse("x1 + ", 1).unwrap_err();
        assert_eq!(err.position, 5);
        let err = parse("x1 @ y1", 1).unwrap_err();
        assert_eq!(err.position, 3);
    }

    #[test]
    fn whitespace_is_insignificant() {
        let a = parse("x1+y1*2.5", 1).unwrap();
        let b = parse("  x1 +\ty1 * 2.5 ", 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponent_literals() {
        let e = parse("1e-3 + 2.5E2", 1).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), 1e-3 + 250.0);
    }

    #[test]
    fn roundtrip_through_printer() {
        for text in [
            "3*y1*step((y1+1)/0.5)*step((1-y1)/0.5)",
            "bump(x1/0.75)*bump(y1/0.75)",
            "-(x1 - 0.25)^3 + exp(y1)",
            "0",
        ] {
            let e = parse(text, 1).unwrap();
            let printed = e.print();
            let reparsed = parse(&printed, 1).unwrap();
            assert_eq!(reparsed, e, "printed form: {printed}");
        }
    }
}
