//! A small arithmetic expression language for describing problems in
//! configuration files.
//!
//! Expressions are functions of the two spatial coordinates `x` and `y`.
//! The grammar supports the four arithmetic operators, exponentiation
//! (right-associative, written `^`), unary minus, parentheses, the constant
//! `pi`, and the functions `sqrt(e)`, `exp(e)`, and `max(a, b)`.
//!
//! Parsing is a straightforward recursive descent over a token stream;
//! evaluation walks the resulting tree. Both report errors with byte
//! offsets into the source string so that a typo in a configuration file
//! points at the offending character.

use std::fmt;
use std::sync::Arc;

/// A parsed expression in the variables `x` and `y`.
#[derive(Debug, Clone)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sqrt(Box<Expr>),
    Exp(Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Evaluates the expression at the point `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::X => x,
            Expr::Y => y,
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => a.eval(x, y).powf(b.eval(x, y)),
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Sqrt(a) => a.eval(x, y).sqrt(),
            Expr::Exp(a) => a.eval(x, y).exp(),
            Expr::Max(a, b) => a.eval(x, y).max(b.eval(x, y)),
        }
    }

    /// Wraps a parsed expression as a shareable scalar field.
    pub fn into_field(self) -> Arc<dyn Fn(monge::Point) -> f64 + Send + Sync> {
        let expr = Arc::new(self);
        Arc::new(move |p: monge::Point| expr.eval(p.x, p.y))
    }
}

/// A parse error, carrying the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at offset {})", self.message, self.offset)
    }
}

impl std::error::Error for ParseError {}

/// Parses a complete expression, rejecting trailing input.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    match parser.peek() {
        Token::End => Ok(expr),
        other => Err(parser.unexpected(other, "end of expression")),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "number {v}"),
            Token::Ident(s) => write!(f, "identifier '{s}'"),
            Token::Plus => write!(f, "'+'"),
            Token::Minus => write!(f, "'-'"),
            Token::Star => write!(f, "'*'"),
            Token::Slash => write!(f, "'/'"),
            Token::Caret => write!(f, "'^'"),
            Token::LParen => write!(f, "'('"),
            Token::RParen => write!(f, "')'"),
            Token::Comma => write!(f, "','"),
            Token::End => write!(f, "end of expression"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => tokens.push((Token::Plus, start)),
            '-' => tokens.push((Token::Minus, start)),
            '*' => tokens.push((Token::Star, start)),
            '/' => tokens.push((Token::Slash, start)),
            '^' => tokens.push((Token::Caret, start)),
            '(' => tokens.push((Token::LParen, start)),
            ')' => tokens.push((Token::RParen, start)),
            ',' => tokens.push((Token::Comma, start)),
            '0'..='9' | '.' => {
                let mut j = i;
                while j < bytes.len() && matches!(bytes[j] as char, '0'..='9' | '.') {
                    j += 1;
                }
                // Exponent suffix: e or E, optional sign, then digits.
                if j < bytes.len()
                    && matches!(bytes[j] as char, 'e' | 'E')
                    && j + 1 < bytes.len()
                    && (bytes[j + 1].is_ascii_digit()
                        || (matches!(bytes[j + 1] as char, '+' | '-')
                            && j + 2 < bytes.len()
                            && bytes[j + 2].is_ascii_digit()))
                {
                    j += 2;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let text = &src[i..j];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    message: format!("invalid number '{text}'"),
                })?;
                tokens.push((Token::Num(value), start));
                i = j;
                continue;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut j = i;
                while j < bytes.len()
                    && matches!(bytes[j] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    j += 1;
                }
                tokens.push((Token::Ident(src[i..j].to_string()), start));
                i = j;
                continue;
            }
            other => {
                return Err(ParseError {
                    offset: start,
                    message: format!("unexpected character '{other}'"),
                })
            }
        }
        i += 1;
    }
    tokens.push((Token::End, src.len()));
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Token {
        self.tokens[self.pos].0.clone()
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn unexpected(&self, found: Token, wanted: &str) -> ParseError {
        ParseError {
            offset: self.offset(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expect(&mut self, token: Token, wanted: &str) -> Result<(), ParseError> {
        if self.peek() == token {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(self.peek(), wanted))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Token::Plus => {
                    self.advance();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.advance();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Token::Star => {
                    self.advance();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Token::Slash => {
                    self.advance();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // Exponentiation binds tighter than unary minus on the left
    // (`-x^2` is `-(x^2)`) and is right-associative (`2^3^2` is `2^(3^2)`).
    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Token::Minus {
            self.advance();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.peek() == Token::Caret {
            self.advance();
            let exponent = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Token::Num(value) => {
                self.advance();
                Ok(Expr::Num(value))
            }
            Token::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                self.advance();
                match name.as_str() {
                    "x" => Ok(Expr::X),
                    "y" => Ok(Expr::Y),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "sqrt" => Ok(Expr::Sqrt(Box::new(self.unary_args()?))),
                    "exp" => Ok(Expr::Exp(Box::new(self.unary_args()?))),
                    "max" => {
                        let (a, b) = self.binary_args()?;
                        Ok(Expr::Max(Box::new(a), Box::new(b)))
                    }
                    _ => Err(ParseError {
                        offset: self.tokens[self.pos.saturating_sub(1)].1,
                        message: format!("unknown identifier '{name}'"),
                    }),
                }
            }
            other => Err(self.unexpected(other, "a number, 'x', 'y', 'pi', a function, or '('")),
        }
    }

    fn unary_args(&mut self) -> Result<Expr, ParseError> {
        self.expect(Token::LParen, "'(' after function name")?;
        let arg = self.expr()?;
        self.expect(Token::RParen, "')'")?;
        Ok(arg)
    }

    fn binary_args(&mut self) -> Result<(Expr, Expr), ParseError> {
        self.expect(Token::LParen, "'(' after function name")?;
        let first = self.expr()?;
        self.expect(Token::Comma, "','")?;
        let second = self.expr()?;
        self.expect(Token::RParen, "')'")?;
        Ok((first, second))
    }
}
