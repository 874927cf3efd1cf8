//! Tokenizer for `.mps` sources. Comments run from `--` to end of line.

use crate::diag::{Error, ErrorKind, Result, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    // Keywords.
    Imported,
    Node,
    Returns,
    Wcet,
    Var,
    Let,
    Tel,
    Rate,
    Due,
    Fby,
    TyInt,
    TyBool,
    True,
    False,
    // Punctuation and operators.
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
    Equal,
    Plus,
    Minus,
    Star,
    Slash,
    UnderOp,  // /^
    OverOp,   // *^
    OffsetOp, // ~>
    Eof,
}

impl Tok {
    /// Human-readable token name for diagnostics.
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Imported => "`imported`".into(),
            Tok::Node => "`node`".into(),
            Tok::Returns => "`returns`".into(),
            Tok::Wcet => "`wcet`".into(),
            Tok::Var => "`var`".into(),
            Tok::Let => "`let`".into(),
            Tok::Tel => "`tel`".into(),
            Tok::Rate => "`rate`".into(),
            Tok::Due => "`due`".into(),
            Tok::Fby => "`fby`".into(),
            Tok::TyInt => "`int`".into(),
            Tok::TyBool => "`bool`".into(),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Equal => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::UnderOp => "`/^`".into(),
            Tok::OverOp => "`*^`".into(),
            Tok::OffsetOp => "`~>`".into(),
            Tok::Eof => "end of file".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(src: &str) -> Result<Vec<Token>> {
    let mut toks = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = src.chars().peekable();

    macro_rules! push {
        ($tok:expr, $len:expr) => {
            toks.push(Token {
                tok: $tok,
                span: Span::new(line, col, $len),
            })
        };
    }

    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '-' => {
                chars.next();
                if chars.peek() == Some(&'-') {
                    // Comment to end of line.
                    while let Some(&c) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        chars.next();
                    }
                    col += 2; // Columns within a comment are never reported.
                } else {
                    push!(Tok::Minus, 1);
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                push!(Tok::LParen, 1);
                col += 1;
            }
            ')' => {
                chars.next();
                push!(Tok::RParen, 1);
                col += 1;
            }
            ':' => {
                chars.next();
                push!(Tok::Colon, 1);
                col += 1;
            }
            ';' => {
                chars.next();
                push!(Tok::Semi, 1);
                col += 1;
            }
            ',' => {
                chars.next();
                push!(Tok::Comma, 1);
                col += 1;
            }
            '=' => {
                chars.next();
                push!(Tok::Equal, 1);
                col += 1;
            }
            '+' => {
                chars.next();
                push!(Tok::Plus, 1);
                col += 1;
            }
            '*' => {
                chars.next();
                if chars.peek() == Some(&'^') {
                    chars.next();
                    push!(Tok::OverOp, 2);
                    col += 2;
                } else {
                    push!(Tok::Star, 1);
                    col += 1;
                }
            }
            '/' => {
                chars.next();
                if chars.peek() == Some(&'^') {
                    chars.next();
                    push!(Tok::UnderOp, 2);
                    col += 2;
                } else {
                    push!(Tok::Slash, 1);
                    col += 1;
                }
            }
            '~' => {
                chars.next();
                if chars.peek() == Some(&'>') {
                    chars.next();
                    push!(Tok::OffsetOp, 2);
                    col += 2;
                } else {
                    return Err(Error::new(
                        ErrorKind::Parse,
                        Span::new(line, col, 1),
                        "unexpected `~` (did you mean `~>`?)",
                    ));
                }
            }
            c if c.is_ascii_digit() => {
                let start = col;
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        text.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let span = Span::new(line, start, col - start);
                let v: i64 = text
                    .parse()
                    .map_err(|_| Error::new(ErrorKind::Parse, span, "integer literal overflows"))?;
                toks.push(Token {
                    tok: Tok::Int(v),
                    span,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = col;
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        text.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let tok = match text.as_str() {
                    "imported" => Tok::Imported,
                    "node" => Tok::Node,
                    "returns" => Tok::Returns,
                    "wcet" => Tok::Wcet,
                    "var" => Tok::Var,
                    "let" => Tok::Let,
                    "tel" => Tok::Tel,
                    "rate" => Tok::Rate,
                    "due" => Tok::Due,
                    "fby" => Tok::Fby,
                    "int" => Tok::TyInt,
                    "bool" => Tok::TyBool,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(text.clone()),
                };
                toks.push(Token {
                    tok,
                    span: Span::new(line, start, col - start),
                });
            }
            other => {
                return Err(Error::new(
                    ErrorKind::Parse,
                    Span::new(line, col, 1),
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    toks.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col, 0),
    });
    Ok(toks)
}
