//! Parser for rendered type strings. Accepts both the PEP 585 spellings
//! produced by [`TypeExpr::render`] and the typing-module spellings found in
//! annotations (`List[int]`, `Optional[X]`, `X | Y`, quoted forward refs).

use thiserror::Error;

use super::{base, TypeExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse type `{input}`: {message}")]
pub struct TypeParseError {
    pub input: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Str(String),
    LBrack,
    RBrack,
    LParen,
    RParen,
    Comma,
    Pipe,
    Ellipsis,
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '[' => {
                out.push(Tok::LBrack);
                i += 1
            }
            ']' => {
                out.push(Tok::RBrack);
                i += 1
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1
            }
            '|' => {
                out.push(Tok::Pipe);
                i += 1
            }
            '.' if chars[i..].starts_with(&['.', '.', '.']) => {
                out.push(Tok::Ellipsis);
                i += 3
            }
            '"' | '\'' => {
                let quote = c;
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != quote {
                    j += 1;
                }
                if j >= chars.len() {
                    return Err("unterminated string".into());
                }
                out.push(Tok::Str(chars[start..j].iter().collect()));
                i = j + 1;
            }
            c if c.is_alphanumeric() || c == '_' || c == '$' || c == '-' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '.' | '$' | '-'))
                {
                    i += 1;
                }
                out.push(Tok::Name(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), String> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            other => Err(format!("expected {tok:?}, found {other:?}")),
        }
    }

    fn union(&mut self) -> Result<TypeExpr, String> {
        let mut members = vec![self.atom()?];
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            members.push(self.atom()?);
        }
        Ok(if members.len() == 1 {
            members.pop().unwrap()
        } else {
            TypeExpr::raw(base::UNION, members)
        })
    }

    /// Comma-separated arguments up to (and consuming) `close`.
    fn arg_list(&mut self, close: Tok, literal: bool) -> Result<Vec<TypeExpr>, String> {
        let mut args = Vec::new();
        loop {
            if self.peek() == Some(&close) {
                self.pos += 1;
                return Ok(args);
            }
            args.push(if literal { self.literal_value()? } else { self.arg()? });
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(t) if t == close => return Ok(args),
                other => return Err(format!("expected `,` or {close:?}, found {other:?}")),
            }
        }
    }

    fn arg(&mut self) -> Result<TypeExpr, String> {
        match self.peek() {
            Some(Tok::LBrack) => {
                self.pos += 1;
                Ok(TypeExpr::raw(base::TUPLE, self.arg_list(Tok::RBrack, false)?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                self.expect(Tok::RParen)?;
                Ok(TypeExpr::simple("()"))
            }
            _ => self.union(),
        }
    }

    fn literal_value(&mut self) -> Result<TypeExpr, String> {
        match self.next() {
            Some(Tok::Str(_)) => Ok(TypeExpr::str()),
            Some(Tok::Name(n)) => Ok(match n.as_str() {
                "True" | "False" => TypeExpr::bool(),
                "None" => TypeExpr::none(),
                n if n.parse::<i64>().is_ok() => TypeExpr::int(),
                _ => TypeExpr::any(),
            }),
            other => Err(format!("bad literal {other:?}")),
        }
    }

    fn atom(&mut self) -> Result<TypeExpr, String> {
        match self.next() {
            Some(Tok::Ellipsis) => Ok(TypeExpr::ellipsis()),
            Some(Tok::Str(inner)) => parse_raw(&inner),
            Some(Tok::Name(name)) => {
                if self.peek() == Some(&Tok::LBrack) {
                    self.pos += 1;
                    let literal = matches!(name.as_str(), "Literal" | "typing.Literal");
                    let mut args = self.arg_list(Tok::RBrack, literal)?;
                    if args.len() == 1 && args[0].is("()") {
                        args.clear();
                    } else if args.iter().any(|a| a.is("()")) {
                        return Err("`()` is only valid as `tuple[()]`".into());
                    }
                    if base::ELEMENTARY.contains(&name.as_str()) {
                        return Err(format!("`{name}` takes no type arguments"));
                    }
                    Ok(TypeExpr::raw(name, args))
                } else if matches!(name.as_str(), "tuple" | "Tuple" | "typing.Tuple") {
                    Ok(TypeExpr::tuple_of(TypeExpr::any()))
                } else {
                    Ok(TypeExpr::simple(name))
                }
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

fn parse_raw(s: &str) -> Result<TypeExpr, String> {
    let toks = tokenize(s)?;
    if toks.is_empty() {
        return Err("empty type".into());
    }
    let mut p = Parser { toks, pos: 0 };
    let t = p.union()?;
    if p.pos != p.toks.len() {
        return Err(format!("trailing input at token {}", p.pos));
    }
    Ok(t)
}

/// Parses and normalizes a type string.
pub fn parse_type(s: &str) -> Result<TypeExpr, TypeParseError> {
    parse_raw(s)
        .map(|t| t.normalize())
        .map_err(|message| TypeParseError {
            input: s.to_string(),
            message,
        })
}
