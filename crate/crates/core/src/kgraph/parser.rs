use super::syntax::{Atom, Program, Rule, Term};
use super::KgError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Implies,
    Query,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn line_col(&self, pos: usize) -> (usize, usize) {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        (line, col)
    }

    fn err(&self, pos: usize, msg: impl Into<String>) -> KgError {
        let (line, column) = self.line_col(pos);
        KgError::Syntax { line, column, message: msg.into() }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, KgError> {
        let bytes = self.src.as_bytes();
        let mut out = Vec::new();
        while self.pos < bytes.len() {
            let c = bytes[self.pos] as char;
            let start = self.pos;
            if c.is_whitespace() {
                self.pos += 1;
            } else if c == '%' {
                while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c == '(' {
                self.pos += 1;
                out.push((start, Tok::LParen));
            } else if c == ')' {
                self.pos += 1;
                out.push((start, Tok::RParen));
            } else if c == ',' {
                self.pos += 1;
                out.push((start, Tok::Comma));
            } else if c == '.' {
                self.pos += 1;
                out.push((start, Tok::Dot));
            } else if self.src[self.pos..].starts_with(":-") {
                self.pos += 2;
                out.push((start, Tok::Implies));
            } else if self.src[self.pos..].starts_with("?-") {
                self.pos += 2;
                out.push((start, Tok::Query));
            } else if c == '"' || c == '\'' {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    let Some(ch) = self.src[self.pos..].chars().next() else {
                        return Err(self.err(start, "unterminated string"));
                    };
                    self.pos += ch.len_utf8();
                    if ch == c {
                        break;
                    }
                    if ch == '\\' {
                        let Some(esc) = self.src[self.pos..].chars().next() else {
                            return Err(self.err(start, "unterminated string"));
                        };
                        self.pos += esc.len_utf8();
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                    } else {
                        s.push(ch);
                    }
                }
                out.push((start, Tok::Str(s)));
            } else if c.is_alphanumeric() || c == '_' {
                while self.pos < bytes.len() {
                    let ch = bytes[self.pos] as char;
                    let namespaced = ch == ':'
                        && bytes.get(self.pos + 1).is_some_and(|n| (*n as char).is_ascii_alphabetic());
                    if ch.is_ascii_alphanumeric() || ch == '_' || ch == '-' || namespaced {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                out.push((start, Tok::Ident(self.src[start..self.pos].to_string())));
            } else {
                return Err(self.err(start, format!("unexpected character {c:?}")));
            }
        }
        Ok(out)
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    toks: Vec<(usize, Tok)>,
    i: usize,
    anon: usize,
}

fn is_concat(name: &str) -> bool {
    name == "concat" || name == "ig:concat"
}

fn is_var(name: &str) -> bool {
    name.starts_with(|c: char| c.is_ascii_uppercase() || c == '_')
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map_or(self.lexer.src.len(), |(p, _)| *p)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), KgError> {
        if self.peek() == Some(&want) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.lexer.err(self.pos(), format!("expected {what}")))
        }
    }

    fn term(&mut self, in_head: bool) -> Result<Term, KgError> {
        let pos = self.pos();
        match self.toks.get(self.i).map(|(_, t)| t.clone()) {
            Some(Tok::Str(s)) => {
                self.i += 1;
                Ok(Term::constant(&s))
            }
            Some(Tok::Ident(name)) => {
                self.i += 1;
                if self.peek() == Some(&Tok::LParen) {
                    if !is_concat(&name) {
                        return Err(self.lexer.err(pos, format!("unknown function {name}")));
                    }
                    if !in_head {
                        return Err(self.lexer.err(pos, "concat is only allowed in rule heads"));
                    }
                    self.i += 1;
                    let a = self.term(in_head)?;
                    self.expect(Tok::Comma, "','")?;
                    let b = self.term(in_head)?;
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(Term::Concat(Box::new(a), Box::new(b)));
                }
                if name == "_" {
                    self.anon += 1;
                    Ok(Term::Var(format!("_{}", self.anon)))
                } else if is_var(&name) {
                    Ok(Term::Var(name))
                } else {
                    Ok(Term::constant(&name))
                }
            }
            _ => Err(self.lexer.err(pos, "expected a term")),
        }
    }

    fn atom(&mut self, in_head: bool) -> Result<Atom, KgError> {
        let pos = self.pos();
        let Some(Tok::Ident(name)) = self.peek().cloned() else {
            return Err(self.lexer.err(pos, "expected a predicate name"));
        };
        if is_var(&name) {
            return Err(self.lexer.err(pos, format!("predicate {name} must start with a lowercase letter")));
        }
        self.i += 1;
        let mut terms = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.i += 1;
            if self.peek() != Some(&Tok::RParen) {
                loop {
                    terms.push(self.term(in_head)?);
                    if self.peek() == Some(&Tok::Comma) {
                        self.i += 1;
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "')'")?;
        }
        Ok(Atom { predicate: name, terms })
    }

    fn conjunction(&mut self) -> Result<Vec<Atom>, KgError> {
        let mut atoms = vec![self.atom(false)?];
        while self.peek() == Some(&Tok::Comma) {
            self.i += 1;
            atoms.push(self.atom(false)?);
        }
        Ok(atoms)
    }

    fn program(mut self) -> Result<Program, KgError> {
        let mut prog = Program::default();
        while self.peek().is_some() {
            if self.peek() == Some(&Tok::Query) {
                self.i += 1;
                prog.queries.push(self.conjunction()?);
                self.expect(Tok::Dot, "'.'")?;
                continue;
            }
            let head_pos = self.pos();
            let head = self.atom(true)?;
            if self.peek() == Some(&Tok::Implies) {
                self.i += 1;
                let body = self.conjunction()?;
                self.expect(Tok::Dot, "'.'")?;
                prog.rules.push(Rule { head, body });
            } else {
                self.expect(Tok::Dot, "'.' or ':-'")?;
                if !head.is_ground() {
                    return Err(self.lexer.err(head_pos, format!("fact {head} must be ground")));
                }
                prog.facts.push(head);
            }
        }
        Ok(prog)
    }
}

/// Parses rules (`h :- b1, b2.`), facts (`p(a).`) and queries (`?- q.`).
pub fn parse_program(text: &str) -> Result<Program, KgError> {
    let lexer = Lexer { src: text, pos: 0 };
    let toks = Lexer { src: text, pos: 0 }.tokens()?;
    Parser { lexer, toks, i: 0, anon: 0 }.program()
}

/// Parses a conjunctive query with or without the leading `?-` and trailing `.`.
pub fn parse_query(text: &str) -> Result<Vec<Atom>, KgError> {
    let trimmed = text.trim();
    let body = trimmed.strip_prefix("?-").unwrap_or(trimmed).trim();
    let body = body.strip_suffix('.').unwrap_or(body);
    let prog = parse_program(&format!("?- {body}."))?;
    Ok(prog.queries.into_iter().next().unwrap_or_default())
}
