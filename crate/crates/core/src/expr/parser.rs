use super::{BinaryOp, Expr, ExprError, UnaryOp};
use crate::model::Value;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Op(&'static str),
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    /// 1-based character column.
    pos: usize,
}

fn syntax(position: usize, message: impl Into<String>) -> ExprError {
    ExprError::SyntaxError { position, message: message.into() }
}

fn lex(text: &str) -> Result<(Vec<Token>, usize), ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut is_float = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                is_float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_float = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let tok = if is_float {
                Tok::Float(lit.parse().map_err(|_| syntax(pos, format!("bad number {lit:?}")))?)
            } else {
                Tok::Int(lit.parse().map_err(|_| syntax(pos, format!("integer out of range {lit:?}")))?)
            };
            out.push(Token { tok, pos });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), pos });
            continue;
        }
        if c == '\'' || c == '"' {
            let quote = c;
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(syntax(pos, "unterminated string literal")),
                    Some(&q) if q == quote => {
                        if chars.get(i + 1) == Some(&quote) {
                            s.push(quote);
                            i += 2;
                        } else {
                            i += 1;
                            break;
                        }
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), pos });
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let op2 = match two.as_str() {
            "<=" => Some("<="),
            ">=" => Some(">="),
            "!=" | "<>" => Some("!="),
            "==" => Some("="),
            _ => None,
        };
        if let Some(op) = op2 {
            out.push(Token { tok: Tok::Op(op), pos });
            i += 2;
            continue;
        }
        let tok = match c {
            '<' => Tok::Op("<"),
            '>' => Tok::Op(">"),
            '=' => Tok::Op("="),
            '+' => Tok::Op("+"),
            '-' => Tok::Op("-"),
            '*' => Tok::Op("*"),
            '/' => Tok::Op("/"),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => return Err(syntax(pos, format!("unexpected character {other:?}"))),
        };
        out.push(Token { tok, pos });
        i += 1;
    }
    Ok((out, chars.len() + 1))
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
    end_pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.idx).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.idx).map_or(self.end_pos, |t| t.pos)
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw))
    }

    fn op(&self, op: &str) -> bool {
        matches!(self.peek(), Some(Tok::Op(o)) if *o == op)
    }

    fn unexpected(&self) -> ExprError {
        match self.tokens.get(self.idx) {
            None => syntax(self.end_pos, "unexpected end of input"),
            Some(t) => syntax(t.pos, format!("unexpected token {:?}", t.tok)),
        }
    }

    fn parse_or(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_and()?;
        while self.keyword("or") {
            self.idx += 1;
            let rhs = self.parse_and()?;
            lhs = Expr::Binary { op: BinaryOp::Or, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_not()?;
        while self.keyword("and") {
            self.idx += 1;
            let rhs = self.parse_not()?;
            lhs = Expr::Binary { op: BinaryOp::And, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn parse_not(&mut self) -> Result<Expr, ExprError> {
        if self.keyword("not") {
            self.idx += 1;
            let inner = self.parse_not()?;
            return Ok(Expr::Unary { op: UnaryOp::Not, expr: Box::new(inner) });
        }
        self.parse_cmp()
    }

    fn parse_cmp(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.parse_add()?;
        let op = match self.peek() {
            Some(Tok::Op("<")) => BinaryOp::Lt,
            Some(Tok::Op("<=")) => BinaryOp::Le,
            Some(Tok::Op("=")) => BinaryOp::Eq,
            Some(Tok::Op("!=")) => BinaryOp::Ne,
            Some(Tok::Op(">=")) => BinaryOp::Ge,
            Some(Tok::Op(">")) => BinaryOp::Gt,
            _ => return Ok(lhs),
        };
        self.idx += 1;
        let rhs = self.parse_add()?;
        Ok(Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) })
    }

    fn parse_add(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_mul()?;
        loop {
            let op = if self.op("+") {
                BinaryOp::Add
            } else if self.op("-") {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            self.idx += 1;
            let rhs = self.parse_mul()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn parse_mul(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = if self.op("*") {
                BinaryOp::Mul
            } else if self.op("/") {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            self.idx += 1;
            let rhs = self.parse_unary()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ExprError> {
        if self.op("-") {
            self.idx += 1;
            // Fold negative numeric literals so rendering and parsing agree.
            match self.peek() {
                Some(Tok::Int(i)) => {
                    let v = *i;
                    self.idx += 1;
                    return Ok(Expr::Literal(Value::Int(-v)));
                }
                Some(Tok::Float(f)) => {
                    let v = *f;
                    self.idx += 1;
                    return Ok(Expr::Literal(Value::Float(-v)));
                }
                _ => {}
            }
            let inner = self.parse_unary()?;
            return Ok(Expr::Unary { op: UnaryOp::Neg, expr: Box::new(inner) });
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected());
        };
        let expr = match tok {
            Tok::Int(i) => Expr::Literal(Value::Int(i)),
            Tok::Float(f) => Expr::Literal(Value::Float(f)),
            Tok::Str(s) => Expr::Literal(Value::Str(s)),
            Tok::Ident(id) => {
                let lower = id.to_ascii_lowercase();
                match lower.as_str() {
                    "true" => Expr::Literal(Value::Bool(true)),
                    "false" => Expr::Literal(Value::Bool(false)),
                    "and" | "or" | "not" => return Err(self.unexpected()),
                    _ => Expr::Column(id),
                }
            }
            Tok::LParen => {
                self.idx += 1;
                let inner = self.parse_or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(match self.tokens.get(self.idx) {
                        None => syntax(self.end_pos, "unexpected end of input"),
                        Some(t) => syntax(t.pos, "expected ')'"),
                    });
                }
                self.idx += 1;
                return Ok(inner);
            }
            Tok::RParen | Tok::Op(_) => return Err(self.unexpected()),
        };
        self.idx += 1;
        Ok(expr)
    }
}

/// Parses an expression without type checking.
pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    let (tokens, end_pos) = lex(text)?;
    let mut p = Parser { tokens, idx: 0, end_pos };
    if p.tokens.is_empty() {
        return Err(syntax(p.pos(), "empty expression"));
    }
    let expr = p.parse_or()?;
    if p.idx < p.tokens.len() {
        return Err(p.unexpected());
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_one_based() {
        assert_eq!(
            parse_expr("a > > 1").unwrap_err(),
            ExprError::SyntaxError { position: 5, message: "unexpected token Op(\">\")".into() }
        );
        assert!(matches!(parse_expr("(a > 1"), Err(ExprError::SyntaxError { position: 7, .. })));
        assert!(matches!(parse_expr("a # 1"), Err(ExprError::SyntaxError { position: 3, .. })));
        assert!(matches!(parse_expr("'abc"), Err(ExprError::SyntaxError { position: 1, .. })));
        assert!(matches!(parse_expr("   "), Err(ExprError::SyntaxError { position: 4, .. })));
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_expr("1e3").unwrap(), Expr::Literal(Value::Float(1000.0)));
        assert_eq!(parse_expr("-7").unwrap(), Expr::Literal(Value::Int(-7)));
        assert_eq!(parse_expr(".5").unwrap(), Expr::Literal(Value::Float(0.5)));
    }
}
