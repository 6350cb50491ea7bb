//! Hand-written lexer and recursive-descent parser for the query subset.
//!
//! Precedence, loosest first: `or`, `and`, `not`, then one non-associative
//! comparison (`= <> != < <= > >= overlaps inside in`). Keywords are case
//! insensitive; identifiers keep their case.

use super::ast::{BinOp, Binding, Expr, Lit, QueryAst, Select, SelectItem, Source};
use super::QueryError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 14] = ["<>", "!=", "<=", ">=", "=", "<", ">", "(", ")", ",", ".", "*", ";", "-"];

fn lex(text: &str) -> Result<Vec<Token>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| QueryError::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let (tl, tc) = (line, col);
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut real = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                real = true;
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
                    real = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            if real {
                Tok::Real(s.parse().map_err(|_| err(tl, tc, format!("bad number {s}")))?)
            } else {
                Tok::Int(s.parse().map_err(|_| err(tl, tc, format!("integer {s} out of range")))?)
            }
        } else if c == '"' || c == '\'' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(err(tl, tc, "unterminated string".into())),
                    Some('\\') if i + 1 < chars.len() => {
                        s.push(chars[i + 1]);
                        i += 2;
                    }
                    Some(&q) if q == c => {
                        i += 1;
                        break;
                    }
                    Some(&ch) => {
                        if ch == '\n' {
                            line += 1;
                        }
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            Tok::Str(s)
        } else {
            let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    i += s.len();
                    Tok::Sym(s)
                }
                None => return Err(err(tl, tc, format!("unexpected character '{c}'"))),
            }
        };
        col += i - start;
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn is_kw(t: &Tok, kw: &str) -> bool {
    matches!(t, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
}

const RESERVED: [&str; 12] = ["select", "distinct", "from", "where", "and", "or", "not", "in", "only", "as", "overlaps", "inside"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, QueryError> {
        let t = &self.toks[self.pos];
        let found = match &t.tok {
            Tok::Eof => "end of input".to_string(),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int(i) => format!("{i}"),
            Tok::Real(r) => format!("{r}"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Sym(s) => format!("'{s}'"),
        };
        Err(QueryError::Syntax { line: t.line, col: t.col, msg: format!("{}, found {found}", msg.into()) })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if is_kw(self.peek(), kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(format!("expected '{kw}'"))
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), QueryError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("expected '{s}'"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek() {
            Tok::Ident(s) if !RESERVED.iter().any(|k| s.eq_ignore_ascii_case(k)) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error(format!("expected {what}")),
        }
    }

    fn query(&mut self) -> Result<QueryAst, QueryError> {
        self.expect_kw("select")?;
        let distinct = self.eat_kw("distinct");
        let select = if self.eat_sym("*") {
            Select::Star
        } else {
            let mut items = Vec::new();
            loop {
                let expr = self.expr()?;
                let alias = if self.eat_kw("as") { Some(self.ident("alias")?) } else { None };
                items.push(SelectItem { expr, alias });
                if !self.eat_sym(",") {
                    break;
                }
            }
            Select::Items(items)
        };
        self.expect_kw("from")?;
        let mut from = Vec::new();
        loop {
            let var = self.ident("variable name")?;
            self.expect_kw("in")?;
            let only = self.eat_kw("only");
            let root = self.ident("class or variable")?;
            let mut steps = Vec::new();
            while self.eat_sym(".") {
                steps.push(self.ident("attribute")?);
            }
            let source = if steps.is_empty() {
                Source::Extent { class: root, only }
            } else if only {
                return self.error("'only' applies to classes, not paths");
            } else {
                Source::Path { root, steps }
            };
            from.push(Binding { var, source });
            if !self.eat_sym(",") {
                break;
            }
        }
        let filter = if self.eat_kw("where") { Some(self.expr()?) } else { None };
        self.eat_sym(";");
        if *self.peek() != Tok::Eof {
            return self.error("expected end of query");
        }
        Ok(QueryAst { distinct, select, from, filter })
    }

    fn expr(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.and_expr()?;
        while self.eat_kw("or") {
            let r = self.and_expr()?;
            e = Expr::Binary(BinOp::Or, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.not_expr()?;
        while self.eat_kw("and") {
            let r = self.not_expr()?;
            e = Expr::Binary(BinOp::And, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> Result<Expr, QueryError> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.cmp_expr()
    }

    fn cmp_op(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Sym("=") => Some(BinOp::Eq),
            Tok::Sym("<>") | Tok::Sym("!=") => Some(BinOp::Ne),
            Tok::Sym("<") => Some(BinOp::Lt),
            Tok::Sym("<=") => Some(BinOp::Le),
            Tok::Sym(">") => Some(BinOp::Gt),
            Tok::Sym(">=") => Some(BinOp::Ge),
            t if is_kw(t, "overlaps") => Some(BinOp::Overlaps),
            t if is_kw(t, "inside") => Some(BinOp::Inside),
            t if is_kw(t, "in") => Some(BinOp::In),
            _ => None,
        }
    }

    fn cmp_expr(&mut self) -> Result<Expr, QueryError> {
        let l = self.primary()?;
        let Some(op) = self.cmp_op() else { return Ok(l) };
        self.bump();
        let r = self.primary()?;
        if self.cmp_op().is_some() {
            return self.error("comparisons do not chain; add parentheses");
        }
        Ok(Expr::Binary(op, Box::new(l), Box::new(r)))
    }

    fn args(&mut self) -> Result<Vec<Expr>, QueryError> {
        let mut args = Vec::new();
        if self.eat_sym(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_sym(")") {
                return Ok(args);
            }
            self.expect_sym(",")?;
        }
    }

    fn primary(&mut self) -> Result<Expr, QueryError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Lit(Lit::Int(i)))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(Expr::Lit(Lit::Real(r)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Lit::Str(s)))
            }
            Tok::Sym("-") => {
                self.bump();
                match self.bump() {
                    Tok::Int(i) => Ok(Expr::Lit(Lit::Int(-i))),
                    Tok::Real(r) => Ok(Expr::Lit(Lit::Real(-r))),
                    _ => {
                        self.pos -= 1;
                        self.error("expected a number after '-'")
                    }
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("true") || s.eq_ignore_ascii_case("false") => {
                self.bump();
                Ok(Expr::Lit(Lit::Bool(s.eq_ignore_ascii_case("true"))))
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("null") => {
                self.bump();
                Ok(Expr::Lit(Lit::Null))
            }
            Tok::Ident(_) => {
                let name = self.ident("expression")?;
                if matches!(self.peek(), Tok::Sym("(")) {
                    self.bump();
                    let args = self.args()?;
                    return self.postfix(Expr::Call { name, args });
                }
                self.postfix(Expr::Path { root: name, steps: Vec::new() })
            }
            _ => self.error("expected an expression"),
        }
    }

    fn postfix(&mut self, mut e: Expr) -> Result<Expr, QueryError> {
        while matches!(self.peek(), Tok::Sym(".")) && matches!(self.peek_at(1), Tok::Ident(_)) {
            self.bump();
            let name = self.ident("attribute or method")?;
            if self.eat_sym("(") {
                let args = self.args()?;
                e = Expr::Method { recv: Box::new(e), name, args };
            } else if let Expr::Path { steps, .. } = &mut e {
                steps.push(name);
            } else {
                return self.error("attribute access applies to paths only");
            }
        }
        Ok(e)
    }
}

pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.query()
}
