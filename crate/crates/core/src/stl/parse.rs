//! Recursive-descent parser for the STL text syntax.
//!
//! ```text
//! formula := imp ('U' interval? imp)*          left-binding, lowest precedence
//! imp     := disj ('->' imp)?
//! disj    := conj ('||' conj)*
//! conj    := unary ('&&' unary)*
//! unary   := '!' unary | '[]' interval? unary | '<>' interval? unary
//!          | 'true' | 'false' | '(' formula ')' | atom
//! atom    := expr ('<' | '<=' | '>' | '>=') expr
//! interval:= '[' number ',' (number | 'inf') ']'
//! expr    := term (('+' | '-') term)*
//! term    := factor ('*' factor)*
//! factor  := '-' factor | number | ident | 'abs' '(' expr ')'
//!          | ('min' | 'max') '(' expr ',' expr ')' | '(' expr ')'
//! ```

use thiserror::Error;

use super::{Expr, Formula, TimeInterval};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Always,
    Eventually,
    Bang,
    AndAnd,
    OrOr,
    Arrow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Plus,
    Minus,
    Star,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number {n}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
            other => format!("{other:?}"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const KEYWORDS: &[&str] = &["U", "true", "false", "inf", "abs", "min", "max"];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
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
        let at = |k: usize| chars.get(i + k).copied();
        let start_col = col;
        let (tok, width) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' if at(1) == Some(']') => (Tok::Always, 2),
            '[' => (Tok::LBrack, 1),
            ']' => (Tok::RBrack, 1),
            ',' => (Tok::Comma, 1),
            '<' if at(1) == Some('>') => (Tok::Eventually, 2),
            '<' if at(1) == Some('=') => (Tok::Le, 2),
            '<' => (Tok::Lt, 1),
            '>' if at(1) == Some('=') => (Tok::Ge, 2),
            '>' => (Tok::Gt, 1),
            '=' if at(1) == Some('=') => (Tok::Eq, 2),
            '!' if at(1) == Some('=') => (Tok::Eq, 2),
            '!' => (Tok::Bang, 1),
            '&' if at(1) == Some('&') => (Tok::AndAnd, 2),
            '|' if at(1) == Some('|') => (Tok::OrOr, 2),
            '-' if at(1) == Some('>') => (Tok::Arrow, 2),
            '-' => (Tok::Minus, 1),
            '+' => (Tok::Plus, 1),
            '*' => (Tok::Star, 1),
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text: String = chars[i..j].iter().collect();
                let n = text.parse::<f64>().map_err(|_| ParseError {
                    line,
                    col,
                    msg: format!("malformed number `{text}`"),
                })?;
                (Tok::Num(n), j - i)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                (Tok::Ident(chars[i..j].iter().collect()), j - i)
            }
            other => {
                return Err(ParseError { line, col, msg: format!("unexpected character `{other}`") });
            }
        };
        out.push(Token { tok, line, col: start_col });
        i += width;
        col += width;
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError { line: t.line, col: t.col, msg: msg.into() })
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {}", self.peek().describe()))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn formula(&mut self) -> PResult<Formula> {
        let mut lhs = self.implication()?;
        while self.is_keyword("U") {
            self.bump();
            let i = self.opt_interval()?;
            let rhs = self.implication()?;
            lhs = Formula::until(i, lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::OrOr {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::negate(self.unary()?))
            }
            Tok::Always => {
                self.bump();
                let i = self.opt_interval()?;
                Ok(Formula::always(i, self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                let i = self.opt_interval()?;
                Ok(Formula::eventually(i, self.unary()?))
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula::tt())
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::LParen => {
                // `(` opens either a sub-formula or an arithmetic term of an atom.
                let save = self.pos;
                self.bump();
                let as_formula = self.formula().and_then(|f| self.expect(Tok::RParen, "`)`").map(|_| f));
                match as_formula {
                    Ok(f) => Ok(f),
                    Err(e1) => {
                        let reached = self.pos;
                        self.pos = save;
                        match self.atom() {
                            Ok(a) => Ok(a),
                            Err(e2) => {
                                if reached > self.pos {
                                    Err(e1)
                                } else {
                                    Err(e2)
                                }
                            }
                        }
                    }
                }
            }
            _ => self.atom(),
        }
    }

    fn opt_interval(&mut self) -> PResult<TimeInterval> {
        if *self.peek() != Tok::LBrack {
            return Ok(TimeInterval::unbounded());
        }
        let open = self.pos;
        self.bump();
        let lo = self.number()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi = if self.is_keyword("inf") {
            self.bump();
            f64::INFINITY
        } else {
            self.number()?
        };
        self.expect(Tok::RBrack, "`]`")?;
        TimeInterval::new(lo, hi).map_err(|e| {
            let t = &self.toks[open];
            ParseError {
                line: t.line,
                col: t.col,
                msg: if lo == hi { format!("singular interval [{lo},{hi}] is not allowed") } else { e.to_string() },
            }
        })
    }

    fn number(&mut self) -> PResult<f64> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            other => self.err(format!("expected a number, found {}", other.describe())),
        }
    }

    fn atom(&mut self) -> PResult<Formula> {
        let lhs = self.expr()?;
        let op = self.peek().clone();
        match op {
            Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge => {
                self.bump();
            }
            Tok::Eq => return self.err("equality comparisons are not supported; use two inequalities"),
            other => return self.err(format!("expected a comparison, found {}", other.describe())),
        }
        let rhs = self.expr()?;
        let is_zero = |e: &Expr| matches!(e, Expr::Const(c) if *c == 0.0);
        // a > b  ->  a - b > 0          a >= b  ->  !(b - a > 0)
        // a < b  ->  b - a > 0          a <= b  ->  !(a - b > 0)
        let diff = |pos: Expr, neg: Expr| if is_zero(&neg) { pos } else { Expr::sub(pos, neg) };
        Ok(match op {
            Tok::Gt => Formula::atom(diff(lhs, rhs)),
            Tok::Lt => Formula::atom(diff(rhs, lhs)),
            Tok::Ge => Formula::negate(Formula::atom(diff(rhs, lhs))),
            Tok::Le => Formula::negate(Formula::atom(diff(lhs, rhs))),
            _ => unreachable!(),
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                if let Tok::Num(n) = *self.peek() {
                    self.bump();
                    return Ok(Expr::Const(-n));
                }
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Const(n))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "abs" => {
                    self.bump();
                    self.expect(Tok::LParen, "`(` after abs")?;
                    let a = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Expr::Abs(Box::new(a)))
                }
                "min" | "max" => {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let a = Box::new(self.expr()?);
                    self.expect(Tok::Comma, "`,`")?;
                    let b = Box::new(self.expr()?);
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(if name == "min" { Expr::Min(a, b) } else { Expr::Max(a, b) })
                }
                kw if KEYWORDS.contains(&kw) => self.err(format!("keyword `{kw}` cannot be used as a variable")),
                _ => {
                    self.bump();
                    Ok(Expr::Var(name))
                }
            },
            other => self.err(format!("expected a term, found {}", other.describe())),
        }
    }
}

/// Parses STL text into a desugared [`Formula`].
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after formula", p.peek().describe()));
    }
    Ok(f)
}
