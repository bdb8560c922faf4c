//! Guard and arithmetic expressions over state variables.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! expr    := or
//! or      := and ( ("||" | "or") and )*
//! and     := unary ( ("&&" | "and") unary )*
//! unary   := ("!" | "not") unary | cmp
//! cmp     := sum ( ("==" | "=" | "!=" | "≠" | "<" | "<=" | "≤" | ">" | ">=" | "≥") sum )?
//! sum     := product ( ("+" | "-") product )*
//! product := neg ( ("*" | "×") neg )*
//! neg     := "-" neg | atom
//! atom    := number | "string" | true | false | action | ident | "(" expr ")"
//! ```
//!
//! `action` names the label of the transition being matched and may only be
//! compared for (in)equality with a string literal naming a declared action.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::decimal::{Decimal, DecimalError};
use crate::world::{ActionId, Assignment, Scalar, Schema, VarKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {at}: {message}")]
    Syntax { at: usize, message: String },
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("unknown action '{0}'")]
    UnknownAction(String),
    #[error("'action' is not available in this context")]
    ActionNotAllowed,
    #[error("type error: {0}")]
    Type(String),
    #[error("arithmetic: {0}")]
    Arithmetic(#[from] DecimalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Bool(bool),
    Num(Decimal),
    Str(String),
    Var(String),
    Action,
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Num(n) => write!(f, "{n}"),
            Expr::Str(s) => write!(f, "{s:?}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Action => f.write_str("action"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Not(e) => write!(f, "!({e})"),
            Expr::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Type {
    Bool,
    Num,
    Str,
    Action,
}

/// Result of evaluating an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Num(Decimal),
    Str(String),
}

impl Value {
    pub fn into_scalar(self) -> Option<Scalar> {
        match self {
            Value::Bool(b) => Some(Scalar::Bool(b)),
            Value::Num(n) => Some(Scalar::Num(n)),
            Value::Str(_) => None,
        }
    }
}

/// What an expression may refer to when it is bound.
pub struct BindScope<'a> {
    pub schema: &'a Schema,
    /// `None` forbids the `action` keyword.
    pub actions: Option<&'a BTreeSet<ActionId>>,
}

/// Evaluation context: a state assignment and, for guards, the action.
pub struct Env<'a> {
    pub vars: &'a Assignment,
    pub action: Option<&'a str>,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ExprError> {
        let tokens = lex(source)?;
        let mut parser = Parser { tokens, pos: 0, end: source.len() };
        let expr = parser.or()?;
        match parser.peek() {
            None => Ok(expr),
            Some((at, tok)) => Err(ExprError::Syntax { at, message: format!("unexpected {tok}") }),
        }
    }

    /// Type-checks the expression against a scope.
    pub fn check(&self, scope: &BindScope<'_>) -> Result<Type, ExprError> {
        Ok(match self {
            Expr::Bool(_) => Type::Bool,
            Expr::Num(_) => Type::Num,
            Expr::Str(_) => Type::Str,
            Expr::Var(name) => match scope.schema.get(name) {
                Some(d) if d.kind == VarKind::Bool => Type::Bool,
                Some(_) => Type::Num,
                None => return Err(ExprError::UnknownVariable(name.clone())),
            },
            Expr::Action => {
                if scope.actions.is_none() {
                    return Err(ExprError::ActionNotAllowed);
                }
                Type::Action
            }
            Expr::Neg(e) => expect(e.check(scope)?, Type::Num, "negation")?,
            Expr::Not(e) => expect(e.check(scope)?, Type::Bool, "'!'")?,
            Expr::Bin(op, l, r) => {
                let (lt, rt) = (l.check(scope)?, r.check(scope)?);
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul => {
                        expect(lt, Type::Num, op.symbol())?;
                        expect(rt, Type::Num, op.symbol())?
                    }
                    BinOp::And | BinOp::Or => {
                        expect(lt, Type::Bool, op.symbol())?;
                        expect(rt, Type::Bool, op.symbol())?
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        expect(lt, Type::Num, op.symbol())?;
                        expect(rt, Type::Num, op.symbol())?;
                        Type::Bool
                    }
                    BinOp::Eq | BinOp::Ne => {
                        match (lt, rt, &**l, &**r) {
                            (Type::Action, Type::Str, _, Expr::Str(name))
                            | (Type::Str, Type::Action, Expr::Str(name), _) => {
                                let declared = scope.actions.expect("checked above");
                                if !declared.contains(name.as_str()) {
                                    return Err(ExprError::UnknownAction(name.clone()));
                                }
                            }
                            (Type::Action, _, _, _) | (_, Type::Action, _, _) => {
                                return Err(ExprError::Type("'action' can only be compared with an action name".into()))
                            }
                            (Type::Str, _, _, _) | (_, Type::Str, _, _) => {
                                return Err(ExprError::Type("string literals only compare with 'action'".into()))
                            }
                            (a, b, _, _) if a != b => {
                                return Err(ExprError::Type(format!("cannot compare {a:?} with {b:?}")))
                            }
                            _ => {}
                        }
                        Type::Bool
                    }
                }
            }
        })
    }

    pub fn eval(&self, env: &Env<'_>) -> Result<Value, ExprError> {
        Ok(match self {
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Num(n) => Value::Num(*n),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Var(name) => match env.vars.get(name) {
                Some(Scalar::Bool(b)) => Value::Bool(*b),
                Some(Scalar::Num(n)) => Value::Num(*n),
                None => return Err(ExprError::UnknownVariable(name.clone())),
            },
            Expr::Action => Value::Str(env.action.ok_or(ExprError::ActionNotAllowed)?.to_string()),
            Expr::Neg(e) => Value::Num(-num(e.eval(env)?)?),
            Expr::Not(e) => Value::Bool(!boolean(e.eval(env)?)?),
            Expr::Bin(BinOp::And, l, r) => Value::Bool(boolean(l.eval(env)?)? && boolean(r.eval(env)?)?),
            Expr::Bin(BinOp::Or, l, r) => Value::Bool(boolean(l.eval(env)?)? || boolean(r.eval(env)?)?),
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(env)?, r.eval(env)?);
                match op {
                    BinOp::Add => Value::Num(num(a)?.checked_add(num(b)?)?),
                    BinOp::Sub => Value::Num(num(a)?.checked_sub(num(b)?)?),
                    BinOp::Mul => Value::Num(num(a)?.checked_mul(num(b)?)?),
                    BinOp::Eq => Value::Bool(a == b),
                    BinOp::Ne => Value::Bool(a != b),
                    BinOp::Lt => Value::Bool(num(a)? < num(b)?),
                    BinOp::Le => Value::Bool(num(a)? <= num(b)?),
                    BinOp::Gt => Value::Bool(num(a)? > num(b)?),
                    BinOp::Ge => Value::Bool(num(a)? >= num(b)?),
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
        })
    }
}

fn expect(found: Type, want: Type, context: &str) -> Result<Type, ExprError> {
    if found == want {
        Ok(want)
    } else {
        Err(ExprError::Type(format!("{context} expects {want:?}, found {found:?}")))
    }
}

fn num(v: Value) -> Result<Decimal, ExprError> {
    match v {
        Value::Num(n) => Ok(n),
        other => Err(ExprError::Type(format!("expected number, found {other:?}"))),
    }
}

fn boolean(v: Value) -> Result<bool, ExprError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(ExprError::Type(format!("expected bool, found {other:?}"))),
    }
}

/// A boolean condition with its source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    source: String,
    expr: Expr,
}

impl Guard {
    pub fn parse(source: &str) -> Result<Guard, ExprError> {
        Ok(Guard { source: source.to_string(), expr: Expr::parse(source)? })
    }

    pub fn always() -> Guard {
        Guard { source: "true".into(), expr: Expr::Bool(true) }
    }

    pub fn never() -> Guard {
        Guard { source: "false".into(), expr: Expr::Bool(false) }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn bind(&self, scope: &BindScope<'_>) -> Result<(), ExprError> {
        expect(self.expr.check(scope)?, Type::Bool, "guard").map(|_| ())
    }

    pub fn holds(&self, vars: &Assignment, action: Option<&str>) -> Result<bool, ExprError> {
        boolean(self.expr.eval(&Env { vars, action })?)
    }
}

// ---------------------------------------------------------------------------
// lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Decimal),
    Str(String),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(n) => write!(f, "number {n}"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Op(o) => write!(f, "'{o}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
        }
    }
}

const OPERATORS: [(&str, &str); 17] = [
    ("==", "=="),
    ("!=", "!="),
    ("<=", "<="),
    (">=", ">="),
    ("&&", "&&"),
    ("||", "||"),
    ("≠", "!="),
    ("≤", "<="),
    ("≥", ">="),
    ("=", "=="),
    ("<", "<"),
    (">", ">"),
    ("!", "!"),
    ("+", "+"),
    ("-", "-"),
    ("*", "*"),
    ("×", "*"),
];

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < src.len() {
        let rest = &src[i..];
        let c = rest.chars().next().expect("nonempty");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '(' || c == ')' {
            out.push((i, if c == '(' { Tok::LParen } else { Tok::RParen }));
            i += 1;
            continue;
        }
        if c == '"' {
            let Some(close) = rest[1..].find('"') else {
                return Err(ExprError::Syntax { at: i, message: "unterminated string".into() });
            };
            out.push((i, Tok::Str(rest[1..1 + close].to_string())));
            i += close + 2;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && rest[1..].starts_with(|d: char| d.is_ascii_digit())) {
            let len = rest.find(|d: char| !(d.is_ascii_digit() || d == '.')).unwrap_or(rest.len());
            let n =
                rest[..len].parse().map_err(|e: DecimalError| ExprError::Syntax { at: i, message: e.to_string() })?;
            out.push((i, Tok::Num(n)));
            i += len;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let len = rest.find(|d: char| !(d.is_alphanumeric() || d == '_')).unwrap_or(rest.len());
            out.push((i, Tok::Ident(rest[..len].to_string())));
            i += len;
            continue;
        }
        for (text, op) in OPERATORS {
            if rest.starts_with(text) {
                out.push((i, Tok::Op(op)));
                i += text.len();
                continue 'outer;
            }
        }
        return Err(ExprError::Syntax { at: i, message: format!("unexpected character '{c}'") });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// parser

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<(usize, &Tok)> {
        self.tokens.get(self.pos).map(|(at, t)| (*at, t))
    }

    fn eat_op(&mut self, ops: &[&str]) -> Option<&'static str> {
        match self.tokens.get(self.pos) {
            Some((_, Tok::Op(op))) if ops.contains(op) => {
                self.pos += 1;
                Some(op)
            }
            _ => None,
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        match self.tokens.get(self.pos) {
            Some((_, Tok::Ident(w))) if w == word => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.and()?;
        while self.eat_op(&["||"]).is_some() || self.eat_word("or") {
            lhs = Expr::Bin(BinOp::Or, Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while self.eat_op(&["&&"]).is_some() || self.eat_word("and") {
            lhs = Expr::Bin(BinOp::And, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat_op(&["!"]).is_some() || self.eat_word("not") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.sum()?;
        let op = match self.eat_op(&["==", "!=", "<", "<=", ">", ">="]) {
            Some("==") => BinOp::Eq,
            Some("!=") => BinOp::Ne,
            Some("<") => BinOp::Lt,
            Some("<=") => BinOp::Le,
            Some(">") => BinOp::Gt,
            Some(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        Ok(Expr::Bin(op, Box::new(lhs), Box::new(self.sum()?)))
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while let Some(op) = self.eat_op(&["+", "-"]) {
            let op = if op == "+" { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.neg()?;
        while self.eat_op(&["*"]).is_some() {
            lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(self.neg()?));
        }
        Ok(lhs)
    }

    fn neg(&mut self) -> Result<Expr, ExprError> {
        if self.eat_op(&["-"]).is_some() {
            return Ok(Expr::Neg(Box::new(self.neg()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let Some((at, tok)) = self.tokens.get(self.pos).cloned() else {
            return Err(ExprError::Syntax { at: self.end, message: "unexpected end of expression".into() });
        };
        self.pos += 1;
        match tok {
            Tok::Num(n) => Ok(Expr::Num(n)),
            Tok::Str(s) => Ok(Expr::Str(s)),
            Tok::Ident(w) => Ok(match w.as_str() {
                "true" => Expr::Bool(true),
                "false" => Expr::Bool(false),
                "action" => Expr::Action,
                "and" | "or" | "not" => {
                    return Err(ExprError::Syntax { at, message: format!("unexpected keyword '{w}'") })
                }
                _ => Expr::Var(w),
            }),
            Tok::LParen => {
                let inner = self.or()?;
                match self.tokens.get(self.pos) {
                    Some((_, Tok::RParen)) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(ExprError::Syntax { at, message: "unclosed '('".into() }),
                }
            }
            other => Err(ExprError::Syntax { at, message: format!("unexpected {other}") }),
        }
    }
}
