//! Semantic values, expression evaluation and dependent-type checking.

use std::fmt;

use thiserror::Error;

use crate::bitstring::BitString;
use crate::lang::ast::{BinOp, UnOp};
use crate::lang::pretty::text_literal;
use crate::spec::{RecordDef, ResolvedSpec, TypeInstance, TypeKind, ValueExpr};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i128),
    Text(String),
    Bits(BitString),
    Bool(bool),
    List(Vec<Value>),
    Record(RecordValue),
    Enum(EnumValue),
    /// The value of an Optional field that is not present.
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RecordValue {
    /// Record or message type name.
    pub name: String,
    /// Fields in declaration order.
    pub fields: Vec<(String, Value)>,
}

impl RecordValue {
    pub fn get(&self, field: &str) -> Option<&Value> {
        self.fields.iter().find(|(n, _)| n == field).map(|(_, v)| v)
    }

    pub fn get_mut(&mut self, field: &str) -> Option<&mut Value> {
        self.fields.iter_mut().find(|(n, _)| n == field).map(|(_, v)| v)
    }

    /// Follows a dotted path through nested records, e.g. `h.reserved`.
    pub fn path_mut(&mut self, path: &str) -> Option<&mut Value> {
        let mut parts = path.split('.');
        let mut cur = self.get_mut(parts.next()?)?;
        for p in parts {
            cur = match cur {
                Value::Record(r) => r.get_mut(p)?,
                _ => return None,
            };
        }
        Some(cur)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnumValue {
    pub enum_name: String,
    pub constant: String,
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Text(_) => "text",
            Value::Bits(_) => "bits",
            Value::Bool(_) => "boolean",
            Value::List(_) => "list",
            Value::Record(_) => "record",
            Value::Enum(_) => "enum constant",
            Value::Absent => "absent",
        }
    }

    pub fn as_record(&self) -> Option<&RecordValue> {
        match self {
            Value::Record(r) => Some(r),
            _ => None,
        }
    }
}

/// Tree rendering: `Done { h { flag=3 reserved=b'000000' } }`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Text(s) => f.write_str(&text_literal(s)),
            Value::Bits(b) => {
                if b.len() >= 16 && b.len() % 8 == 0 {
                    f.write_str(&b.hex_literal().unwrap())
                } else {
                    f.write_str(&b.bit_literal())
                }
            }
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(items) => {
                f.write_str("[")?;
                for item in items {
                    write!(f, " {item}")?;
                }
                f.write_str(" ]")
            }
            Value::Record(r) => {
                write!(f, "{} ", r.name)?;
                write_fields(f, r)
            }
            Value::Enum(e) => f.write_str(&e.constant),
            Value::Absent => f.write_str("absent"),
        }
    }
}

impl fmt::Display for RecordValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.name)?;
        write_fields(f, self)
    }
}

fn write_fields(f: &mut fmt::Formatter<'_>, r: &RecordValue) -> fmt::Result {
    f.write_str("{")?;
    for (name, v) in &r.fields {
        match v {
            Value::Record(inner) => {
                write!(f, " {name} ")?;
                write_fields(f, inner)?;
            }
            other => write!(f, " {name}={other}")?,
        }
    }
    f.write_str(" }")
}

/// Bindings visible to argument expressions of the field under evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    bindings: Vec<(String, Value)>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, value: Value) {
        self.bindings.push((name.into(), value));
    }

    pub fn with(mut self, name: impl Into<String>, value: Value) -> Self {
        self.bind(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("type mismatch: `{op}` applied to {found}")]
    TypeMismatch { op: &'static str, found: &'static str },
    #[error("remainder by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
}

pub fn eval_expr(e: &ValueExpr, env: &Env) -> Result<Value, EvalError> {
    Ok(match e {
        ValueExpr::Int(i) => Value::Int(*i),
        ValueExpr::Text(s) => Value::Text(s.clone()),
        ValueExpr::Bits(b) => Value::Bits(b.clone()),
        ValueExpr::Bool(b) => Value::Bool(*b),
        ValueExpr::Name(n) => env.get(n).cloned().ok_or_else(|| EvalError::UnboundName(n.clone()))?,
        ValueExpr::Enum { enum_name, constant } => Value::Enum(EnumValue {
            enum_name: enum_name.clone(),
            constant: constant.clone(),
        }),
        ValueExpr::Unary(op, inner) => match (op, eval_expr(inner, env)?) {
            (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
            (UnOp::Neg, Value::Int(i)) => Value::Int(i.checked_neg().ok_or(EvalError::Overflow)?),
            (UnOp::Not, v) => return Err(EvalError::TypeMismatch { op: "!", found: v.kind_name() }),
            (UnOp::Neg, v) => return Err(EvalError::TypeMismatch { op: "-", found: v.kind_name() }),
        },
        ValueExpr::Binary(op, l, r) => {
            let (a, b) = match (eval_expr(l, env)?, eval_expr(r, env)?) {
                (Value::Int(a), Value::Int(b)) => (a, b),
                (Value::Int(_), v) | (v, _) => {
                    return Err(EvalError::TypeMismatch {
                        op: op.symbol(),
                        found: v.kind_name(),
                    })
                }
            };
            let out = match op {
                BinOp::Add => a.checked_add(b),
                BinOp::Sub => a.checked_sub(b),
                BinOp::Mul => a.checked_mul(b),
                BinOp::Rem => {
                    if b == 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a.checked_rem_euclid(b)
                }
            };
            Value::Int(out.ok_or(EvalError::Overflow)?)
        }
    })
}

pub(crate) fn eval_int(e: &ValueExpr, env: &Env, op: &'static str) -> Result<i128, EvalError> {
    match eval_expr(e, env)? {
        Value::Int(i) => Ok(i),
        v => Err(EvalError::TypeMismatch { op, found: v.kind_name() }),
    }
}

pub(crate) fn eval_opt_int(e: &Option<ValueExpr>, env: &Env, op: &'static str) -> Result<Option<i128>, EvalError> {
    e.as_ref().map(|e| eval_int(e, env, op)).transpose()
}

pub(crate) fn eval_bool(e: &ValueExpr, env: &Env, op: &'static str) -> Result<bool, EvalError> {
    match eval_expr(e, env)? {
        Value::Bool(b) => Ok(b),
        v => Err(EvalError::TypeMismatch { op, found: v.kind_name() }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {reason}")]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("constraint violated at {0}")]
    Violation(#[from] Violation),
    #[error("evaluation failed at {path}: {source}")]
    Eval { path: String, source: EvalError },
}

impl CheckError {
    fn violation(path: &str, reason: impl Into<String>) -> Self {
        CheckError::Violation(Violation {
            path: path.to_string(),
            reason: reason.into(),
        })
    }
}

fn at<T>(path: &str, r: Result<T, EvalError>) -> Result<T, CheckError> {
    r.map_err(|source| CheckError::Eval {
        path: path.to_string(),
        source,
    })
}

/// Checks `v` against `t`, whose argument expressions are evaluated in `env`.
pub fn check_value(spec: &ResolvedSpec, v: &Value, t: &TypeInstance, env: &Env) -> Result<(), CheckError> {
    check_at(spec, v, t, env, "$")
}

pub(crate) fn check_at(
    spec: &ResolvedSpec,
    v: &Value,
    t: &TypeInstance,
    env: &Env,
    path: &str,
) -> Result<(), CheckError> {
    let mismatch = |want: &str| CheckError::violation(path, format!("expected {want}, found {}", v.kind_name()));
    match &t.kind {
        TypeKind::Integer { min, max, value } => {
            let Value::Int(i) = v else { return Err(mismatch("integer")) };
            if let Some(lo) = at(path, eval_opt_int(min, env, "min"))? {
                if *i < lo {
                    return Err(CheckError::violation(path, format!("{i} is below min {lo}")));
                }
            }
            if let Some(hi) = at(path, eval_opt_int(max, env, "max"))? {
                if *i > hi {
                    return Err(CheckError::violation(path, format!("{i} is above max {hi}")));
                }
            }
            check_fixed(v, value, env, path)
        }
        TypeKind::Text(tt) => {
            let Value::Text(s) = v else { return Err(mismatch("text")) };
            if let Some(c) = s.chars().find(|&c| !tt.charset.contains(c)) {
                return Err(CheckError::violation(
                    path,
                    format!("character {c:?} outside charset {}", tt.charset.name()),
                ));
            }
            if let Some(n) = at(path, eval_opt_int(&tt.max_count, env, "max_count"))? {
                let count = s.chars().count() as i128;
                if count > n {
                    return Err(CheckError::violation(path, format!("{count} characters exceed max_count {n}")));
                }
            }
            let symbols = || s.chars().map(|c| c as u32);
            if let Some(p) = &tt.pattern {
                if !p.automaton.accepts(symbols()) {
                    return Err(CheckError::violation(path, format!("{} does not match {}", text_literal(s), p.pattern)));
                }
            }
            if let Some(p) = &tt.exclude {
                if p.automaton.accepts(symbols()) {
                    return Err(CheckError::violation(path, format!("{} contains excluded {}", text_literal(s), p.pattern)));
                }
            }
            check_fixed(v, &tt.value, env, path)
        }
        TypeKind::Binary(bt) => {
            let Value::Bits(b) = v else { return Err(mismatch("bits")) };
            if let Some(len) = at(path, eval_opt_int(&bt.length, env, "length"))? {
                if b.len() as i128 != len {
                    return Err(CheckError::violation(path, format!("{} bits, expected {len}", b.len())));
                }
            }
            if let Some(p) = &bt.pattern {
                if !p.automaton.accepts(b.iter().map(u32::from)) {
                    return Err(CheckError::violation(path, format!("{b} does not match {}", p.pattern)));
                }
            }
            check_fixed(v, &bt.value, env, path)
        }
        TypeKind::Bool { value } => {
            if !matches!(v, Value::Bool(_)) {
                return Err(mismatch("boolean"));
            }
            check_fixed(v, value, env, path)
        }
        TypeKind::List { elem, max_length } => {
            let Value::List(items) = v else { return Err(mismatch("list")) };
            if let Some(n) = at(path, eval_opt_int(max_length, env, "max_length"))? {
                if items.len() as i128 > n {
                    return Err(CheckError::violation(path, format!("{} elements exceed max_length {n}", items.len())));
                }
            }
            for (i, item) in items.iter().enumerate() {
                check_at(spec, item, elem, env, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        TypeKind::Optional { is_empty, subject } => {
            let empty = at(path, eval_bool(is_empty, env, "is_empty"))?;
            match (empty, v) {
                (true, Value::Absent) => Ok(()),
                (true, _) => Err(CheckError::violation(path, "field must be absent")),
                (false, Value::Absent) => Err(CheckError::violation(path, "field must be present")),
                (false, v) => check_at(spec, v, subject, env, path),
            }
        }
        TypeKind::Record { record, params, pins } => {
            let Value::Record(rv) = v else { return Err(mismatch("record")) };
            let def = spec
                .record(record)
                .ok_or_else(|| CheckError::violation(path, format!("unknown record {record}")))?;
            let (inner, pinned) = instantiate(def, params, pins, env).map_err(|source| CheckError::Eval {
                path: path.to_string(),
                source,
            })?;
            check_record(spec, rv, def, inner, &pinned, path)
        }
        TypeKind::Enum { name, value } => {
            let Value::Enum(ev) = v else { return Err(mismatch("enum constant")) };
            let def = spec
                .enum_def(name)
                .ok_or_else(|| CheckError::violation(path, format!("unknown enum {name}")))?;
            if ev.enum_name != *name || def.representation(&ev.constant).is_none() {
                return Err(CheckError::violation(path, format!("{} is not a constant of {name}", ev.constant)));
            }
            check_fixed(v, value, env, path)
        }
    }
}

fn check_fixed(v: &Value, fixed: &Option<ValueExpr>, env: &Env, path: &str) -> Result<(), CheckError> {
    if let Some(e) = fixed {
        let want = at(path, eval_expr(e, env))?;
        if *v != want {
            return Err(CheckError::violation(path, format!("{v} differs from required value {want}")));
        }
    }
    Ok(())
}

/// Evaluates record-instantiation arguments: returns the inner environment
/// with parameters bound, and the pinned field values.
pub(crate) fn instantiate(
    def: &RecordDef,
    params: &[(String, ValueExpr)],
    pins: &[(String, ValueExpr)],
    env: &Env,
) -> Result<(Env, Vec<(String, Value)>), EvalError> {
    let mut inner = Env::new();
    for p in &def.params {
        let bound = params.iter().find(|(n, _)| n == p);
        if let Some((_, e)) = bound {
            inner.bind(p.clone(), eval_expr(e, env)?);
        }
    }
    let pinned = pins
        .iter()
        .map(|(n, e)| Ok((n.clone(), eval_expr(e, env)?)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok((inner, pinned))
}

pub(crate) fn check_record(
    spec: &ResolvedSpec,
    rv: &RecordValue,
    def: &RecordDef,
    mut env: Env,
    pinned: &[(String, Value)],
    path: &str,
) -> Result<(), CheckError> {
    if rv.name != def.name {
        return Err(CheckError::violation(path, format!("record {} where {} expected", rv.name, def.name)));
    }
    if rv.fields.len() != def.fields.len()
        || rv.fields.iter().zip(&def.fields).any(|((n, _), f)| *n != f.name)
    {
        return Err(CheckError::violation(path, format!("fields do not match the layout of {}", def.name)));
    }
    for &i in &def.order {
        let field = &def.fields[i];
        let value = &rv.fields[i].1;
        let fpath = format!("{path}.{}", field.name);
        check_at(spec, value, &field.ty, &env, &fpath)?;
        if let Some((_, want)) = pinned.iter().find(|(n, _)| *n == field.name) {
            if value != want {
                return Err(CheckError::violation(&fpath, format!("{value} differs from required value {want}")));
            }
        }
        env.bind(field.name.clone(), value.clone());
    }
    Ok(())
}

/// Checks a complete message value against its message type.
pub fn check_message(spec: &ResolvedSpec, message: &str, v: &RecordValue) -> Result<(), CheckError> {
    let def = spec
        .message(message)
        .ok_or_else(|| CheckError::violation("$", format!("unknown message type {message}")))?;
    check_record(spec, v, def, Env::new(), &[], message)
}

/// Topological order of a record's fields, using declaration order to break ties.
pub fn dependency_order(record: &RecordDef) -> Vec<&str> {
    record.order.iter().map(|&i| record.fields[i].name.as_str()).collect()
}

/// Kahn's algorithm over `deps`; always picks the earliest-declared ready
/// field. Returns `None` when the graph has a cycle.
pub(crate) fn topological_order(names: &[String], deps: &[Vec<String>]) -> Option<Vec<usize>> {
    let n = names.len();
    let index = |name: &str| names.iter().position(|m| m == name);
    let edges: Vec<Vec<usize>> = deps
        .iter()
        .map(|ds| ds.iter().filter_map(|d| index(d)).collect())
        .collect();
    let mut indegree: Vec<usize> = edges.iter().map(Vec::len).collect();
    let mut done = vec![false; n];
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let next = (0..n).find(|&i| !done[i] && indegree[i] == 0)?;
        done[next] = true;
        out.push(next);
        for (i, es) in edges.iter().enumerate() {
            if !done[i] {
                indegree[i] -= es.iter().filter(|&&e| e == next).count();
            }
        }
    }
    Some(out)
}

/// An untyped value written in the tree notation printed by [`Value`]'s
/// `Display`. Missing record fields are left for the generator to fill.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(i128),
    Text(String),
    Bits(BitString),
    Bool(bool),
    Absent,
    /// An enum constant.
    Ident(String),
    List(Vec<Literal>),
    Record {
        name: Option<String>,
        fields: Vec<(String, Literal)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("value literal: {0}")]
pub struct LiteralError(pub String);

pub fn parse_literal(src: &str) -> Result<Literal, LiteralError> {
    use crate::lang::lexer::{tokenize_values, ValueTok};
    let toks = tokenize_values(src).map_err(LiteralError)?;
    let mut pos = 0;
    let lit = literal(&toks, &mut pos)?;
    if pos != toks.len() {
        return Err(LiteralError(format!("unexpected trailing input at token {}", pos + 1)));
    }
    return Ok(lit);

    fn literal(t: &[ValueTok], pos: &mut usize) -> Result<Literal, LiteralError> {
        let tok = t.get(*pos).ok_or_else(|| LiteralError("unexpected end of input".into()))?;
        *pos += 1;
        Ok(match tok {
            ValueTok::Int(i) => Literal::Int(*i),
            ValueTok::Text(s) => Literal::Text(s.clone()),
            ValueTok::Bits(b) => Literal::Bits(b.clone()),
            ValueTok::Open => record_body(t, pos, None)?,
            ValueTok::LBracket => {
                let mut items = Vec::new();
                while t.get(*pos) != Some(&ValueTok::RBracket) {
                    items.push(literal(t, pos)?);
                }
                *pos += 1;
                Literal::List(items)
            }
            ValueTok::Word(w) => match w.as_str() {
                "true" => Literal::Bool(true),
                "false" => Literal::Bool(false),
                "absent" => Literal::Absent,
                _ if t.get(*pos) == Some(&ValueTok::Open) => {
                    *pos += 1;
                    record_body(t, pos, Some(w.clone()))?
                }
                _ => Literal::Ident(w.clone()),
            },
            other => return Err(LiteralError(format!("unexpected {other:?}"))),
        })
    }

    fn record_body(t: &[ValueTok], pos: &mut usize, name: Option<String>) -> Result<Literal, LiteralError> {
        let mut fields = Vec::new();
        loop {
            match t.get(*pos) {
                Some(ValueTok::Close) => {
                    *pos += 1;
                    return Ok(Literal::Record { name, fields });
                }
                Some(ValueTok::Word(f)) => {
                    *pos += 1;
                    let v = match t.get(*pos) {
                        Some(ValueTok::Eq) => {
                            *pos += 1;
                            literal(t, pos)?
                        }
                        Some(ValueTok::Open) => {
                            *pos += 1;
                            record_body(t, pos, None)?
                        }
                        _ => return Err(LiteralError(format!("expected `=` or `{{` after field {f}"))),
                    };
                    fields.push((f.clone(), v));
                }
                other => return Err(LiteralError(format!("expected a field name or `}}`, found {other:?}"))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::ValueExpr as E;

    fn bin(op: BinOp, l: E, r: E) -> E {
        E::Binary(op, Box::new(l), Box::new(r))
    }

    fn padding() -> E {
        let n_mod_4 = bin(BinOp::Rem, E::Name("n".into()), E::Int(4));
        bin(BinOp::Mul, E::Int(8), bin(BinOp::Sub, E::Int(4), n_mod_4))
    }

    #[test]
    fn padding_expression_matches_direct_arithmetic() {
        for n in 0..40i128 {
            let env = Env::new().with("n", Value::Int(n));
            let direct = 8 * (4 - n % 4);
            assert_eq!(eval_expr(&padding(), &env), Ok(Value::Int(direct)));
        }
        assert_eq!(eval_expr(&padding(), &Env::new().with("n", Value::Int(5))), Ok(Value::Int(24)));
    }

    #[test]
    fn evaluation_errors() {
        let not = E::Unary(UnOp::Not, Box::new(E::Name("hasfoot".into())));
        assert_eq!(eval_expr(&not, &Env::new().with("hasfoot", Value::Bool(false))), Ok(Value::Bool(true)));
        assert!(matches!(
            eval_expr(&not, &Env::new().with("hasfoot", Value::Int(1))),
            Err(EvalError::TypeMismatch { .. })
        ));
        assert_eq!(eval_expr(&not, &Env::new()), Err(EvalError::UnboundName("hasfoot".into())));
        let rem = bin(BinOp::Rem, E::Int(3), E::Int(0));
        assert_eq!(eval_expr(&rem, &Env::new()), Err(EvalError::DivisionByZero));
        let times = bin(BinOp::Mul, E::Int(8), E::Name("n".into()));
        assert_eq!(eval_expr(&times, &Env::new().with("n", Value::Int(0))), Ok(Value::Int(0)));
        let big = bin(BinOp::Mul, E::Int(i128::MAX), E::Int(2));
        assert_eq!(eval_expr(&big, &Env::new()), Err(EvalError::Overflow));
    }

    #[test]
    fn topological_order_is_stable() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(topological_order(&names, &[vec![], vec![], vec![]]), Some(vec![0, 1, 2]));
        let deps = vec![vec!["c".to_string()], vec![], vec![]];
        assert_eq!(topological_order(&names, &deps), Some(vec![1, 2, 0]));
        let cyclic = vec![vec!["b".to_string()], vec!["a".to_string()], vec![]];
        assert_eq!(topological_order(&names, &cyclic), None);
    }

    #[test]
    fn literal_round_trip_of_display() {
        let v = Value::Record(RecordValue {
            name: "Done".into(),
            fields: vec![
                (
                    "h".into(),
                    Value::Record(RecordValue {
                        name: "Header".into(),
                        fields: vec![
                            ("flag".into(), Value::Int(3)),
                            ("reserved".into(), Value::Bits(BitString::parse_bits("000000").unwrap())),
                        ],
                    }),
                ),
                ("items".into(), Value::List(vec![Value::Text("a b\n".into()), Value::Absent])),
            ],
        });
        let shown = v.to_string();
        assert_eq!(
            shown,
            "Done { h { flag=3 reserved=b'000000' } items=[ 'a b\\n' absent ] }"
        );
        let lit = parse_literal(&shown).unwrap();
        let Literal::Record { name, fields } = lit else { panic!() };
        assert_eq!(name.as_deref(), Some("Done"));
        assert_eq!(fields.len(), 2);
        assert!(parse_literal("Ask { h { flag= } }").is_err());
    }
}
