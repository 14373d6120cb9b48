//! Fully resolved protocol descriptions.
//!
//! A [`ResolvedSpec`] has every alias expanded and every name checked. Type
//! and codec arguments that depend on other fields stay as [`ValueExpr`]s and
//! are evaluated per record instance.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::bitstring::BitString;
use crate::lang::ast::{self, BinOp, UnOp};
use crate::lang::pretty;
use crate::lts::Iolts;
use crate::pattern::{Automaton, Pattern};
use crate::values::Value;

/// A value-level expression with every identifier classified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueExpr {
    Int(i128),
    Text(String),
    Bits(BitString),
    Bool(bool),
    /// An earlier field or a record parameter.
    Name(String),
    Enum { enum_name: String, constant: String },
    Unary(UnOp, Box<ValueExpr>),
    Binary(BinOp, Box<ValueExpr>, Box<ValueExpr>),
}

impl ValueExpr {
    /// Names of fields and parameters the expression reads.
    pub fn names(&self, out: &mut Vec<String>) {
        match self {
            ValueExpr::Name(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            ValueExpr::Unary(_, e) => e.names(out),
            ValueExpr::Binary(_, l, r) => {
                l.names(out);
                r.names(out);
            }
            _ => {}
        }
    }

    pub fn to_ast(&self) -> ast::Expr {
        match self {
            ValueExpr::Int(i) if *i < 0 => {
                ast::Expr::Unary(UnOp::Neg, Box::new(ast::Expr::Int(-i)))
            }
            ValueExpr::Int(i) => ast::Expr::Int(*i),
            ValueExpr::Text(s) => ast::Expr::Text(s.clone()),
            ValueExpr::Bits(b) => ast::Expr::Bits(b.clone()),
            ValueExpr::Bool(b) => ast::Expr::Ident(b.to_string()),
            ValueExpr::Name(n) => ast::Expr::Ident(n.clone()),
            ValueExpr::Enum { constant, .. } => ast::Expr::Ident(constant.clone()),
            ValueExpr::Unary(op, e) => ast::Expr::Unary(*op, Box::new(e.to_ast())),
            ValueExpr::Binary(op, l, r) => {
                ast::Expr::Binary(*op, Box::new(l.to_ast()), Box::new(r.to_ast()))
            }
        }
    }
}

impl fmt::Display for ValueExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::expr(&self.to_ast()))
    }
}

/// Character repertoire of a text type or text codec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Charset {
    Ascii,
    /// Eight-bit transparent: every byte is one character.
    Latin1,
}

impl Charset {
    pub fn parse(name: &str) -> Option<Charset> {
        match name.to_ascii_lowercase().as_str() {
            "ascii" | "us-ascii" => Some(Charset::Ascii),
            "latin1" | "iso-8859-1" | "octet" | "8bit" => Some(Charset::Latin1),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Charset::Ascii => "ascii",
            Charset::Latin1 => "latin1",
        }
    }

    /// Number of character codes, starting at zero.
    pub fn universe(self) -> u32 {
        match self {
            Charset::Ascii => 128,
            Charset::Latin1 => 256,
        }
    }

    pub fn contains(self, c: char) -> bool {
        (c as u32) < self.universe()
    }
}

/// A pattern together with its precompiled checking automaton.
#[derive(Debug, Clone)]
pub struct CompiledPattern {
    pub pattern: Pattern,
    pub automaton: Arc<Automaton>,
}

impl PartialEq for CompiledPattern {
    fn eq(&self, other: &Self) -> bool {
        self.pattern == other.pattern
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextType {
    pub charset: Charset,
    /// Full-match constraint.
    pub pattern: Option<CompiledPattern>,
    /// Substring exclusion; the automaton accepts texts containing a match.
    pub exclude: Option<CompiledPattern>,
    pub max_count: Option<ValueExpr>,
    pub value: Option<ValueExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryType {
    pub value: Option<ValueExpr>,
    pub length: Option<ValueExpr>,
    /// Bit-level full-match constraint.
    pub pattern: Option<CompiledPattern>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeKind {
    Integer {
        min: Option<ValueExpr>,
        max: Option<ValueExpr>,
        value: Option<ValueExpr>,
    },
    Text(TextType),
    Binary(BinaryType),
    Bool {
        value: Option<ValueExpr>,
    },
    List {
        elem: Box<TypeInstance>,
        max_length: Option<ValueExpr>,
    },
    Optional {
        is_empty: ValueExpr,
        subject: Box<TypeInstance>,
    },
    Record {
        record: String,
        /// Record parameter bindings, evaluated in the enclosing record.
        params: Vec<(String, ValueExpr)>,
        /// Fixed values imposed on fields of the record, e.g. `Header(flag=1)`.
        pins: Vec<(String, ValueExpr)>,
    },
    Enum {
        name: String,
        value: Option<ValueExpr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeInstance {
    /// The user-facing name the type was written with (`Tag`, `Header`, ...).
    pub written: String,
    pub kind: TypeKind,
}

impl TypeInstance {
    pub fn base_name(&self) -> &str {
        match &self.kind {
            TypeKind::Integer { .. } => "Integer",
            TypeKind::Text(_) => "Text",
            TypeKind::Binary(_) => "Binary",
            TypeKind::Bool { .. } => "Bool",
            TypeKind::List { .. } => "List",
            TypeKind::Optional { .. } => "Optional",
            TypeKind::Record { record, .. } => record,
            TypeKind::Enum { name, .. } => name,
        }
    }

    /// Alias-free rendering as a type application.
    pub fn to_apply(&self) -> ast::Apply {
        let mut args: Vec<ast::Arg> = Vec::new();
        fn push(args: &mut Vec<ast::Arg>, name: &str, e: &Option<ValueExpr>) {
            if let Some(e) = e {
                args.push(ast::Arg {
                    name: name.into(),
                    value: e.to_ast(),
                });
            }
        }
        match &self.kind {
            TypeKind::Integer { min, max, value } => {
                push(&mut args, "min", min);
                push(&mut args, "max", max);
                push(&mut args, "value", value);
            }
            TypeKind::Text(t) => {
                args.push(ast::Arg {
                    name: "charset".into(),
                    value: ast::Expr::Text(t.charset.name().into()),
                });
                for (name, p) in [("pattern", &t.pattern), ("exclude_pattern", &t.exclude)] {
                    if let Some(p) = p {
                        args.push(ast::Arg {
                            name: name.into(),
                            value: ast::Expr::Regex(p.pattern.source().into()),
                        });
                    }
                }
                push(&mut args, "max_count", &t.max_count);
                push(&mut args, "value", &t.value);
            }
            TypeKind::Binary(b) => {
                push(&mut args, "value", &b.value);
                push(&mut args, "length", &b.length);
                if let Some(p) = &b.pattern {
                    args.push(ast::Arg {
                        name: "char8_pattern".into(),
                        value: ast::Expr::Regex(p.pattern.source().into()),
                    });
                }
            }
            TypeKind::Bool { value } => push(&mut args, "value", value),
            TypeKind::List { elem, max_length } => {
                args.push(ast::Arg {
                    name: "elem".into(),
                    value: ast::Expr::Apply(elem.to_apply()),
                });
                push(&mut args, "max_length", max_length);
            }
            TypeKind::Optional { is_empty, subject } => {
                push(&mut args, "is_empty", &Some(is_empty.clone()));
                args.push(ast::Arg {
                    name: "subject".into(),
                    value: ast::Expr::Apply(subject.to_apply()),
                });
            }
            TypeKind::Record { params, pins, .. } => {
                for (n, e) in params.iter().chain(pins) {
                    args.push(ast::Arg {
                        name: n.clone(),
                        value: e.to_ast(),
                    });
                }
            }
            TypeKind::Enum { value, .. } => push(&mut args, "value", value),
        }
        ast::Apply {
            name: self.base_name().to_string(),
            args,
        }
    }
}

impl fmt::Display for TypeInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::apply(&self.to_apply()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Codec {
    BigEndian {
        signed: bool,
        length: ValueExpr,
    },
    BoolBits {
        truth: BitString,
        falsehood: BitString,
    },
    TerminatedText {
        encoding: Charset,
        terminator: Vec<u8>,
    },
    FixedCountText {
        encoding: Charset,
        /// Explicit count; otherwise taken from the type's `value` or `max_count`.
        count: Option<ValueExpr>,
    },
    CountPrefixList {
        count: Box<Codec>,
        elem: Option<Box<Codec>>,
    },
    TextInteger {
        text: Box<Codec>,
    },
}

impl Codec {
    pub fn name(&self) -> &'static str {
        match self {
            Codec::BigEndian { .. } => "BigEndian",
            Codec::BoolBits { .. } => "BoolBits",
            Codec::TerminatedText { .. } => "TerminatedText",
            Codec::FixedCountText { .. } => "FixedCountText",
            Codec::CountPrefixList { .. } => "CountPrefixList",
            Codec::TextInteger { .. } => "TextInteger",
        }
    }

    pub fn is_text(&self) -> bool {
        matches!(self, Codec::TerminatedText { .. } | Codec::FixedCountText { .. })
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Codec::BigEndian { .. } | Codec::TextInteger { .. })
    }

    pub fn to_apply(&self) -> ast::Apply {
        let arg = |name: &str, value: ast::Expr| ast::Arg {
            name: name.into(),
            value,
        };
        let text_of = |bytes: &[u8]| bytes.iter().map(|&b| b as char).collect::<String>();
        let args = match self {
            Codec::BigEndian { signed, length } => vec![
                arg("signed", ast::Expr::Ident(signed.to_string())),
                arg("length", length.to_ast()),
            ],
            Codec::BoolBits { truth, falsehood } => vec![
                arg("falsehood_string", ast::Expr::Bits(falsehood.clone())),
                arg("truth_string", ast::Expr::Bits(truth.clone())),
            ],
            Codec::TerminatedText { encoding, terminator } => vec![
                arg("encoding", ast::Expr::Text(encoding.name().into())),
                arg("terminator", ast::Expr::Text(text_of(terminator))),
            ],
            Codec::FixedCountText { encoding, count } => {
                let mut v = vec![arg("encoding", ast::Expr::Text(encoding.name().into()))];
                if let Some(c) = count {
                    v.push(arg("count", c.to_ast()));
                }
                v
            }
            Codec::CountPrefixList { count, elem } => {
                let mut v = vec![arg("count_codec", ast::Expr::Apply(count.to_apply()))];
                if let Some(e) = elem {
                    v.push(arg("elem_codec", ast::Expr::Apply(e.to_apply())));
                }
                v
            }
            Codec::TextInteger { text } => vec![arg("text_codec", ast::Expr::Apply(text.to_apply()))],
        };
        ast::Apply {
            name: self.name().into(),
            args,
        }
    }
}

impl fmt::Display for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::apply(&self.to_apply()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub ty: TypeInstance,
    pub codec: Option<Codec>,
    /// Earlier fields and parameters read by the type and codec arguments.
    pub deps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordDef {
    pub name: String,
    pub is_message: bool,
    pub params: Vec<String>,
    pub fields: Vec<Field>,
    /// Field indices in dependency order.
    pub order: Vec<usize>,
}

impl RecordDef {
    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumBase {
    Text,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumDef {
    pub name: String,
    pub base: EnumBase,
    /// Constant name and its representation (a `Value::Text` or `Value::Int`).
    pub constants: Vec<(String, Value)>,
}

impl EnumDef {
    pub fn representation(&self, constant: &str) -> Option<&Value> {
        self.constants.iter().find(|(n, _)| n == constant).map(|(_, v)| v)
    }

    pub fn constant_for(&self, repr: &Value) -> Option<&str> {
        self.constants.iter().find(|(_, v)| v == repr).map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct Actor {
    pub decl: ast::ActorDecl,
    pub lts: Iolts,
}

#[derive(Debug, Clone)]
pub struct ResolvedSpec {
    pub message_module: Option<String>,
    pub interaction_module: Option<String>,
    /// Messages and records in declaration order.
    pub records: Vec<RecordDef>,
    pub enums: Vec<EnumDef>,
    pub actors: Vec<Actor>,
    pub(crate) record_index: HashMap<String, usize>,
    pub(crate) enum_index: HashMap<String, usize>,
}

impl ResolvedSpec {
    pub fn record(&self, name: &str) -> Option<&RecordDef> {
        self.record_index.get(name).map(|&i| &self.records[i])
    }

    pub fn message(&self, name: &str) -> Option<&RecordDef> {
        self.record(name).filter(|r| r.is_message)
    }

    pub fn enum_def(&self, name: &str) -> Option<&EnumDef> {
        self.enum_index.get(name).map(|&i| &self.enums[i])
    }

    /// Message type names in declaration order.
    pub fn message_names(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter(|r| r.is_message)
            .map(|r| r.name.as_str())
            .collect()
    }

    pub fn actor(&self, name: &str) -> Option<&Actor> {
        self.actors.iter().find(|a| a.decl.name == name)
    }

    /// Declaration position of a message type, used to order classification candidates.
    pub fn message_rank(&self, name: &str) -> usize {
        self.record_index.get(name).copied().unwrap_or(usize::MAX)
    }

    /// Re-expresses the resolved spec as source syntax with every alias expanded.
    pub fn to_ast(&self) -> ast::SpecAst {
        let message_module = self.message_module.as_ref().map(|name| {
            let mut decls = Vec::new();
            for e in &self.enums {
                decls.push(ast::Decl::Enum(ast::EnumDecl {
                    name: e.name.clone(),
                    base: match e.base {
                        EnumBase::Text => "Text".into(),
                        EnumBase::Integer => "Integer".into(),
                    },
                    constants: e
                        .constants
                        .iter()
                        .map(|(n, v)| {
                            let lit = match v {
                                Value::Int(i) => ast::Expr::Int(*i),
                                Value::Text(s) => ast::Expr::Text(s.clone()),
                                other => ast::Expr::Text(other.to_string()),
                            };
                            (n.clone(), lit)
                        })
                        .collect(),
                }));
            }
            for r in &self.records {
                let decl = ast::RecordDecl {
                    name: r.name.clone(),
                    params: r.params.clone(),
                    fields: r
                        .fields
                        .iter()
                        .map(|f| ast::FieldDecl {
                            name: f.name.clone(),
                            ty: f.ty.to_apply(),
                            codec: f.codec.as_ref().map(Codec::to_apply),
                        })
                        .collect(),
                };
                decls.push(if r.is_message {
                    ast::Decl::Message(decl)
                } else {
                    ast::Decl::Record(decl)
                });
            }
            ast::MessageModule {
                name: name.clone(),
                decls,
            }
        });
        let interaction_module = self.interaction_module.as_ref().map(|name| ast::InteractionModule {
            name: name.clone(),
            actors: self.actors.iter().map(|a| a.decl.clone()).collect(),
        });
        ast::SpecAst {
            message_module,
            interaction_module,
        }
    }

    /// Human-readable summary: types, dependency orders and compiled actors.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let messages = self.message_names();
        writeln!(
            out,
            "message module {}: {} message types, {} records, {} enums",
            self.message_module.as_deref().unwrap_or("-"),
            messages.len(),
            self.records.len() - messages.len(),
            self.enums.len()
        )
        .unwrap();
        for r in &self.records {
            let kind = if r.is_message { "message" } else { "record" };
            let params = if r.params.is_empty() {
                String::new()
            } else {
                format!("({})", r.params.join(", "))
            };
            let order: Vec<&str> = r.order.iter().map(|&i| r.fields[i].name.as_str()).collect();
            writeln!(out, "  {kind} {}{params} order [{}]", r.name, order.join(", ")).unwrap();
            for f in &r.fields {
                write!(out, "    {}: {}", f.name, f.ty).unwrap();
                if let Some(c) = &f.codec {
                    write!(out, " as {c}").unwrap();
                }
                if !f.deps.is_empty() {
                    write!(out, " <- {}", f.deps.join(", ")).unwrap();
                }
                out.push('\n');
            }
        }
        for e in &self.enums {
            let cs: Vec<String> = e.constants.iter().map(|(n, v)| format!("{n}={v}")).collect();
            writeln!(out, "  enum {} [{}]", e.name, cs.join(", ")).unwrap();
        }
        writeln!(
            out,
            "interactions module {}: {} actors",
            self.interaction_module.as_deref().unwrap_or("-"),
            self.actors.len()
        )
        .unwrap();
        for a in &self.actors {
            writeln!(
                out,
                "  actor {}: {} named states, {} states, {} edges",
                a.decl.name,
                a.lts.named_state_count(),
                a.lts.state_count(),
                a.lts.edge_count()
            )
            .unwrap();
            for line in a.lts.dump().lines() {
                writeln!(out, "    {line}").unwrap();
            }
        }
        out
    }
}
