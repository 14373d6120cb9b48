//! Syntax tree for specification sources.

use crate::bitstring::BitString;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpecAst {
    pub message_module: Option<MessageModule>,
    pub interaction_module: Option<InteractionModule>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageModule {
    pub name: String,
    pub decls: Vec<Decl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Message(RecordDecl),
    Record(RecordDecl),
    Type(AliasDecl),
    Codec(AliasDecl),
    Enum(EnumDecl),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Message(r) | Decl::Record(r) => &r.name,
            Decl::Type(a) | Decl::Codec(a) => &a.name,
            Decl::Enum(e) => &e.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDecl {
    pub name: String,
    pub params: Vec<String>,
    pub fields: Vec<FieldDecl>,
}

/// `name is Type(args) [as Codec(args)]`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Apply,
    pub codec: Option<Apply>,
}

/// A named type or codec with optional named arguments, e.g. `Integer(min=0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Apply {
    pub name: String,
    pub args: Vec<Arg>,
}

impl Apply {
    pub fn bare(name: impl Into<String>) -> Self {
        Apply {
            name: name.into(),
            args: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arg {
    pub name: String,
    pub value: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Rem,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Rem => "%",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i128),
    Text(String),
    Bits(BitString),
    /// Regular expression source between the slashes.
    Regex(String),
    Ident(String),
    /// A type or codec application used as an argument value (`elem=DataItem(..)`).
    Apply(Apply),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasDecl {
    pub name: String,
    pub target: Apply,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumDecl {
    pub name: String,
    pub base: String,
    pub constants: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionModule {
    pub name: String,
    pub actors: Vec<ActorDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActorDecl {
    pub name: String,
    pub states: Vec<StateDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub name: String,
    pub initial: bool,
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    Anytime,
    On(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub trigger: Trigger,
    /// `do ... or do ...`
    pub alternatives: Vec<Alternative>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alternative {
    pub sends: Vec<String>,
    pub end: Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Terminal {
    Next(String),
    Continue,
    Quit,
}
