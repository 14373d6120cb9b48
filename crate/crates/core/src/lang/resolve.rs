use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::lang::ast::*;
use crate::lang::{compile_actor, parse_spec, ResolveError};
use crate::lts::QUIT_STATE;
use crate::pattern::{Automaton, Pattern, PatternMode};
use crate::spec::*;
use crate::values::{topological_order, Value};

/// Codec aliases available to every specification unless redefined.
pub const PRELUDE_CODECS: &str = "message module Prelude
  codec Word32Codec is BigEndian(signed=false, length=32)
end";

const BUILTIN_TYPES: &[&str] = &["Integer", "Text", "Binary", "Bool", "List", "Optional"];
const BUILTIN_CODECS: &[&str] = &[
    "BigEndian",
    "BoolBits",
    "TerminatedText",
    "FixedCountText",
    "CountPrefixList",
    "TextInteger",
];
const MAX_ALIAS_DEPTH: usize = 64;

type Result<T> = std::result::Result<T, ResolveError>;

pub fn resolve(ast: &SpecAst) -> Result<ResolvedSpec> {
    let prelude = parse_spec(PRELUDE_CODECS).expect("prelude parses");
    let empty = Vec::new();
    let decls = ast.message_module.as_ref().map(|m| &m.decls).unwrap_or(&empty);
    let mut r = Resolver::default();

    for d in prelude.message_module.as_ref().unwrap().decls.iter() {
        if let Decl::Codec(a) = d {
            r.codec_aliases.insert(a.name.clone(), &a.target);
        }
    }
    let prelude_codecs: HashSet<String> = r.codec_aliases.keys().cloned().collect();

    let mut type_names: HashSet<&str> = BUILTIN_TYPES.iter().copied().collect();
    let mut codec_names: HashSet<&str> = BUILTIN_CODECS.iter().copied().collect();
    for d in decls {
        let (set, kind) = match d {
            Decl::Codec(_) => (&mut codec_names, "codec"),
            _ => (&mut type_names, "type"),
        };
        if !set.insert(d.name()) {
            return Err(ResolveError::DuplicateName {
                kind,
                name: d.name().to_string(),
            });
        }
        match d {
            Decl::Message(rd) => {
                r.records.insert(rd.name.clone(), (rd, true));
            }
            Decl::Record(rd) => {
                r.records.insert(rd.name.clone(), (rd, false));
            }
            Decl::Type(a) => {
                r.type_aliases.insert(a.name.clone(), &a.target);
            }
            Decl::Codec(a) => {
                if prelude_codecs.contains(&a.name) {
                    r.codec_aliases.remove(&a.name);
                }
                r.codec_aliases.insert(a.name.clone(), &a.target);
            }
            Decl::Enum(e) => r.declare_enum(e)?,
        }
    }

    let mut records = Vec::new();
    for d in decls {
        if let Decl::Message(rd) | Decl::Record(rd) = d {
            records.push(r.resolve_record(rd, matches!(d, Decl::Message(_)))?);
        }
    }
    check_record_cycles(&records)?;

    let message_names: HashSet<&str> = records.iter().filter(|r| r.is_message).map(|r| r.name.as_str()).collect();
    let mut actors: Vec<Actor> = Vec::new();
    if let Some(im) = &ast.interaction_module {
        for a in &im.actors {
            if actors.iter().any(|b| b.decl.name == a.name) {
                return Err(ResolveError::DuplicateName {
                    kind: "actor",
                    name: a.name.clone(),
                });
            }
            check_actor(a, &message_names)?;
            actors.push(Actor {
                decl: a.clone(),
                lts: compile_actor(a),
            });
        }
    }

    let record_index = records.iter().enumerate().map(|(i, r)| (r.name.clone(), i)).collect();
    let enum_index = r.enums.iter().enumerate().map(|(i, e)| (e.name.clone(), i)).collect();
    Ok(ResolvedSpec {
        message_module: ast.message_module.as_ref().map(|m| m.name.clone()),
        interaction_module: ast.interaction_module.as_ref().map(|m| m.name.clone()),
        records,
        enums: r.enums,
        actors,
        record_index,
        enum_index,
    })
}

#[derive(Default)]
struct Resolver<'a> {
    type_aliases: HashMap<String, &'a Apply>,
    codec_aliases: HashMap<String, &'a Apply>,
    records: HashMap<String, (&'a RecordDecl, bool)>,
    enums: Vec<EnumDef>,
    /// Enum constant name to the enums declaring it.
    constants: HashMap<String, Vec<String>>,
}

/// Where an expression appears, and which names it may read.
struct Scope<'s> {
    record: &'s str,
    field: &'s str,
    params: &'s [String],
    fields: &'s [String],
    position: usize,
}

impl Scope<'_> {
    fn context(&self) -> String {
        format!("{}.{}", self.record, self.field)
    }
}

fn invalid(context: impl Into<String>, message: impl Into<String>) -> ResolveError {
    ResolveError::InvalidArgument {
        context: context.into(),
        message: message.into(),
    }
}

/// Applies an alias's fixed arguments, letting the instantiation override or add.
fn merge_args(base: &[Arg], overrides: &[Arg]) -> Vec<Arg> {
    let mut out: Vec<Arg> = base.to_vec();
    for a in overrides {
        match out.iter_mut().find(|b| b.name == a.name) {
            Some(b) => b.value = a.value.clone(),
            None => out.push(a.clone()),
        }
    }
    out
}

struct Args<'e> {
    context: String,
    map: Vec<(&'e str, &'e Expr)>,
}

impl<'e> Args<'e> {
    fn new(args: &'e [Arg], allowed: &[&str], context: String) -> Result<Self> {
        let mut map: Vec<(&str, &Expr)> = Vec::new();
        for a in args {
            if !allowed.contains(&a.name.as_str()) {
                return Err(invalid(
                    &context,
                    format!("unexpected argument `{}` (expected one of {})", a.name, allowed.join(", ")),
                ));
            }
            if map.iter().any(|(n, _)| *n == a.name) {
                return Err(invalid(&context, format!("argument `{}` given twice", a.name)));
            }
            map.push((&a.name, &a.value));
        }
        Ok(Args { context, map })
    }

    fn get(&self, name: &str) -> Option<&'e Expr> {
        self.map.iter().find(|(n, _)| *n == name).map(|(_, e)| *e)
    }

    fn text(&self, name: &str) -> Result<Option<&'e str>> {
        match self.get(name) {
            None => Ok(None),
            Some(Expr::Text(s)) => Ok(Some(s)),
            Some(_) => Err(invalid(&self.context, format!("`{name}` must be a text literal"))),
        }
    }

    fn regex(&self, name: &str) -> Result<Option<&'e str>> {
        match self.get(name) {
            None => Ok(None),
            Some(Expr::Regex(s)) => Ok(Some(s)),
            Some(_) => Err(invalid(&self.context, format!("`{name}` must be a /pattern/ literal"))),
        }
    }

    fn bits(&self, name: &str) -> Result<crate::bitstring::BitString> {
        match self.get(name) {
            Some(Expr::Bits(b)) => Ok(b.clone()),
            Some(_) => Err(invalid(&self.context, format!("`{name}` must be a bit or hex literal"))),
            None => Err(invalid(&self.context, format!("missing argument `{name}`"))),
        }
    }

    fn applied(&self, name: &str) -> Result<Option<Apply>> {
        match self.get(name) {
            None => Ok(None),
            Some(Expr::Ident(n)) => Ok(Some(Apply::bare(n.clone()))),
            Some(Expr::Apply(a)) => Ok(Some(a.clone())),
            Some(_) => Err(invalid(&self.context, format!("`{name}` must name a type or codec"))),
        }
    }

    fn required<T>(&self, name: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| invalid(&self.context, format!("missing argument `{name}`")))
    }
}

fn compile_pattern(src: &str, mode: PatternMode, context: &str, contains: bool, universe: u32) -> Result<CompiledPattern> {
    let pattern = Pattern::parse(src, mode).map_err(|source| ResolveError::Pattern {
        context: context.to_string(),
        source,
    })?;
    let automaton = if contains {
        Automaton::containing_any(&[&pattern], universe)
    } else {
        Automaton::full_match(&pattern, universe)
    };
    Ok(CompiledPattern {
        pattern,
        automaton: Arc::new(automaton),
    })
}

impl<'a> Resolver<'a> {
    fn declare_enum(&mut self, e: &EnumDecl) -> Result<()> {
        let base = match e.base.as_str() {
            "Text" => EnumBase::Text,
            "Integer" => EnumBase::Integer,
            other => {
                return Err(invalid(
                    format!("enum {}", e.name),
                    format!("base type must be Text or Integer, not {other}"),
                ))
            }
        };
        let mut constants: Vec<(String, Value)> = Vec::new();
        for (name, lit) in &e.constants {
            let v = match (base, lit) {
                (EnumBase::Text, Expr::Text(s)) => Value::Text(s.clone()),
                (EnumBase::Integer, Expr::Int(i)) => Value::Int(*i),
                _ => {
                    return Err(invalid(
                        format!("enum {}", e.name),
                        format!("constant {name} does not match the base type {}", e.base),
                    ))
                }
            };
            if constants.iter().any(|(n, _)| n == name) {
                return Err(ResolveError::DuplicateName {
                    kind: "enum constant",
                    name: format!("{}.{name}", e.name),
                });
            }
            if constants.iter().any(|(_, w)| *w == v) {
                return Err(invalid(format!("enum {}", e.name), format!("constant {name} repeats a representation")));
            }
            self.constants.entry(name.clone()).or_default().push(e.name.clone());
            constants.push((name.clone(), v));
        }
        self.enums.push(EnumDef {
            name: e.name.clone(),
            base,
            constants,
        });
        Ok(())
    }

    fn lower(&self, e: &Expr, scope: &Scope, deps: &mut Vec<String>) -> Result<ValueExpr> {
        Ok(match e {
            Expr::Int(i) => ValueExpr::Int(*i),
            Expr::Text(s) => ValueExpr::Text(s.clone()),
            Expr::Bits(b) => ValueExpr::Bits(b.clone()),
            Expr::Ident(n) if n == "true" || n == "false" => ValueExpr::Bool(n == "true"),
            Expr::Ident(n) => {
                if scope.params.contains(n) {
                    if !deps.contains(n) {
                        deps.push(n.clone());
                    }
                    return Ok(ValueExpr::Name(n.clone()));
                }
                if let Some(i) = scope.fields.iter().position(|f| f == n) {
                    if i == scope.position {
                        return Err(ResolveError::CyclicDependency {
                            context: scope.context(),
                            name: n.clone(),
                        });
                    }
                    if i > scope.position {
                        return Err(ResolveError::ForwardReference {
                            record: scope.record.to_string(),
                            field: scope.field.to_string(),
                            name: n.clone(),
                        });
                    }
                    if !deps.contains(n) {
                        deps.push(n.clone());
                    }
                    return Ok(ValueExpr::Name(n.clone()));
                }
                match self.constants.get(n).map(Vec::as_slice) {
                    Some([enum_name]) => ValueExpr::Enum {
                        enum_name: enum_name.clone(),
                        constant: n.clone(),
                    },
                    Some(several) => {
                        return Err(invalid(
                            scope.context(),
                            format!("constant `{n}` is ambiguous between {}", several.join(", ")),
                        ))
                    }
                    None => {
                        return Err(ResolveError::UnknownName {
                            kind: "name",
                            name: n.clone(),
                            context: scope.context(),
                        })
                    }
                }
            }
            Expr::Unary(op, inner) => ValueExpr::Unary(*op, Box::new(self.lower(inner, scope, deps)?)),
            Expr::Binary(op, l, r) => ValueExpr::Binary(
                *op,
                Box::new(self.lower(l, scope, deps)?),
                Box::new(self.lower(r, scope, deps)?),
            ),
            Expr::Regex(_) | Expr::Apply(_) => {
                return Err(invalid(scope.context(), "a pattern or type is not a value expression"))
            }
        })
    }

    fn lower_opt(&self, e: Option<&Expr>, scope: &Scope, deps: &mut Vec<String>) -> Result<Option<ValueExpr>> {
        e.map(|e| self.lower(e, scope, deps)).transpose()
    }

    /// Follows alias chains to a builtin, record or enum name.
    fn expand(&self, apply: &Apply, aliases: &HashMap<String, &'a Apply>, context: &str) -> Result<(String, Vec<Arg>)> {
        let mut name = apply.name.clone();
        let mut args = apply.args.clone();
        let mut seen = vec![name.clone()];
        while let Some(target) = aliases.get(&name) {
            args = merge_args(&target.args, &args);
            name = target.name.clone();
            if seen.contains(&name) || seen.len() > MAX_ALIAS_DEPTH {
                return Err(ResolveError::CyclicDependency {
                    context: context.to_string(),
                    name,
                });
            }
            seen.push(name.clone());
        }
        Ok((name, args))
    }

    fn resolve_type(&self, apply: &Apply, scope: &Scope, deps: &mut Vec<String>) -> Result<TypeInstance> {
        let ctx = scope.context();
        let (base, args) = self.expand(apply, &self.type_aliases, &ctx)?;
        let kind = match base.as_str() {
            "Integer" => {
                let a = Args::new(&args, &["min", "max", "value"], ctx.clone())?;
                TypeKind::Integer {
                    min: self.lower_opt(a.get("min"), scope, deps)?,
                    max: self.lower_opt(a.get("max"), scope, deps)?,
                    value: self.lower_opt(a.get("value"), scope, deps)?,
                }
            }
            "Text" => {
                let a = Args::new(
                    &args,
                    &["charset", "pattern", "exclude_pattern", "max_count", "value"],
                    ctx.clone(),
                )?;
                let charset = match a.text("charset")? {
                    None => Charset::Ascii,
                    Some(c) => Charset::parse(c).ok_or_else(|| invalid(&ctx, format!("unknown charset '{c}'")))?,
                };
                let universe = charset.universe();
                let pattern = a
                    .regex("pattern")?
                    .map(|p| compile_pattern(p, PatternMode::Text, &ctx, false, universe))
                    .transpose()?;
                let exclude = a
                    .regex("exclude_pattern")?
                    .map(|p| compile_pattern(p, PatternMode::Text, &ctx, true, universe))
                    .transpose()?;
                TypeKind::Text(TextType {
                    charset,
                    pattern,
                    exclude,
                    max_count: self.lower_opt(a.get("max_count"), scope, deps)?,
                    value: self.lower_opt(a.get("value"), scope, deps)?,
                })
            }
            "Binary" => {
                let a = Args::new(&args, &["value", "length", "char8_pattern"], ctx.clone())?;
                let pattern = a
                    .regex("char8_pattern")?
                    .map(|p| compile_pattern(p, PatternMode::Bits, &ctx, false, 2))
                    .transpose()?;
                let value = self.lower_opt(a.get("value"), scope, deps)?;
                let length = self.lower_opt(a.get("length"), scope, deps)?;
                if value.is_none() && length.is_none() {
                    return Err(invalid(&ctx, "Binary needs `length` or `value` to be self-delimiting"));
                }
                TypeKind::Binary(BinaryType { value, length, pattern })
            }
            "Bool" => {
                let a = Args::new(&args, &["value"], ctx.clone())?;
                TypeKind::Bool {
                    value: self.lower_opt(a.get("value"), scope, deps)?,
                }
            }
            "List" => {
                let a = Args::new(&args, &["elem", "max_length"], ctx.clone())?;
                let elem = a.required("elem", a.applied("elem")?)?;
                TypeKind::List {
                    elem: Box::new(self.resolve_type(&elem, scope, deps)?),
                    max_length: self.lower_opt(a.get("max_length"), scope, deps)?,
                }
            }
            "Optional" => {
                let a = Args::new(&args, &["is_empty", "subject"], ctx.clone())?;
                let is_empty = a.required("is_empty", a.get("is_empty"))?;
                let subject = a.required("subject", a.applied("subject")?)?;
                TypeKind::Optional {
                    is_empty: self.lower(is_empty, scope, deps)?,
                    subject: Box::new(self.resolve_type(&subject, scope, deps)?),
                }
            }
            name => {
                if let Some((decl, _)) = self.records.get(name) {
                    let mut params = Vec::new();
                    let mut pins = Vec::new();
                    for arg in &args {
                        let v = self.lower(&arg.value, scope, deps)?;
                        if decl.params.contains(&arg.name) {
                            params.push((arg.name.clone(), v));
                        } else if decl.fields.iter().any(|f| f.name == arg.name) {
                            pins.push((arg.name.clone(), v));
                        } else {
                            return Err(invalid(
                                &ctx,
                                format!("{name} has no parameter or field `{}`", arg.name),
                            ));
                        }
                    }
                    if let Some(p) = decl.params.iter().find(|p| !params.iter().any(|(n, _)| n == *p)) {
                        return Err(invalid(&ctx, format!("parameter `{p}` of {name} is not bound")));
                    }
                    TypeKind::Record {
                        record: name.to_string(),
                        params,
                        pins,
                    }
                } else if self.enums.iter().any(|e| e.name == name) {
                    let a = Args::new(&args, &["value"], ctx.clone())?;
                    TypeKind::Enum {
                        name: name.to_string(),
                        value: self.lower_opt(a.get("value"), scope, deps)?,
                    }
                } else {
                    return Err(ResolveError::UnknownName {
                        kind: "type",
                        name: name.to_string(),
                        context: ctx,
                    });
                }
            }
        };
        Ok(TypeInstance {
            written: apply.name.clone(),
            kind,
        })
    }

    fn resolve_codec(&self, apply: &Apply, scope: &Scope, deps: &mut Vec<String>) -> Result<Codec> {
        let ctx = scope.context();
        let (base, args) = self.expand(apply, &self.codec_aliases, &ctx)?;
        let encoding = |a: &Args| -> Result<Charset> {
            match a.text("encoding")? {
                None => Ok(Charset::Ascii),
                Some(c) => Charset::parse(c).ok_or_else(|| invalid(&ctx, format!("unknown encoding '{c}'"))),
            }
        };
        Ok(match base.as_str() {
            "BigEndian" => {
                let a = Args::new(&args, &["signed", "length"], ctx.clone())?;
                let signed = match self.lower_opt(a.get("signed"), scope, deps)? {
                    None => false,
                    Some(ValueExpr::Bool(b)) => b,
                    Some(_) => return Err(invalid(&ctx, "`signed` must be true or false")),
                };
                let length = self.lower(a.required("length", a.get("length"))?, scope, deps)?;
                if let ValueExpr::Int(n) = length {
                    if !(1..=128).contains(&n) {
                        return Err(invalid(&ctx, format!("BigEndian length {n} outside 1..=128")));
                    }
                }
                Codec::BigEndian { signed, length }
            }
            "BoolBits" => {
                let a = Args::new(&args, &["truth_string", "falsehood_string"], ctx.clone())?;
                let truth = a.bits("truth_string")?;
                let falsehood = a.bits("falsehood_string")?;
                if truth == falsehood || truth.len() != falsehood.len() || truth.is_empty() {
                    return Err(invalid(&ctx, "truth and falsehood strings must be distinct, nonempty and of equal length"));
                }
                Codec::BoolBits { truth, falsehood }
            }
            "TerminatedText" => {
                let a = Args::new(&args, &["encoding", "terminator"], ctx.clone())?;
                let encoding = encoding(&a)?;
                let term = a.required("terminator", a.text("terminator")?)?;
                if term.is_empty() || term.chars().any(|c| !encoding.contains(c)) {
                    return Err(invalid(&ctx, "terminator must be nonempty and inside the encoding"));
                }
                Codec::TerminatedText {
                    encoding,
                    terminator: term.chars().map(|c| c as u8).collect(),
                }
            }
            "FixedCountText" => {
                let a = Args::new(&args, &["encoding", "count"], ctx.clone())?;
                Codec::FixedCountText {
                    encoding: encoding(&a)?,
                    count: self.lower_opt(a.get("count"), scope, deps)?,
                }
            }
            "CountPrefixList" => {
                let a = Args::new(&args, &["count_codec", "elem_codec"], ctx.clone())?;
                let count = self.resolve_codec(&a.required("count_codec", a.applied("count_codec")?)?, scope, deps)?;
                if !count.is_integer() {
                    return Err(ResolveError::CodecMismatch {
                        context: ctx,
                        codec: count.name().into(),
                        ty: "a list count".into(),
                    });
                }
                let elem = a
                    .applied("elem_codec")?
                    .map(|e| self.resolve_codec(&e, scope, deps))
                    .transpose()?;
                Codec::CountPrefixList {
                    count: Box::new(count),
                    elem: elem.map(Box::new),
                }
            }
            "TextInteger" => {
                let a = Args::new(&args, &["text_codec"], ctx.clone())?;
                let text = self.resolve_codec(&a.required("text_codec", a.applied("text_codec")?)?, scope, deps)?;
                if !text.is_text() {
                    return Err(ResolveError::CodecMismatch {
                        context: ctx,
                        codec: text.name().into(),
                        ty: "decimal text".into(),
                    });
                }
                Codec::TextInteger { text: Box::new(text) }
            }
            other => {
                return Err(ResolveError::UnknownName {
                    kind: "codec",
                    name: other.to_string(),
                    context: ctx,
                })
            }
        })
    }

    fn resolve_record(&self, decl: &RecordDecl, is_message: bool) -> Result<RecordDef> {
        let names: Vec<String> = decl.fields.iter().map(|f| f.name.clone()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) || decl.params.contains(n) {
                return Err(ResolveError::DuplicateName {
                    kind: "field",
                    name: format!("{}.{n}", decl.name),
                });
            }
        }
        let mut fields = Vec::new();
        for (position, f) in decl.fields.iter().enumerate() {
            let scope = Scope {
                record: &decl.name,
                field: &f.name,
                params: &decl.params,
                fields: &names,
                position,
            };
            let mut deps = Vec::new();
            let ty = self.resolve_type(&f.ty, &scope, &mut deps)?;
            let codec = f
                .codec
                .as_ref()
                .map(|c| self.resolve_codec(c, &scope, &mut deps))
                .transpose()?;
            check_codec(&ty, codec.as_ref(), &self.enums, &scope.context())?;
            fields.push(Field {
                name: f.name.clone(),
                ty,
                codec,
                deps,
            });
        }
        let field_deps: Vec<Vec<String>> = fields.iter().map(|f| f.deps.clone()).collect();
        let order = topological_order(&names, &field_deps).ok_or_else(|| ResolveError::CyclicDependency {
            context: decl.name.clone(),
            name: decl.name.clone(),
        })?;
        Ok(RecordDef {
            name: decl.name.clone(),
            is_message,
            params: decl.params.clone(),
            fields,
            order,
        })
    }
}

fn check_codec(ty: &TypeInstance, codec: Option<&Codec>, enums: &[EnumDef], context: &str) -> Result<()> {
    let mismatch = || ResolveError::CodecMismatch {
        context: context.to_string(),
        codec: codec.map(|c| c.name()).unwrap_or("(none)").to_string(),
        ty: ty.base_name().to_string(),
    };
    let ok = match (&ty.kind, codec) {
        (TypeKind::Integer { .. }, Some(c)) => c.is_integer(),
        (TypeKind::Text(t), Some(Codec::FixedCountText { count, .. })) => {
            count.is_some() || t.value.is_some() || t.max_count.is_some()
        }
        (TypeKind::Text(_), Some(c)) => c.is_text(),
        (TypeKind::Bool { .. }, Some(c)) => matches!(c, Codec::BoolBits { .. }),
        (TypeKind::Enum { name, .. }, Some(c)) => match enums.iter().find(|e| e.name == *name).map(|e| e.base) {
            Some(EnumBase::Text) => c.is_text(),
            Some(EnumBase::Integer) => c.is_integer(),
            None => false,
        },
        (TypeKind::Binary(_) | TypeKind::Record { .. }, None) => true,
        (TypeKind::List { elem, .. }, Some(Codec::CountPrefixList { elem: elem_codec, .. })) => {
            return check_codec(elem, elem_codec.as_deref(), enums, &format!("{context}[]"));
        }
        (TypeKind::Optional { subject, .. }, c) => return check_codec(subject, c, enums, context),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(mismatch())
    }
}

fn referenced_records(t: &TypeInstance, out: &mut Vec<String>) {
    match &t.kind {
        TypeKind::Record { record, .. } => out.push(record.clone()),
        TypeKind::List { elem, .. } => referenced_records(elem, out),
        TypeKind::Optional { subject, .. } => referenced_records(subject, out),
        _ => {}
    }
}

fn check_record_cycles(records: &[RecordDef]) -> Result<()> {
    let edges: HashMap<&str, Vec<String>> = records
        .iter()
        .map(|r| {
            let mut out = Vec::new();
            for f in &r.fields {
                referenced_records(&f.ty, &mut out);
            }
            (r.name.as_str(), out)
        })
        .collect();
    fn visit<'a>(
        n: &'a str,
        edges: &'a HashMap<&str, Vec<String>>,
        stack: &mut Vec<&'a str>,
        done: &mut HashSet<&'a str>,
    ) -> Result<()> {
        if done.contains(n) {
            return Ok(());
        }
        if stack.contains(&n) {
            return Err(ResolveError::CyclicDependency {
                context: format!("record {}", stack[0]),
                name: n.to_string(),
            });
        }
        stack.push(n);
        for m in edges.get(n).into_iter().flatten() {
            visit(m, edges, stack, done)?;
        }
        stack.pop();
        done.insert(n);
        Ok(())
    }
    let mut done = HashSet::new();
    for r in records {
        visit(&r.name, &edges, &mut Vec::new(), &mut done)?;
    }
    Ok(())
}

fn check_actor(a: &ActorDecl, messages: &HashSet<&str>) -> Result<()> {
    let mut names: HashSet<&str> = HashSet::new();
    for s in &a.states {
        if s.name == QUIT_STATE || !names.insert(&s.name) {
            return Err(ResolveError::DuplicateName {
                kind: "state",
                name: format!("{}.{}", a.name, s.name),
            });
        }
    }
    let initial = a.states.iter().filter(|s| s.initial).count();
    if initial != 1 {
        return Err(ResolveError::InitialState {
            actor: a.name.clone(),
            message: format!("expected exactly one init state, found {initial}"),
        });
    }
    let unknown = |kind, name: &str, state: &str| ResolveError::UnknownName {
        kind,
        name: name.to_string(),
        context: format!("actor {} state {state}", a.name),
    };
    for s in &a.states {
        for c in &s.clauses {
            if let Trigger::On(m) = &c.trigger {
                if !messages.contains(m.as_str()) {
                    return Err(unknown("message type", m, &s.name));
                }
            }
            for alt in &c.alternatives {
                if let Some(m) = alt.sends.iter().find(|m| !messages.contains(m.as_str())) {
                    return Err(unknown("message type", m, &s.name));
                }
                if let Terminal::Next(t) = &alt.end {
                    if !names.contains(t.as_str()) {
                        return Err(unknown("state", t, &s.name));
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{load_spec, pretty, SpecError};

    fn err(src: &str) -> ResolveError {
        match load_spec(src) {
            Err(SpecError::Resolve(e)) => e,
            other => panic!("expected a resolution error, got {other:?}"),
        }
    }

    #[test]
    fn alias_arguments_are_overridden() {
        let spec = load_spec(
            "message module M
               type Identifier is Text(charset='ascii', pattern=/[!-~]+/, exclude_pattern=/ |\\r\\n|\\*/, max_count=20)
               type Tag is Identifier(pattern=/[0-9a-zA-Z]+/)
               codec SpaceTerminated is TerminatedText(encoding='ascii', terminator=' ')
               message T with t is Tag as SpaceTerminated end
             end",
        )
        .unwrap();
        let f = &spec.message("T").unwrap().fields[0];
        let TypeKind::Text(t) = &f.ty.kind else { panic!() };
        assert_eq!(t.charset, Charset::Ascii);
        assert_eq!(t.max_count, Some(ValueExpr::Int(20)));
        assert_eq!(t.pattern.as_ref().unwrap().pattern.source(), "[0-9a-zA-Z]+");
        assert_eq!(t.exclude.as_ref().unwrap().pattern.source(), " |\\r\\n|\\*");
        assert_eq!(f.ty.written, "Tag");
    }

    #[test]
    fn dependencies_follow_length_expressions() {
        let spec = load_spec(
            "message module M record R with
               n is Integer(min=0, max=500) as Word32Codec
               data is Binary(length=8*n)
             end end",
        )
        .unwrap();
        let r = spec.record("R").unwrap();
        assert_eq!(r.fields[1].deps, ["n"]);
        assert_eq!(crate::values::dependency_order(r), ["n", "data"]);
    }

    #[test]
    fn reference_errors() {
        assert!(matches!(
            err("message module M record R with a is Binary(length=8*b) b is Integer as Word32Codec end end"),
            ResolveError::ForwardReference { ref field, ref name, .. } if field == "a" && name == "b"
        ));
        assert!(matches!(
            err("message module M record R with a is Binary(length=a) end end"),
            ResolveError::CyclicDependency { .. }
        ));
        assert!(matches!(
            err("message module M record R with a is Nope end end"),
            ResolveError::UnknownName { kind: "type", .. }
        ));
        assert!(matches!(
            err("message module M record R with a is Bool as Word32Codec end record R with end end"),
            ResolveError::DuplicateName { .. }
        ));
        assert!(matches!(
            err("message module M record R with a is Bool as Word32Codec end end"),
            ResolveError::CodecMismatch { .. }
        ));
        assert!(matches!(
            err("message module M record R with a is List(elem=R) as CountPrefixList(count_codec=Word32Codec) end end"),
            ResolveError::CyclicDependency { .. }
        ));
        assert!(matches!(
            err("message module M message A with b is Binary(value=b'1') end end
                 interactions module I actor X with init state S where on A do next T end end end"),
            ResolveError::UnknownName { kind: "state", .. }
        ));
        assert!(matches!(
            err("message module M message A with b is Binary(value=b'1') end end
                 interactions module I actor X with state S where end end end"),
            ResolveError::InitialState { .. }
        ));
    }

    #[test]
    fn resolution_is_idempotent_through_source() {
        let src = crate::specs::MYP;
        let once = load_spec(src).unwrap();
        let again = load_spec(&pretty(&once.to_ast())).unwrap();
        assert_eq!(once.dump(), again.dump());
        let imap = load_spec(crate::specs::IMAP).unwrap();
        let imap_again = load_spec(&pretty(&imap.to_ast())).unwrap();
        assert_eq!(imap.dump(), imap_again.dump());
    }
}
