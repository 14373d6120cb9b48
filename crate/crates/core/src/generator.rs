//! Seeded generation of values that satisfy their types.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bitstring::BitString;
use crate::codec::{find, int_range};
use crate::pattern::{Automaton, Pattern, PatternMode};
use crate::spec::{Codec, RecordDef, ResolvedSpec, TypeInstance, TypeKind};
use crate::values::{
    check_at, eval_expr, eval_int, eval_opt_int, instantiate, CheckError, Env, EnumValue, EvalError, Literal,
    RecordValue, Value,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    /// Length bound for texts with no other bound.
    pub max_text_len: usize,
    /// Length bound for lists with no other bound.
    pub max_list_len: usize,
    /// Bound on unbounded repetitions in text patterns.
    pub regex_expansion_cap: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_text_len: 32,
            max_list_len: 8,
            regex_expansion_cap: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("{path}: unsatisfiable constraint: {reason}")]
    UnsatisfiableConstraint { path: String, reason: String },
    #[error("unknown message type {0}")]
    UnknownMessage(String),
    #[error("{path}: literal does not fit the field type: {reason}")]
    BadLiteral { path: String, reason: String },
}

fn unsat(path: &str, reason: impl Into<String>) -> GenError {
    GenError::UnsatisfiableConstraint {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn eval_failed(path: &str) -> impl Fn(EvalError) -> GenError + '_ {
    move |e| unsat(path, format!("cannot evaluate argument: {e}"))
}

const TERMINATOR_RETRIES: usize = 32;

/// Owns its random state; produce values with [`Generator::generate_message`].
pub struct Generator<'s> {
    spec: &'s ResolvedSpec,
    cfg: GenConfig,
    rng: ChaCha8Rng,
    automata: HashMap<String, Arc<Automaton>>,
}

impl<'s> Generator<'s> {
    pub fn new(spec: &'s ResolvedSpec, cfg: GenConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Generator {
            spec,
            cfg,
            rng,
            automata: HashMap::new(),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn generate_message(&mut self, message: &str) -> Result<RecordValue, GenError> {
        self.generate_message_from(message, None)
    }

    /// Generates a message, taking the fields given in `template` verbatim.
    pub fn generate_message_from(&mut self, message: &str, template: Option<&Literal>) -> Result<RecordValue, GenError> {
        let spec = self.spec;
        let def = spec
            .message(message)
            .ok_or_else(|| GenError::UnknownMessage(message.to_string()))?;
        let fields = match template {
            None => None,
            Some(Literal::Record { name, fields }) => {
                if name.as_deref().is_some_and(|n| n != message) {
                    return Err(GenError::BadLiteral {
                        path: message.to_string(),
                        reason: format!("literal names {}", name.as_deref().unwrap_or("")),
                    });
                }
                Some(fields.as_slice())
            }
            Some(_) => {
                return Err(GenError::BadLiteral {
                    path: message.to_string(),
                    reason: "a message literal must be a record".into(),
                })
            }
        };
        self.record(def, Env::new(), &[], fields, message)
    }

    /// Generates one value of `t` under `env`.
    pub fn generate_value(&mut self, t: &TypeInstance, codec: Option<&Codec>, env: &Env) -> Result<Value, GenError> {
        let v = self.value(t, codec, env, None, "$")?;
        self.check(&v, t, env, "$")?;
        Ok(v)
    }

    fn check(&self, v: &Value, t: &TypeInstance, env: &Env, path: &str) -> Result<(), GenError> {
        check_at(self.spec, v, t, env, path).map_err(|e| match e {
            CheckError::Violation(v) => unsat(&v.path, v.reason),
            CheckError::Eval { path, source } => unsat(&path, format!("cannot evaluate argument: {source}")),
        })
    }

    fn record(
        &mut self,
        def: &'s RecordDef,
        mut env: Env,
        pinned: &[(String, Value)],
        template: Option<&[(String, Literal)]>,
        path: &str,
    ) -> Result<RecordValue, GenError> {
        let mut values: Vec<Option<Value>> = vec![None; def.fields.len()];
        for &i in &def.order {
            let f = &def.fields[i];
            let fpath = format!("{path}.{}", f.name);
            let given = template.and_then(|t| t.iter().find(|(n, _)| *n == f.name).map(|(_, l)| l));
            let v = match (pinned.iter().find(|(n, _)| *n == f.name), given) {
                (_, Some(lit)) => self.from_literal(lit, &f.ty, f.codec.as_ref(), &env, &fpath)?,
                (Some((_, v)), None) => v.clone(),
                (None, None) => self.value(&f.ty, f.codec.as_ref(), &env, None, &fpath)?,
            };
            if !matches!(f.ty.kind, TypeKind::Record { .. }) {
                self.check(&v, &f.ty, &env, &fpath)?;
            }
            if let Some((_, want)) = pinned.iter().find(|(n, _)| *n == f.name) {
                if v != *want {
                    return Err(unsat(&fpath, format!("{v} differs from required value {want}")));
                }
            }
            env.bind(f.name.clone(), v.clone());
            values[i] = Some(v);
        }
        Ok(RecordValue {
            name: def.name.clone(),
            fields: def
                .fields
                .iter()
                .zip(values)
                .map(|(f, v)| (f.name.clone(), v.expect("every field generated")))
                .collect(),
        })
    }

    fn value(
        &mut self,
        t: &TypeInstance,
        codec: Option<&Codec>,
        env: &Env,
        template: Option<&[(String, Literal)]>,
        path: &str,
    ) -> Result<Value, GenError> {
        let spec = self.spec;
        let ev = eval_failed(path);
        match &t.kind {
            TypeKind::Integer { min, max, value } => {
                if let Some(e) = value {
                    return eval_expr(e, env).map_err(ev);
                }
                let (mut lo, mut hi) = match codec {
                    Some(Codec::BigEndian { signed, length }) => int_range(*signed, eval_int(length, env, "length").map_err(&ev)?),
                    _ => (i32::MIN as i128, i32::MAX as i128),
                };
                if min.is_none() && max.is_none() && matches!(codec, Some(Codec::TextInteger { .. })) {
                    lo = 0;
                }
                if let Some(m) = eval_opt_int(min, env, "min").map_err(&ev)? {
                    lo = lo.max(m);
                }
                if let Some(m) = eval_opt_int(max, env, "max").map_err(&ev)? {
                    hi = hi.min(m);
                }
                if lo > hi {
                    return Err(unsat(path, format!("empty integer range [{lo}, {hi}]")));
                }
                Ok(Value::Int(self.rng.gen_range(lo..=hi)))
            }
            TypeKind::Bool { value } => match value {
                Some(e) => eval_expr(e, env).map_err(ev),
                None => Ok(Value::Bool(self.rng.gen())),
            },
            TypeKind::Enum { name, value } => {
                if let Some(e) = value {
                    return eval_expr(e, env).map_err(ev);
                }
                let def = spec.enum_def(name).expect("resolved enum");
                if def.constants.is_empty() {
                    return Err(unsat(path, format!("enum {name} has no constants")));
                }
                let i = self.rng.gen_range(0..def.constants.len());
                Ok(Value::Enum(EnumValue {
                    enum_name: name.clone(),
                    constant: def.constants[i].0.clone(),
                }))
            }
            TypeKind::Text(tt) => {
                if let Some(e) = &tt.value {
                    return eval_expr(e, env).map_err(ev);
                }
                let max_count = eval_opt_int(&tt.max_count, env, "max_count").map_err(&ev)?;
                let (fixed, terminator) = match codec {
                    Some(Codec::FixedCountText { count, .. }) => {
                        let n = match count {
                            Some(c) => Some(eval_int(c, env, "count").map_err(&ev)?),
                            None => max_count,
                        };
                        (n, None)
                    }
                    Some(Codec::TerminatedText { terminator, .. }) => (None, Some(terminator.clone())),
                    _ => (None, None),
                };
                let (lo, hi) = match fixed {
                    Some(n) => (n, n),
                    None => (0, max_count.unwrap_or(self.cfg.max_text_len as i128)),
                };
                if lo < 0 || hi < lo {
                    return Err(unsat(path, format!("no text length in [{lo}, {hi}]")));
                }
                let automaton = self.text_automaton(tt, fixed.is_none(), terminator.as_deref());
                for _ in 0..TERMINATOR_RETRIES {
                    let symbols = automaton
                        .sample(lo as usize, hi as usize, &mut self.rng)
                        .ok_or_else(|| unsat(path, "no text satisfies the pattern, exclusions and length"))?;
                    let s: String = symbols.iter().map(|&c| char::from_u32(c).unwrap()).collect();
                    match &terminator {
                        Some(term) => {
                            let mut bytes: Vec<u8> = symbols.iter().map(|&c| c as u8).collect();
                            bytes.extend_from_slice(term);
                            if find(&bytes, term) == Some(symbols.len()) {
                                return Ok(Value::Text(s));
                            }
                        }
                        None => return Ok(Value::Text(s)),
                    }
                }
                Err(unsat(path, "generated texts keep running into the terminator"))
            }
            TypeKind::Binary(bt) => {
                if let Some(e) = &bt.value {
                    return eval_expr(e, env).map_err(ev);
                }
                let len = eval_int(bt.length.as_ref().expect("resolved length"), env, "length").map_err(&ev)?;
                if len < 0 {
                    return Err(unsat(path, format!("negative length {len}")));
                }
                let len = len as usize;
                match &bt.pattern {
                    None => Ok(Value::Bits(BitString::from_bits((0..len).map(|_| self.rng.gen::<bool>())))),
                    Some(p) => {
                        let bits = p
                            .automaton
                            .sample(len, len, &mut self.rng)
                            .ok_or_else(|| unsat(path, format!("no {len}-bit string matches {}", p.pattern)))?;
                        Ok(Value::Bits(BitString::from_bits(bits.into_iter().map(|b| b == 1))))
                    }
                }
            }
            TypeKind::List { elem, max_length } => {
                let Some(Codec::CountPrefixList { count, elem: elem_codec }) = codec else {
                    unreachable!("resolve requires a list codec")
                };
                let mut hi = match eval_opt_int(max_length, env, "max_length").map_err(&ev)? {
                    Some(n) => n,
                    None => self.cfg.max_list_len as i128,
                };
                if let Codec::BigEndian { signed, length } = count.as_ref() {
                    hi = hi.min(int_range(*signed, eval_int(length, env, "length").map_err(&ev)?).1);
                }
                if hi < 0 {
                    return Err(unsat(path, format!("max_length {hi} is negative")));
                }
                let n = self.rng.gen_range(0..=hi);
                let mut items = Vec::new();
                for i in 0..n {
                    let epath = format!("{path}[{i}]");
                    let v = self.value(elem, elem_codec.as_deref(), env, None, &epath)?;
                    items.push(v);
                }
                Ok(Value::List(items))
            }
            TypeKind::Optional { is_empty, subject } => match eval_expr(is_empty, env).map_err(&ev)? {
                Value::Bool(true) => Ok(Value::Absent),
                Value::Bool(false) => self.value(subject, codec, env, template, path),
                other => Err(unsat(path, format!("is_empty evaluated to {other}"))),
            },
            TypeKind::Record { record, params, pins } => {
                let def = spec.record(record).expect("resolved record");
                let (inner, pinned) = instantiate(def, params, pins, env).map_err(ev)?;
                Ok(Value::Record(self.record(def, inner, &pinned, template, path)?))
            }
        }
    }

    fn text_automaton(&mut self, tt: &crate::spec::TextType, cap: bool, terminator: Option<&[u8]>) -> Arc<Automaton> {
        let key = format!(
            "{:?}|{:?}|{:?}|{:?}|{cap}",
            tt.charset,
            tt.pattern.as_ref().map(|p| p.pattern.source()),
            tt.exclude.as_ref().map(|p| p.pattern.source()),
            terminator
        );
        if let Some(a) = self.automata.get(&key) {
            return a.clone();
        }
        let limit = self.cfg.regex_expansion_cap;
        let pattern = tt.pattern.as_ref().map(|p| if cap { p.pattern.capped(limit) } else { p.pattern.clone() });
        let mut excluded: Vec<Pattern> = tt.exclude.iter().map(|p| p.pattern.clone()).collect();
        if let Some(term) = terminator {
            let symbols: Vec<u32> = term.iter().map(|&b| b as u32).collect();
            excluded.push(Pattern::literal(&symbols, PatternMode::Text));
        }
        let refs: Vec<&Pattern> = excluded.iter().collect();
        let a = Arc::new(Automaton::constrained(pattern.as_ref(), &refs, tt.charset.universe()));
        self.automata.insert(key, a.clone());
        a
    }

    fn from_literal(
        &mut self,
        lit: &Literal,
        t: &TypeInstance,
        codec: Option<&Codec>,
        env: &Env,
        path: &str,
    ) -> Result<Value, GenError> {
        let bad = |reason: String| GenError::BadLiteral {
            path: path.to_string(),
            reason,
        };
        Ok(match (&t.kind, lit) {
            (TypeKind::Optional { .. }, Literal::Absent) => Value::Absent,
            (TypeKind::Optional { subject, .. }, lit) => return self.from_literal(lit, subject, codec, env, path),
            (TypeKind::Integer { .. }, Literal::Int(i)) => Value::Int(*i),
            (TypeKind::Text(_), Literal::Text(s)) => Value::Text(s.clone()),
            (TypeKind::Binary(_), Literal::Bits(b)) => Value::Bits(b.clone()),
            (TypeKind::Bool { .. }, Literal::Bool(b)) => Value::Bool(*b),
            (TypeKind::Enum { name, .. }, Literal::Ident(c)) => {
                let def = self.spec.enum_def(name).expect("resolved enum");
                if def.representation(c).is_none() {
                    return Err(bad(format!("{c} is not a constant of {name}")));
                }
                Value::Enum(EnumValue {
                    enum_name: name.clone(),
                    constant: c.clone(),
                })
            }
            (TypeKind::List { elem, .. }, Literal::List(items)) => {
                let elem_codec = match codec {
                    Some(Codec::CountPrefixList { elem, .. }) => elem.as_deref(),
                    _ => None,
                };
                let mut out = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    out.push(self.from_literal(item, elem, elem_codec, env, &format!("{path}[{i}]"))?);
                }
                Value::List(out)
            }
            (TypeKind::Record { record, .. }, Literal::Record { name, fields }) => {
                if name.as_deref().is_some_and(|n| n != record) {
                    return Err(bad(format!("expected a {record} record")));
                }
                return self.value(t, codec, env, Some(fields), path);
            }
            (_, lit) => return Err(bad(format!("{lit:?} cannot be a {}", t.base_name()))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{decode_message, encode_message, DecodeOutcome};
    use crate::lang::load_spec;
    use crate::values::check_message;

    fn text_spec(field: &str) -> ResolvedSpec {
        load_spec(&format!(
            "message module M
               codec Space is TerminatedText(encoding='ascii', terminator=' ')
               message T with f is {field} as Space end
             end"
        ))
        .unwrap()
    }

    fn texts(spec: &ResolvedSpec, seed: u64, n: usize) -> Result<Vec<String>, GenError> {
        let mut g = Generator::new(spec, GenConfig { seed, ..GenConfig::default() });
        (0..n)
            .map(|_| {
                let m = g.generate_message("T")?;
                match &m.fields[0].1 {
                    Value::Text(s) => Ok(s.clone()),
                    other => panic!("{other:?}"),
                }
            })
            .collect()
    }

    #[test]
    fn mailbox_pattern_yields_only_its_members() {
        let spec = text_spec("Text(pattern=/INBOX|NOBOX/)");
        let got = texts(&spec, 3, 200).unwrap();
        assert!(got.iter().all(|s| s == "INBOX" || s == "NOBOX"));
        assert!(got.iter().any(|s| s == "INBOX") && got.iter().any(|s| s == "NOBOX"));
    }

    #[test]
    fn tag_pattern_respects_length_and_alphabet() {
        let spec = text_spec("Text(pattern=/[0-9a-zA-Z]+/, max_count=20)");
        for s in texts(&spec, 11, 300).unwrap() {
            assert!((1..=20).contains(&s.len()));
            assert!(s.chars().all(|c| c.is_ascii_alphanumeric()));
        }
    }

    #[test]
    fn contradiction_is_unsatisfiable() {
        let spec = text_spec("Text(pattern=/a/, exclude_pattern=/a/)");
        assert!(matches!(texts(&spec, 0, 1), Err(GenError::UnsatisfiableConstraint { .. })));
    }

    #[test]
    fn terminator_never_appears_in_generated_text() {
        let spec = text_spec("Text(pattern=/[ -~]*/)");
        for s in texts(&spec, 5, 300).unwrap() {
            assert!(!s.contains(' '));
        }
    }

    fn bits_spec(len: &str) -> ResolvedSpec {
        load_spec(&format!("message module M message B with b is Binary({len}) end end")).unwrap()
    }

    fn bits(spec: &ResolvedSpec, seed: u64) -> Result<BitString, GenError> {
        let mut g = Generator::new(spec, GenConfig { seed, ..GenConfig::default() });
        match g.generate_message("B")?.fields[0].1.clone() {
            Value::Bits(b) => Ok(b),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn padding_pattern_is_forced_at_each_length() {
        let spec = bits_spec("length=8, char8_pattern=/\\0*\\1/");
        assert_eq!(bits(&spec, 1).unwrap(), BitString::parse_bits("00000001").unwrap());
        let long = bits_spec("length=32, char8_pattern=/\\0*\\1/");
        assert_eq!(bits(&long, 1).unwrap().to_uint(), 1);
        let empty = bits_spec("length=0, char8_pattern=/\\0*\\1/");
        assert!(matches!(bits(&empty, 1), Err(GenError::UnsatisfiableConstraint { .. })));
    }

    #[test]
    fn unconstrained_bits_cover_the_space() {
        assert!(bits(&bits_spec("length=0"), 0).unwrap().is_empty());
        let spec = bits_spec("length=3");
        let seen: std::collections::HashSet<u128> = (0..200).map(|s| bits(&spec, s).unwrap().to_uint()).collect();
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn myp_messages_are_valid_and_deterministic() {
        let spec = crate::specs::myp();
        let mut a = Generator::new(&spec, GenConfig { seed: 7, ..GenConfig::default() });
        let mut b = Generator::new(&spec, GenConfig { seed: 7, ..GenConfig::default() });
        for _ in 0..50 {
            for m in ["Ask", "Done", "Data"] {
                let v = a.generate_message(m).unwrap();
                assert_eq!(v, b.generate_message(m).unwrap());
                check_message(&spec, m, &v).unwrap();
                let bytes = encode_message(&spec, m, &v).unwrap();
                match decode_message(&spec, &bytes, &[m], false) {
                    DecodeOutcome::Classified { value, consumed, .. } => {
                        assert_eq!(value, v);
                        assert_eq!(consumed, bytes.len());
                    }
                    other => panic!("{other:?}"),
                }
            }
        }
    }

    #[test]
    fn ask_has_a_single_value() {
        let spec = crate::specs::myp();
        let mut g = Generator::new(&spec, GenConfig::default());
        assert_eq!(g.generate_message("Ask").unwrap().to_string(), "Ask { h { flag=1 reserved=b'000000' } }");
    }

    #[test]
    fn templates_fix_fields() {
        let spec = crate::specs::myp();
        let mut g = Generator::new(&spec, GenConfig::default());
        let lit = crate::values::parse_literal("Data { hasfoot=true foot='hi' payload=[] }").unwrap();
        let v = g.generate_message_from("Data", Some(&lit)).unwrap();
        assert_eq!(v.get("foot"), Some(&Value::Text("hi".into())));
        let bad = crate::values::parse_literal("Data { hasfoot=false foot='hi' }").unwrap();
        assert!(g.generate_message_from("Data", Some(&bad)).is_err());
    }
}
