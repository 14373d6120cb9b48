//! Value <-> bit-level wire encoding, and message classification.

use thiserror::Error;

use crate::bitstring::{BitError, BitReader, BitString};
use crate::spec::{Charset, Codec, RecordDef, ResolvedSpec, TypeInstance, TypeKind};
use crate::values::{
    check_at, eval_expr, eval_int, eval_opt_int, instantiate, CheckError, Env, EnumValue, EvalError, RecordValue,
    Value,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("{path}: {value} is not representable by {codec}")]
    Unrepresentable { path: String, value: String, codec: String },
    #[error("{path}: text contains its own terminator")]
    TerminatorInPayload { path: String },
    #[error("message is {bits} bits long, not a whole number of bytes")]
    NotByteAligned { bits: usize },
    #[error("{path}: expected {expected}, found {found}")]
    Shape { path: String, expected: String, found: String },
    #[error("{path}: {source}")]
    Eval { path: String, source: EvalError },
    #[error("unknown message type {0}")]
    UnknownMessage(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeErrorKind {
    /// The input ended inside the field.
    Underrun { needed: usize, available: usize },
    /// The input ended before the field's terminator.
    MissingTerminator,
    /// No terminator within the permitted length.
    Unterminated,
    /// The bits do not form a value of the field's type.
    Malformed(String),
    /// The decoded value breaks a type constraint.
    Constraint(String),
    NotByteAligned { bits: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {}", describe(.kind))]
pub struct DecodeError {
    pub path: String,
    pub kind: DecodeErrorKind,
}

fn describe(k: &DecodeErrorKind) -> String {
    match k {
        DecodeErrorKind::Underrun { needed, available } => {
            format!("input ends early ({needed} bits needed, {available} available)")
        }
        DecodeErrorKind::MissingTerminator => "input ends before the terminator".into(),
        DecodeErrorKind::Unterminated => "no terminator within the permitted length".into(),
        DecodeErrorKind::Malformed(m) => m.clone(),
        DecodeErrorKind::Constraint(m) => format!("constraint violated: {m}"),
        DecodeErrorKind::NotByteAligned { bits } => format!("message ends after {bits} bits, not on a byte boundary"),
    }
}

impl DecodeError {
    /// True when more input could still make the decode succeed.
    pub fn is_incomplete(&self) -> bool {
        matches!(
            self.kind,
            DecodeErrorKind::Underrun { .. } | DecodeErrorKind::MissingTerminator
        )
    }

    fn new(path: &str, kind: DecodeErrorKind) -> Self {
        DecodeError {
            path: path.to_string(),
            kind,
        }
    }

    fn malformed(path: &str, m: impl Into<String>) -> Self {
        Self::new(path, DecodeErrorKind::Malformed(m.into()))
    }
}

fn bit_err(path: &str, e: BitError) -> DecodeError {
    match e {
        BitError::Underrun { needed, available } => DecodeError::new(path, DecodeErrorKind::Underrun { needed, available }),
        other => DecodeError::malformed(path, other.to_string()),
    }
}

fn decode_eval(path: &str, e: EvalError) -> DecodeError {
    DecodeError::malformed(path, format!("cannot evaluate argument: {e}"))
}

fn from_check(e: CheckError) -> DecodeError {
    match e {
        CheckError::Violation(v) => DecodeError::new(&v.path, DecodeErrorKind::Constraint(v.reason)),
        CheckError::Eval { path, source } => decode_eval(&path, source),
    }
}

/// Result of trying to read one message from the front of a byte buffer.
#[derive(Debug, Clone, PartialEq)]
pub enum DecodeOutcome {
    Classified {
        message: String,
        value: RecordValue,
        consumed: usize,
        /// Later candidates that also decode the same prefix.
        also_matched: Vec<String>,
    },
    NeedMoreBytes,
    InvalidFormat { diagnostics: Vec<(String, DecodeError)> },
}

// ---------------------------------------------------------------- encoding

pub fn encode_message(spec: &ResolvedSpec, message: &str, v: &RecordValue) -> Result<Vec<u8>, EncodeError> {
    let def = spec
        .message(message)
        .ok_or_else(|| EncodeError::UnknownMessage(message.to_string()))?;
    let mut out = BitString::new();
    Encoder { spec }.record(def, v, Env::new(), &[], &mut out, message)?;
    out.to_bytes().map_err(|_| EncodeError::NotByteAligned { bits: out.len() })
}

/// Encodes a single value of type `t`, e.g. one field outside any message.
pub fn encode_value(
    spec: &ResolvedSpec,
    v: &Value,
    t: &TypeInstance,
    codec: Option<&Codec>,
    env: &Env,
) -> Result<BitString, EncodeError> {
    let mut out = BitString::new();
    Encoder { spec }.value(v, t, codec, env, &mut out, "$")?;
    Ok(out)
}

struct Encoder<'s> {
    spec: &'s ResolvedSpec,
}

fn enc_eval(path: &str) -> impl Fn(EvalError) -> EncodeError + '_ {
    move |source| EncodeError::Eval {
        path: path.to_string(),
        source,
    }
}

fn shape(path: &str, expected: &str, v: &Value) -> EncodeError {
    EncodeError::Shape {
        path: path.to_string(),
        expected: expected.to_string(),
        found: v.kind_name().to_string(),
    }
}

/// Width and signedness of an integer codec, when it has one.
pub(crate) fn int_range(signed: bool, width: i128) -> (i128, i128) {
    let w = width.clamp(1, 128) as u32;
    if signed {
        if w == 128 {
            (i128::MIN, i128::MAX)
        } else {
            (-(1i128 << (w - 1)), (1i128 << (w - 1)) - 1)
        }
    } else if w >= 127 {
        (0, i128::MAX)
    } else {
        (0, (1i128 << w) - 1)
    }
}

impl Encoder<'_> {
    fn record(
        &self,
        def: &RecordDef,
        v: &RecordValue,
        mut env: Env,
        _pins: &[(String, Value)],
        out: &mut BitString,
        path: &str,
    ) -> Result<(), EncodeError> {
        if v.name != def.name || v.fields.len() != def.fields.len() {
            return Err(EncodeError::Shape {
                path: path.to_string(),
                expected: format!("record {}", def.name),
                found: format!("record {}", v.name),
            });
        }
        for (f, (name, value)) in def.fields.iter().zip(&v.fields) {
            if *name != f.name {
                return Err(EncodeError::Shape {
                    path: path.to_string(),
                    expected: format!("field {}", f.name),
                    found: format!("field {name}"),
                });
            }
            let fpath = format!("{path}.{}", f.name);
            self.value(value, &f.ty, f.codec.as_ref(), &env, out, &fpath)?;
            env.bind(f.name.clone(), value.clone());
        }
        Ok(())
    }

    fn value(
        &self,
        v: &Value,
        t: &TypeInstance,
        codec: Option<&Codec>,
        env: &Env,
        out: &mut BitString,
        path: &str,
    ) -> Result<(), EncodeError> {
        match (&t.kind, v) {
            (TypeKind::Binary(_), Value::Bits(b)) => {
                out.extend(b);
                Ok(())
            }
            (TypeKind::Optional { .. }, Value::Absent) => Ok(()),
            (TypeKind::Optional { subject, .. }, v) => self.value(v, subject, codec, env, out, path),
            (TypeKind::Record { record, params, pins }, Value::Record(rv)) => {
                let def = self.spec.record(record).expect("resolved record");
                let (inner, pinned) = instantiate(def, params, pins, env).map_err(enc_eval(path))?;
                self.record(def, rv, inner, &pinned, out, path)
            }
            (TypeKind::List { elem, .. }, Value::List(items)) => {
                let Some(Codec::CountPrefixList { count, elem: elem_codec }) = codec else {
                    return Err(shape(path, "a list codec", v));
                };
                self.integer(items.len() as i128, count, env, out, path)?;
                for (i, item) in items.iter().enumerate() {
                    self.value(item, elem, elem_codec.as_deref(), env, out, &format!("{path}[{i}]"))?;
                }
                Ok(())
            }
            (TypeKind::Integer { .. }, Value::Int(i)) => {
                self.integer(*i, codec.expect("resolved integer codec"), env, out, path)
            }
            (TypeKind::Text(_), Value::Text(s)) => self.text(s, codec.expect("resolved text codec"), t, env, out, path),
            (TypeKind::Bool { .. }, Value::Bool(b)) => match codec {
                Some(Codec::BoolBits { truth, falsehood }) => {
                    out.extend(if *b { truth } else { falsehood });
                    Ok(())
                }
                _ => Err(shape(path, "a BoolBits codec", v)),
            },
            (TypeKind::Enum { name, .. }, Value::Enum(ev)) => {
                let def = self.spec.enum_def(name).expect("resolved enum");
                let repr = def.representation(&ev.constant).ok_or_else(|| EncodeError::Unrepresentable {
                    path: path.to_string(),
                    value: ev.constant.clone(),
                    codec: name.clone(),
                })?;
                let codec = codec.expect("resolved enum codec");
                match repr {
                    Value::Int(i) => self.integer(*i, codec, env, out, path),
                    Value::Text(s) => self.text(s, codec, t, env, out, path),
                    _ => unreachable!("enum representations are integers or texts"),
                }
            }
            (_, v) => Err(shape(path, t.base_name(), v)),
        }
    }

    fn integer(&self, i: i128, codec: &Codec, env: &Env, out: &mut BitString, path: &str) -> Result<(), EncodeError> {
        match codec {
            Codec::BigEndian { signed, length } => {
                let width = eval_int(length, env, "length").map_err(enc_eval(path))?;
                let (lo, hi) = int_range(*signed, width);
                if !(1..=128).contains(&width) || i < lo || i > hi {
                    return Err(EncodeError::Unrepresentable {
                        path: path.to_string(),
                        value: i.to_string(),
                        codec: codec.to_string(),
                    });
                }
                out.push_uint(i as u128, width as usize);
                Ok(())
            }
            Codec::TextInteger { text } => self.raw_text(&i.to_string(), text, None, env, out, path),
            other => Err(EncodeError::Unrepresentable {
                path: path.to_string(),
                value: i.to_string(),
                codec: other.to_string(),
            }),
        }
    }

    fn text(&self, s: &str, codec: &Codec, t: &TypeInstance, env: &Env, out: &mut BitString, path: &str) -> Result<(), EncodeError> {
        let implied = match &t.kind {
            TypeKind::Text(tt) => match &tt.value {
                Some(e) => match eval_expr(e, env).map_err(enc_eval(path))? {
                    Value::Text(v) => Some(v.chars().count() as i128),
                    _ => None,
                },
                None => eval_opt_int(&tt.max_count, env, "max_count").map_err(enc_eval(path))?,
            },
            _ => None,
        };
        self.raw_text(s, codec, implied, env, out, path)
    }

    fn raw_text(
        &self,
        s: &str,
        codec: &Codec,
        implied_count: Option<i128>,
        env: &Env,
        out: &mut BitString,
        path: &str,
    ) -> Result<(), EncodeError> {
        let unrepresentable = || EncodeError::Unrepresentable {
            path: path.to_string(),
            value: format!("{s:?}"),
            codec: codec.to_string(),
        };
        let encode_chars = |charset: Charset| -> Result<Vec<u8>, EncodeError> {
            s.chars()
                .map(|c| if charset.contains(c) { Ok(c as u8) } else { Err(unrepresentable()) })
                .collect()
        };
        match codec {
            Codec::TerminatedText { encoding, terminator } => {
                let mut bytes = encode_chars(*encoding)?;
                let payload_len = bytes.len();
                bytes.extend_from_slice(terminator);
                if find(&bytes, terminator) != Some(payload_len) {
                    return Err(EncodeError::TerminatorInPayload { path: path.to_string() });
                }
                out.push_bytes(&bytes);
                Ok(())
            }
            Codec::FixedCountText { encoding, count } => {
                let n = match count {
                    Some(e) => Some(eval_int(e, env, "count").map_err(enc_eval(path))?),
                    None => implied_count,
                };
                let bytes = encode_chars(*encoding)?;
                if n != Some(bytes.len() as i128) {
                    return Err(unrepresentable());
                }
                out.push_bytes(&bytes);
                Ok(())
            }
            _ => Err(unrepresentable()),
        }
    }
}

pub(crate) fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

// ---------------------------------------------------------------- decoding

/// Tries each candidate, in declaration order, against the front of `buf`.
///
/// The first candidate that does not fail outright decides the outcome, so
/// the result never depends on how the input was split into chunks. With
/// `at_end` set, running out of input counts as an outright failure.
pub fn decode_message(spec: &ResolvedSpec, buf: &[u8], candidates: &[&str], at_end: bool) -> DecodeOutcome {
    let mut ordered: Vec<&str> = candidates.to_vec();
    ordered.sort_by_key(|m| spec.message_rank(m));
    ordered.dedup();
    let bits = BitString::from_bytes(buf);
    let mut diagnostics = Vec::new();
    let mut winner: Option<(String, RecordValue, usize)> = None;
    let mut also_matched = Vec::new();
    for m in ordered {
        let result = decode_one(spec, &bits, m);
        match (&winner, result) {
            (None, Ok((value, consumed))) => winner = Some((m.to_string(), value, consumed)),
            (Some((_, _, consumed)), Ok((_, c))) if c == *consumed => also_matched.push(m.to_string()),
            (Some(_), _) => {}
            (None, Err(e)) if e.is_incomplete() && !at_end => return DecodeOutcome::NeedMoreBytes,
            (None, Err(e)) => diagnostics.push((m.to_string(), e)),
        }
    }
    match winner {
        Some((message, value, consumed)) => DecodeOutcome::Classified {
            message,
            value,
            consumed,
            also_matched,
        },
        None if buf.is_empty() && !at_end => DecodeOutcome::NeedMoreBytes,
        None => DecodeOutcome::InvalidFormat { diagnostics },
    }
}

/// Splits `buf` into consecutive messages. Fails with the diagnostics of
/// the first position at which no candidate decodes.
pub fn decode_all(
    spec: &ResolvedSpec,
    buf: &[u8],
    candidates: &[&str],
) -> Result<Vec<(String, RecordValue)>, (usize, Vec<(String, DecodeError)>)> {
    let mut out = Vec::new();
    let mut at = 0;
    while at < buf.len() {
        match decode_message(spec, &buf[at..], candidates, true) {
            DecodeOutcome::Classified {
                message,
                value,
                consumed,
                ..
            } => {
                if consumed == 0 {
                    return Err((at, Vec::new()));
                }
                out.push((message, value));
                at += consumed;
            }
            DecodeOutcome::NeedMoreBytes => unreachable!("at_end decoding is never incomplete"),
            DecodeOutcome::InvalidFormat { diagnostics } => return Err((at, diagnostics)),
        }
    }
    Ok(out)
}

/// Decodes one message of type `message` from the front of `bits`; returns
/// the value and the number of bytes consumed.
pub fn decode_one(spec: &ResolvedSpec, bits: &BitString, message: &str) -> Result<(RecordValue, usize), DecodeError> {
    let def = spec
        .message(message)
        .ok_or_else(|| DecodeError::malformed(message, "unknown message type"))?;
    let mut r = BitReader::new(bits);
    let value = Decoder { spec }.record(def, Env::new(), &[], &mut r, message)?;
    let pos = r.position();
    if !pos.is_multiple_of(8) {
        return Err(DecodeError::new(message, DecodeErrorKind::NotByteAligned { bits: pos }));
    }
    Ok((value, pos / 8))
}

/// Decodes a single value of type `t` from the front of `bits`; returns the
/// value and the remaining bits.
pub fn decode_value(
    spec: &ResolvedSpec,
    bits: &BitString,
    t: &TypeInstance,
    codec: Option<&Codec>,
    env: &Env,
) -> Result<(Value, BitString), DecodeError> {
    let mut r = BitReader::new(bits);
    let v = Decoder { spec }.value(t, codec, env, &mut r, "$")?;
    check_decoded(spec, &v, t, env, "$")?;
    Ok((v, r.rest()))
}

struct Decoder<'s> {
    spec: &'s ResolvedSpec,
}

/// Field check after decoding: nested records were already checked field by
/// field, so only their pins are compared here.
fn check_decoded(spec: &ResolvedSpec, v: &Value, t: &TypeInstance, env: &Env, path: &str) -> Result<(), DecodeError> {
    match (&t.kind, v) {
        (TypeKind::Record { .. }, Value::Record(_)) => Ok(()),
        (TypeKind::List { elem, max_length }, Value::List(items)) => {
            let n = eval_opt_int(max_length, env, "max_length").map_err(|e| decode_eval(path, e))?;
            if let Some(n) = n {
                if items.len() as i128 > n {
                    return Err(DecodeError::new(
                        path,
                        DecodeErrorKind::Constraint(format!("{} elements exceed max_length {n}", items.len())),
                    ));
                }
            }
            for (i, item) in items.iter().enumerate() {
                check_decoded(spec, item, elem, env, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        (TypeKind::Optional { subject, .. }, v) if *v != Value::Absent => check_decoded(spec, v, subject, env, path),
        _ => check_at(spec, v, t, env, path).map_err(from_check),
    }
}

impl Decoder<'_> {
    fn record(
        &self,
        def: &RecordDef,
        mut env: Env,
        pinned: &[(String, Value)],
        r: &mut BitReader,
        path: &str,
    ) -> Result<RecordValue, DecodeError> {
        let mut fields = Vec::with_capacity(def.fields.len());
        for f in &def.fields {
            let fpath = format!("{path}.{}", f.name);
            let v = self.value(&f.ty, f.codec.as_ref(), &env, r, &fpath)?;
            check_decoded(self.spec, &v, &f.ty, &env, &fpath)?;
            if let Some((_, want)) = pinned.iter().find(|(n, _)| *n == f.name) {
                if v != *want {
                    return Err(DecodeError::new(
                        &fpath,
                        DecodeErrorKind::Constraint(format!("{v} differs from required value {want}")),
                    ));
                }
            }
            env.bind(f.name.clone(), v.clone());
            fields.push((f.name.clone(), v));
        }
        Ok(RecordValue {
            name: def.name.clone(),
            fields,
        })
    }

    fn value(
        &self,
        t: &TypeInstance,
        codec: Option<&Codec>,
        env: &Env,
        r: &mut BitReader,
        path: &str,
    ) -> Result<Value, DecodeError> {
        let eval_err = |e| decode_eval(path, e);
        match &t.kind {
            TypeKind::Binary(bt) => {
                let len = match (&bt.length, &bt.value) {
                    (Some(l), _) => eval_int(l, env, "length").map_err(eval_err)?,
                    (None, Some(v)) => match eval_expr(v, env).map_err(eval_err)? {
                        Value::Bits(b) => b.len() as i128,
                        other => return Err(DecodeError::malformed(path, format!("fixed value {other} is not bits"))),
                    },
                    (None, None) => unreachable!("resolve requires a length"),
                };
                if len < 0 {
                    return Err(DecodeError::malformed(path, format!("negative length {len}")));
                }
                Ok(Value::Bits(r.read(len as usize).map_err(|e| bit_err(path, e))?))
            }
            TypeKind::Optional { is_empty, subject } => {
                let empty = match eval_expr(is_empty, env).map_err(eval_err)? {
                    Value::Bool(b) => b,
                    other => return Err(DecodeError::malformed(path, format!("is_empty evaluated to {other}"))),
                };
                if empty {
                    Ok(Value::Absent)
                } else {
                    self.value(subject, codec, env, r, path)
                }
            }
            TypeKind::Record { record, params, pins } => {
                let def = self.spec.record(record).expect("resolved record");
                let (inner, pinned) = instantiate(def, params, pins, env).map_err(eval_err)?;
                Ok(Value::Record(self.record(def, inner, &pinned, r, path)?))
            }
            TypeKind::List { elem, max_length } => {
                let Some(Codec::CountPrefixList { count, elem: elem_codec }) = codec else {
                    unreachable!("resolve requires a list codec")
                };
                let n = self.integer(count, env, r, path)?;
                let limit = eval_opt_int(max_length, env, "max_length").map_err(eval_err)?;
                if n < 0 || limit.is_some_and(|l| n > l) {
                    return Err(DecodeError::new(
                        path,
                        DecodeErrorKind::Constraint(format!("element count {n} outside the permitted range")),
                    ));
                }
                let mut items = Vec::new();
                for i in 0..n {
                    let epath = format!("{path}[{i}]");
                    let v = self.value(elem, elem_codec.as_deref(), env, r, &epath)?;
                    check_decoded(self.spec, &v, elem, env, &epath)?;
                    items.push(v);
                }
                Ok(Value::List(items))
            }
            TypeKind::Integer { .. } => Ok(Value::Int(self.integer(codec.expect("integer codec"), env, r, path)?)),
            TypeKind::Text(tt) => {
                let limit = eval_opt_int(&tt.max_count, env, "max_count").map_err(eval_err)?;
                let implied = match &tt.value {
                    Some(e) => match eval_expr(e, env).map_err(eval_err)? {
                        Value::Text(v) => Some(v.chars().count() as i128),
                        _ => None,
                    },
                    None => limit,
                };
                let scan = implied.max(limit);
                Ok(Value::Text(self.text(codec.expect("text codec"), implied, scan, env, r, path)?))
            }
            TypeKind::Bool { .. } => match codec {
                Some(Codec::BoolBits { truth, falsehood }) => {
                    let bits = r.read(truth.len()).map_err(|e| bit_err(path, e))?;
                    if bits == *truth {
                        Ok(Value::Bool(true))
                    } else if bits == *falsehood {
                        Ok(Value::Bool(false))
                    } else {
                        Err(DecodeError::malformed(path, format!("{bits} is neither {truth} nor {falsehood}")))
                    }
                }
                _ => unreachable!("resolve requires BoolBits"),
            },
            TypeKind::Enum { name, .. } => {
                let def = self.spec.enum_def(name).expect("resolved enum");
                let codec = codec.expect("enum codec");
                let repr = if codec.is_integer() {
                    Value::Int(self.integer(codec, env, r, path)?)
                } else {
                    let longest = def
                        .constants
                        .iter()
                        .filter_map(|(_, v)| match v {
                            Value::Text(s) => Some(s.chars().count() as i128),
                            _ => None,
                        })
                        .max();
                    Value::Text(self.text(codec, None, longest, env, r, path)?)
                };
                match def.constant_for(&repr) {
                    Some(c) => Ok(Value::Enum(EnumValue {
                        enum_name: name.clone(),
                        constant: c.to_string(),
                    })),
                    None => Err(DecodeError::malformed(path, format!("{repr} is not a constant of {name}"))),
                }
            }
        }
    }

    fn integer(&self, codec: &Codec, env: &Env, r: &mut BitReader, path: &str) -> Result<i128, DecodeError> {
        match codec {
            Codec::BigEndian { signed, length } => {
                let width = eval_int(length, env, "length").map_err(|e| decode_eval(path, e))?;
                if !(1..=128).contains(&width) {
                    return Err(DecodeError::malformed(path, format!("integer width {width} outside 1..=128")));
                }
                let raw = r.read_uint(width as usize).map_err(|e| bit_err(path, e))?;
                let w = width as u32;
                Ok(if *signed && w < 128 && raw >> (w - 1) == 1 {
                    (raw as i128) - (1i128 << (w - 1)) * 2
                } else {
                    raw as i128
                })
            }
            Codec::TextInteger { text } => {
                let s = self.text(text, None, Some(40), env, r, path)?;
                let digits = s.strip_prefix('-').unwrap_or(&s);
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(DecodeError::malformed(path, format!("{s:?} is not a decimal integer")));
                }
                s.parse::<i128>()
                    .map_err(|_| DecodeError::malformed(path, format!("{s:?} is out of range")))
            }
            other => unreachable!("{} is not an integer codec", other.name()),
        }
    }

    /// `count` fixes the length of count-based codecs; `scan_limit` bounds
    /// the search for a terminator.
    fn text(
        &self,
        codec: &Codec,
        count: Option<i128>,
        scan_limit: Option<i128>,
        env: &Env,
        r: &mut BitReader,
        path: &str,
    ) -> Result<String, DecodeError> {
        let to_char = |b: u8, charset: Charset| -> Result<char, DecodeError> {
            let c = b as char;
            if charset.contains(c) {
                Ok(c)
            } else {
                Err(DecodeError::malformed(path, format!("byte {b:#04x} outside charset {}", charset.name())))
            }
        };
        match codec {
            Codec::TerminatedText { encoding, terminator } => {
                let mut bytes: Vec<u8> = Vec::new();
                loop {
                    if bytes.ends_with(terminator) {
                        bytes.truncate(bytes.len() - terminator.len());
                        return bytes.into_iter().map(|b| to_char(b, *encoding)).collect();
                    }
                    if let Some(limit) = scan_limit {
                        if bytes.len() as i128 >= limit.max(0) + terminator.len() as i128 {
                            return Err(DecodeError::new(path, DecodeErrorKind::Unterminated));
                        }
                    }
                    if r.remaining() < 8 {
                        return Err(DecodeError::new(path, DecodeErrorKind::MissingTerminator));
                    }
                    let b = r.read_byte().map_err(|e| bit_err(path, e))?;
                    if !encoding.contains(b as char) && !terminator.contains(&b) {
                        return Err(DecodeError::malformed(path, format!("byte {b:#04x} outside charset {}", encoding.name())));
                    }
                    bytes.push(b);
                }
            }
            Codec::FixedCountText { encoding, count: explicit } => {
                let n = match explicit {
                    Some(e) => Some(eval_int(e, env, "count").map_err(|e| decode_eval(path, e))?),
                    None => count,
                };
                let n = n.ok_or_else(|| DecodeError::malformed(path, "no character count available"))?;
                if n < 0 {
                    return Err(DecodeError::malformed(path, format!("negative count {n}")));
                }
                let mut s = String::new();
                for _ in 0..n {
                    let b = r.read_byte().map_err(|e| bit_err(path, e))?;
                    s.push(to_char(b, *encoding)?);
                }
                Ok(s)
            }
            other => unreachable!("{} is not a text codec", other.name()),
        }
    }
}
