//! Regular expressions over a finite symbol universe.
//!
//! Used for text constraints (symbols are character codes) and bit-level
//! `char8_pattern` constraints (symbols are 0 and 1). Patterns compile to
//! complete DFAs so that full matching, substring exclusion, emptiness
//! checks and uniform sampling all work off the same structure.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid pattern /{source_text}/ at offset {offset}: {message}")]
pub struct PatternError {
    pub source_text: String,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternMode {
    /// Symbols are character codes.
    Text,
    /// Symbols are bits; `\0` and `\1` denote a single bit.
    Bits,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ClassSet {
    ranges: Vec<(u32, u32)>,
    negated: bool,
}

impl ClassSet {
    fn single(c: u32) -> Self {
        ClassSet {
            ranges: vec![(c, c)],
            negated: false,
        }
    }

    fn any() -> Self {
        ClassSet {
            ranges: Vec::new(),
            negated: true,
        }
    }

    /// Inclusive ranges clipped to `[0, universe)`, sorted and merged.
    fn resolve(&self, universe: u32) -> Vec<(u32, u32)> {
        let mut rs: Vec<(u32, u32)> = self
            .ranges
            .iter()
            .filter(|(a, _)| *a < universe)
            .map(|&(a, b)| (a, b.min(universe - 1)))
            .collect();
        rs.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::new();
        for (a, b) in rs {
            match merged.last_mut() {
                Some(last) if a <= last.1.saturating_add(1) => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        if !self.negated {
            return merged;
        }
        let mut out = Vec::new();
        let mut next = 0u32;
        for (a, b) in merged {
            if a > next {
                out.push((next, a - 1));
            }
            next = b + 1;
        }
        if next < universe {
            out.push((next, universe - 1));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Class(ClassSet),
    Concat(Vec<Node>),
    Alt(Vec<Node>),
    Repeat {
        node: Box<Node>,
        min: u32,
        max: Option<u32>,
    },
}

impl Node {
    fn cap(&self, cap: u32) -> Node {
        match self {
            Node::Class(c) => Node::Class(c.clone()),
            Node::Concat(ns) => Node::Concat(ns.iter().map(|n| n.cap(cap)).collect()),
            Node::Alt(ns) => Node::Alt(ns.iter().map(|n| n.cap(cap)).collect()),
            Node::Repeat { node, min, max } => Node::Repeat {
                node: Box::new(node.cap(cap)),
                min: *min,
                max: Some(max.unwrap_or((*min).max(cap))),
            },
        }
    }
}

/// A parsed regular expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    source: String,
    mode: PatternMode,
    root: Node,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}/", self.source)
    }
}

impl Pattern {
    pub fn parse(source: &str, mode: PatternMode) -> Result<Pattern, PatternError> {
        let mut p = Parser {
            chars: source.chars().collect(),
            pos: 0,
            mode,
            source,
        };
        let root = p.parse_alt()?;
        if p.pos < p.chars.len() {
            return Err(p.error("unbalanced ')'"));
        }
        Ok(Pattern {
            source: source.to_string(),
            mode,
            root,
        })
    }

    /// The pattern matching exactly the given symbol sequence.
    pub fn literal(symbols: &[u32], mode: PatternMode) -> Pattern {
        let mut source = String::new();
        for &s in symbols {
            match mode {
                PatternMode::Bits => source.push_str(if s == 0 { "\\0" } else { "\\1" }),
                PatternMode::Text => {
                    let c = char::from_u32(s).unwrap_or('?');
                    if c.is_ascii_alphanumeric() {
                        source.push(c);
                    } else {
                        source.push_str(&format!("\\x{s:02x}"));
                    }
                }
            }
        }
        Pattern {
            source,
            mode,
            root: Node::Concat(symbols.iter().map(|&s| Node::Class(ClassSet::single(s))).collect()),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn mode(&self) -> PatternMode {
        self.mode
    }

    /// Replaces every unbounded repetition `{m,}` by `{m, max(m, cap)}`.
    pub fn capped(&self, cap: u32) -> Pattern {
        Pattern {
            source: self.source.clone(),
            mode: self.mode,
            root: self.root.cap(cap),
        }
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    mode: PatternMode,
    source: &'a str,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> PatternError {
        PatternError {
            source_text: self.source.to_string(),
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn parse_alt(&mut self) -> Result<Node, PatternError> {
        let mut branches = vec![self.parse_concat()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            branches.push(self.parse_concat()?);
        }
        Ok(if branches.len() == 1 {
            branches.pop().unwrap()
        } else {
            Node::Alt(branches)
        })
    }

    fn parse_concat(&mut self) -> Result<Node, PatternError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            // Anchors are redundant under full-match semantics.
            if (c == '^' && self.pos == 0) || (c == '$' && self.pos + 1 == self.chars.len()) {
                self.pos += 1;
                continue;
            }
            let atom = self.parse_atom()?;
            items.push(self.parse_quantifiers(atom)?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Node::Concat(items)
        })
    }

    fn parse_quantifiers(&mut self, mut node: Node) -> Result<Node, PatternError> {
        loop {
            let (min, max) = match self.peek() {
                Some('*') => (0, None),
                Some('+') => (1, None),
                Some('?') => (0, Some(1)),
                Some('{') => {
                    self.pos += 1;
                    let min = self.parse_number()?;
                    let max = if self.peek() == Some(',') {
                        self.pos += 1;
                        if self.peek() == Some('}') {
                            None
                        } else {
                            Some(self.parse_number()?)
                        }
                    } else {
                        Some(min)
                    };
                    if self.peek() != Some('}') {
                        return Err(self.error("expected '}'"));
                    }
                    if let Some(max) = max {
                        if max < min {
                            return Err(self.error("repetition bounds out of order"));
                        }
                    }
                    (min, max)
                }
                _ => return Ok(node),
            };
            self.pos += 1;
            node = Node::Repeat {
                node: Box::new(node),
                min,
                max,
            };
        }
    }

    fn parse_number(&mut self) -> Result<u32, PatternError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits.parse().map_err(|_| self.error("expected a number"))
    }

    fn parse_atom(&mut self) -> Result<Node, PatternError> {
        let c = self.bump().ok_or_else(|| self.error("unexpected end"))?;
        match c {
            '(' => {
                if self.peek() == Some('?') {
                    self.pos += 1;
                    if self.bump() != Some(':') {
                        return Err(self.error("only (?:...) groups are supported"));
                    }
                }
                let inner = self.parse_alt()?;
                if self.bump() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            '[' => self.parse_class().map(Node::Class),
            '.' => Ok(Node::Class(ClassSet::any())),
            '\\' => self.parse_escape().map(Node::Class),
            '*' | '+' | '?' | '{' => Err(self.error("quantifier without operand")),
            c => self.literal(c).map(|s| Node::Class(ClassSet::single(s))),
        }
    }

    fn literal(&self, c: char) -> Result<u32, PatternError> {
        match self.mode {
            PatternMode::Text => Ok(c as u32),
            PatternMode::Bits => match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(self.error("bit patterns may only contain 0, 1, \\0 and \\1")),
            },
        }
    }

    fn parse_escape(&mut self) -> Result<ClassSet, PatternError> {
        let c = self.bump().ok_or_else(|| self.error("dangling escape"))?;
        if self.mode == PatternMode::Bits {
            return match c {
                '0' => Ok(ClassSet::single(0)),
                '1' => Ok(ClassSet::single(1)),
                _ => Err(self.error("unsupported escape in bit pattern")),
            };
        }
        let set = |ranges: Vec<(u32, u32)>, negated| ClassSet { ranges, negated };
        Ok(match c {
            'n' => ClassSet::single('\n' as u32),
            'r' => ClassSet::single('\r' as u32),
            't' => ClassSet::single('\t' as u32),
            'f' => ClassSet::single(0x0c),
            'v' => ClassSet::single(0x0b),
            '0' => ClassSet::single(0),
            'x' => {
                let hi = self.bump().and_then(|c| c.to_digit(16));
                let lo = self.bump().and_then(|c| c.to_digit(16));
                match (hi, lo) {
                    (Some(h), Some(l)) => ClassSet::single(h * 16 + l),
                    _ => return Err(self.error("expected two hex digits after \\x")),
                }
            }
            'd' => set(vec![('0' as u32, '9' as u32)], false),
            'D' => set(vec![('0' as u32, '9' as u32)], true),
            'w' => set(word_ranges(), false),
            'W' => set(word_ranges(), true),
            's' => set(space_ranges(), false),
            'S' => set(space_ranges(), true),
            c if c.is_ascii_alphanumeric() => return Err(self.error("unknown escape")),
            c => ClassSet::single(c as u32),
        })
    }

    fn parse_class(&mut self) -> Result<ClassSet, PatternError> {
        let mut negated = false;
        if self.peek() == Some('^') {
            negated = true;
            self.pos += 1;
        }
        let mut ranges = Vec::new();
        let mut first = true;
        loop {
            let c = self.bump().ok_or_else(|| self.error("unterminated class"))?;
            if c == ']' && !first {
                break;
            }
            first = false;
            let lo_set = if c == '\\' {
                self.parse_escape()?
            } else {
                ClassSet::single(self.literal(c)?)
            };
            let single = lo_set.ranges.len() == 1 && !lo_set.negated && lo_set.ranges[0].0 == lo_set.ranges[0].1;
            if single && self.peek() == Some('-') && self.chars.get(self.pos + 1).is_some_and(|&n| n != ']') {
                self.pos += 1;
                let hc = self.bump().unwrap();
                let hi = if hc == '\\' {
                    let s = self.parse_escape()?;
                    if s.ranges.len() != 1 || s.negated || s.ranges[0].0 != s.ranges[0].1 {
                        return Err(self.error("class range bound must be a single symbol"));
                    }
                    s.ranges[0].0
                } else {
                    self.literal(hc)?
                };
                let lo = lo_set.ranges[0].0;
                if hi < lo {
                    return Err(self.error("class range out of order"));
                }
                ranges.push((lo, hi));
            } else if lo_set.negated {
                // Nested negated shorthand such as \D is expanded against the text universe.
                ranges.extend(lo_set.resolve(0x110000));
            } else {
                ranges.extend(lo_set.ranges);
            }
        }
        Ok(ClassSet { ranges, negated })
    }
}

fn word_ranges() -> Vec<(u32, u32)> {
    vec![
        ('0' as u32, '9' as u32),
        ('A' as u32, 'Z' as u32),
        ('_' as u32, '_' as u32),
        ('a' as u32, 'z' as u32),
    ]
}

fn space_ranges() -> Vec<(u32, u32)> {
    vec![(9, 13), (32, 32)]
}

/// Thompson NFA with a single accepting state.
struct Nfa {
    eps: Vec<Vec<usize>>,
    edges: Vec<Vec<(Vec<(u32, u32)>, usize)>>,
    start: usize,
    accept: usize,
}

impl Nfa {
    fn build(root: &Node, universe: u32) -> Nfa {
        let mut nfa = Nfa {
            eps: Vec::new(),
            edges: Vec::new(),
            start: 0,
            accept: 0,
        };
        let (s, e) = nfa.fragment(root, universe);
        nfa.start = s;
        nfa.accept = e;
        nfa
    }

    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.edges.push(Vec::new());
        self.eps.len() - 1
    }

    fn fragment(&mut self, node: &Node, universe: u32) -> (usize, usize) {
        match node {
            Node::Class(c) => {
                let s = self.state();
                let e = self.state();
                let rs = c.resolve(universe);
                if !rs.is_empty() {
                    self.edges[s].push((rs, e));
                }
                (s, e)
            }
            Node::Concat(items) => {
                let s = self.state();
                let mut cur = s;
                for item in items {
                    let (is, ie) = self.fragment(item, universe);
                    self.eps[cur].push(is);
                    cur = ie;
                }
                (s, cur)
            }
            Node::Alt(branches) => {
                let s = self.state();
                let e = self.state();
                for b in branches {
                    let (bs, be) = self.fragment(b, universe);
                    self.eps[s].push(bs);
                    self.eps[be].push(e);
                }
                (s, e)
            }
            Node::Repeat { node, min, max } => {
                let s = self.state();
                let mut cur = s;
                for _ in 0..*min {
                    let (is, ie) = self.fragment(node, universe);
                    self.eps[cur].push(is);
                    cur = ie;
                }
                match max {
                    None => {
                        let (is, ie) = self.fragment(node, universe);
                        self.eps[cur].push(is);
                        self.eps[ie].push(is);
                        let e = self.state();
                        self.eps[cur].push(e);
                        self.eps[ie].push(e);
                        (s, e)
                    }
                    Some(max) => {
                        let e = self.state();
                        for _ in *min..*max {
                            self.eps[cur].push(e);
                            let (is, ie) = self.fragment(node, universe);
                            self.eps[cur].push(is);
                            cur = ie;
                        }
                        self.eps[cur].push(e);
                        (s, e)
                    }
                }
            }
        }
    }

    fn closure(&self, set: &mut Vec<usize>) {
        let mut seen = vec![false; self.eps.len()];
        let mut stack: Vec<usize> = set.clone();
        for &s in set.iter() {
            seen[s] = true;
        }
        while let Some(s) = stack.pop() {
            for &t in &self.eps[s] {
                if !seen[t] {
                    seen[t] = true;
                    set.push(t);
                    stack.push(t);
                }
            }
        }
        set.sort_unstable();
        set.dedup();
    }
}

/// How component acceptances combine in a product automaton.
#[derive(Clone, Copy)]
enum Accept {
    /// Single component accepts.
    Only,
    /// First component accepts and none of the others do.
    FirstButNotRest,
}

/// Complete deterministic automaton over an interval partition of the universe.
#[derive(Debug, Clone)]
pub struct Automaton {
    universe: u32,
    /// Half-open `[start, end)` symbol intervals.
    intervals: Vec<(u32, u32)>,
    trans: Vec<Vec<usize>>,
    accept: Vec<bool>,
}

impl Automaton {
    /// Accepts exactly the strings fully matching `pattern`.
    pub fn full_match(pattern: &Pattern, universe: u32) -> Automaton {
        Self::product(&[Nfa::build(&pattern.root, universe)], universe, Accept::Only)
    }

    /// Accepts strings containing a match of any of `patterns` as a substring.
    pub fn containing_any(patterns: &[&Pattern], universe: u32) -> Automaton {
        Self::product(&[Nfa::build(&contains_node(patterns), universe)], universe, Accept::Only)
    }

    /// Accepts strings in `L(pattern)` (everything when `None`) that contain
    /// no substring matching any of `excluded`.
    pub fn constrained(pattern: Option<&Pattern>, excluded: &[&Pattern], universe: u32) -> Automaton {
        let base = match pattern {
            Some(p) => p.root.clone(),
            None => Node::Repeat {
                node: Box::new(Node::Class(ClassSet::any())),
                min: 0,
                max: None,
            },
        };
        let mut nfas = vec![Nfa::build(&base, universe)];
        if !excluded.is_empty() {
            nfas.push(Nfa::build(&contains_node(excluded), universe));
        }
        Self::product(&nfas, universe, Accept::FirstButNotRest)
    }

    fn product(nfas: &[Nfa], universe: u32, mode: Accept) -> Automaton {
        let mut cuts = vec![0u32, universe];
        for nfa in nfas {
            for edges in &nfa.edges {
                for (ranges, _) in edges {
                    for &(a, b) in ranges {
                        cuts.push(a);
                        cuts.push(b + 1);
                    }
                }
            }
        }
        cuts.sort_unstable();
        cuts.dedup();
        cuts.retain(|&c| c <= universe);
        let intervals: Vec<(u32, u32)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();

        type Key = Vec<Vec<usize>>;
        let mut ids: HashMap<Key, usize> = HashMap::new();
        let mut sets: Vec<Key> = Vec::new();
        let mut trans: Vec<Vec<usize>> = Vec::new();
        let mut accept = Vec::new();

        let start: Key = nfas
            .iter()
            .map(|n| {
                let mut s = vec![n.start];
                n.closure(&mut s);
                s
            })
            .collect();
        ids.insert(start.clone(), 0);
        sets.push(start);
        let mut i = 0;
        while i < sets.len() {
            let current = sets[i].clone();
            let acc: Vec<bool> = current
                .iter()
                .zip(nfas)
                .map(|(set, n)| set.binary_search(&n.accept).is_ok())
                .collect();
            accept.push(match mode {
                Accept::Only => acc[0],
                Accept::FirstButNotRest => acc[0] && !acc[1..].iter().any(|&a| a),
            });
            let mut row = Vec::with_capacity(intervals.len());
            for &(lo, _) in &intervals {
                let next: Key = current
                    .iter()
                    .zip(nfas)
                    .map(|(set, n)| {
                        let mut out = Vec::new();
                        for &s in set {
                            for (ranges, t) in &n.edges[s] {
                                if ranges.iter().any(|&(a, b)| a <= lo && lo <= b) {
                                    out.push(*t);
                                }
                            }
                        }
                        out.sort_unstable();
                        out.dedup();
                        n.closure(&mut out);
                        out
                    })
                    .collect();
                let id = match ids.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = sets.len();
                        ids.insert(next.clone(), id);
                        sets.push(next);
                        id
                    }
                };
                row.push(id);
            }
            trans.push(row);
            i += 1;
        }
        Automaton {
            universe,
            intervals,
            trans,
            accept,
        }
    }

    pub fn state_count(&self) -> usize {
        self.trans.len()
    }

    fn interval_of(&self, symbol: u32) -> Option<usize> {
        if symbol >= self.universe {
            return None;
        }
        let idx = self.intervals.partition_point(|&(lo, _)| lo <= symbol);
        Some(idx - 1)
    }

    pub fn accepts<I: IntoIterator<Item = u32>>(&self, symbols: I) -> bool {
        let mut state = 0;
        for s in symbols {
            match self.interval_of(s) {
                Some(i) => state = self.trans[state][i],
                None => return false,
            }
        }
        self.accept[state]
    }

    /// `table[r][q]` = ln(number of accepted strings of length exactly r from state q).
    fn count_table(&self, max_len: usize) -> Vec<Vec<f64>> {
        let n = self.trans.len();
        let mut table = Vec::with_capacity(max_len + 1);
        table.push(
            self.accept
                .iter()
                .map(|&a| if a { 0.0 } else { f64::NEG_INFINITY })
                .collect::<Vec<f64>>(),
        );
        let sizes: Vec<f64> = self
            .intervals
            .iter()
            .map(|&(lo, hi)| ((hi - lo) as f64).ln())
            .collect();
        for r in 1..=max_len {
            let prev = &table[r - 1];
            let row: Vec<f64> = (0..n)
                .map(|q| log_sum_exp(self.trans[q].iter().zip(&sizes).map(|(&t, &sz)| sz + prev[t])))
                .collect();
            table.push(row);
        }
        table
    }

    /// Lengths in `[min_len, max_len]` for which some accepted string exists.
    pub fn feasible_lengths(&self, min_len: usize, max_len: usize) -> Vec<usize> {
        if min_len > max_len {
            return Vec::new();
        }
        let table = self.count_table(max_len);
        (min_len..=max_len)
            .filter(|&r| table[r][0] > f64::NEG_INFINITY)
            .collect()
    }

    /// Draws an accepted string: the length uniformly among feasible lengths in
    /// `[min_len, max_len]`, then uniformly among accepted strings of that length.
    pub fn sample<R: Rng + ?Sized>(&self, min_len: usize, max_len: usize, rng: &mut R) -> Option<Vec<u32>> {
        if min_len > max_len {
            return None;
        }
        let table = self.count_table(max_len);
        let lengths: Vec<usize> = (min_len..=max_len)
            .filter(|&r| table[r][0] > f64::NEG_INFINITY)
            .collect();
        if lengths.is_empty() {
            return None;
        }
        let len = lengths[rng.gen_range(0..lengths.len())];
        let mut out = Vec::with_capacity(len);
        let mut state = 0;
        for remaining in (1..=len).rev() {
            let weights: Vec<f64> = self
                .trans[state]
                .iter()
                .zip(&self.intervals)
                .map(|(&t, &(lo, hi))| ((hi - lo) as f64).ln() + table[remaining - 1][t])
                .collect();
            let i = pick_log_weighted(&weights, rng);
            let (lo, hi) = self.intervals[i];
            out.push(rng.gen_range(lo..hi));
            state = self.trans[state][i];
        }
        debug_assert!(self.accept[state]);
        Some(out)
    }
}

fn contains_node(patterns: &[&Pattern]) -> Node {
    let any_star = Node::Repeat {
        node: Box::new(Node::Class(ClassSet::any())),
        min: 0,
        max: None,
    };
    Node::Concat(vec![
        any_star.clone(),
        Node::Alt(patterns.iter().map(|p| p.root.clone()).collect()),
        any_star,
    ])
}

fn log_sum_exp<I: Iterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn pick_log_weighted<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> usize {
    let m = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ws: Vec<f64> = log_weights.iter().map(|w| (w - m).exp()).collect();
    let total: f64 = ws.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in ws.iter().enumerate() {
        if *w > 0.0 {
            if x < *w {
                return i;
            }
            x -= w;
        }
    }
    ws.iter().rposition(|w| *w > 0.0).expect("no positive weight")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn text(p: &str) -> Pattern {
        Pattern::parse(p, PatternMode::Text).unwrap()
    }

    fn syms(s: &str) -> Vec<u32> {
        s.chars().map(|c| c as u32).collect()
    }

    fn matches(p: &str, s: &str) -> bool {
        Automaton::full_match(&text(p), 128).accepts(syms(s))
    }

    #[test]
    fn full_match_semantics() {
        assert!(matches("[0-9a-zA-Z]+", "ABC12"));
        assert!(!matches("[0-9a-zA-Z]+", "AB C"));
        assert!(!matches("[0-9a-zA-Z]+", ""));
        assert!(matches("INBOX|NOBOX", "NOBOX"));
        assert!(!matches("INBOX|NOBOX", "INBOXX"));
        assert!(matches("[!-~]+", "a*b"));
        assert!(matches("[ -~]*", ""));
        assert!(matches("a{2,3}", "aaa"));
        assert!(!matches("a{2,3}", "aaaa"));
        assert!(matches("(?:ab)?c", "c"));
        assert!(matches("\\(\\\\Seen\\)", "(\\Seen)"));
        assert!(matches("[^a]", "b"));
        assert!(!matches("[^a]", "a"));
        assert!(matches("\\d+", "042"));
    }

    #[test]
    fn substring_exclusion() {
        let ex = text(" |\\r\\n|\\*");
        let a = Automaton::containing_any(&[&ex], 128);
        assert!(a.accepts(syms("a b")));
        assert!(a.accepts(syms("x\r\ny")));
        assert!(a.accepts(syms("*")));
        assert!(!a.accepts(syms("abc\r")));
    }

    #[test]
    fn bit_patterns() {
        let p = Pattern::parse("\\0*\\1", PatternMode::Bits).unwrap();
        let a = Automaton::full_match(&p, 2);
        assert!(a.accepts([0, 0, 0, 1]));
        assert!(a.accepts([1]));
        assert!(!a.accepts([0, 1, 0]));
        assert!(!a.accepts([]));
        assert!(Pattern::parse("a", PatternMode::Bits).is_err());
    }

    #[test]
    fn parse_errors() {
        for bad in ["(a", "a)", "[a", "*a", "a{3,2}", "\\q"] {
            assert!(Pattern::parse(bad, PatternMode::Text).is_err(), "{bad}");
        }
    }

    #[test]
    fn sampling_respects_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = text("[!-~]+").capped(8);
        let ex = text(" |\\r\\n|\\*");
        let a = Automaton::constrained(Some(&p), &[&ex], 128);
        let check = Automaton::full_match(&text("[!-~]+"), 128);
        let bad = Automaton::containing_any(&[&ex], 128);
        for _ in 0..500 {
            let s = a.sample(0, 20, &mut rng).unwrap();
            assert!((1..=8).contains(&s.len()));
            assert!(check.accepts(s.iter().copied()));
            assert!(!bad.accepts(s.iter().copied()));
        }
    }

    #[test]
    fn sampling_alternatives_and_emptiness() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Automaton::constrained(Some(&text("INBOX|NOBOX")), &[], 128);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..100 {
            let s: String = a.sample(0, 20, &mut rng).unwrap().into_iter().map(|c| char::from_u32(c).unwrap()).collect();
            seen.insert(s);
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec!["INBOX", "NOBOX"]);

        let contradiction = Automaton::constrained(Some(&text("a")), &[&text("a")], 128);
        assert!(contradiction.sample(0, 20, &mut rng).is_none());
        assert!(contradiction.feasible_lengths(0, 20).is_empty());
    }

    #[test]
    fn sampling_is_uniform_over_small_language() {
        // 8 strings of length 3 over {0,1}; each should appear about 1/8 of the time.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Automaton::constrained(None, &[], 2);
        let mut counts = [0usize; 8];
        for _ in 0..8000 {
            let s = a.sample(3, 3, &mut rng).unwrap();
            counts[(s[0] * 4 + s[1] * 2 + s[2]) as usize] += 1;
        }
        for c in counts {
            assert!((800..1200).contains(&c), "{counts:?}");
        }
    }
}
