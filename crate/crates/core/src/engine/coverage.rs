use std::collections::{BTreeMap, BTreeSet};

use crate::lts::{Iolts, Label};
use crate::spec::{ResolvedSpec, TypeInstance, TypeKind};
use crate::values::{RecordValue, Value};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FieldHits {
    pub present: u64,
    pub absent: u64,
}

/// Hit counts gathered during a run. Field paths are keyed by message type;
/// list elements contribute to `path[]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageTable {
    pub edges: Vec<u64>,
    pub fields: BTreeMap<(String, String), FieldHits>,
    pub enums: BTreeMap<(String, String), u64>,
}

impl CoverageTable {
    pub fn new(lts: &Iolts) -> Self {
        CoverageTable {
            edges: vec![0; lts.edge_count()],
            ..Default::default()
        }
    }

    pub fn hit_edge(&mut self, index: usize) {
        self.edges[index] += 1;
    }

    pub fn field(&self, message: &str, path: &str) -> FieldHits {
        self.fields
            .get(&(message.to_string(), path.to_string()))
            .copied()
            .unwrap_or_default()
    }

    pub fn enum_hits(&self, enum_name: &str, constant: &str) -> u64 {
        self.enums
            .get(&(enum_name.to_string(), constant.to_string()))
            .copied()
            .unwrap_or(0)
    }
}

/// Counts every field occurrence and enum constant in `v`.
pub fn record_coverage(table: &mut CoverageTable, message: &str, v: &RecordValue) {
    walk_record(table, message, "", v);
}

fn walk_record(table: &mut CoverageTable, message: &str, prefix: &str, r: &RecordValue) {
    for (name, v) in &r.fields {
        let path = if prefix.is_empty() {
            name.clone()
        } else {
            format!("{prefix}.{name}")
        };
        walk_value(table, message, path, v);
    }
}

fn walk_value(table: &mut CoverageTable, message: &str, path: String, v: &Value) {
    let hits = table.fields.entry((message.to_string(), path.clone())).or_default();
    if *v == Value::Absent {
        hits.absent += 1;
        return;
    }
    hits.present += 1;
    match v {
        Value::Record(r) => walk_record(table, message, &path, r),
        Value::List(items) => {
            let elem = format!("{path}[]");
            for item in items {
                walk_value(table, message, elem.clone(), item);
            }
        }
        Value::Enum(e) => *table.enums.entry((e.enum_name.clone(), e.constant.clone())).or_default() += 1,
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum FieldGoal {
    Occurs,
    Present,
    Absent,
}

impl FieldGoal {
    pub fn name(&self) -> &'static str {
        match self {
            FieldGoal::Occurs => "occurs",
            FieldGoal::Present => "present",
            FieldGoal::Absent => "absent",
        }
    }
}

/// The coverage goals of an actor: its non-tau edges, the fields of the
/// message types on its edges, and the constants of the enums those
/// fields use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goals {
    pub edges: Vec<usize>,
    pub fields: Vec<(String, String, FieldGoal)>,
    pub enums: Vec<(String, String)>,
}

pub fn goals(spec: &ResolvedSpec, lts: &Iolts) -> Goals {
    let edges = (0..lts.edge_count()).filter(|&i| lts.edge(i).label != Label::Tau).collect();
    let mut seen = BTreeSet::new();
    let mut messages = Vec::new();
    for e in lts.edges() {
        if let Some(m) = e.label.message() {
            if seen.insert(m.to_string()) {
                messages.push(m.to_string());
            }
        }
    }
    messages.sort_by_key(|m| spec.message_rank(m));
    let mut fields = Vec::new();
    let mut enum_names = Vec::new();
    for m in &messages {
        if let Some(def) = spec.message(m) {
            for f in &def.fields {
                type_goals(spec, m, f.name.clone(), &f.ty, &mut fields, &mut enum_names);
            }
        }
    }
    let mut enums = Vec::new();
    let mut seen_enums = BTreeSet::new();
    for name in enum_names {
        if seen_enums.insert(name.clone()) {
            if let Some(def) = spec.enum_def(&name) {
                enums.extend(def.constants.iter().map(|(c, _)| (name.clone(), c.clone())));
            }
        }
    }
    Goals { edges, fields, enums }
}

fn type_goals(
    spec: &ResolvedSpec,
    message: &str,
    path: String,
    t: &TypeInstance,
    out: &mut Vec<(String, String, FieldGoal)>,
    enums: &mut Vec<String>,
) {
    match &t.kind {
        TypeKind::Optional { subject, .. } => {
            out.push((message.to_string(), path.clone(), FieldGoal::Present));
            out.push((message.to_string(), path.clone(), FieldGoal::Absent));
            nested_goals(spec, message, path, subject, out, enums);
        }
        _ => {
            out.push((message.to_string(), path.clone(), FieldGoal::Occurs));
            nested_goals(spec, message, path, t, out, enums);
        }
    }
}

fn nested_goals(
    spec: &ResolvedSpec,
    message: &str,
    path: String,
    t: &TypeInstance,
    out: &mut Vec<(String, String, FieldGoal)>,
    enums: &mut Vec<String>,
) {
    match &t.kind {
        TypeKind::Record { record, .. } => {
            let def = spec.record(record).expect("resolved record");
            for f in &def.fields {
                type_goals(spec, message, format!("{path}.{}", f.name), &f.ty, out, enums);
            }
        }
        TypeKind::List { elem, .. } => type_goals(spec, message, format!("{path}[]"), elem, out, enums),
        TypeKind::Enum { name, .. } => enums.push(name.clone()),
        TypeKind::Optional { subject, .. } => nested_goals(spec, message, path, subject, out, enums),
        _ => {}
    }
}

/// Covered and total goal counts in one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub covered: usize,
    pub total: usize,
}

impl Ratio {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.covered as f64 / self.total as f64
        }
    }

    pub fn is_complete(&self) -> bool {
        self.covered == self.total
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{} ({:.1}%)", self.covered, self.total, self.percent())
    }
}

impl Goals {
    pub fn edge_ratio(&self, t: &CoverageTable) -> Ratio {
        Ratio {
            covered: self.edges.iter().filter(|&&i| t.edges[i] > 0).count(),
            total: self.edges.len(),
        }
    }

    pub fn field_ratio(&self, t: &CoverageTable) -> Ratio {
        Ratio {
            covered: self.fields.iter().filter(|(m, p, g)| field_hit(t, m, p, g) > 0).count(),
            total: self.fields.len(),
        }
    }

    pub fn enum_ratio(&self, t: &CoverageTable) -> Ratio {
        Ratio {
            covered: self.enums.iter().filter(|(e, c)| t.enum_hits(e, c) > 0).count(),
            total: self.enums.len(),
        }
    }
}

pub fn field_hit(t: &CoverageTable, message: &str, path: &str, goal: &FieldGoal) -> u64 {
    let h = t.field(message, path);
    match goal {
        FieldGoal::Occurs | FieldGoal::Present => h.present,
        FieldGoal::Absent => h.absent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstring::BitString;
    use crate::values::EnumValue;

    fn header(flag: i128) -> Value {
        Value::Record(RecordValue {
            name: "Header".into(),
            fields: vec![
                ("flag".into(), Value::Int(flag)),
                ("reserved".into(), Value::Bits(BitString::parse_bits("000000").unwrap())),
            ],
        })
    }

    #[test]
    fn absent_footer_and_list_elements_are_counted() {
        let spec = crate::specs::myp();
        let item = Value::Record(RecordValue {
            name: "DataItem".into(),
            fields: vec![
                ("n".into(), Value::Int(0)),
                ("data".into(), Value::Bits(BitString::new())),
                ("padding".into(), Value::Bits(BitString::parse_hex("00000001").unwrap())),
            ],
        });
        let data = RecordValue {
            name: "Data".into(),
            fields: vec![
                ("h".into(), header(0)),
                ("payload".into(), Value::List(vec![item.clone(), item])),
                ("hasfoot".into(), Value::Bool(false)),
                ("foot".into(), Value::Absent),
            ],
        };
        let lts = &spec.actor("Server").unwrap().lts;
        let mut t = CoverageTable::new(lts);
        record_coverage(&mut t, "Data", &data);
        assert_eq!(t.field("Data", "foot"), FieldHits { present: 0, absent: 1 });
        assert_eq!(t.field("Data", "hasfoot").present, 1);
        assert_eq!(t.field("Data", "payload").present, 1);
        assert_eq!(t.field("Data", "payload[].n").present, 2);
        assert_eq!(t.field("Data", "h.reserved").present, 1);
    }

    #[test]
    fn ask_covers_both_header_fields() {
        let spec = crate::specs::myp();
        let lts = &spec.actor("Server").unwrap().lts;
        let mut t = CoverageTable::new(lts);
        let ask = RecordValue {
            name: "Ask".into(),
            fields: vec![("h".into(), header(1))],
        };
        record_coverage(&mut t, "Ask", &ask);
        assert_eq!(t.field("Ask", "h.flag").present, 1);
        assert_eq!(t.field("Ask", "h.reserved").present, 1);
    }

    #[test]
    fn enums_are_counted_wherever_they_occur() {
        let lts = Iolts::new(&["S"], 0);
        let mut t = CoverageTable::new(&lts);
        let r = RecordValue {
            name: "OkResp".into(),
            fields: vec![(
                "resp".into(),
                Value::Record(RecordValue {
                    name: "StatusResponse".into(),
                    fields: vec![(
                        "_id".into(),
                        Value::Enum(EnumValue {
                            enum_name: "StatusResponseId".into(),
                            constant: "ok".into(),
                        }),
                    )],
                }),
            )],
        };
        record_coverage(&mut t, "OkResp", &r);
        assert_eq!(t.enum_hits("StatusResponseId", "ok"), 1);
        assert_eq!(t.enum_hits("StatusResponseId", "no"), 0);
    }

    #[test]
    fn myp_server_goals() {
        let spec = crate::specs::myp();
        let lts = &spec.actor("Server").unwrap().lts;
        let g = goals(&spec, lts);
        assert_eq!(g.edges.len(), 3);
        assert!(g.fields.contains(&("Data".into(), "foot".into(), FieldGoal::Absent)));
        assert!(g.fields.contains(&("Data".into(), "payload[].padding".into(), FieldGoal::Occurs)));
        assert!(g.enums.is_empty());
        let empty = CoverageTable::new(lts);
        assert_eq!(g.edge_ratio(&empty).covered, 0);
        assert_eq!(g.field_ratio(&empty).percent(), 0.0);
    }

    #[test]
    fn imap_goals_include_status_constants() {
        let spec = crate::specs::imap();
        let g = goals(&spec, &spec.actor("IMAPServer").unwrap().lts);
        assert!(g.enums.contains(&("StatusResponseId".into(), "bye".into())));
        assert!(g.enums.contains(&("FetchItem".into(), "envelope".into())));
    }
}
