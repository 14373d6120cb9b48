//! Input-output labelled transition systems and state-set arithmetic.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

pub type StateId = usize;

/// Transition labels, from the perspective of the actor the system models.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// `!M`: the actor sends a message of type M.
    Send(String),
    /// `?M`: the actor receives a message of type M.
    Receive(String),
    Tau,
    /// The actor ends the interaction by closing the connection.
    Quit,
}

impl Label {
    pub fn message(&self) -> Option<&str> {
        match self {
            Label::Send(m) | Label::Receive(m) => Some(m),
            _ => None,
        }
    }

    /// The same event seen from the peer.
    pub fn mirrored(&self) -> Label {
        match self {
            Label::Send(m) => Label::Receive(m.clone()),
            Label::Receive(m) => Label::Send(m.clone()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Send(m) => write!(f, "!{m}"),
            Label::Receive(m) => write!(f, "?{m}"),
            Label::Tau => f.write_str("tau"),
            Label::Quit => f.write_str("quit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: StateId,
    pub label: Label,
    pub target: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct StateInfo {
    name: String,
    named: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct StateSet(BTreeSet<StateId>);

impl StateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(s: StateId) -> Self {
        StateSet(BTreeSet::from([s]))
    }

    pub fn insert(&mut self, s: StateId) -> bool {
        self.0.insert(s)
    }

    pub fn contains(&self, s: StateId) -> bool {
        self.0.contains(&s)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        StateSet(self.0.union(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<StateId> for StateSet {
    fn from_iter<I: IntoIterator<Item = StateId>>(iter: I) -> Self {
        StateSet(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iolts {
    states: Vec<StateInfo>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<usize>>,
    initial: StateId,
    quit: StateId,
    by_name: HashMap<String, StateId>,
}

pub const QUIT_STATE: &str = "Quit";

impl Iolts {
    /// A system with the given named states and the shared terminal state `Quit`.
    pub fn new<S: AsRef<str>>(named: &[S], initial: usize) -> Iolts {
        let mut lts = Iolts {
            states: Vec::new(),
            edges: Vec::new(),
            outgoing: Vec::new(),
            initial,
            quit: 0,
            by_name: HashMap::new(),
        };
        for n in named {
            lts.push_state(n.as_ref().to_string(), true);
        }
        lts.quit = lts.push_state(QUIT_STATE.to_string(), false);
        lts
    }

    fn push_state(&mut self, name: String, named: bool) -> StateId {
        let id = self.states.len();
        self.by_name.insert(name.clone(), id);
        self.states.push(StateInfo { name, named });
        self.outgoing.push(Vec::new());
        id
    }

    /// Adds a fresh anonymous intermediate state.
    pub fn add_anonymous(&mut self) -> StateId {
        let k = self.states.iter().filter(|s| !s.named && s.name != QUIT_STATE).count() + 1;
        self.push_state(format!("u{k}"), false)
    }

    pub fn add_edge(&mut self, source: StateId, label: Label, target: StateId) {
        assert!(source != self.quit, "the terminal state has no outgoing edges");
        self.outgoing[source].push(self.edges.len());
        self.edges.push(Edge { source, label, target });
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn quit_state(&self) -> StateId {
        self.quit
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s].name
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.by_name.get(name).copied()
    }

    pub fn is_named(&self, s: StateId) -> bool {
        self.states[s].named
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn named_state_count(&self) -> usize {
        self.states.iter().filter(|s| s.named).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> &Edge {
        &self.edges[index]
    }

    /// Indices of edges leaving `s`.
    pub fn outgoing(&self, s: StateId) -> impl Iterator<Item = (usize, &Edge)> + '_ {
        self.outgoing[s].iter().map(move |&i| (i, &self.edges[i]))
    }

    pub fn tau_closure(&self, set: &StateSet) -> StateSet {
        let mut out = set.clone();
        let mut stack: Vec<StateId> = set.iter().collect();
        while let Some(s) = stack.pop() {
            for (_, e) in self.outgoing(s) {
                if e.label == Label::Tau && out.insert(e.target) {
                    stack.push(e.target);
                }
            }
        }
        out
    }

    /// One-step image of `set` under `label`, without tau closure.
    pub fn successors(&self, set: &StateSet, label: &Label) -> StateSet {
        set.iter()
            .flat_map(|s| self.outgoing(s))
            .filter(|(_, e)| e.label == *label)
            .map(|(_, e)| e.target)
            .collect()
    }

    /// Message types the actor can receive from some state in `set`.
    pub fn enabled_inputs(&self, set: &StateSet) -> BTreeSet<String> {
        self.enabled(set, |l| match l {
            Label::Receive(m) => Some(m),
            _ => None,
        })
    }

    /// Message types the actor can send from some state in `set`.
    pub fn enabled_outputs(&self, set: &StateSet) -> BTreeSet<String> {
        self.enabled(set, |l| match l {
            Label::Send(m) => Some(m),
            _ => None,
        })
    }

    fn enabled(&self, set: &StateSet, pick: impl Fn(&Label) -> Option<&String>) -> BTreeSet<String> {
        set.iter()
            .flat_map(|s| self.outgoing(s))
            .filter_map(|(_, e)| pick(&e.label).cloned())
            .collect()
    }

    pub fn can_quit(&self, set: &StateSet) -> bool {
        set.iter()
            .flat_map(|s| self.outgoing(s))
            .any(|(_, e)| e.label == Label::Quit)
    }

    /// The system of the peer: every send becomes a receive and vice versa.
    pub fn mirror(&self) -> Iolts {
        let mut m = self.clone();
        for e in &mut m.edges {
            e.label = e.label.mirrored();
        }
        m
    }

    /// Edge list in `state -label-> state` form.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self.states.iter().map(|s| s.name.as_str()).collect();
        out.push_str(&format!("initial {}\n", self.state_name(self.initial)));
        out.push_str(&format!("states {}\n", names.join(" ")));
        for e in &self.edges {
            out.push_str(&format!(
                "{} -{}-> {}\n",
                self.state_name(e.source),
                e.label,
                self.state_name(e.target)
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain_with_cycle() -> Iolts {
        let mut l = Iolts::new(&["s", "t", "r"], 0);
        l.add_edge(0, Label::Tau, 1);
        l.add_edge(1, Label::Tau, 0);
        l.add_edge(1, Label::Send("M".into()), 2);
        l
    }

    #[test]
    fn closure_without_tau_is_identity() {
        let l = Iolts::new(&["s"], 0);
        assert_eq!(l.tau_closure(&StateSet::singleton(0)), StateSet::singleton(0));
    }

    #[test]
    fn closure_follows_tau_and_terminates_on_cycles() {
        let l = chain_with_cycle();
        let c = l.tau_closure(&StateSet::singleton(0));
        assert_eq!(c, [0, 1].into_iter().collect());
        assert_eq!(l.successors(&c, &Label::Send("M".into())), StateSet::singleton(2));
        assert!(l.successors(&StateSet::new(), &Label::Tau).is_empty());
    }

    #[test]
    fn mirror_swaps_directions() {
        let l = chain_with_cycle().mirror();
        let c = l.tau_closure(&StateSet::singleton(0));
        assert_eq!(l.enabled_inputs(&c), BTreeSet::from(["M".to_string()]));
        assert!(l.enabled_outputs(&c).is_empty());
    }

    #[test]
    fn dump_lists_edges() {
        let d = chain_with_cycle().dump();
        assert!(d.contains("t -!M-> r"));
        assert!(d.contains("states s t r Quit"));
    }

    fn arb_lts() -> impl Strategy<Value = Iolts> {
        let edge = (0usize..6, 0usize..4, 0usize..6);
        prop::collection::vec(edge, 0..14).prop_map(|edges| {
            let mut l = Iolts::new(&["a", "b", "c", "d", "e", "f"], 0);
            for (s, k, t) in edges {
                let label = match k {
                    0 => Label::Tau,
                    1 => Label::Send("X".into()),
                    2 => Label::Receive("Y".into()),
                    _ => Label::Send("Z".into()),
                };
                l.add_edge(s, label, t);
            }
            l
        })
    }

    fn arb_set() -> impl Strategy<Value = StateSet> {
        prop::collection::btree_set(0usize..6, 0..4).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn closure_is_extensive_idempotent_monotone(l in arb_lts(), a in arb_set(), b in arb_set()) {
            let ca = l.tau_closure(&a);
            prop_assert!(a.is_subset(&ca));
            prop_assert_eq!(l.tau_closure(&ca), ca.clone());
            let ab = a.union(&b);
            prop_assert!(ca.is_subset(&l.tau_closure(&ab)));
        }

        #[test]
        fn successors_distribute_over_union(l in arb_lts(), a in arb_set(), b in arb_set()) {
            for label in [Label::Tau, Label::Send("X".into()), Label::Receive("Y".into())] {
                let lhs = l.successors(&a.union(&b), &label);
                let rhs = l.successors(&a, &label).union(&l.successors(&b, &label));
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
