use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::engine::coverage::CoverageTable;
use crate::lts::{Iolts, Label, StateSet};

/// Picks the next message type for the engine to send.
pub trait Strategy {
    /// `enabled` is never empty; the result must be a member of it.
    fn choose(
        &mut self,
        states: &StateSet,
        enabled: &BTreeSet<String>,
        coverage: &CoverageTable,
        rng: &mut ChaCha8Rng,
    ) -> String;

    /// Narrows the types the engine may send now; an empty result makes
    /// the engine keep listening.
    fn permitted(&self, enabled: BTreeSet<String>) -> BTreeSet<String> {
        enabled
    }

    /// Called after every step with its label.
    fn observe(&mut self, _label: &Label) {}
}

/// Uniform choice over the enabled message types.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomStrategy;

impl Strategy for RandomStrategy {
    fn choose(&mut self, _: &StateSet, enabled: &BTreeSet<String>, _: &CoverageTable, rng: &mut ChaCha8Rng) -> String {
        let i = rng.gen_range(0..enabled.len());
        enabled.iter().nth(i).expect("index in range").clone()
    }
}

/// Always the first enabled type that is in `preferred`, else uniform.
#[derive(Debug, Clone, Default)]
pub struct PreferStrategy {
    pub preferred: Vec<String>,
}

impl Strategy for PreferStrategy {
    fn choose(&mut self, s: &StateSet, enabled: &BTreeSet<String>, c: &CoverageTable, rng: &mut ChaCha8Rng) -> String {
        match self.preferred.iter().find(|m| enabled.contains(*m)) {
            Some(m) => m.clone(),
            None => RandomStrategy.choose(s, enabled, c, rng),
        }
    }
}

/// Sends only what a counterpart actor could send in its current states,
/// delegating the choice among those to `inner`.
pub struct PeerStrategy<'a> {
    peer: Iolts,
    states: StateSet,
    inner: &'a mut dyn Strategy,
}

impl<'a> PeerStrategy<'a> {
    pub fn new(peer: Iolts, inner: &'a mut dyn Strategy) -> Self {
        let states = peer.tau_closure(&StateSet::singleton(peer.initial()));
        PeerStrategy { peer, states, inner }
    }

    pub fn peer_states(&self) -> &StateSet {
        &self.states
    }
}

impl Strategy for PeerStrategy<'_> {
    fn choose(&mut self, s: &StateSet, enabled: &BTreeSet<String>, c: &CoverageTable, rng: &mut ChaCha8Rng) -> String {
        self.inner.choose(s, enabled, c, rng)
    }

    fn permitted(&self, enabled: BTreeSet<String>) -> BTreeSet<String> {
        let outputs = self.peer.enabled_outputs(&self.states);
        self.inner.permitted(enabled).intersection(&outputs).cloned().collect()
    }

    fn observe(&mut self, label: &Label) {
        self.inner.observe(label);
        if *label != Label::Quit {
            self.states = self.peer.tau_closure(&self.peer.successors(&self.states, &label.mirrored()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn singleton_is_forced() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = CoverageTable::default();
        for _ in 0..10 {
            assert_eq!(RandomStrategy.choose(&StateSet::new(), &set(&["Ask"]), &t, &mut rng), "Ask");
        }
    }

    #[test]
    fn two_way_choice_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let t = CoverageTable::default();
        let v = set(&["Ask", "Done"]);
        let asks = (0..1000)
            .filter(|_| RandomStrategy.choose(&StateSet::new(), &v, &t, &mut rng) == "Ask")
            .count();
        assert!((400..=600).contains(&asks), "{asks}");
    }

    #[test]
    fn same_seed_same_choices() {
        let v = set(&["A", "B", "C"]);
        let t = CoverageTable::default();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| RandomStrategy.choose(&StateSet::new(), &v, &t, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn peer_restricts_to_its_outputs() {
        let spec = crate::specs::myp();
        let server = spec.actor("Server").unwrap().lts.clone();
        let mut inner = RandomStrategy;
        let mut p = PeerStrategy::new(server, &mut inner);
        assert!(p.permitted(set(&["Data"])).is_empty());
        p.observe(&Label::Send("Ask".into()));
        assert_eq!(p.permitted(set(&["Data"])), set(&["Data"]));
        p.observe(&Label::Receive("Data".into()));
        assert!(p.permitted(set(&["Data"])).is_empty());
    }

    #[test]
    fn preference_falls_back_to_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = CoverageTable::default();
        let mut p = PreferStrategy {
            preferred: vec!["Ask".into()],
        };
        assert_eq!(p.choose(&StateSet::new(), &set(&["Ask", "Done"]), &t, &mut rng), "Ask");
        assert_eq!(p.choose(&StateSet::new(), &set(&["Done"]), &t, &mut rng), "Done");
    }
}
