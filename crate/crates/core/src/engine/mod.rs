//! The traversal test engine.
//!
//! The engine keeps the set `S` of model states the implementation may be
//! in. It first listens for a message; if one arrives it must be an output
//! enabled in `S`. On silence it sends a generated message of a type the
//! implementation can accept. After each step `S` becomes the tau-closed
//! image under the step's label, and an empty `S` ends the run.

pub mod animate;
pub mod coverage;
pub mod report;
pub mod strategy;

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::{Channel, ChannelError, Recv};
use crate::codec::{decode_message, encode_message, DecodeError, DecodeOutcome, EncodeError};
use crate::generator::{GenConfig, GenError, Generator};
use crate::lts::{Iolts, Label, StateSet};
use crate::spec::ResolvedSpec;
use crate::values::RecordValue;

pub use coverage::{record_coverage, CoverageTable, Goals};
pub use report::ReportFormat;
pub use strategy::{PeerStrategy, PreferStrategy, RandomStrategy, Strategy};

#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Steps after which a conforming run ends with Pass.
    pub max_steps: usize,
    pub receive_timeout: Duration,
    /// Wait used instead of `receive_timeout` while the engine has
    /// something it may send.
    pub quiet_poll: Duration,
    /// Silent waits in a row, with nothing to send, before giving up.
    pub max_consecutive_timeouts: usize,
    pub seed: u64,
    pub generator: GenConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_steps: 1000,
            receive_timeout: Duration::from_millis(2000),
            quiet_poll: Duration::from_millis(20),
            max_consecutive_timeouts: 5,
            seed: 0,
            generator: GenConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.receive_timeout = timeout;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Sent by the implementation.
    FromIut,
    /// Sent by the engine.
    ToIut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    /// `!M`, `?M` or `quit`, from the implementation's point of view.
    pub label: Label,
    pub bytes: Vec<u8>,
    pub value: Option<RecordValue>,
    /// The state set after the step.
    pub states: StateSet,
}

impl TraceEntry {
    pub fn direction(&self) -> Direction {
        match self.label {
            Label::Receive(_) => Direction::ToIut,
            _ => Direction::FromIut,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    InvalidFormat {
        diagnostics: Vec<(String, DecodeError)>,
        bytes: Vec<u8>,
    },
    /// The last trace entry is the offending step.
    InvalidTrace { offending: Label },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Pass => "Pass",
            Verdict::InvalidFormat { .. } => "InvalidFormat",
            Verdict::InvalidTrace { .. } => "InvalidTrace",
            Verdict::Inconclusive { .. } => "Inconclusive",
        }
    }

    /// Process exit status for this verdict.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::InvalidFormat { .. } => 1,
            Verdict::InvalidTrace { .. } => 2,
            Verdict::Inconclusive { .. } => 3,
        }
    }
}

/// Exit status for a run that failed on the transport.
pub const CHANNEL_ERROR_EXIT: i32 = 4;

#[derive(Debug, Clone)]
pub struct TestReport {
    pub actor: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub trace: Vec<TraceEntry>,
    pub coverage: CoverageTable,
    pub goals: Goals,
    pub lts: Iolts,
    /// Whether the implementation closed the connection.
    pub peer_quit: bool,
}

impl TestReport {
    pub fn steps(&self) -> usize {
        self.trace.len()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.trace.iter().map(|e| e.label.clone()).collect()
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown actor {0}")]
    UnknownActor(String),
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("cannot generate a message: {0}")]
    Generate(#[from] GenError),
    #[error("cannot encode a generated message: {0}")]
    Encode(#[from] EncodeError),
}

enum Event {
    Received { message: String, value: RecordValue, bytes: Vec<u8> },
    Quit,
    Silence,
    Malformed { diagnostics: Vec<(String, DecodeError)>, bytes: Vec<u8> },
}

enum Classified {
    Message(String, RecordValue, usize),
    Incomplete,
    Invalid(Vec<(String, DecodeError)>),
}

/// Decodes against the outputs enabled in `states`; bytes that only parse
/// as some other type are still reported as that type.
fn classify(spec: &ResolvedSpec, lts: &Iolts, states: &StateSet, buf: &[u8], at_end: bool) -> Classified {
    let expected = lts.enabled_outputs(states);
    let candidates: Vec<&str> = expected.iter().map(String::as_str).collect();
    let mut diagnostics = Vec::new();
    if !candidates.is_empty() {
        match decode_message(spec, buf, &candidates, at_end) {
            DecodeOutcome::Classified {
                message,
                value,
                consumed,
                ..
            } => return Classified::Message(message, value, consumed),
            DecodeOutcome::NeedMoreBytes => return Classified::Incomplete,
            DecodeOutcome::InvalidFormat { diagnostics: d } => diagnostics = d,
        }
    }
    let others: Vec<&str> = spec
        .message_names()
        .into_iter()
        .filter(|m| !expected.contains(*m))
        .collect();
    match decode_message(spec, buf, &others, at_end) {
        DecodeOutcome::Classified {
            message,
            value,
            consumed,
            ..
        } => Classified::Message(message, value, consumed),
        DecodeOutcome::NeedMoreBytes => Classified::Incomplete,
        DecodeOutcome::InvalidFormat { diagnostics: d } => {
            if diagnostics.is_empty() {
                diagnostics = d;
            }
            Classified::Invalid(diagnostics)
        }
    }
}

struct Receiver<'a> {
    spec: &'a ResolvedSpec,
    lts: &'a Iolts,
    buf: Vec<u8>,
}

impl Receiver<'_> {
    fn take(&mut self, n: usize) -> Vec<u8> {
        self.buf.drain(..n).collect()
    }

    fn decide(&mut self, states: &StateSet, at_end: bool) -> Option<Event> {
        match classify(self.spec, self.lts, states, &self.buf, at_end) {
            Classified::Message(message, value, consumed) => Some(Event::Received {
                message,
                value,
                bytes: self.take(consumed),
            }),
            Classified::Incomplete => None,
            Classified::Invalid(diagnostics) => Some(Event::Malformed {
                diagnostics,
                bytes: std::mem::take(&mut self.buf),
            }),
        }
    }

    /// `first` bounds the wait for a new message, `timeout` the waits for
    /// the rest of a partial one.
    fn next(
        &mut self,
        ch: &mut dyn Channel,
        states: &StateSet,
        first: Duration,
        timeout: Duration,
        patience: usize,
    ) -> Result<Event, ChannelError> {
        let mut waited = 0;
        loop {
            if !self.buf.is_empty() {
                if let Some(ev) = self.decide(states, false) {
                    return Ok(ev);
                }
            }
            let wait = if self.buf.is_empty() { first } else { timeout };
            match ch.recv(wait)? {
                Recv::Bytes(b) => self.buf.extend_from_slice(&b),
                Recv::TimeOut if self.buf.is_empty() => return Ok(Event::Silence),
                Recv::TimeOut => {
                    waited += 1;
                    if waited >= patience {
                        return Ok(self.decide(states, true).expect("complete input decides"));
                    }
                }
                Recv::PeerClosed if self.buf.is_empty() => return Ok(Event::Quit),
                Recv::PeerClosed => return Ok(self.decide(states, true).expect("complete input decides")),
            }
        }
    }
}

/// Tests the implementation behind `ch` against `actor`.
pub fn run_test(
    spec: &ResolvedSpec,
    actor: &str,
    ch: &mut dyn Channel,
    cfg: &EngineConfig,
    strategy: &mut dyn Strategy,
) -> Result<TestReport, EngineError> {
    if cfg.max_steps == 0 {
        return Err(EngineError::InvalidConfig("max_steps must be at least 1"));
    }
    if cfg.receive_timeout.is_zero() {
        return Err(EngineError::InvalidConfig("receive_timeout must be positive"));
    }
    let lts = &spec
        .actor(actor)
        .ok_or_else(|| EngineError::UnknownActor(actor.to_string()))?
        .lts;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut generator = Generator::new(
        spec,
        GenConfig {
            seed: cfg.seed ^ 0x005e_ed0f_9e4e_7a70,
            ..cfg.generator.clone()
        },
    );
    let mut report = TestReport {
        actor: actor.to_string(),
        seed: cfg.seed,
        verdict: Verdict::Pass,
        trace: Vec::new(),
        coverage: CoverageTable::new(lts),
        goals: coverage::goals(spec, lts),
        lts: lts.clone(),
        peer_quit: false,
    };
    let mut states = lts.tau_closure(&StateSet::singleton(lts.initial()));
    let mut rx = Receiver {
        spec,
        lts,
        buf: Vec::new(),
    };
    let mut idle = 0;
    while report.trace.len() < cfg.max_steps {
        let wait = if !strategy.permitted(lts.enabled_inputs(&states)).is_empty() {
            cfg.quiet_poll.min(cfg.receive_timeout)
        } else {
            cfg.receive_timeout
        };
        let event = rx.next(ch, &states, wait, cfg.receive_timeout, cfg.max_consecutive_timeouts.max(1))?;
        let (label, bytes, value) = match event {
            Event::Malformed { diagnostics, bytes } => {
                report.verdict = Verdict::InvalidFormat { diagnostics, bytes };
                return Ok(report);
            }
            Event::Received { message, value, bytes } => (Label::Send(message), bytes, Some(value)),
            Event::Quit => (Label::Quit, Vec::new(), None),
            Event::Silence => {
                let enabled = strategy.permitted(lts.enabled_inputs(&states));
                if enabled.is_empty() {
                    idle += 1;
                    if idle >= cfg.max_consecutive_timeouts {
                        report.verdict = Verdict::Inconclusive {
                            reason: format!("no message from the implementation after {idle} timeouts and nothing to send"),
                        };
                        return Ok(report);
                    }
                    continue;
                }
                let message = strategy.choose(&states, &enabled, &report.coverage, &mut rng);
                assert!(enabled.contains(&message), "strategy chose {message}, which is not enabled");
                let value = generator.generate_message(&message)?;
                let bytes = encode_message(spec, &message, &value)?;
                ch.send(&bytes)?;
                (Label::Receive(message), bytes, Some(value))
            }
        };
        idle = 0;
        strategy.observe(&label);
        if let (Some(v), Some(m)) = (&value, label.message()) {
            record_coverage(&mut report.coverage, m, v);
        }
        for s in states.iter() {
            for (i, e) in lts.outgoing(s) {
                if e.label == label {
                    report.coverage.hit_edge(i);
                }
            }
        }
        states = lts.tau_closure(&lts.successors(&states, &label));
        let quit = label == Label::Quit;
        report.trace.push(TraceEntry {
            label: label.clone(),
            bytes,
            value,
            states: states.clone(),
        });
        if states.is_empty() {
            report.verdict = Verdict::InvalidTrace { offending: label };
            return Ok(report);
        }
        if quit {
            report.peer_quit = true;
            return Ok(report);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    /// Replays canned receive results and records what the engine sends.
    struct Scripted {
        incoming: VecDeque<Recv>,
        sent: Vec<Vec<u8>>,
    }

    impl Channel for Scripted {
        fn send(&mut self, bytes: &[u8]) -> Result<(), ChannelError> {
            self.sent.push(bytes.to_vec());
            Ok(())
        }
        fn recv(&mut self, _: Duration) -> Result<Recv, ChannelError> {
            Ok(self.incoming.pop_front().unwrap_or(Recv::TimeOut))
        }
        fn close(&mut self) {}
    }

    fn scripted(incoming: Vec<Recv>) -> Scripted {
        Scripted {
            incoming: incoming.into(),
            sent: Vec::new(),
        }
    }

    fn cfg(steps: usize) -> EngineConfig {
        EngineConfig::default().with_steps(steps).with_timeout(Duration::from_millis(1))
    }

    #[test]
    fn silent_client_is_inconclusive() {
        let spec = crate::specs::myp();
        let mut ch = scripted(vec![]);
        let r = run_test(&spec, "Client", &mut ch, &cfg(10), &mut RandomStrategy).unwrap();
        assert_eq!(r.verdict.name(), "Inconclusive");
        assert!(r.trace.is_empty());
        assert_eq!(r.goals.edge_ratio(&r.coverage).covered, 0);
    }

    #[test]
    fn server_gets_only_enabled_messages() {
        let spec = crate::specs::myp();
        let mut ch = scripted(vec![]);
        let r = run_test(&spec, "Server", &mut ch, &cfg(1), &mut RandomStrategy).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.trace.len(), 1);
        assert!(matches!(&r.trace[0].label, Label::Receive(m) if m == "Ask" || m == "Done"));
        assert_eq!(ch.sent.len(), 1);
    }

    #[test]
    fn unexpected_output_is_an_invalid_trace() {
        let spec = crate::specs::myp();
        // Data before any Ask; the strategy cannot get a word in.
        let data = vec![0x00, 0, 0, 0, 0, 0x00];
        let mut ch = scripted(vec![Recv::Bytes(data)]);
        let r = run_test(&spec, "Server", &mut ch, &cfg(5), &mut RandomStrategy).unwrap();
        assert_eq!(
            r.verdict,
            Verdict::InvalidTrace {
                offending: Label::Send("Data".into())
            }
        );
        assert!(r.trace.last().unwrap().states.is_empty());
    }

    #[test]
    fn garbage_is_an_invalid_format() {
        let spec = crate::specs::myp();
        let mut ch = scripted(vec![Recv::Bytes(vec![0x41])]);
        let r = run_test(&spec, "Server", &mut ch, &cfg(5), &mut RandomStrategy).unwrap();
        match r.verdict {
            Verdict::InvalidFormat { bytes, diagnostics } => {
                assert_eq!(bytes, vec![0x41]);
                assert!(!diagnostics.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_messages_are_reassembled() {
        let spec = crate::specs::myp();
        let mut prefer = PreferStrategy {
            preferred: vec!["Ask".into()],
        };
        let mut ch = scripted(vec![
            Recv::TimeOut,
            Recv::Bytes(vec![0x00, 0, 0]),
            Recv::TimeOut,
            Recv::Bytes(vec![0, 0, 0x00]),
        ]);
        let r = run_test(&spec, "Server", &mut ch, &cfg(2), &mut prefer).unwrap();
        let labels: Vec<String> = r.labels().iter().map(|l| l.to_string()).collect();
        assert_eq!(labels, ["?Ask", "!Data"]);
        assert_eq!(r.trace[1].bytes, vec![0, 0, 0, 0, 0, 0]);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn permitted_quit_ends_the_run() {
        let spec = crate::specs::myp();
        let mut ch = scripted(vec![Recv::PeerClosed]);
        let r = run_test(&spec, "Client", &mut ch, &cfg(10), &mut RandomStrategy).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.peer_quit);
        assert_eq!(r.labels(), [Label::Quit]);
    }

    #[test]
    fn forbidden_quit_is_an_invalid_trace() {
        let spec = crate::specs::myp();
        let mut ch = scripted(vec![Recv::PeerClosed]);
        let r = run_test(&spec, "Server", &mut ch, &cfg(10), &mut RandomStrategy).unwrap();
        assert_eq!(r.verdict, Verdict::InvalidTrace { offending: Label::Quit });
    }

    #[test]
    fn bad_config_is_rejected() {
        let spec = crate::specs::myp();
        let mut ch = scripted(vec![]);
        assert!(matches!(
            run_test(&spec, "Server", &mut ch, &cfg(0), &mut RandomStrategy),
            Err(EngineError::InvalidConfig(_))
        ));
        assert!(matches!(
            run_test(&spec, "Nobody", &mut ch, &cfg(1), &mut RandomStrategy),
            Err(EngineError::UnknownActor(_))
        ));
    }
}
