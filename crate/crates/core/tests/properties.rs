use std::sync::OnceLock;
use std::thread;
use std::time::Duration;

use proptest::prelude::*;

use protospec::bitstring::BitString;
use protospec::channel::in_process_pair;
use protospec::codec::{decode_message, decode_one, encode_message, DecodeOutcome};
use protospec::engine::{run_test, EngineConfig, RandomStrategy, TestReport, Verdict};
use protospec::generator::{GenConfig, Generator};
use protospec::iut::{run_mini_imap, run_myp_server, ImapOptions, ServerBehavior};
use protospec::lts::{Label, StateSet};
use protospec::spec::ResolvedSpec;
use protospec::specs;

fn myp() -> &'static ResolvedSpec {
    static SPEC: OnceLock<ResolvedSpec> = OnceLock::new();
    SPEC.get_or_init(specs::myp)
}

fn imap() -> &'static ResolvedSpec {
    static SPEC: OnceLock<ResolvedSpec> = OnceLock::new();
    SPEC.get_or_init(specs::imap)
}

fn any_message() -> impl Strategy<Value = (&'static ResolvedSpec, &'static str, u64)> {
    let names = |s: &'static ResolvedSpec| s.message_names().into_iter().map(move |n| (s, n)).collect::<Vec<_>>();
    let all: Vec<_> = names(myp()).into_iter().chain(names(imap())).collect();
    (proptest::sample::select(all), any::<u64>()).prop_map(|((s, n), seed)| (s, n, seed))
}

fn cfg(seed: u64, steps: usize) -> EngineConfig {
    let mut c = EngineConfig::default()
        .with_seed(seed)
        .with_steps(steps)
        .with_timeout(Duration::from_micros(250));
    c.max_consecutive_timeouts = 20_000;
    c
}

/// Every message the engine sent was receivable in the states it had
/// computed just before, and each S follows from the previous one.
fn check_trace(r: &TestReport) -> Result<(), TestCaseError> {
    let lts = &r.lts;
    let mut states = lts.tau_closure(&StateSet::singleton(lts.initial()));
    for (i, e) in r.trace.iter().enumerate() {
        if let Label::Receive(m) = &e.label {
            prop_assert!(lts.enabled_inputs(&states).contains(m), "step {i}: sent {m}");
        }
        let next = lts.tau_closure(&lts.successors(&states, &e.label));
        prop_assert_eq!(&next, &e.states, "step {}", i);
        states = next;
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decode_inverts_encode((spec, name, seed) in any_message()) {
        let mut g = Generator::new(spec, GenConfig { seed, ..GenConfig::default() });
        let v = g.generate_message(name).unwrap();
        let bytes = encode_message(spec, name, &v).unwrap();
        let (back, used) = decode_one(spec, &BitString::from_bytes(&bytes), name).unwrap();
        prop_assert_eq!(back, v);
        prop_assert_eq!(used, bytes.len());
    }

    #[test]
    fn generated_bytes_classify_as_their_type((spec, name, seed) in any_message()) {
        let mut g = Generator::new(spec, GenConfig { seed, ..GenConfig::default() });
        let bytes = encode_message(spec, name, &g.generate_message(name).unwrap()).unwrap();
        match decode_message(spec, &bytes, &[name], true) {
            DecodeOutcome::Classified { message, consumed, .. } => {
                prop_assert_eq!(message, name);
                prop_assert_eq!(consumed, bytes.len());
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn generation_is_a_function_of_the_seed((spec, name, seed) in any_message()) {
        let run = || {
            let mut g = Generator::new(spec, GenConfig { seed, ..GenConfig::default() });
            (0..3).map(|_| encode_message(spec, name, &g.generate_message(name).unwrap()).unwrap()).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn truncated_input_is_never_overread((spec, name, seed) in any_message(), cut in 1usize..8) {
        let mut g = Generator::new(spec, GenConfig { seed, ..GenConfig::default() });
        let bytes = encode_message(spec, name, &g.generate_message(name).unwrap()).unwrap();
        let keep = bytes.len().saturating_sub(cut);
        let names = spec.message_names();
        if let DecodeOutcome::Classified { consumed, .. } = decode_message(spec, &bytes[..keep], &names, false) {
            prop_assert!(consumed <= keep);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn engine_sends_only_enabled_inputs_to_myp(seed in any::<u64>(), steps in 1usize..80) {
        let (mut ours, mut theirs) = in_process_pair();
        let iut = thread::spawn(move || run_myp_server(&mut theirs, ServerBehavior::Correct, seed));
        let r = run_test(myp(), "Server", &mut ours, &cfg(seed, steps), &mut RandomStrategy).unwrap();
        drop(ours);
        iut.join().unwrap().unwrap();
        prop_assert_eq!(&r.verdict, &Verdict::Pass);
        prop_assert_eq!(r.steps(), steps);
        check_trace(&r)?;
    }

    #[test]
    fn engine_sends_only_enabled_inputs_to_imap(seed in any::<u64>(), steps in 1usize..150) {
        let (mut ours, mut theirs) = in_process_pair();
        let iut = thread::spawn(move || run_mini_imap(&mut theirs, ImapOptions::default()));
        let r = run_test(imap(), "IMAPServer", &mut ours, &cfg(seed, steps), &mut RandomStrategy).unwrap();
        drop(ours);
        iut.join().unwrap().unwrap();
        prop_assert_eq!(&r.verdict, &Verdict::Pass);
        check_trace(&r)?;
    }

    #[test]
    fn trace_fault_empties_the_state_set_only_at_the_end(seed in any::<u64>()) {
        let (mut ours, mut theirs) = in_process_pair();
        let iut = thread::spawn(move || run_myp_server(&mut theirs, ServerBehavior::TraceFault, seed));
        let r = run_test(myp(), "Server", &mut ours, &cfg(seed, 200), &mut RandomStrategy).unwrap();
        drop(ours);
        iut.join().unwrap().unwrap();
        let is_invalid_trace = matches!(r.verdict, Verdict::InvalidTrace { .. });
        prop_assert!(is_invalid_trace);
        prop_assert!(r.trace.last().unwrap().states.is_empty());
        prop_assert!(r.trace[..r.trace.len() - 1].iter().all(|e| !e.states.is_empty()));
    }
}
