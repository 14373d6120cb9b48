use std::thread;
use std::time::Duration;

use protospec::channel::{accept, connect_tcp, in_process_pair, listen, Channel};
use protospec::engine::{run_test, EngineConfig, RandomStrategy, TestReport, Verdict};
use protospec::iut::imap::{Line, UNREACHABLE_EDGES};
use protospec::iut::{run_mini_imap, run_myp_client, run_myp_server, ImapOptions, ServerBehavior, Transcript};
use protospec::spec::ResolvedSpec;
use protospec::specs;

fn cfg(seed: u64, steps: usize) -> EngineConfig {
    let mut c = EngineConfig::default()
        .with_seed(seed)
        .with_steps(steps)
        .with_timeout(Duration::from_millis(1));
    c.max_consecutive_timeouts = 5000;
    c
}

fn against_myp(behavior: ServerBehavior, seed: u64, steps: usize) -> TestReport {
    let spec = specs::myp();
    let (mut ours, mut theirs) = in_process_pair();
    let iut = thread::spawn(move || run_myp_server(&mut theirs, behavior, seed));
    let r = run_test(&spec, "Server", &mut ours, &cfg(seed, steps), &mut RandomStrategy).unwrap();
    ours.close();
    drop(ours);
    iut.join().unwrap().unwrap();
    r
}

fn against_imap(spec: &ResolvedSpec, opts: ImapOptions, seed: u64, steps: usize) -> (TestReport, Transcript) {
    let (mut ours, mut theirs) = in_process_pair();
    let iut = thread::spawn(move || run_mini_imap(&mut theirs, opts));
    let r = run_test(spec, "IMAPServer", &mut ours, &cfg(seed, steps), &mut RandomStrategy).unwrap();
    drop(ours);
    (r, iut.join().unwrap().unwrap())
}

#[test]
fn correct_myp_server_passes_with_full_transition_coverage() {
    let r = against_myp(ServerBehavior::Correct, 1, 300);
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!(r.steps(), 300);
    assert!(r.goals.edge_ratio(&r.coverage).is_complete());
}

#[test]
fn format_fault_is_an_invalid_format() {
    let r = against_myp(ServerBehavior::FormatFault, 2, 200);
    assert_eq!(r.verdict.name(), "InvalidFormat");
    assert!(r.trace.iter().all(|e| e.label.to_string() != "!Data"));
}

#[test]
fn trace_fault_is_an_invalid_trace() {
    let r = against_myp(ServerBehavior::TraceFault, 3, 200);
    assert_eq!(r.verdict.name(), "InvalidTrace");
    assert!(r.trace.last().unwrap().states.is_empty());
}

#[test]
fn myp_client_passes_and_quits() {
    let spec = specs::myp();
    let listener = listen("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let client = thread::spawn(move || {
        let mut ch = connect_tcp(&addr, Duration::from_secs(5)).unwrap();
        run_myp_client(&mut ch, 4, 5)
    });
    let mut ch = accept(&listener).unwrap();
    let r = run_test(&spec, "Client", &mut ch, &cfg(4, 1000), &mut RandomStrategy).unwrap();
    client.join().unwrap().unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.peer_quit);
    assert_eq!(r.trace.last().unwrap().label.to_string(), "quit");
}

fn uncovered(r: &TestReport) -> Vec<String> {
    let lts = &r.lts;
    r.goals
        .edges
        .iter()
        .filter(|&&i| r.coverage.edges[i] == 0)
        .map(|&i| {
            let e = lts.edge(i);
            format!("{} -{}-> {}", lts.state_name(e.source), e.label, lts.state_name(e.target))
        })
        .collect()
}

// Edges out of NotAuthenticated can only be taken before the first
// successful login, so whether a run hits them depends on the seed.
const LOGIN_PREFIX_EDGES: &[&str] = &[
    "NotAuthenticated -?LoginCmd-> u2",
    "u2 -!NoResp-> NotAuthenticated",
    "NotAuthenticated -?NoopCmd-> u3",
    "u3 -!OkResp-> NotAuthenticated",
];

#[test]
fn mini_imap_leaves_only_known_edges_uncovered() {
    let spec = specs::imap();
    let (r, _) = against_imap(&spec, ImapOptions::default(), 1, 5000);
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!(uncovered(&r), UNREACHABLE_EDGES);
    for seed in [0, 8] {
        let (r, _) = against_imap(&spec, ImapOptions::default(), seed, 3000);
        assert_eq!(r.verdict, Verdict::Pass);
        for e in uncovered(&r) {
            assert!(UNREACHABLE_EDGES.contains(&e.as_str()) || LOGIN_PREFIX_EDGES.contains(&e.as_str()), "{e}");
        }
    }
}

#[test]
fn inbox_bug_goes_unnoticed() {
    let spec = specs::imap();
    let opts = ImapOptions {
        select_after_delete_inbox_bug: true,
    };
    let (r, transcript) = against_imap(&spec, opts, 5, 2000);
    assert_eq!(r.verdict, Verdict::Pass);
    let refused_delete = transcript
        .iter()
        .position(|(who, l)| *who == Line::Client && l.ends_with(" DELETE INBOX"))
        .expect("DELETE INBOX was tried");
    let refused_select = transcript[refused_delete..].windows(2).any(|w| {
        w[0].0 == Line::Client && w[0].1.ends_with(" SELECT INBOX") && w[1].1.contains(" NO ")
    });
    assert!(refused_select);
}

#[test]
fn greeting_is_an_untagged_ok() {
    let (mut ours, mut theirs) = in_process_pair();
    let iut = thread::spawn(move || run_mini_imap(&mut theirs, ImapOptions::default()));
    match ours.recv(Duration::from_secs(5)).unwrap() {
        protospec::channel::Recv::Bytes(b) => assert!(b.starts_with(b"* OK ")),
        other => panic!("{other:?}"),
    }
    drop(ours);
    iut.join().unwrap().unwrap();
}
