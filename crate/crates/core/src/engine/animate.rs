//! Running a model as an implementation.

use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{in_process_pair, Channel, ChannelError, Recv};
use crate::codec::{decode_message, encode_message, DecodeOutcome};
use crate::engine::{run_test, EngineConfig, EngineError, PeerStrategy, Strategy, TestReport};
use crate::generator::{GenConfig, Generator};
use crate::lts::{Iolts, Label, StateSet};
use crate::spec::ResolvedSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnimationEnd {
    PeerClosed,
    /// The model took a quit edge and closed the connection.
    Quit,
    /// The peer did something the model does not allow.
    Diverged(String),
}

/// Plays `lts` over `ch`: sends whenever an output is enabled (or, where an
/// input is enabled as well, picks between sending and listening), and
/// follows whatever it receives.
pub fn animate(
    spec: &ResolvedSpec,
    lts: &Iolts,
    ch: &mut dyn Channel,
    seed: u64,
    poll: Duration,
) -> Result<AnimationEnd, ChannelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut generator = Generator::new(
        spec,
        GenConfig {
            seed: seed.rotate_left(17) ^ 0xa11ce,
            ..GenConfig::default()
        },
    );
    let mut states = lts.tau_closure(&StateSet::singleton(lts.initial()));
    let mut buf: Vec<u8> = Vec::new();
    loop {
        let mut outputs: Vec<Option<String>> = lts.enabled_outputs(&states).into_iter().map(Some).collect();
        if lts.can_quit(&states) {
            outputs.push(None);
        }
        let inputs = lts.enabled_inputs(&states);
        let listen_option = usize::from(!inputs.is_empty() || outputs.is_empty());
        let pick = if buf.is_empty() && !outputs.is_empty() {
            rng.gen_range(0..outputs.len() + listen_option)
        } else {
            outputs.len()
        };
        if pick < outputs.len() {
            match &outputs[pick] {
                None => {
                    ch.close();
                    return Ok(AnimationEnd::Quit);
                }
                Some(m) => {
                    let value = match generator.generate_message(m) {
                        Ok(v) => v,
                        Err(e) => return Ok(AnimationEnd::Diverged(e.to_string())),
                    };
                    let bytes = match encode_message(spec, m, &value) {
                        Ok(b) => b,
                        Err(e) => return Ok(AnimationEnd::Diverged(e.to_string())),
                    };
                    if ch.send(&bytes).is_err() {
                        return Ok(AnimationEnd::PeerClosed);
                    }
                    states = lts.tau_closure(&lts.successors(&states, &Label::Send(m.clone())));
                    continue;
                }
            }
        }
        if !buf.is_empty() && !inputs.is_empty() {
            let candidates: Vec<&str> = inputs.iter().map(String::as_str).collect();
            match decode_message(spec, &buf, &candidates, false) {
                DecodeOutcome::Classified { message, consumed, .. } => {
                    buf.drain(..consumed);
                    states = lts.tau_closure(&lts.successors(&states, &Label::Receive(message.clone())));
                    if states.is_empty() {
                        return Ok(AnimationEnd::Diverged(format!("unexpected {message}")));
                    }
                    continue;
                }
                DecodeOutcome::NeedMoreBytes => {}
                DecodeOutcome::InvalidFormat { .. } => {
                    return Ok(AnimationEnd::Diverged(format!("undecodable input {buf:02x?}")));
                }
            }
        } else if !buf.is_empty() {
            return Ok(AnimationEnd::Diverged("input where none is allowed".into()));
        }
        match ch.recv(poll)? {
            Recv::Bytes(b) => buf.extend_from_slice(&b),
            Recv::TimeOut => {}
            Recv::PeerClosed => return Ok(AnimationEnd::PeerClosed),
        }
    }
}

/// Tests `tested` against an in-process animation of its own model, with
/// the engine sending only what `peer` could send at each point.
pub fn selfplay(
    spec: &ResolvedSpec,
    tested: &str,
    peer: &str,
    cfg: &EngineConfig,
    strategy: &mut dyn Strategy,
) -> Result<(TestReport, AnimationEnd), EngineError> {
    let peer_lts = spec
        .actor(peer)
        .ok_or_else(|| EngineError::UnknownActor(peer.to_string()))?
        .lts
        .clone();
    let tested_lts = spec
        .actor(tested)
        .ok_or_else(|| EngineError::UnknownActor(tested.to_string()))?
        .lts
        .clone();
    let (mut ours, mut theirs) = in_process_pair();
    let iut_spec = spec.clone();
    let seed = cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let poll = cfg.receive_timeout;
    let handle = thread::spawn(move || animate(&iut_spec, &tested_lts, &mut theirs, seed, poll));
    let mut restricted = PeerStrategy::new(peer_lts, strategy);
    let report = run_test(spec, tested, &mut ours, cfg, &mut restricted);
    ours.close();
    drop(ours);
    let end = handle.join().expect("animation thread");
    let report = report?;
    Ok((report, end?))
}
