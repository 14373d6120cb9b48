//! Hand-written MyP peers. They build and parse bytes directly rather than
//! through the codec module.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{Channel, ChannelError, Recv};

pub const ASK: u8 = 0x40;
pub const DONE: u8 = 0xC0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServerBehavior {
    Correct,
    /// Every Data header carries reserved bits `000001`.
    FormatFault,
    /// Answers Done with a Data as well.
    TraceFault,
}

impl ServerBehavior {
    pub fn parse(name: &str) -> Option<ServerBehavior> {
        match name {
            "correct" => Some(ServerBehavior::Correct),
            "format-fault" => Some(ServerBehavior::FormatFault),
            "trace-fault" => Some(ServerBehavior::TraceFault),
            _ => None,
        }
    }
}

/// A random, well-formed Data message; `header` is its first byte.
pub fn data_bytes(rng: &mut ChaCha8Rng, header: u8) -> Vec<u8> {
    let mut out = vec![header];
    let count = rng.gen_range(0..=4u32);
    out.extend_from_slice(&count.to_be_bytes());
    for _ in 0..count {
        let n = rng.gen_range(0..=12u32);
        out.extend_from_slice(&n.to_be_bytes());
        out.extend((0..n).map(|_| rng.gen::<u8>()));
        let pad = 4 - n % 4;
        out.extend(std::iter::repeat_n(0u8, pad as usize - 1));
        out.push(1);
    }
    if rng.gen_bool(0.5) {
        out.push(0xFF);
        let len = rng.gen_range(0..=16);
        out.extend((0..len).map(|_| rng.gen_range(b' '..=b'~')));
        out.push(b'\n');
    } else {
        out.push(0x00);
    }
    out
}

/// Length of the complete Data message at the front of `buf`, if there is one.
pub fn data_len(buf: &[u8]) -> Option<usize> {
    let word = |at: usize| -> Option<usize> {
        let b = buf.get(at..at + 4)?;
        Some(u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize)
    };
    let mut at = 1;
    let count = word(at)?;
    at += 4;
    for _ in 0..count {
        let n = word(at)?;
        at += 4 + n + (4 - n % 4);
    }
    match *buf.get(at)? {
        0xFF => {
            let nl = buf[at + 1..].iter().position(|&b| b == b'\n')?;
            Some(at + 1 + nl + 1)
        }
        _ => Some(at + 1),
    }
}

const POLL: Duration = Duration::from_millis(50);

/// Serves one connection until the peer closes or sends something other
/// than Ask or Done.
pub fn run_myp_server(ch: &mut dyn Channel, behavior: ServerBehavior, seed: u64) -> Result<(), ChannelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let header = match behavior {
        ServerBehavior::FormatFault => 0x01,
        _ => 0x00,
    };
    loop {
        let bytes = match ch.recv(POLL)? {
            Recv::Bytes(b) => b,
            Recv::TimeOut => continue,
            Recv::PeerClosed => return Ok(()),
        };
        for b in bytes {
            let reply = match (b, behavior) {
                (ASK, _) | (DONE, ServerBehavior::TraceFault) => data_bytes(&mut rng, header),
                (DONE, _) => continue,
                _ => {
                    ch.close();
                    return Ok(());
                }
            };
            if ch.send(&reply).is_err() {
                return Ok(());
            }
        }
    }
}

/// Asks for Data a few times per round and quits after `rounds` rounds.
pub fn run_myp_client(ch: &mut dyn Channel, seed: u64, rounds: usize) -> Result<(), ChannelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = Vec::new();
    for _ in 0..rounds {
        ch.send(&[ASK])?;
        loop {
            while data_len(&buf).is_none() {
                match ch.recv(POLL)? {
                    Recv::Bytes(b) => buf.extend(b),
                    Recv::TimeOut => {}
                    Recv::PeerClosed => return Ok(()),
                }
            }
            let n = data_len(&buf).unwrap();
            buf.drain(..n);
            if rng.gen_bool(0.5) {
                ch.send(&[ASK])?;
            } else {
                ch.send(&[DONE])?;
                break;
            }
        }
    }
    ch.close();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{decode_message, DecodeOutcome};

    #[test]
    fn hand_built_data_decodes_with_the_spec() {
        let spec = crate::specs::myp();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let bytes = data_bytes(&mut rng, 0);
            assert_eq!(data_len(&bytes), Some(bytes.len()));
            assert_eq!(data_len(&bytes[..bytes.len() - 1]), None);
            match decode_message(&spec, &bytes, &["Data"], true) {
                DecodeOutcome::Classified { consumed, .. } => assert_eq!(consumed, bytes.len()),
                other => panic!("{bytes:02x?}: {other:?}"),
            }
        }
    }

    #[test]
    fn fault_header_is_rejected() {
        let spec = crate::specs::myp();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bytes = data_bytes(&mut rng, 0x01);
        assert!(matches!(
            decode_message(&spec, &bytes, &["Data"], true),
            DecodeOutcome::InvalidFormat { .. }
        ));
    }

    #[test]
    fn behavior_names() {
        assert_eq!(ServerBehavior::parse("trace-fault"), Some(ServerBehavior::TraceFault));
        assert_eq!(ServerBehavior::parse("other"), None);
    }
}
