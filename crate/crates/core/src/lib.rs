//! Executable protocol specifications: a message language with wire codecs,
//! actor models as input/output transition systems, random message
//! generation, and a test engine that drives an implementation over a byte
//! channel.

pub mod bitstring;
pub mod channel;
pub mod codec;
pub mod engine;
pub mod generator;
pub mod iut;
pub mod lang;
pub mod lts;
pub mod pattern;
pub mod spec;
pub mod values;

/// The bundled example specifications.
pub mod specs {
    use crate::spec::ResolvedSpec;

    pub const MYP: &str = include_str!("../specs/myp.spec");
    pub const IMAP: &str = include_str!("../specs/imap.spec");

    pub fn myp() -> ResolvedSpec {
        crate::lang::load_spec(MYP).expect("bundled MyP spec resolves")
    }

    pub fn imap() -> ResolvedSpec {
        crate::lang::load_spec(IMAP).expect("bundled IMAP spec resolves")
    }
}

#[cfg(test)]
mod tests {
    use crate::codec::{decode_message, encode_message, DecodeOutcome};
    use crate::generator::{GenConfig, Generator};
    use crate::specs;

    #[test]
    fn imap_model_size() {
        let spec = specs::imap();
        let server = &spec.actor("IMAPServer").unwrap().lts;
        assert_eq!(server.named_state_count(), 7);
        println!("{}", server.dump());
        println!("edges {} states {}", server.edge_count(), server.state_count());
    }

    #[test]
    fn imap_round_trip() {
        let spec = specs::imap();
        let mut g = Generator::new(&spec, GenConfig::default());
        for m in spec.message_names() {
            for _ in 0..20 {
                let v = g.generate_message(m).unwrap();
                let bytes = encode_message(&spec, m, &v).unwrap();
                match decode_message(&spec, &bytes, &[m], true) {
                    DecodeOutcome::Classified { value, consumed, .. } => {
                        assert_eq!(value, v);
                        assert_eq!(consumed, bytes.len());
                    }
                    other => panic!("{m} {:?} {other:?}", String::from_utf8_lossy(&bytes)),
                }
            }
        }
        let _ = specs::myp();
    }
}
