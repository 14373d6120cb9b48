//! Reference implementations to test against.

pub mod imap;
pub mod myp;

pub use imap::{run_mini_imap, ImapOptions, Transcript};
pub use myp::{run_myp_client, run_myp_server, ServerBehavior};
