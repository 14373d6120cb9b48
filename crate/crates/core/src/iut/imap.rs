//! A scripted IMAP-subset server with a tiny mail store.

use std::collections::BTreeSet;
use std::time::Duration;

use crate::channel::{Channel, ChannelError, Recv};

/// Edges of the bundled IMAP model that this server never takes: it never
/// greets with PREAUTH or BYE and sends no unsolicited status.
pub const UNREACHABLE_EDGES: &[&str] = &[
    "ServerGreeting -!PreAuthGreeting-> Authenticated",
    "ServerGreeting -!Bye-> u1",
    "u1 -quit-> Quit",
    "Authenticated -!UntaggedOk-> Authenticated",
];

pub const MESSAGE_COUNT: u32 = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ImapOptions {
    /// After a refused DELETE INBOX, refuse to select INBOX.
    pub select_after_delete_inbox_bug: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Line {
    Client,
    Server,
}

pub type Transcript = Vec<(Line, String)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Session {
    NotAuthenticated,
    Authenticated,
    Selected,
}

struct Server {
    opts: ImapOptions,
    session: Session,
    mailboxes: BTreeSet<String>,
    inbox_delete_refused: bool,
}

impl Server {
    fn new(opts: ImapOptions) -> Self {
        Server {
            opts,
            session: Session::NotAuthenticated,
            mailboxes: ["INBOX".to_string()].into(),
            inbox_delete_refused: false,
        }
    }

    fn handle(&mut self, line: &str) -> Vec<String> {
        let words: Vec<&str> = line.split(' ').collect();
        let tag = words[0];
        let ok = |what: &str| format!("{tag} OK {what} completed\r\n");
        let no = |why: &str| format!("{tag} NO {why}\r\n");
        let args = &words[2.min(words.len())..];
        let seq = |s: &str| s.parse::<u32>().ok().filter(|&n| (1..=MESSAGE_COUNT).contains(&n));
        let command = words.get(1).copied().unwrap_or("");
        match (self.session, command, args) {
            (_, "NOOP", []) => vec![ok("NOOP")],
            (Session::NotAuthenticated, "LOGIN", [user, pass]) => {
                if *user == "alice" && *pass == "secret" {
                    self.session = Session::Authenticated;
                    vec![ok("LOGIN")]
                } else {
                    vec![no("authentication failed")]
                }
            }
            (Session::Authenticated | Session::Selected, "SELECT" | "EXAMINE", [mailbox]) => {
                let broken = self.opts.select_after_delete_inbox_bug && self.inbox_delete_refused && *mailbox == "INBOX";
                if self.mailboxes.contains(*mailbox) && !broken {
                    self.session = Session::Selected;
                    vec![
                        format!("* {MESSAGE_COUNT} EXISTS \r\n"),
                        "* 0 RECENT \r\n".to_string(),
                        format!("{tag} OK [READ-WRITE] {command} completed\r\n"),
                    ]
                } else {
                    self.session = Session::Authenticated;
                    vec![no("no such mailbox")]
                }
            }
            (Session::Authenticated | Session::Selected, "CREATE", [mailbox]) => {
                if self.mailboxes.insert(mailbox.to_string()) {
                    vec![ok("CREATE")]
                } else {
                    vec![no("mailbox exists")]
                }
            }
            (Session::Authenticated | Session::Selected, "DELETE", [mailbox]) => {
                if *mailbox == "INBOX" {
                    self.inbox_delete_refused = true;
                    vec![no("cannot delete INBOX")]
                } else if self.mailboxes.remove(*mailbox) {
                    vec![ok("DELETE")]
                } else {
                    vec![no("no such mailbox")]
                }
            }
            (Session::Authenticated | Session::Selected, "RENAME", [from, to]) => {
                if *from != "INBOX" && self.mailboxes.contains(*from) && !self.mailboxes.contains(*to) {
                    self.mailboxes.remove(*from);
                    self.mailboxes.insert(to.to_string());
                    vec![ok("RENAME")]
                } else {
                    vec![no("cannot rename")]
                }
            }
            (Session::Selected, "FETCH", [n, item]) => match seq(n) {
                Some(n) => vec![format!("* {n} FETCH ({item} ...)\r\n"), ok("FETCH")],
                None => vec![no("no such message")],
            },
            (Session::Selected, "STORE", [n, _mode, flags]) => match seq(n) {
                Some(n) => vec![format!("* {n} FETCH (FLAGS {flags})\r\n"), ok("STORE")],
                None => vec![no("no such message")],
            },
            (Session::Selected, "COPY", [n, mailbox]) => {
                if seq(n).is_some() && self.mailboxes.contains(*mailbox) {
                    vec![ok("COPY")]
                } else {
                    vec![no("cannot copy")]
                }
            }
            (Session::Selected, "CLOSE", []) => {
                self.session = Session::Authenticated;
                vec![ok("CLOSE")]
            }
            _ => vec![format!("{tag} BAD unexpected command\r\n")],
        }
    }
}

const POLL: Duration = Duration::from_millis(50);

/// Serves one connection until the peer closes; returns the exchanged lines
/// without their terminators.
pub fn run_mini_imap(ch: &mut dyn Channel, opts: ImapOptions) -> Result<Transcript, ChannelError> {
    let mut server = Server::new(opts);
    let mut transcript = Vec::new();
    let greeting = "* OK IMAP subset ready\r\n";
    ch.send(greeting.as_bytes())?;
    transcript.push((Line::Server, greeting.trim_end().to_string()));
    let mut buf: Vec<u8> = Vec::new();
    loop {
        while let Some(end) = buf.windows(2).position(|w| w == b"\r\n") {
            let line = String::from_utf8_lossy(&buf[..end]).into_owned();
            buf.drain(..end + 2);
            transcript.push((Line::Client, line.clone()));
            for reply in server.handle(&line) {
                transcript.push((Line::Server, reply.trim_end_matches("\r\n").to_string()));
                if ch.send(reply.as_bytes()).is_err() {
                    return Ok(transcript);
                }
            }
        }
        match ch.recv(POLL)? {
            Recv::Bytes(b) => buf.extend(b),
            Recv::TimeOut => {}
            Recv::PeerClosed => return Ok(transcript),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(lines: &[&str], opts: ImapOptions) -> Vec<String> {
        let mut s = Server::new(opts);
        lines.iter().flat_map(|l| s.handle(l)).collect()
    }

    #[test]
    fn login_and_mailbox_rules() {
        let out = session(
            &[
                "a LOGIN bob secret",
                "b LOGIN alice secret",
                "c DELETE INBOX",
                "d CREATE ARCHIVE",
                "e CREATE ARCHIVE",
                "f RENAME ARCHIVE NOBOX",
                "g SELECT NOBOX",
                "h FETCH 4 FULL",
                "i FETCH 2 FLAGS",
            ],
            ImapOptions::default(),
        );
        assert!(out[0].starts_with("a NO "));
        assert!(out[1].starts_with("b OK "));
        assert!(out[2].starts_with("c NO "));
        assert!(out[3].starts_with("d OK "));
        assert!(out[4].starts_with("e NO "));
        assert!(out[5].starts_with("f OK "));
        assert_eq!(out[6], "* 3 EXISTS \r\n");
        assert!(out[9].starts_with("h NO "));
        assert_eq!(out[10], "* 2 FETCH (FLAGS ...)\r\n");
    }

    #[test]
    fn bug_flag_breaks_inbox_selection() {
        let lines = ["a LOGIN alice secret", "b DELETE INBOX", "c SELECT INBOX"];
        let fine = session(&lines, ImapOptions::default());
        assert!(fine[2].starts_with("* 3 EXISTS"));
        let buggy = session(
            &lines,
            ImapOptions {
                select_after_delete_inbox_bug: true,
            },
        );
        assert!(buggy[2].starts_with("c NO "));
    }
}
