use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use protospec::bitstring::BitString;
use protospec::channel::{accept, connect_tcp, listen, Channel, TcpChannel};
use protospec::codec::{decode_all, encode_message};
use protospec::engine::animate::selfplay;
use protospec::engine::report::render;
use protospec::engine::{run_test, EngineConfig, EngineError, RandomStrategy, ReportFormat, TestReport, CHANNEL_ERROR_EXIT};
use protospec::generator::{GenConfig, Generator};
use protospec::iut::{run_mini_imap, run_myp_client, run_myp_server, ImapOptions, ServerBehavior};
use protospec::lang::load_spec;
use protospec::spec::ResolvedSpec;
use protospec::values::parse_literal;

/// Exit status when a test cannot start (bad spec, unknown actor, ...).
const SETUP_ERROR_EXIT: u8 = 5;

#[derive(Parser)]
#[command(name = "protospec", version, about = "Protocol specifications: check, generate, decode and test")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and resolve a spec and print a summary.
    Check { spec: PathBuf },
    /// Generate random messages as hex.
    Gen {
        spec: PathBuf,
        message: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Encode a message; fields missing from the literal are generated.
    Encode {
        spec: PathBuf,
        message: String,
        /// Value literal such as `Data { hasfoot=false payload=[] }`.
        value: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decode hex bytes into one or more messages.
    Decode {
        spec: PathBuf,
        hex: String,
        /// Comma-separated candidate message types; all by default.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Print the compiled transition system of an actor.
    Graph { spec: PathBuf, actor: String },
    /// Test an implementation of an actor over TCP.
    Test {
        spec: PathBuf,
        actor: String,
        /// Address of the implementation to connect to.
        #[arg(long, required_unless_present = "listen", conflicts_with = "listen")]
        connect: Option<String>,
        /// Address to wait on for the implementation to connect.
        #[arg(long)]
        listen: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Test an actor against an in-process animation of its own model, with
    /// the engine restricted to what the peer actor may send.
    Selfplay {
        spec: PathBuf,
        actor: String,
        peer: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a bundled reference implementation.
    Serve {
        #[arg(value_enum)]
        iut: Iut,
        /// Address to listen on (servers).
        #[arg(long, default_value = "127.0.0.1:0")]
        listen: String,
        /// Address to connect to (the MyP client).
        #[arg(long)]
        connect: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Injected defect; mini-imap only.
        #[arg(long, value_enum)]
        bug: Option<Bug>,
        /// Serve a single connection, then exit.
        #[arg(long)]
        once: bool,
        /// Rounds before the MyP client quits.
        #[arg(long, default_value_t = 10)]
        rounds: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    #[arg(long, default_value_t = 2000)]
    timeout_ms: u64,
    #[arg(long, default_value_t = 5)]
    max_timeouts: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

impl RunArgs {
    fn config(&self) -> EngineConfig {
        let mut cfg = EngineConfig::default()
            .with_seed(self.seed)
            .with_steps(self.max_steps)
            .with_timeout(Duration::from_millis(self.timeout_ms));
        cfg.max_consecutive_timeouts = self.max_timeouts;
        cfg
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Iut {
    MypServer,
    MypFormatFault,
    MypTraceFault,
    MypClient,
    MiniImap,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bug {
    SelectAfterDeleteInbox,
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<ResolvedSpec, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    load_spec(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Check { spec } => match load(&spec) {
            Ok(s) => {
                print!("{}", s.dump());
                ExitCode::SUCCESS
            }
            Err(e) => fail(1, e),
        },
        Command::Gen {
            spec,
            message,
            seed,
            count,
        } => {
            let s = match load(&spec) {
                Ok(s) => s,
                Err(e) => return fail(1, e),
            };
            let mut g = Generator::new(&s, GenConfig { seed, ..GenConfig::default() });
            for _ in 0..count {
                let bytes = g
                    .generate_message(&message)
                    .map_err(|e| e.to_string())
                    .and_then(|v| encode_message(&s, &message, &v).map_err(|e| e.to_string()));
                match bytes {
                    Ok(b) => println!("{}", hex(&b)),
                    Err(e) => return fail(1, e),
                }
            }
            ExitCode::SUCCESS
        }
        Command::Encode {
            spec,
            message,
            value,
            seed,
        } => {
            let s = match load(&spec) {
                Ok(s) => s,
                Err(e) => return fail(1, e),
            };
            let template = match value.as_deref().map(parse_literal).transpose() {
                Ok(t) => t,
                Err(e) => return fail(1, e),
            };
            let mut g = Generator::new(&s, GenConfig { seed, ..GenConfig::default() });
            let bytes = g
                .generate_message_from(&message, template.as_ref())
                .map_err(|e| e.to_string())
                .and_then(|v| encode_message(&s, &message, &v).map_err(|e| e.to_string()));
            match bytes {
                Ok(b) => {
                    println!("{}", hex(&b));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(1, e),
            }
        }
        Command::Decode { spec, hex, expect } => {
            let s = match load(&spec) {
                Ok(s) => s,
                Err(e) => return fail(1, e),
            };
            let bytes = match BitString::parse_hex(hex.trim()).ok().and_then(|b| b.to_bytes().ok()) {
                Some(b) => b,
                None => return fail(1, format!("not an even number of hex digits: {hex}")),
            };
            let candidates: Vec<&str> = match &expect {
                Some(list) => list.split(',').map(str::trim).collect(),
                None => s.message_names(),
            };
            if let Some(bad) = candidates.iter().find(|m| s.message(m).is_none()) {
                return fail(1, format!("unknown message type {bad}"));
            }
            match decode_all(&s, &bytes, &candidates) {
                Ok(messages) => {
                    for (_, v) in messages {
                        println!("{v}");
                    }
                    ExitCode::SUCCESS
                }
                Err((at, diagnostics)) => {
                    eprintln!("error: no candidate decodes the bytes at offset {at}");
                    for (m, e) in diagnostics {
                        eprintln!("  {m}: {e}");
                    }
                    ExitCode::from(1)
                }
            }
        }
        Command::Graph { spec, actor } => {
            let s = match load(&spec) {
                Ok(s) => s,
                Err(e) => return fail(1, e),
            };
            match s.actor(&actor) {
                Some(a) => {
                    print!("{}", a.lts.dump());
                    ExitCode::SUCCESS
                }
                None => fail(1, format!("unknown actor {actor}")),
            }
        }
        Command::Test {
            spec,
            actor,
            connect,
            listen: listen_addr,
            run,
        } => {
            let s = match load(&spec) {
                Ok(s) => s,
                Err(e) => return fail(SETUP_ERROR_EXIT, e),
            };
            if s.actor(&actor).is_none() {
                return fail(SETUP_ERROR_EXIT, format!("unknown actor {actor}"));
            }
            let cfg = run.config();
            let ch = match (connect, listen_addr) {
                (Some(addr), _) => connect_tcp(&addr, Duration::from_secs(10)),
                (None, Some(addr)) => listen(&addr).and_then(|l| {
                    announce(&l);
                    accept(&l)
                }),
                (None, None) => unreachable!("clap requires one of the two"),
            };
            let mut ch = match ch {
                Ok(ch) => ch,
                Err(e) => return fail(CHANNEL_ERROR_EXIT as u8, e),
            };
            let result = run_test(&s, &actor, &mut ch, &cfg, &mut RandomStrategy);
            finish(result, run.format)
        }
        Command::Selfplay { spec, actor, peer, run } => {
            let s = match load(&spec) {
                Ok(s) => s,
                Err(e) => return fail(SETUP_ERROR_EXIT, e),
            };
            let result = selfplay(&s, &actor, &peer, &run.config(), &mut RandomStrategy).map(|(r, _)| r);
            finish(result, run.format)
        }
        Command::Serve {
            iut,
            listen: addr,
            connect,
            seed,
            bug,
            once,
            rounds,
        } => serve(iut, &addr, connect, seed, bug, once, rounds),
    }
}

fn finish(result: Result<TestReport, EngineError>, format: Format) -> ExitCode {
    match result {
        Ok(report) => {
            let format = match format {
                Format::Text => ReportFormat::Text,
                Format::Machine => ReportFormat::Machine,
            };
            print!("{}", render(&report, format));
            ExitCode::from(report.verdict.exit_code() as u8)
        }
        Err(e @ EngineError::Channel(_)) => fail(CHANNEL_ERROR_EXIT as u8, e),
        Err(e) => fail(SETUP_ERROR_EXIT, e),
    }
}

fn announce(l: &TcpListener) {
    if let Ok(a) = l.local_addr() {
        eprintln!("listening on {a}");
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn serve(iut: Iut, addr: &str, connect: Option<String>, seed: u64, bug: Option<Bug>, once: bool, rounds: usize) -> ExitCode {
    if bug.is_some() && iut != Iut::MiniImap {
        return fail(1, "--bug applies to mini-imap only");
    }
    if iut == Iut::MypClient {
        let Some(target) = connect else {
            return fail(1, "myp-client needs --connect");
        };
        return match connect_tcp(&target, Duration::from_secs(10)).and_then(|mut ch| run_myp_client(&mut ch, seed, rounds)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(CHANNEL_ERROR_EXIT as u8, e),
        };
    }
    let listener = match listen(addr) {
        Ok(l) => l,
        Err(e) => return fail(CHANNEL_ERROR_EXIT as u8, e),
    };
    announce(&listener);
    let opts = ImapOptions {
        select_after_delete_inbox_bug: bug.is_some(),
    };
    let run = move |mut ch: TcpChannel| {
        let result = match iut {
            Iut::MypServer => run_myp_server(&mut ch, ServerBehavior::Correct, seed),
            Iut::MypFormatFault => run_myp_server(&mut ch, ServerBehavior::FormatFault, seed),
            Iut::MypTraceFault => run_myp_server(&mut ch, ServerBehavior::TraceFault, seed),
            Iut::MiniImap => run_mini_imap(&mut ch, opts).map(|_| ()),
            Iut::MypClient => unreachable!("handled above"),
        };
        ch.close();
        if let Err(e) = result {
            eprintln!("connection ended: {e}");
        }
    };
    loop {
        match accept(&listener) {
            Ok(ch) if once => {
                run(ch);
                return ExitCode::SUCCESS;
            }
            Ok(ch) => {
                thread::spawn(move || run(ch));
            }
            Err(e) => return fail(CHANNEL_ERROR_EXIT as u8, e),
        }
    }
}
