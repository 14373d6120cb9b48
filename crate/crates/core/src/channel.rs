//! Ordered, reliable duplex byte transport.

use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recv {
    /// Whatever arrived; possibly part of a message, possibly several.
    Bytes(Vec<u8>),
    TimeOut,
    PeerClosed,
}

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("cannot connect to {addr}: {source}")]
    Connect { addr: String, source: io::Error },
    #[error("cannot listen on {addr}: {source}")]
    Listen { addr: String, source: io::Error },
    #[error("transport failure: {0}")]
    Io(#[from] io::Error),
    #[error("channel already closed")]
    Closed,
    #[error("peer has gone away")]
    PeerGone,
}

pub trait Channel: Send {
    fn send(&mut self, bytes: &[u8]) -> Result<(), ChannelError>;
    fn recv(&mut self, timeout: Duration) -> Result<Recv, ChannelError>;
    /// Closes the local end; the peer observes `PeerClosed`.
    fn close(&mut self);
}

/// One end of an in-process pair.
#[derive(Debug)]
pub struct MemChannel {
    tx: Option<Sender<Vec<u8>>>,
    rx: Receiver<Vec<u8>>,
}

/// Two cross-connected endpoints.
pub fn in_process_pair() -> (MemChannel, MemChannel) {
    let (a_tx, b_rx) = mpsc::channel();
    let (b_tx, a_rx) = mpsc::channel();
    (
        MemChannel { tx: Some(a_tx), rx: a_rx },
        MemChannel { tx: Some(b_tx), rx: b_rx },
    )
}

impl Channel for MemChannel {
    fn send(&mut self, bytes: &[u8]) -> Result<(), ChannelError> {
        let tx = self.tx.as_ref().ok_or(ChannelError::Closed)?;
        tx.send(bytes.to_vec()).map_err(|_| ChannelError::PeerGone)
    }

    fn recv(&mut self, timeout: Duration) -> Result<Recv, ChannelError> {
        let mut out = match self.rx.recv_timeout(timeout) {
            Ok(chunk) => chunk,
            Err(RecvTimeoutError::Timeout) => return Ok(Recv::TimeOut),
            Err(RecvTimeoutError::Disconnected) => return Ok(Recv::PeerClosed),
        };
        while let Ok(chunk) = self.rx.try_recv() {
            out.extend_from_slice(&chunk);
        }
        Ok(Recv::Bytes(out))
    }

    fn close(&mut self) {
        self.tx = None;
    }
}

#[derive(Debug)]
pub struct TcpChannel {
    stream: TcpStream,
    closed: bool,
}

impl TcpChannel {
    pub fn new(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        Ok(TcpChannel { stream, closed: false })
    }
}

impl Channel for TcpChannel {
    fn send(&mut self, bytes: &[u8]) -> Result<(), ChannelError> {
        if self.closed {
            return Err(ChannelError::Closed);
        }
        self.stream.write_all(bytes)?;
        Ok(())
    }

    fn recv(&mut self, timeout: Duration) -> Result<Recv, ChannelError> {
        if self.closed {
            return Err(ChannelError::Closed);
        }
        self.stream.set_read_timeout(Some(timeout.max(Duration::from_micros(1))))?;
        let mut buf = vec![0u8; 64 * 1024];
        match self.stream.read(&mut buf) {
            Ok(0) => Ok(Recv::PeerClosed),
            Ok(n) => {
                buf.truncate(n);
                Ok(Recv::Bytes(buf))
            }
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => Ok(Recv::TimeOut),
            Err(e) if matches!(e.kind(), io::ErrorKind::ConnectionReset | io::ErrorKind::ConnectionAborted) => {
                Ok(Recv::PeerClosed)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn close(&mut self) {
        if !self.closed {
            let _ = self.stream.shutdown(Shutdown::Both);
            self.closed = true;
        }
    }
}

impl Drop for TcpChannel {
    fn drop(&mut self) {
        self.close();
    }
}

pub fn connect_tcp(addr: &str, connect_timeout: Duration) -> Result<TcpChannel, ChannelError> {
    let fail = |source: io::Error| ChannelError::Connect {
        addr: addr.to_string(),
        source,
    };
    let mut last = io::Error::new(io::ErrorKind::NotFound, "address resolves to nothing");
    for sa in addr.to_socket_addrs().map_err(fail)? {
        match TcpStream::connect_timeout(&sa, connect_timeout) {
            Ok(stream) => return TcpChannel::new(stream).map_err(fail),
            Err(e) => last = e,
        }
    }
    Err(fail(last))
}

pub fn listen(addr: &str) -> Result<TcpListener, ChannelError> {
    TcpListener::bind(addr).map_err(|source| ChannelError::Listen {
        addr: addr.to_string(),
        source,
    })
}

/// Blocks until one peer connects.
pub fn accept(listener: &TcpListener) -> Result<TcpChannel, ChannelError> {
    let (stream, _) = listener.accept()?;
    Ok(TcpChannel::new(stream)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;
    use std::time::Instant;

    const SHORT: Duration = Duration::from_millis(50);

    #[test]
    fn pair_delivers_in_order() {
        let (mut a, mut b) = in_process_pair();
        a.send(&[1]).unwrap();
        a.send(&[2, 3]).unwrap();
        assert_eq!(b.recv(SHORT).unwrap(), Recv::Bytes(vec![1, 2, 3]));
        assert_eq!(b.recv(SHORT).unwrap(), Recv::TimeOut);
    }

    #[test]
    fn pair_reports_close() {
        let (mut a, mut b) = in_process_pair();
        b.send(&[9]).unwrap();
        b.close();
        assert_eq!(a.recv(SHORT).unwrap(), Recv::Bytes(vec![9]));
        assert_eq!(a.recv(SHORT).unwrap(), Recv::PeerClosed);
        assert!(matches!(b.send(&[0]), Err(ChannelError::Closed)));
    }

    #[test]
    fn silence_times_out_after_deadline() {
        let (mut a, _b) = in_process_pair();
        let t = Instant::now();
        assert_eq!(a.recv(SHORT).unwrap(), Recv::TimeOut);
        assert!(t.elapsed() >= SHORT);
    }

    #[test]
    fn tcp_round_trip_and_close() {
        let listener = listen("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let server = thread::spawn(move || {
            let mut ch = accept(&listener).unwrap();
            let mut got = Vec::new();
            while got.len() < 3 {
                match ch.recv(Duration::from_secs(5)).unwrap() {
                    Recv::Bytes(b) => got.extend(b),
                    other => panic!("{other:?}"),
                }
            }
            ch.send(&got).unwrap();
        });
        let mut ch = connect_tcp(&addr, Duration::from_secs(5)).unwrap();
        ch.send(b"abc").unwrap();
        let mut echoed = Vec::new();
        loop {
            match ch.recv(Duration::from_secs(5)).unwrap() {
                Recv::Bytes(b) => echoed.extend(b),
                Recv::PeerClosed => break,
                Recv::TimeOut => panic!("timed out"),
            }
        }
        assert_eq!(echoed, b"abc");
        server.join().unwrap();
    }

    #[test]
    fn connecting_to_an_unused_port_fails() {
        let port = {
            let l = listen("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let r = connect_tcp(&format!("127.0.0.1:{port}"), Duration::from_millis(500));
        assert!(matches!(r, Err(ChannelError::Connect { .. })));
    }
}
