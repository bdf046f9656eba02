//! How reports travel from sensor nodes to the fusion center. Both
//! transports carry encoded report lines, so the fusion side only ever sees
//! what went over the wire.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc;
use std::time::Duration;

use super::wire::{decode_report, encode_report, SensorReport};
use crate::{Error, Result};

/// A single-use uplink: sending consumes it.
pub trait ReportLink: Send {
    fn send(self, report: &SensorReport) -> Result<()>;
}

pub trait Transport: Send {
    type Link: ReportLink;

    /// True when `collect` must run while nodes are still sending.
    const CONCURRENT_COLLECT: bool;

    fn link(&mut self) -> Result<Self::Link>;

    /// Waits for every link to close and returns the decoded reports in
    /// arrival order. Fails unless exactly `expected` reports arrived.
    fn collect(self, expected: usize) -> Result<Vec<SensorReport>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportKind {
    #[default]
    Channel,
    Tcp,
}

/// In-process channel carrying encoded lines.
pub struct ChannelTransport {
    tx: mpsc::Sender<Vec<u8>>,
    rx: mpsc::Receiver<Vec<u8>>,
}

pub struct ChannelLink(mpsc::Sender<Vec<u8>>);

impl ChannelTransport {
    pub fn new() -> Self {
        let (tx, rx) = mpsc::channel();
        Self { tx, rx }
    }
}

impl Default for ChannelTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl ReportLink for ChannelLink {
    fn send(self, report: &SensorReport) -> Result<()> {
        self.0
            .send(encode_report(report)?)
            .map_err(|_| Error::protocol("fusion center hung up"))
    }
}

fn check_count(reports: Vec<SensorReport>, expected: usize) -> Result<Vec<SensorReport>> {
    if reports.len() != expected {
        return Err(Error::protocol(format!(
            "received {} reports, expected exactly {expected}",
            reports.len()
        )));
    }
    Ok(reports)
}

impl Transport for ChannelTransport {
    type Link = ChannelLink;
    const CONCURRENT_COLLECT: bool = false;

    fn link(&mut self) -> Result<ChannelLink> {
        Ok(ChannelLink(self.tx.clone()))
    }

    fn collect(self, expected: usize) -> Result<Vec<SensorReport>> {
        let Self { tx, rx } = self;
        drop(tx);
        let reports = rx.iter().map(|b| decode_report(&b)).collect::<Result<Vec<_>>>()?;
        check_count(reports, expected)
    }
}

/// Line-delimited reports over loopback TCP, one connection per node.
pub struct TcpTransport {
    listener: TcpListener,
    addr: SocketAddr,
    links: usize,
    timeout: Duration,
}

/// Connects on send. A link dropped unsent still opens and closes a
/// connection, so the collector sees the node as failed instead of waiting.
pub struct TcpLink {
    addr: SocketAddr,
    sent: bool,
}

impl TcpTransport {
    pub fn bind() -> Result<Self> {
        let listener = TcpListener::bind(("127.0.0.1", 0))?;
        let addr = listener.local_addr()?;
        Ok(Self {
            listener,
            addr,
            links: 0,
            timeout: Duration::from_secs(30),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }
}

impl ReportLink for TcpLink {
    fn send(mut self, report: &SensorReport) -> Result<()> {
        self.sent = true;
        let mut stream = TcpStream::connect(self.addr)?;
        stream.write_all(&encode_report(report)?)?;
        stream.flush()?;
        Ok(())
    }
}

impl Drop for TcpLink {
    fn drop(&mut self) {
        if !self.sent {
            let _ = TcpStream::connect(self.addr);
        }
    }
}

impl Transport for TcpTransport {
    type Link = TcpLink;
    const CONCURRENT_COLLECT: bool = true;

    fn link(&mut self) -> Result<TcpLink> {
        self.links += 1;
        Ok(TcpLink {
            addr: self.addr,
            sent: false,
        })
    }

    /// Accepts one connection per link handed out.
    fn collect(self, expected: usize) -> Result<Vec<SensorReport>> {
        let mut reports = Vec::with_capacity(expected);
        let mut silent = 0usize;
        for _ in 0..self.links.max(expected) {
            let (stream, _) = self.listener.accept()?;
            stream.set_read_timeout(Some(self.timeout))?;
            let mut lines = Vec::new();
            let mut reader = BufReader::new(stream);
            loop {
                let mut buf = Vec::new();
                if reader.read_until(b'\n', &mut buf)? == 0 {
                    break;
                }
                lines.push(buf);
            }
            match lines.len() {
                0 => silent += 1,
                1 => reports.push(decode_report(&lines[0])?),
                n => return Err(Error::protocol(format!("{n} reports on one connection"))),
            }
        }
        if silent > 0 {
            return Err(Error::protocol(format!("{silent} node(s) closed without reporting")));
        }
        check_count(reports, expected)
    }
}
