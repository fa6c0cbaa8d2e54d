//! Serial-to-BLE bridge emulation: connection lifecycle, segmentation of
//! the UART byte stream into notification packets, and lossless
//! reassembly on the receiving side.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// ATT notification overhead per packet; payload budget is `mtu - 3`.
pub const ATT_OVERHEAD: usize = 3;
pub const MTU_MIN: usize = 23;
pub const MTU_MAX: usize = 251;
/// Bytes parked while not connected before input is rejected.
pub const TX_BUFFER_CAP: usize = 8192;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("event {event:?} is illegal in phase {phase:?}")]
    IllegalTransition { phase: Phase, event: BridgeEvent },
    #[error("mtu {mtu} outside {MTU_MIN}..={MTU_MAX}")]
    InvalidMtu { mtu: usize },
    #[error("tx buffer overflow: {buffered} buffered + {incoming} incoming exceeds {TX_BUFFER_CAP}")]
    BufferOverflow { buffered: usize, incoming: usize },
    #[error("transport gap: expected sequence {expected}, got {got}")]
    TransportGap { expected: u64, got: u64 },
    #[error("notification log line {line}: {reason}")]
    LogFormat { line: usize, reason: String },
    #[error("reading notification log: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    PoweredOff,
    Initialized,
    Advertising,
    Connected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BridgeEvent {
    PowerOn,
    Connect,
    Disconnect,
    MtuUpdate(usize),
}

/// One over-the-air packet. Sequence numbers are monotonic per connection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub seq: u64,
    pub payload: Vec<u8>,
}

/// Record of one lifecycle transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: Phase,
    pub to: Phase,
    pub event: BridgeEvent,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BridgeStats {
    pub notifications: u64,
    pub brts_pulses: u64,
    pub bytes_in: u64,
    pub dropped_notifications: u64,
}

/// The bridge itself. Bytes written with [`Bridge::uart_in`] while
/// connected drain immediately into maximal notifications; while not
/// connected they park in the tx buffer until the first post-connect
/// drain.
#[derive(Debug)]
pub struct Bridge {
    phase: Phase,
    mtu: usize,
    tx_buf: Vec<u8>,
    next_seq: u64,
    stats: BridgeStats,
    /// Momentary transfer-success flag; true right after a notification.
    brts: bool,
    /// Sequence numbers to lose over the air; testing hook, empty by
    /// default.
    drop_seqs: BTreeSet<u64>,
}

impl Default for Bridge {
    fn default() -> Self {
        Self::new()
    }
}

impl Bridge {
    pub fn new() -> Self {
        Self {
            phase: Phase::PoweredOff,
            mtu: MTU_MIN,
            tx_buf: Vec::new(),
            next_seq: 0,
            stats: BridgeStats::default(),
            brts: false,
            drop_seqs: BTreeSet::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn mtu(&self) -> usize {
        self.mtu
    }

    /// Current per-notification payload budget.
    pub fn payload_limit(&self) -> usize {
        self.mtu - ATT_OVERHEAD
    }

    pub fn stats(&self) -> BridgeStats {
        self.stats
    }

    pub fn brts(&self) -> bool {
        self.brts
    }

    pub fn buffered_bytes(&self) -> usize {
        self.tx_buf.len()
    }

    /// Marks a sequence number to be lost over the air (it still consumes
    /// a sequence slot). Off by default; exists to exercise gap handling.
    pub fn inject_drop(&mut self, seq: u64) {
        self.drop_seqs.insert(seq);
    }

    /// Applies a lifecycle event, validating it against the current phase.
    pub fn handle_event(&mut self, event: BridgeEvent) -> Result<Transition, BridgeError> {
        let from = self.phase;
        let to = match (from, event) {
            // Power-up runs initialization and goes straight to
            // advertising.
            (Phase::PoweredOff, BridgeEvent::PowerOn) => Phase::Advertising,
            (Phase::Advertising, BridgeEvent::Connect) => {
                self.next_seq = 0;
                Phase::Connected
            }
            (Phase::Connected, BridgeEvent::Disconnect) => Phase::Advertising,
            (Phase::Connected, BridgeEvent::MtuUpdate(mtu)) => {
                if !(MTU_MIN..=MTU_MAX).contains(&mtu) {
                    return Err(BridgeError::InvalidMtu { mtu });
                }
                self.mtu = mtu;
                Phase::Connected
            }
            _ => return Err(BridgeError::IllegalTransition { phase: from, event }),
        };
        self.phase = to;
        Ok(Transition { from, to, event })
    }

    /// Accepts UART bytes from the device. Connected: buffer then drain
    /// into in-order notifications of at most `mtu - 3` bytes, pulsing
    /// BRTS once per notification. Not connected: park the bytes, bounded
    /// by [`TX_BUFFER_CAP`]; oversize input is rejected whole.
    pub fn uart_in(&mut self, bytes: &[u8]) -> Result<Vec<Notification>, BridgeError> {
        if self.phase != Phase::Connected {
            if self.tx_buf.len() + bytes.len() > TX_BUFFER_CAP {
                return Err(BridgeError::BufferOverflow {
                    buffered: self.tx_buf.len(),
                    incoming: bytes.len(),
                });
            }
            self.stats.bytes_in += bytes.len() as u64;
            self.tx_buf.extend_from_slice(bytes);
            return Ok(Vec::new());
        }

        self.stats.bytes_in += bytes.len() as u64;
        self.tx_buf.extend_from_slice(bytes);
        let limit = self.payload_limit();
        let mut out = Vec::new();
        let mut offset = 0;
        while offset < self.tx_buf.len() {
            let end = (offset + limit).min(self.tx_buf.len());
            let seq = self.next_seq;
            self.next_seq += 1;
            self.stats.notifications += 1;
            self.stats.brts_pulses += 1;
            self.brts = true;
            if self.drop_seqs.remove(&seq) {
                self.stats.dropped_notifications += 1;
            } else {
                out.push(Notification { seq, payload: self.tx_buf[offset..end].to_vec() });
            }
            offset = end;
        }
        self.tx_buf.clear();
        Ok(out)
    }
}

/// Concatenates notification payloads, requiring a contiguous ascending
/// sequence run.
pub fn reassemble(notifications: &[Notification]) -> Result<Vec<u8>, BridgeError> {
    let mut out = Vec::new();
    let mut expected: Option<u64> = None;
    for n in notifications {
        if let Some(e) = expected {
            if n.seq != e {
                return Err(BridgeError::TransportGap { expected: e, got: n.seq });
            }
        }
        expected = Some(n.seq + 1);
        out.extend_from_slice(&n.payload);
    }
    Ok(out)
}

/// Writes the `seq,len,hex_payload` notification log.
pub fn write_notification_log<W: Write>(
    mut w: W,
    notifications: &[Notification],
) -> Result<(), BridgeError> {
    writeln!(w, "seq,len,hex_payload")?;
    for n in notifications {
        writeln!(w, "{},{},{}", n.seq, n.payload.len(), hex::encode(&n.payload))?;
    }
    Ok(())
}

/// Reads a notification log written by [`write_notification_log`].
pub fn read_notification_log<R: BufRead>(r: R) -> Result<Vec<Notification>, BridgeError> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if idx == 0 {
            if line.trim() != "seq,len,hex_payload" {
                return Err(BridgeError::LogFormat {
                    line: lineno,
                    reason: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, ',');
        let seq = fields
            .next()
            .and_then(|f| f.trim().parse::<u64>().ok())
            .ok_or_else(|| BridgeError::LogFormat { line: lineno, reason: "bad seq".into() })?;
        let len = fields
            .next()
            .and_then(|f| f.trim().parse::<usize>().ok())
            .ok_or_else(|| BridgeError::LogFormat { line: lineno, reason: "bad len".into() })?;
        let payload = fields
            .next()
            .map(str::trim)
            .and_then(|f| hex::decode(f).ok())
            .ok_or_else(|| BridgeError::LogFormat { line: lineno, reason: "bad payload".into() })?;
        if payload.len() != len {
            return Err(BridgeError::LogFormat {
                line: lineno,
                reason: format!("len field {len} does not match payload of {}", payload.len()),
            });
        }
        out.push(Notification { seq, payload });
    }
    Ok(out)
}
