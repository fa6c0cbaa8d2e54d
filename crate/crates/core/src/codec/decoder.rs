//! Incremental frame decoder.
//!
//! Feeding bytes drives a five-state machine (`SYNC1 → SYNC2 → PLENGTH →
//! PAYLOAD → CHECKSUM`). Malformed input never aborts: failures surface as
//! events and the decoder re-enters sync search at the byte after the first
//! sync byte of the failed attempt, so frames overlapping a bogus header are
//! still found.

use std::collections::VecDeque;

use super::{
    parse_payload, sum_complement, ChecksumFn, CodecError, Packet, MAX_PAYLOAD_LEN, SYNC_BYTE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Sync1,
    Sync2,
    Plength,
    Payload,
    Checksum,
}

/// What a decoder observed, stamped with the count of input bytes consumed
/// when the event was emitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeEvent {
    pub kind: DecodeEventKind,
    pub byte_offset: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeEventKind {
    PacketDecoded(Packet),
    ChecksumError { expected: u8, got: u8 },
    LengthError { plength: u8 },
    RowFormatError(CodecError),
}

/// Running counters. `resyncs` counts abandoned frame attempts that had
/// already consumed a length byte; scan noise before a header is not
/// counted. A frame whose checksum matches but whose rows are malformed
/// lands in `row_format_errors`, so `packets_ok + checksum_errors` equals
/// the checksum-state exits only on streams free of such frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecoderStats {
    pub packets_ok: u64,
    pub checksum_errors: u64,
    pub length_errors: u64,
    pub row_format_errors: u64,
    pub resyncs: u64,
}

/// Incremental parser over an arbitrary byte stream. Single-owner; feed it
/// chunks of any size, call [`StreamDecoder::finish`] at end of input to
/// flush frames hidden behind a dangling attempt.
#[derive(Debug)]
pub struct StreamDecoder {
    state: State,
    /// Bytes consumed since (and including) the first sync byte of the
    /// current frame attempt; replayed on failure.
    attempt: Vec<u8>,
    payload: Vec<u8>,
    plength: usize,
    stats: DecoderStats,
    checksum: ChecksumFn,
    consumed: u64,
}

impl Default for StreamDecoder {
    fn default() -> Self {
        Self::new()
    }
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::with_checksum(sum_complement)
    }

    pub fn with_checksum(checksum: ChecksumFn) -> Self {
        Self {
            state: State::Sync1,
            attempt: Vec::new(),
            payload: Vec::new(),
            plength: 0,
            stats: DecoderStats::default(),
            checksum,
            consumed: 0,
        }
    }

    pub fn stats(&self) -> DecoderStats {
        self.stats
    }

    /// Count of bytes fed so far.
    pub fn position(&self) -> u64 {
        self.consumed
    }

    /// Consumes a chunk and returns the events it produced, in order.
    pub fn feed(&mut self, bytes: &[u8]) -> Vec<DecodeEvent> {
        let mut events = Vec::new();
        let mut queue = VecDeque::new();
        for &byte in bytes {
            self.consumed += 1;
            queue.push_back(byte);
            self.drain_queue(&mut queue, &mut events);
        }
        events
    }

    /// Decodes a whitespace-separated hex capture; see
    /// [`super::parse_hexdump`] for the accepted form.
    pub fn feed_hex(&mut self, text: &str) -> Result<Vec<DecodeEvent>, CodecError> {
        let bytes = super::parse_hexdump(text)?;
        Ok(self.feed(&bytes))
    }

    /// Signals end of input: any open frame attempt is abandoned and its
    /// tail re-scanned, so complete frames swallowed as bogus payload are
    /// still reported. The decoder is reusable afterwards.
    pub fn finish(&mut self) -> Vec<DecodeEvent> {
        let mut events = Vec::new();
        let mut queue = VecDeque::new();
        while self.attempt.len() > 1 {
            let replay: Vec<u8> = self.attempt.drain(1..).collect();
            self.attempt.clear();
            self.reset_frame();
            queue.extend(replay);
            self.drain_queue(&mut queue, &mut events);
        }
        self.attempt.clear();
        self.reset_frame();
        events
    }

    fn reset_frame(&mut self) {
        self.state = State::Sync1;
        self.payload.clear();
        self.plength = 0;
    }

    fn drain_queue(&mut self, queue: &mut VecDeque<u8>, events: &mut Vec<DecodeEvent>) {
        while let Some(byte) = queue.pop_front() {
            self.step(byte, queue, events);
        }
    }

    fn emit(&self, events: &mut Vec<DecodeEvent>, kind: DecodeEventKind) {
        events.push(DecodeEvent { kind, byte_offset: self.consumed });
    }

    /// Abandons the current attempt and queues everything past its first
    /// sync byte for re-scanning ahead of any yet-unprocessed input.
    fn fail_resync(&mut self, queue: &mut VecDeque<u8>) {
        self.stats.resyncs += 1;
        let replay: Vec<u8> = self.attempt.drain(1..).collect();
        self.attempt.clear();
        self.reset_frame();
        for &byte in replay.iter().rev() {
            queue.push_front(byte);
        }
    }

    fn step(&mut self, byte: u8, queue: &mut VecDeque<u8>, events: &mut Vec<DecodeEvent>) {
        match self.state {
            State::Sync1 => {
                if byte == SYNC_BYTE {
                    self.attempt.push(byte);
                    self.state = State::Sync2;
                }
            }
            State::Sync2 => {
                if byte == SYNC_BYTE {
                    self.attempt.push(byte);
                    self.state = State::Plength;
                } else {
                    self.attempt.clear();
                    self.state = State::Sync1;
                }
            }
            State::Plength => {
                if byte == SYNC_BYTE {
                    // Three sync bytes in a row: the oldest was noise and
                    // the header stays armed.
                    return;
                }
                let len = byte as usize;
                if len == 0 || len > MAX_PAYLOAD_LEN {
                    self.attempt.push(byte);
                    self.stats.length_errors += 1;
                    self.emit(events, DecodeEventKind::LengthError { plength: byte });
                    self.fail_resync(queue);
                } else {
                    self.attempt.push(byte);
                    self.plength = len;
                    self.payload.clear();
                    self.state = State::Payload;
                }
            }
            State::Payload => {
                self.attempt.push(byte);
                self.payload.push(byte);
                if self.payload.len() == self.plength {
                    self.state = State::Checksum;
                }
            }
            State::Checksum => {
                self.attempt.push(byte);
                let expected = (self.checksum)(&self.payload);
                if byte != expected {
                    self.stats.checksum_errors += 1;
                    self.emit(events, DecodeEventKind::ChecksumError { expected, got: byte });
                    self.fail_resync(queue);
                    return;
                }
                match parse_payload(&self.payload) {
                    Ok(rows) => {
                        self.stats.packets_ok += 1;
                        self.emit(events, DecodeEventKind::PacketDecoded(Packet::new(rows)));
                        self.attempt.clear();
                        self.reset_frame();
                    }
                    Err(err) => {
                        self.stats.row_format_errors += 1;
                        self.emit(events, DecodeEventKind::RowFormatError(err));
                        self.fail_resync(queue);
                    }
                }
            }
        }
    }
}
