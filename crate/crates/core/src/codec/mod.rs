//! Sensor serial packet format: sync header, payload length, a run of
//! DataRows, and a trailing checksum byte.
//!
//! Wire layout of one frame:
//!
//! ```text
//! 0xAA 0xAA PLENGTH <payload: PLENGTH bytes> CHECKSUM
//! ```
//!
//! The payload is a back-to-back sequence of rows, each consisting of zero
//! or more `0x55` extension prefixes, a code byte, an explicit length byte
//! for codes `>= 0x80`, and the value bytes. The checksum is the one's
//! complement of the low byte of the payload byte-sum.

mod decoder;

pub use decoder::{DecodeEvent, DecodeEventKind, DecoderStats, StreamDecoder};

use thiserror::Error;

/// Frame sync byte; two in a row start a frame.
pub const SYNC_BYTE: u8 = 0xAA;
/// Extension-code prefix byte.
pub const EXCODE_BYTE: u8 = 0x55;
/// Largest legal payload length. `0xAA` is excluded so a length field can
/// never be confused with a sync byte.
pub const MAX_PAYLOAD_LEN: usize = 0xA9;

/// Row code identifiers emitted by the sensor front end.
pub mod codes {
    /// Signal contact quality, 1 byte, 0 = good.
    pub const POOR_SIGNAL: u8 = 0x02;
    /// Heart rate in bpm, 1 byte.
    pub const HEART_RATE: u8 = 0x03;
    /// Temperature in signed centi-degrees Celsius, 2 bytes big-endian.
    pub const TEMPERATURE: u8 = 0x04;
    /// Oxygen saturation in percent, 1 byte.
    pub const SPO2: u8 = 0x05;
    /// Motion flag, 1 byte, 0 or 1.
    pub const MOTION_FLAG: u8 = 0x06;
    /// Raw ECG ADC code, 2 bytes signed big-endian, explicit length byte.
    pub const RAW_ECG: u8 = 0x80;
}

/// Checksum function signature; pluggable on the decoder in case a true
/// CRC-8 variant of the trailer ever has to be supported.
pub type ChecksumFn = fn(&[u8]) -> u8;

/// Errors from encoding and payload parsing.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("payload length {len} outside the legal range 1..={MAX_PAYLOAD_LEN}")]
    PayloadLength { len: usize },
    #[error("code {code:#04x} expects a {expected}-byte value, got {got}")]
    ValueLength { code: u8, expected: usize, got: usize },
    #[error("unknown code {code:#04x} below 0x80 has no defined length")]
    UnknownImplicitCode { code: u8 },
    #[error("row declares {declared} value bytes but only {remaining} remain")]
    TruncatedRow { declared: usize, remaining: usize },
    #[error("hexdump token {token:?} is not an even run of hex digits")]
    HexFormat { token: String },
}

/// Value width of an implicit-length code (`< 0x80`), if the code is known.
pub fn implicit_value_len(code: u8) -> Option<usize> {
    match code {
        codes::POOR_SIGNAL | codes::HEART_RATE | codes::SPO2 | codes::MOTION_FLAG => Some(1),
        codes::TEMPERATURE => Some(2),
        _ => None,
    }
}

/// One's complement of the low byte of the payload byte-sum.
pub fn compute_checksum(payload: &[u8]) -> Result<u8, CodecError> {
    if payload.len() > MAX_PAYLOAD_LEN {
        return Err(CodecError::PayloadLength { len: payload.len() });
    }
    Ok(sum_complement(payload))
}

/// Unchecked checksum kernel, usable as a [`ChecksumFn`].
pub fn sum_complement(payload: &[u8]) -> u8 {
    let sum: u32 = payload.iter().map(|&b| u32::from(b)).sum();
    !(sum as u8)
}

/// One typed value inside a packet payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataRow {
    excode_level: u8,
    code: u8,
    value: Vec<u8>,
}

/// Decoded view of a row's value bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowValue {
    PoorSignal(u8),
    HeartRate(u8),
    /// Signed centi-degrees Celsius.
    TemperatureCentiC(i16),
    SpO2(u8),
    Motion(bool),
    /// Signed ADC code.
    RawEcg(i16),
    /// Code with explicit length that this build does not interpret.
    Unknown { code: u8, bytes: Vec<u8> },
}

impl DataRow {
    /// Builds a row, validating the value width against the code table.
    /// Codes `>= 0x80` accept any value up to 255 bytes (length is explicit
    /// on the wire); unknown codes `< 0x80` are rejected.
    pub fn new(code: u8, value: Vec<u8>) -> Result<Self, CodecError> {
        if code < 0x80 {
            let expected = implicit_value_len(code)
                .ok_or(CodecError::UnknownImplicitCode { code })?;
            if value.len() != expected {
                return Err(CodecError::ValueLength { code, expected, got: value.len() });
            }
        } else if value.len() > u8::MAX as usize {
            return Err(CodecError::ValueLength { code, expected: u8::MAX as usize, got: value.len() });
        }
        Ok(Self { excode_level: 0, code, value })
    }

    pub fn with_excode_level(mut self, level: u8) -> Self {
        self.excode_level = level;
        self
    }

    pub fn poor_signal(quality: u8) -> Self {
        Self { excode_level: 0, code: codes::POOR_SIGNAL, value: vec![quality] }
    }

    pub fn heart_rate(bpm: u8) -> Self {
        Self { excode_level: 0, code: codes::HEART_RATE, value: vec![bpm] }
    }

    pub fn temperature_centi_c(centi: i16) -> Self {
        Self { excode_level: 0, code: codes::TEMPERATURE, value: centi.to_be_bytes().to_vec() }
    }

    pub fn spo2(percent: u8) -> Self {
        Self { excode_level: 0, code: codes::SPO2, value: vec![percent] }
    }

    pub fn motion(moving: bool) -> Self {
        Self { excode_level: 0, code: codes::MOTION_FLAG, value: vec![u8::from(moving)] }
    }

    pub fn raw_ecg(code: i16) -> Self {
        Self { excode_level: 0, code: codes::RAW_ECG, value: code.to_be_bytes().to_vec() }
    }

    pub fn excode_level(&self) -> u8 {
        self.excode_level
    }

    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn value_bytes(&self) -> &[u8] {
        &self.value
    }

    /// Interprets the value bytes according to the code table.
    pub fn value(&self) -> RowValue {
        match (self.code, self.value.as_slice()) {
            (codes::POOR_SIGNAL, [q]) => RowValue::PoorSignal(*q),
            (codes::HEART_RATE, [bpm]) => RowValue::HeartRate(*bpm),
            (codes::TEMPERATURE, [hi, lo]) => {
                RowValue::TemperatureCentiC(i16::from_be_bytes([*hi, *lo]))
            }
            (codes::SPO2, [pct]) => RowValue::SpO2(*pct),
            (codes::MOTION_FLAG, [m]) => RowValue::Motion(*m != 0),
            (codes::RAW_ECG, [hi, lo]) => RowValue::RawEcg(i16::from_be_bytes([*hi, *lo])),
            _ => RowValue::Unknown { code: self.code, bytes: self.value.clone() },
        }
    }

    /// Serialized length on the wire: prefixes, code, optional length byte,
    /// value bytes.
    pub fn wire_len(&self) -> usize {
        let length_byte = usize::from(self.code >= 0x80);
        self.excode_level as usize + 1 + length_byte + self.value.len()
    }

    fn write_to(&self, out: &mut Vec<u8>) {
        out.extend(std::iter::repeat(EXCODE_BYTE).take(self.excode_level as usize));
        out.push(self.code);
        if self.code >= 0x80 {
            out.push(self.value.len() as u8);
        }
        out.extend_from_slice(&self.value);
    }
}

/// An ordered run of rows; the unit carried by one wire frame.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Packet {
    pub rows: Vec<DataRow>,
}

impl Packet {
    pub fn new(rows: Vec<DataRow>) -> Self {
        Self { rows }
    }

    /// Total payload bytes this packet serializes to.
    pub fn payload_len(&self) -> usize {
        self.rows.iter().map(DataRow::wire_len).sum()
    }
}

/// Serializes a packet into a complete frame.
pub fn encode_packet(packet: &Packet) -> Result<Vec<u8>, CodecError> {
    encode_packet_with_checksum(packet, sum_complement)
}

/// Same as [`encode_packet`] but with a caller-supplied trailer function.
pub fn encode_packet_with_checksum(
    packet: &Packet,
    checksum: ChecksumFn,
) -> Result<Vec<u8>, CodecError> {
    let len = packet.payload_len();
    if len == 0 || len > MAX_PAYLOAD_LEN {
        return Err(CodecError::PayloadLength { len });
    }
    let mut payload = Vec::with_capacity(len);
    for row in &packet.rows {
        row.write_to(&mut payload);
    }
    debug_assert_eq!(payload.len(), len);
    let mut frame = Vec::with_capacity(len + 4);
    frame.extend_from_slice(&[SYNC_BYTE, SYNC_BYTE, len as u8]);
    frame.extend_from_slice(&payload);
    frame.push(checksum(&payload));
    Ok(frame)
}

/// Splits a checksum-validated payload into rows, consuming every byte.
pub fn parse_payload(payload: &[u8]) -> Result<Vec<DataRow>, CodecError> {
    let mut rows = Vec::new();
    let mut pos = 0;
    while pos < payload.len() {
        let mut excode_level = 0u8;
        while pos < payload.len() && payload[pos] == EXCODE_BYTE {
            excode_level = excode_level.saturating_add(1);
            pos += 1;
        }
        if pos == payload.len() {
            return Err(CodecError::TruncatedRow { declared: 1, remaining: 0 });
        }
        let code = payload[pos];
        pos += 1;
        let value_len = if code >= 0x80 {
            if pos == payload.len() {
                return Err(CodecError::TruncatedRow { declared: 1, remaining: 0 });
            }
            let len = payload[pos] as usize;
            pos += 1;
            len
        } else {
            implicit_value_len(code).ok_or(CodecError::UnknownImplicitCode { code })?
        };
        let remaining = payload.len() - pos;
        if value_len > remaining {
            return Err(CodecError::TruncatedRow { declared: value_len, remaining });
        }
        let value = payload[pos..pos + value_len].to_vec();
        pos += value_len;
        rows.push(DataRow { excode_level, code, value });
    }
    Ok(rows)
}

/// Parses the whitespace-separated hex text form of a capture. Tokens must
/// be even-length runs of hex digits; each digit pair is one byte.
pub fn parse_hexdump(text: &str) -> Result<Vec<u8>, CodecError> {
    let mut bytes = Vec::new();
    for token in text.split_whitespace() {
        if token.len() % 2 != 0 || !token.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(CodecError::HexFormat { token: token.to_string() });
        }
        for pair in token.as_bytes().chunks(2) {
            let s = std::str::from_utf8(pair).expect("hex digits are ascii");
            bytes.push(u8::from_str_radix(s, 16).expect("validated hex pair"));
        }
    }
    Ok(bytes)
}

/// Interprets capture content as either a text hexdump or raw frame bytes.
/// Content that is valid UTF-8 and consists entirely of hex tokens is
/// treated as a hexdump; anything else is taken verbatim.
pub fn capture_bytes(content: &[u8]) -> Vec<u8> {
    if let Ok(text) = std::str::from_utf8(content) {
        if !text.trim().is_empty() {
            if let Ok(bytes) = parse_hexdump(text) {
                return bytes;
            }
        }
    }
    content.to_vec()
}
