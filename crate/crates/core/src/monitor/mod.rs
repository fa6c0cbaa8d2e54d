//! Receiver side: reassembles the transport stream, decodes packets,
//! accumulates ECG and vitals, and exports results.

mod export;
mod qrs;

pub use export::{ExportKind, Summary};
pub use qrs::{detect_qrs, detect_qrs_with, hr_from_peaks, QrsConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::Notification;
use crate::codec::{DecodeEventKind, RowValue, StreamDecoder};

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("{0}")]
    Parameter(String),
    #[error("need {needed} samples/peaks, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("exporting {path}: {source}")]
    Export { path: String, source: std::io::Error },
}

/// Temperature resolution of the thermometer part, degrees Celsius.
pub const TEMPERATURE_STEP_C: f64 = 0.0625;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VitalKind {
    PoorSignal,
    HeartRate,
    Temperature,
    Spo2,
    Motion,
}

impl VitalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PoorSignal => "poor_signal",
            Self::HeartRate => "heart_rate",
            Self::Temperature => "temperature",
            Self::Spo2 => "spo2",
            Self::Motion => "motion",
        }
    }
}

/// One timestamped scalar observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalRecord {
    pub time_s: f64,
    pub kind: VitalKind,
    pub value: f64,
}

/// Ingestion health counters; all monotonic while a session lives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityReport {
    pub packets_ok: u64,
    pub checksum_errors: u64,
    pub resyncs: u64,
    pub transport_gaps: u64,
    pub adc_saturation_count: u64,
}

/// A monitoring session. Feed it raw capture bytes or notifications in any
/// chunking; the embedded decoder carries frame state across calls.
#[derive(Debug)]
pub struct Session {
    fs: f64,
    ecg: Vec<i16>,
    vitals: Vec<VitalRecord>,
    transport_gaps: u64,
    adc_saturation: u64,
    next_seq: Option<u64>,
    decoder: StreamDecoder,
}

impl Session {
    pub fn new(fs: f64) -> Self {
        Self {
            fs,
            ecg: Vec::new(),
            vitals: Vec::new(),
            transport_gaps: 0,
            adc_saturation: 0,
            next_seq: None,
            decoder: StreamDecoder::new(),
        }
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn ecg_codes(&self) -> &[i16] {
        &self.ecg
    }

    pub fn vitals(&self) -> &[VitalRecord] {
        &self.vitals
    }

    pub fn duration_s(&self) -> f64 {
        self.ecg.len() as f64 / self.fs
    }

    pub fn quality(&self) -> QualityReport {
        let stats = self.decoder.stats();
        QualityReport {
            packets_ok: stats.packets_ok,
            checksum_errors: stats.checksum_errors,
            resyncs: stats.resyncs,
            transport_gaps: self.transport_gaps,
            adc_saturation_count: self.adc_saturation,
        }
    }

    /// Folds producer-side saturation diagnostics into the report.
    pub fn record_adc_saturation(&mut self, count: usize) {
        self.adc_saturation += count as u64;
    }

    /// Ingests raw capture bytes. Malformed input is counted, never fatal.
    pub fn ingest_bytes(&mut self, bytes: &[u8]) {
        let events = self.decoder.feed(bytes);
        self.apply_events(events);
    }

    /// Ingests a whitespace-separated hexdump capture.
    pub fn ingest_hex(&mut self, text: &str) -> Result<(), crate::codec::CodecError> {
        let bytes = crate::codec::parse_hexdump(text)?;
        self.ingest_bytes(&bytes);
        Ok(())
    }

    /// Ingests transport notifications: sequence discontinuities bump the
    /// gap counter, payloads stream into the frame decoder regardless.
    pub fn ingest_notifications(&mut self, notifications: &[Notification]) {
        for n in notifications {
            if let Some(expected) = self.next_seq {
                if n.seq != expected {
                    self.transport_gaps += 1;
                }
            }
            self.next_seq = Some(n.seq + 1);
            self.ingest_bytes(&n.payload);
        }
    }

    /// Signals end of the byte stream, flushing any frame still hidden
    /// behind an unterminated attempt.
    pub fn finish_stream(&mut self) {
        let events = self.decoder.finish();
        self.apply_events(events);
    }

    fn apply_events(&mut self, events: Vec<crate::codec::DecodeEvent>) {
        for event in events {
            if let DecodeEventKind::PacketDecoded(packet) = event.kind {
                for row in &packet.rows {
                    self.apply_row(row.value());
                }
            }
        }
    }

    fn apply_row(&mut self, value: RowValue) {
        let time_s = self.ecg.len() as f64 / self.fs;
        let record = match value {
            RowValue::RawEcg(code) => {
                self.ecg.push(code);
                return;
            }
            RowValue::PoorSignal(q) => (VitalKind::PoorSignal, f64::from(q)),
            RowValue::HeartRate(bpm) => (VitalKind::HeartRate, f64::from(bpm)),
            RowValue::TemperatureCentiC(centi) => {
                let celsius = f64::from(centi) / 100.0;
                let quantized = (celsius / TEMPERATURE_STEP_C).round() * TEMPERATURE_STEP_C;
                (VitalKind::Temperature, quantized)
            }
            RowValue::SpO2(pct) => (VitalKind::Spo2, f64::from(pct)),
            RowValue::Motion(m) => (VitalKind::Motion, f64::from(u8::from(m))),
            RowValue::Unknown { .. } => return,
        };
        self.vitals.push(VitalRecord { time_s, kind: record.0, value: record.1 });
    }

    /// Locally computed heart rate over the whole session, if enough
    /// signal is present.
    pub fn mean_hr_bpm(&self) -> Option<f64> {
        let samples: Vec<f64> = self.ecg.iter().map(|&c| f64::from(c)).collect();
        let peaks = detect_qrs(&samples, self.fs).ok()?;
        hr_from_peaks(&peaks, self.fs).ok()
    }

    /// Mean of the heart-rate values the device itself reported.
    pub fn device_mean_hr_bpm(&self) -> Option<f64> {
        let rates: Vec<f64> = self
            .vitals
            .iter()
            .filter(|v| v.kind == VitalKind::HeartRate)
            .map(|v| v.value)
            .collect();
        if rates.is_empty() {
            None
        } else {
            Some(rates.iter().sum::<f64>() / rates.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode_packet, DataRow, Packet};

    #[test]
    fn vitals_frame_produces_two_records() {
        let mut session = Session::new(512.0);
        session.ingest_bytes(&[0xAA, 0xAA, 0x04, 0x02, 0x00, 0x03, 0x64, 0x96]);
        let vitals = session.vitals();
        assert_eq!(vitals.len(), 2);
        assert_eq!(vitals[0].kind, VitalKind::PoorSignal);
        assert_eq!(vitals[0].value, 0.0);
        assert_eq!(vitals[1].kind, VitalKind::HeartRate);
        assert_eq!(vitals[1].value, 100.0);
        assert_eq!(session.quality().packets_ok, 1);
    }

    #[test]
    fn corrupted_checksum_only_bumps_the_counter() {
        let mut session = Session::new(512.0);
        session.ingest_bytes(&[0xAA, 0xAA, 0x04, 0x02, 0x00, 0x03, 0x64, 0x00]);
        assert_eq!(session.quality().checksum_errors, 1);
        assert!(session.vitals().is_empty());
        assert!(session.ecg_codes().is_empty());
    }

    #[test]
    fn raw_rows_grow_the_ecg_by_their_count() {
        let rows: Vec<DataRow> = (0..16).map(|i| DataRow::raw_ecg(i * 100)).collect();
        let frame = encode_packet(&Packet::new(rows)).unwrap();
        let mut session = Session::new(512.0);
        session.ingest_bytes(&frame);
        assert_eq!(session.ecg_codes().len(), 16);
        assert_eq!(session.ecg_codes()[3], 300);
    }

    #[test]
    fn scalar_rows_are_stamped_at_the_latest_sample_time() {
        let mut session = Session::new(512.0);
        let ecg = encode_packet(&Packet::new(
            (0..16).map(|_| DataRow::raw_ecg(0)).collect(),
        ))
        .unwrap();
        for _ in 0..16 {
            session.ingest_bytes(&ecg);
        }
        let hr = encode_packet(&Packet::new(vec![DataRow::heart_rate(60)])).unwrap();
        session.ingest_bytes(&hr);
        assert_eq!(session.vitals().len(), 1);
        assert_eq!(session.vitals()[0].time_s, 256.0 / 512.0);
    }

    #[test]
    fn temperature_quantizes_to_sensor_resolution() {
        let frame = encode_packet(&Packet::new(vec![DataRow::temperature_centi_c(3705)])).unwrap();
        let mut session = Session::new(512.0);
        session.ingest_bytes(&frame);
        let v = session.vitals()[0];
        assert_eq!(v.kind, VitalKind::Temperature);
        // 37.05 C rounds onto the 0.0625 grid.
        assert_eq!(v.value, 37.0625);
    }

    #[test]
    fn chunking_is_irrelevant() {
        let frames: Vec<u8> = (0..20)
            .flat_map(|i| {
                encode_packet(&Packet::new(vec![
                    DataRow::raw_ecg(i),
                    DataRow::heart_rate(70),
                ]))
                .unwrap()
            })
            .collect();

        let mut whole = Session::new(512.0);
        whole.ingest_bytes(&frames);

        let mut pieces = Session::new(512.0);
        for chunk in frames.chunks(7) {
            pieces.ingest_bytes(chunk);
        }

        assert_eq!(whole.ecg_codes(), pieces.ecg_codes());
        assert_eq!(whole.vitals(), pieces.vitals());
        assert_eq!(whole.quality(), pieces.quality());
    }

    #[test]
    fn sequence_gaps_are_counted_not_fatal() {
        let frame = encode_packet(&Packet::new(vec![DataRow::spo2(98)])).unwrap();
        let mut session = Session::new(512.0);
        session.ingest_notifications(&[
            Notification { seq: 0, payload: frame.clone() },
            Notification { seq: 2, payload: frame.clone() },
            Notification { seq: 3, payload: frame },
        ]);
        assert_eq!(session.quality().transport_gaps, 1);
        assert_eq!(session.vitals().len(), 3);
    }
}
