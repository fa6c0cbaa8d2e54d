//! Discrete-event model of the wearable: an interrupt-driven MCU that
//! sleeps between sensor timer expiries, frames due rows, and forwards
//! them over UART under BCTS flow control.

mod motion;
mod power;
pub mod scenario;

pub use motion::motion_gate;
pub use power::{
    battery_runtime, charge_compliance, reference_components, reference_rails, validate_rails,
    BatteryModel, ChargeReport, ComponentSpec, CurrentProfile, DutyCycle, PowerRail, RailVerdict,
    RailsReport, ACCEL_WAKEUP_MA, CHARGE_ANCHOR_MA, CHARGE_RESISTOR_MIN_KOHM,
};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{encode_packet, DataRow, Packet};

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("{0}")]
    Parameter(String),
    #[error("unknown component {name:?} attached to a rail")]
    UnknownComponent { name: String },
    #[error("duty-cycle fractions sum to {sum}, expected 1")]
    DutyCycle { sum: f64 },
    #[error("average draw is zero; runtime undefined")]
    UndefinedRuntime,
    #[error("motion window of {samples} samples is shorter than 2")]
    WindowTooShort { samples: usize },
    #[error("step duration {dt} s must be positive")]
    InvalidStep { dt: f64 },
    #[error("scenario line {line}: {reason}")]
    Scenario { line: usize, reason: String },
}

/// Duty timing of the virtual device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceConfig {
    /// ECG sample rate the sensor runs at, Hz.
    pub fs: f64,
    /// Raw ECG rows batched into one frame.
    pub frame_batch: usize,
    /// Cadence of the scalar vitals frame, seconds.
    pub vitals_period_s: f64,
    /// MCU active dwell spent servicing one wake, seconds.
    pub service_time_s: f64,
    /// UART output buffer cap in bytes; oldest frame drops on overflow.
    pub uart_buf_cap: usize,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            fs: 512.0,
            frame_batch: 16,
            vitals_period_s: 1.0,
            service_time_s: 0.005,
            uart_buf_cap: 4096,
        }
    }
}

/// Bridge-facing control pins as seen by the device.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowPins {
    /// Bridge power enable, driven by the device.
    pub en: bool,
    /// Clear-to-send: the device may emit only while high.
    pub bcts: bool,
    /// Transfer-success pulse, observed after a completed emission.
    pub brts: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McuState {
    Sleep,
    Active,
}

/// Latest scalar sensor values; a vitals frame carries whatever is set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VitalSnapshot {
    pub poor_signal: Option<u8>,
    pub heart_rate_bpm: Option<u8>,
    pub temperature_centi_c: Option<i16>,
    pub spo2_pct: Option<u8>,
    pub motion: Option<bool>,
}

impl VitalSnapshot {
    fn rows(&self) -> Vec<DataRow> {
        let mut rows = Vec::new();
        if let Some(q) = self.poor_signal {
            rows.push(DataRow::poor_signal(q));
        }
        if let Some(bpm) = self.heart_rate_bpm {
            rows.push(DataRow::heart_rate(bpm));
        }
        if let Some(t) = self.temperature_centi_c {
            rows.push(DataRow::temperature_centi_c(t));
        }
        if let Some(s) = self.spo2_pct {
            rows.push(DataRow::spo2(s));
        }
        if let Some(m) = self.motion {
            rows.push(DataRow::motion(m));
        }
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterruptSource {
    SampleTimer,
    VitalsTimer,
    FlowResume,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceEvent {
    Interrupt { t: f64, source: InterruptSource },
    FrameEmitted { t: f64, len: usize },
    FrameBuffered { t: f64, len: usize },
    BufferOverflow { t: f64, dropped_frames: usize },
    BrtsPulse { t: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeviceStats {
    pub interrupts: u64,
    pub frames_generated: u64,
    pub frames_emitted: u64,
    pub frames_buffered: u64,
    pub frames_dropped: u64,
    pub bytes_emitted: u64,
    pub brts_pulses: u64,
}

/// Result of one simulation step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub emitted: Vec<u8>,
    pub events: Vec<DeviceEvent>,
    pub energy_mah: f64,
}

/// Single-owner device model; step it forward with [`DeviceModel::step`].
#[derive(Debug)]
pub struct DeviceModel {
    cfg: DeviceConfig,
    profile: CurrentProfile,
    battery: BatteryModel,
    mcu: McuState,
    clock_s: f64,
    ecg_queue: VecDeque<i16>,
    vitals: VitalSnapshot,
    uart_buf: VecDeque<Vec<u8>>,
    uart_buf_bytes: usize,
    pins: FlowPins,
    charge_mah: f64,
    next_frame_tick: u64,
    next_vitals_tick: u64,
    active_until: Option<f64>,
    /// Frames emitted in the current dwell, pending their BRTS pulse.
    pending_brts: usize,
    stats: DeviceStats,
}

impl DeviceModel {
    pub fn new(cfg: DeviceConfig, profile: CurrentProfile) -> Result<Self, DeviceError> {
        if !cfg.fs.is_finite() || cfg.fs <= 0.0 {
            return Err(DeviceError::Parameter(format!("fs {} Hz must be positive", cfg.fs)));
        }
        if cfg.frame_batch == 0 || cfg.frame_batch * 4 > crate::codec::MAX_PAYLOAD_LEN {
            return Err(DeviceError::Parameter(format!(
                "frame batch {} does not fit one payload",
                cfg.frame_batch
            )));
        }
        if !cfg.vitals_period_s.is_finite()
            || cfg.vitals_period_s <= 0.0
            || !cfg.service_time_s.is_finite()
            || cfg.service_time_s <= 0.0
        {
            return Err(DeviceError::Parameter("timer periods must be positive".into()));
        }
        let battery = BatteryModel::default();
        Ok(Self {
            cfg,
            profile,
            battery,
            mcu: McuState::Sleep,
            clock_s: 0.0,
            ecg_queue: VecDeque::new(),
            vitals: VitalSnapshot::default(),
            uart_buf: VecDeque::new(),
            uart_buf_bytes: 0,
            pins: FlowPins { en: false, bcts: true, brts: false },
            charge_mah: battery.capacity_mah,
            next_frame_tick: 1,
            next_vitals_tick: 1,
            active_until: None,
            pending_brts: 0,
            stats: DeviceStats::default(),
        })
    }

    pub fn with_defaults() -> Self {
        Self::new(DeviceConfig::default(), CurrentProfile::default())
            .expect("defaults are consistent")
    }

    pub fn clock_s(&self) -> f64 {
        self.clock_s
    }

    pub fn mcu_state(&self) -> McuState {
        self.mcu
    }

    pub fn pins(&self) -> FlowPins {
        self.pins
    }

    pub fn stats(&self) -> DeviceStats {
        self.stats
    }

    pub fn battery(&self) -> BatteryModel {
        self.battery
    }

    /// Swaps the cell model; the charge state resets to full.
    pub fn set_battery(&mut self, battery: BatteryModel) {
        self.battery = battery;
        self.charge_mah = battery.capacity_mah;
    }

    pub fn charge_mah(&self) -> f64 {
        self.charge_mah
    }

    pub fn buffered_bytes(&self) -> usize {
        self.uart_buf_bytes
    }

    pub fn buffered_frames(&self) -> usize {
        self.uart_buf.len()
    }

    pub fn pending_ecg(&self) -> usize {
        self.ecg_queue.len()
    }

    /// Queues raw ECG codes for the sampling timer to pick up.
    pub fn push_ecg(&mut self, codes: &[i16]) {
        self.ecg_queue.extend(codes.iter().copied());
    }

    /// Updates the scalar sensor snapshot carried by vitals frames.
    pub fn set_vitals(&mut self, vitals: VitalSnapshot) {
        self.vitals = vitals;
    }

    pub fn set_motion(&mut self, moving: bool) {
        self.vitals.motion = Some(moving);
    }

    pub fn set_bcts(&mut self, level: bool) {
        self.pins.bcts = level;
    }

    pub fn set_en(&mut self, level: bool) {
        self.pins.en = level;
    }

    fn draw_ma(&self) -> f64 {
        match self.mcu {
            McuState::Sleep => self.profile.mcu_sleep_ma,
            // The BLE link is driven from the same dwell that services the
            // frame, so transmit current rides on top of the active draw.
            McuState::Active if self.pending_brts > 0 => {
                self.profile.mcu_active_ma + self.profile.ble_tx_ma
            }
            McuState::Active => self.profile.mcu_active_ma,
        }
    }

    fn frame_time(&self) -> f64 {
        self.next_frame_tick as f64 * (self.cfg.frame_batch as f64 / self.cfg.fs)
    }

    fn vitals_time(&self) -> f64 {
        self.next_vitals_tick as f64 * self.cfg.vitals_period_s
    }

    fn wake(&mut self, t: f64, source: InterruptSource, report: &mut StepReport) {
        self.stats.interrupts += 1;
        self.pins.brts = false;
        report.events.push(DeviceEvent::Interrupt { t, source });
        self.mcu = McuState::Active;
        let until = t + self.cfg.service_time_s;
        self.active_until = Some(self.active_until.map_or(until, |u| u.max(until)));
    }

    fn dispatch_frame(&mut self, frame: Vec<u8>, t: f64, report: &mut StepReport) {
        self.stats.frames_generated += 1;
        if self.pins.bcts {
            self.emit_frame(frame, t, report);
        } else {
            self.buffer_frame(frame, t, report);
        }
    }

    fn emit_frame(&mut self, frame: Vec<u8>, t: f64, report: &mut StepReport) {
        self.stats.frames_emitted += 1;
        self.stats.bytes_emitted += frame.len() as u64;
        self.pending_brts += 1;
        report.events.push(DeviceEvent::FrameEmitted { t, len: frame.len() });
        report.emitted.extend_from_slice(&frame);
    }

    fn buffer_frame(&mut self, frame: Vec<u8>, t: f64, report: &mut StepReport) {
        let mut dropped = 0;
        while !self.uart_buf.is_empty() && self.uart_buf_bytes + frame.len() > self.cfg.uart_buf_cap
        {
            let old = self.uart_buf.pop_front().expect("non-empty");
            self.uart_buf_bytes -= old.len();
            dropped += 1;
        }
        if dropped > 0 {
            self.stats.frames_dropped += dropped as u64;
            report.events.push(DeviceEvent::BufferOverflow { t, dropped_frames: dropped });
        }
        self.uart_buf_bytes += frame.len();
        self.stats.frames_buffered += 1;
        report.events.push(DeviceEvent::FrameBuffered { t, len: frame.len() });
        self.uart_buf.push_back(frame);
    }

    fn drain_buffer(&mut self, t: f64, report: &mut StepReport) {
        while let Some(frame) = self.uart_buf.pop_front() {
            self.uart_buf_bytes -= frame.len();
            self.emit_frame(frame, t, report);
        }
    }

    fn build_ecg_frame(&mut self) -> Option<Vec<u8>> {
        if self.ecg_queue.is_empty() {
            return None;
        }
        let take = self.cfg.frame_batch.min(self.ecg_queue.len());
        let rows: Vec<DataRow> =
            self.ecg_queue.drain(..take).map(DataRow::raw_ecg).collect();
        Some(encode_packet(&Packet::new(rows)).expect("batch fits one payload"))
    }

    fn build_vitals_frame(&self) -> Option<Vec<u8>> {
        let rows = self.vitals.rows();
        if rows.is_empty() {
            return None;
        }
        Some(encode_packet(&Packet::new(rows)).expect("vitals fit one payload"))
    }

    fn end_dwell(&mut self, t: f64, report: &mut StepReport) {
        self.mcu = McuState::Sleep;
        self.active_until = None;
        for _ in 0..self.pending_brts {
            self.stats.brts_pulses += 1;
            report.events.push(DeviceEvent::BrtsPulse { t });
        }
        if self.pending_brts > 0 {
            self.pins.brts = true;
        }
        self.pending_brts = 0;
    }

    /// Advances the model by `dt` seconds, processing every timer expiry
    /// at its exact time. Energy is the integral of the state draw over
    /// the step, so any partition of an interval consumes the same total.
    pub fn step(&mut self, dt: f64) -> Result<StepReport, DeviceError> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(DeviceError::InvalidStep { dt });
        }
        let mut report = StepReport { emitted: Vec::new(), events: Vec::new(), energy_mah: 0.0 };
        let end = self.clock_s + dt;

        // Frames parked while BCTS was low flush as soon as a step sees it
        // high again.
        if self.pins.bcts && !self.uart_buf.is_empty() {
            let t = self.clock_s;
            self.wake(t, InterruptSource::FlowResume, &mut report);
            self.drain_buffer(t, &mut report);
        }

        while self.clock_s < end {
            let mut next = end;
            for t in [Some(self.frame_time()), Some(self.vitals_time()), self.active_until]
                .into_iter()
                .flatten()
            {
                if t > self.clock_s && t < next {
                    next = t;
                }
            }

            let dwell_h = (next - self.clock_s) / 3600.0;
            report.energy_mah += dwell_h * self.draw_ma();
            self.clock_s = next;

            if self.active_until == Some(next) {
                self.end_dwell(next, &mut report);
            }
            if self.frame_time() == next {
                self.next_frame_tick += 1;
                if let Some(frame) = self.build_ecg_frame() {
                    self.wake(next, InterruptSource::SampleTimer, &mut report);
                    self.dispatch_frame(frame, next, &mut report);
                }
            }
            if self.vitals_time() == next {
                self.next_vitals_tick += 1;
                if let Some(frame) = self.build_vitals_frame() {
                    self.wake(next, InterruptSource::VitalsTimer, &mut report);
                    self.dispatch_frame(frame, next, &mut report);
                }
            }
        }

        self.charge_mah = (self.charge_mah - report.energy_mah).max(0.0);
        Ok(report)
    }
}
