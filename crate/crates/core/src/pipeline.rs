//! End-to-end run: synthesize, corrupt, digitize, stream through the
//! virtual device and bridge, and decode on the host side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bridge::{Bridge, BridgeError, BridgeEvent, BridgeStats, Notification};
use crate::device::scenario::{ScenarioAction, ScenarioCommand};
use crate::device::{CurrentProfile, DeviceConfig, DeviceError, DeviceModel, DeviceStats, VitalSnapshot};
use crate::monitor::Session;
use crate::signal::{
    add_noise, afe_pipeline, gen_ecg, AfeConfig, AfeDiagnostics, EcgTemplate, NoiseConfig,
    SignalError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
}

/// Fully resolved run parameters. Per-source noise seeds are derived from
/// `seed`, so one number reproduces the whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub hr_bpm: f64,
    pub duration_s: f64,
    pub fs: f64,
    pub seed: u64,
    pub mtu: usize,
    pub template: EcgTemplate,
    pub noise: NoiseConfig,
    pub afe: AfeConfig,
    pub device: DeviceConfig,
    pub profile: CurrentProfile,
    /// Timed pin/connection commands. When it contains connect or
    /// disconnect commands the script owns the connection lifecycle;
    /// otherwise the link connects at t = 0.
    pub scenario: Vec<ScenarioCommand>,
}

impl PipelineConfig {
    pub fn new(hr_bpm: f64, duration_s: f64, seed: u64) -> Self {
        Self {
            hr_bpm,
            duration_s,
            fs: 512.0,
            seed,
            mtu: 23,
            template: EcgTemplate::default(),
            noise: NoiseConfig::default(),
            afe: AfeConfig::default(),
            device: DeviceConfig::default(),
            profile: CurrentProfile::default(),
            scenario: Vec::new(),
        }
    }

    /// Moves the powerline tone and the notch to the given grid frequency.
    pub fn with_notch_hz(mut self, hz: f64) -> Self {
        self.noise.powerline.freq_hz = hz;
        self.afe.notch.f0_hz = hz;
        self
    }

    /// Noise settings with the per-source seeds fanned out from the master
    /// seed; the exact streams a pipeline run will inject.
    pub fn seeded_noise(&self) -> NoiseConfig {
        let mut seeder = ChaCha8Rng::seed_from_u64(self.seed);
        let mut noise = self.noise;
        noise.emg.seed = seeder.gen();
        noise.contact.seed = seeder.gen();
        noise
    }
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub session: Session,
    pub notifications: Vec<Notification>,
    /// Generator ground-truth R peak indices.
    pub ground_truth: Vec<usize>,
    pub afe_diagnostics: AfeDiagnostics,
    pub device_stats: DeviceStats,
    pub bridge_stats: BridgeStats,
    pub energy_mah: f64,
    /// uart_in calls rejected by the bridge tx buffer while disconnected.
    pub rejected_chunks: u64,
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    // One master seed fans out to the per-source noise streams.
    let noise = cfg.seeded_noise();

    let mut device_cfg = cfg.device;
    device_cfg.fs = cfg.fs;

    let ecg = gen_ecg(cfg.hr_bpm, cfg.fs, cfg.duration_s, &cfg.template)?;
    let noisy = add_noise(&ecg.stream, &noise)?;
    let afe_out = afe_pipeline(&noisy, &cfg.afe)?;

    let mut device = DeviceModel::new(device_cfg, cfg.profile)?;
    device.push_ecg(&afe_out.stream.codes);
    device.set_vitals(VitalSnapshot {
        poor_signal: Some(0),
        heart_rate_bpm: Some(cfg.hr_bpm.round().clamp(0.0, 255.0) as u8),
        temperature_centi_c: Some(3700),
        spo2_pct: Some(98),
        motion: Some(false),
    });
    device.set_en(true);

    let mut bridge = Bridge::new();
    bridge.handle_event(BridgeEvent::PowerOn)?;
    let script_owns_link = cfg
        .scenario
        .iter()
        .any(|c| matches!(c.action, ScenarioAction::Connect | ScenarioAction::Disconnect));
    let connect = |bridge: &mut Bridge| -> Result<(), BridgeError> {
        bridge.handle_event(BridgeEvent::Connect)?;
        if cfg.mtu != bridge.mtu() {
            bridge.handle_event(BridgeEvent::MtuUpdate(cfg.mtu))?;
        }
        Ok(())
    };
    if !script_owns_link {
        connect(&mut bridge)?;
    }

    let mut session = Session::new(cfg.fs);
    let mut notifications = Vec::new();
    let mut rejected_chunks = 0u64;
    let mut energy_mah = 0.0;

    // Apply commands scheduled for t = 0 before stepping.
    let mut pending: Vec<&ScenarioCommand> =
        cfg.scenario.iter().filter(|c| c.t <= cfg.duration_s).collect();
    pending.sort_by(|a, b| a.t.total_cmp(&b.t));

    let forward = |device: &mut DeviceModel,
                       bridge: &mut Bridge,
                       session: &mut Session,
                       notifications: &mut Vec<Notification>,
                       rejected: &mut u64,
                       dt: f64|
     -> Result<f64, PipelineError> {
        let report = device.step(dt)?;
        match bridge.uart_in(&report.emitted) {
            Ok(ns) => {
                session.ingest_notifications(&ns);
                notifications.extend(ns);
            }
            Err(BridgeError::BufferOverflow { .. }) => *rejected += 1,
            Err(e) => return Err(e.into()),
        }
        Ok(report.energy_mah)
    };

    let mut clock = 0.0;
    for cmd in pending {
        if cmd.t > clock {
            energy_mah += forward(
                &mut device,
                &mut bridge,
                &mut session,
                &mut notifications,
                &mut rejected_chunks,
                cmd.t - clock,
            )?;
            clock = cmd.t;
        }
        match cmd.action {
            ScenarioAction::SetCts(level) => device.set_bcts(level),
            ScenarioAction::Motion(moving) => device.set_motion(moving),
            ScenarioAction::Connect => connect(&mut bridge)?,
            ScenarioAction::Disconnect => {
                bridge.handle_event(BridgeEvent::Disconnect)?;
            }
        }
    }
    if clock < cfg.duration_s {
        energy_mah += forward(
            &mut device,
            &mut bridge,
            &mut session,
            &mut notifications,
            &mut rejected_chunks,
            cfg.duration_s - clock,
        )?;
    }

    session.finish_stream();
    session.record_adc_saturation(afe_out.diagnostics.adc_saturation);

    Ok(PipelineOutput {
        session,
        notifications,
        ground_truth: ecg.r_peaks,
        afe_diagnostics: afe_out.diagnostics,
        device_stats: device.stats(),
        bridge_stats: bridge.stats(),
        energy_mah,
        rejected_chunks,
    })
}
