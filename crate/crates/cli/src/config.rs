//! Run configuration: defaults, JSON config file, command-line flags.
//! Flags win over the file; the fully resolved configuration is written
//! back to the output directory so a run can be reproduced from it.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use ecglink_core::device::scenario::{parse_scenario, ScenarioCommand};
use ecglink_core::device::{
    BatteryModel, ComponentSpec, CurrentProfile, DeviceConfig, DutyCycle, PowerRail,
    CHARGE_RESISTOR_MIN_KOHM,
};
use ecglink_core::pipeline::PipelineConfig;
use ecglink_core::signal::{AfeConfig, NoiseConfig};

/// Flags shared by the run-style subcommands.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Heart rate of the synthetic subject, bpm.
    #[arg(long)]
    pub hr: Option<f64>,
    /// Run length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// ECG sample rate in Hz.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// BLE MTU in bytes (23..=251).
    #[arg(long)]
    pub mtu: Option<usize>,
    /// Mains grid frequency; moves both the interference tone and the
    /// notch.
    #[arg(long, value_parser = ["50", "60"])]
    pub notch: Option<String>,
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Device-side settings in the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceSection {
    pub cadence: DeviceConfig,
    pub current_profile: CurrentProfile,
    pub battery: BatteryModel,
    pub duty: DutyCycle,
    pub resistor_kohm: f64,
    /// Components/rails for rails-check; the reference build when absent.
    pub components: Option<Vec<ComponentSpec>>,
    pub rails: Option<Vec<PowerRail>>,
    /// Path to a timed command script driving pins and the connection.
    pub scenario: Option<PathBuf>,
}

impl Default for DeviceSection {
    fn default() -> Self {
        Self {
            cadence: DeviceConfig::default(),
            current_profile: CurrentProfile::default(),
            battery: BatteryModel::default(),
            duty: DutyCycle::default(),
            resistor_kohm: CHARGE_RESISTOR_MIN_KOHM,
            components: None,
            rails: None,
            scenario: None,
        }
    }
}

/// On-disk config shape; every key optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    hr: Option<f64>,
    duration: Option<f64>,
    fs: Option<f64>,
    seed: Option<u64>,
    mtu: Option<usize>,
    notch: Option<f64>,
    noise: Option<NoiseConfig>,
    afe: Option<AfeConfig>,
    device: Option<DeviceSection>,
}

/// Fully resolved run settings; serialized to `run.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub hr: f64,
    pub duration: f64,
    pub fs: f64,
    pub seed: u64,
    pub mtu: usize,
    pub notch: f64,
    pub noise: NoiseConfig,
    pub afe: AfeConfig,
    pub device: DeviceSection,
}

impl ResolvedConfig {
    /// Defaults, then the config file, then flags.
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let mut resolved = Self {
            hr: 60.0,
            duration: 10.0,
            fs: 512.0,
            seed: 0,
            mtu: 23,
            notch: 50.0,
            noise: file.noise.unwrap_or_default(),
            afe: file.afe.unwrap_or_default(),
            device: file.device.unwrap_or_default(),
        };
        if let Some(v) = file.hr {
            resolved.hr = v;
        }
        if let Some(v) = file.duration {
            resolved.duration = v;
        }
        if let Some(v) = file.fs {
            resolved.fs = v;
        }
        if let Some(v) = file.seed {
            resolved.seed = v;
        }
        if let Some(v) = file.mtu {
            resolved.mtu = v;
        }
        let file_notch = file.notch;

        if let Some(v) = args.hr {
            resolved.hr = v;
        }
        if let Some(v) = args.duration {
            resolved.duration = v;
        }
        if let Some(v) = args.fs {
            resolved.fs = v;
        }
        if let Some(v) = args.seed {
            resolved.seed = v;
        }
        if let Some(v) = args.mtu {
            resolved.mtu = v;
        }
        let flag_notch = args.notch.as_deref().map(|s| s.parse::<f64>().expect("validated"));
        if let Some(hz) = flag_notch.or(file_notch) {
            if hz != 50.0 && hz != 60.0 {
                bail!("notch must be 50 or 60 Hz, got {hz}");
            }
            resolved.notch = hz;
            resolved.noise.powerline.freq_hz = hz;
            resolved.afe.notch.f0_hz = hz;
        } else {
            resolved.notch = resolved.afe.notch.f0_hz;
        }
        Ok(resolved)
    }

    /// Loads and parses the scenario script, if one is configured.
    pub fn scenario_commands(&self) -> Result<Vec<ScenarioCommand>> {
        match &self.device.scenario {
            None => Ok(Vec::new()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading scenario {}", path.display()))?;
                Ok(parse_scenario(&text)?)
            }
        }
    }

    /// Pipeline settings for e2e/simulate runs.
    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::new(self.hr, self.duration, self.seed);
        cfg.fs = self.fs;
        cfg.mtu = self.mtu;
        cfg.noise = self.noise;
        cfg.afe = self.afe;
        cfg.device = self.device.cadence;
        cfg.device.fs = self.fs;
        cfg.profile = self.device.current_profile;
        cfg.scenario = self.scenario_commands()?;
        Ok(cfg)
    }

    /// Writes the resolved settings into the output directory.
    pub fn write_run_json(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("run.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
