//! The four acquisition noise sources: baseline drift, power frequency
//! interference, muscle (EMG) noise and electrode contact transients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{design_filter, AnalogStream, FilterKind, SignalError};

/// Sub-hertz sinusoidal drift from respiration and electrode motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineNoise {
    pub freq_hz: f64,
    pub amplitude_mv: f64,
}

impl Default for BaselineNoise {
    fn default() -> Self {
        Self { freq_hz: 0.25, amplitude_mv: 0.1 }
    }
}

/// Mains interference; only 50 and 60 Hz grids exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerlineNoise {
    pub freq_hz: f64,
    pub amplitude_mv: f64,
}

impl Default for PowerlineNoise {
    fn default() -> Self {
        Self { freq_hz: 50.0, amplitude_mv: 0.3 }
    }
}

/// Band-limited Gaussian muscle noise at a target RMS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmgNoise {
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub rms_mv: f64,
    pub seed: u64,
}

impl Default for EmgNoise {
    fn default() -> Self {
        Self { band_lo_hz: 20.0, band_hi_hz: 150.0, rms_mv: 0.05, seed: 0 }
    }
}

/// Random-onset steps with exponential recovery, modelling electrode
/// contact disturbances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactNoise {
    pub rate_per_s: f64,
    pub step_mv: f64,
    pub decay_s: f64,
    pub seed: u64,
}

impl Default for ContactNoise {
    fn default() -> Self {
        Self { rate_per_s: 0.0, step_mv: 0.5, decay_s: 0.3, seed: 0 }
    }
}

/// A zero amplitude (or zero rate) disables the corresponding source.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub baseline: BaselineNoise,
    pub powerline: PowerlineNoise,
    pub emg: EmgNoise,
    pub contact: ContactNoise,
}

impl NoiseConfig {
    /// All sources off; output equals input exactly.
    pub fn silent() -> Self {
        Self {
            baseline: BaselineNoise { freq_hz: 0.25, amplitude_mv: 0.0 },
            powerline: PowerlineNoise { freq_hz: 50.0, amplitude_mv: 0.0 },
            emg: EmgNoise { band_lo_hz: 20.0, band_hi_hz: 150.0, rms_mv: 0.0, seed: 0 },
            contact: ContactNoise { rate_per_s: 0.0, step_mv: 0.5, decay_s: 0.3, seed: 0 },
        }
    }

    fn validate(&self, fs: f64) -> Result<(), SignalError> {
        for (name, amp) in [
            ("baseline", self.baseline.amplitude_mv),
            ("powerline", self.powerline.amplitude_mv),
            ("emg", self.emg.rms_mv),
            ("contact", self.contact.step_mv),
        ] {
            if amp < 0.0 {
                return Err(SignalError::Parameter(format!("{name} amplitude {amp} mV < 0")));
            }
        }
        if self.powerline.amplitude_mv > 0.0
            && self.powerline.freq_hz != 50.0
            && self.powerline.freq_hz != 60.0
        {
            return Err(SignalError::Parameter(format!(
                "powerline frequency {} Hz is not a 50/60 Hz grid",
                self.powerline.freq_hz
            )));
        }
        if self.emg.rms_mv > 0.0 {
            if self.emg.band_hi_hz >= fs / 2.0 {
                return Err(SignalError::FrequencyRange { f_hz: self.emg.band_hi_hz, fs });
            }
            if !(self.emg.band_lo_hz > 0.0 && self.emg.band_lo_hz < self.emg.band_hi_hz) {
                return Err(SignalError::Parameter(format!(
                    "emg band [{}, {}] Hz is not an ascending positive range",
                    self.emg.band_lo_hz, self.emg.band_hi_hz
                )));
            }
        }
        if self.contact.rate_per_s > 0.0 && (!self.contact.decay_s.is_finite() || self.contact.decay_s <= 0.0) {
            return Err(SignalError::Parameter(format!(
                "contact decay {} s must be positive",
                self.contact.decay_s
            )));
        }
        Ok(())
    }
}

/// Adds the configured sources to an analog stream. Deterministic for
/// fixed seeds; disabled sources leave the input bit-identical.
pub fn add_noise(stream: &AnalogStream, cfg: &NoiseConfig) -> Result<AnalogStream, SignalError> {
    cfg.validate(stream.fs)?;
    let fs = stream.fs;
    let n = stream.samples.len();
    let mut out = stream.samples.clone();

    if cfg.baseline.amplitude_mv > 0.0 {
        let w = 2.0 * PI * cfg.baseline.freq_hz / fs;
        for (i, s) in out.iter_mut().enumerate() {
            *s += cfg.baseline.amplitude_mv * (w * i as f64).sin();
        }
    }

    if cfg.powerline.amplitude_mv > 0.0 {
        let w = 2.0 * PI * cfg.powerline.freq_hz / fs;
        for (i, s) in out.iter_mut().enumerate() {
            *s += cfg.powerline.amplitude_mv * (w * i as f64).sin();
        }
    }

    if cfg.emg.rms_mv > 0.0 && n > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.emg.seed);
        // Box-Muller keeps the dependency surface small and the stream
        // reproducible across rand versions.
        let mut white = Vec::with_capacity(n);
        while white.len() < n {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let mag = (-2.0 * u1.ln()).sqrt();
            white.push(mag * (2.0 * PI * u2).cos());
            if white.len() < n {
                white.push(mag * (2.0 * PI * u2).sin());
            }
        }
        let hp = design_filter(FilterKind::Highpass, cfg.emg.band_lo_hz, fs, 0.707)?;
        let lp = design_filter(FilterKind::Lowpass, cfg.emg.band_hi_hz, fs, 0.707)?;
        let shaped = lp.apply(&hp.apply(&white));
        let rms = (shaped.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        if rms > 0.0 {
            let k = cfg.emg.rms_mv / rms;
            for (s, v) in out.iter_mut().zip(&shaped) {
                *s += k * v;
            }
        }
    }

    if cfg.contact.rate_per_s > 0.0 && cfg.contact.step_mv > 0.0 && n > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.contact.seed);
        let duration = n as f64 / fs;
        let mut t = 0.0;
        loop {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            t += -u.ln() / cfg.contact.rate_per_s;
            if t >= duration {
                break;
            }
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let start = (t * fs).ceil() as usize;
            for i in start..n {
                let dt = i as f64 / fs - t;
                let v = cfg.contact.step_mv * sign * (-dt / cfg.contact.decay_s).exp();
                if v.abs() < 1e-9 {
                    break;
                }
                out[i] += v;
            }
        }
    }

    Ok(AnalogStream::new(fs, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(fs: f64, n: usize) -> AnalogStream {
        AnalogStream::new(fs, vec![0.0; n])
    }

    #[test]
    fn silent_config_is_identity() {
        let input = AnalogStream::new(512.0, (0..100).map(|i| (i as f64).sin()).collect());
        let out = add_noise(&input, &NoiseConfig::silent()).unwrap();
        assert_eq!(out.samples, input.samples);
    }

    #[test]
    fn baseline_respects_its_amplitude_bound() {
        let mut cfg = NoiseConfig::silent();
        cfg.baseline = BaselineNoise { freq_hz: 0.2, amplitude_mv: 1.0 };
        let input = flat(512.0, 5120);
        let out = add_noise(&input, &cfg).unwrap();
        for (a, b) in out.samples.iter().zip(&input.samples) {
            assert!((a - b).abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn emg_band_must_stay_below_nyquist() {
        let mut cfg = NoiseConfig::silent();
        cfg.emg = EmgNoise { band_lo_hz: 20.0, band_hi_hz: 256.0, rms_mv: 0.1, seed: 1 };
        let err = add_noise(&flat(512.0, 100), &cfg).unwrap_err();
        assert!(matches!(err, SignalError::FrequencyRange { .. }));
    }

    #[test]
    fn powerline_grid_frequency_is_validated() {
        let mut cfg = NoiseConfig::silent();
        cfg.powerline = PowerlineNoise { freq_hz: 55.0, amplitude_mv: 0.1 };
        assert!(add_noise(&flat(512.0, 10), &cfg).is_err());
        cfg.powerline.freq_hz = 60.0;
        assert!(add_noise(&flat(512.0, 10), &cfg).is_ok());
    }

    #[test]
    fn emg_hits_requested_rms_and_is_deterministic() {
        let mut cfg = NoiseConfig::silent();
        cfg.emg = EmgNoise { band_lo_hz: 20.0, band_hi_hz: 150.0, rms_mv: 0.05, seed: 42 };
        let a = add_noise(&flat(512.0, 10240), &cfg).unwrap();
        let b = add_noise(&flat(512.0, 10240), &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        let rms = (a.samples.iter().map(|v| v * v).sum::<f64>() / a.len() as f64).sqrt();
        assert!((rms - 0.05).abs() < 1e-12, "rms {rms}");

        cfg.emg.seed = 43;
        let c = add_noise(&flat(512.0, 10240), &cfg).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn contact_events_decay_exponentially() {
        let mut cfg = NoiseConfig::silent();
        cfg.contact = ContactNoise { rate_per_s: 2.0, step_mv: 0.5, decay_s: 0.1, seed: 7 };
        let out = add_noise(&flat(512.0, 5120), &cfg).unwrap();
        let peak = out.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak > 0.0, "expected at least one event in 10 s at 2/s");
        // A single event never exceeds the step amplitude; coincident
        // overlaps of a handful are the worst case.
        assert!(peak <= 5.0 * 0.5);
    }
}
