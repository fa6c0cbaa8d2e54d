//! Millivolt-scale ECG synthesis, the four-source noise model and the
//! front-end emulation that turns analog signal into 16-bit ADC codes.

mod afe;
mod filter;
mod noise;

pub use afe::{
    adc_quantize, afe_pipeline, dequantize, AfeConfig, AfeDiagnostics, AfeOutput, DspOrder,
    NotchConfig,
};
pub use filter::{design_filter, FilterKind, FilterMeta, FilterSpec};
pub use noise::{add_noise, BaselineNoise, ContactNoise, EmgNoise, NoiseConfig, PowerlineNoise};

use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("{0}")]
    Parameter(String),
    #[error("frequency {f_hz} Hz outside (0, {}) for fs {fs} Hz", fs / 2.0)]
    FrequencyRange { f_hz: f64, fs: f64 },
    #[error("beat period {period_s:.3} s is shorter than the template span {span_s:.3} s")]
    TemplateSpan { period_s: f64, span_s: f64 },
    #[error("writing stream: {0}")]
    Io(#[from] std::io::Error),
}

/// Analog-domain samples in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogStream {
    pub fs: f64,
    pub samples: Vec<f64>,
}

/// Digital-domain 16-bit ADC codes.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalStream {
    pub fs: f64,
    pub codes: Vec<i16>,
}

impl AnalogStream {
    pub fn new(fs: f64, samples: Vec<f64>) -> Self {
        Self { fs, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Runs `spec` over the samples, zero initial state.
    pub fn filtered(&self, spec: &FilterSpec) -> Self {
        Self { fs: self.fs, samples: spec.apply(&self.samples) }
    }

    /// Writes the `index,time_s,value` exchange format.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), SignalError> {
        writeln!(w, "index,time_s,value")?;
        for (i, v) in self.samples.iter().enumerate() {
            writeln!(w, "{},{},{}", i, i as f64 / self.fs, v)?;
        }
        Ok(())
    }
}

impl DigitalStream {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Codes as floats, for filtering and analysis.
    pub fn to_f64(&self) -> Vec<f64> {
        self.codes.iter().map(|&c| f64::from(c)).collect()
    }

    /// Writes the `index,time_s,value` exchange format.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), SignalError> {
        writeln!(w, "index,time_s,value")?;
        for (i, c) in self.codes.iter().enumerate() {
            writeln!(w, "{},{},{}", i, i as f64 / self.fs, c)?;
        }
        Ok(())
    }
}

/// One Gaussian component of the beat shape. `center_s` is the offset from
/// the R peak and `width_s` the Gaussian sigma, both at the 1 s reference
/// beat; amplitudes are millivolts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub center_s: f64,
    pub width_s: f64,
    pub amplitude_mv: f64,
}

/// Sum-of-Gaussians beat morphology. Wave timings are interpreted at a
/// 60 bpm reference beat; the generator compresses centers proportionally
/// to the actual beat period and widths with its square root, the way
/// physiological intervals shorten at higher rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcgTemplate {
    pub p: Wave,
    pub q: Wave,
    pub r: Wave,
    pub s: Wave,
    pub t: Wave,
}

impl Default for EcgTemplate {
    fn default() -> Self {
        Self {
            p: Wave { center_s: -0.20, width_s: 0.025, amplitude_mv: 0.15 },
            q: Wave { center_s: -0.025, width_s: 0.010, amplitude_mv: -0.10 },
            r: Wave { center_s: 0.0, width_s: 0.010, amplitude_mv: 1.00 },
            s: Wave { center_s: 0.025, width_s: 0.010, amplitude_mv: -0.25 },
            t: Wave { center_s: 0.30, width_s: 0.050, amplitude_mv: 0.30 },
        }
    }
}

impl EcgTemplate {
    pub fn waves(&self) -> [Wave; 5] {
        [self.p, self.q, self.r, self.s, self.t]
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        for w in self.waves() {
            if !w.width_s.is_finite() || w.width_s <= 0.0 {
                return Err(SignalError::Parameter(format!(
                    "wave width {} s must be positive",
                    w.width_s
                )));
            }
        }
        let r = self.r.amplitude_mv;
        for w in [self.p, self.q, self.s, self.t] {
            if w.amplitude_mv.abs() >= r {
                return Err(SignalError::Parameter(
                    "R amplitude must dominate the other waves".into(),
                ));
            }
        }
        Ok(())
    }

    /// Span covered by all waves (out to 3 sigma) after scaling to a beat
    /// of `period_s` seconds.
    fn scaled_span(&self, period_s: f64) -> (f64, f64) {
        let cs = period_s;
        let ws = period_s.sqrt();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for w in self.waves() {
            lo = lo.min(w.center_s * cs - 3.0 * w.width_s * ws);
            hi = hi.max(w.center_s * cs + 3.0 * w.width_s * ws);
        }
        (lo, hi)
    }
}

/// Generator output: the waveform plus the ground-truth R peak positions.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgSignal {
    pub stream: AnalogStream,
    /// Sample index of each R peak, strictly increasing.
    pub r_peaks: Vec<usize>,
}

/// Synthesizes a periodic ECG at `hr_bpm`. Beats are centered so the first
/// R peak falls half a period into the stream.
pub fn gen_ecg(
    hr_bpm: f64,
    fs: f64,
    duration_s: f64,
    template: &EcgTemplate,
) -> Result<EcgSignal, SignalError> {
    if !hr_bpm.is_finite() || hr_bpm <= 0.0 {
        return Err(SignalError::Parameter(format!("heart rate {hr_bpm} bpm must be positive")));
    }
    if !fs.is_finite() || fs <= 0.0 {
        return Err(SignalError::Parameter(format!("sample rate {fs} Hz must be positive")));
    }
    if !duration_s.is_finite() || duration_s < 0.0 {
        return Err(SignalError::Parameter(format!("duration {duration_s} s must be >= 0")));
    }
    template.validate()?;

    let period = 60.0 / hr_bpm;
    let (span_lo, span_hi) = template.scaled_span(period);
    let span = span_hi - span_lo;
    if span > period {
        return Err(SignalError::TemplateSpan { period_s: period, span_s: span });
    }

    let n = (duration_s * fs).round() as usize;
    let mut samples = vec![0.0; n];
    let mut r_peaks = Vec::new();
    if n == 0 {
        return Ok(EcgSignal { stream: AnalogStream::new(fs, samples), r_peaks });
    }

    let center_scale = period;
    let width_scale = period.sqrt();
    // Beats whose waves can leak into [0, duration) even if their R peak
    // does not.
    let first_beat = -1i64;
    let last_beat = (duration_s / period).ceil() as i64 + 1;
    for beat in first_beat..=last_beat {
        let r_time = (beat as f64 + 0.5) * period;
        for wave in template.waves() {
            let center = r_time + wave.center_s * center_scale;
            let sigma = wave.width_s * width_scale;
            let lo = (((center - 4.0 * sigma) * fs).floor().max(0.0)) as usize;
            let hi = ((((center + 4.0 * sigma) * fs).ceil()) as i64).min(n as i64 - 1);
            if hi < 0 {
                continue;
            }
            for i in lo..=(hi as usize) {
                let t = i as f64 / fs;
                let z = (t - center) / sigma;
                samples[i] += wave.amplitude_mv * (-0.5 * z * z).exp();
            }
        }
        if beat >= 0 && r_time < duration_s {
            let idx = (r_time * fs).round() as usize;
            if idx < n {
                r_peaks.push(idx);
            }
        }
    }

    Ok(EcgSignal { stream: AnalogStream::new(fs, samples), r_peaks })
}
