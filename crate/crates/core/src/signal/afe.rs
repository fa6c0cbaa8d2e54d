//! Analog front end and DSP chain emulation: high-pass, amplifier, 16-bit
//! quantizer, then notch and low-pass filtering of the codes.

use serde::{Deserialize, Serialize};

use super::{design_filter, AnalogStream, DigitalStream, FilterKind, SignalError};

/// Which digital filter runs first after the ADC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DspOrder {
    NotchFirst,
    LowpassFirst,
}

/// Notch parameters of the DSP stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NotchConfig {
    pub f0_hz: f64,
    pub q: f64,
}

impl Default for NotchConfig {
    fn default() -> Self {
        Self { f0_hz: 50.0, q: 30.0 }
    }
}

/// Front-end parameters. `adc_full_scale_mv` is the post-gain signal level
/// that maps to full code (+32767).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AfeConfig {
    pub hpf_cutoff_hz: f64,
    pub lna_gain: f64,
    pub adc_bits: u32,
    pub adc_full_scale_mv: f64,
    pub notch: NotchConfig,
    pub lpf_cutoff_hz: f64,
    pub dsp_order: DspOrder,
}

impl Default for AfeConfig {
    fn default() -> Self {
        Self {
            hpf_cutoff_hz: 0.5,
            lna_gain: 1.0,
            adc_bits: 16,
            adc_full_scale_mv: 3.0,
            notch: NotchConfig::default(),
            lpf_cutoff_hz: 40.0,
            dsp_order: DspOrder::NotchFirst,
        }
    }
}

impl AfeConfig {
    fn validate(&self, fs: f64) -> Result<(), SignalError> {
        if self.adc_bits != 16 {
            return Err(SignalError::Parameter(format!(
                "converter is 16-bit; adc_bits {} unsupported",
                self.adc_bits
            )));
        }
        if !self.adc_full_scale_mv.is_finite() || self.adc_full_scale_mv <= 0.0 {
            return Err(SignalError::Parameter(format!(
                "full scale {} mV must be positive",
                self.adc_full_scale_mv
            )));
        }
        if !self.lna_gain.is_finite() || self.lna_gain <= 0.0 {
            return Err(SignalError::Parameter(format!("gain {} must be positive", self.lna_gain)));
        }
        let nyquist = fs / 2.0;
        if !(self.hpf_cutoff_hz > 0.0) || !(self.hpf_cutoff_hz < self.notch.f0_hz) {
            return Err(SignalError::Parameter(format!(
                "high-pass cutoff {} Hz must sit below the notch at {} Hz",
                self.hpf_cutoff_hz, self.notch.f0_hz
            )));
        }
        if !(self.notch.f0_hz < nyquist) {
            return Err(SignalError::FrequencyRange { f_hz: self.notch.f0_hz, fs });
        }
        if !(self.hpf_cutoff_hz < self.lpf_cutoff_hz && self.lpf_cutoff_hz < nyquist) {
            return Err(SignalError::FrequencyRange { f_hz: self.lpf_cutoff_hz, fs });
        }
        Ok(())
    }
}

/// Per-stage counters from one pipeline run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AfeDiagnostics {
    /// Samples clamped by the quantizer.
    pub adc_saturation: usize,
    /// Samples clamped when re-rounding after the digital filters.
    pub filter_saturation: usize,
    /// Mean of the output codes, in LSB; the high-pass should hold it
    /// near zero.
    pub dc_residue_lsb: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfeOutput {
    pub stream: DigitalStream,
    pub diagnostics: AfeDiagnostics,
}

const CODE_MAX: f64 = 32767.0;
const CODE_MIN: f64 = -32768.0;

fn round_saturating(value: f64, saturated: &mut usize) -> i16 {
    let code = value.round();
    if code > CODE_MAX {
        *saturated += 1;
        i16::MAX
    } else if code < CODE_MIN {
        *saturated += 1;
        i16::MIN
    } else {
        code as i16
    }
}

/// Maps millivolts to signed 16-bit codes: `round(v / full_scale * 32767)`
/// clamped to the code range. Returns the stream and the clamp count.
pub fn adc_quantize(
    stream: &AnalogStream,
    cfg: &AfeConfig,
) -> Result<(DigitalStream, usize), SignalError> {
    if cfg.adc_bits != 16 {
        return Err(SignalError::Parameter(format!(
            "converter is 16-bit; adc_bits {} unsupported",
            cfg.adc_bits
        )));
    }
    if !cfg.adc_full_scale_mv.is_finite() || cfg.adc_full_scale_mv <= 0.0 {
        return Err(SignalError::Parameter(format!(
            "full scale {} mV must be positive",
            cfg.adc_full_scale_mv
        )));
    }
    let mut saturated = 0usize;
    let codes = stream
        .samples
        .iter()
        .map(|&mv| round_saturating(mv / cfg.adc_full_scale_mv * CODE_MAX, &mut saturated))
        .collect();
    Ok((DigitalStream { fs: stream.fs, codes }, saturated))
}

/// Millivolt value a code maps back to.
pub fn dequantize(code: i16, cfg: &AfeConfig) -> f64 {
    f64::from(code) / CODE_MAX * cfg.adc_full_scale_mv
}

/// Full front-end run. Stage order is fixed: high-pass, gain, quantizer,
/// then the two digital filters in `cfg.dsp_order`.
pub fn afe_pipeline(stream: &AnalogStream, cfg: &AfeConfig) -> Result<AfeOutput, SignalError> {
    cfg.validate(stream.fs)?;
    let fs = stream.fs;

    let hp = design_filter(FilterKind::Highpass, cfg.hpf_cutoff_hz, fs, 0.707)?;
    let mut analog = hp.apply(&stream.samples);
    for v in &mut analog {
        *v *= cfg.lna_gain;
    }

    let (digital, adc_saturation) = adc_quantize(&AnalogStream::new(fs, analog), cfg)?;

    let notch = design_filter(FilterKind::Notch, cfg.notch.f0_hz, fs, cfg.notch.q)?;
    let lp = design_filter(FilterKind::Lowpass, cfg.lpf_cutoff_hz, fs, 0.707)?;
    let values = digital.to_f64();
    let filtered = match cfg.dsp_order {
        DspOrder::NotchFirst => lp.apply(&notch.apply(&values)),
        DspOrder::LowpassFirst => notch.apply(&lp.apply(&values)),
    };

    let mut filter_saturation = 0usize;
    let codes: Vec<i16> = filtered
        .iter()
        .map(|&v| round_saturating(v, &mut filter_saturation))
        .collect();
    let dc_residue_lsb = if codes.is_empty() {
        0.0
    } else {
        codes.iter().map(|&c| f64::from(c)).sum::<f64>() / codes.len() as f64
    };

    Ok(AfeOutput {
        stream: DigitalStream { fs, codes },
        diagnostics: AfeDiagnostics { adc_saturation, filter_saturation, dc_residue_lsb },
    })
}
