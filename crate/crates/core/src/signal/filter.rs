//! Biquad design (bilinear-transform cookbook) and direct-form filtering.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::SignalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Notch,
    Lowpass,
    Highpass,
    Custom,
}

/// Design metadata kept alongside the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterMeta {
    pub kind: FilterKind,
    /// Center (notch) or cutoff frequency in Hz; 0 for custom specs.
    pub f_hz: f64,
    pub fs: f64,
    pub q: f64,
}

/// Transfer function `H(z) = num(z) / den(z)` with `den[0] == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    num: Vec<f64>,
    den: Vec<f64>,
    pub meta: FilterMeta,
}

impl FilterSpec {
    /// Pass-through filter.
    pub fn identity() -> Self {
        Self {
            num: vec![1.0],
            den: vec![1.0],
            meta: FilterMeta { kind: FilterKind::Custom, f_hz: 0.0, fs: 0.0, q: 0.0 },
        }
    }

    /// Wraps raw coefficients, normalizing the leading denominator
    /// coefficient to one and rejecting unstable denominators.
    pub fn from_coefficients(num: Vec<f64>, den: Vec<f64>) -> Result<Self, SignalError> {
        if den.is_empty() || den[0] == 0.0 || num.is_empty() {
            return Err(SignalError::Parameter(
                "filter needs non-empty coefficients and a nonzero leading denominator".into(),
            ));
        }
        let a0 = den[0];
        let num = num.iter().map(|b| b / a0).collect();
        let den: Vec<f64> = den.iter().map(|a| a / a0).collect();
        let spec = Self {
            num,
            den,
            meta: FilterMeta { kind: FilterKind::Custom, f_hz: 0.0, fs: 0.0, q: 0.0 },
        };
        if !spec.is_stable() {
            return Err(SignalError::Parameter("denominator roots outside the unit circle".into()));
        }
        Ok(spec)
    }

    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    /// Schur-Cohn test: all denominator roots strictly inside the unit
    /// circle. FIR specs are trivially stable.
    pub fn is_stable(&self) -> bool {
        let mut a: Vec<f64> = self.den.clone();
        while a.len() > 1 {
            let k = *a.last().expect("non-empty");
            if k.abs() >= 1.0 {
                return false;
            }
            let n = a.len() - 1;
            let scale = 1.0 - k * k;
            let mut next = Vec::with_capacity(n);
            for i in 0..n {
                next.push((a[i] - k * a[n - i]) / scale);
            }
            a = next;
        }
        true
    }

    /// Runs the direct-form difference equation with zero initial state.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; input.len()];
        for n in 0..input.len() {
            let mut acc = 0.0;
            for (k, &b) in self.num.iter().enumerate() {
                if n >= k {
                    acc += b * input[n - k];
                }
            }
            for (k, &a) in self.den.iter().enumerate().skip(1) {
                if n >= k {
                    acc -= a * out[n - k];
                }
            }
            out[n] = acc;
        }
        out
    }

    /// Impulse response of length `n`.
    pub fn impulse_response(&self, n: usize) -> Vec<f64> {
        let mut impulse = vec![0.0; n];
        if n > 0 {
            impulse[0] = 1.0;
        }
        self.apply(&impulse)
    }

    /// Magnitude of `H(e^{j2πf/fs})`.
    pub fn magnitude_at(&self, f_hz: f64, fs: f64) -> f64 {
        let omega = 2.0 * PI * f_hz / fs;
        let eval = |coeffs: &[f64]| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (k, &c) in coeffs.iter().enumerate() {
                re += c * (omega * k as f64).cos();
                im -= c * (omega * k as f64).sin();
            }
            (re * re + im * im).sqrt()
        };
        let den = eval(&self.den);
        if den == 0.0 {
            return f64::INFINITY;
        }
        eval(&self.num) / den
    }

    /// Magnitude response in dB; floors at -300 dB for exact nulls.
    pub fn magnitude_db_at(&self, f_hz: f64, fs: f64) -> f64 {
        let mag = self.magnitude_at(f_hz, fs);
        if mag > 0.0 {
            20.0 * mag.log10()
        } else {
            -300.0
        }
    }
}

/// Designs a second-order section for the requested kind. `q` sets the
/// notch selectivity or the low/high-pass resonance (0.707 = Butterworth).
pub fn design_filter(kind: FilterKind, f_hz: f64, fs: f64, q: f64) -> Result<FilterSpec, SignalError> {
    if !fs.is_finite() || fs <= 0.0 {
        return Err(SignalError::Parameter(format!("sample rate {fs} Hz must be positive")));
    }
    if !f_hz.is_finite() || f_hz <= 0.0 || f_hz >= fs / 2.0 {
        return Err(SignalError::FrequencyRange { f_hz, fs });
    }
    if !q.is_finite() || q <= 0.0 {
        return Err(SignalError::Parameter(format!("q {q} must be positive")));
    }
    let omega = 2.0 * PI * f_hz / fs;
    let (sin_w, cos_w) = omega.sin_cos();
    let alpha = sin_w / (2.0 * q);

    let (b0, b1, b2) = match kind {
        FilterKind::Notch => (1.0, -2.0 * cos_w, 1.0),
        FilterKind::Lowpass => {
            let b1 = 1.0 - cos_w;
            (b1 / 2.0, b1, b1 / 2.0)
        }
        FilterKind::Highpass => {
            let b1 = -(1.0 + cos_w);
            (-b1 / 2.0, b1, -b1 / 2.0)
        }
        FilterKind::Custom => {
            return Err(SignalError::Parameter(
                "custom specs come from FilterSpec::from_coefficients".into(),
            ))
        }
    };
    let a0 = 1.0 + alpha;
    let a1 = -2.0 * cos_w;
    let a2 = 1.0 - alpha;

    Ok(FilterSpec {
        num: vec![b0 / a0, b1 / a0, b2 / a0],
        den: vec![1.0, a1 / a0, a2 / a0],
        meta: FilterMeta { kind, f_hz, fs, q },
    })
}
