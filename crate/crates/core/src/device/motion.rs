//! Accelerometer-based motion gating: a window is flagged when the
//! acceleration vector's standard deviation exceeds the threshold.

use super::DeviceError;

/// Flags each window of the three-axis stream. Windows partition the
/// stream in order; a trailing partial window is evaluated like any other.
///
/// The motion measure is the standard deviation of the acceleration vector
/// within the window, `sqrt(var_x + var_y + var_z)` in g, so any rigid
/// resting orientation scores zero while a +/-0.5 g toggle on one axis
/// scores exactly 0.5.
pub fn motion_gate(
    x: &[f64],
    y: &[f64],
    z: &[f64],
    fs: f64,
    window_s: f64,
    threshold_g: f64,
) -> Result<Vec<bool>, DeviceError> {
    if x.len() != y.len() || y.len() != z.len() {
        return Err(DeviceError::Parameter(format!(
            "axis streams differ in length: {} / {} / {}",
            x.len(),
            y.len(),
            z.len()
        )));
    }
    if !fs.is_finite() || fs <= 0.0 {
        return Err(DeviceError::Parameter(format!("sample rate {fs} Hz must be positive")));
    }
    let window = (window_s * fs).round() as usize;
    if window < 2 {
        return Err(DeviceError::WindowTooShort { samples: window });
    }

    let axis_var = |chunk: &[f64]| {
        let n = chunk.len() as f64;
        let mean = chunk.iter().sum::<f64>() / n;
        chunk.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
    };

    let n = x.len();
    let mut flags = Vec::with_capacity(n.div_ceil(window));
    let mut start = 0;
    while start < n {
        let end = (start + window).min(n);
        let var = axis_var(&x[start..end]) + axis_var(&y[start..end]) + axis_var(&z[start..end]);
        flags.push(var.sqrt() > threshold_g);
        start = end;
    }
    Ok(flags)
}
