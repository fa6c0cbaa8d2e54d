//! QRS detection: band-pass, derivative, squaring, moving-window
//! integration and adaptive thresholding, with the detected fiducial
//! refined back onto the raw waveform.

use crate::signal::{design_filter, FilterKind};

use super::MonitorError;

/// Detector tuning; defaults are the standard values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrsConfig {
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    /// Moving integration window, seconds.
    pub integration_window_s: f64,
    /// Minimum separation between beats, seconds.
    pub refractory_s: f64,
}

impl Default for QrsConfig {
    fn default() -> Self {
        Self {
            band_lo_hz: 5.0,
            band_hi_hz: 15.0,
            integration_window_s: 0.150,
            refractory_s: 0.200,
        }
    }
}

/// Finds R-peak sample indices. Needs at least two seconds of signal to
/// seed the adaptive thresholds.
pub fn detect_qrs(samples: &[f64], fs: f64) -> Result<Vec<usize>, MonitorError> {
    detect_qrs_with(samples, fs, &QrsConfig::default())
}

pub fn detect_qrs_with(
    samples: &[f64],
    fs: f64,
    cfg: &QrsConfig,
) -> Result<Vec<usize>, MonitorError> {
    if !fs.is_finite() || fs <= 0.0 {
        return Err(MonitorError::Parameter(format!("sample rate {fs} Hz must be positive")));
    }
    let needed = (2.0 * fs).ceil() as usize;
    if samples.len() < needed {
        return Err(MonitorError::InsufficientData { needed, got: samples.len() });
    }

    let hp = design_filter(FilterKind::Highpass, cfg.band_lo_hz, fs, 0.707)
        .map_err(|e| MonitorError::Parameter(e.to_string()))?;
    let lp = design_filter(FilterKind::Lowpass, cfg.band_hi_hz, fs, 0.707)
        .map_err(|e| MonitorError::Parameter(e.to_string()))?;
    let bp = lp.apply(&hp.apply(samples));

    // Five-point derivative, then squaring.
    let n = bp.len();
    let mut squared = vec![0.0; n];
    for i in 4..n {
        let d = (2.0 * bp[i] + bp[i - 1] - bp[i - 3] - 2.0 * bp[i - 4]) / 8.0;
        squared[i] = d * d;
    }

    // Moving-window integral.
    let window = ((cfg.integration_window_s * fs).round() as usize).max(1);
    let mut mwi = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += squared[i];
        if i >= window {
            acc -= squared[i - window];
        }
        mwi[i] = acc / window as f64;
    }

    // Local maxima of the integrated signal.
    let mut maxima: Vec<(usize, f64)> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1] && mwi[i] > 0.0 {
            maxima.push((i, mwi[i]));
        }
    }

    // Threshold seeding from the first two seconds.
    let seed_len = needed.min(n);
    let seed_max = mwi[..seed_len].iter().cloned().fold(0.0f64, f64::max);
    let seed_mean = mwi[..seed_len].iter().sum::<f64>() / seed_len as f64;
    let mut spki = 0.25 * seed_max;
    let mut npki = 0.5 * seed_mean;
    let threshold = |spki: f64, npki: f64| npki + 0.25 * (spki - npki);

    let refractory = (cfg.refractory_s * fs).round() as usize;
    let mut fiducials: Vec<usize> = Vec::new();
    let mut rr_intervals: Vec<usize> = Vec::new();
    let mut last_peak: Option<usize> = None;

    let accept = |idx: usize,
                      value: f64,
                      weight: f64,
                      spki: &mut f64,
                      last_peak: &mut Option<usize>,
                      rr_intervals: &mut Vec<usize>,
                      fiducials: &mut Vec<usize>| {
        *spki = weight * value + (1.0 - weight) * *spki;
        if let Some(prev) = *last_peak {
            rr_intervals.push(idx - prev);
            if rr_intervals.len() > 8 {
                rr_intervals.remove(0);
            }
        }
        *last_peak = Some(idx);
        fiducials.push(idx);
    };

    let mut k = 0;
    while k < maxima.len() {
        let (idx, value) = maxima[k];
        let inside_refractory = last_peak.is_some_and(|p| idx < p + refractory);
        if !inside_refractory && value > threshold(spki, npki) {
            accept(idx, value, 0.125, &mut spki, &mut last_peak, &mut rr_intervals, &mut fiducials);
        } else if !inside_refractory {
            npki = 0.125 * value + 0.875 * npki;
            // Searchback: when a whole expected beat went missing, rescan
            // the gap with half the threshold.
            if let (Some(prev), false) = (last_peak, rr_intervals.is_empty()) {
                let rr_avg = rr_intervals.iter().sum::<usize>() as f64
                    / rr_intervals.len() as f64;
                if (idx - prev) as f64 > 1.66 * rr_avg {
                    let half = 0.5 * threshold(spki, npki);
                    let missed = maxima[..k]
                        .iter()
                        .rev()
                        .take_while(|(i, _)| *i > prev + refractory)
                        .filter(|(_, v)| *v > half)
                        .max_by(|a, b| a.1.total_cmp(&b.1))
                        .copied();
                    if let Some((mi, mv)) = missed {
                        accept(
                            mi,
                            mv,
                            0.25,
                            &mut spki,
                            &mut last_peak,
                            &mut rr_intervals,
                            &mut fiducials,
                        );
                    }
                }
            }
        }
        k += 1;
    }
    fiducials.sort_unstable();

    // Refine each integrated-signal fiducial back to the raw R peak: first
    // the band-passed maximum in the integration lookback, then the raw
    // maximum in its close neighborhood.
    let lookback = (0.200 * fs).round() as usize;
    let near = (0.050 * fs).round() as usize;
    let mut peaks: Vec<usize> = Vec::new();
    for &f in &fiducials {
        let lo = f.saturating_sub(lookback);
        let bp_peak = (lo..=f).max_by(|&a, &b| bp[a].total_cmp(&bp[b])).unwrap_or(f);
        let lo = bp_peak.saturating_sub(near);
        let hi = (bp_peak + near).min(n - 1);
        let raw_peak = (lo..=hi)
            .max_by(|&a, &b| samples[a].total_cmp(&samples[b]))
            .unwrap_or(bp_peak);
        if peaks.last().is_none_or(|&p| raw_peak >= p + refractory) {
            peaks.push(raw_peak);
        }
    }
    Ok(peaks)
}

/// Mean rate over the peak train: `60 * fs / mean(successive differences)`.
pub fn hr_from_peaks(peaks: &[usize], fs: f64) -> Result<f64, MonitorError> {
    if peaks.len() < 2 {
        return Err(MonitorError::InsufficientData { needed: 2, got: peaks.len() });
    }
    let total = (peaks[peaks.len() - 1] - peaks[0]) as f64;
    let mean_rr = total / (peaks.len() - 1) as f64;
    Ok(60.0 * fs / mean_rr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_ecg, EcgTemplate};

    #[test]
    fn clean_sixty_bpm_recovers_all_beats() {
        let ecg = gen_ecg(60.0, 512.0, 10.0, &EcgTemplate::default()).unwrap();
        let peaks = detect_qrs(&ecg.stream.samples, 512.0).unwrap();
        assert_eq!(peaks.len(), ecg.r_peaks.len());
        for (got, want) in peaks.iter().zip(&ecg.r_peaks) {
            assert!(
                got.abs_diff(*want) <= 10,
                "detected {got} vs ground truth {want}"
            );
        }
    }

    #[test]
    fn silence_has_no_beats() {
        let peaks = detect_qrs(&vec![0.0; 5120], 512.0).unwrap();
        assert!(peaks.is_empty());
    }

    #[test]
    fn short_stream_is_insufficient() {
        let err = detect_qrs(&vec![0.0; 100], 512.0).unwrap_err();
        assert!(matches!(err, MonitorError::InsufficientData { .. }));
    }

    #[test]
    fn peaks_respect_the_refractory_gap() {
        let ecg = gen_ecg(150.0, 512.0, 20.0, &EcgTemplate::default()).unwrap();
        let peaks = detect_qrs(&ecg.stream.samples, 512.0).unwrap();
        let min_gap = (0.2 * 512.0) as usize;
        for pair in peaks.windows(2) {
            assert!(pair[1] - pair[0] >= min_gap);
        }
    }

    #[test]
    fn rate_from_uniform_peaks() {
        let peaks: Vec<usize> = (0..10).map(|i| i * 512).collect();
        assert_eq!(hr_from_peaks(&peaks, 512.0).unwrap(), 60.0);
        assert_eq!(hr_from_peaks(&[0, 256, 512], 512.0).unwrap(), 120.0);
    }

    #[test]
    fn one_peak_is_not_a_rate() {
        let err = hr_from_peaks(&[100], 512.0).unwrap_err();
        assert!(matches!(err, MonitorError::InsufficientData { needed: 2, got: 1 }));
    }
}
