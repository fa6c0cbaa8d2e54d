//! Spectral and numerical oracles for the signal chain. The FFT here is an
//! independent check on the time-domain filters, not a reuse of them.

use ecglink_core::signal::{
    adc_quantize, add_noise, afe_pipeline, dequantize, design_filter, gen_ecg, AfeConfig,
    AnalogStream, EcgTemplate, FilterKind, FilterSpec, NoiseConfig,
};
use proptest::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};

/// Single-sided amplitude spectrum of a real signal.
fn amplitude_spectrum(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> =
        samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().take(n / 2).map(|c| 2.0 * c.norm() / n as f64).collect()
}

/// Amplitude at an exact-bin frequency.
fn amplitude_at(samples: &[f64], fs: f64, f_hz: f64) -> f64 {
    let n = samples.len() as f64;
    let bin = (f_hz * n / fs).round() as usize;
    amplitude_spectrum(samples)[bin]
}

#[test]
fn powerline_tone_lands_in_its_bin_at_configured_amplitude() {
    let fs = 512.0;
    let mut cfg = NoiseConfig::silent();
    cfg.powerline.amplitude_mv = 0.5;
    cfg.powerline.freq_hz = 50.0;
    let silent = AnalogStream::new(fs, vec![0.0; 5120]);
    let noisy = add_noise(&silent, &cfg).unwrap();

    let spectrum = amplitude_spectrum(&noisy.samples);
    let peak_bin = (1..spectrum.len())
        .max_by(|&a, &b| spectrum[a].total_cmp(&spectrum[b]))
        .unwrap();
    let bin_hz = fs / noisy.samples.len() as f64;
    assert_eq!(peak_bin as f64 * bin_hz, 50.0, "dominant bin must be the mains tone");
    let amp = spectrum[peak_bin];
    assert!((amp - 0.5).abs() <= 0.01, "tone amplitude {amp} mV");
}

#[test]
fn designed_notch_attenuates_the_tone_forty_db() {
    let fs = 512.0;
    let spec = design_filter(FilterKind::Notch, 50.0, fs, 30.0).unwrap();
    let n = 10 * 512;
    let tone: Vec<f64> =
        (0..n).map(|i| (2.0 * std::f64::consts::PI * 50.0 * i as f64 / fs).sin()).collect();
    let out = spec.apply(&tone);

    // Skip the transient, compare steady-state spectra.
    let tail_in = &tone[n / 2..];
    let tail_out = &out[n / 2..];
    let a_in = amplitude_at(tail_in, fs, 50.0);
    let a_out = amplitude_at(tail_out, fs, 50.0);
    let db = 20.0 * (a_out / a_in).log10();
    assert!(db <= -40.0, "notch depth {db} dB");

    // A 10 Hz probe loses at most 1 dB.
    let probe: Vec<f64> =
        (0..n).map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / fs).sin()).collect();
    let probe_out = spec.apply(&probe);
    let p_in = amplitude_at(&probe[n / 2..], fs, 10.0);
    let p_out = amplitude_at(&probe_out[n / 2..], fs, 10.0);
    let probe_db = 20.0 * (p_out / p_in).log10();
    assert!(probe_db >= -1.0, "skirt loss {probe_db} dB");
}

#[test]
fn notched_sinusoid_settles_below_one_percent_rms() {
    let fs = 512.0;
    let spec = design_filter(FilterKind::Notch, 50.0, fs, 30.0).unwrap();
    let n = 10 * 512;
    let tone: Vec<f64> =
        (0..n).map(|i| (2.0 * std::f64::consts::PI * 50.0 * i as f64 / fs).sin()).collect();
    let out = spec.apply(&tone);
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let steady = &out[n / 2..];
    assert!(rms(steady) <= 0.01 * rms(&tone[n / 2..]), "steady-state rms {}", rms(steady));
}

#[test]
fn afe_notch_earns_forty_db_against_bypass() {
    let fs = 512.0;
    let ecg = gen_ecg(72.0, fs, 10.0, &EcgTemplate::default()).unwrap();
    let mut cfg = NoiseConfig::silent();
    cfg.powerline.amplitude_mv = 0.5;
    let noisy = add_noise(&ecg.stream, &cfg).unwrap();

    let afe = AfeConfig::default();
    let with_notch = afe_pipeline(&noisy, &afe).unwrap();

    // Bypass run: same chain with the notch parked far from the tone so
    // the 50 Hz component passes untouched.
    let mut bypass_cfg = afe;
    bypass_cfg.notch.f0_hz = 120.0;
    let without_notch = afe_pipeline(&noisy, &bypass_cfg).unwrap();

    let half = with_notch.stream.codes.len() / 2;
    let a: Vec<f64> = with_notch.stream.codes[half..].iter().map(|&c| f64::from(c)).collect();
    let b: Vec<f64> = without_notch.stream.codes[half..].iter().map(|&c| f64::from(c)).collect();
    let notched = amplitude_at(&a, fs, 50.0);
    let bypassed = amplitude_at(&b, fs, 50.0);
    let db = 20.0 * (notched / bypassed).log10();
    assert!(db <= -40.0, "relative mains attenuation {db} dB");
}

#[test]
fn clean_ecg_survives_the_whole_front_end() {
    let fs = 512.0;
    let ecg = gen_ecg(72.0, fs, 10.0, &EcgTemplate::default()).unwrap();
    let afe = AfeConfig::default();
    let out = afe_pipeline(&ecg.stream, &afe).unwrap();
    assert_eq!(out.diagnostics.adc_saturation, 0);

    let x = &ecg.stream.samples;
    let y: Vec<f64> = out.stream.codes.iter().map(|&c| f64::from(c)).collect();

    // Brute-force alignment search, then normalized cross-correlation.
    let max_lag = (0.1 * fs) as usize;
    let mut best = f64::MIN;
    for lag in 0..=max_lag {
        let n = x.len() - lag;
        let xs = &x[..n];
        let ys = &y[lag..lag + n];
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let mut num = 0.0;
        let mut dx = 0.0;
        let mut dy = 0.0;
        for i in 0..n {
            let a = xs[i] - mx;
            let b = ys[i] - my;
            num += a * b;
            dx += a * a;
            dy += b * b;
        }
        best = best.max(num / (dx.sqrt() * dy.sqrt()));
    }
    assert!(best >= 0.95, "best delay-aligned correlation {best}");
}

#[test]
fn quantizer_error_is_at_most_half_lsb_in_range() {
    let cfg = AfeConfig::default();
    let fs_mv = cfg.adc_full_scale_mv;
    let lsb = fs_mv / 32767.0;
    let mut state = 0x9E37_79B9_u64;
    let mut samples = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let unit = (state >> 11) as f64 / (1u64 << 53) as f64;
        samples.push((unit * 2.0 - 1.0) * fs_mv);
    }
    let stream = AnalogStream::new(512.0, samples.clone());
    let (codes, saturated) = adc_quantize(&stream, &cfg).unwrap();
    assert_eq!(saturated, 0);
    for (&code, &mv) in codes.codes.iter().zip(&samples) {
        let err = (dequantize(code, &cfg) - mv).abs();
        assert!(err <= lsb / 2.0 + 1e-12, "error {err} exceeds half LSB {}", lsb / 2.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filtering_is_linear(
        a in -4.0f64..4.0,
        b in -4.0f64..4.0,
        seed in any::<u64>(),
    ) {
        let spec = design_filter(FilterKind::Lowpass, 40.0, 512.0, 0.707).unwrap();
        let mut state = seed | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let x: Vec<f64> = (0..256).map(|_| next()).collect();
        let y: Vec<f64> = (0..256).map(|_| next()).collect();
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(&xi, &yi)| a * xi + b * yi).collect();

        let fx = spec.apply(&x);
        let fy = spec.apply(&y);
        let fmixed = spec.apply(&mixed);
        for i in 0..256 {
            let expect = a * fx[i] + b * fy[i];
            let scale = expect.abs().max(1.0);
            prop_assert!((fmixed[i] - expect).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn designed_filters_ring_out_within_ten_seconds(
        kind_pick in 0u8..3,
        fs in prop_oneof![Just(250.0f64), Just(512.0), Just(1000.0)],
        f_frac in 0.05f64..0.2,
        q_unit in 0.0f64..1.0,
    ) {
        let (kind, f_hz, q) = match kind_pick {
            0 => (FilterKind::Notch, (25.0 + f_frac * fs).min(0.45 * fs), 5.0 + q_unit * 35.0),
            1 => (FilterKind::Lowpass, (1.0 + f_frac * fs).min(0.45 * fs), 0.5 + q_unit * 0.5),
            _ => (FilterKind::Highpass, (1.0 + f_frac * fs).min(0.45 * fs), 0.5 + q_unit * 0.5),
        };
        let spec = design_filter(kind, f_hz, fs, q).unwrap();
        prop_assert!(spec.is_stable());
        let horizon = (10.0 * fs) as usize;
        let h = spec.impulse_response(horizon + 64);
        let peak = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tail = h[horizon..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(tail <= 1e-6 * peak, "tail {tail}, peak {peak}, {kind:?} f {f_hz} q {q}");
    }

    #[test]
    fn noise_generation_is_seed_deterministic(seed in any::<u64>()) {
        let mut cfg = NoiseConfig::default();
        cfg.emg.seed = seed;
        cfg.contact.seed = seed ^ 0xDEAD_BEEF;
        cfg.contact.rate_per_s = 1.0;
        let base = AnalogStream::new(512.0, vec![0.0; 2048]);
        let a = add_noise(&base, &cfg).unwrap();
        let b = add_noise(&base, &cfg).unwrap();
        prop_assert_eq!(a.samples, b.samples);
    }
}

#[test]
fn generator_truth_matches_waveform_maxima() {
    for hr in [40.0, 72.0, 120.0, 180.0] {
        let ecg = gen_ecg(hr, 512.0, 8.0, &EcgTemplate::default()).unwrap();
        let x = &ecg.stream.samples;
        for &p in &ecg.r_peaks {
            let lo = p.saturating_sub(25);
            let hi = (p + 25).min(x.len() - 1);
            let argmax = (lo..=hi).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
            assert!(argmax.abs_diff(p) <= 1, "hr {hr}: truth {p}, argmax {argmax}");
        }
    }
}

#[test]
fn identity_spec_round_trips_through_apply() {
    let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
    assert_eq!(FilterSpec::identity().apply(&x), x);
}
