//! Host-side recovery quality against the generator's ground truth, and
//! session bookkeeping across the full chain.

use ecglink_core::codec::{encode_packet, DataRow, Packet};
use ecglink_core::monitor::{detect_qrs, hr_from_peaks, Session, VitalKind};
use ecglink_core::pipeline::{run_pipeline, PipelineConfig};
use ecglink_core::signal::{
    add_noise, afe_pipeline, gen_ecg, AfeConfig, EcgTemplate, NoiseConfig,
};

fn assert_peaks_close(got: &[usize], truth: &[usize], tol: usize, label: &str) {
    assert_eq!(got.len(), truth.len(), "{label}: {} peaks vs {} true", got.len(), truth.len());
    for (g, t) in got.iter().zip(truth) {
        assert!(g.abs_diff(*t) <= tol, "{label}: detected {g} vs truth {t}");
    }
}

#[test]
fn clean_detection_matches_ground_truth() {
    let fs = 512.0;
    let ecg = gen_ecg(60.0, fs, 10.0, &EcgTemplate::default()).unwrap();
    let peaks = detect_qrs(&ecg.stream.samples, fs).unwrap();
    assert_peaks_close(&peaks, &ecg.r_peaks, 10, "clean 60 bpm");
}

#[test]
fn notched_mains_noise_does_not_move_the_peaks() {
    let fs = 512.0;
    let ecg = gen_ecg(60.0, fs, 10.0, &EcgTemplate::default()).unwrap();
    let mut noise = NoiseConfig::silent();
    noise.powerline.amplitude_mv = 0.5;
    let noisy = add_noise(&ecg.stream, &noise).unwrap();
    let out = afe_pipeline(&noisy, &AfeConfig::default()).unwrap();
    let samples: Vec<f64> = out.stream.codes.iter().map(|&c| f64::from(c)).collect();
    let peaks = detect_qrs(&samples, fs).unwrap();
    assert_peaks_close(&peaks, &ecg.r_peaks, 10, "notched 50 Hz run");
}

#[test]
fn recovered_rate_is_within_two_bpm_from_forty_to_one_eighty() {
    let fs = 512.0;
    for hr in [40.0, 60.0, 80.0, 110.0, 140.0, 180.0] {
        let ecg = gen_ecg(hr, fs, 30.0, &EcgTemplate::default()).unwrap();
        let peaks = detect_qrs(&ecg.stream.samples, fs).unwrap();
        let got = hr_from_peaks(&peaks, fs).unwrap();
        assert!((got - hr).abs() <= 2.0, "at {hr} bpm recovered {got}");
    }
}

#[test]
fn vitals_are_lossless_across_the_chain() {
    let mut cfg = PipelineConfig::new(72.0, 10.0, 5);
    cfg.noise = NoiseConfig::silent();
    let out = run_pipeline(&cfg).unwrap();

    // One vitals frame per second, five scalar rows each.
    let vitals = out.session.vitals();
    assert_eq!(vitals.len(), 10 * 5);
    let hr_records: Vec<f64> = vitals
        .iter()
        .filter(|v| v.kind == VitalKind::HeartRate)
        .map(|v| v.value)
        .collect();
    assert_eq!(hr_records.len(), 10);
    assert!(hr_records.iter().all(|&v| v == 72.0));
    assert_eq!(out.session.device_mean_hr_bpm(), Some(72.0));

    // Times never decrease.
    let times: Vec<f64> = vitals.iter().map(|v| v.time_s).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn ecg_sample_count_is_conserved_end_to_end() {
    let mut cfg = PipelineConfig::new(60.0, 12.0, 9);
    cfg.noise = NoiseConfig::silent();
    let out = run_pipeline(&cfg).unwrap();
    assert_eq!(out.session.ecg_codes().len(), 12 * 512);
    assert_eq!(out.session.quality().checksum_errors, 0);
    assert_eq!(out.session.quality().transport_gaps, 0);
}

#[test]
fn chunked_ingestion_equals_single_shot() {
    let frames: Vec<u8> = (0..64)
        .flat_map(|i| {
            encode_packet(&Packet::new(vec![
                DataRow::raw_ecg(i * 13 - 400),
                DataRow::poor_signal((i % 4) as u8),
            ]))
            .unwrap()
        })
        .collect();

    let mut one = Session::new(512.0);
    one.ingest_bytes(&frames);
    one.finish_stream();

    for chunk_size in [1usize, 3, 7, 64, 1000] {
        let mut many = Session::new(512.0);
        for chunk in frames.chunks(chunk_size) {
            many.ingest_bytes(chunk);
        }
        many.finish_stream();
        assert_eq!(many.ecg_codes(), one.ecg_codes(), "chunk size {chunk_size}");
        assert_eq!(many.vitals(), one.vitals(), "chunk size {chunk_size}");
        assert_eq!(many.quality(), one.quality(), "chunk size {chunk_size}");
    }
}

#[test]
fn detected_peaks_respect_refractory_everywhere() {
    let fs = 512.0;
    let mut cfg = PipelineConfig::new(150.0, 20.0, 3);
    cfg.noise = NoiseConfig::default();
    let out = run_pipeline(&cfg).unwrap();
    let samples: Vec<f64> = out.session.ecg_codes().iter().map(|&c| f64::from(c)).collect();
    let peaks = detect_qrs(&samples, fs).unwrap();
    let refractory = (0.2 * fs) as usize;
    for pair in peaks.windows(2) {
        assert!(pair[1] - pair[0] >= refractory, "{} then {}", pair[0], pair[1]);
    }
}

#[test]
fn summary_of_a_clean_run_reports_the_rate() {
    let mut cfg = PipelineConfig::new(60.0, 10.0, 11);
    cfg.noise = NoiseConfig::silent();
    let out = run_pipeline(&cfg).unwrap();
    let summary = out.session.summary();
    let hr = summary.mean_hr_bpm.expect("ten seconds of signal");
    assert!((58.0..=62.0).contains(&hr), "summary rate {hr}");
    assert_eq!(summary.ecg_samples, 5120);
    assert_eq!(summary.quality.packets_ok as usize, 5120 / 16 + 10);
}
