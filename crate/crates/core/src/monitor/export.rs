//! Session export: ECG and vitals CSV plus a JSON summary.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MonitorError, QualityReport, Session};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    EcgCsv,
    VitalsCsv,
    SummaryJson,
}

/// Shape of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub duration_s: f64,
    pub fs: f64,
    pub ecg_samples: usize,
    /// Host-side heart rate; the primary figure.
    pub mean_hr_bpm: Option<f64>,
    /// Mean of the rates the device reported, kept for comparison.
    pub device_mean_hr_bpm: Option<f64>,
    pub quality: QualityReport,
}

impl Session {
    pub fn summary(&self) -> Summary {
        Summary {
            duration_s: self.duration_s(),
            fs: self.fs(),
            ecg_samples: self.ecg_codes().len(),
            mean_hr_bpm: self.mean_hr_bpm(),
            device_mean_hr_bpm: self.device_mean_hr_bpm(),
            quality: self.quality(),
        }
    }

    /// Renders one export as a string.
    pub fn export(&self, what: ExportKind) -> String {
        match what {
            ExportKind::EcgCsv => {
                let mut out = String::from("index,time_s,adc_code\n");
                for (i, code) in self.ecg_codes().iter().enumerate() {
                    let _ = writeln!(out, "{},{},{}", i, i as f64 / self.fs(), code);
                }
                out
            }
            ExportKind::VitalsCsv => {
                let mut out = String::from("time_s,kind,value\n");
                for v in self.vitals() {
                    let _ = writeln!(out, "{},{},{}", v.time_s, v.kind.as_str(), v.value);
                }
                out
            }
            ExportKind::SummaryJson => {
                let mut json = serde_json::to_string_pretty(&self.summary())
                    .expect("summary serializes");
                json.push('\n');
                json
            }
        }
    }

    /// Writes one export to disk, reporting the failing path on error.
    pub fn export_to(&self, what: ExportKind, path: &Path) -> Result<(), MonitorError> {
        std::fs::write(path, self.export(what)).map_err(|source| MonitorError::Export {
            path: path.display().to_string(),
            source,
        })
    }
}
