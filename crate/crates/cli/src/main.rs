//! Command-line bench wiring the telemetry model into reproducible runs.

mod config;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use config::{ResolvedConfig, RunArgs};
use ecglink_core::bridge::{
    read_notification_log, write_notification_log, Bridge, BridgeEvent,
};
use ecglink_core::codec::{
    capture_bytes, encode_packet, DataRow, DecodeEventKind, Packet, RowValue, StreamDecoder,
};
use ecglink_core::device::{
    battery_runtime, charge_compliance, reference_components, reference_rails, validate_rails,
};
use ecglink_core::monitor::ExportKind;
use ecglink_core::pipeline::run_pipeline;
use ecglink_core::signal::{add_noise, afe_pipeline, gen_ecg};

#[derive(Parser)]
#[command(name = "ecglink", version, about = "Wearable ECG telemetry bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic ECG, add noise, run the front end; write CSVs.
    Simulate(RunArgs),
    /// Full chain: generator, device, BLE bridge, host monitor.
    E2e(RunArgs),
    /// Encode row-spec lines into wire frames.
    Encode {
        /// Input text: one packet per line of name=value tokens. Stdin
        /// when omitted.
        #[arg(long, name = "in")]
        r#in: Option<PathBuf>,
        /// Output file for raw frame bytes; hex lines on stdout when
        /// omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a capture (raw bytes or hexdump text) and report events.
    Decode {
        /// Capture file; stdin when omitted.
        #[arg(long, name = "in")]
        r#in: Option<PathBuf>,
    },
    /// Segment a capture into notifications, or reassemble a log.
    Bridge {
        #[command(subcommand)]
        command: BridgeCommand,
    },
    /// Check supply rails against component input-voltage windows.
    RailsCheck {
        /// JSON config with device.components / device.rails overrides.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Battery runtime and charge-compliance arithmetic.
    Battery {
        /// JSON config with device.battery / duty / resistor overrides.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BridgeCommand {
    /// Capture bytes -> notifications.csv at the given MTU.
    Segment {
        #[arg(long, name = "in")]
        r#in: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 23)]
        mtu: usize,
    },
    /// notifications.csv -> raw capture bytes.
    Reassemble {
        #[arg(long, name = "in")]
        r#in: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::E2e(args) => e2e(&args),
        Command::Encode { r#in, out } => encode(r#in.as_deref(), out.as_deref()),
        Command::Decode { r#in } => decode(r#in.as_deref()),
        Command::Bridge { command } => bridge(command),
        Command::RailsCheck { config } => rails_check(config.as_deref()),
        Command::Battery { config } => battery(config.as_deref()),
    }
}

fn read_input(path: Option<&Path>) -> Result<Vec<u8>> {
    match path {
        Some(p) => std::fs::read(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let mut buf = Vec::new();
            std::io::stdin().read_to_end(&mut buf).context("reading stdin")?;
            Ok(buf)
        }
    }
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn simulate(args: &RunArgs) -> Result<ExitCode> {
    let resolved = ResolvedConfig::resolve(args)?;
    prepare_out_dir(&args.out)?;
    resolved.write_run_json(&args.out)?;

    let pipeline = resolved.pipeline()?;
    let ecg = gen_ecg(pipeline.hr_bpm, pipeline.fs, pipeline.duration_s, &pipeline.template)?;
    let noisy = add_noise(&ecg.stream, &pipeline.seeded_noise())?;
    let afe = afe_pipeline(&noisy, &pipeline.afe)?;

    write_stream(&args.out.join("clean.csv"), |w| ecg.stream.write_csv(w))?;
    write_stream(&args.out.join("noisy.csv"), |w| noisy.write_csv(w))?;
    write_stream(&args.out.join("digital.csv"), |w| afe.stream.write_csv(w))?;

    println!(
        "simulate: {} samples at {} Hz, {} R peaks, adc saturation {}, out={}",
        afe.stream.codes.len(),
        pipeline.fs,
        ecg.r_peaks.len(),
        afe.diagnostics.adc_saturation,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn write_stream<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), ecglink_core::SignalError>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn e2e(args: &RunArgs) -> Result<ExitCode> {
    let resolved = ResolvedConfig::resolve(args)?;
    prepare_out_dir(&args.out)?;
    resolved.write_run_json(&args.out)?;

    let pipeline = resolved.pipeline()?;
    let out = run_pipeline(&pipeline)?;

    out.session.export_to(ExportKind::EcgCsv, &args.out.join("ecg.csv"))?;
    out.session.export_to(ExportKind::VitalsCsv, &args.out.join("vitals.csv"))?;
    out.session.export_to(ExportKind::SummaryJson, &args.out.join("summary.json"))?;
    let mut log = Vec::new();
    write_notification_log(&mut log, &out.notifications)?;
    std::fs::write(args.out.join("notifications.csv"), log)
        .with_context(|| format!("writing {}", args.out.join("notifications.csv").display()))?;

    let summary = out.session.summary();
    let hr = summary
        .mean_hr_bpm
        .map(|v| format!("{v:.2}"))
        .unwrap_or_else(|| "n/a".to_string());
    println!(
        "e2e: mean_hr={} bpm, packets={}, notifications={}, energy={:.6} mAh, out={}",
        hr,
        summary.quality.packets_ok,
        out.notifications.len(),
        out.energy_mah,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_row_spec(token: &str) -> Result<DataRow> {
    let (name, value) = token
        .split_once('=')
        .with_context(|| format!("row spec {token:?} is not name=value"))?;
    let row = match name {
        "poor_signal" => DataRow::poor_signal(value.parse()?),
        "heart_rate" => DataRow::heart_rate(value.parse()?),
        "spo2" => DataRow::spo2(value.parse()?),
        "motion" => DataRow::motion(match value {
            "0" | "false" => false,
            "1" | "true" => true,
            other => bail!("motion expects 0/1, got {other:?}"),
        }),
        "raw_ecg" => DataRow::raw_ecg(value.parse()?),
        "temperature" => {
            let celsius: f64 = value.parse()?;
            let centi = (celsius * 100.0).round();
            if !(f64::from(i16::MIN)..=f64::from(i16::MAX)).contains(&centi) {
                bail!("temperature {celsius} C outside the wire range");
            }
            DataRow::temperature_centi_c(centi as i16)
        }
        other => bail!("unknown row kind {other:?}"),
    };
    Ok(row)
}

fn encode(input: Option<&Path>, output: Option<&Path>) -> Result<ExitCode> {
    let text = String::from_utf8(read_input(input)?).context("row specs must be UTF-8")?;
    let mut frames = Vec::new();
    let mut hex_lines = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rows: Vec<DataRow> = line
            .split_whitespace()
            .map(parse_row_spec)
            .collect::<Result<_>>()
            .with_context(|| format!("line {}", idx + 1))?;
        let frame = encode_packet(&Packet::new(rows)).with_context(|| format!("line {}", idx + 1))?;
        hex_lines.push(hex::encode_upper(&frame));
        frames.extend(frame);
    }
    match output {
        Some(path) => {
            std::fs::write(path, &frames).with_context(|| format!("writing {}", path.display()))?;
            println!("encode: {} bytes to {}", frames.len(), path.display());
        }
        None => {
            for line in hex_lines {
                println!("{line}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn describe_row(row: &DataRow) -> String {
    match row.value() {
        RowValue::PoorSignal(q) => format!("poor_signal={q}"),
        RowValue::HeartRate(bpm) => format!("heart_rate={bpm}"),
        RowValue::TemperatureCentiC(c) => format!("temperature={}", f64::from(c) / 100.0),
        RowValue::SpO2(pct) => format!("spo2={pct}"),
        RowValue::Motion(m) => format!("motion={}", u8::from(m)),
        RowValue::RawEcg(v) => format!("raw_ecg={v}"),
        RowValue::Unknown { code, bytes } => {
            format!("code_{code:#04x}={}", hex::encode_upper(bytes))
        }
    }
}

fn decode(input: Option<&Path>) -> Result<ExitCode> {
    let bytes = capture_bytes(&read_input(input)?);
    let mut decoder = StreamDecoder::new();
    let mut events = decoder.feed(&bytes);
    events.extend(decoder.finish());

    for event in &events {
        match &event.kind {
            DecodeEventKind::PacketDecoded(packet) => {
                let rows: Vec<String> = packet.rows.iter().map(describe_row).collect();
                println!("offset={} packet {}", event.byte_offset, rows.join(" "));
            }
            DecodeEventKind::ChecksumError { expected, got } => {
                println!(
                    "offset={} checksum_error expected={expected:02X} got={got:02X}",
                    event.byte_offset
                );
            }
            DecodeEventKind::LengthError { plength } => {
                println!("offset={} length_error plength={plength:02X}", event.byte_offset);
            }
            DecodeEventKind::RowFormatError(err) => {
                println!("offset={} row_format_error {err}", event.byte_offset);
            }
        }
    }
    let stats = decoder.stats();
    println!(
        "decoded packets={} checksum_errors={} length_errors={} row_format_errors={} resyncs={}",
        stats.packets_ok,
        stats.checksum_errors,
        stats.length_errors,
        stats.row_format_errors,
        stats.resyncs
    );
    Ok(ExitCode::SUCCESS)
}

fn bridge(command: BridgeCommand) -> Result<ExitCode> {
    match command {
        BridgeCommand::Segment { r#in, out, mtu } => {
            let data = capture_bytes(&std::fs::read(&r#in)
                .with_context(|| format!("reading {}", r#in.display()))?);
            let mut bridge = Bridge::new();
            bridge.handle_event(BridgeEvent::PowerOn)?;
            bridge.handle_event(BridgeEvent::Connect)?;
            if mtu != bridge.mtu() {
                bridge.handle_event(BridgeEvent::MtuUpdate(mtu))?;
            }
            let notifications = bridge.uart_in(&data)?;
            let mut log = Vec::new();
            write_notification_log(&mut log, &notifications)?;
            std::fs::write(&out, log).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "segment: {} bytes into {} notifications (mtu {mtu}), out={}",
                data.len(),
                notifications.len(),
                out.display()
            );
        }
        BridgeCommand::Reassemble { r#in, out } => {
            let file = std::fs::File::open(&r#in)
                .with_context(|| format!("reading {}", r#in.display()))?;
            let notifications = read_notification_log(std::io::BufReader::new(file))?;
            let bytes = ecglink_core::bridge::reassemble(&notifications)?;
            std::fs::write(&out, &bytes).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "reassemble: {} notifications into {} bytes, out={}",
                notifications.len(),
                bytes.len(),
                out.display()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_device_section(config: Option<&Path>) -> Result<config::DeviceSection> {
    let args = RunArgs {
        hr: None,
        duration: None,
        fs: None,
        seed: None,
        mtu: None,
        notch: None,
        config: config.map(Path::to_path_buf),
        out: PathBuf::from("out"),
    };
    Ok(ResolvedConfig::resolve(&args)?.device)
}

fn format_volts(v: f64) -> String {
    if v == v.trunc() {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

fn format_ranges(ranges: &[(f64, f64)]) -> String {
    ranges
        .iter()
        .map(|(lo, hi)| format!("{}V-{}V", format_volts(*lo), format_volts(*hi)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn rails_check(config: Option<&Path>) -> Result<ExitCode> {
    let section = load_device_section(config)?;
    let components = section.components.unwrap_or_else(reference_components);
    let rails = section.rails.unwrap_or_else(reference_rails);
    let report = validate_rails(&components, &rails)?;

    for v in &report.verdicts {
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} rail={}V component={} allowed={}",
            format_volts(v.rail_voltage),
            v.component,
            format_ranges(&v.allowed)
        );
    }
    let passed = report.verdicts.iter().filter(|v| v.pass).count();
    println!("rails-check: {passed}/{} pass", report.verdicts.len());
    if report.all_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn battery(config: Option<&Path>) -> Result<ExitCode> {
    let section = load_device_section(config)?;
    let hours = battery_runtime(&section.battery, &section.current_profile, &section.duty)?;
    let charge = charge_compliance(&section.battery, section.resistor_kohm)?;
    println!("runtime_h={hours}");
    println!("max_charge_ma={}", charge.max_current_ma);
    println!(
        "resistor_kohm={} resistor_ok={} implied_current_ma={}",
        section.resistor_kohm, charge.resistor_ok, charge.implied_current_ma
    );
    Ok(ExitCode::SUCCESS)
}
