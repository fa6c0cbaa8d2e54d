//! Desk-scale model of a wearable ECG telemetry chain.
//!
//! The crate covers the whole signal path in software: synthetic ECG with
//! the usual acquisition noise sources, front-end emulation down to 16-bit
//! ADC codes, the sensor's framed serial protocol with an incremental
//! resynchronizing decoder, a discrete-event model of the low-power
//! forwarding MCU, a serial-to-BLE notification bridge, and the host-side
//! monitor that recovers heart rate from the decoded stream.

pub mod bridge;
pub mod codec;
pub mod device;
pub mod monitor;
pub mod pipeline;
pub mod signal;

pub use bridge::{Bridge, BridgeError, BridgeEvent, Notification, Phase};
pub use codec::{
    compute_checksum, encode_packet, parse_payload, CodecError, DataRow, DecodeEvent,
    DecodeEventKind, Packet, RowValue, StreamDecoder,
};
pub use device::{
    battery_runtime, charge_compliance, motion_gate, validate_rails, BatteryModel, CurrentProfile,
    DeviceConfig, DeviceError, DeviceModel, DutyCycle, PowerRail,
};
pub use monitor::{detect_qrs, hr_from_peaks, MonitorError, Session, VitalKind, VitalRecord};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, PipelineOutput};
pub use signal::{
    adc_quantize, add_noise, afe_pipeline, design_filter, gen_ecg, AfeConfig, AnalogStream,
    DigitalStream, EcgTemplate, FilterKind, FilterSpec, NoiseConfig, SignalError,
};
