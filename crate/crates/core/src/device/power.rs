//! Supply-rail validation, battery runtime estimation and the charging
//! compliance rule.

use serde::{Deserialize, Serialize};

use super::DeviceError;

/// Lowest programming resistor that keeps the charger inside the 0.5 C
/// current limit for the stock cell.
pub const CHARGE_RESISTOR_MIN_KOHM: f64 = 16.7;
/// Charge current at the minimum compliant resistor, in mA.
pub const CHARGE_ANCHOR_MA: f64 = 60.0;
/// Accelerometer draw in its motion-triggered wake-up mode, in mA.
pub const ACCEL_WAKEUP_MA: f64 = 0.000_27;

/// A part and the input-voltage windows it accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub name: String,
    /// Inclusive `[min, max]` volt ranges; a part may accept several.
    pub ranges: Vec<(f64, f64)>,
}

impl ComponentSpec {
    pub fn new(name: &str, ranges: &[(f64, f64)]) -> Self {
        Self { name: name.to_string(), ranges: ranges.to_vec() }
    }

    pub fn accepts(&self, volts: f64) -> bool {
        self.ranges.iter().any(|&(lo, hi)| volts >= lo && volts <= hi)
    }
}

/// A supply net and the parts hanging off it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRail {
    pub voltage: f64,
    pub attached: Vec<String>,
}

impl PowerRail {
    pub fn new(voltage: f64, attached: &[&str]) -> Self {
        Self { voltage, attached: attached.iter().map(|s| s.to_string()).collect() }
    }
}

/// The parts of the reference build and their supply windows.
pub fn reference_components() -> Vec<ComponentSpec> {
    vec![
        ComponentSpec::new("MSP430FR2433", &[(1.8, 3.6)]),
        ComponentSpec::new("CC2640R2F", &[(1.8, 3.8)]),
        // 3.3 V +/- 10%.
        ComponentSpec::new("BMD101", &[(2.97, 3.63)]),
        ComponentSpec::new("ADPD188GG", &[(1.7, 1.9), (4.0, 5.0)]),
        ComponentSpec::new("ADT7310", &[(2.7, 5.5)]),
        ComponentSpec::new("ADXL362", &[(1.6, 3.5)]),
    ]
}

/// The three supply nets of the reference build.
pub fn reference_rails() -> Vec<PowerRail> {
    vec![
        PowerRail::new(3.3, &["MSP430FR2433", "CC2640R2F", "BMD101", "ADT7310", "ADXL362"]),
        PowerRail::new(1.8, &["ADPD188GG"]),
        PowerRail::new(4.4, &["ADPD188GG"]),
    ]
}

/// One attachment verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RailVerdict {
    pub rail_voltage: f64,
    pub component: String,
    pub pass: bool,
    /// The component's allowed windows, for reporting.
    pub allowed: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RailsReport {
    pub verdicts: Vec<RailVerdict>,
}

impl RailsReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RailVerdict> {
        self.verdicts.iter().filter(|v| !v.pass)
    }
}

/// Checks every rail attachment against the component supply windows.
/// Boundary voltages are inclusive.
pub fn validate_rails(
    components: &[ComponentSpec],
    rails: &[PowerRail],
) -> Result<RailsReport, DeviceError> {
    let mut verdicts = Vec::new();
    for rail in rails {
        for name in &rail.attached {
            let spec = components
                .iter()
                .find(|c| &c.name == name)
                .ok_or_else(|| DeviceError::UnknownComponent { name: name.clone() })?;
            verdicts.push(RailVerdict {
                rail_voltage: rail.voltage,
                component: name.clone(),
                pass: spec.accepts(rail.voltage),
                allowed: spec.ranges.clone(),
            });
        }
    }
    Ok(RailsReport { verdicts })
}

/// Capacity-only cell model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryModel {
    pub capacity_mah: f64,
    pub voltage_min: f64,
    pub voltage_max: f64,
    /// Maximum charge rate as a fraction of capacity per hour.
    pub max_charge_c: f64,
}

impl Default for BatteryModel {
    fn default() -> Self {
        Self { capacity_mah: 120.0, voltage_min: 2.75, voltage_max: 4.2, max_charge_c: 0.5 }
    }
}

/// Current draw per operating state, in mA. Everything except the
/// accelerometer figure is a configurable placeholder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurrentProfile {
    pub mcu_sleep_ma: f64,
    pub mcu_active_ma: f64,
    pub ble_tx_ma: f64,
    pub sensor_on_ma: f64,
    pub accel_ma: f64,
}

impl Default for CurrentProfile {
    fn default() -> Self {
        Self {
            mcu_sleep_ma: 0.001,
            mcu_active_ma: 1.0,
            ble_tx_ma: 6.0,
            sensor_on_ma: 0.5,
            accel_ma: 0.002,
        }
    }
}

impl CurrentProfile {
    fn draws(&self) -> [f64; 5] {
        [self.mcu_sleep_ma, self.mcu_active_ma, self.ble_tx_ma, self.sensor_on_ma, self.accel_ma]
    }
}

/// Time fraction spent in each profile state; must sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DutyCycle {
    pub mcu_sleep: f64,
    pub mcu_active: f64,
    pub ble_tx: f64,
    pub sensor_on: f64,
    pub accel: f64,
}

impl DutyCycle {
    fn fractions(&self) -> [f64; 5] {
        [self.mcu_sleep, self.mcu_active, self.ble_tx, self.sensor_on, self.accel]
    }
}

impl Default for DutyCycle {
    fn default() -> Self {
        Self { mcu_sleep: 0.90, mcu_active: 0.05, ble_tx: 0.02, sensor_on: 0.02, accel: 0.01 }
    }
}

/// Hours until the cell is empty at the duty-weighted average draw.
pub fn battery_runtime(
    battery: &BatteryModel,
    profile: &CurrentProfile,
    duty: &DutyCycle,
) -> Result<f64, DeviceError> {
    let fractions = duty.fractions();
    if fractions.iter().any(|&f| f < 0.0) {
        return Err(DeviceError::DutyCycle { sum: f64::NAN });
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DeviceError::DutyCycle { sum });
    }
    let avg_ma: f64 = fractions.iter().zip(profile.draws()).map(|(f, d)| f * d).sum();
    if avg_ma <= 0.0 {
        return Err(DeviceError::UndefinedRuntime);
    }
    Ok(battery.capacity_mah / avg_ma)
}

/// Charging compliance report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeReport {
    /// 0.5 C limit for this cell, in mA.
    pub max_current_ma: f64,
    /// Whether the programming resistor meets the minimum.
    pub resistor_ok: bool,
    /// Charge current the resistor programs, inverse-proportional and
    /// anchored at 60 mA for 16.7 kOhm.
    pub implied_current_ma: f64,
}

/// Applies the 0.5 C rule and the programming-resistor threshold.
pub fn charge_compliance(
    battery: &BatteryModel,
    prog_resistor_kohm: f64,
) -> Result<ChargeReport, DeviceError> {
    if !prog_resistor_kohm.is_finite() || prog_resistor_kohm <= 0.0 {
        return Err(DeviceError::Parameter(format!(
            "programming resistor {prog_resistor_kohm} kOhm must be positive"
        )));
    }
    Ok(ChargeReport {
        max_current_ma: battery.max_charge_c * battery.capacity_mah,
        resistor_ok: prog_resistor_kohm >= CHARGE_RESISTOR_MIN_KOHM,
        implied_current_ma: CHARGE_ANCHOR_MA * CHARGE_RESISTOR_MIN_KOHM / prog_resistor_kohm,
    })
}
