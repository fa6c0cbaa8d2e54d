//! Timed command scripts for driving a device/bridge run.
//!
//! One command per line, `#` starts a comment:
//!
//! ```text
//! t=0.5 set_cts 0
//! t=1.0 connect
//! t=2.0 motion 1
//! t=3.0 disconnect
//! ```

use super::DeviceError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioAction {
    SetCts(bool),
    Connect,
    Disconnect,
    Motion(bool),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioCommand {
    pub t: f64,
    pub action: ScenarioAction,
}

/// Parses a script, returning commands sorted by time (stable for ties).
pub fn parse_scenario(text: &str) -> Result<Vec<ScenarioCommand>, DeviceError> {
    let mut commands = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let t_field = parts.next().expect("non-empty line has a first token");
        let t = t_field
            .strip_prefix("t=")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|t| *t >= 0.0)
            .ok_or_else(|| DeviceError::Scenario {
                line,
                reason: format!("expected t=<seconds>, got {t_field:?}"),
            })?;
        let verb = parts.next().ok_or_else(|| DeviceError::Scenario {
            line,
            reason: "missing command after the timestamp".into(),
        })?;
        let action = match verb {
            "set_cts" => ScenarioAction::SetCts(parse_level(verb, parts.next(), line)?),
            "motion" => ScenarioAction::Motion(parse_level(verb, parts.next(), line)?),
            "connect" => ScenarioAction::Connect,
            "disconnect" => ScenarioAction::Disconnect,
            other => {
                return Err(DeviceError::Scenario {
                    line,
                    reason: format!("unknown command {other:?}"),
                })
            }
        };
        if let Some(extra) = parts.next() {
            return Err(DeviceError::Scenario {
                line,
                reason: format!("unexpected trailing token {extra:?}"),
            });
        }
        commands.push(ScenarioCommand { t, action });
    }
    commands.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(commands)
}

fn parse_level(verb: &str, arg: Option<&str>, line: usize) -> Result<bool, DeviceError> {
    match arg {
        Some("0") => Ok(false),
        Some("1") => Ok(true),
        other => Err(DeviceError::Scenario {
            line,
            reason: format!("{verb} expects 0 or 1, got {other:?}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_commands_in_time_order() {
        let script = "\
# flow control exercise
t=2.0 set_cts 1
t=0.5 set_cts 0   # parked
t=1.0 connect
t=3.0 motion 1
t=4.0 disconnect
";
        let commands = parse_scenario(script).unwrap();
        assert_eq!(commands.len(), 5);
        assert_eq!(commands[0], ScenarioCommand { t: 0.5, action: ScenarioAction::SetCts(false) });
        assert_eq!(commands[1], ScenarioCommand { t: 1.0, action: ScenarioAction::Connect });
        assert_eq!(commands[2], ScenarioCommand { t: 2.0, action: ScenarioAction::SetCts(true) });
        assert_eq!(commands[4], ScenarioCommand { t: 4.0, action: ScenarioAction::Disconnect });
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(
            parse_scenario("set_cts 1"),
            Err(DeviceError::Scenario { line: 1, .. })
        ));
        assert!(matches!(
            parse_scenario("t=1.0 set_cts 2"),
            Err(DeviceError::Scenario { line: 1, .. })
        ));
        assert!(matches!(
            parse_scenario("t=1.0 warp"),
            Err(DeviceError::Scenario { line: 1, .. })
        ));
        assert!(matches!(
            parse_scenario("t=-1 connect"),
            Err(DeviceError::Scenario { line: 1, .. })
        ));
    }

    #[test]
    fn empty_script_is_empty() {
        assert!(parse_scenario("\n# nothing\n").unwrap().is_empty());
    }
}
