//! Scenario files and command-line overrides.
//!
//! A scenario is a TOML document whose sections mirror [`ScenarioConfig`].
//! Missing sections and keys fall back to the defaults, so an empty file is a
//! valid scenario. Overrides use dotted paths with the same key names as the
//! file, e.g. `guidance.V_th=10.6` or `targets.1.m_T=0.5`.

use std::path::Path;

use toml::Value;

use crate::engine::ScenarioConfig;
use crate::error::SimError;

fn config_err(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}

/// Fills keys absent from `user` with the matching entries of `base`.
fn merge_defaults(base: &mut Value, user: Value) {
    match (base, user) {
        (Value::Table(b), Value::Table(u)) => {
            for (k, v) in u {
                match b.get_mut(&k) {
                    Some(slot) => merge_defaults(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn default_value() -> Value {
    Value::try_from(ScenarioConfig::default()).expect("default scenario serialises")
}

fn from_value(v: Value) -> Result<ScenarioConfig, SimError> {
    let cfg: ScenarioConfig = v.try_into().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a scenario from TOML text.
pub fn parse(text: &str) -> Result<ScenarioConfig, SimError> {
    let user: Value = text.parse::<toml::Table>().map(Value::Table).map_err(|e| config_err(e.to_string()))?;
    let mut v = default_value();
    merge_defaults(&mut v, user);
    from_value(v)
}

pub fn load(path: &Path) -> Result<ScenarioConfig, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn to_toml(cfg: &ScenarioConfig) -> String {
    toml::to_string_pretty(cfg).expect("scenario serialises")
}

pub fn save(cfg: &ScenarioConfig, path: &Path) -> Result<(), SimError> {
    std::fs::write(path, to_toml(cfg)).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn parse_literal(s: &str) -> Value {
    let s = s.trim();
    format!("x = {s}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("x"))
        .unwrap_or_else(|| Value::String(s.to_string()))
}

fn slot<'a>(root: &'a mut Value, path: &str) -> Result<&'a mut Value, SimError> {
    let mut cur = root;
    for key in path.split('.') {
        cur = match cur {
            Value::Table(t) => t.get_mut(key).ok_or_else(|| config_err(format!("unknown key `{key}` in `{path}`")))?,
            Value::Array(a) => {
                let i: usize = key.parse().map_err(|_| config_err(format!("`{key}` is not an index in `{path}`")))?;
                let n = a.len();
                a.get_mut(i).ok_or_else(|| config_err(format!("index {i} out of range ({n}) in `{path}`")))?
            }
            _ => return Err(config_err(format!("`{path}` descends into a scalar"))),
        };
    }
    Ok(cur)
}

/// Applies `key=value` overrides in order and re-validates the result.
pub fn apply_overrides<S: AsRef<str>>(cfg: &ScenarioConfig, overrides: &[S]) -> Result<ScenarioConfig, SimError> {
    let mut v = Value::try_from(cfg).map_err(|e| config_err(e.to_string()))?;
    for o in overrides {
        let o = o.as_ref();
        let (path, raw) = o.split_once('=').ok_or_else(|| config_err(format!("override `{o}` lacks `=`")))?;
        let target = slot(&mut v, path.trim())?;
        let mut value = parse_literal(raw);
        // Integer literals are accepted where floats are expected.
        if let (Value::Float(_), Value::Integer(i)) = (&*target, &value) {
            value = Value::Float(*i as f64);
        }
        *target = value;
    }
    from_value(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(parse("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn round_trip() {
        let cfg = ScenarioConfig::default();
        assert_eq!(parse(&to_toml(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn partial_section_keeps_other_defaults() {
        let cfg = parse("[guidance]\nV_th = 10.7\n").unwrap();
        assert_eq!(cfg.guidance.v_th, 10.7);
        assert_eq!(cfg.guidance.t_max, ScenarioConfig::default().guidance.t_max);
    }

    #[test]
    fn overrides() {
        let base = ScenarioConfig::default();
        let cfg = apply_overrides(&base, &["guidance.V_th=10", "targets.1.m_T = 0.5", "mission.seed=7"]).unwrap();
        assert_eq!(cfg.guidance.v_th, 10.0);
        assert_eq!(cfg.targets[1].m, 0.5);
        assert_eq!(cfg.mission.seed, 7);
        assert!(apply_overrides(&base, &["guidance.nope=1"]).is_err());
        assert!(apply_overrides(&base, &["targets.5.m_T=1"]).is_err());
        assert!(apply_overrides(&base, &["quad.m_Q=-1"]).is_err());
        assert!(apply_overrides(&base, &["guidance.V_th"]).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse("[quad]\nmass = 2.0\n").is_err());
        assert!(parse("not toml [").is_err());
    }
}
