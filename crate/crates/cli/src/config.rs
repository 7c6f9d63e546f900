//! Flat `key=value` configuration with per-experiment schemas.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Str(String),
}

impl Value {
    /// Integers first, then floats, anything else is a string.
    pub fn parse(raw: &str) -> Value {
        if let Ok(i) = raw.parse::<i64>() {
            Value::Int(i)
        } else if let Ok(x) = raw.parse::<f64>() {
            Value::Float(x)
        } else {
            Value::Str(raw.to_string())
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Float(_) => "float",
            Value::Str(_) => "string",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

pub type Config = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`, found `{text}`")]
    Malformed { line: usize, text: String },
    #[error("override `{0}`: expected `key=value`")]
    MalformedOverride(String),
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("unknown key `{key}` for experiment `{experiment}`")]
    UnknownKey { experiment: String, key: String },
    #[error("key `{key}`: expected {expected}, found {found} `{value}`")]
    TypeMismatch {
        key: String,
        expected: &'static str,
        found: &'static str,
        value: String,
    },
    #[error("key `{key}` = {value} is out of range: expected {expected}")]
    Range { key: String, value: String, expected: String },
    #[error("key `{key}` is required")]
    Missing { key: String },
}

fn split_pair(line: &str) -> Option<(&str, &str)> {
    let (key, value) = line.split_once('=')?;
    let (key, value) = (key.trim(), value.trim());
    let key_ok = !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
    (key_ok && !value.is_empty()).then_some((key, value))
}

/// Parses a config document. `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut map = Config::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split_once('#').map_or(raw, |(head, _)| head).trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = split_pair(content).ok_or_else(|| ConfigError::Malformed {
            line,
            text: raw.to_string(),
        })?;
        if map.contains_key(key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        map.insert(key.to_string(), Value::parse(value));
    }
    Ok(map)
}

/// Applies a `--set key=value` override; later overrides win.
pub fn apply_override(config: &mut Config, assignment: &str) -> Result<(), ConfigError> {
    let (key, value) =
        split_pair(assignment).ok_or_else(|| ConfigError::MalformedOverride(assignment.to_string()))?;
    config.insert(key.to_string(), Value::parse(value));
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub enum Domain {
    Any,
    Positive,
    NonNegative,
    /// Open unit interval.
    Unit,
    /// `[0, 1)`.
    Probability,
    AtLeast(i64),
    OneOf(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Int,
    Float,
    Str,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    /// `None` marks an optional key without a default.
    pub default: Option<&'static str>,
    pub domain: Domain,
}

pub(crate) const fn key(key: &'static str, kind: Kind, default: &'static str, domain: Domain) -> KeySpec {
    KeySpec {
        key,
        kind,
        default: Some(default),
        domain,
    }
}

pub(crate) const fn optional(key: &'static str, kind: Kind, domain: Domain) -> KeySpec {
    KeySpec {
        key,
        kind,
        default: None,
        domain,
    }
}

fn coerce(spec: &KeySpec, value: &Value) -> Result<Value, ConfigError> {
    let mismatch = |expected| ConfigError::TypeMismatch {
        key: spec.key.to_string(),
        expected,
        found: value.kind(),
        value: value.to_string(),
    };
    match (spec.kind, value) {
        (Kind::Int, Value::Int(_)) | (Kind::Float, Value::Float(_)) => Ok(value.clone()),
        (Kind::Float, Value::Int(i)) => Ok(Value::Float(*i as f64)),
        (Kind::Str, v) => Ok(Value::Str(v.to_string())),
        (Kind::Int, _) => Err(mismatch("integer")),
        (Kind::Float, _) => Err(mismatch("number")),
    }
}

fn check_domain(spec: &KeySpec, value: &Value) -> Result<(), ConfigError> {
    let range = |expected: String| ConfigError::Range {
        key: spec.key.to_string(),
        value: value.to_string(),
        expected,
    };
    let ok = match (spec.domain, value) {
        (Domain::Any, Value::Float(x)) => x.is_finite(),
        (Domain::Any, _) => true,
        (Domain::Positive, Value::Float(x)) => x.is_finite() && *x > 0.0,
        (Domain::NonNegative, Value::Float(x)) => x.is_finite() && *x >= 0.0,
        (Domain::Unit, Value::Float(x)) => *x > 0.0 && *x < 1.0,
        (Domain::Probability, Value::Float(x)) => (0.0..1.0).contains(x),
        (Domain::AtLeast(lo), Value::Int(i)) => *i >= lo,
        (Domain::OneOf(choices), Value::Str(s)) => choices.contains(&s.as_str()),
        _ => false,
    };
    if ok {
        return Ok(());
    }
    Err(range(match spec.domain {
        Domain::Any => "a finite number".into(),
        Domain::Positive => "a finite number > 0".into(),
        Domain::NonNegative => "a finite number >= 0".into(),
        Domain::Unit => "a number in (0, 1)".into(),
        Domain::Probability => "a number in [0, 1)".into(),
        Domain::AtLeast(lo) => format!("an integer >= {lo}"),
        Domain::OneOf(choices) => format!("one of {}", choices.join(", ")),
    }))
}

/// Config checked against a schema, defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    values: Config,
}

impl Resolved {
    pub fn new(experiment: &str, schema: &[KeySpec], config: &Config) -> Result<Self, ConfigError> {
        if let Some(unknown) = config.keys().find(|k| !schema.iter().any(|s| s.key == k.as_str())) {
            return Err(ConfigError::UnknownKey {
                experiment: experiment.to_string(),
                key: unknown.clone(),
            });
        }
        let mut values = Config::new();
        for spec in schema {
            let raw = match (config.get(spec.key), spec.default) {
                (Some(v), _) => v.clone(),
                (None, Some(d)) => Value::parse(d),
                (None, None) => continue,
            };
            let value = coerce(spec, &raw)?;
            check_domain(spec, &value)?;
            values.insert(spec.key.to_string(), value);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Config {
        &self.values
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Float(x)) => *x,
            other => panic!("schema bug: `{key}` is not a float ({other:?})"),
        }
    }

    pub fn float_opt(&self, key: &str) -> Option<f64> {
        self.values.contains_key(key).then(|| self.float(key))
    }

    pub fn require_float(&self, key: &str) -> Result<f64, ConfigError> {
        self.float_opt(key).ok_or_else(|| ConfigError::Missing { key: key.to_string() })
    }

    pub fn count(&self, key: &str) -> usize {
        match self.values.get(key) {
            Some(Value::Int(i)) if *i >= 0 => *i as usize,
            other => panic!("schema bug: `{key}` is not a count ({other:?})"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(Value::Str(s)) => s,
            other => panic!("schema bug: `{key}` is not a string ({other:?})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_empty_map() {
        assert!(parse_config("").unwrap().is_empty());
        assert!(parse_config("\n  # only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn typed_values() {
        let cfg = parse_config("hurst=0.5\nn_paths = 12 # trailing\nmethod=cholesky\nq=1e-3").unwrap();
        assert_eq!(cfg["hurst"], Value::Float(0.5));
        assert_eq!(cfg["n_paths"], Value::Int(12));
        assert_eq!(cfg["method"], Value::Str("cholesky".into()));
        assert_eq!(cfg["q"], Value::Float(1e-3));
    }

    #[test]
    fn malformed_lines_report_line_number() {
        assert_eq!(
            parse_config("a=1\n\nnot a pair\n"),
            Err(ConfigError::Malformed {
                line: 3,
                text: "not a pair".into()
            })
        );
        assert!(matches!(parse_config("=3"), Err(ConfigError::Malformed { line: 1, .. })));
        assert!(matches!(parse_config("x="), Err(ConfigError::Malformed { line: 1, .. })));
        assert!(matches!(parse_config("a b=3"), Err(ConfigError::Malformed { line: 1, .. })));
    }

    #[test]
    fn duplicates_are_rejected() {
        assert_eq!(
            parse_config("a=1\nb=2\na=3"),
            Err(ConfigError::Duplicate { line: 3, key: "a".into() })
        );
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut cfg = parse_config("hurst=0.5").unwrap();
        apply_override(&mut cfg, "hurst=0.7").unwrap();
        assert_eq!(cfg["hurst"], Value::Float(0.7));
        assert!(apply_override(&mut cfg, "hurst").is_err());
    }

    const SCHEMA: &[KeySpec] = &[
        key("hurst", Kind::Float, "0.5", Domain::Unit),
        key("n", Kind::Int, "4", Domain::AtLeast(2)),
        key("mode", Kind::Str, "a", Domain::OneOf(&["a", "b"])),
        optional("g", Kind::Float, Domain::NonNegative),
    ];

    #[test]
    fn schema_fills_defaults_and_checks_ranges() {
        let r = Resolved::new("t", SCHEMA, &Config::new()).unwrap();
        assert_eq!(r.float("hurst"), 0.5);
        assert_eq!(r.count("n"), 4);
        assert_eq!(r.text("mode"), "a");
        assert_eq!(r.float_opt("g"), None);
        assert!(matches!(r.require_float("g"), Err(ConfigError::Missing { .. })));

        let bad = parse_config("hurst=1.5").unwrap();
        match Resolved::new("t", SCHEMA, &bad) {
            Err(ConfigError::Range { key, expected, .. }) => {
                assert_eq!(key, "hurst");
                assert!(expected.contains("(0, 1)"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_rejects_unknown_keys_and_wrong_types() {
        let unknown = parse_config("hurts=0.5").unwrap();
        assert!(matches!(
            Resolved::new("t", SCHEMA, &unknown),
            Err(ConfigError::UnknownKey { key, .. }) if key == "hurts"
        ));
        let wrong = parse_config("n=2.5").unwrap();
        assert!(matches!(
            Resolved::new("t", SCHEMA, &wrong),
            Err(ConfigError::TypeMismatch { expected: "integer", .. })
        ));
        let word = parse_config("hurst=half").unwrap();
        assert!(matches!(Resolved::new("t", SCHEMA, &word), Err(ConfigError::TypeMismatch { .. })));
        let choice = parse_config("mode=c").unwrap();
        assert!(matches!(Resolved::new("t", SCHEMA, &choice), Err(ConfigError::Range { .. })));
        let promoted = parse_config("hurst=0.25\nn=2").unwrap();
        assert_eq!(Resolved::new("t", SCHEMA, &promoted).unwrap().float("hurst"), 0.25);
    }
}
