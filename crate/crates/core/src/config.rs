//! Flat `key = value` configuration files.
//!
//! Lines are UTF-8; `#` starts a comment; blank lines are ignored. Overrides
//! (typically from command-line flags) are applied after the file, and every
//! key must be known.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;
use crate::methods::{Method, VanillaBaseline};

/// Recognized keys, in the order [`render_config`] writes them.
pub const KEYS: &[&str] = &[
    "B", "W", "C_s", "C_a", "K", "mu_inf", "s0", "T", "n_grid", "samples", "seed", "methods",
    "workers", "vb_baseline",
];

fn parse_number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidValue {
        key: key.to_string(),
        reason: format!("cannot parse `{value}`"),
    })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|item| !item.is_empty())
        .map(|item| parse_number(key, item))
        .collect()
}

/// Applies one `key = value` assignment.
pub fn apply(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    let value = value.trim();
    match key {
        "B" => config.b = parse_number(key, value)?,
        "W" => config.w = parse_number(key, value)?,
        "C_s" => config.c_s = parse_number(key, value)?,
        "C_a" => config.c_a = parse_number(key, value)?,
        "K" => config.k = parse_number(key, value)?,
        "mu_inf" => config.mu_inf = parse_number(key, value)?,
        "s0" => config.s0 = parse_number(key, value)?,
        "T" => config.total_time = parse_number(key, value)?,
        "n_grid" => config.n_grid = parse_list(key, value)?,
        "samples" => config.samples = parse_number(key, value)?,
        "seed" => config.seed = parse_number(key, value)?,
        "workers" => config.workers = parse_number(key, value)?,
        "methods" => {
            config.methods = Method::parse_list(value).map_err(|err| Error::InvalidValue {
                key: key.to_string(),
                reason: err.to_string(),
            })?
        }
        "vb_baseline" => {
            config.vanilla = match value {
                "propagated" => VanillaBaseline::Propagated,
                "steady" => VanillaBaseline::SteadyState,
                other => {
                    return Err(Error::InvalidValue {
                        key: key.to_string(),
                        reason: format!("expected `propagated` or `steady`, got `{other}`"),
                    })
                }
            }
        }
        other => return Err(Error::UnknownKey(other.to_string())),
    }
    Ok(())
}

/// Parses configuration text on top of `config`.
pub fn apply_text(config: &mut ExperimentConfig, text: &str) -> Result<()> {
    for (index, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: index + 1,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                line: index + 1,
                reason: "missing key".into(),
            });
        }
        apply(config, key, value)?;
    }
    Ok(())
}

/// Defaults, then the file at `path` (if any), then `overrides` in order.
pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    load_config_from(ExperimentConfig::default(), path, overrides)
}

/// Like [`load_config`] but starting from `base` instead of the defaults.
pub fn load_config_from(
    base: ExperimentConfig,
    path: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut config = base;
    if let Some(path) = path {
        let text = fs::read_to_string(path).map_err(|err| Error::Io {
            path: path.display().to_string(),
            reason: err.to_string(),
        })?;
        apply_text(&mut config, &text)?;
    }
    for (key, value) in overrides {
        apply(&mut config, key, value)?;
    }
    config.validate()?;
    Ok(config)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Every key with its resolved value; parses back to an identical config.
pub fn render_config(config: &ExperimentConfig) -> String {
    let vanilla = match config.vanilla {
        VanillaBaseline::Propagated => "propagated",
        VanillaBaseline::SteadyState => "steady",
    };
    let values = [
        config.b.to_string(),
        config.w.to_string(),
        config.c_s.to_string(),
        config.c_a.to_string(),
        config.k.to_string(),
        config.mu_inf.to_string(),
        config.s0.to_string(),
        config.total_time.to_string(),
        join(&config.n_grid),
        config.samples.to_string(),
        config.seed.to_string(),
        join(&config.methods),
        config.workers.to_string(),
        vanilla.to_string(),
    ];
    KEYS.iter()
        .zip(values)
        .map(|(key, value)| format!("{key} = {value}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
        items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_without_a_file() {
        let config = load_config(None, &[]).unwrap();
        assert_eq!(config, ExperimentConfig::default());
        assert_eq!((config.b, config.w, config.c_s, config.c_a, config.k), (1.0, 1.0, 1.0, 1.0, 1.0));
        assert_eq!((config.total_time, config.mu_inf, config.s0), (3.0, 1.0, 0.0));
    }

    #[test]
    fn overrides_win_over_file() {
        let mut config = ExperimentConfig::default();
        apply_text(&mut config, "T = 3\n# comment\n\nsamples = 10  # trailing\n").unwrap();
        assert_eq!(config.samples, 10);
        for (k, v) in pairs(&[("T", "5")]) {
            apply(&mut config, &k, &v).unwrap();
        }
        assert_eq!(config.total_time, 5.0);
    }

    #[test]
    fn type_error_names_the_key() {
        let mut config = ExperimentConfig::default();
        let err = apply_text(&mut config, "mu_inf = abc").unwrap_err();
        assert!(matches!(&err, Error::InvalidValue { key, .. } if key == "mu_inf"));
        assert!(err.to_string().contains("mu_inf"));
    }

    #[test]
    fn unknown_keys_and_bad_lines() {
        let mut config = ExperimentConfig::default();
        assert_eq!(apply_text(&mut config, "gain = 2"), Err(Error::UnknownKey("gain".into())));
        assert!(matches!(
            apply_text(&mut config, "B = 1\nnot a pair\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(load_config(None, &pairs(&[("bogus", "1")])).is_err());
    }

    #[test]
    fn parses_lists_and_enums() {
        let mut config = ExperimentConfig::default();
        apply_text(&mut config, "n_grid = 1, 2,5\nmethods = ve,nb\nvb_baseline = steady\nmethods =").unwrap();
        assert_eq!(config.n_grid, vec![1, 2, 5]);
        assert!(config.methods.is_empty());
        assert_eq!(config.vanilla, VanillaBaseline::SteadyState);
        assert!(apply_text(&mut config, "methods = nb,xx").is_err());
    }

    #[test]
    fn rendered_config_round_trips() {
        let config = ExperimentConfig {
            b: 0.1 + 0.2,
            mu_inf: -1.0 / 3.0,
            n_grid: vec![7, 70],
            methods: vec![Method::Ab, Method::Vb],
            seed: u64::MAX,
            vanilla: VanillaBaseline::SteadyState,
            ..ExperimentConfig::default()
        };
        let mut parsed = ExperimentConfig::default();
        apply_text(&mut parsed, &render_config(&config)).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn validation_runs_after_overrides() {
        assert!(load_config(None, &pairs(&[("samples", "1")])).is_err());
        assert!(load_config(None, &pairs(&[("T", "-1")])).is_err());
        assert!(load_config(None, &pairs(&[("K", "0")])).is_err());
    }
}
