//! `key = value` configuration files.
//!
//! Grammar: one `key = value` pair per line; whitespace around keys and
//! values is ignored; blank lines and lines starting with `#` are skipped;
//! values run to end of line (no quoting); a repeated key is an error.
//!
//! Service keys: `listen`, `model_path`, `spectral_config`,
//! `max_upload_bytes`, `cors_allow_origin`.
//!
//! Training keys: `feature_set` (comma-separated sources in branch order),
//! `epochs`, `batch_size`, `lr`, `dropout_p`, `seed`, `train_ratio`,
//! `dev_ratio`, `early_stop_patience`, `conv_filters`, `kernel_size`,
//! `fcn_dims` (comma-separated hidden-layer widths).
//!
//! Spectral keys: `frame_len`, `hop`, `n_fft`, `n_filters`, `n_coeffs`,
//! `log_floor`, `scale` (`mel` or `linear`; only used by `extract`, since
//! MFCC and LFCC branches pick their own spacing).

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use comfeat_core::spectral::{FilterScale, SpectralConfig};

use crate::pipeline::TrainConfig;
use thiserror::Error;

/// Default upload cap, 50 MiB.
pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 50 * 1024 * 1024;

/// Environment variable overriding `model_path`.
pub const MODEL_ENV: &str = "COMFEAT_MODEL";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    Syntax(usize),
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
}

pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax(i + 1));
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(ConfigError::DuplicateKey(k.to_string()));
        }
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

pub fn parse_spectral_config(text: &str) -> Result<SpectralConfig, ConfigError> {
    let mut cfg = SpectralConfig::default();
    for (k, v) in parse_pairs(text)? {
        match k.as_str() {
            "frame_len" => cfg.frame_len = parse_value(&k, &v)?,
            "hop" => cfg.hop = parse_value(&k, &v)?,
            "n_fft" => cfg.n_fft = parse_value(&k, &v)?,
            "n_filters" => cfg.n_filters = parse_value(&k, &v)?,
            "n_coeffs" => cfg.n_coeffs = parse_value(&k, &v)?,
            "log_floor" => cfg.log_floor = parse_value(&k, &v)?,
            "scale" => {
                cfg.scale = match v.as_str() {
                    "mel" => FilterScale::Mel,
                    "linear" => FilterScale::Linear,
                    _ => return Err(ConfigError::BadValue { key: k, value: v }),
                }
            }
            _ => return Err(ConfigError::UnknownKey(k)),
        }
    }
    cfg.validate().map_err(|e| ConfigError::BadValue {
        key: "spectral".into(),
        value: e.to_string(),
    })?;
    Ok(cfg)
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// Applies training keys from `text` on top of `base`.
pub fn parse_train_config(text: &str, base: TrainConfig) -> Result<TrainConfig, ConfigError> {
    let mut cfg = base;
    for (k, v) in parse_pairs(text)? {
        match k.as_str() {
            "feature_set" => cfg.feature_set = parse_list(&k, &v)?,
            "epochs" => cfg.epochs = parse_value(&k, &v)?,
            "batch_size" => cfg.batch_size = parse_value(&k, &v)?,
            "lr" => cfg.lr = parse_value(&k, &v)?,
            "dropout_p" => cfg.dropout_p = parse_value(&k, &v)?,
            "seed" => cfg.seed = parse_value(&k, &v)?,
            "train_ratio" => cfg.split_ratios.0 = parse_value(&k, &v)?,
            "dev_ratio" => cfg.split_ratios.1 = parse_value(&k, &v)?,
            "early_stop_patience" => cfg.early_stop_patience = parse_value(&k, &v)?,
            "conv_filters" => cfg.conv_filters = parse_value(&k, &v)?,
            "kernel_size" => cfg.kernel_size = parse_value(&k, &v)?,
            "fcn_dims" => cfg.fcn_dims = parse_list(&k, &v)?,
            _ => return Err(ConfigError::UnknownKey(k)),
        }
    }
    if cfg.feature_set.is_empty() {
        return Err(ConfigError::BadValue {
            key: "feature_set".into(),
            value: String::new(),
        });
    }
    Ok(cfg)
}

pub fn read_spectral_config(path: Option<&Path>) -> Result<SpectralConfig, crate::Error> {
    match path {
        None => Ok(SpectralConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| crate::Error::io(p, e))?;
            Ok(parse_spectral_config(&text)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub model_path: PathBuf,
    pub spectral_config: Option<PathBuf>,
    pub max_upload_bytes: usize,
    /// `*` or a single origin; `None` disables CORS headers.
    pub cors_allow_origin: Option<String>,
}

impl ServiceConfig {
    pub fn new(model_path: PathBuf) -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            model_path,
            spectral_config: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            cors_allow_origin: None,
        }
    }

    /// Parses a service config. `model_path` is required unless the
    /// environment supplies it via [`MODEL_ENV`], which always wins.
    pub fn parse(text: &str, env_model: Option<PathBuf>) -> Result<Self, ConfigError> {
        let pairs = parse_pairs(text)?;
        let mut model_path = None;
        let mut cfg = ServiceConfig::new(PathBuf::new());
        for (k, v) in pairs {
            match k.as_str() {
                "listen" => cfg.listen = parse_value(&k, &v)?,
                "model_path" => model_path = Some(PathBuf::from(v)),
                "spectral_config" => cfg.spectral_config = Some(PathBuf::from(v)),
                "max_upload_bytes" => cfg.max_upload_bytes = parse_value(&k, &v)?,
                "cors_allow_origin" => cfg.cors_allow_origin = Some(v),
                _ => return Err(ConfigError::UnknownKey(k)),
            }
        }
        cfg.model_path = env_model
            .or(model_path)
            .ok_or(ConfigError::Missing("model_path"))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn train_keys() {
        use comfeat_core::feature::FeatureSource;
        let cfg = parse_train_config(
            "feature_set = xvector, lfcc\nepochs = 7\ntrain_ratio = 0.6\nfcn_dims = 64, 8\n",
            TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(cfg.feature_set, vec![FeatureSource::Xvector, FeatureSource::Lfcc]);
        assert_eq!(cfg.epochs, 7);
        assert_eq!(cfg.split_ratios, (0.6, 0.1));
        assert_eq!(cfg.fcn_dims, vec![64, 8]);
        assert!(matches!(
            parse_train_config("feature_set = mfcc, wav2vec", TrainConfig::default()),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(parse_train_config("feature_set =", TrainConfig::default()).is_err());
    }

    #[test]
    fn pairs_grammar() {
        let p = parse_pairs("# comment\n\n a = 1 \nb=two words\n").unwrap();
        assert_eq!(p["a"], "1");
        assert_eq!(p["b"], "two words");
        assert_eq!(parse_pairs("a = 1\nnope\n"), Err(ConfigError::Syntax(2)));
        assert_eq!(
            parse_pairs("a=1\na=2"),
            Err(ConfigError::DuplicateKey("a".into()))
        );
        assert_eq!(parse_pairs(" = 3"), Err(ConfigError::Syntax(1)));
    }

    #[test]
    fn spectral_overrides() {
        let cfg = parse_spectral_config("n_coeffs = 13\nscale = linear\n").unwrap();
        assert_eq!(cfg.n_coeffs, 13);
        assert_eq!(cfg.scale, FilterScale::Linear);
        assert_eq!(cfg.frame_len, 400);
        assert!(parse_spectral_config("n_fft = 300").is_err());
        assert!(parse_spectral_config("window = hann").is_err());
        assert!(parse_spectral_config("hop = ten").is_err());
    }

    #[test]
    fn service_config() {
        let text = "listen = 0.0.0.0:9000\nmodel_path = m.cfwt\ncors_allow_origin = *\n";
        let cfg = ServiceConfig::parse(text, None).unwrap();
        assert_eq!(cfg.listen.port(), 9000);
        assert_eq!(cfg.model_path, PathBuf::from("m.cfwt"));
        assert_eq!(cfg.max_upload_bytes, 50 * 1024 * 1024);
        assert_eq!(cfg.cors_allow_origin.as_deref(), Some("*"));

        let env = ServiceConfig::parse(text, Some("env.cfwt".into())).unwrap();
        assert_eq!(env.model_path, PathBuf::from("env.cfwt"));

        assert_eq!(
            ServiceConfig::parse("listen = 127.0.0.1:1", None),
            Err(ConfigError::Missing("model_path"))
        );
        assert!(ServiceConfig::parse("model_path = m\nmax_upload_bytes = lots", None).is_err());
    }
}
