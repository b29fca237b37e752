use std::path::{Path, PathBuf};

use ews_core::config::Config;
use ews_core::{Error, Result};

pub const GLOBAL_KEYS: [&str; 3] = ["seed", "workers", "out"];

/// Effective settings for one invocation: defaults, then the config file,
/// then command-line flags.
pub struct Settings {
    pub config: Config,
    pub config_path: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(
        config_path: Option<&Path>,
        defaults: &[(&str, Option<&str>)],
        flags: Vec<(&str, Option<String>)>,
    ) -> Result<Self> {
        let file = match config_path {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        let allowed: Vec<&str> = defaults.iter().map(|(k, _)| *k).chain(GLOBAL_KEYS).collect();
        file.check_keys(&allowed)?;
        let mut config = Config::default();
        for (key, value) in defaults {
            if let Some(v) = value {
                config.set(key, *v);
            }
        }
        for (key, value) in file.entries() {
            config.set(key, value.clone());
        }
        for (key, value) in flags {
            if let Some(v) = value {
                config.set(key, v);
            }
        }
        Ok(Settings {
            config,
            config_path: config_path.map(Path::to_path_buf),
        })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.config.get(key)?.ok_or_else(|| Error::InvalidValue {
            key: key.to_string(),
            message: "a value is required".into(),
        })
    }

    pub fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.config.get(key)
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.config.get_list(key)
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.opt("seed")?.unwrap_or(0))
    }

    pub fn workers(&self) -> Result<usize> {
        let n = match self.opt::<usize>("workers")? {
            Some(n) => n,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        if n == 0 {
            return Err(Error::InvalidValue {
                key: "workers".into(),
                message: "must be >= 1".into(),
            });
        }
        Ok(n)
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        let dir = PathBuf::from(self.config.raw("out").unwrap_or("."));
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        Ok(dir)
    }
}
