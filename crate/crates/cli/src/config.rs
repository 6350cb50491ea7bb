//! Settings resolved from flags, an optional TOML file and the environment,
//! in that order of precedence.

use anyhow::{bail, Context, Result};
use biodb::query::{QueryOptions, Selectivity};
use biodb::seq::BlastParams;
use biodb_bench::generator::GeneratorConfig;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Tsv,
    Records,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Format::Table),
            "tsv" => Ok(Format::Tsv),
            "records" => Ok(Format::Records),
            _ => bail!("unknown output format {s:?} (expected table, tsv or records)"),
        }
    }
}

/// The file form; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub db: Option<PathBuf>,
    pub cache_pages: Option<usize>,
    pub format: Option<Format>,
    pub verbose: Option<u8>,
    pub generator: Option<GeneratorConfig>,
    pub blast: Option<BlastParams>,
    pub selectivity: Option<Selectivity>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow::anyhow!("config {}: {}", path.display(), e.message()))
    }
}

/// Flag values that override the file and environment.
#[derive(Debug, Default)]
pub struct Overrides {
    pub db: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub cache_pages: Option<usize>,
    pub format: Option<Format>,
    pub verbose: u8,
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub db: Option<PathBuf>,
    pub cache_pages: usize,
    pub format: Format,
    pub verbose: u8,
    pub generator: GeneratorConfig,
    pub query: QueryOptions,
}

fn env_parse<T: FromStr>(env: &dyn Fn(&str) -> Option<String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match env(key) {
        Some(v) if !v.is_empty() => v.parse().map(Some).map_err(|e| anyhow::anyhow!("{key}={v:?}: {e}")),
        _ => Ok(None),
    }
}

impl CliConfig {
    /// `env` looks up environment variables; tests pass a fixed map.
    pub fn resolve(flags: Overrides, env: &dyn Fn(&str) -> Option<String>) -> Result<CliConfig> {
        let mut cfg = CliConfig {
            db: env("BIODB_DB").filter(|s| !s.is_empty()).map(PathBuf::from),
            cache_pages: env_parse(env, "BIODB_CACHE_PAGES")?.unwrap_or(biodb::store::StoreConfig::default().cache_pages),
            format: env_parse(env, "BIODB_FORMAT")?.unwrap_or_default(),
            verbose: env_parse(env, "BIODB_VERBOSE")?.unwrap_or(0),
            generator: GeneratorConfig::default(),
            query: QueryOptions::default(),
        };
        let file = flags.config.clone().or_else(|| env("BIODB_CONFIG").filter(|s| !s.is_empty()).map(PathBuf::from));
        if let Some(path) = file {
            let f = FileConfig::load(&path)?;
            cfg.db = f.db.or(cfg.db);
            cfg.cache_pages = f.cache_pages.unwrap_or(cfg.cache_pages);
            cfg.format = f.format.unwrap_or(cfg.format);
            cfg.verbose = f.verbose.unwrap_or(cfg.verbose);
            if let Some(g) = f.generator {
                cfg.generator = g;
            }
            if let Some(b) = f.blast {
                cfg.query.blast = b;
            }
            if let Some(s) = f.selectivity {
                cfg.query.selectivity = s;
            }
        }
        cfg.db = flags.db.or(cfg.db);
        cfg.cache_pages = flags.cache_pages.unwrap_or(cfg.cache_pages);
        cfg.format = flags.format.unwrap_or(cfg.format);
        cfg.verbose = cfg.verbose.max(flags.verbose);
        if cfg.cache_pages == 0 {
            bail!("cache size must be at least one page");
        }
        Ok(cfg)
    }

    pub fn db_path(&self) -> Result<&Path> {
        match &self.db {
            Some(p) => Ok(p),
            None => bail!("no database given: pass --db, set db in the config file, or set BIODB_DB"),
        }
    }

    pub fn store(&self) -> biodb::store::StoreConfig {
        biodb::store::StoreConfig { cache_pages: self.cache_pages }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn env(m: &'static [(&'static str, &'static str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<&str, &str> = m.iter().copied().collect();
        move |k| map.get(k).map(|v| v.to_string())
    }

    #[test]
    fn flags_beat_file_beat_env() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.toml");
        std::fs::write(&file, "db = \"file.db\"\nformat = \"tsv\"\ncache_pages = 7\n[generator]\nseed = 5\n[blast]\ncomparator = \"Greater\"\n").unwrap();
        let e = env(&[("BIODB_DB", "env.db"), ("BIODB_FORMAT", "records"), ("BIODB_CACHE_PAGES", "3"), ("BIODB_VERBOSE", "1")]);

        let only_env = CliConfig::resolve(Overrides::default(), &e).unwrap();
        assert_eq!(only_env.db.as_deref(), Some(Path::new("env.db")));
        assert_eq!((only_env.format, only_env.cache_pages, only_env.verbose), (Format::Records, 3, 1));

        let with_file = CliConfig::resolve(Overrides { config: Some(file.clone()), ..Default::default() }, &e).unwrap();
        assert_eq!(with_file.db.as_deref(), Some(Path::new("file.db")));
        assert_eq!((with_file.format, with_file.cache_pages, with_file.generator.seed), (Format::Tsv, 7, 5));
        assert_eq!(with_file.query.blast.comparator, biodb::seq::Comparator::Greater);
        assert_eq!(with_file.query.blast.word_dna, biodb::seq::BlastParams::default().word_dna);

        let flags = Overrides { config: Some(file), db: Some("flag.db".into()), format: Some(Format::Table), ..Default::default() };
        let all = CliConfig::resolve(flags, &e).unwrap();
        assert_eq!(all.db.as_deref(), Some(Path::new("flag.db")));
        assert_eq!((all.format, all.cache_pages), (Format::Table, 7));
    }

    #[test]
    fn bad_values_are_reported() {
        let e = env(&[("BIODB_CACHE_PAGES", "lots")]);
        let err = CliConfig::resolve(Overrides::default(), &e).unwrap_err().to_string();
        assert!(err.contains("BIODB_CACHE_PAGES"), "{err}");
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.toml");
        std::fs::write(&file, "colour = 1\n").unwrap();
        let err = CliConfig::resolve(Overrides { config: Some(file), ..Default::default() }, &env(&[])).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        assert!(CliConfig::resolve(Overrides::default(), &env(&[])).unwrap().db_path().is_err());
    }
}
