use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zipfaug::augment::PipelineConfig;
use zipfaug::corpus::Format;

/// Exit code 2 for `Usage`, 1 for `Runtime`.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(zipfaug::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

impl From<zipfaug::Error> for CliError {
    fn from(e: zipfaug::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

/// Maps an input-loading failure to a validation error.
pub fn input<T>(r: zipfaug::Result<T>, what: &str) -> Result<T, CliError> {
    r.map_err(|e| usage(format!("{what}: {e}")))
}

/// Contents of `--config`. Relative paths resolve against the file's
/// directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    /// Inferred from the corpus path when absent.
    pub format: Option<Format>,
    pub pos_lexicon: Option<PathBuf>,
    /// Remote POS tagger; takes precedence over `pos_lexicon`.
    pub pos_endpoint: Option<String>,
    pub tagset: Option<String>,
    /// Built-in material and equipment rules when absent.
    pub rules: Option<PathBuf>,
    pub triggers: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bad = |e: &dyn fmt::Display| usage(format!("config {}: {e}", path.display()));
        let text = fs::read_to_string(path).map_err(|e| bad(&e))?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|e| bad(&e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut config.corpus,
            &mut config.pos_lexicon,
            &mut config.rules,
            &mut config.triggers,
            &mut config.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.threads == Some(0) {
            return Err(usage("threads must be at least 1"));
        }
        if let Some((lo, hi)) = self.pipeline.beta_grid {
            if lo > hi {
                return Err(usage(format!("empty beta grid {lo}..{hi}")));
            }
        }
        if self.pipeline.r0 == Some(0) {
            return Err(usage("r0 must be at least 1"));
        }
        for (what, p) in [
            ("POS lexicon", &self.pos_lexicon),
            ("rule file", &self.rules),
            ("trigger lexicon", &self.triggers),
        ] {
            if let Some(p) = p {
                existing(p, what)?;
            }
        }
        Ok(())
    }

    pub fn corpus_format(&self, path: &Path) -> Format {
        self.format.unwrap_or_else(|| infer_format(path))
    }
}

/// `.txt` and `.lines` files are plain lines; everything else, directories
/// included, is read as CoNLL.
pub fn infer_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("txt" | "lines") => Format::PlainLines,
        _ => Format::ConllBio,
    }
}

pub fn existing<'p>(path: &'p Path, what: &str) -> Result<&'p Path, CliError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(usage(format!("{what} {} does not exist", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(
            &path,
            r#"{"corpus": "data/c.conll", "pipeline": {"law": "extended", "beta_grid": [-50, 0]}}"#,
        )
        .unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.corpus.unwrap(), dir.path().join("data/c.conll"));
        assert_eq!(c.pipeline.beta_grid, Some((-50, 0)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"corpsu": "x"}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::Usage(_))));
    }

    #[test]
    fn format_inference() {
        assert_eq!(infer_format(Path::new("a.txt")), Format::PlainLines);
        assert_eq!(infer_format(Path::new("a.conll")), Format::ConllBio);
        assert_eq!(infer_format(Path::new("dir")), Format::ConllBio);
    }
}
