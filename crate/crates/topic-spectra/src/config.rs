//! Flat key-value config files for generation and rate studies.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored; unknown keys are errors. Values are plain tokens
//! except `length_law` (`fixed:N` or `uniform:LO:HI`) and `values`
//! (comma-separated integers).

use std::path::Path;

use crate::corpus::{LengthLaw, SyntheticParams};
use crate::error::{Error, Result};
use crate::estimator::FitOptions;
use crate::experiments::Axis;

/// Everything a study (or a generate run) can configure.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub synthetic: SyntheticParams,
    pub fit: FitOptions,
    pub axis: Axis,
    pub values: Vec<u64>,
    pub trials: usize,
    pub master_seed: u64,
    pub include_log_factor: bool,
    pub noiseless: bool,
    pub threads: Option<usize>,
}

impl Default for StudyConfig {
    /// The short-document default: vocabulary well above document length,
    /// document count swept over an eightfold range.
    fn default() -> Self {
        let synthetic = SyntheticParams {
            length_law: LengthLaw::Fixed(50),
            ..SyntheticParams::default()
        };
        let fit = FitOptions::new(synthetic.k);
        Self {
            synthetic,
            fit,
            axis: Axis::Docs,
            values: vec![500, 1000, 2000, 4000],
            trials: 20,
            master_seed: 42,
            include_log_factor: false,
            noiseless: false,
            threads: None,
        }
    }
}

pub fn parse_study_config(path: &Path) -> Result<StudyConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut config = StudyConfig::default();
    let err = |line: usize, reason: String| Error::Config {
        path: path.to_path_buf(),
        line,
        reason,
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected `key = value`, found `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| err(line_no, format!("`{key}` needs an unsigned integer, found `{v}`")))
        };
        let parse_u64 = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| err(line_no, format!("`{key}` needs an unsigned integer, found `{v}`")))
        };
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| err(line_no, format!("`{key}` needs a number, found `{v}`")))
        };
        let parse_bool = |v: &str| match v {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(err(line_no, format!("`{key}` needs true/false, found `{v}`"))),
        };
        match key {
            "p" => config.synthetic.p = parse_usize(value)?,
            "n" => config.synthetic.n = parse_usize(value)?,
            "k" => {
                config.synthetic.k = parse_usize(value)?;
                config.fit.k = config.synthetic.k;
            }
            "length_law" => {
                let mut parts = value.split(':');
                let law = parts.next().unwrap_or_default();
                let mut next_u32 = || -> Result<u32> {
                    parts
                        .next()
                        .and_then(|v| v.trim().parse::<u32>().ok())
                        .ok_or_else(|| {
                            err(
                                line_no,
                                format!("`length_law` needs `fixed:N` or `uniform:LO:HI`, found `{value}`"),
                            )
                        })
                };
                config.synthetic.length_law = match law {
                    "fixed" => LengthLaw::Fixed(next_u32()?),
                    "uniform" => LengthLaw::Uniform(next_u32()?, next_u32()?),
                    _ => {
                        return Err(err(
                            line_no,
                            format!("unknown length law `{law}` (use fixed or uniform)"),
                        ))
                    }
                };
            }
            "anchor_words_per_topic" => {
                config.synthetic.anchor_words_per_topic = parse_usize(value)?
            }
            "zipf_exponent" => config.synthetic.zipf_exponent = parse_f64(value)?,
            "pure_doc_fraction" => config.synthetic.pure_doc_fraction = parse_f64(value)?,
            "dirichlet_alpha" => config.synthetic.dirichlet_alpha = parse_f64(value)?,
            "merge_threshold_factor" => config.fit.merge_threshold_factor = parse_f64(value)?,
            "clamp_epsilon" => config.fit.clamp_epsilon = parse_f64(value)?,
            "axis" => {
                config.axis = Axis::parse(value).ok_or_else(|| {
                    err(line_no, format!("unknown axis `{value}` (use n, doc_length/N, or p)"))
                })?
            }
            "values" => {
                let parsed: std::result::Result<Vec<u64>, _> = value
                    .split(',')
                    .map(|v| v.trim().parse::<u64>())
                    .collect();
                config.values = parsed.map_err(|_| {
                    err(line_no, format!("`values` needs comma-separated integers, found `{value}`"))
                })?;
            }
            "trials" => config.trials = parse_usize(value)?,
            "master_seed" => config.master_seed = parse_u64(value)?,
            "include_log_factor" => config.include_log_factor = parse_bool(value)?,
            "noiseless" => config.noiseless = parse_bool(value)?,
            "threads" => config.threads = Some(parse_usize(value)?),
            _ => return Err(err(line_no, format!("unknown key `{key}`"))),
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(tag: &str, contents: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "topic-spectra-config-{tag}-{}.cfg",
            std::process::id()
        ));
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn parses_full_config() {
        let path = write_tmp(
            "full",
            "# rate study\n\
             p = 120\n\
             n = 800\n\
             k = 4\n\
             length_law = uniform:40:60\n\
             anchor_words_per_topic = 5\n\
             zipf_exponent = 0.5   # moderate heterogeneity\n\
             pure_doc_fraction = 0.3\n\
             dirichlet_alpha = 0.7\n\
             merge_threshold_factor = 0.02\n\
             clamp_epsilon = 1e-10\n\
             axis = N\n\
             values = 25, 50, 100\n\
             trials = 6\n\
             master_seed = 99\n\
             include_log_factor = true\n\
             noiseless = false\n\
             threads = 3\n",
        );
        let config = parse_study_config(&path).unwrap();
        assert_eq!(config.synthetic.p, 120);
        assert_eq!(config.synthetic.n, 800);
        assert_eq!(config.synthetic.k, 4);
        assert_eq!(config.fit.k, 4);
        assert_eq!(config.synthetic.length_law, LengthLaw::Uniform(40, 60));
        assert_eq!(config.synthetic.anchor_words_per_topic, 5);
        assert_eq!(config.fit.merge_threshold_factor, 0.02);
        assert_eq!(config.axis, Axis::DocLength);
        assert_eq!(config.values, vec![25, 50, 100]);
        assert_eq!(config.trials, 6);
        assert_eq!(config.master_seed, 99);
        assert!(config.include_log_factor);
        assert_eq!(config.threads, Some(3));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let path = write_tmp("bad-key", "frobnicate = 7\n");
        assert!(matches!(
            parse_study_config(&path).unwrap_err(),
            Error::Config { line: 1, .. }
        ));
        std::fs::remove_file(&path).unwrap();

        let path = write_tmp("bad-val", "p = 100\ntrials = soon\n");
        assert!(matches!(
            parse_study_config(&path).unwrap_err(),
            Error::Config { line: 2, .. }
        ));
        std::fs::remove_file(&path).unwrap();

        let path = write_tmp("bad-law", "length_law = poisson:5\n");
        assert!(parse_study_config(&path).is_err());
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn default_is_short_regime() {
        let config = StudyConfig::default();
        assert_eq!(config.synthetic.p, 300);
        assert_eq!(config.synthetic.length_law, LengthLaw::Fixed(50));
        assert_eq!(config.values, vec![500, 1000, 2000, 4000]);
        assert_eq!(config.trials, 20);
        // short regime: N < p
        assert!(config.synthetic.length_law.nominal() < config.synthetic.p as f64);
    }
}
