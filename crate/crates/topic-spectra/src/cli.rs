//! Command-line front end: `generate`, `fit`, `eval`, `rate-study`, and
//! `diagnose`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
//! failure. Every failure prints a single `ERROR <class>: <message>` line
//! to stderr.

use std::path::{Path, PathBuf};

use crate::config::{parse_study_config, StudyConfig};
use crate::corpus::{generate_synthetic_corpus, MergeMap};
use crate::error::Error;
use crate::estimator::{estimate_weights, topic_score_fit, FitOptions, VertexOrder};
use crate::experiments::{rate_study, write_summary_csv, RateStudyOptions, TrialConfig};
use crate::io;
use crate::metrics::{
    align_columns, assumption_diagnostics, entrywise_deviation, perturbation_norms,
    weight_loss, WeightLoss, PERTURBATION_DENSE_LIMIT,
};
use crate::spectral::{build_normalization, normalized_svd, population_spectra};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const USAGE: &str = "\
topic-spectra: spectral topic-model estimation and rate experiments

USAGE:
  topic-spectra generate [--config FILE] [--seed U64] --out DIR
  topic-spectra fit --corpus DIR --k K --out DIR [--weights]
                    [--merge-threshold F] [--clamp-epsilon F]
  topic-spectra eval --estimate DIR --truth DIR
  topic-spectra rate-study [--config FILE] --out DIR [--threads N]
  topic-spectra diagnose --corpus DIR --truth DIR --out DIR
                    [--merge-threshold F]

Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure.
The TOPIC_SPECTRA_THREADS environment variable is the fallback for
--threads.
";

/// Classifies an error into one of the documented exit codes.
fn exit_class(err: &Error) -> i32 {
    match err {
        Error::Stage { source, .. } => exit_class(source),
        Error::Io { .. }
        | Error::MalformedManifest { .. }
        | Error::MalformedRecord { .. }
        | Error::IndexOutOfRange { .. }
        | Error::LengthMismatch { .. }
        | Error::Config { .. }
        | Error::InvalidParameter { .. }
        | Error::ShapeMismatch { .. }
        | Error::Domain { .. } => EXIT_DATA,
        Error::AlignmentTooLarge { .. } | Error::MatrixTooLarge { .. } => EXIT_USAGE,
        Error::ZeroNormalizerEntry { .. }
        | Error::VocabularyTooDegenerate { .. }
        | Error::RankDeficient { .. }
        | Error::ResidualCheck { .. }
        | Error::SingularConcurrence
        | Error::RankDeficientTopics { .. }
        | Error::ClampedDenominators { .. }
        | Error::DegenerateSimplex { .. }
        | Error::IllConditionedVertices { .. }
        | Error::CollapsedTopic { .. }
        | Error::CollinearTopics
        | Error::ZeroWordMass { .. }
        | Error::AllTrialsFailed { .. }
        | Error::EigenNoConvergence { .. } => EXIT_NUMERICAL,
    }
}

fn class_name(code: i32) -> &'static str {
    match code {
        EXIT_USAGE => "usage",
        EXIT_DATA => "data",
        EXIT_NUMERICAL => "numerical",
        _ => "internal",
    }
}

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    eprintln!("ERROR {}: {message}", class_name(code));
    code
}

fn fail_err(err: &Error) -> i32 {
    fail(exit_class(err), err)
}

/// Parsed flags: `--key value` pairs plus boolean `--flag`s.
struct Args {
    values: std::collections::BTreeMap<String, String>,
    flags: std::collections::BTreeSet<String>,
}

impl Args {
    fn parse(
        args: &[String],
        value_keys: &[&str],
        flag_keys: &[&str],
    ) -> Result<Args, String> {
        let mut values = std::collections::BTreeMap::new();
        let mut flags = std::collections::BTreeSet::new();
        let mut it = args.iter().peekable();
        while let Some(arg) = it.next() {
            let Some(key) = arg.strip_prefix("--") else {
                return Err(format!("unexpected positional argument `{arg}`"));
            };
            if flag_keys.contains(&key) {
                flags.insert(key.to_string());
            } else if value_keys.contains(&key) {
                let value = it
                    .next()
                    .ok_or_else(|| format!("missing value for --{key}"))?;
                values.insert(key.to_string(), value.clone());
            } else {
                return Err(format!("unknown option --{key}"));
            }
        }
        Ok(Args { values, flags })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, String> {
        self.get(key).ok_or_else(|| format!("--{key} is required"))
    }

    fn parse_num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("--{key} got an unparseable value `{v}`")),
        }
    }
}

/// Entry point; returns the process exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let args: Vec<String> = args.into_iter().collect();
    let Some(subcommand) = args.first() else {
        print!("{USAGE}");
        return EXIT_USAGE;
    };
    if subcommand == "--help" || subcommand == "help" || subcommand == "-h" {
        print!("{USAGE}");
        return EXIT_OK;
    }
    let rest = &args[1..];
    match subcommand.as_str() {
        "generate" => cmd_generate(rest),
        "fit" => cmd_fit(rest),
        "eval" => cmd_eval(rest),
        "rate-study" => cmd_rate_study(rest),
        "diagnose" => cmd_diagnose(rest),
        other => fail(EXIT_USAGE, format!("unknown subcommand `{other}`")),
    }
}

fn load_config(args: &Args) -> Result<StudyConfig, Error> {
    match args.get("config") {
        Some(path) => parse_study_config(Path::new(path)),
        None => Ok(StudyConfig::default()),
    }
}

fn cmd_generate(rest: &[String]) -> i32 {
    let args = match Args::parse(rest, &["config", "seed", "out"], &[]) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let out = match args.require("out") {
        Ok(o) => PathBuf::from(o),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let seed = match args.parse_num::<u64>("seed") {
        Ok(s) => s.unwrap_or(42),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let config = match load_config(&args) {
        Ok(c) => c,
        Err(e) => return fail_err(&e),
    };
    let (corpus, truth) = match generate_synthetic_corpus(&config.synthetic, seed) {
        Ok(v) => v,
        Err(e) => return fail_err(&e),
    };
    if let Err(e) = io::write_corpus(&corpus, &out) {
        return fail_err(&e);
    }
    if let Err(e) = io::write_topic_model(&truth, &out) {
        return fail_err(&e);
    }
    let (min, mean, max) = corpus.length_summary();
    println!(
        "wrote corpus p={} n={} lengths(min/mean/max)={}/{:.1}/{} and truth to {}",
        corpus.vocab_size(),
        corpus.num_docs(),
        min,
        mean,
        max,
        out.display()
    );
    EXIT_OK
}

/// Summary of a fit written next to the estimate for later evaluation.
#[derive(serde::Serialize, serde::Deserialize)]
struct FitSummary {
    k: usize,
    clamp_count: usize,
    condition_number: f64,
    vertex_order: String,
    sigma: Vec<f64>,
    vertices: Vec<Vec<f64>>,
    merge: MergeMap,
}

const FIT_SUMMARY_FILE: &str = "fit.json";
const ESTIMATE_TOPICS_FILE: &str = "a_hat.csv";
const ESTIMATE_WEIGHTS_FILE: &str = "w_hat.csv";

fn cmd_fit(rest: &[String]) -> i32 {
    let args = match Args::parse(
        rest,
        &["corpus", "k", "out", "merge-threshold", "clamp-epsilon"],
        &["weights"],
    ) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let corpus_dir = match args.require("corpus") {
        Ok(c) => PathBuf::from(c),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let out = match args.require("out") {
        Ok(o) => PathBuf::from(o),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let k = match args.require("k").map(|v| v.parse::<usize>()) {
        Ok(Ok(k)) if k >= 1 => k,
        Ok(_) => return fail(EXIT_USAGE, "--k must be a positive integer"),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let mut options = FitOptions::new(k);
    match args.parse_num::<f64>("merge-threshold") {
        Ok(Some(f)) => options.merge_threshold_factor = f,
        Ok(None) => {}
        Err(e) => return fail(EXIT_USAGE, e),
    }
    match args.parse_num::<f64>("clamp-epsilon") {
        Ok(Some(f)) => options.clamp_epsilon = f,
        Ok(None) => {}
        Err(e) => return fail(EXIT_USAGE, e),
    }

    let corpus = match io::read_corpus(&corpus_dir) {
        Ok(c) => c,
        Err(e) => return fail_err(&e),
    };
    let fit = match topic_score_fit(&corpus, &options) {
        Ok(f) => f,
        Err(e) => return fail_err(&e),
    };
    if let Err(e) = io::write_matrix_csv(&fit.a_hat, &out.join(ESTIMATE_TOPICS_FILE)) {
        return fail_err(&e);
    }
    if args.flags.contains("weights") {
        // weights on the merged vocabulary, consistent with the estimate
        let working = if fit.merge_map.is_identity() {
            corpus.clone()
        } else {
            match crate::corpus::merge_rare_words(&corpus, options.merge_threshold_factor, k) {
                Ok((c, _)) => c,
                Err(e) => return fail_err(&e),
            }
        };
        let d = crate::corpus::empirical_frequencies(&working);
        let w = match estimate_weights(&d, &fit.decomposition.normalizer, &fit.a_hat) {
            Ok(w) => w,
            Err(e) => return fail_err(&e),
        };
        if let Err(e) = io::write_matrix_csv(&w, &out.join(ESTIMATE_WEIGHTS_FILE)) {
            return fail_err(&e);
        }
    }
    let summary = FitSummary {
        k,
        clamp_count: fit.clamp_count,
        condition_number: fit.simplex.condition_number,
        vertex_order: match fit.simplex.vertex_order {
            VertexOrder::Selection => "selection".into(),
            VertexOrder::Lexicographic => "lexicographic".into(),
        },
        sigma: fit.decomposition.sigma.clone(),
        vertices: (0..fit.simplex.vertices.rows())
            .map(|r| fit.simplex.vertices.row(r).to_vec())
            .collect(),
        merge: fit.merge_map.clone(),
    };
    if let Err(e) = io::write_json(&summary, &out.join(FIT_SUMMARY_FILE)) {
        return fail_err(&e);
    }
    println!(
        "fit k={} on p={} (merged {} words), wrote estimate to {}",
        k,
        corpus.vocab_size(),
        fit.merge_map.merged.len(),
        out.display()
    );
    EXIT_OK
}

#[derive(serde::Serialize)]
struct EvalOutput {
    total_l1: f64,
    permutation: Vec<usize>,
    per_topic_l1: Vec<f64>,
    merged_words: usize,
    weight_loss: Option<WeightLoss>,
}

fn cmd_eval(rest: &[String]) -> i32 {
    let args = match Args::parse(rest, &["estimate", "truth"], &[]) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let estimate_dir = match args.require("estimate") {
        Ok(d) => PathBuf::from(d),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let truth_dir = match args.require("truth") {
        Ok(d) => PathBuf::from(d),
        Err(e) => return fail(EXIT_USAGE, e),
    };

    let a_hat = match io::read_matrix_csv(&estimate_dir.join(ESTIMATE_TOPICS_FILE)) {
        Ok(m) => m,
        Err(e) => return fail_err(&e),
    };
    let truth = match io::read_topic_model(&truth_dir) {
        Ok(t) => t,
        Err(e) => return fail_err(&e),
    };

    // the estimate may live on a merged vocabulary; map the truth onto it
    let summary_path = estimate_dir.join(FIT_SUMMARY_FILE);
    let merge: MergeMap = if summary_path.exists() {
        match std::fs::read_to_string(&summary_path)
            .map_err(|source| Error::Io {
                path: summary_path.clone(),
                source,
            })
            .and_then(|text| {
                serde_json::from_str::<FitSummary>(&text).map_err(|e| Error::MalformedManifest {
                    path: summary_path.clone(),
                    reason: e.to_string(),
                })
            }) {
            Ok(s) => s.merge,
            Err(e) => return fail_err(&e),
        }
    } else {
        MergeMap::identity(truth.vocab_size())
    };
    let truth_merged = match merge.apply_to_model(&truth) {
        Ok(t) => t,
        Err(e) => return fail_err(&e),
    };

    let alignment = match align_columns(&a_hat, truth_merged.topics()) {
        Ok(a) => a,
        Err(e) => return fail_err(&e),
    };

    let w_hat_path = estimate_dir.join(ESTIMATE_WEIGHTS_FILE);
    let weight = if w_hat_path.exists() {
        match io::read_matrix_csv(&w_hat_path) {
            Ok(w_hat) => {
                match weight_loss(&w_hat, truth_merged.weights(), Some(&alignment.permutation)) {
                    Ok(l) => Some(l),
                    Err(e) => return fail_err(&e),
                }
            }
            Err(e) => return fail_err(&e),
        }
    } else {
        None
    };

    let output = EvalOutput {
        total_l1: alignment.total_l1,
        permutation: alignment.permutation,
        per_topic_l1: alignment.per_topic_l1,
        merged_words: merge.merged.len(),
        weight_loss: weight,
    };
    match serde_json::to_string_pretty(&output) {
        Ok(text) => {
            println!("{text}");
            EXIT_OK
        }
        Err(e) => fail(EXIT_NUMERICAL, format!("serialization failed: {e}")),
    }
}

fn resolve_threads(arg: Option<usize>, config: Option<usize>) -> usize {
    if let Some(t) = arg {
        return t.max(1);
    }
    if let Ok(env) = std::env::var("TOPIC_SPECTRA_THREADS") {
        if let Ok(t) = env.parse::<usize>() {
            return t.max(1);
        }
    }
    config.unwrap_or(1).max(1)
}

fn cmd_rate_study(rest: &[String]) -> i32 {
    let args = match Args::parse(rest, &["config", "out", "threads"], &[]) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let out = match args.require("out") {
        Ok(o) => PathBuf::from(o),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let thread_arg = match args.parse_num::<usize>("threads") {
        Ok(t) => t,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let config = match load_config(&args) {
        Ok(c) => c,
        Err(e) => return fail_err(&e),
    };
    let threads = resolve_threads(thread_arg, config.threads);

    let base = TrialConfig {
        synthetic: config.synthetic.clone(),
        fit: config.fit.clone(),
        compute_diagnostics: Default::default(),
        noiseless: config.noiseless,
        trial_index: 0,
        master_seed: config.master_seed,
    };
    let options = RateStudyOptions {
        axis: config.axis,
        values: config.values.clone(),
        trials: config.trials,
        include_log_factor: config.include_log_factor,
        threads,
    };
    let mut report = match rate_study(&base, &options) {
        Ok(r) => r,
        Err(e) => return fail_err(&e),
    };
    report.generated_at_unix_ms = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_millis() as u64);

    if let Err(e) = io::write_json(&report, &out.join("report.json")) {
        return fail_err(&e);
    }
    if let Err(e) = write_summary_csv(&report, &out.join("summary.csv")) {
        return fail_err(&e);
    }
    match report.slope {
        Some(s) => println!(
            "rate study over {}: slope {:.3} (r² {:.3}), wrote {}",
            report.axis.key(),
            s.slope,
            s.r_squared,
            out.display()
        ),
        None => println!(
            "rate study over {}: too few usable grid points for a slope, wrote {}",
            report.axis.key(),
            out.display()
        ),
    }
    EXIT_OK
}

fn cmd_diagnose(rest: &[String]) -> i32 {
    let args = match Args::parse(rest, &["corpus", "truth", "out", "merge-threshold"], &[]) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let corpus_dir = match args.require("corpus") {
        Ok(d) => PathBuf::from(d),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let truth_dir = match args.require("truth") {
        Ok(d) => PathBuf::from(d),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let out = match args.require("out") {
        Ok(o) => PathBuf::from(o),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let merge_threshold = match args.parse_num::<f64>("merge-threshold") {
        Ok(f) => f.unwrap_or(0.0),
        Err(e) => return fail(EXIT_USAGE, e),
    };

    let corpus = match io::read_corpus(&corpus_dir) {
        Ok(c) => c,
        Err(e) => return fail_err(&e),
    };
    let truth = match io::read_topic_model(&truth_dir) {
        Ok(t) => t,
        Err(e) => return fail_err(&e),
    };
    if truth.vocab_size() != corpus.vocab_size() || truth.num_docs() != corpus.num_docs() {
        return fail(
            EXIT_DATA,
            format!(
                "truth ({} words, {} docs) does not match corpus ({} words, {} docs)",
                truth.vocab_size(),
                truth.num_docs(),
                corpus.vocab_size(),
                corpus.num_docs()
            ),
        );
    }
    let k = truth.num_topics();

    let (corpus, truth) = if merge_threshold > 0.0 {
        let (merged, map) = match crate::corpus::merge_rare_words(&corpus, merge_threshold, k) {
            Ok(v) => v,
            Err(e) => return fail_err(&e),
        };
        let truth = match map.apply_to_model(&truth) {
            Ok(t) => t,
            Err(e) => return fail_err(&e),
        };
        (merged, truth)
    } else {
        (corpus, truth)
    };

    let d = crate::corpus::empirical_frequencies(&corpus);
    let normalizer = match build_normalization(&d, corpus.lengths()) {
        Ok(m) => m,
        Err(e) => return fail_err(&e),
    };
    let decomposition = match normalized_svd(&d, &normalizer, k) {
        Ok(d) => d,
        Err(e) => return fail_err(&e),
    };
    let pop = match population_spectra(&truth, corpus.lengths()) {
        Ok(p) => p,
        Err(e) => return fail_err(&e),
    };
    let diagnostics = match assumption_diagnostics(&truth, corpus.lengths()) {
        Ok(d) => d,
        Err(e) => return fail_err(&e),
    };
    let deviation = match entrywise_deviation(
        &decomposition.xi,
        &pop,
        &diagnostics,
        corpus.num_docs(),
        corpus.mean_length(),
    ) {
        Ok(d) => d,
        Err(e) => return fail_err(&e),
    };
    if let Err(e) = io::write_json(&deviation, &out.join("deviation.json")) {
        return fail_err(&e);
    }
    if let Err(e) = io::write_json(&diagnostics, &out.join("assumptions.json")) {
        return fail_err(&e);
    }
    if corpus.vocab_size() <= PERTURBATION_DENSE_LIMIT {
        let perturbation = match perturbation_norms(&corpus, &truth) {
            Ok(p) => p,
            Err(e) => return fail_err(&e),
        };
        if let Err(e) = io::write_json(&perturbation, &out.join("perturbation.json")) {
            return fail_err(&e);
        }
    }
    println!(
        "diagnose: sin_theta {:.3e}, ratio_median {:.3}, wrote {}",
        deviation.sin_theta,
        deviation.ratio_median,
        out.display()
    );
    EXIT_OK
}
