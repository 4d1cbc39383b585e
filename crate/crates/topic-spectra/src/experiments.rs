//! Seeded Monte-Carlo orchestration: single trials that never panic,
//! rate studies over a parameter axis, and the log-log slope fit that
//! turns per-point losses into an empirical convergence rate.
//!
//! Trial seeds derive from `(master_seed, trial_index)` through the
//! SplitMix64 finalizer (see [`crate::rng::mix_seed`]), so results do not
//! depend on scheduling or thread count; reports are sorted by grid point
//! and trial index before aggregation.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::corpus::{
    empirical_frequencies, generate_synthetic_corpus, merge_rare_words, LengthLaw, MergeMap,
    SyntheticParams,
};
use crate::error::{Error, Result};
use crate::estimator::{estimate_weights, fit_from_frequencies, FitOptions};
use crate::metrics::{
    align_columns, assumption_diagnostics, entrywise_deviation, median,
    perturbation_norms_from_frequencies, spearman, weight_loss,
};
use crate::rng::mix_seed;
use crate::spectral::{build_normalization, build_population_normalization, population_spectra};

/// Which optional diagnostics a trial computes on top of the topic loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DiagnosticsFlags {
    pub deviation: bool,
    pub perturbation_norms: bool,
    pub weights: bool,
}

/// One trial: generate, fit, evaluate.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrialConfig {
    pub synthetic: SyntheticParams,
    pub fit: FitOptions,
    #[serde(default)]
    pub compute_diagnostics: DiagnosticsFlags,
    /// Route expected frequencies and the population normalizer through
    /// the estimator instead of the sampled counts.
    #[serde(default)]
    pub noiseless: bool,
    pub trial_index: u64,
    pub master_seed: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub seed: u64,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, serde::Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Completed(TrialMetrics),
    Failed { stage: String, message: String },
}

impl TrialOutcome {
    pub fn metrics(&self) -> Option<&TrialMetrics> {
        match self {
            TrialOutcome::Completed(m) => Some(m),
            TrialOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TrialMetrics {
    /// l1 topic loss against the (merged) ground truth under the best
    /// column permutation.
    pub total_l1: f64,
    pub per_topic_l1: Vec<f64>,
    pub merged_words: usize,
    pub clamp_count: usize,
    pub weights: Option<WeightMetrics>,
    pub deviation: Option<DeviationMetrics>,
    pub perturbation: Option<PerturbationMetrics>,
}

/// Weight recovery with the true topic matrix supplied, isolating the
/// per-document noise term.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WeightMetrics {
    pub max_l1: f64,
    pub mean_l1: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DeviationMetrics {
    pub sin_theta: f64,
    pub ratio_max: f64,
    pub ratio_median: f64,
    /// Median over words of the row deviation divided by sqrt(h_j).
    pub median_dev_over_sqrt_h: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PerturbationMetrics {
    pub g_minus_g0_norm: f64,
    /// Rank correlation of squared projected row norms with the word-mass
    /// profile; reported for inspection, flat in practice.
    pub row_mass_spearman: f64,
}

/// Runs one trial. Failures at any stage are captured in the outcome,
/// never raised.
pub fn run_trial(config: &TrialConfig) -> TrialResult {
    let seed = mix_seed(config.master_seed, config.trial_index);
    let outcome = match run_trial_inner(config, seed) {
        Ok(metrics) => TrialOutcome::Completed(metrics),
        Err(e) => TrialOutcome::Failed {
            stage: e.stage().unwrap_or("trial").to_string(),
            message: e.to_string(),
        },
    };
    TrialResult {
        trial_index: config.trial_index,
        seed,
        outcome,
    }
}

fn run_trial_inner(config: &TrialConfig, seed: u64) -> Result<TrialMetrics> {
    let (corpus, truth) = generate_synthetic_corpus(&config.synthetic, seed)
        .map_err(|e| e.at_stage("generate"))?;

    // preprocessing happens once here so the ground truth can be mapped
    // onto the merged vocabulary for evaluation
    let (working, merge_map) = if config.fit.merge_threshold_factor > 0.0 {
        merge_rare_words(&corpus, config.fit.merge_threshold_factor, config.fit.k)
            .map_err(|e| e.at_stage("merge"))?
    } else {
        (corpus.clone(), MergeMap::identity(corpus.vocab_size()))
    };
    let truth = merge_map
        .apply_to_model(&truth)
        .map_err(|e| e.at_stage("merge"))?;
    let lengths = working.lengths().to_vec();

    let (d, normalizer) = if config.noiseless {
        let d0 = truth.expected_frequencies();
        let m0 = build_population_normalization(&truth, &lengths)
            .map_err(|e| e.at_stage("normalize"))?;
        (d0, m0)
    } else {
        let d = empirical_frequencies(&working);
        let m = build_normalization(&d, &lengths).map_err(|e| e.at_stage("normalize"))?;
        (d, m)
    };

    let fit = fit_from_frequencies(&d, &normalizer, &config.fit.clone().without_merge())?;

    let align =
        align_columns(&fit.a_hat, truth.topics()).map_err(|e| e.at_stage("evaluate"))?;

    let weights = if config.compute_diagnostics.weights {
        // true topic matrix supplied, per the weight-recovery theory
        let w_hat = estimate_weights(&d, &normalizer, truth.topics())
            .map_err(|e| e.at_stage("weights"))?;
        let loss = weight_loss(&w_hat, truth.weights(), None)
            .map_err(|e| e.at_stage("weights"))?;
        Some(WeightMetrics {
            max_l1: loss.max_l1,
            mean_l1: loss.mean_l1,
        })
    } else {
        None
    };

    let deviation = if config.compute_diagnostics.deviation {
        let pop = population_spectra(&truth, &lengths).map_err(|e| e.at_stage("deviation"))?;
        let diag =
            assumption_diagnostics(&truth, &lengths).map_err(|e| e.at_stage("deviation"))?;
        let report = entrywise_deviation(
            &fit.decomposition.xi,
            &pop,
            &diag,
            lengths.len(),
            working.mean_length(),
        )
        .map_err(|e| e.at_stage("deviation"))?;
        let dev_over_sqrt_h: Vec<f64> = report
            .row_dev
            .iter()
            .zip(&diag.h)
            .map(|(d, h)| d / h.sqrt())
            .collect();
        Some(DeviationMetrics {
            sin_theta: report.sin_theta,
            ratio_max: report.ratio_max,
            ratio_median: report.ratio_median,
            median_dev_over_sqrt_h: median(&dev_over_sqrt_h),
        })
    } else {
        None
    };

    let perturbation = if config.compute_diagnostics.perturbation_norms {
        let report = perturbation_norms_from_frequencies(
            &d,
            &normalizer.diag().to_vec(),
            &lengths,
            &truth,
        )
        .map_err(|e| e.at_stage("perturbation"))?;
        let diag = assumption_diagnostics(&truth, &lengths)
            .map_err(|e| e.at_stage("perturbation"))?;
        let sq: Vec<f64> = report
            .row_projected_norms
            .iter()
            .map(|&v| v * v)
            .collect();
        Some(PerturbationMetrics {
            g_minus_g0_norm: report.g_minus_g0_norm,
            row_mass_spearman: spearman(&sq, &diag.h),
        })
    } else {
        None
    };

    Ok(TrialMetrics {
        total_l1: align.total_l1,
        per_topic_l1: align.per_topic_l1,
        merged_words: merge_map.merged.len(),
        clamp_count: fit.clamp_count,
        weights,
        deviation,
        perturbation,
    })
}

/// Runs a batch of trials, optionally across threads. Output order always
/// matches input order; determinism comes from per-trial seeds.
pub fn run_trials(configs: &[TrialConfig], threads: usize) -> Vec<TrialResult> {
    if threads <= 1 || configs.len() <= 1 {
        return configs.iter().map(run_trial).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<TrialResult>>> =
        Mutex::new((0..configs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.min(configs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= configs.len() {
                    break;
                }
                let result = run_trial(&configs[i]);
                slots.lock().expect("result mutex")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("result mutex")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

/// Which model dimension a rate study sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Docs,
    DocLength,
    Vocab,
}

impl Axis {
    pub fn parse(s: &str) -> Option<Axis> {
        match s {
            "n" | "docs" => Some(Axis::Docs),
            "N" | "doc_length" | "len" => Some(Axis::DocLength),
            "p" | "vocab" => Some(Axis::Vocab),
            _ => None,
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            Axis::Docs => "n",
            Axis::DocLength => "doc_length",
            Axis::Vocab => "p",
        }
    }

    fn apply(&self, params: &SyntheticParams, value: u64) -> SyntheticParams {
        let mut p = params.clone();
        match self {
            Axis::Docs => p.n = value as usize,
            Axis::DocLength => p.length_law = LengthLaw::Fixed(value as u32),
            Axis::Vocab => p.p = value as usize,
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Document length at least the vocabulary size.
    Long,
    /// Document length below the vocabulary size.
    Short,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct GridPointReport {
    pub p: usize,
    pub n: usize,
    pub doc_length: f64,
    pub regime: Regime,
    /// The theoretical rate variable sqrt(p/(N·n)), times sqrt(ln n) when
    /// the log factor is enabled.
    pub x: f64,
    pub median_loss: Option<f64>,
    pub mean_loss: Option<f64>,
    pub std_loss: Option<f64>,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub failure_reasons: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TrialRecord {
    pub point: usize,
    #[serde(flatten)]
    pub result: TrialResult,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RateStudyReport {
    pub axis: Axis,
    pub trials_per_point: usize,
    pub master_seed: u64,
    pub include_log_factor: bool,
    pub grid: Vec<GridPointReport>,
    /// OLS of ln(median loss) against ln(x); near +1 when the loss tracks
    /// the theoretical rate.
    pub slope: Option<SlopeFit>,
    pub trial_records: Vec<TrialRecord>,
    /// Wall-clock stamp, the one non-deterministic field; filled by
    /// callers that want it.
    pub generated_at_unix_ms: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RateStudyOptions {
    pub axis: Axis,
    pub values: Vec<u64>,
    pub trials: usize,
    pub include_log_factor: bool,
    pub threads: usize,
}

/// Sweeps one axis, running `trials` seeded trials per grid point, and
/// fits the empirical convergence slope against the theoretical rate
/// variable.
pub fn rate_study(base: &TrialConfig, options: &RateStudyOptions) -> Result<RateStudyReport> {
    if options.values.len() < 3 {
        return Err(Error::Domain {
            what: format!(
                "rate study needs at least 3 axis values, got {}",
                options.values.len()
            ),
        });
    }
    if options.trials < 5 {
        return Err(Error::Domain {
            what: format!("rate study needs at least 5 trials per point, got {}", options.trials),
        });
    }

    let mut configs = Vec::with_capacity(options.values.len() * options.trials);
    for (point, &value) in options.values.iter().enumerate() {
        let synthetic = options.axis.apply(&base.synthetic, value);
        for t in 0..options.trials {
            configs.push(TrialConfig {
                synthetic: synthetic.clone(),
                fit: base.fit.clone(),
                compute_diagnostics: base.compute_diagnostics,
                noiseless: base.noiseless,
                trial_index: (point * options.trials + t) as u64,
                master_seed: base.master_seed,
            });
        }
    }
    let results = run_trials(&configs, options.threads);

    let mut grid = Vec::with_capacity(options.values.len());
    let mut trial_records = Vec::with_capacity(results.len());
    for (point, &value) in options.values.iter().enumerate() {
        let synthetic = options.axis.apply(&base.synthetic, value);
        let point_results = &results[point * options.trials..(point + 1) * options.trials];
        let mut losses: Vec<f64> = vec![];
        let mut failure_reasons: BTreeMap<String, usize> = BTreeMap::new();
        for r in point_results {
            match &r.outcome {
                TrialOutcome::Completed(m) => losses.push(m.total_l1),
                TrialOutcome::Failed { stage, message } => {
                    *failure_reasons
                        .entry(format!("{stage}: {message}"))
                        .or_insert(0) += 1;
                }
            }
            trial_records.push(TrialRecord {
                point,
                result: r.clone(),
            });
        }
        let doc_length = synthetic.length_law.nominal();
        let mut x = (synthetic.p as f64 / (doc_length * synthetic.n as f64)).sqrt();
        if options.include_log_factor {
            x *= (synthetic.n as f64).ln().sqrt();
        }
        let (median_loss, mean_loss, std_loss) = if losses.is_empty() {
            (None, None, None)
        } else {
            let mean = losses.iter().sum::<f64>() / losses.len() as f64;
            let std = if losses.len() > 1 {
                (losses.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (losses.len() - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            (Some(median(&losses)), Some(mean), Some(std))
        };
        grid.push(GridPointReport {
            p: synthetic.p,
            n: synthetic.n,
            doc_length,
            regime: if doc_length >= synthetic.p as f64 {
                Regime::Long
            } else {
                Regime::Short
            },
            x,
            median_loss,
            mean_loss,
            std_loss,
            trials_ok: losses.len(),
            trials_failed: options.trials - losses.len(),
            failure_reasons,
        });
    }

    if grid.iter().all(|g| g.trials_ok == 0) {
        let mut digest: BTreeMap<&String, usize> = BTreeMap::new();
        for g in &grid {
            for (reason, count) in &g.failure_reasons {
                *digest.entry(reason).or_insert(0) += count;
            }
        }
        let summary = digest
            .into_iter()
            .map(|(reason, count)| format!("{count}x {reason}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::AllTrialsFailed { digest: summary });
    }

    let usable: Vec<(&GridPointReport, f64)> = grid
        .iter()
        .filter_map(|g| g.median_loss.map(|m| (g, m)))
        .filter(|(_, m)| *m > 0.0)
        .collect();
    let slope = if usable.len() >= 3 {
        let xs: Vec<f64> = usable.iter().map(|(g, _)| g.x).collect();
        let ys: Vec<f64> = usable.iter().map(|(_, m)| *m).collect();
        Some(fit_loglog_slope(&xs, &ys)?)
    } else {
        None
    };

    Ok(RateStudyReport {
        axis: options.axis,
        trials_per_point: options.trials,
        master_seed: base.master_seed,
        include_log_factor: options.include_log_factor,
        grid,
        slope,
        trial_records,
        generated_at_unix_ms: None,
    })
}

/// Ordinary least squares on `(ln x, ln y)`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::Domain {
            what: format!(
                "log-log fit needs matched inputs of length >= 3, got {} and {}",
                xs.len(),
                ys.len()
            ),
        });
    }
    for (&x, &y) in xs.iter().zip(ys) {
        if !(x > 0.0) || !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain {
                what: format!("log-log fit needs positive finite inputs, got ({x}, {y})"),
            });
        }
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..lx.len() {
        let dx = lx[i] - mx;
        let dy = ly[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Domain {
            what: "log-log fit needs at least two distinct x values".into(),
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Writes the per-grid-point summary table; the fitted slope triple is
/// repeated on every row for easy grepping and plotting.
pub fn write_summary_csv(report: &RateStudyReport, path: &Path) -> Result<()> {
    let mut out = String::from(
        "p,n,doc_length,regime,x,median_loss,mean_loss,std_loss,trials_ok,trials_failed,slope,intercept,r_squared\n",
    );
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
    for g in &report.grid {
        let regime = match g.regime {
            Regime::Long => "long",
            Regime::Short => "short",
        };
        out.push_str(&format!(
            "{},{},{},{},{:.6e},{},{},{},{},{},{},{},{}\n",
            g.p,
            g.n,
            g.doc_length,
            regime,
            g.x,
            fmt(g.median_loss),
            fmt(g.mean_loss),
            fmt(g.std_loss),
            g.trials_ok,
            g.trials_failed,
            fmt(report.slope.map(|s| s.slope)),
            fmt(report.slope.map(|s| s.intercept)),
            fmt(report.slope.map(|s| s.r_squared)),
        ));
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
