//! Experiment suites.
//!
//! Trial `t` draws from `ChaCha8Rng::seed_from_u64(seed + t)`, using stream
//! 0 for the training sample, 1 for the test sample and 2 for missing-mass
//! probes. Training samples for different `n` in the same trial are
//! therefore nested prefixes of one sequence. Trials run in parallel but
//! results are gathered in `(n, trial)` order.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bound::default_delta;
use crate::datagen::Generator;
use crate::error::{Error, Result};
use crate::harness::report::{median, Algo, BoundReport, ExperimentReport, MissingMassReport, TrialRecord};
use crate::harness::{estimate_error, ExperimentConfig};
use crate::knn::{default_k, KnnModel};
use crate::metric::{Dataset, Metric};
use crate::model::{self, FitOptions, OptiNetModel, SelectionMode};
use crate::net::farthest_first_with;
use crate::par::{self, Parallelism};

const TRAIN_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;
const PROBE_STREAM: u64 = 2;

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

fn trial_rng(seed: u64, trial: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
    rng.set_stream(stream);
    rng
}

fn jobs(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    cfg.n_grid.iter().flat_map(|&n| (0..cfg.trials).map(move |t| (n, t))).collect()
}

fn base_meta(cfg: &ExperimentConfig, experiment: &str, metric: &Metric) -> Vec<(String, String)> {
    let mut meta = vec![
        ("experiment".to_string(), experiment.to_string()),
        ("generator".to_string(), cfg.generator.describe()),
        ("metric".to_string(), metric.id().to_string()),
        ("bayes_risk".to_string(), cfg.generator.bayes_risk().to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
        ("trials".to_string(), cfg.trials.to_string()),
        ("n_grid".to_string(), cfg.n_grid.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")),
    ];
    if let Some(d) = cfg.delta {
        meta.push(("delta".to_string(), d.to_string()));
    }
    meta
}

struct Fitted {
    model: OptiNetModel,
    fit_ms: f64,
}

fn fit_trial(cfg: &ExperimentConfig, train: &Dataset, metric: &Metric, delta: f64, trial: usize, par: Parallelism) -> Result<Fitted> {
    let start = Instant::now();
    let model = match cfg.selection {
        SelectionMode::Bound => {
            model::fit_with(train, metric, &FitOptions { delta: Some(delta), start: 0, parallelism: par })?
        }
        SelectionMode::Holdout => model::fit_holdout_with(train, metric, trial_seed(cfg.seed, trial), par)?,
    };
    Ok(Fitted { model, fit_ms: start.elapsed().as_secs_f64() * 1e3 })
}

fn optinet_record(n: usize, trial: usize, fitted: &Fitted, test: &Dataset, bayes: f64, timing: bool, par: Parallelism) -> Result<TrialRecord> {
    let m = &fitted.model;
    let e = estimate_error(m, test, par)?;
    Ok(TrialRecord {
        n,
        trial,
        algo: Algo::OptiNet,
        test_err: e.rate,
        test_std_err: e.std_err,
        bayes_risk: bayes,
        excess: e.rate - bayes,
        m: Some(m.m_star()),
        gamma: Some(m.gamma_star()),
        alpha: Some(m.alpha_star()),
        q: Some(m.q_star()),
        fit_ms: timing.then_some(fitted.fit_ms),
    })
}

/// OptiNet (and optionally k-NN) test error against the Bayes risk along
/// the `n` grid.
pub fn run_consistency_experiment(cfg: &ExperimentConfig, par: Parallelism) -> Result<ExperimentReport> {
    cfg.validate()?;
    let metric = cfg.metric()?;
    let bayes = cfg.generator.bayes_risk();
    let jobs = jobs(cfg);
    let results = par::map_range(par, jobs.len(), |j| -> Result<Vec<TrialRecord>> {
        let (n, trial) = jobs[j];
        let train = cfg.generator.sample_with(n, &mut trial_rng(cfg.seed, trial, TRAIN_STREAM))?;
        let test = cfg.generator.sample_with(cfg.test_size, &mut trial_rng(cfg.seed, trial, TEST_STREAM))?;
        let delta = cfg.delta.unwrap_or_else(|| default_delta(n));
        let fitted = fit_trial(cfg, &train, &metric, delta, trial, par)?;
        let mut rows = vec![optinet_record(n, trial, &fitted, &test, bayes, cfg.timing, par)?];
        if cfg.baseline {
            let k = cfg.k.unwrap_or_else(|| default_k(n)).min(n);
            let start = Instant::now();
            let knn = KnnModel::new(&train, &metric, k)?;
            let fit_ms = start.elapsed().as_secs_f64() * 1e3;
            let e = estimate_error(&knn, &test, par)?;
            rows.push(TrialRecord {
                n,
                trial,
                algo: Algo::Knn,
                test_err: e.rate,
                test_std_err: e.std_err,
                bayes_risk: bayes,
                excess: e.rate - bayes,
                m: None,
                gamma: None,
                alpha: None,
                q: None,
                fit_ms: cfg.timing.then_some(fit_ms),
            });
        }
        Ok(rows)
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let mut meta = base_meta(cfg, "consistency", &metric);
    meta.push(("selection".to_string(), cfg.selection.as_str().to_string()));
    meta.push(("test_size".to_string(), cfg.test_size.to_string()));
    Ok(ExperimentReport::new(meta, rows))
}

/// Outcome of the bound-validity Monte Carlo at one sample size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundValidity {
    pub n: usize,
    pub delta: f64,
    pub violations: usize,
    pub trials: usize,
    pub frequency: f64,
}

/// Counts trials whose estimated test error, less three binomial standard
/// errors, still exceeds the selected bound value `q_star`.
pub fn bound_validity_experiment(cfg: &ExperimentConfig, par: Parallelism) -> Result<BoundReport> {
    cfg.validate()?;
    if cfg.selection != SelectionMode::Bound {
        return Err(Error::Config("bound validity needs selection = \"bound\"".into()));
    }
    let metric = cfg.metric()?;
    let bayes = cfg.generator.bayes_risk();
    let jobs = jobs(cfg);
    let results = par::map_range(par, jobs.len(), |j| -> Result<(TrialRecord, bool)> {
        let (n, trial) = jobs[j];
        let train = cfg.generator.sample_with(n, &mut trial_rng(cfg.seed, trial, TRAIN_STREAM))?;
        let test = cfg.generator.sample_with(cfg.test_size, &mut trial_rng(cfg.seed, trial, TEST_STREAM))?;
        let delta = cfg.delta.unwrap_or_else(|| default_delta(n));
        let fitted = fit_trial(cfg, &train, &metric, delta, trial, par)?;
        let rec = optinet_record(n, trial, &fitted, &test, bayes, cfg.timing, par)?;
        let violated = rec.test_err - 3.0 * rec.test_std_err > fitted.model.q_star();
        Ok((rec, violated))
    });
    let mut rows = Vec::with_capacity(jobs.len());
    let mut flags = Vec::with_capacity(jobs.len());
    for r in results {
        let (rec, v) = r?;
        rows.push(rec);
        flags.push(v);
    }
    let validity = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let violations = rows.iter().zip(&flags).filter(|(r, &v)| r.n == n && v).count();
            BoundValidity {
                n,
                delta: cfg.delta.unwrap_or_else(|| default_delta(n)),
                violations,
                trials: cfg.trials,
                frequency: violations as f64 / cfg.trials as f64,
            }
        })
        .collect();
    let mut meta = base_meta(cfg, "bound", &metric);
    meta.push(("test_size".to_string(), cfg.test_size.to_string()));
    Ok(BoundReport { meta, validity, rows })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetGrowthRow {
    pub n: usize,
    pub gamma: f64,
    /// Median over trials of `M_n(γ) = 2·|γ-net|`.
    pub median_m: f64,
    pub ratio: f64,
    pub max_m: usize,
}

/// Compression size of the farthest-first γ-net as `n` grows, at fixed `γ`.
pub fn net_growth_experiment(cfg: &ExperimentConfig, par: Parallelism) -> Result<Vec<NetGrowthRow>> {
    cfg.validate()?;
    let gamma = cfg.gamma()?;
    let metric = cfg.metric()?;
    let jobs = jobs(cfg);
    let sizes = par::map_range(par, jobs.len(), |j| -> Result<usize> {
        let (n, trial) = jobs[j];
        let train = cfg.generator.sample_with(n, &mut trial_rng(cfg.seed, trial, TRAIN_STREAM))?;
        let h = farthest_first_with(&train, &metric, 0, par)?;
        let k = h.prefix_for_gamma(gamma)?.expect("positive gamma always has a prefix");
        Ok(2 * k)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(cfg
        .n_grid
        .iter()
        .map(|&n| {
            let ms: Vec<usize> = jobs.iter().zip(&sizes).filter(|((jn, _), _)| *jn == n).map(|(_, &m)| m).collect();
            let med = median(&ms.iter().map(|&m| m as f64).collect::<Vec<_>>());
            NetGrowthRow { n, gamma, median_m: med, ratio: med / n as f64, max_m: ms.iter().copied().max().unwrap_or(0) }
        })
        .collect())
}

/// Monte-Carlo estimate of the γ-missing mass of a training sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MissingMassEstimate {
    pub gamma: f64,
    pub n: usize,
    pub estimate: f64,
    pub std_err: f64,
    pub probes: usize,
}

/// Fraction of `probes` fresh draws at distance `≥ gamma` from every
/// training point.
pub fn missing_mass_estimate(train: &Dataset, g: &Generator, gamma: f64, probes: usize, seed: u64) -> Result<MissingMassEstimate> {
    missing_mass_estimate_with(train, g, &g.metric(), gamma, probes, &mut ChaCha8Rng::seed_from_u64(seed), Parallelism::default())
}

pub fn missing_mass_estimate_with<R: Rng + ?Sized>(
    train: &Dataset,
    g: &Generator,
    metric: &Metric,
    gamma: f64,
    probes: usize,
    rng: &mut R,
    par: Parallelism,
) -> Result<MissingMassEstimate> {
    if probes == 0 {
        return Err(Error::param("probes must be at least 1"));
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::param(format!("gamma must be positive, got {gamma}")));
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let fresh = g.sample_with(probes, rng)?;
    metric.check_points(train.points())?;
    metric.check_points(fresh.points())?;
    metric.check_pair(train.point(0), fresh.point(0))?;
    let missed = par::map_range(par, probes, |p| {
        let x = fresh.point(p);
        (0..train.len()).all(|i| metric.distance_unchecked(x, train.point(i)) >= gamma)
    });
    let count = missed.iter().filter(|&&m| m).count();
    let estimate = count as f64 / probes as f64;
    Ok(MissingMassEstimate {
        gamma,
        n: train.len(),
        estimate,
        std_err: (estimate * (1.0 - estimate) / probes as f64).sqrt(),
        probes,
    })
}

pub fn missing_mass_experiment(cfg: &ExperimentConfig, par: Parallelism) -> Result<MissingMassReport> {
    cfg.validate()?;
    let gamma = cfg.gamma()?;
    let metric = cfg.metric()?;
    let jobs = jobs(cfg);
    let estimates = par::map_range(par, jobs.len(), |j| -> Result<(usize, MissingMassEstimate)> {
        let (n, trial) = jobs[j];
        let train = cfg.generator.sample_with(n, &mut trial_rng(cfg.seed, trial, TRAIN_STREAM))?;
        let est = missing_mass_estimate_with(
            &train,
            &cfg.generator,
            &metric,
            gamma,
            cfg.probes,
            &mut trial_rng(cfg.seed, trial, PROBE_STREAM),
            par,
        )?;
        Ok((trial, est))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut meta = base_meta(cfg, "missing-mass", &metric);
    meta.push(("gamma".to_string(), gamma.to_string()));
    meta.push(("probes".to_string(), cfg.probes.to_string()));
    Ok(MissingMassReport { meta, estimates })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    /// Fastest of the repetitions.
    pub fit_ms: f64,
}

/// Wall time of a bound-mode fit at each size, the fastest of `reps`
/// rounds. Each round visits every size once, so slow periods on a busy
/// machine hit all sizes alike.
pub fn fit_scaling(g: &Generator, sizes: &[usize], reps: usize, seed: u64, par: Parallelism) -> Result<Vec<BenchRow>> {
    let metric = g.metric();
    let data = sizes.iter().map(|&n| g.sample(n, seed)).collect::<Result<Vec<_>>>()?;
    let mut best = vec![f64::INFINITY; sizes.len()];
    for _ in 0..reps.max(1) {
        for (ds, b) in data.iter().zip(best.iter_mut()) {
            let start = Instant::now();
            model::fit_with(ds, &metric, &FitOptions { parallelism: par, ..FitOptions::default() })?;
            *b = b.min(start.elapsed().as_secs_f64() * 1e3);
        }
    }
    Ok(sizes.iter().zip(best).map(|(&n, fit_ms)| BenchRow { n, fit_ms }).collect())
}
