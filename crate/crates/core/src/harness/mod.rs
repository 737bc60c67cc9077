//! Experiment harness: error estimation, experiment suites, reports.

mod config;
mod experiments;
mod report;

pub use config::ExperimentConfig;
pub use experiments::{
    bound_validity_experiment, fit_scaling, missing_mass_estimate, missing_mass_estimate_with,
    missing_mass_experiment, net_growth_experiment, run_consistency_experiment, BenchRow, BoundValidity,
    MissingMassEstimate, NetGrowthRow,
};
pub use report::{
    write_bench_csv, write_net_growth_csv, Aggregate, Algo, BoundReport, ExperimentReport, MissingMassReport,
    TrialRecord,
};

use crate::datagen::Generator;
use crate::error::{Error, Result};
use crate::knn::KnnModel;
use crate::metric::{Dataset, Label, PointSet};
use crate::model::OptiNetModel;
use crate::par::{self, Parallelism};

/// Anything that labels a batch of points.
pub trait Classifier: Sync {
    fn predict_all(&self, points: &PointSet, par: Parallelism) -> Result<Vec<Label>>;
}

impl Classifier for OptiNetModel {
    fn predict_all(&self, points: &PointSet, par: Parallelism) -> Result<Vec<Label>> {
        OptiNetModel::predict_all(self, points, par)
    }
}

impl Classifier for KnnModel<'_> {
    fn predict_all(&self, points: &PointSet, par: Parallelism) -> Result<Vec<Label>> {
        KnnModel::predict_all(self, points, par)
    }
}

/// The Bayes classifier of a generator.
impl Classifier for Generator {
    fn predict_all(&self, points: &PointSet, par: Parallelism) -> Result<Vec<Label>> {
        par::map_range(par, points.len(), |i| self.bayes_predict(points.get(i))).into_iter().collect()
    }
}

/// Predicts the same label everywhere.
#[derive(Clone, Copy, Debug)]
pub struct Constant(pub Label);

impl Classifier for Constant {
    fn predict_all(&self, points: &PointSet, _: Parallelism) -> Result<Vec<Label>> {
        Ok(vec![self.0; points.len()])
    }
}

/// Monte-Carlo estimate of `P[Y ≠ f(X)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub rate: f64,
    /// Binomial standard error `sqrt(p̂(1−p̂)/m)`.
    pub std_err: f64,
    pub count: usize,
}

pub fn estimate_error<C: Classifier + ?Sized>(c: &C, test: &Dataset, par: Parallelism) -> Result<ErrorEstimate> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let preds = c.predict_all(test.points(), par)?;
    let wrong = preds.iter().zip(test.labels()).filter(|(p, y)| p != y).count();
    let m = test.len() as f64;
    let rate = wrong as f64 / m;
    Ok(ErrorEstimate { rate, std_err: (rate * (1.0 - rate) / m).sqrt(), count: test.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Metric;

    #[test]
    fn bayes_rule_on_realizable_hypercube() {
        let g = Generator::NoisyHypercube { dim: 3, flip: 0.0 };
        let test = g.sample(1000, 4).unwrap();
        let e = estimate_error(&g, &test, Parallelism::default()).unwrap();
        assert_eq!((e.rate, e.std_err), (0.0, 0.0));
    }

    #[test]
    fn constant_on_balanced_labels() {
        let g = Generator::GaussianMixture { dim: 1, mu: 1.0, sigma: 1.0 };
        let test = g.sample(20_000, 8).unwrap();
        let e = estimate_error(&Constant(0), &test, Parallelism::default()).unwrap();
        assert!((e.rate - 0.5).abs() <= 3.0 * e.std_err.max(0.5 / (20_000f64).sqrt()), "{e:?}");
    }

    #[test]
    fn toy_model_on_its_training_set() {
        let ds = Dataset::from_line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]).unwrap();
        let m = crate::model::fit(&ds, &Metric::L2, Some(1.0 / 16.0)).unwrap();
        let e = estimate_error(&m, &ds, Parallelism::Sequential).unwrap();
        assert_eq!(e.rate, m.alpha_star());
        assert_eq!(e.rate, 0.0);
    }

    #[test]
    fn empty_test_set() {
        let empty = Dataset::new(PointSet::dense(1, vec![]).unwrap(), vec![]).unwrap();
        assert!(estimate_error(&Constant(0), &empty, Parallelism::default()).is_err());
    }
}
