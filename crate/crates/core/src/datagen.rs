//! Synthetic labeled distributions with known Bayes risk.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metric::{Dataset, DistanceMatrix, Label, Metric, PointRef, PointSet};

/// Two-class generators. Label 0 is preferred on Bayes ties.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// Equal-prior mixture of `N(−μ·e₁, σ²I)` (label 0) and `N(+μ·e₁, σ²I)`
    /// (label 1).
    GaussianMixture { dim: usize, mu: f64, sigma: f64 },
    /// `x` uniform on `[0,1]^dim`; label 1 with probability `flip`,
    /// independently of `x`.
    NoisyHypercube { dim: usize, flip: f64 },
    /// Atom (id 0, label 0) with mass `atom_mass`; otherwise a uniform id in
    /// `1..=support`, label 1. Measured with the discrete metric.
    HeavyAtomDiscrete { atom_mass: f64, support: usize },
    /// Uniform on the unit sphere in `R^dim`; label 1 iff `x₁ > 0`.
    HypersphereShell { dim: usize },
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

impl Generator {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Generator::GaussianMixture { dim, mu, sigma } => dim >= 1 && mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            Generator::NoisyHypercube { dim, flip } => dim >= 1 && (0.0..=1.0).contains(&flip),
            Generator::HeavyAtomDiscrete { atom_mass, support } => support >= 1 && (0.0..=1.0).contains(&atom_mass),
            Generator::HypersphereShell { dim } => dim >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid generator parameters: {self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Generator::GaussianMixture { .. } => "gaussian_mixture",
            Generator::NoisyHypercube { .. } => "noisy_hypercube",
            Generator::HeavyAtomDiscrete { .. } => "heavy_atom_discrete",
            Generator::HypersphereShell { .. } => "hypersphere_shell",
        }
    }

    /// One-line parameter description used in report headers.
    pub fn describe(&self) -> String {
        match *self {
            Generator::GaussianMixture { dim, mu, sigma } => format!("gaussian_mixture dim={dim} mu={mu} sigma={sigma}"),
            Generator::NoisyHypercube { dim, flip } => format!("noisy_hypercube dim={dim} flip={flip}"),
            Generator::HeavyAtomDiscrete { atom_mass, support } => {
                format!("heavy_atom_discrete atom_mass={atom_mass} support={support}")
            }
            Generator::HypersphereShell { dim } => format!("hypersphere_shell dim={dim}"),
        }
    }

    /// The metric the generator's points live in.
    pub fn metric(&self) -> Metric {
        match *self {
            Generator::HeavyAtomDiscrete { support, .. } => {
                Metric::Precomputed(Arc::new(DistanceMatrix::discrete(support + 1)))
            }
            _ => Metric::L2,
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.sample_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Draws `n` i.i.d. pairs. Draws are sequential, so a larger sample from
    /// the same rng state extends a smaller one.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        self.validate()?;
        let mut labels = Vec::with_capacity(n);
        let points = match *self {
            Generator::GaussianMixture { dim, mu, sigma } => {
                let mut coords = Vec::with_capacity(n * dim);
                for _ in 0..n {
                    let label: Label = rng.random_bool(0.5).into();
                    let shift = if label == 1 { mu } else { -mu };
                    for j in 0..dim {
                        let z: f64 = rng.sample(StandardNormal);
                        coords.push(sigma * z + if j == 0 { shift } else { 0.0 });
                    }
                    labels.push(label);
                }
                PointSet::dense(dim, coords)?
            }
            Generator::NoisyHypercube { dim, flip } => {
                let mut coords = Vec::with_capacity(n * dim);
                for _ in 0..n {
                    coords.extend((0..dim).map(|_| rng.random::<f64>()));
                    labels.push(rng.random_bool(flip).into());
                }
                PointSet::dense(dim, coords)?
            }
            Generator::HeavyAtomDiscrete { atom_mass, support } => {
                let mut ids = Vec::with_capacity(n);
                for _ in 0..n {
                    if rng.random_bool(atom_mass) {
                        ids.push(0);
                        labels.push(0);
                    } else {
                        ids.push(rng.random_range(1..=support));
                        labels.push(1);
                    }
                }
                PointSet::ids(ids)
            }
            Generator::HypersphereShell { dim } => {
                let mut coords = Vec::with_capacity(n * dim);
                let mut z = vec![0.0f64; dim];
                for _ in 0..n {
                    let norm = loop {
                        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm > 0.0 {
                            break norm;
                        }
                    };
                    coords.extend(z.iter().map(|v| v / norm));
                    labels.push((z[0] > 0.0).into());
                }
                PointSet::dense(dim, coords)?
            }
        };
        Dataset::new(points, labels)
    }

    /// `R* = inf err(f)` in closed form.
    pub fn bayes_risk(&self) -> f64 {
        match *self {
            Generator::GaussianMixture { mu, sigma, .. } => std_normal_cdf(-mu.abs() / sigma),
            Generator::NoisyHypercube { flip, .. } => flip.min(1.0 - flip),
            Generator::HeavyAtomDiscrete { .. } | Generator::HypersphereShell { .. } => 0.0,
        }
    }

    /// `argmax_y η_y(x)`, ties to the smaller label.
    pub fn bayes_predict(&self, x: PointRef<'_>) -> Result<Label> {
        match (self, x) {
            (Generator::GaussianMixture { dim, mu, .. }, PointRef::Dense(v)) if v.len() == *dim => {
                let s = v[0] * mu.signum();
                Ok((*mu != 0.0 && s > 0.0).into())
            }
            (Generator::NoisyHypercube { dim, flip }, PointRef::Dense(v)) if v.len() == *dim => Ok((*flip > 0.5).into()),
            (Generator::HeavyAtomDiscrete { support, .. }, PointRef::Id(i)) if i <= *support => Ok((i != 0).into()),
            (Generator::HypersphereShell { dim }, PointRef::Dense(v)) if v.len() == *dim => Ok((v[0] > 0.0).into()),
            _ => Err(Error::Representation(format!("point outside the support representation of {}", self.name()))),
        }
    }

    pub fn label_count(&self) -> usize {
        2
    }
}
