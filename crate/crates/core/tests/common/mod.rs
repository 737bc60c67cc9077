#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};

use optinet::bound;
use optinet::metric::{Dataset, Label, Metric, PointSet, SampleDistance};
use optinet::net::NetHierarchy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small integer-grid datasets: lots of tied distances and some duplicates.
pub fn grid_dataset(seed: u64, n: usize, dim: usize, side: u32, labels: Label) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * dim).map(|_| rng.random_range(0..side) as f64).collect();
    let ys = (0..n).map(|_| rng.random_range(0..labels)).collect();
    Dataset::new(PointSet::dense(dim, coords).unwrap(), ys).unwrap()
}

pub fn uniform_dataset(seed: u64, n: usize, dim: usize, labels: Label) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    let ys = (0..n).map(|_| rng.random_range(0..labels)).collect();
    Dataset::new(PointSet::dense(dim, coords).unwrap(), ys).unwrap()
}

/// A random instance of one of the metric kinds.
pub fn random_instance(seed: u64, max_n: usize) -> (Dataset, Metric) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.random_range(1..=max_n);
    let labels = rng.random_range(1..=4);
    match rng.random_range(0..5) {
        0 => (grid_dataset(seed, n, rng.random_range(1..=3), 5, labels), Metric::L2),
        1 => (grid_dataset(seed, n, 2, 4, labels), Metric::L1),
        2 => (uniform_dataset(seed, n, 3, labels), Metric::LInf),
        3 => {
            let len = rng.random_range(1..=6);
            let seqs = (0..n).map(|_| (0..len).map(|_| b"ACGT"[rng.random_range(0..4)]).collect()).collect();
            let ys = (0..n).map(|_| rng.random_range(0..labels)).collect();
            (Dataset::new(PointSet::seqs(seqs).unwrap(), ys).unwrap(), Metric::Hamming)
        }
        _ => (uniform_dataset(seed, n, 2, labels), Metric::L2),
    }
}

pub fn dist_matrix(ds: &Dataset, metric: &Metric) -> Vec<Vec<f64>> {
    (0..ds.len()).map(|i| (0..ds.len()).map(|j| metric.distance(ds.point(i), ds.point(j)).unwrap()).collect()).collect()
}

/// Cell of every point under `centers`: nearest center, ties to the
/// smaller sample index.
pub fn brute_cells(d: &[Vec<f64>], centers: &[usize]) -> Vec<usize> {
    (0..d.len())
        .map(|x| {
            let mut best = 0;
            for c in 1..centers.len() {
                let (dc, db) = (d[x][centers[c]], d[x][centers[best]]);
                if dc < db || (dc == db && centers[c] < centers[best]) {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Majority label per cell (ties to the smaller label) and the number of
/// points disagreeing with their cell's majority.
pub fn brute_prefix(d: &[Vec<f64>], labels: &[Label], centers: &[usize]) -> (Vec<Label>, usize) {
    let cells = brute_cells(d, centers);
    let max_label = labels.iter().copied().max().unwrap_or(0) as usize;
    let mut votes = vec![vec![0usize; max_label + 1]; centers.len()];
    for (x, &c) in cells.iter().enumerate() {
        votes[c][labels[x] as usize] += 1;
    }
    let majority: Vec<Label> = votes
        .iter()
        .map(|v| {
            let mut best = 0;
            for (y, &count) in v.iter().enumerate() {
                if count > v[best] {
                    best = y;
                }
            }
            best as Label
        })
        .collect();
    let errors = cells.iter().enumerate().filter(|&(x, &c)| majority[c] != labels[x]).count();
    (majority, errors)
}

/// Valid prefix sizes of a hierarchy: `k = 1` and every `k` with
/// `r_{k+1} < r_k`.
pub fn valid_ks(h: &NetHierarchy) -> Vec<usize> {
    (1..=h.len()).filter(|&k| k == 1 || h.radius(k + 1) < h.radius(k)).collect()
}

/// Exhaustive bound minimization over valid prefixes; ties keep the
/// smallest `k`.
pub fn brute_minimizer(d: &[Vec<f64>], labels: &[Label], h: &NetHierarchy, delta: f64) -> (usize, f64, f64) {
    let n = labels.len();
    let mut best: Option<(usize, f64, f64)> = None;
    for k in valid_ks(h) {
        let (_, errors) = brute_prefix(d, labels, &h.perm()[..k]);
        let alpha = errors as f64 / n as f64;
        let q = bound::q(n, alpha, 2 * k, delta).unwrap();
        if best.is_none_or(|b| q < b.1) {
            best = Some((k, q, alpha));
        }
    }
    best.unwrap()
}

/// Distance oracle that counts its evaluations.
pub struct Counting<'a> {
    pub d: &'a [Vec<f64>],
    pub calls: AtomicUsize,
}

impl<'a> Counting<'a> {
    pub fn new(d: &'a [Vec<f64>]) -> Self {
        Counting { d, calls: AtomicUsize::new(0) }
    }

    pub fn count(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl SampleDistance for Counting<'_> {
    fn len(&self) -> usize {
        self.d.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.d[i][j]
    }
}

/// Plain sample-index oracle over a dense matrix.
pub struct Table<'a>(pub &'a [Vec<f64>]);

impl SampleDistance for Table<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }
}

/// Three scales inside `(r_{k+1}, r_k]`.
pub fn gamma_probes(h: &NetHierarchy, k: usize) -> [f64; 3] {
    let (hi, lo) = (h.radius(k), h.radius(k + 1));
    if hi.is_infinite() {
        return [lo * 2.0 + 1.0, lo + 1e-9 * (1.0 + lo), f64::MAX];
    }
    [hi, lo + (hi - lo) / 2.0, (lo + (hi - lo) * 1e-6).max(lo.next_up())]
}

/// Fresh unlabeled points in the same representation as `ds`.
pub fn probes_like(ds: &Dataset, seed: u64, count: usize) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match ds.points() {
        PointSet::Dense { dim, .. } => {
            PointSet::dense(*dim, (0..count * dim).map(|_| rng.random_range(-1.0..6.0)).collect()).unwrap()
        }
        PointSet::Seq(s) => {
            let len = s[0].len();
            PointSet::seqs((0..count).map(|_| (0..len).map(|_| b"ACGT"[rng.random_range(0..4)]).collect()).collect())
                .unwrap()
        }
        PointSet::Ids(_) => ds.points().clone(),
    }
}
