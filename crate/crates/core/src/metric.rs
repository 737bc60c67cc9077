//! Points, labeled datasets and the distance oracles defined over them.
//!
//! A [`Dataset`] stores all of its points in one [`PointSet`] representation:
//! dense real vectors, symbol sequences, or opaque ids into a precomputed
//! distance matrix. A [`Metric`] knows which representation it accepts;
//! [`Metric::bind`] checks a point set once and returns a [`BoundMetric`]
//! whose sample-index distances skip further validation.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Class label. Labels are arbitrary non-negative integers; their numeric
/// order is the preference order used to break vote ties.
pub type Label = u32;

/// Borrowed view of a single point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointRef<'a> {
    Dense(&'a [f64]),
    Seq(&'a [u8]),
    Id(usize),
}

/// Owned point.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Dense(Vec<f64>),
    Seq(Vec<u8>),
    Id(usize),
}

impl Point {
    pub fn as_ref(&self) -> PointRef<'_> {
        match self {
            Point::Dense(v) => PointRef::Dense(v),
            Point::Seq(s) => PointRef::Seq(s),
            Point::Id(i) => PointRef::Id(*i),
        }
    }
}

impl PointRef<'_> {
    pub fn to_owned(self) -> Point {
        match self {
            PointRef::Dense(v) => Point::Dense(v.to_vec()),
            PointRef::Seq(s) => Point::Seq(s.to_vec()),
            PointRef::Id(i) => Point::Id(i),
        }
    }

    fn kind(self) -> &'static str {
        match self {
            PointRef::Dense(_) => "dense vector",
            PointRef::Seq(_) => "symbol sequence",
            PointRef::Id(_) => "precomputed id",
        }
    }
}

/// Homogeneous collection of points.
#[derive(Clone, Debug, PartialEq)]
pub enum PointSet {
    /// Row-major coordinates, `coords.len() == len * dim`.
    Dense { dim: usize, coords: Vec<f64> },
    Seq(Vec<Vec<u8>>),
    Ids(Vec<usize>),
}

impl PointSet {
    pub fn dense(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPoint("dense points need dimension >= 1".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidPoint(format!(
                "{} coordinates do not split into rows of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "non-finite coordinate in point {}",
                bad / dim
            )));
        }
        Ok(PointSet::Dense { dim, coords })
    }

    /// Builds a dense set from rows; all rows must share one length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(1, |r| r.as_ref().len());
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != dim {
                return Err(Error::InvalidPoint(format!("row {i} has dimension {}, expected {dim}", r.as_ref().len())));
            }
            coords.extend_from_slice(r.as_ref());
        }
        Self::dense(dim, coords)
    }

    pub fn seqs(seqs: Vec<Vec<u8>>) -> Result<Self> {
        if let Some(i) = seqs.iter().position(|s| s.is_empty()) {
            return Err(Error::InvalidPoint(format!("sequence {i} is empty")));
        }
        Ok(PointSet::Seq(seqs))
    }

    pub fn ids(ids: Vec<usize>) -> Self {
        PointSet::Ids(ids)
    }

    pub fn len(&self) -> usize {
        match self {
            PointSet::Dense { dim, coords } => coords.len() / dim,
            PointSet::Seq(s) => s.len(),
            PointSet::Ids(ids) => ids.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> PointRef<'_> {
        match self {
            PointSet::Dense { dim, coords } => PointRef::Dense(&coords[i * dim..(i + 1) * dim]),
            PointSet::Seq(s) => PointRef::Seq(&s[i]),
            PointSet::Ids(ids) => PointRef::Id(ids[i]),
        }
    }

    /// Points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        match self {
            PointSet::Dense { dim, coords } => {
                let mut out = Vec::with_capacity(indices.len() * dim);
                for &i in indices {
                    out.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                }
                PointSet::Dense { dim: *dim, coords: out }
            }
            PointSet::Seq(s) => PointSet::Seq(indices.iter().map(|&i| s[i].clone()).collect()),
            PointSet::Ids(ids) => PointSet::Ids(indices.iter().map(|&i| ids[i]).collect()),
        }
    }

    /// Builds a set from owned points that all share one representation.
    pub fn from_points(points: &[Point]) -> Result<Self> {
        match points.first() {
            None => Ok(PointSet::Ids(Vec::new())),
            Some(Point::Dense(first)) => {
                let mut rows = Vec::with_capacity(points.len());
                for p in points {
                    match p {
                        Point::Dense(v) => rows.push(v.as_slice()),
                        _ => return Err(Error::Representation("mixed point representations".into())),
                    }
                }
                let _ = first;
                Self::from_rows(&rows)
            }
            Some(Point::Seq(_)) => points
                .iter()
                .map(|p| match p {
                    Point::Seq(s) => Ok(s.clone()),
                    _ => Err(Error::Representation("mixed point representations".into())),
                })
                .collect::<Result<Vec<_>>>()
                .and_then(Self::seqs),
            Some(Point::Id(_)) => points
                .iter()
                .map(|p| match p {
                    Point::Id(i) => Ok(*i),
                    _ => Err(Error::Representation("mixed point representations".into())),
                })
                .collect::<Result<Vec<_>>>()
                .map(PointSet::Ids),
        }
    }
}

/// Labeled sample `(x_1, y_1), …, (x_n, y_n)`.
///
/// Position in the dataset is the sample index, which doubles as the fixed
/// total order for every lexicographic tie-break. Empty datasets can be
/// constructed; operations that need `n >= 1` reject them.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    points: PointSet,
    labels: Vec<Label>,
}

impl Dataset {
    pub fn new(points: PointSet, labels: Vec<Label>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch { points: points.len(), labels: labels.len() });
        }
        Ok(Dataset { points, labels })
    }

    /// One-dimensional dense dataset, handy for small examples.
    pub fn from_line(xs: &[f64], labels: &[Label]) -> Result<Self> {
        Self::new(PointSet::dense(1, xs.to_vec())?, labels.to_vec())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn point(&self, i: usize) -> PointRef<'_> {
        self.points.get(i)
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    /// Sub-sample at `indices`, re-indexed in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            points: self.points.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Square matrix of pairwise distances, addressed by opaque point ids.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    side: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Checks shape, finiteness, non-negativity, zero diagonal and exact
    /// symmetry. The triangle inequality is not checked here; see
    /// [`check_triangle_sampled`].
    pub fn new(side: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != side * side {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for side {side}, got {}",
                side * side,
                data.len()
            )));
        }
        for i in 0..side {
            if data[i * side + i] != 0.0 {
                return Err(Error::InvalidMatrix(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..side {
                let v = data[i * side + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMatrix(format!("entry ({i},{j}) = {v} is not a finite non-negative number")));
                }
                if v != data[j * side + i] {
                    return Err(Error::InvalidMatrix(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(DistanceMatrix { side, data })
    }

    /// Discrete metric on `side` points: 1 between distinct ids.
    pub fn discrete(side: usize) -> Self {
        let mut data = vec![1.0; side * side];
        for i in 0..side {
            data[i * side + i] = 0.0;
        }
        DistanceMatrix { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.side + j]
    }
}

/// Distance oracle `ρ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    L2,
    L1,
    LInf,
    /// Number of differing positions between equal-length sequences.
    Hamming,
    Precomputed(Arc<DistanceMatrix>),
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl Metric {
    pub fn id(&self) -> &'static str {
        match self {
            Metric::L2 => "l2",
            Metric::L1 => "l1",
            Metric::LInf => "linf",
            Metric::Hamming => "hamming",
            Metric::Precomputed(_) => "precomputed",
        }
    }

    /// Resolves a metric id; `precomputed` needs the matrix.
    pub fn from_id(id: &str, matrix: Option<Arc<DistanceMatrix>>) -> Result<Self> {
        match id {
            "l2" => Ok(Metric::L2),
            "l1" => Ok(Metric::L1),
            "linf" => Ok(Metric::LInf),
            "hamming" => Ok(Metric::Hamming),
            "precomputed" => matrix
                .map(Metric::Precomputed)
                .ok_or_else(|| Error::param("precomputed metric requires a distance matrix")),
            other => Err(Error::param(format!("unknown metric id `{other}`"))),
        }
    }

    /// `ρ(a, b)`, validating that both points suit this metric.
    pub fn distance(&self, a: PointRef<'_>, b: PointRef<'_>) -> Result<f64> {
        self.check_pair(a, b)?;
        Ok(self.distance_unchecked(a, b))
    }

    pub(crate) fn check_point(&self, p: PointRef<'_>) -> Result<()> {
        match (self, p) {
            (Metric::L2 | Metric::L1 | Metric::LInf, PointRef::Dense(v)) => {
                if v.iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::InvalidPoint("non-finite coordinate".into()))
                }
            }
            (Metric::Hamming, PointRef::Seq(s)) => {
                if s.is_empty() {
                    Err(Error::InvalidPoint("empty sequence".into()))
                } else {
                    Ok(())
                }
            }
            (Metric::Precomputed(m), PointRef::Id(i)) => {
                if i < m.side() {
                    Ok(())
                } else {
                    Err(Error::OutOfBounds { index: i, side: m.side() })
                }
            }
            _ => Err(Error::Representation(format!("metric {} cannot measure a {}", self.id(), p.kind()))),
        }
    }

    pub(crate) fn check_pair(&self, a: PointRef<'_>, b: PointRef<'_>) -> Result<()> {
        self.check_point(a)?;
        self.check_point(b)?;
        match (a, b) {
            (PointRef::Dense(x), PointRef::Dense(y)) if x.len() != y.len() => Err(Error::Representation(
                format!("dimension mismatch ({} vs {})", x.len(), y.len()),
            )),
            (PointRef::Seq(x), PointRef::Seq(y)) if x.len() != y.len() => Err(Error::Representation(
                format!("sequence length mismatch ({} vs {})", x.len(), y.len()),
            )),
            _ => Ok(()),
        }
    }

    /// Validates a whole point set against this metric.
    pub fn check_points(&self, points: &PointSet) -> Result<()> {
        if points.is_empty() {
            return Ok(());
        }
        let first = points.get(0);
        match points {
            PointSet::Seq(seqs) => {
                self.check_point(first)?;
                let len = seqs[0].len();
                if let Some(i) = seqs.iter().position(|s| s.len() != len) {
                    return Err(Error::Representation(format!(
                        "sequence {i} has length {}, expected {len}",
                        seqs[i].len()
                    )));
                }
                Ok(())
            }
            PointSet::Ids(ids) => ids.iter().try_for_each(|&i| self.check_point(PointRef::Id(i))),
            PointSet::Dense { .. } => self.check_point(first),
        }
    }

    /// Checks `points` once and returns a sample-index distance oracle.
    pub fn bind<'a>(&'a self, points: &'a PointSet) -> Result<BoundMetric<'a>> {
        self.check_points(points)?;
        Ok(BoundMetric { metric: self, points })
    }

    #[inline]
    pub(crate) fn distance_unchecked(&self, a: PointRef<'_>, b: PointRef<'_>) -> f64 {
        match (self, a, b) {
            (Metric::L2, PointRef::Dense(x), PointRef::Dense(y)) => {
                x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
            }
            (Metric::L1, PointRef::Dense(x), PointRef::Dense(y)) => {
                x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum()
            }
            (Metric::LInf, PointRef::Dense(x), PointRef::Dense(y)) => {
                x.iter().zip(y).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
            }
            (Metric::Hamming, PointRef::Seq(x), PointRef::Seq(y)) => {
                x.iter().zip(y).filter(|(p, q)| p != q).count() as f64
            }
            (Metric::Precomputed(m), PointRef::Id(i), PointRef::Id(j)) => m.get(i, j),
            _ => unreachable!("points were not validated against metric {}", self.id()),
        }
    }
}

/// Distances between sample indices `0..len()`.
pub trait SampleDistance: Sync {
    fn len(&self) -> usize;

    fn dist(&self, i: usize, j: usize) -> f64;

    /// `out[j] = dist(start + j, center)`.
    fn dist_many(&self, center: usize, start: usize, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.dist(start + j, center);
        }
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A metric paired with a point set it has validated.
#[derive(Clone, Copy, Debug)]
pub struct BoundMetric<'a> {
    metric: &'a Metric,
    points: &'a PointSet,
}

impl BoundMetric<'_> {
    pub fn metric(&self) -> &Metric {
        self.metric
    }
}

impl SampleDistance for BoundMetric<'_> {
    fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.distance_unchecked(self.points.get(i), self.points.get(j))
    }

    fn dist_many(&self, center: usize, start: usize, out: &mut [f64]) {
        let PointSet::Dense { dim, coords } = self.points else {
            for (j, o) in out.iter_mut().enumerate() {
                *o = self.dist(start + j, center);
            }
            return;
        };
        let dim = *dim;
        let c = &coords[center * dim..(center + 1) * dim];
        let rows = coords[start * dim..(start + out.len()) * dim].chunks_exact(dim);
        // same arithmetic, in the same order, as `distance_unchecked`
        match self.metric {
            Metric::L2 => {
                for (o, x) in out.iter_mut().zip(rows) {
                    *o = x.iter().zip(c).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
                }
            }
            Metric::L1 => {
                for (o, x) in out.iter_mut().zip(rows) {
                    *o = x.iter().zip(c).map(|(p, q)| (p - q).abs()).sum();
                }
            }
            Metric::LInf => {
                for (o, x) in out.iter_mut().zip(rows) {
                    *o = x.iter().zip(c).fold(0.0, |m, (p, q)| m.max((p - q).abs()));
                }
            }
            _ => unreachable!("dense points were validated against metric {}", self.metric.id()),
        }
    }
}

/// Γ without ∞: every distinct non-zero interpoint distance, increasing.
pub fn pairwise_distinct_distances(ds: &Dataset, metric: &Metric) -> Result<Vec<f64>> {
    let d = metric.bind(ds.points())?;
    let n = ds.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let v = d.dist(i, j);
            if v > 0.0 {
                out.push(v);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// The fixed total order on sample points: original sample index.
#[inline]
pub fn compare_order(i: usize, j: usize) -> Ordering {
    i.cmp(&j)
}

/// A sampled triple violating the triangle inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleViolation {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub excess: f64,
}

/// Samples `trials` random triples and reports the first one with
/// `d(a,c) > d(a,b) + d(b,c) + slack`.
pub fn check_triangle_sampled<D: SampleDistance + ?Sized>(
    d: &D,
    trials: usize,
    slack: f64,
    seed: u64,
) -> Option<TriangleViolation> {
    let n = d.len();
    if n < 3 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let (a, b, c) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        let excess = d.dist(a, c) - d.dist(a, b) - d.dist(b, c);
        if excess > slack {
            return Some(TriangleViolation { a, b, c, excess });
        }
    }
    None
}
