//! k-nearest-neighbor plurality vote, used as the comparison baseline.

use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::metric::{Dataset, Label, Metric, PointRef, PointSet};
use crate::par::{self, Parallelism};

/// `max(1, ⌊√n⌋)`, reduced by one when even and greater than one.
pub fn default_k(n: usize) -> usize {
    let k = ((n as f64).sqrt().floor() as usize).max(1);
    if k > 1 && k.is_multiple_of(2) {
        k - 1
    } else {
        k
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KnnModel<'a> {
    train: &'a Dataset,
    metric: &'a Metric,
    k: usize,
}

/// Neighbor candidate ordered by (distance, sample index).
#[derive(Clone, Copy, Debug, PartialEq)]
struct Neighbor(f64, usize);

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

#[derive(Default)]
struct Scratch {
    heap: BinaryHeap<Neighbor>,
    votes: HashMap<Label, u32>,
}

impl<'a> KnnModel<'a> {
    pub fn new(train: &'a Dataset, metric: &'a Metric, k: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if k == 0 || k > train.len() {
            return Err(Error::param(format!("k must lie in 1..={}, got {k}", train.len())));
        }
        metric.check_points(train.points())?;
        Ok(KnnModel { train, metric, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn predict(&self, x: PointRef<'_>) -> Result<Label> {
        self.metric.check_pair(x, self.train.point(0))?;
        Ok(self.predict_with(x, &mut Scratch::default()))
    }

    pub fn predict_all(&self, points: &PointSet, par: Parallelism) -> Result<Vec<Label>> {
        if points.is_empty() {
            return Ok(Vec::new());
        }
        self.metric.check_points(points)?;
        self.metric.check_pair(points.get(0), self.train.point(0))?;
        Ok(par::map_range_init(par, points.len(), Scratch::default, |s, i| self.predict_with(points.get(i), s)))
    }

    fn predict_with(&self, x: PointRef<'_>, s: &mut Scratch) -> Label {
        s.heap.clear();
        let points = self.train.points();
        for i in 0..self.train.len() {
            let d = self.metric.distance_unchecked(x, points.get(i));
            if s.heap.len() < self.k {
                s.heap.push(Neighbor(d, i));
            } else if let Some(top) = s.heap.peek() {
                // i exceeds every index already held, so only a strictly
                // smaller distance can displace the current worst
                if d < top.0 {
                    s.heap.pop();
                    s.heap.push(Neighbor(d, i));
                }
            }
        }
        s.votes.clear();
        for n in s.heap.iter() {
            *s.votes.entry(self.train.label(n.1)).or_insert(0) += 1;
        }
        let mut best = (Label::MAX, 0u32);
        for (&label, &count) in &s.votes {
            if count > best.1 || (count == best.1 && label < best.0) {
                best = (label, count);
            }
        }
        best.0
    }
}
