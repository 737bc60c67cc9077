//! Farthest-first traversal net hierarchy.
//!
//! Every prefix `P_k` of a farthest-first ordering is a γ-net of the sample
//! for all `γ ∈ (r_{k+1}, r_k]`, where `r_k` is the distance at which the
//! k-th point was inserted. One traversal therefore yields a γ-net for every
//! candidate scale. The traversal keeps the Voronoi assignment of every
//! sample point and per-cell label histograms up to date as centers are
//! added, so majority labels and empirical errors for all prefixes come out
//! of the same `O(n²)` pass.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::metric::{Dataset, Label, Metric, SampleDistance};
use crate::par::{self, Parallelism};

const NO_CELL: u32 = u32::MAX;

/// Summary of one prefix whose validity interval `(gamma_lo, gamma_hi]` is
/// non-empty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrefixSummary {
    pub k: usize,
    pub gamma_hi: f64,
    pub gamma_lo: f64,
    /// Sample points whose cell majority label differs from their own.
    pub errors: usize,
    pub alpha: f64,
}

impl PrefixSummary {
    /// Compression size `M = 2k`.
    pub fn compression_size(&self) -> usize {
        2 * self.k
    }
}

/// Full statistics of a prefix, including the majority label of every cell
/// (listed in traversal order).
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixStat {
    pub k: usize,
    pub gamma_hi: f64,
    pub gamma_lo: f64,
    pub compression_size: usize,
    pub cell_labels: Vec<Label>,
    pub errors: usize,
    pub alpha: f64,
}

/// Result of a farthest-first traversal.
#[derive(Clone, Debug, PartialEq)]
pub struct NetHierarchy {
    perm: Vec<usize>,
    radii: Vec<f64>,
    prefixes: Vec<PrefixSummary>,
}

impl NetHierarchy {
    /// Sample indices in insertion order. Points appended after the
    /// traversal hit radius 0 (duplicates) follow in index order.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// `radii[k-1] = r_k`; `r_1 = ∞`.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// `r_k` for `k` in `1..=n+1`, with `r_{n+1} = 0`.
    pub fn radius(&self, k: usize) -> f64 {
        self.radii.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Prefixes with a non-empty validity interval, increasing in `k`.
    pub fn prefixes(&self) -> &[PrefixSummary] {
        &self.prefixes
    }

    pub fn prefix(&self, k: usize) -> &[usize] {
        &self.perm[..k]
    }

    /// The unique prefix length `k` with `gamma ∈ (r_{k+1}, r_k]`.
    ///
    /// Returns `None` only if `gamma` does not exceed `r_{n+1} = 0`, which a
    /// positive `gamma` never does.
    pub fn prefix_for_gamma(&self, gamma: f64) -> Result<Option<usize>> {
        if gamma.is_nan() || gamma <= 0.0 {
            return Err(Error::param(format!("gamma must be positive, got {gamma}")));
        }
        // radii are non-increasing, so the k with r_k >= gamma form a prefix
        let k = self.radii.partition_point(|&r| r >= gamma);
        Ok((k > 0).then_some(k))
    }

    /// Writes `k,perm_index,radius,alpha,M`; `alpha` and `M` are empty for
    /// prefixes that are not a γ-net for any γ.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "perm_index", "radius", "alpha", "M"])?;
        let mut stats = self.prefixes.iter().peekable();
        for (i, (&idx, &r)) in self.perm.iter().zip(&self.radii).enumerate() {
            let k = i + 1;
            let (alpha, m) = match stats.next_if(|s| s.k == k) {
                Some(s) => (s.alpha.to_string(), s.compression_size().to_string()),
                None => (String::new(), String::new()),
            };
            out.write_record([k.to_string(), idx.to_string(), r.to_string(), alpha, m])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
struct Cell {
    votes: HashMap<Label, u32>,
    majority: Label,
    majority_count: u32,
    /// Held-out points assigned to this cell, by label.
    held_out: HashMap<Label, u32>,
    /// Held-out points in this cell whose label equals `majority`.
    held_out_correct: u32,
}

impl Cell {
    fn recount(&mut self, fallback: Label) {
        let mut best = (fallback, 0u32);
        for (&label, &count) in &self.votes {
            if count > best.1 || (count == best.1 && count > 0 && label < best.0) {
                best = (label, count);
            }
        }
        self.majority = best.0;
        self.majority_count = best.1;
        self.held_out_correct = self.held_out.get(&self.majority).copied().unwrap_or(0);
    }
}

fn bump(map: &mut HashMap<Label, u32>, label: Label) {
    *map.entry(label).or_insert(0) += 1;
}

fn drop_one(map: &mut HashMap<Label, u32>, label: Label) {
    if let Some(c) = map.get_mut(&label) {
        *c -= 1;
        if *c == 0 {
            map.remove(&label);
        }
    }
}

/// State reported for each valid prefix during a traversal.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PrefixEvent {
    pub summary: PrefixSummary,
    /// Misclassified held-out points (zero when there are none).
    pub held_out_errors: usize,
}

/// Incremental farthest-first traversal.
///
/// Indices `0..n_candidates` are the sample the net is drawn from; they vote
/// in their cells. Indices `n_candidates..` are held-out points that are only
/// assigned to cells and scored against the cell majorities.
pub(crate) struct Traversal<'a, D: SampleDistance> {
    dist: &'a D,
    labels: &'a [Label],
    n_candidates: usize,
    par: Parallelism,
    min_dist: Vec<f64>,
    cell: Vec<u32>,
    centers: Vec<usize>,
    cells: Vec<Cell>,
    correct: usize,
    held_out_correct: usize,
    touched: Vec<bool>,
}

impl<'a, D: SampleDistance> Traversal<'a, D> {
    pub(crate) fn new(dist: &'a D, labels: &'a [Label], n_candidates: usize, par: Parallelism) -> Self {
        let n = dist.len();
        debug_assert_eq!(labels.len(), n);
        debug_assert!(n_candidates <= n);
        Traversal {
            dist,
            labels,
            n_candidates,
            par,
            min_dist: vec![f64::INFINITY; n],
            cell: vec![NO_CELL; n],
            centers: Vec::new(),
            cells: Vec::new(),
            correct: 0,
            held_out_correct: 0,
            touched: Vec::new(),
        }
    }

    /// Majority label of each cell, in traversal order.
    pub(crate) fn cell_labels(&self) -> Vec<Label> {
        self.cells.iter().map(|c| c.majority).collect()
    }

    /// Inserts `center` and returns the farthest remaining candidate as
    /// `(distance, index)`, ties going to the smallest index.
    fn insert(&mut self, center: usize) -> (f64, usize) {
        let new_cell = self.centers.len() as u32;
        self.centers.push(center);
        let dist = self.dist;
        let centers = &self.centers;
        let n_candidates = self.n_candidates;

        let chunks = par::chunks_mut2(self.par, &mut self.min_dist, &mut self.cell, |offset, md, cl| {
            let mut moved = Vec::new();
            let mut best = (-1.0f64, usize::MAX);
            let mut row = [0.0f64; par::CHUNK];
            let row = &mut row[..md.len()];
            dist.dist_many(center, offset, row);
            for (j, ((m, c), &d)) in md.iter_mut().zip(cl.iter_mut()).zip(row.iter()).enumerate() {
                let i = offset + j;
                if d < *m || (d == *m && (*c == NO_CELL || center < centers[*c as usize])) {
                    *m = d;
                    moved.push((i, *c));
                    *c = new_cell;
                }
                if i < n_candidates && *m > best.0 {
                    best = (*m, i);
                }
            }
            (moved, best)
        });

        self.cells.push(Cell { majority: self.labels[center], ..Cell::default() });
        self.touched.push(false);
        let mut touched = vec![new_cell];
        let mut best = (-1.0f64, usize::MAX);
        for (moved, chunk_best) in chunks {
            if chunk_best.0 > best.0 {
                best = chunk_best;
            }
            for (i, old) in moved {
                let label = self.labels[i];
                let held_out = i >= self.n_candidates;
                if old != NO_CELL {
                    let cell = &mut self.cells[old as usize];
                    drop_one(if held_out { &mut cell.held_out } else { &mut cell.votes }, label);
                    if !self.touched[old as usize] {
                        self.touched[old as usize] = true;
                        touched.push(old);
                    }
                }
                let cell = &mut self.cells[new_cell as usize];
                bump(if held_out { &mut cell.held_out } else { &mut cell.votes }, label);
            }
        }

        for c in touched {
            let fallback = self.labels[self.centers[c as usize]];
            let cell = &mut self.cells[c as usize];
            self.correct -= cell.majority_count as usize;
            self.held_out_correct -= cell.held_out_correct as usize;
            cell.recount(fallback);
            self.correct += cell.majority_count as usize;
            self.held_out_correct += cell.held_out_correct as usize;
            self.touched[c as usize] = false;
        }
        best
    }

    /// Runs the traversal from `start` to completion, calling `on_prefix`
    /// for every prefix with a non-empty validity interval while that
    /// prefix's cells are current. Returns `(perm, radii)`.
    pub(crate) fn run<F>(mut self, start: usize, mut on_prefix: F) -> (Vec<usize>, Vec<f64>)
    where
        F: FnMut(&PrefixEvent, &Self),
    {
        let n_candidates = self.n_candidates;
        let n_held_out = self.dist.len() - n_candidates;
        let mut perm = Vec::with_capacity(n_candidates);
        let mut radii = Vec::with_capacity(n_candidates);
        let mut is_center = vec![false; n_candidates];

        let mut next = start;
        let mut radius = f64::INFINITY;
        loop {
            perm.push(next);
            radii.push(radius);
            is_center[next] = true;
            let (far, far_idx) = self.insert(next);
            let k = perm.len();
            // every candidate is a center once k == n_candidates, so far == 0
            let far = far.max(0.0);
            if far < radius {
                let errors = n_candidates - self.correct;
                let event = PrefixEvent {
                    summary: PrefixSummary {
                        k,
                        gamma_hi: radius,
                        gamma_lo: far,
                        errors,
                        alpha: errors as f64 / n_candidates as f64,
                    },
                    held_out_errors: n_held_out - self.held_out_correct,
                };
                on_prefix(&event, &self);
            }
            if far == 0.0 {
                break;
            }
            next = far_idx;
            radius = far;
        }

        for (i, &c) in is_center.iter().enumerate() {
            if !c {
                perm.push(i);
                radii.push(0.0);
            }
        }
        (perm, radii)
    }
}

/// Builds the farthest-first hierarchy of `ds` starting at sample `start`.
pub fn farthest_first(ds: &Dataset, metric: &Metric, start: usize) -> Result<NetHierarchy> {
    farthest_first_with(ds, metric, start, Parallelism::default())
}

pub fn farthest_first_with(ds: &Dataset, metric: &Metric, start: usize, par: Parallelism) -> Result<NetHierarchy> {
    let bound = metric.bind(ds.points())?;
    farthest_first_on(&bound, ds.labels(), start, par)
}

/// Traversal over any sample-index distance oracle.
pub fn farthest_first_on<D: SampleDistance>(
    dist: &D,
    labels: &[Label],
    start: usize,
    par: Parallelism,
) -> Result<NetHierarchy> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != n {
        return Err(Error::LengthMismatch { points: n, labels: labels.len() });
    }
    if start >= n {
        return Err(Error::param(format!("start index {start} out of range for {n} points")));
    }
    let mut prefixes = Vec::new();
    let (perm, radii) = Traversal::new(dist, labels, n, par).run(start, |e, _| prefixes.push(e.summary));
    Ok(NetHierarchy { perm, radii, prefixes })
}

/// Per-prefix cell labels and errors for a hierarchy built from `ds`.
///
/// Replays the traversal (another `O(n²)` distance pass) and snapshots the
/// majority labels at each valid prefix.
pub fn compute_prefix_stats(ds: &Dataset, metric: &Metric, h: &NetHierarchy) -> Result<Vec<PrefixStat>> {
    let bound = metric.bind(ds.points())?;
    if h.is_empty() || h.len() != ds.len() {
        return Err(Error::param("hierarchy was not built from this dataset"));
    }
    let mut stats = Vec::with_capacity(h.prefixes.len());
    let (perm, _) = Traversal::new(&bound, ds.labels(), ds.len(), Parallelism::default()).run(h.perm[0], |e, t| {
        let s = e.summary;
        stats.push(PrefixStat {
            k: s.k,
            gamma_hi: s.gamma_hi,
            gamma_lo: s.gamma_lo,
            compression_size: s.compression_size(),
            cell_labels: t.cell_labels(),
            errors: s.errors,
            alpha: s.alpha,
        });
    });
    if perm != h.perm {
        return Err(Error::param("hierarchy was not built from this dataset"));
    }
    Ok(stats)
}

/// Checks that `net` is a γ-net of the sample: pairwise distances at least
/// `gamma`, and every sample point strictly closer than `gamma` to some net
/// point.
pub fn verify_net<D: SampleDistance + ?Sized>(dist: &D, net: &[usize], gamma: f64) -> bool {
    for (a, &i) in net.iter().enumerate() {
        for &j in &net[a + 1..] {
            if dist.dist(i, j) < gamma {
                return false;
            }
        }
    }
    (0..dist.len()).all(|x| net.iter().any(|&c| dist.dist(x, c) < gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Metric;

    fn line(xs: &[f64], labels: &[Label]) -> Dataset {
        Dataset::from_line(xs, labels).unwrap()
    }

    #[test]
    fn four_points_on_a_line() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]);
        let h = farthest_first(&ds, &Metric::L2, 0).unwrap();
        assert_eq!(h.perm(), &[0, 3, 1, 2]);
        assert_eq!(h.radii(), &[f64::INFINITY, 3.0, 1.0, 1.0]);
        let ks: Vec<usize> = h.prefixes().iter().map(|p| p.k).collect();
        assert_eq!(ks, vec![1, 2, 4]);
    }

    #[test]
    fn single_point() {
        let ds = line(&[7.0], &[3]);
        let h = farthest_first(&ds, &Metric::L2, 0).unwrap();
        assert_eq!(h.perm(), &[0]);
        assert_eq!(h.radii(), &[f64::INFINITY]);
        assert_eq!(h.prefixes().len(), 1);
        assert_eq!(h.prefixes()[0].errors, 0);
    }

    #[test]
    fn duplicates_join_existing_cell() {
        let ds = line(&[0.0, 0.0, 5.0], &[0, 1, 1]);
        let h = farthest_first(&ds, &Metric::L2, 0).unwrap();
        assert_eq!(&h.perm()[..2], &[0, 2]);
        assert_eq!(h.radius(2), 5.0);
        assert_eq!(h.radius(3), 0.0);
        // k=2 is the last valid prefix; cell of index 0 holds labels {0,1}
        let stats = compute_prefix_stats(&ds, &Metric::L2, &h).unwrap();
        let last = stats.last().unwrap();
        assert_eq!(last.k, 2);
        assert_eq!(last.cell_labels, vec![0, 1]);
        assert_eq!(last.errors, 1);
    }

    #[test]
    fn prefix_lookup() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]);
        let h = farthest_first(&ds, &Metric::L2, 0).unwrap();
        assert_eq!(h.prefix_for_gamma(1.5).unwrap(), Some(2));
        assert_eq!(h.prefix_for_gamma(f64::INFINITY).unwrap(), Some(1));
        assert_eq!(h.prefix_for_gamma(0.5).unwrap(), Some(4));
        assert_eq!(h.prefix_for_gamma(3.0).unwrap(), Some(2));
        assert_eq!(h.prefix_for_gamma(1.0).unwrap(), Some(4));
        assert!(h.prefix_for_gamma(0.0).is_err());
        assert!(h.prefix_for_gamma(-1.0).is_err());
    }

    #[test]
    fn prefix_stats_examples() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]);
        let h = farthest_first(&ds, &Metric::L2, 0).unwrap();
        let stats = compute_prefix_stats(&ds, &Metric::L2, &h).unwrap();
        let k1 = &stats[0];
        assert_eq!((k1.k, k1.cell_labels.clone(), k1.alpha), (1, vec![0], 0.5));
        let k2 = &stats[1];
        assert_eq!((k2.k, k2.cell_labels.clone(), k2.alpha), (2, vec![0, 1], 0.0));
        assert_eq!(k2.compression_size, 4);
        let k4 = &stats[2];
        assert_eq!((k4.k, k4.alpha), (4, 0.0));
    }

    #[test]
    fn verify_net_examples() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0], &[0; 4]);
        let d = Metric::L2.bind(ds.points()).unwrap();
        assert!(verify_net(&d, &[0, 3], 1.5));
        assert!(!verify_net(&d, &[0, 1], 1.5));
        assert!(!verify_net(&d, &[0], 1.5));
    }

    #[test]
    fn empty_and_bad_start() {
        let empty = Dataset::new(crate::metric::PointSet::dense(1, vec![]).unwrap(), vec![]).unwrap();
        assert!(matches!(farthest_first(&empty, &Metric::L2, 0), Err(Error::EmptyDataset)));
        let ds = line(&[0.0, 1.0], &[0, 0]);
        assert!(farthest_first(&ds, &Metric::L2, 2).is_err());
    }

    #[test]
    fn voronoi_tie_goes_to_smaller_index() {
        // start at index 1 (x=2); farthest is index 0 (x=0); x=1 (index 2) is
        // equidistant from both and must land in the cell of index 0
        let ds = line(&[0.0, 2.0, 1.0], &[5, 7, 9]);
        let h = farthest_first(&ds, &Metric::L2, 1).unwrap();
        assert_eq!(&h.perm()[..2], &[1, 0]);
        let stats = compute_prefix_stats(&ds, &Metric::L2, &h).unwrap();
        let k2 = stats.iter().find(|s| s.k == 2).unwrap();
        // cell of index 0 holds labels {5, 9} -> tie -> 5; cell of index 1 holds {7}
        assert_eq!(k2.cell_labels, vec![7, 5]);
        assert_eq!(k2.errors, 1);
    }

    #[test]
    fn hierarchy_csv_dump() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]);
        let h = farthest_first(&ds, &Metric::L2, 0).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "k,perm_index,radius,alpha,M\n1,0,inf,0.5,2\n2,3,3,0,4\n3,1,1,,\n4,2,1,0,8\n");
    }
}
