//! The compression-based 1-NN learner.
//!
//! [`fit`] walks the farthest-first hierarchy of the sample, scores every
//! prefix net by the compression bound `Q(n, α_k, 2k, δ)` and keeps the
//! minimizer. Every candidate scale `γ` maps to exactly one prefix with the
//! same `(α, M)`, so minimizing over prefixes is minimizing over all scales.
//! [`fit_holdout`] instead picks the prefix with the fewest mistakes on a
//! held-out half of the sample.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::bound::{self, validate_delta, BoundQuery};
use crate::error::{Error, Result};
use crate::metric::{Dataset, Label, Metric, Point, PointRef, PointSet};
use crate::net::Traversal;
use crate::par::{self, Parallelism};

const HEADER: &str = "# optinet model v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Bound,
    Holdout,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Bound => "bound",
            SelectionMode::Holdout => "holdout",
        }
    }
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bound" => Ok(SelectionMode::Bound),
            "holdout" => Ok(SelectionMode::Holdout),
            other => Err(Error::parse(format!("unknown selection mode `{other}`"))),
        }
    }
}

/// A retained training point.
#[derive(Clone, Debug, PartialEq)]
pub struct NetPoint {
    pub point: Point,
    /// Original sample index; breaks distance ties in prediction.
    pub index: usize,
    pub label: Label,
}

/// Fitted compressed 1-NN classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct OptiNetModel {
    metric: Metric,
    net: Vec<NetPoint>,
    gamma_star: f64,
    delta_used: f64,
    m_star: usize,
    alpha_star: f64,
    q_star: f64,
    selection: SelectionMode,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[derive(Default)]
pub struct FitOptions {
    /// Confidence; `None` means [`bound::default_delta`] of the sample size.
    pub delta: Option<f64>,
    /// Sample index the traversal starts from.
    pub start: usize,
    pub parallelism: Parallelism,
}


/// Bound-minimizing fit with the given confidence (or the default schedule).
pub fn fit(ds: &Dataset, metric: &Metric, delta: Option<f64>) -> Result<OptiNetModel> {
    fit_with(ds, metric, &FitOptions { delta, ..FitOptions::default() })
}

pub fn fit_with(ds: &Dataset, metric: &Metric, opts: &FitOptions) -> Result<OptiNetModel> {
    let n = ds.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let delta = opts.delta.unwrap_or_else(|| bound::default_delta(n));
    validate_delta(delta)?;
    if opts.start >= n {
        return Err(Error::param(format!("start index {} out of range for {n} points", opts.start)));
    }
    let dist = metric.bind(ds.points())?;

    let mut best: Option<(f64, usize, f64, f64, Vec<Label>)> = None;
    let mut failure = None;
    let (perm, _) = Traversal::new(&dist, ds.labels(), n, opts.parallelism).run(opts.start, |e, t| {
        let s = e.summary;
        let q = match bound::q_bound(&BoundQuery { n, alpha: s.alpha, m: s.compression_size(), delta }) {
            Ok(v) => v.q,
            Err(err) => {
                failure.get_or_insert(err);
                return;
            }
        };
        // prefixes arrive in increasing k, so strict < keeps the smallest M on ties
        if best.as_ref().is_none_or(|b| q < b.0) {
            best = Some((q, s.k, s.gamma_hi, s.alpha, t.cell_labels()));
        }
    });
    if let Some(err) = failure {
        return Err(err);
    }
    let (q_star, k, gamma_star, alpha_star, labels) = best.expect("the singleton prefix is always valid");
    Ok(OptiNetModel {
        metric: metric.clone(),
        net: net_points(ds, &perm[..k], &labels, |i| i),
        gamma_star,
        delta_used: delta,
        m_star: 2 * k,
        alpha_star,
        q_star,
        selection: SelectionMode::Bound,
    })
}

/// Hold-out selection: a seeded shuffle picks `⌈n/2⌉` construction points,
/// the hierarchy is built on them, and the prefix with the fewest mistakes
/// on the remaining points wins (ties: smallest `M`).
///
/// `q_star` holds the validation error rate, `alpha_star` the empirical
/// error on the construction half.
pub fn fit_holdout(ds: &Dataset, metric: &Metric, seed: u64) -> Result<OptiNetModel> {
    fit_holdout_with(ds, metric, seed, Parallelism::default())
}

pub fn fit_holdout_with(ds: &Dataset, metric: &Metric, seed: u64, par: Parallelism) -> Result<OptiNetModel> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::param(format!("hold-out selection needs at least 2 points, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_build = n.div_ceil(2);
    // both halves keep original index order so tie-breaks match the full sample
    order[..n_build].sort_unstable();
    order[n_build..].sort_unstable();
    let pooled = ds.subset(&order);
    let dist = metric.bind(pooled.points())?;

    let n_val = n - n_build;
    let mut best: Option<(usize, usize, f64, f64, Vec<Label>)> = None;
    let (perm, _) = Traversal::new(&dist, pooled.labels(), n_build, par).run(0, |e, t| {
        let s = e.summary;
        if best.as_ref().is_none_or(|b| e.held_out_errors < b.0) {
            best = Some((e.held_out_errors, s.k, s.gamma_hi, s.alpha, t.cell_labels()));
        }
    });
    let (val_errors, k, gamma_star, alpha_star, labels) = best.expect("the singleton prefix is always valid");
    Ok(OptiNetModel {
        metric: metric.clone(),
        net: net_points(&pooled, &perm[..k], &labels, |i| order[i]),
        gamma_star,
        delta_used: f64::NAN,
        m_star: 2 * k,
        alpha_star,
        q_star: val_errors as f64 / n_val as f64,
        selection: SelectionMode::Holdout,
    })
}

fn net_points(ds: &Dataset, centers: &[usize], labels: &[Label], original: impl Fn(usize) -> usize) -> Vec<NetPoint> {
    centers
        .iter()
        .zip(labels)
        .map(|(&c, &label)| NetPoint { point: ds.point(c).to_owned(), index: original(c), label })
        .collect()
}

impl OptiNetModel {
    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn net(&self) -> &[NetPoint] {
        &self.net
    }

    pub fn gamma_star(&self) -> f64 {
        self.gamma_star
    }

    /// Confidence used for selection; NaN for hold-out models.
    pub fn delta_used(&self) -> f64 {
        self.delta_used
    }

    pub fn m_star(&self) -> usize {
        self.m_star
    }

    pub fn alpha_star(&self) -> f64 {
        self.alpha_star
    }

    pub fn q_star(&self) -> f64 {
        self.q_star
    }

    pub fn selection(&self) -> SelectionMode {
        self.selection
    }

    /// Label of the nearest net point; equal distances go to the net point
    /// with the smaller original sample index.
    pub fn predict(&self, x: PointRef<'_>) -> Result<Label> {
        let first = &self.net[0];
        self.metric.check_pair(x, first.point.as_ref())?;
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: PointRef<'_>) -> Label {
        let mut best = (f64::INFINITY, usize::MAX, 0);
        for p in &self.net {
            let d = self.metric.distance_unchecked(x, p.point.as_ref());
            if d < best.0 || (d == best.0 && p.index < best.1) {
                best = (d, p.index, p.label);
            }
        }
        best.2
    }

    /// Predictions for every point of `points`.
    pub fn predict_all(&self, points: &PointSet, par: Parallelism) -> Result<Vec<Label>> {
        if points.is_empty() {
            return Ok(Vec::new());
        }
        self.metric.check_points(points)?;
        self.metric.check_pair(points.get(0), self.net[0].point.as_ref())?;
        Ok(par::map_range(par, points.len(), |i| self.predict_unchecked(points.get(i))))
    }

    /// Mean 0/1 loss on `ds`.
    pub fn empirical_error(&self, ds: &Dataset) -> Result<f64> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let preds = self.predict_all(ds.points(), Parallelism::default())?;
        let wrong = preds.iter().zip(ds.labels()).filter(|(p, y)| p != y).count();
        Ok(wrong as f64 / ds.len() as f64)
    }

    /// The retained points as a dataset labeled with their cell majorities.
    pub fn compression_set(&self) -> Result<(Dataset, Vec<usize>)> {
        let points: Vec<Point> = self.net.iter().map(|p| p.point.clone()).collect();
        let ds = Dataset::new(PointSet::from_points(&points)?, self.net.iter().map(|p| p.label).collect())?;
        Ok((ds, self.net.iter().map(|p| p.index).collect()))
    }

    /// Self-describing text form; floats use Rust's shortest round-trip
    /// formatting so [`OptiNetModel::from_text`] restores them bit-exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{HEADER}");
        let _ = writeln!(s, "metric_id = {}", self.metric.id());
        let _ = writeln!(s, "gamma_star = {}", self.gamma_star);
        let _ = writeln!(s, "delta_used = {}", self.delta_used);
        let _ = writeln!(s, "M_star = {}", self.m_star);
        let _ = writeln!(s, "alpha_star = {}", self.alpha_star);
        let _ = writeln!(s, "q_star = {}", self.q_star);
        let _ = writeln!(s, "selection_mode = {}", self.selection.as_str());
        let _ = writeln!(s, "net_points = {}", self.net.len());
        for p in &self.net {
            let _ = writeln!(s, "{}\t{}\t{}", encode_point(&p.point), p.index, p.label);
        }
        s
    }

    /// Parses [`OptiNetModel::to_text`] output. `metric` must match the
    /// recorded `metric_id` (a precomputed matrix cannot be serialized).
    pub fn from_text(text: &str, metric: &Metric) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(Error::parse("missing model header"));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::parse(format!("missing field `{key}`")))?;
            match line.split_once(" = ") {
                Some((k, v)) if k == key => Ok(v.to_string()),
                _ => Err(Error::parse(format!("expected `{key} = …`, found `{line}`"))),
            }
        };
        let metric_id = field("metric_id")?;
        let gamma_star = parse_num::<f64>(&field("gamma_star")?)?;
        let delta_used = parse_num::<f64>(&field("delta_used")?)?;
        let m_star = parse_num::<usize>(&field("M_star")?)?;
        let alpha_star = parse_num::<f64>(&field("alpha_star")?)?;
        let q_star = parse_num::<f64>(&field("q_star")?)?;
        let selection = field("selection_mode")?.parse()?;
        let count = parse_num::<usize>(&field("net_points")?)?;
        if metric_id != metric.id() {
            return Err(Error::Representation(format!("model uses metric {metric_id}, got {}", metric.id())));
        }
        let mut net = Vec::with_capacity(count);
        for line in lines.by_ref().take(count) {
            let mut parts = line.split('\t');
            let (Some(payload), Some(index), Some(label), None) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::parse(format!("malformed net point line `{line}`")));
            };
            let point = decode_point(payload)?;
            metric.check_point(point.as_ref())?;
            net.push(NetPoint { point, index: parse_num(index)?, label: parse_num(label)? });
        }
        if net.len() != count || count == 0 || m_star != 2 * count {
            return Err(Error::parse(format!("expected {} net points, found {}", m_star / 2, net.len())));
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::parse("trailing content after net points"));
        }
        PointSet::from_points(&net.iter().map(|p| p.point.clone()).collect::<Vec<_>>())
            .and_then(|ps| metric.check_points(&ps))?;
        Ok(OptiNetModel { metric: metric.clone(), net, gamma_star, delta_used, m_star, alpha_star, q_star, selection })
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::parse(format!("cannot parse number `{s}`")))
}

fn encode_point(p: &Point) -> String {
    match p {
        Point::Dense(v) => {
            let coords: Vec<String> = v.iter().map(f64::to_string).collect();
            format!("dense:{}", coords.join(" "))
        }
        Point::Seq(s) => format!("seq:{}", hex::encode(s)),
        Point::Id(i) => format!("id:{i}"),
    }
}

fn decode_point(s: &str) -> Result<Point> {
    match s.split_once(':') {
        Some(("dense", rest)) => rest.split(' ').map(parse_num::<f64>).collect::<Result<Vec<_>>>().map(Point::Dense),
        Some(("seq", rest)) => hex::decode(rest).map(Point::Seq).map_err(|e| Error::parse(format!("bad sequence: {e}"))),
        Some(("id", rest)) => parse_num(rest).map(Point::Id),
        _ => Err(Error::parse(format!("unknown point payload `{s}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]).unwrap()
    }

    #[test]
    fn toy_fit() {
        let m = fit(&toy(), &Metric::L2, Some(1.0 / 16.0)).unwrap();
        assert_eq!(m.m_star(), 4);
        assert_eq!(m.alpha_star(), 0.0);
        assert_eq!(m.gamma_star(), 3.0);
        let net: Vec<(Point, usize, Label)> = m.net().iter().map(|p| (p.point.clone(), p.index, p.label)).collect();
        assert_eq!(net, vec![(Point::Dense(vec![0.0]), 0, 0), (Point::Dense(vec![3.0]), 3, 1)]);
        assert!((m.q_star() - 43.310_785_437_717_29).abs() < 1e-12);
    }

    #[test]
    fn toy_predictions() {
        let m = fit(&toy(), &Metric::L2, Some(1.0 / 16.0)).unwrap();
        assert_eq!(m.predict(PointRef::Dense(&[1.4])).unwrap(), 0);
        assert_eq!(m.predict(PointRef::Dense(&[1.5])).unwrap(), 0);
        assert_eq!(m.predict(PointRef::Dense(&[2.9])).unwrap(), 1);
        assert_eq!(m.empirical_error(&toy()).unwrap(), 0.0);
        assert!(m.predict(PointRef::Seq(b"a")).is_err());
        assert!(m.predict(PointRef::Dense(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn constant_labels_pick_singleton() {
        let ds = Dataset::from_line(&[0.0, 1.0, 5.0, 9.0, 2.5], &[4; 5]).unwrap();
        let m = fit(&ds, &Metric::L2, None).unwrap();
        assert_eq!(m.m_star(), 2);
        assert_eq!(m.gamma_star(), f64::INFINITY);
        assert_eq!(m.predict(PointRef::Dense(&[100.0])).unwrap(), 4);
    }

    #[test]
    fn single_point_fit() {
        let ds = Dataset::from_line(&[2.0], &[7]).unwrap();
        let m = fit(&ds, &Metric::L2, None).unwrap();
        assert_eq!((m.m_star(), m.gamma_star(), m.net()[0].label), (2, f64::INFINITY, 7));
        assert_eq!(m.delta_used(), 0.5);
    }

    #[test]
    fn fit_errors() {
        let empty = Dataset::new(PointSet::dense(1, vec![]).unwrap(), vec![]).unwrap();
        assert!(matches!(fit(&empty, &Metric::L2, None), Err(Error::EmptyDataset)));
        assert!(fit(&toy(), &Metric::L2, Some(1.0)).is_err());
        assert!(fit(&toy(), &Metric::L2, Some(0.0)).is_err());
        assert!(fit(&toy(), &Metric::Hamming, None).is_err());
        assert!(fit_holdout(&Dataset::from_line(&[1.0], &[0]).unwrap(), &Metric::L2, 0).is_err());
    }

    #[test]
    fn empirical_error_on_constant_model() {
        let ds = Dataset::from_line(&[0.0, 1.0, 5.0], &[0, 0, 0]).unwrap();
        let m = fit(&ds, &Metric::L2, None).unwrap();
        assert_eq!(m.empirical_error(&toy()).unwrap(), 0.5);
        let empty = Dataset::new(PointSet::dense(1, vec![]).unwrap(), vec![]).unwrap();
        assert!(m.empirical_error(&empty).is_err());
    }

    #[test]
    fn holdout_two_clusters() {
        let xs = [0.0, 0.1, 0.2, 0.3, 10.0, 10.1, 10.2, 10.3];
        let ys = [0, 0, 0, 0, 1, 1, 1, 1];
        let ds = Dataset::from_line(&xs, &ys).unwrap();
        let mut both = 0;
        for seed in 0..20 {
            let mut order: Vec<usize> = (0..8).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let build_ones = order[..4].iter().filter(|&&i| ys[i] == 1).count();
            let m = fit_holdout(&ds, &Metric::L2, seed).unwrap();
            assert_eq!(m.selection(), SelectionMode::Holdout);
            assert!(m.delta_used().is_nan());
            if build_ones == 0 || build_ones == 4 {
                // one class to build from: every prefix misses the whole other cluster
                assert_eq!((m.m_star(), m.q_star()), (2, 1.0), "seed {seed}");
            } else {
                // the second center lands in the other cluster and separates them
                both += 1;
                assert_eq!((m.m_star(), m.q_star()), (4, 0.0), "seed {seed}");
                assert_eq!(m.empirical_error(&ds).unwrap(), 0.0);
            }
        }
        assert!(both > 10);
    }

    #[test]
    fn holdout_constant_labels() {
        let ds = Dataset::from_line(&[0.0, 3.0, 1.0, 7.0], &[2; 4]).unwrap();
        let m = fit_holdout(&ds, &Metric::L2, 11).unwrap();
        assert_eq!((m.m_star(), m.q_star()), (2, 0.0));
    }

    #[test]
    fn text_round_trip_all_payloads() {
        let m = fit(&toy(), &Metric::L2, Some(0.1)).unwrap();
        assert_eq!(OptiNetModel::from_text(&m.to_text(), &Metric::L2).unwrap(), m);

        let seqs = PointSet::seqs(vec![b"aa".to_vec(), b"ab".to_vec(), b"bb".to_vec()]).unwrap();
        let ds = Dataset::new(seqs, vec![0, 0, 1]).unwrap();
        let m = fit_holdout(&ds, &Metric::Hamming, 3).unwrap();
        let back = OptiNetModel::from_text(&m.to_text(), &Metric::Hamming).unwrap();
        assert_eq!(back.to_text(), m.to_text());
        assert!(back.delta_used().is_nan());

        let metric = Metric::Precomputed(std::sync::Arc::new(crate::metric::DistanceMatrix::discrete(4)));
        let ds = Dataset::new(PointSet::ids(vec![0, 1, 2, 3]), vec![0, 1, 1, 1]).unwrap();
        let m = fit(&ds, &metric, None).unwrap();
        assert_eq!(OptiNetModel::from_text(&m.to_text(), &metric).unwrap(), m);
        assert!(OptiNetModel::from_text(&m.to_text(), &Metric::L2).is_err());
    }

    #[test]
    fn malformed_text_is_rejected() {
        let text = fit(&toy(), &Metric::L2, Some(0.1)).unwrap().to_text();
        assert!(OptiNetModel::from_text(&text.replace("M_star = 4", "M_star = 6"), &Metric::L2).is_err());
        assert!(OptiNetModel::from_text(&text.replace("dense:", "bogus:"), &Metric::L2).is_err());
        assert!(OptiNetModel::from_text(&text[1..], &Metric::L2).is_err());
        assert!(OptiNetModel::from_text(&format!("{text}extra\n"), &Metric::L2).is_err());
    }
}
