//! Plot-ready report files.
//!
//! Reports start with `# key = value` header lines (run metadata and
//! aggregates) followed by a CSV table. Floats are written with Rust's
//! shortest round-trip formatting and rows are in a fixed order, so equal
//! inputs give byte-identical files. Missing values are written as `NA`.

use std::fmt::Display;
use std::io::Write;

use statrs::statistics::{Data, Median, OrderStatistics};

use crate::error::Result;
use crate::harness::experiments::{BenchRow, BoundValidity, MissingMassEstimate, NetGrowthRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algo {
    OptiNet,
    Knn,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::OptiNet => "optinet",
            Algo::Knn => "knn",
        }
    }
}

/// One classifier evaluated in one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub algo: Algo,
    pub test_err: f64,
    pub test_std_err: f64,
    pub bayes_risk: f64,
    pub excess: f64,
    pub m: Option<usize>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub q: Option<f64>,
    pub fit_ms: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub algo: Algo,
    pub median_excess: f64,
    pub q25_excess: f64,
    pub q75_excess: f64,
    pub median_test_err: f64,
}

pub(crate) fn median(values: &[f64]) -> f64 {
    Data::new(values.to_vec()).median()
}

fn quartiles(values: &[f64]) -> (f64, f64) {
    let mut d = Data::new(values.to_vec());
    (d.lower_quartile(), d.upper_quartile())
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub meta: Vec<(String, String)>,
    pub rows: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentReport {
    pub(crate) fn new(meta: Vec<(String, String)>, rows: Vec<TrialRecord>) -> Self {
        let mut keys: Vec<(usize, Algo)> = rows.iter().map(|r| (r.n, r.algo)).collect();
        keys.sort();
        keys.dedup();
        let aggregates = keys
            .into_iter()
            .map(|(n, algo)| {
                let sel: Vec<&TrialRecord> = rows.iter().filter(|r| r.n == n && r.algo == algo).collect();
                let excess: Vec<f64> = sel.iter().map(|r| r.excess).collect();
                let errs: Vec<f64> = sel.iter().map(|r| r.test_err).collect();
                let (q25, q75) = quartiles(&excess);
                Aggregate {
                    n,
                    algo,
                    median_excess: median(&excess),
                    q25_excess: q25,
                    q75_excess: q75,
                    median_test_err: median(&errs),
                }
            })
            .collect();
        ExperimentReport { meta, rows, aggregates }
    }

    pub fn aggregate(&self, n: usize, algo: Algo) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.n == n && a.algo == algo)
    }

    /// Median excess risk per grid size for one algorithm.
    pub fn median_excess(&self, algo: Algo) -> Vec<(usize, f64)> {
        self.aggregates.iter().filter(|a| a.algo == algo).map(|a| (a.n, a.median_excess)).collect()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        write_meta(&mut w, &self.meta)?;
        for a in &self.aggregates {
            writeln!(
                w,
                "# aggregate n={} algo={} median_excess={} q25_excess={} q75_excess={} median_test_err={}",
                a.n,
                a.algo.as_str(),
                a.median_excess,
                a.q25_excess,
                a.q75_excess,
                a.median_test_err
            )?;
        }
        write_rows(&mut w, &self.rows)
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("reports are UTF-8")
    }
}

fn write_meta<W: Write>(w: &mut W, meta: &[(String, String)]) -> Result<()> {
    writeln!(w, "# optinet report v1")?;
    for (k, v) in meta {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

fn write_rows<W: Write>(w: &mut W, rows: &[TrialRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "trial", "algo", "test_err", "bayes_risk", "excess", "M", "gamma", "alpha", "q", "fit_ms"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.trial.to_string(),
            r.algo.as_str().to_string(),
            r.test_err.to_string(),
            r.bayes_risk.to_string(),
            r.excess.to_string(),
            opt(r.m),
            opt(r.gamma),
            opt(r.alpha),
            opt(r.q),
            opt(r.fit_ms),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub meta: Vec<(String, String)>,
    pub validity: Vec<BoundValidity>,
    pub rows: Vec<TrialRecord>,
}

impl BoundReport {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        write_meta(&mut w, &self.meta)?;
        for v in &self.validity {
            writeln!(
                w,
                "# violations n={} delta={} count={} trials={} frequency={}",
                v.n, v.delta, v.violations, v.trials, v.frequency
            )?;
        }
        write_rows(&mut w, &self.rows)
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("reports are UTF-8")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MissingMassReport {
    pub meta: Vec<(String, String)>,
    pub estimates: Vec<(usize, MissingMassEstimate)>,
}

impl MissingMassReport {
    /// `(n, median estimate)` per grid size.
    pub fn medians(&self) -> Vec<(usize, f64)> {
        let mut ns: Vec<usize> = self.estimates.iter().map(|(_, e)| e.n).collect();
        ns.dedup();
        ns.into_iter()
            .map(|n| {
                let v: Vec<f64> = self.estimates.iter().filter(|(_, e)| e.n == n).map(|(_, e)| e.estimate).collect();
                (n, median(&v))
            })
            .collect()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        write_meta(&mut w, &self.meta)?;
        for (n, m) in self.medians() {
            writeln!(w, "# aggregate n={n} median_estimate={m}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "trial", "gamma", "estimate", "std_err", "probes"])?;
        for (trial, e) in &self.estimates {
            out.write_record([
                e.n.to_string(),
                trial.to_string(),
                e.gamma.to_string(),
                e.estimate.to_string(),
                e.std_err.to_string(),
                e.probes.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("reports are UTF-8")
    }
}

/// CSV `n,gamma,median_M,ratio,max_M`.
pub fn write_net_growth_csv<W: Write>(rows: &[NetGrowthRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "gamma", "median_M", "ratio", "max_M"])?;
    for r in rows {
        out.write_record([r.n.to_string(), r.gamma.to_string(), r.median_m.to_string(), r.ratio.to_string(), r.max_m.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// CSV `n,fit_ms`.
pub fn write_bench_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "fit_ms"])?;
    for r in rows {
        out.write_record([r.n.to_string(), r.fit_ms.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
