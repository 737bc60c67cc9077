//! Compression generalization bound `Q(n, α, m, δ)`.
//!
//! For a classifier reconstructed from `m/2` sample points (and `m/2`
//! relabeling indices) with empirical error `α` on `n` samples,
//!
//! ```text
//! Q = (n/(n−m))·α + sqrt(8·(n/(n−m))·α·L / (n−m)) + 9·L / (n−m)
//! L = m·ln(2en/m) + ln(2n/δ)
//! ```
//!
//! for `m ≤ n−2`, and `Q(n,α,m,δ) = max(1, Q(n,α,n−2,δ))` beyond that.

use std::f64::consts::LN_2;
use std::io::Write;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundQuery {
    pub n: usize,
    pub alpha: f64,
    pub m: usize,
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundValue {
    pub q: f64,
    /// The `m > n−2` branch was taken.
    pub clamped: bool,
}

impl BoundQuery {
    pub fn new(n: usize, alpha: f64, m: usize, delta: f64) -> Result<Self> {
        let q = BoundQuery { n, alpha, m, delta };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param(format!("alpha must lie in [0,1], got {}", self.alpha)));
        }
        if self.m < 2 || !self.m.is_multiple_of(2) {
            return Err(Error::param(format!("m must be even and at least 2, got {}", self.m)));
        }
        validate_delta(self.delta)
    }
}

pub(crate) fn validate_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("delta must lie in (0,1), got {delta}")))
    }
}

/// Evaluates `Q` for a validated query.
pub fn q_bound(query: &BoundQuery) -> Result<BoundValue> {
    query.validate()?;
    let BoundQuery { n, alpha, m, delta } = *query;
    Ok(if m + 2 > n {
        // n−2 may be 0 (or below for n = 1); m·ln(2en/m) → 0 as m → 0
        let inner = raw_q(n as f64, alpha, n.saturating_sub(2) as f64, delta);
        BoundValue { q: inner.max(1.0), clamped: true }
    } else {
        BoundValue { q: raw_q(n as f64, alpha, m as f64, delta), clamped: false }
    })
}

/// Shorthand for `q_bound(&BoundQuery::new(..)?)?.q`.
pub fn q(n: usize, alpha: f64, m: usize, delta: f64) -> Result<f64> {
    Ok(q_bound(&BoundQuery::new(n, alpha, m, delta)?)?.q)
}

fn raw_q(n: f64, alpha: f64, m: f64, delta: f64) -> f64 {
    let ln_n = n.ln();
    let compression = if m > 0.0 { m * (LN_2 + 1.0 + ln_n - m.ln()) } else { 0.0 };
    let log_sum = compression + LN_2 + ln_n - delta.ln();
    let rest = n - m;
    let ratio = n / rest;
    ratio * alpha + (8.0 * ratio * alpha * log_sum / rest).sqrt() + 9.0 * log_sum / rest
}

/// Confidence schedule `δ_n = 1/n²`, capped at ½ so it stays inside (0,1).
pub fn default_delta(n: usize) -> f64 {
    let n = n.max(1) as f64;
    (1.0 / (n * n)).min(0.5)
}

/// How the compression size grows with `n` in a profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CompressionRule {
    Constant(usize),
    /// `2·⌊√n⌋`.
    TwiceSqrt,
    /// `⌊n / ln²n⌋`, rounded down to even.
    NOverLogSquared,
    /// `n − c`, rounded down to even; not `o(n)`.
    NMinus(usize),
}

impl CompressionRule {
    pub fn m_for(&self, n: usize) -> usize {
        let even = |x: usize| x - x % 2;
        match *self {
            CompressionRule::Constant(m) => m,
            CompressionRule::TwiceSqrt => 2 * (n as f64).sqrt().floor() as usize,
            CompressionRule::NOverLogSquared => {
                let l = (n as f64).ln();
                even((n as f64 / (l * l)).floor() as usize)
            }
            CompressionRule::NMinus(c) => even(n.saturating_sub(c)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapPoint {
    pub n: usize,
    pub m: usize,
    pub gap: f64,
}

/// For each `n`, `max over alpha_grid of Q(n, α, m_n, δ_n) − α`.
pub fn q3prime_profile(n_grid: &[usize], rule: CompressionRule, alpha_grid: &[f64]) -> Result<Vec<GapPoint>> {
    if alpha_grid.is_empty() {
        return Err(Error::param("alpha grid is empty"));
    }
    n_grid
        .iter()
        .map(|&n| {
            let m = rule.m_for(n).max(2);
            let delta = default_delta(n);
            let mut gap = f64::NEG_INFINITY;
            for &a in alpha_grid {
                gap = gap.max(q(n, a, m, delta)? - a);
            }
            Ok(GapPoint { n, m, gap })
        })
        .collect()
}

/// Writes a profile as CSV `n,m,gap`.
pub fn write_profile_csv<W: Write>(profile: &[GapPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "m", "gap"])?;
    for p in profile {
        out.write_record([p.n.to_string(), p.m.to_string(), p.gap.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    // frozen from a 40-digit mpmath evaluation of the closed form
    const Q_100_0_2: f64 = 1.939_025_013_475_620_4;
    const Q_4_HALF_2: f64 = 50.515_499_447_616_35;
    const Q_4_0_2: f64 = 43.310_785_437_717_29;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn golden_values() {
        assert!(close(q(100, 0.0, 2, 0.01).unwrap(), Q_100_0_2));
        assert!(close(q(4, 0.5, 2, 1.0 / 16.0).unwrap(), Q_4_HALF_2));
        assert!(close(q(4, 0.0, 4, 1.0 / 16.0).unwrap(), Q_4_0_2));
        assert!(close(q(4, 0.0, 8, 1.0 / 16.0).unwrap(), Q_4_0_2));
    }

    #[test]
    fn clamp_branch() {
        for &alpha in &[0.0, 0.3, 1.0] {
            let clamped = q_bound(&BoundQuery::new(10, alpha, 10, 0.1).unwrap()).unwrap();
            assert!(clamped.clamped);
            assert_eq!(clamped.q, q(10, alpha, 8, 0.1).unwrap().max(1.0));
        }
        assert!(!q_bound(&BoundQuery::new(10, 0.1, 8, 0.1).unwrap()).unwrap().clamped);
    }

    #[test]
    fn tiny_samples_are_total() {
        for n in 1..4 {
            let v = q_bound(&BoundQuery::new(n, 0.0, 2, 0.5).unwrap()).unwrap();
            assert!(v.q.is_finite() && v.q >= 1.0, "n={n} q={}", v.q);
        }
    }

    #[test]
    fn monotone_in_alpha_example() {
        assert!(q(500, 0.1, 10, 0.01).unwrap() <= q(500, 0.2, 10, 0.01).unwrap());
    }

    #[test]
    fn rejects_bad_queries() {
        assert!(BoundQuery::new(10, 0.1, 3, 0.1).is_err());
        assert!(BoundQuery::new(10, 0.1, 0, 0.1).is_err());
        assert!(BoundQuery::new(10, 1.1, 2, 0.1).is_err());
        assert!(BoundQuery::new(10, 0.1, 2, 0.0).is_err());
        assert!(BoundQuery::new(10, 0.1, 2, 1.0).is_err());
        assert!(BoundQuery::new(0, 0.1, 2, 0.5).is_err());
    }

    #[test]
    fn delta_schedule() {
        assert_eq!(default_delta(100), 1e-4);
        assert_eq!(default_delta(1), 0.5);
        assert_eq!(default_delta(1000), 1e-6);
        assert_eq!(default_delta(2), 0.25);
    }

    #[test]
    fn compression_rules() {
        assert_eq!(CompressionRule::TwiceSqrt.m_for(1000), 62);
        assert_eq!(CompressionRule::NOverLogSquared.m_for(1000), 20);
        assert_eq!(CompressionRule::NOverLogSquared.m_for(10_000), 116);
        assert_eq!(CompressionRule::NMinus(4).m_for(1001), 996);
    }

    #[test]
    fn constant_m_gap_shrinks() {
        let p = q3prime_profile(&[1_000, 1_000_000], CompressionRule::Constant(2), &[0.0, 0.5, 1.0]).unwrap();
        assert!(p[1].gap < p[0].gap);
    }

    #[test]
    fn linear_m_gap_is_only_diagnostic() {
        let p = q3prime_profile(&[1_000, 10_000, 100_000], CompressionRule::NMinus(4), &[1.0]).unwrap();
        assert!(p.iter().all(|g| g.gap.is_finite()));
    }

    #[test]
    fn profile_csv() {
        let p = [GapPoint { n: 10, m: 2, gap: 0.5 }];
        let mut buf = Vec::new();
        write_profile_csv(&p, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,m,gap\n10,2,0.5\n");
    }
}
