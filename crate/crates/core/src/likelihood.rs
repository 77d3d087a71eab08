//! Exact likelihoods and likelihood ratios of attachment logs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttachmentLog, DegreeTailCounts};
use crate::numeric::{ln_factorial, CompensatedSum};
use crate::simulator::DeltaProfile;

/// Total attachment weight before edge `i` of arrival `t`:
/// `(2m + delta) t - 2m + i - 1`.
#[inline]
pub fn s_value(t: usize, i: usize, delta: f64, m: usize) -> f64 {
    (2 * m * (t - 1) + (i - 1)) as f64 + delta * t as f64
}

/// Log-likelihood split into its three parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLik {
    pub value: f64,
    /// `log C(g)`, the number of edge orderings realizing the multigraph.
    pub log_multiplicity: f64,
    /// `sum_k N_{>k} log(k + delta)` (split by time for a step profile).
    pub numerator: f64,
    /// `sum_t sum_i log S_{t,i-1}(delta(t))`.
    pub normalizer: f64,
}

/// Value with two-sided analytic bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn holds(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }
}

/// `log C(g) = (n-1) log m! - sum log mu!` over edge multiplicities of
/// arrivals `t >= 2`.
pub fn log_multiplicity(g: &AttachmentLog) -> f64 {
    let m = g.m();
    if m == 1 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    let lm = ln_factorial(m as u64);
    let mut buf = Vec::with_capacity(m);
    for (_, row) in g.rows() {
        acc.add(lm);
        buf.clear();
        buf.extend_from_slice(row);
        buf.sort_unstable();
        let mut run = 1u64;
        for j in 1..=buf.len() {
            if j < buf.len() && buf[j] == buf[j - 1] {
                run += 1;
            } else {
                if run > 1 {
                    acc.add(-ln_factorial(run));
                }
                run = 1;
            }
        }
    }
    acc.value()
}

/// `sum_{t=from}^{to} sum_i log S_{t,i-1}(delta)`.
pub fn log_normalizer(from: usize, to: usize, delta: f64, m: usize) -> f64 {
    let mut acc = CompensatedSum::new();
    for t in from.max(2)..=to {
        for i in 1..=m {
            acc.add(s_value(t, i, delta, m).ln());
        }
    }
    acc.value()
}

fn tail_sum(counts: &DegreeTailCounts, delta: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for (k, c) in counts.iter() {
        if c > 0 {
            acc.add(c as f64 * (k as f64 + delta).ln());
        }
    }
    acc.value()
}

/// Tail counts of the graph after arrival `t` (empty for `t <= 1`).
fn counts_at(g: &AttachmentLog, t: usize) -> DegreeTailCounts {
    g.degree_tail_counts(t.clamp(1, g.n()), None).expect("prefix time in range")
}

/// Exact log-likelihood of `g` under a constant or step profile.
pub fn log_likelihood(g: &AttachmentLog, profile: &DeltaProfile) -> Result<LogLik> {
    let m = g.m();
    let n = g.n();
    profile.validate(m)?;
    let log_c = log_multiplicity(g);
    let (numerator, normalizer) = match *profile {
        DeltaProfile::Constant { delta0 } => {
            let counts = counts_at(g, n);
            (tail_sum(&counts, delta0), log_normalizer(2, n, delta0, m))
        }
        DeltaProfile::Step { delta0, delta1, tau } => {
            let tau = tau.min(n);
            let all = counts_at(g, n);
            let pre = counts_at(g, tau);
            let mut num = CompensatedSum::new();
            for (k, c_all) in all.iter() {
                let c_pre = pre.get(k);
                if c_pre > 0 {
                    num.add(c_pre as f64 * (k as f64 + delta0).ln());
                }
                if c_all > c_pre {
                    num.add((c_all - c_pre) as f64 * (k as f64 + delta1).ln());
                }
            }
            let den = log_normalizer(2, tau, delta0, m) + log_normalizer(tau + 1, n, delta1, m);
            (num.value(), den)
        }
    };
    Ok(LogLik { value: log_c + numerator - normalizer, log_multiplicity: log_c, numerator, normalizer })
}

fn check_lr_args(g: &AttachmentLog, tau: usize, delta0: f64, delta1: f64) -> Result<()> {
    if tau > g.n() {
        return Err(Error::DomainError(format!("tau = {tau} exceeds n = {}", g.n())));
    }
    DeltaProfile::step(delta0, delta1, tau).validate(g.m())
}

/// `sum_{t>tau} sum_i log(S_{t,i-1}(delta0) / S_{t,i-1}(delta1))`.
pub fn log_s_ratio(tau: usize, n: usize, delta0: f64, delta1: f64, m: usize) -> f64 {
    let mut acc = CompensatedSum::new();
    for t in (tau + 1).max(2)..=n {
        for i in 1..=m {
            let s0 = s_value(t, i, delta0, m);
            let s1 = s_value(t, i, delta1, m);
            acc.add(((s0 - s1) / s1).ln_1p());
        }
    }
    acc.value()
}

/// Log likelihood ratio of the step alternative against the constant null,
/// computed from tail counts.
pub fn log_lr_tail(g: &AttachmentLog, tau: usize, delta0: f64, delta1: f64) -> Result<f64> {
    check_lr_args(g, tau, delta0, delta1)?;
    let n = g.n();
    if tau >= n || delta0 == delta1 {
        return Ok(0.0);
    }
    let all = counts_at(g, n);
    let pre = counts_at(g, tau);
    let mut acc = CompensatedSum::new();
    acc.add(log_s_ratio(tau, n, delta0, delta1, g.m()));
    for (k, c_all) in all.iter() {
        let dn = c_all - pre.get(k);
        if dn > 0 {
            acc.add(dn as f64 * ((delta1 - delta0) / (k as f64 + delta0)).ln_1p());
        }
    }
    Ok(acc.value())
}

/// The same ratio accumulated attachment by attachment over arrivals
/// `t > tau`, using replayed target degrees.
pub fn log_lr_sequential(g: &AttachmentLog, tau: usize, delta0: f64, delta1: f64) -> Result<f64> {
    check_lr_args(g, tau, delta0, delta1)?;
    let n = g.n();
    let m = g.m();
    if tau >= n || delta0 == delta1 {
        return Ok(0.0);
    }
    let ad = g.attachment_degrees();
    let start = (tau.max(1) - 1) * m;
    let mut acc = CompensatedSum::new();
    for (j, &d) in ad.iter().enumerate().skip(start) {
        let t = j / m + 2;
        let i = j % m + 1;
        let s0 = s_value(t, i, delta0, m);
        let s1 = s_value(t, i, delta1, m);
        acc.add(((s0 - s1) / s1).ln_1p());
        acc.add(((delta1 - delta0) / (d as f64 + delta0)).ln_1p());
    }
    Ok(acc.value())
}

/// Log likelihood ratio (tail-count form).
pub fn log_lr(g: &AttachmentLog, tau: usize, delta0: f64, delta1: f64) -> Result<f64> {
    log_lr_tail(g, tau, delta0, delta1)
}

/// `prod_{t=tau+1}^{n} prod_i S(delta0)/S(delta1)` with the bounds
/// `exp(-+6 m Delta / tau) ((2m+delta0)/(2m+delta1))^{m Delta}`.
pub fn s_product_ratio(tau: usize, n: usize, delta0: f64, delta1: f64, m: usize) -> Result<Bracket> {
    if tau < 3 {
        return Err(Error::DomainError(format!("tau = {tau} must be at least 3")));
    }
    if tau > n {
        return Err(Error::DomainError(format!("tau = {tau} exceeds n = {n}")));
    }
    DeltaProfile::step(delta0, delta1, tau).validate(m)?;
    let big_delta = (n - tau) as f64;
    let mf = m as f64;
    let value = log_s_ratio(tau, n, delta0, delta1, m).exp();
    let center = mf * big_delta * ((2.0 * mf + delta0) / (2.0 * mf + delta1)).ln();
    let slack = 6.0 * mf * big_delta / tau as f64;
    Ok(Bracket { value, lower: (center - slack).exp(), upper: (center + slack).exp() })
}
