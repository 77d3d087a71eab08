//! Score equations, maximum-likelihood estimation, likelihood-ratio tests and
//! change-point localization.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result, Window};
use crate::graph::AttachmentLog;
use crate::likelihood::{log_likelihood, log_lr, s_value};
use crate::numeric::CompensatedSum;
use crate::simulator::DeltaProfile;
use crate::theory::asymptotic_variance;

pub const SCORE_TOL: f64 = 1e-10;
pub const MAX_BISECTIONS: usize = 200;
pub const DELTA_MAX: f64 = 1e6;

/// Sufficient data for the score of one window of arrivals `first..=last`.
#[derive(Debug, Clone)]
pub struct WindowScore {
    m: usize,
    first: usize,
    last: usize,
    // (k, N_{>k}(g_last) - N_{>k}(g_{first-1}))
    increments: Vec<(usize, u64)>,
}

impl WindowScore {
    pub fn new(g: &AttachmentLog, first: usize, last: usize) -> Result<Self> {
        if first < 1 || last > g.n() || first > last + 1 {
            return Err(Error::DomainError(format!("window {first}..={last} outside 1..={}", g.n())));
        }
        let hi = g.degree_tail_counts(last.max(1), None)?;
        let lo = g.degree_tail_counts((first - 1).max(1), None)?;
        let increments = hi.iter().map(|(k, c)| (k, c - lo.get(k))).filter(|&(_, c)| c > 0).collect();
        Ok(Self { m: g.m(), first, last, increments })
    }

    /// Number of arrivals that carry edges in the window.
    pub fn arrivals(&self) -> usize {
        (self.first.max(2)..=self.last).count()
    }

    /// Derivative of the window log-likelihood in `delta`.
    pub fn eval(&self, delta: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for &(k, c) in &self.increments {
            acc.add(c as f64 / (k as f64 + delta));
        }
        for t in self.first.max(2)..=self.last {
            for i in 1..=self.m {
                acc.add(-(t as f64) / s_value(t, i, delta, self.m));
            }
        }
        acc.value()
    }
}

/// Score of the window `first..=last` at `delta`.
pub fn score(g: &AttachmentLog, first: usize, last: usize, delta: f64) -> Result<f64> {
    DeltaProfile::constant(delta).validate(g.m())?;
    Ok(WindowScore::new(g, first, last)?.eval(delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStatus {
    Converged,
    /// Bisection stopped on the iteration cap or at float resolution before
    /// the score dropped below tolerance.
    IterationLimit,
}

/// Root of one window score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFit {
    pub window: Window,
    pub estimate: f64,
    pub score: f64,
    pub bracket: (f64, f64),
    pub score_at_bracket: (f64, f64),
    pub iterations: usize,
    pub arrivals: usize,
    pub status: RootStatus,
}

/// Finds the zero of a window score on `(-m + eps, DELTA_MAX]`.
pub fn fit_window(ws: &WindowScore, window: Window) -> Result<WindowFit> {
    let m = ws.m as f64;
    let floor = -m + 1e-9 * m;
    let s0 = ws.eval(0.0);
    let (mut lo, mut hi, mut s_lo, mut s_hi);
    if s0 == 0.0 {
        return Ok(WindowFit {
            window,
            estimate: 0.0,
            score: 0.0,
            bracket: (0.0, 0.0),
            score_at_bracket: (0.0, 0.0),
            iterations: 0,
            arrivals: ws.arrivals(),
            status: RootStatus::Converged,
        });
    } else if s0 > 0.0 {
        (lo, s_lo) = (0.0, s0);
        let mut x = 1.0f64;
        loop {
            let s = ws.eval(x);
            if s < 0.0 {
                (hi, s_hi) = (x, s);
                break;
            }
            (lo, s_lo) = (x, s);
            if x >= DELTA_MAX {
                return Err(Error::NoInteriorRoot { window });
            }
            x = (2.0 * x).min(DELTA_MAX);
        }
    } else {
        (hi, s_hi) = (0.0, s0);
        let mut gap = m / 2.0;
        loop {
            let x = (-m + gap).max(floor);
            let s = ws.eval(x);
            if s > 0.0 {
                (lo, s_lo) = (x, s);
                break;
            }
            (hi, s_hi) = (x, s);
            if x <= floor {
                return Err(Error::NoInteriorRoot { window });
            }
            gap /= 2.0;
        }
    }
    let bracket = (lo, hi);
    let score_at_bracket = (s_lo, s_hi);
    let mut best = if s_lo.abs() < s_hi.abs() { (lo, s_lo) } else { (hi, s_hi) };
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS && best.1.abs() > SCORE_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let s = ws.eval(mid);
        if s.abs() < best.1.abs() {
            best = (mid, s);
        }
        if s > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let status = if best.1.abs() <= SCORE_TOL { RootStatus::Converged } else { RootStatus::IterationLimit };
    Ok(WindowFit {
        window,
        estimate: best.0,
        score: best.1,
        bracket,
        score_at_bracket,
        iterations,
        arrivals: ws.arrivals(),
        status,
    })
}

/// Maximum-likelihood estimates of the pre- and post-change shifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub tau: usize,
    pub pre: WindowFit,
    pub post: WindowFit,
    pub delta0_hat: f64,
    pub delta1_hat: f64,
    /// Plug-in `nu_0`, `nu_1` at the estimates.
    pub nu0: f64,
    pub nu1: f64,
    pub se0: f64,
    pub se1: f64,
}

impl MleResult {
    /// Normal-approximation intervals `delta_hat -+ z se` at level `level`.
    pub fn confidence_intervals(&self, level: f64) -> ((f64, f64), (f64, f64)) {
        let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + level / 2.0);
        (
            (self.delta0_hat - z * self.se0, self.delta0_hat + z * self.se0),
            (self.delta1_hat - z * self.se1, self.delta1_hat + z * self.se1),
        )
    }
}

/// Independent score roots on arrivals `2..=tau` and `tau+1..=n`.
pub fn mle(g: &AttachmentLog, tau: usize) -> Result<MleResult> {
    let n = g.n();
    if tau < 1 || tau >= n {
        return Err(Error::DomainError(format!("tau = {tau} must lie in 1..{n}")));
    }
    let pre = fit_window(&WindowScore::new(g, 1, tau)?, Window::Pre)?;
    let post = fit_window(&WindowScore::new(g, tau + 1, n)?, Window::Post)?;
    let (d0, d1) = (pre.estimate, post.estimate);
    let nu0 = asymptotic_variance(0, d0, d1, g.m())?.value;
    let nu1 = asymptotic_variance(1, d0, d1, g.m())?.value;
    let se = |len: usize, nu: f64| 1.0 / (len as f64 * nu).sqrt();
    Ok(MleResult {
        tau,
        pre,
        post,
        delta0_hat: d0,
        delta1_hat: d1,
        nu0,
        nu1,
        se0: se(tau, nu0),
        se1: se(n - tau, nu1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMode {
    KnownParams,
    PluginMle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub statistic: f64,
    pub reject: bool,
    pub mode: TestMode,
}

impl TestVerdict {
    fn new(statistic: f64, mode: TestMode) -> Self {
        Self { statistic, reject: statistic > 0.0, mode }
    }
}

/// Likelihood-ratio test with known parameters: rejects iff `log LR > 0`.
pub fn lr_test(g: &AttachmentLog, tau: usize, delta0: f64, delta1: f64) -> Result<TestVerdict> {
    Ok(TestVerdict::new(log_lr(g, tau, delta0, delta1)?, TestMode::KnownParams))
}

/// Plug-in test: the likelihood ratio of the step model at
/// `(tau, d0_hat, d1_hat)` against the constant model at `d0_hat`.
pub fn plugin_lr_test(g: &AttachmentLog, tau: usize) -> Result<TestVerdict> {
    let est = mle(g, tau)?;
    let stat = if est.delta0_hat == est.delta1_hat { 0.0 } else { log_lr(g, tau, est.delta0_hat, est.delta1_hat)? };
    Ok(TestVerdict::new(stat, TestMode::PluginMle))
}

/// Change-point estimate and the step log-likelihood for every `tau in 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub tau_hat: usize,
    pub profile: Vec<f64>,
}

/// Maximizes the step log-likelihood over `tau` in one pass: moving the change
/// from `tau` to `tau + 1` only changes the factors of arrival `tau + 1`.
/// Ties go to the smallest `tau`.
pub fn localize_tau(g: &AttachmentLog, delta0: f64, delta1: f64) -> Result<Localization> {
    let n = g.n();
    let m = g.m();
    let start = log_likelihood(g, &DeltaProfile::step(delta0, delta1, 0))?.value;
    let ad = g.attachment_degrees();
    let mut profile = Vec::with_capacity(n + 1);
    profile.push(start);
    let mut acc = CompensatedSum::new();
    acc.add(start);
    // arrival 1 is deterministic
    profile.push(start);
    for t in 2..=n {
        for i in 1..=m {
            let d = ad[(t - 2) * m + i - 1] as f64;
            let s0 = s_value(t, i, delta0, m);
            let s1 = s_value(t, i, delta1, m);
            acc.add(((delta0 - delta1) / (d + delta1)).ln_1p());
            acc.add(((s1 - s0) / s0).ln_1p());
        }
        profile.push(acc.value());
    }
    let mut tau_hat = 0;
    for (tau, &v) in profile.iter().enumerate() {
        if v > profile[tau_hat] {
            tau_hat = tau;
        }
    }
    Ok(Localization { tau_hat, profile })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(n: usize, m: usize, rows: &[&[usize]]) -> AttachmentLog {
        AttachmentLog::from_rows(n, m, rows.iter().enumerate().map(|(j, r)| (j + 2, r.to_vec()))).unwrap()
    }

    #[test]
    fn score_examples() {
        let g = log(3, 1, &[&[0], &[1]]);
        assert!((score(&g, 3, 3, 0.0).unwrap() - 0.25).abs() < 1e-15);
        let g = log(3, 1, &[&[0], &[0]]);
        for &d in &[-0.9, -0.5, 0.0, 1.0, 10.0, 1000.0] {
            let want = -2.0 / ((2.0 + d) * (3.0 * d + 4.0));
            assert!((score(&g, 3, 3, d).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn no_interior_root_for_star() {
        let g = log(3, 1, &[&[0], &[0]]);
        assert_eq!(mle(&g, 2).unwrap_err(), Error::NoInteriorRoot { window: Window::Post });
    }

    #[test]
    fn converged_roots_meet_tolerance() {
        let g = crate::simulator::simulate(3000, 2, &DeltaProfile::step(0.5, 2.0, 1500), 5).unwrap();
        let r = mle(&g, 1500).unwrap();
        for w in [r.pre, r.post] {
            assert_eq!(w.status, RootStatus::Converged);
            assert!(w.score.abs() <= SCORE_TOL);
        }
        let (c0, c1) = r.confidence_intervals(0.95);
        assert!(c0.0 < r.delta0_hat && r.delta0_hat < c0.1);
        assert!(c1.0 < r.delta1_hat && r.delta1_hat < c1.1);
    }

    #[test]
    fn tests_follow_strict_sign() {
        let g = log(3, 1, &[&[0], &[0]]);
        let v = lr_test(&g, 2, 0.0, 0.0).unwrap();
        assert_eq!((v.statistic, v.reject), (0.0, false));
        let v = lr_test(&g, 2, 0.0, 1.0).unwrap();
        assert!(!v.reject && v.statistic < 0.0);
    }

    #[test]
    fn localization_sweep_matches_direct_evaluation() {
        let g = crate::simulator::simulate(60, 2, &DeltaProfile::step(0.0, 3.0, 40), 3).unwrap();
        let loc = localize_tau(&g, 0.0, 3.0).unwrap();
        for tau in 0..=60 {
            let direct = log_likelihood(&g, &DeltaProfile::step(0.0, 3.0, tau)).unwrap().value;
            assert!((loc.profile[tau] - direct).abs() < 1e-10, "tau = {tau}");
        }
        assert_eq!(loc.profile[loc.tau_hat], loc.profile.iter().cloned().fold(f64::MIN, f64::max));
    }
}
