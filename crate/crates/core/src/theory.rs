//! Closed-form limits: degree law, separation rates, estimator variances,
//! and exact finite-time degree moments.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::likelihood::{s_value, Bracket};
use crate::numeric::CompensatedSum;

const REL_TOL: f64 = 1e-14;
const MAX_TERMS: usize = 200_000_000;
const REANCHOR: usize = 4096;

/// Truncated series value with a bound on the neglected remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub remainder: f64,
    /// Last index included.
    pub last_k: usize,
}

/// Which measure generates the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    H0,
    H1,
}

fn check_delta(m: usize, delta: f64, name: &str) -> Result<()> {
    if m == 0 {
        return Err(Error::DomainError("m must be at least 1".into()));
    }
    if !(delta.is_finite() && delta > -(m as f64)) {
        return Err(Error::DomainError(format!("{name} = {delta} must be finite and > -{m}")));
    }
    Ok(())
}

/// Limiting degree distribution of affine attachment with parameters `(m, delta)`:
/// `p_k = (2 + delta/m) G(k+delta) G(m+2+delta+delta/m) / (G(m+delta) G(k+3+delta+delta/m))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeLaw {
    m: usize,
    delta: f64,
    ln_prefactor: f64,
    // delta / m
    ratio: f64,
}

impl DegreeLaw {
    pub fn new(m: usize, delta: f64) -> Result<Self> {
        check_delta(m, delta, "delta")?;
        let mf = m as f64;
        let ratio = delta / mf;
        let ln_prefactor = (2.0 + ratio).ln() + ln_gamma(mf + 2.0 + delta + ratio) - ln_gamma(mf + delta);
        Ok(Self { m, delta, ln_prefactor, ratio })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn ln_pmf(&self, k: usize) -> f64 {
        let k = k as f64;
        self.ln_prefactor + ln_gamma(k + self.delta) - ln_gamma(k + 3.0 + self.delta + self.ratio)
    }

    /// `p_k`, zero below `m`.
    pub fn pmf(&self, k: usize) -> f64 {
        if k < self.m {
            0.0
        } else {
            self.ln_pmf(k).exp()
        }
    }

    fn tail_from_pmf(&self, k: usize, pk: f64) -> f64 {
        (k as f64 + self.delta) * pk / (2.0 + self.ratio)
    }

    /// `p_{>k} = sum_{j>k} p_j`, from the identity
    /// `p_{>k} = (k + delta) m / (2m + delta) p_k`.
    pub fn tail(&self, k: usize) -> f64 {
        if k < self.m {
            1.0
        } else {
            self.tail_from_pmf(k, self.pmf(k))
        }
    }

    /// `sum_{j >= k} p_{>j}` in closed form (telescoping gamma ratios).
    pub fn tail_of_tails(&self, k: usize) -> f64 {
        let k = k.max(self.m) as f64;
        let d = self.delta;
        let ln = self.ln_prefactor - (2.0 + self.ratio).ln() - (1.0 + self.ratio).ln() + ln_gamma(k + 1.0 + d)
            - ln_gamma(k + 2.0 + d + self.ratio);
        ln.exp()
    }

    /// Visits `(k, p_k, p_{>k})` for `k = m, m+1, ...` until `visit` returns false.
    fn walk(&self, mut visit: impl FnMut(usize, f64, f64) -> bool) {
        let mut k = self.m;
        let mut pk = self.pmf(k);
        let mut steps = 0usize;
        loop {
            if !visit(k, pk, self.tail_from_pmf(k, pk)) {
                return;
            }
            let kf = k as f64;
            pk *= (kf + self.delta) / (kf + 3.0 + self.delta + self.ratio);
            k += 1;
            steps += 1;
            if steps % REANCHOR == 0 {
                pk = self.pmf(k);
            }
        }
    }

    /// `E f(X)` with remainder bounded by `sup_{x > K} |f(x)| * p_{>K}`, where
    /// `sup_bound(K)` supplies that supremum.
    pub fn expect(&self, f: impl Fn(f64) -> f64, sup_bound: impl Fn(usize) -> f64) -> SeriesValue {
        let mut acc = CompensatedSum::new();
        let mut out = SeriesValue { value: 0.0, remainder: f64::INFINITY, last_k: self.m };
        self.walk(|k, pk, tail| {
            acc.add(pk * f(k as f64));
            let rem = sup_bound(k) * tail;
            let v = acc.value();
            out = SeriesValue { value: v, remainder: rem, last_k: k };
            !(rem <= REL_TOL * v.abs().max(f64::MIN_POSITIVE) || k - self.m >= MAX_TERMS)
        });
        out
    }

    /// `sum_k p_{>k} g(k)` with remainder bounded by
    /// `sup_{j > K} |g(j)| * sum_{j > K} p_{>j}`.
    pub fn sum_tails(&self, g: impl Fn(f64) -> f64, sup_bound: impl Fn(usize) -> f64) -> SeriesValue {
        let mut acc = CompensatedSum::new();
        let mut out = SeriesValue { value: 0.0, remainder: f64::INFINITY, last_k: self.m };
        let mut tt = self.tail_of_tails(self.m + 1);
        self.walk(|k, _pk, tail| {
            acc.add(tail * g(k as f64));
            if (k - self.m) % REANCHOR == 0 {
                tt = self.tail_of_tails(k + 1);
            }
            let rem = sup_bound(k) * tt;
            let kf = k as f64;
            tt *= (kf + 2.0 + self.delta) / (kf + 3.0 + self.delta + self.ratio);
            let v = acc.value();
            out = SeriesValue { value: v, remainder: rem, last_k: k };
            !(rem <= REL_TOL * v.abs().max(f64::MIN_POSITIVE) || k - self.m >= MAX_TERMS)
        });
        out
    }

    /// Partial mass `sum_{k=m}^{K} p_k`, stopping once `p_{>K} <= tol`.
    pub fn partial_mass(&self, tol: f64) -> SeriesValue {
        let mut acc = CompensatedSum::new();
        let mut out = SeriesValue { value: 0.0, remainder: 1.0, last_k: self.m };
        self.walk(|k, pk, tail| {
            acc.add(pk);
            out = SeriesValue { value: acc.value(), remainder: tail, last_k: k };
            !(tail <= tol || k - self.m >= MAX_TERMS)
        });
        out
    }

    /// Mean of the law: partial sum of `k p_k` up to the point where
    /// `p_{>K} <= tol`, plus the exact remainder
    /// `(K+1) p_{>K} + sum_{j > K} p_{>j}`.
    pub fn mean(&self, tol: f64) -> SeriesValue {
        let mut acc = CompensatedSum::new();
        let mut last = (self.m, 1.0);
        self.walk(|k, pk, tail| {
            acc.add(k as f64 * pk);
            last = (k, tail);
            !(tail <= tol || k - self.m >= MAX_TERMS)
        });
        let (k, tail) = last;
        let rem = (k + 1) as f64 * tail + self.tail_of_tails(k + 1);
        SeriesValue { value: acc.value() + rem, remainder: 0.0, last_k: k }
    }
}

/// `p_k(delta)` for `k >= m`.
pub fn limit_degree_pmf(k: usize, m: usize, delta: f64) -> Result<f64> {
    let law = DegreeLaw::new(m, delta)?;
    if k < m {
        return Err(Error::DomainError(format!("k = {k} below m = {m}")));
    }
    Ok(law.pmf(k))
}

/// Per-post-change-arrival separation rate of the log likelihood ratio:
/// `H0` gives the limit of `-(1/Delta) log LR` under the null, `H1` the limit
/// of `+(1/Delta) log LR` under the alternative.
pub fn limit_loglr_rate(delta0: f64, delta1: f64, m: usize, hypothesis: Hypothesis) -> Result<SeriesValue> {
    check_delta(m, delta0, "delta0")?;
    check_delta(m, delta1, "delta1")?;
    let law = DegreeLaw::new(m, delta0)?;
    let mf = m as f64;
    if delta0 == delta1 {
        return Ok(SeriesValue { value: 0.0, remainder: 0.0, last_k: m });
    }
    match hypothesis {
        Hypothesis::H0 => {
            let c = delta1 - delta0;
            let lo = delta0.min(delta1);
            let s = law.sum_tails(|k| (c / (k + delta0)).ln_1p(), |k| c.abs() / (k as f64 + 1.0 + lo));
            let head = mf * (c / (2.0 * mf + delta0)).ln_1p();
            Ok(SeriesValue { value: head - s.value, ..s })
        }
        Hypothesis::H1 => {
            let c = delta0 - delta1;
            // E[(X+d1) log(1 + c/(X+d1)) - c], each term in [-c^2/(X+d0), 0]
            let s = law.expect(
                |k| {
                    let y = k + delta1;
                    y * (c / y).ln_1p() - c
                },
                |k| c * c / (k as f64 + 1.0 + delta0),
            );
            let inner = s.value + c - (2.0 * mf + delta1) * (c / (2.0 * mf + delta1)).ln_1p();
            let scale = mf / (2.0 * mf + delta1);
            Ok(SeriesValue { value: -scale * inner, remainder: scale * s.remainder, last_k: s.last_k })
        }
    }
}

/// `nu_j = m/(2m+delta_j) (sum_k p_k(delta0)/(k+delta_j) - 1/(2m+delta_j))`.
pub fn asymptotic_variance(j: u8, delta0: f64, delta1: f64, m: usize) -> Result<SeriesValue> {
    check_delta(m, delta0, "delta0")?;
    check_delta(m, delta1, "delta1")?;
    let dj = match j {
        0 => delta0,
        1 => delta1,
        _ => return Err(Error::DomainError(format!("window index {j} must be 0 or 1"))),
    };
    let law = DegreeLaw::new(m, delta0)?;
    let mf = m as f64;
    let s = law.expect(|k| 1.0 / (k + dj), |k| 1.0 / (k as f64 + 1.0 + dj));
    let scale = mf / (2.0 * mf + dj);
    Ok(SeriesValue { value: scale * (s.value - 1.0 / (2.0 * mf + dj)), remainder: scale * s.remainder, last_k: s.last_k })
}

/// Limit of `(1/Delta)` times the post-window score at `delta` under the
/// alternative: `m/(2m+delta1) (E[(X+delta1)/(X+delta)] - (2m+delta1)/(2m+delta))`
/// with `X ~ p(delta0)`.
pub fn score_limit(delta: f64, delta0: f64, delta1: f64, m: usize) -> Result<SeriesValue> {
    check_delta(m, delta, "delta")?;
    check_delta(m, delta0, "delta0")?;
    check_delta(m, delta1, "delta1")?;
    let law = DegreeLaw::new(m, delta0)?;
    let mf = m as f64;
    let c = delta1 - delta;
    let s = law.expect(|k| c / (k + delta), |k| c.abs() / (k as f64 + 1.0 + delta));
    let scale = mf / (2.0 * mf + delta1);
    let value = scale * (1.0 + s.value - (2.0 * mf + delta1) / (2.0 * mf + delta));
    Ok(SeriesValue { value, remainder: scale * s.remainder, last_k: s.last_k })
}

/// Exact null moments of `d_{G_t}(u) + delta0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCoeffs {
    pub u: usize,
    pub t: usize,
    /// Coefficient of `(m + delta0)^2` in the second moment.
    pub xi: f64,
    /// Coefficient of `(m + delta0)` in the second moment.
    pub kappa: f64,
    /// `prod_j gamma_j`, the growth factor of the first moment.
    pub gamma_product: f64,
    /// `E[d + delta0]`.
    pub mean: f64,
    /// `E[(d + delta0)^2]`.
    pub second: f64,
}

impl MomentCoeffs {
    /// `E[d]`.
    pub fn mean_degree(&self, delta0: f64) -> f64 {
        self.mean - delta0
    }

    /// `max(xi, kappa) / (t / max(1, u))^{2m/(2m+delta0)}`.
    pub fn growth_ratio(&self, m: usize, delta0: f64) -> f64 {
        let mf = m as f64;
        let base = self.t as f64 / self.u.max(1) as f64;
        self.xi.max(self.kappa) / base.powf(2.0 * mf / (2.0 * mf + delta0))
    }
}

/// First and second null moments of the degree of `u` after arrival `t`,
/// via backward recursions over arrivals `j = max(1,u)+1 ..= t`.
pub fn degree_moment(u: usize, t: usize, m: usize, delta0: f64) -> Result<MomentCoeffs> {
    check_delta(m, delta0, "delta0")?;
    let start = u.max(1);
    if t < start {
        return Err(Error::DomainError(format!("vertex {u} does not exist at time {t}")));
    }
    let mut xi = 1.0;
    let mut kappa = 0.0;
    let mut gamma_product = 1.0;
    for j in (start + 1..=t).rev() {
        // alpha_{j,i-1} = alpha_{j,i}(1 + 2/S), beta_{j,i-1} = beta_{j,i}(1 + 1/S) + alpha_{j,i}/S
        let mut alpha = 1.0;
        let mut beta = 0.0;
        let mut gamma = 1.0;
        for i in (1..=m).rev() {
            let s = s_value(j, i, delta0, m);
            beta = beta * (1.0 + 1.0 / s) + alpha / s;
            alpha *= 1.0 + 2.0 / s;
            gamma *= 1.0 + 1.0 / s;
        }
        kappa = xi * beta + kappa * gamma;
        xi *= alpha;
        gamma_product *= gamma;
    }
    let a = m as f64 + delta0;
    Ok(MomentCoeffs { u, t, xi, kappa, gamma_product, mean: gamma_product * a, second: xi * a * a + kappa * a })
}

/// `m_n = (1/Delta') sum_{k > tau'} prod_i S_{k,i-1}(delta1)/S_{k,i-1}(delta0)`
/// with bounds `exp(-+6m/tau') ((2m+delta1)/(2m+delta0))^m`.
pub fn mean_weight_mn(tau_prime: usize, n: usize, delta0: f64, delta1: f64, m: usize) -> Result<Bracket> {
    check_delta(m, delta0, "delta0")?;
    check_delta(m, delta1, "delta1")?;
    if tau_prime < 3 {
        return Err(Error::DomainError(format!("tau' = {tau_prime} must be at least 3")));
    }
    if tau_prime >= n {
        return Err(Error::DomainError(format!("tau' = {tau_prime} must be below n = {n}")));
    }
    let mut acc = CompensatedSum::new();
    for k in tau_prime + 1..=n {
        let mut lr = 0.0;
        for i in 1..=m {
            let s1 = s_value(k, i, delta1, m);
            let s0 = s_value(k, i, delta0, m);
            lr += ((s1 - s0) / s0).ln_1p();
        }
        acc.add(lr.exp());
    }
    let value = acc.value() / (n - tau_prime) as f64;
    let mf = m as f64;
    let center = mf * ((2.0 * mf + delta1) / (2.0 * mf + delta0)).ln();
    let slack = 6.0 * mf / tau_prime as f64;
    Ok(Bracket { value, lower: (center - slack).exp(), upper: (center + slack).exp() })
}
