//! Permutation reduction: bold-vertex kernel, the event `B_n`, the exact
//! permuted likelihood ratio and Monte Carlo probes of its moment bounds.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::campaign::{partition, run_replicates, McResult};
use crate::error::{Error, Result};
use crate::graph::{arrival_weights, AttachmentLog, BoldSet};
use crate::likelihood::log_s_ratio;
use crate::numeric::CompensatedSum;
use crate::simulator::{simulate_with, DeltaProfile};
use crate::theory::mean_weight_mn;

/// Everything the reduction needs about one observed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionContext {
    pub n: usize,
    pub m: usize,
    pub tau: usize,
    pub tau_prime: usize,
    pub alpha: f64,
    pub delta0: f64,
    pub delta1: f64,
    /// Bold set with weights bound.
    pub bold: BoldSet,
    /// Number of bold vertices among arrivals `tau+1..=n`.
    pub r: usize,
    /// `W_t` for every arrival.
    weights: Vec<f64>,
}

impl ReductionContext {
    pub fn new(g: &AttachmentLog, tau: usize, tau_prime: usize, alpha: f64, delta0: f64, delta1: f64) -> Result<Self> {
        let n = g.n();
        if tau_prime >= tau || tau > n {
            return Err(Error::DomainError(format!("need 0 <= tau' < tau <= n, got tau' = {tau_prime}, tau = {tau}, n = {n}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::DomainError(format!("alpha = {alpha} must be positive")));
        }
        DeltaProfile::step(delta0, delta1, tau).validate(g.m())?;
        let weights = arrival_weights(g, delta0, delta1)?;
        let mut bold = g.bold_vertices(tau_prime)?;
        bold.weights = Some(bold.members.iter().map(|&k| weights[k]).collect());
        let r = bold.members.iter().filter(|&&v| v > tau).count();
        Ok(Self { n, m: g.m(), tau, tau_prime, alpha, delta0, delta1, bold, r, weights })
    }

    /// `n - tau`.
    pub fn big_delta(&self) -> usize {
        self.n - self.tau
    }

    /// `n - tau'`.
    pub fn big_delta_prime(&self) -> usize {
        self.n - self.tau_prime
    }

    /// `Delta' (1 - alpha Delta' / tau')`, the required bold count.
    pub fn bn_threshold(&self) -> f64 {
        bn_threshold(self.big_delta_prime(), self.tau_prime, self.alpha)
    }

    /// `W_t` of arrival `t`.
    pub fn weight(&self, t: usize) -> f64 {
        self.weights[t]
    }
}

fn bn_threshold(big_delta_prime: usize, tau_prime: usize, alpha: f64) -> f64 {
    let dp = big_delta_prime as f64;
    if tau_prime == 0 {
        return f64::NEG_INFINITY;
    }
    dp * (1.0 - alpha * dp / tau_prime as f64)
}

/// Uniform permutation of `0..=n` fixing every label outside the bold set.
pub fn kernel_sample_from<R: Rng + ?Sized>(bold: &BoldSet, n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..=n).collect();
    let mut images = bold.members.clone();
    images.shuffle(rng);
    for (&v, &w) in bold.members.iter().zip(&images) {
        perm[v] = w;
    }
    perm
}

/// Draws from the kernel: a uniform permutation of the bold vertices of `g`.
pub fn kernel_sample<R: Rng + ?Sized>(g: &AttachmentLog, tau_prime: usize, rng: &mut R) -> Result<Vec<usize>> {
    Ok(kernel_sample_from(&g.bold_vertices(tau_prime)?, g.n(), rng))
}

/// Indicator of `|bold| >= Delta'(1 - alpha Delta'/tau')` and
/// `tau+1..=n` all bold.
pub fn event_bn(ctx: &ReductionContext) -> bool {
    ctx.bold.len() as f64 >= ctx.bn_threshold() && ctx.r == ctx.big_delta()
}

/// `log e_r(w)` by the subset-sum recursion, scaling the weights by their
/// geometric mean and renormalizing whenever the table grows large.
/// Returns `-inf` when `r > w.len()`.
pub fn log_elementary_symmetric(w: &[f64], r: usize) -> f64 {
    if r == 0 {
        return 0.0;
    }
    if r > w.len() {
        return f64::NEG_INFINITY;
    }
    let ln_g = w.iter().map(|x| x.ln()).collect::<CompensatedSum>().value() / w.len() as f64;
    let g = ln_g.exp();
    let mut e = vec![0.0f64; r + 1];
    e[0] = 1.0;
    let mut ln_scale = 0.0;
    for (idx, &x) in w.iter().enumerate() {
        let x = x / g;
        for j in (1..=r.min(idx + 1)).rev() {
            e[j] += x * e[j - 1];
        }
        let big = e.iter().cloned().fold(0.0, f64::max);
        if big > 1e150 {
            for v in &mut e {
                *v /= big;
            }
            ln_scale += big.ln();
        }
    }
    e[r].ln() + ln_scale + r as f64 * ln_g
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `log Y_n`: the likelihood ratio of the permuted observation, averaged
/// exactly over the kernel via elementary symmetric polynomials.
pub fn log_permuted_lr(ctx: &ReductionContext) -> Result<f64> {
    let (n, tau) = (ctx.n, ctx.tau);
    if tau >= n || ctx.delta0 == ctx.delta1 {
        return Ok(0.0);
    }
    let mut acc = CompensatedSum::new();
    acc.add(log_s_ratio(tau, n, ctx.delta0, ctx.delta1, ctx.m));
    for t in tau + 1..=n {
        if !ctx.bold.contains(t) {
            let w = ctx.weights[t];
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::UndefinedWeight { t });
            }
            acc.add(w.ln());
        }
    }
    let w = ctx.bold.weights.as_deref().unwrap_or(&[]);
    acc.add(log_elementary_symmetric(w, ctx.r));
    acc.add(-ln_binomial(w.len(), ctx.r));
    Ok(acc.value())
}

/// `Y_n`.
pub fn permuted_lr(ctx: &ReductionContext) -> Result<f64> {
    Ok(log_permuted_lr(ctx)?.exp())
}

/// `sqrt(pi e^{1/(2 beta)} / beta)`, an upper bound on
/// `int_1^inf exp(-beta log(x)^2) dx`.
pub fn integral_bound(beta: f64) -> f64 {
    (std::f64::consts::PI * (0.5 / beta).exp() / beta).sqrt()
}

/// Exponent of the second-moment bound:
/// `4 a D D'/t' + 22 m D^2/t' + 2/(3 D') + sqrt(c1 D^2/D') exp(c2 D^2/D')`.
pub fn contiguity_log_rhs(alpha: f64, big_delta: f64, big_delta_prime: f64, tau_prime: f64, m: usize, c1: f64, c2: f64) -> f64 {
    let d2 = big_delta * big_delta;
    4.0 * alpha * big_delta * big_delta_prime / tau_prime
        + 22.0 * m as f64 * d2 / tau_prime
        + 2.0 / (3.0 * big_delta_prime)
        + (c1 * d2 / big_delta_prime).sqrt() * (c2 * d2 / big_delta_prime).exp()
}

/// `(C/alpha)(1 + alpha D D'/t') * (log t' if delta0 == 0 else 1)`.
pub fn event_bn_rhs(c: f64, alpha: f64, big_delta: f64, big_delta_prime: f64, tau_prime: f64, delta0: f64) -> f64 {
    let shape = if delta0 == 0.0 { tau_prime.ln() } else { 1.0 };
    c / alpha * (1.0 + alpha * big_delta * big_delta_prime / tau_prime) * shape
}

/// Hypotheses of the second-moment bound that fail for these parameters.
pub fn second_moment_preconditions(n: usize, tau: usize, tau_prime: usize, alpha: f64) -> Vec<String> {
    let mut failed = Vec::new();
    if n < 4 {
        failed.push(format!("n = {n} < 4"));
    }
    if tau_prime < 3 {
        failed.push(format!("tau' = {tau_prime} < 3"));
    }
    if tau_prime >= tau {
        failed.push(format!("tau' = {tau_prime} >= tau = {tau}"));
    }
    if tau > n {
        failed.push(format!("tau = {tau} > n = {n}"));
    }
    if tau_prime > 0 && tau_prime < n {
        let dp = (n - tau_prime) as f64;
        let ratio = alpha * dp / tau_prime as f64;
        if ratio > 0.5 {
            failed.push(format!("alpha Delta'/tau' = {ratio} > 1/2"));
        }
        let d = n.saturating_sub(tau) as f64;
        if d / dp > 0.25 {
            failed.push(format!("Delta/Delta' = {} > 1/4", d / dp));
        }
    }
    failed
}

/// Parameters shared by the reduction probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub n: usize,
    pub m: usize,
    pub delta0: f64,
    pub delta1: f64,
    pub tau: usize,
    pub tau_prime: usize,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Worker threads (0 = all cores).
    pub threads: usize,
}

impl ProbeConfig {
    fn big_delta(&self) -> f64 {
        (self.n - self.tau) as f64
    }
    fn big_delta_prime(&self) -> f64 {
        (self.n - self.tau_prime) as f64
    }
}

fn refuse_negative_delta0(delta0: f64) -> Result<()> {
    if delta0 < 0.0 {
        return Err(Error::UnsupportedRegime(format!("delta0 = {delta0} < 0 is not covered")));
    }
    Ok(())
}

/// Whether violated hypotheses abort a probe or are only reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditions {
    Enforce,
    Report,
}

/// One replicate of the second-moment probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentRow {
    pub replicate: usize,
    pub in_bn: bool,
    pub log_y: f64,
    pub bold: usize,
    pub r: usize,
}

/// Monte Carlo estimate of `E_0[Y_n^2 1_{B_n}]` next to its analytic bound.
pub fn second_moment_probe(
    cfg: &ProbeConfig,
    c1: f64,
    c2: f64,
    policy: Preconditions,
) -> Result<(McResult, Vec<SecondMomentRow>)> {
    refuse_negative_delta0(cfg.delta0)?;
    let failed = second_moment_preconditions(cfg.n, cfg.tau, cfg.tau_prime, cfg.alpha);
    if !failed.is_empty() && (policy == Preconditions::Enforce || cfg.tau_prime >= cfg.tau || cfg.tau > cfg.n) {
        return Err(Error::PreconditionViolated(failed));
    }
    let null = DeltaProfile::constant(cfg.delta0);
    let outcomes = run_replicates(cfg.replicates, cfg.seed, cfg.threads, |r, rng| {
        let g = simulate_with(cfg.n, cfg.m, &null, rng)?;
        let ctx = ReductionContext::new(&g, cfg.tau, cfg.tau_prime, cfg.alpha, cfg.delta0, cfg.delta1)?;
        Ok(SecondMomentRow { replicate: r, in_bn: event_bn(&ctx), log_y: log_permuted_lr(&ctx)?, bold: ctx.bold.len(), r: ctx.r })
    });
    let (rows, failures) = partition(outcomes);
    let y2: Vec<f64> = rows.iter().map(|row| if row.in_bn { (2.0 * row.log_y).exp() } else { 0.0 }).collect();
    let y1: Vec<f64> = rows.iter().map(|row| if row.in_bn { row.log_y.exp() } else { 0.0 }).collect();
    let bn: Vec<f64> = rows.iter().map(|row| row.in_bn as u8 as f64).collect();
    let first = McResult::from_values(&y1, cfg.seed, failures);
    let p_bn = McResult::from_values(&bn, cfg.seed, failures);
    let log_rhs = contiguity_log_rhs(cfg.alpha, cfg.big_delta(), cfg.big_delta_prime(), cfg.tau_prime as f64, cfg.m, c1, c2);
    let mut out = McResult::from_values(&y2, cfg.seed, failures)
        .with("log_rhs", log_rhs)
        .with("rhs", log_rhs.exp())
        .with("c1", c1)
        .with("c2", c2)
        .with("first_moment", first.estimate)
        .with("first_moment_stderr", first.stderr)
        .with("p_bn", p_bn.estimate)
        .with("preconditions_ok", failed.is_empty() as u8 as f64);
    out.notes = failed;
    Ok((out, rows))
}

/// One replicate of the `B_n` failure probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventBnRow {
    pub replicate: usize,
    pub in_bn: bool,
    pub bold: usize,
    pub late_bold: usize,
}

/// Monte Carlo estimate of `P_1(B_n^c)`, with `E_1|bold|` and
/// `E_1|bold cap [tau+1, n]|`, next to the bound shape for constant `c`.
pub fn event_bn_failure_probe(cfg: &ProbeConfig, c: f64) -> Result<(McResult, Vec<EventBnRow>)> {
    refuse_negative_delta0(cfg.delta0)?;
    if cfg.tau_prime < 2 || cfg.tau_prime >= cfg.tau.max(1) || cfg.tau > cfg.n {
        return Err(Error::PreconditionViolated(vec![format!(
            "need 2 <= tau' < tau <= n, got tau' = {}, tau = {}, n = {}",
            cfg.tau_prime, cfg.tau, cfg.n
        )]));
    }
    let alt = DeltaProfile::step(cfg.delta0, cfg.delta1, cfg.tau);
    let outcomes = run_replicates(cfg.replicates, cfg.seed, cfg.threads, |r, rng| {
        let g = simulate_with(cfg.n, cfg.m, &alt, rng)?;
        let ctx = ReductionContext::new(&g, cfg.tau, cfg.tau_prime, cfg.alpha, cfg.delta0, cfg.delta1)?;
        Ok(EventBnRow { replicate: r, in_bn: event_bn(&ctx), bold: ctx.bold.len(), late_bold: ctx.r })
    });
    let (rows, failures) = partition(outcomes);
    let fail: Vec<f64> = rows.iter().map(|row| (!row.in_bn) as u8 as f64).collect();
    let bold: Vec<f64> = rows.iter().map(|row| row.bold as f64).collect();
    let late: Vec<f64> = rows.iter().map(|row| row.late_bold as f64).collect();
    let eb = McResult::from_values(&bold, cfg.seed, failures);
    let el = McResult::from_values(&late, cfg.seed, failures);
    let rhs = event_bn_rhs(c, cfg.alpha, cfg.big_delta(), cfg.big_delta_prime(), cfg.tau_prime as f64, cfg.delta0);
    let out = McResult::from_values(&fail, cfg.seed, failures)
        .with("rhs", rhs)
        .with("c", c)
        .with("threshold", bn_threshold(cfg.n - cfg.tau_prime, cfg.tau_prime, cfg.alpha))
        .with("mean_bold", eb.estimate)
        .with("mean_bold_stderr", eb.stderr)
        .with("mean_late_bold", el.estimate)
        .with("mean_late_bold_stderr", el.stderr)
        .with("delta_prime", cfg.big_delta_prime());
    Ok((out, rows))
}

/// Empirical tail frequency of `Z_n - m_n` at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub x: f64,
    pub frequency: f64,
    pub bound: f64,
    pub violated: bool,
}

/// Constant of the Azuma bound implied by increments bounded by
/// `2 max(1, (m+delta1)/(m+delta0))^m`: `1 / (8 max(...)^{2m})`.
pub fn azuma_constant(m: usize, delta0: f64, delta1: f64) -> f64 {
    let mf = m as f64;
    let b = ((mf + delta1) / (mf + delta0)).max(1.0).powi(m as i32);
    1.0 / (8.0 * b * b)
}

/// One replicate of the martingale probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRow {
    pub replicate: usize,
    pub z: f64,
}

/// Tail frequencies of `Z_n - m_n` under the null at each `x`, against
/// `exp(-c Delta' x^2)`. `c` defaults to [`azuma_constant`].
pub fn martingale_tail_probe(
    cfg: &ProbeConfig,
    xs: &[f64],
    c: Option<f64>,
) -> Result<(McResult, Vec<TailPoint>, Vec<MartingaleRow>)> {
    let mn = mean_weight_mn(cfg.tau_prime, cfg.n, cfg.delta0, cfg.delta1, cfg.m)?;
    let c = c.unwrap_or_else(|| azuma_constant(cfg.m, cfg.delta0, cfg.delta1));
    let null = DeltaProfile::constant(cfg.delta0);
    let dp = cfg.big_delta_prime();
    let outcomes = run_replicates(cfg.replicates, cfg.seed, cfg.threads, |r, rng| {
        let g = simulate_with(cfg.n, cfg.m, &null, rng)?;
        let w = arrival_weights(&g, cfg.delta0, cfg.delta1)?;
        let z = w[cfg.tau_prime + 1..].iter().copied().collect::<CompensatedSum>().value() / dp;
        Ok(MartingaleRow { replicate: r, z })
    });
    let (rows, failures) = partition(outcomes);
    let dev: Vec<f64> = rows.iter().map(|row| row.z - mn.value).collect();
    let points: Vec<TailPoint> = xs
        .iter()
        .map(|&x| {
            let hits = dev.iter().filter(|&&d| d >= x).count();
            let frequency = if dev.is_empty() { 0.0 } else { hits as f64 / dev.len() as f64 };
            let bound = (-c * dp * x * x).exp();
            TailPoint { x, frequency, bound, violated: frequency > bound }
        })
        .collect();
    let violations = points.iter().filter(|p| p.violated).count();
    let out = McResult::from_values(&dev, cfg.seed, failures)
        .with("m_n", mn.value)
        .with("c", c)
        .with("violations", violations as f64);
    Ok((out, points, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn log(n: usize, m: usize, rows: &[&[usize]]) -> AttachmentLog {
        AttachmentLog::from_rows(n, m, rows.iter().enumerate().map(|(j, r)| (j + 2, r.to_vec()))).unwrap()
    }

    #[test]
    fn worked_permuted_lr() {
        let g = log(4, 1, &[&[0], &[1], &[2]]);
        let ctx = ReductionContext::new(&g, 3, 2, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(ctx.bold.members, vec![3, 4]);
        assert_eq!(ctx.r, 1);
        assert_eq!(ctx.bold.weights.as_deref(), Some(&[2.0, 2.0][..]));
        assert!((permuted_lr(&ctx).unwrap() - 1.2).abs() < 1e-14);
    }

    #[test]
    fn permuted_lr_trivial_when_no_change() {
        let g = log(4, 1, &[&[0], &[1], &[2]]);
        let ctx = ReductionContext::new(&g, 4, 2, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(permuted_lr(&ctx).unwrap(), 1.0);
    }

    #[test]
    fn event_examples() {
        let g = log(4, 1, &[&[0], &[1], &[2]]);
        assert!(event_bn(&ReductionContext::new(&g, 3, 2, 1.0, 0.0, 1.0).unwrap()));
        let g = log(4, 1, &[&[0], &[1], &[2]]);
        let ctx = ReductionContext::new(&g, 3, 2, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(ctx.bn_threshold(), 0.0);
        let g2 = log(4, 1, &[&[0], &[1], &[3]]);
        assert!(!event_bn(&ReductionContext::new(&g2, 2, 1, 1.0, 0.0, 1.0).unwrap()));
        // huge alpha leaves only the inclusion clause
        let ctx = ReductionContext::new(&g2, 3, 2, 1e9, 0.0, 1.0).unwrap();
        assert!(ctx.bn_threshold() < 0.0);
        assert!(event_bn(&ctx));
    }

    #[test]
    fn event_with_tau_two() {
        // tau = 2 needs {3, 4} bold; tau' must stay below tau
        let g = log(4, 1, &[&[0], &[1], &[2]]);
        let ctx = ReductionContext::new(&g, 2, 1, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(ctx.bold.members, vec![3, 4]);
        assert!(event_bn(&ctx));
    }

    #[test]
    fn elementary_symmetric_small() {
        let w = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(log_elementary_symmetric(&w, 0), 0.0);
        assert!((log_elementary_symmetric(&w, 1) - 10f64.ln()).abs() < 1e-14);
        assert!((log_elementary_symmetric(&w, 2) - 35f64.ln()).abs() < 1e-14);
        assert!((log_elementary_symmetric(&w, 4) - 24f64.ln()).abs() < 1e-14);
        assert_eq!(log_elementary_symmetric(&w, 5), f64::NEG_INFINITY);
    }

    #[test]
    fn elementary_symmetric_survives_overflow() {
        let w = vec![1e6; 3000];
        let want = ln_binomial(3000, 1500) + 1500.0 * 1e6f64.ln();
        let got = log_elementary_symmetric(&w, 1500);
        assert!((got - want).abs() < 1e-8 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn kernel_fixes_non_bold_labels() {
        let g = log(4, 1, &[&[0], &[1], &[2]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..100 {
            let p = kernel_sample(&g, 2, &mut rng).unwrap();
            assert_eq!(&p[..3], &[0, 1, 2]);
            seen.insert(p);
        }
        assert_eq!(seen.len(), 2);
        let empty = log(4, 1, &[&[0], &[1], &[3]]);
        let p = kernel_sample(&empty, 3, &mut rng).unwrap();
        assert_eq!(p, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn preconditions_boundaries() {
        // alpha Delta'/tau' exactly 1/2 passes, Delta/Delta' exactly 1/4 passes
        assert!(second_moment_preconditions(12, 11, 8, 1.0).is_empty());
        assert_eq!(second_moment_preconditions(12, 11, 8, 1.01).len(), 1);
        assert_eq!(second_moment_preconditions(12, 10, 8, 1.0).len(), 1);
        assert_eq!(second_moment_preconditions(3, 2, 1, 0.1).len(), 3);
        assert!(!second_moment_preconditions(10, 5, 5, 0.1).is_empty());
    }

    #[test]
    fn rhs_arithmetic() {
        let e = contiguity_log_rhs(2.0, 2.0, 16.0, 84.0, 1, 1.0, 1.0);
        let parts = [4.0 * 2.0 * 2.0 * 16.0 / 84.0, 22.0 * 4.0 / 84.0, 2.0 / 48.0, 0.5 * 0.25f64.exp()];
        assert!((e - parts.iter().sum::<f64>()).abs() < 1e-12);
        assert!((e - 4.779).abs() < 5e-4);
        assert!((parts[0] - 3.0476).abs() < 1e-4 && (parts[3] - 0.6420).abs() < 1e-3);
    }

    #[test]
    fn integral_bound_dominates_quadrature() {
        for &beta in &[0.05, 0.2, 1.0, 5.0, 40.0] {
            // substitute x = e^y: int_0^inf exp(-beta y^2 + y) dy
            let h = 1e-3;
            let mut s = 0.0;
            let mut y = 0.0;
            while y < 200.0 {
                let f = |y: f64| (-beta * y * y + y).exp();
                s += h / 6.0 * (f(y) + 4.0 * f(y + h / 2.0) + f(y + h));
                y += h;
            }
            assert!(s <= integral_bound(beta), "beta = {beta}: {s} > {}", integral_bound(beta));
        }
    }

    #[test]
    fn negative_delta0_refused() {
        let cfg = ProbeConfig { n: 50, m: 1, delta0: -0.5, delta1: 1.0, tau: 48, tau_prime: 40, alpha: 1.0, replicates: 2, seed: 1, threads: 1 };
        assert_eq!(second_moment_probe(&cfg, 1.0, 1.0, Preconditions::Report).unwrap_err().kind(), "UnsupportedRegime");
        assert_eq!(event_bn_failure_probe(&cfg, 1.0).unwrap_err().kind(), "UnsupportedRegime");
    }

    #[test]
    fn equal_parameters_give_unit_y() {
        let cfg = ProbeConfig { n: 400, m: 1, delta0: 1.0, delta1: 1.0, tau: 398, tau_prime: 380, alpha: 1.0, replicates: 40, seed: 3, threads: 1 };
        let (res, rows) = second_moment_probe(&cfg, 1.0, 1.0, Preconditions::Enforce).unwrap();
        assert!(rows.iter().all(|r| r.log_y == 0.0));
        assert!((res.estimate - res.aux["p_bn"]).abs() < 1e-15);
        assert!(res.estimate <= 1.0);
    }

    #[test]
    fn martingale_trivial_cases() {
        let cfg = ProbeConfig { n: 200, m: 2, delta0: 0.5, delta1: 0.5, tau: 200, tau_prime: 100, alpha: 1.0, replicates: 10, seed: 4, threads: 1 };
        let (res, pts, _) = martingale_tail_probe(&cfg, &[0.0, 0.1], None).unwrap();
        assert!(res.estimate.abs() < 1e-12);
        assert_eq!(pts[0].bound, 1.0);
        assert!(pts.iter().all(|p| !p.violated));
    }
}
