//! Slow, direct reference implementations used to check the library.
#![allow(dead_code)]

use std::io::Write;

use pacp_core::graph::AttachmentLog;
use pacp_core::likelihood::log_lr;
use pacp_core::DeltaProfile;

/// Every support element for `(n, m)`. Rows are nondecreasing multisets, so
/// each labeled multigraph appears once.
pub fn enumerate_support(n: usize, m: usize) -> Vec<AttachmentLog> {
    fn rows_for(t: usize, m: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = vec![0usize; m];
        loop {
            out.push(cur.clone());
            // next nondecreasing sequence over 0..t
            let mut j = m;
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                if cur[j] + 1 < t {
                    let v = cur[j] + 1;
                    for x in &mut cur[j..] {
                        *x = v;
                    }
                    break;
                }
            }
        }
    }
    let mut logs: Vec<Vec<usize>> = vec![Vec::new()];
    for t in 2..=n {
        let choices = rows_for(t, m);
        let mut next = Vec::with_capacity(logs.len() * choices.len());
        for flat in &logs {
            for row in &choices {
                let mut f = flat.clone();
                f.extend_from_slice(row);
                next.push(f);
            }
        }
        logs = next;
    }
    logs.into_iter().map(|flat| AttachmentLog::from_flat(n, m, flat).unwrap()).collect()
}

fn distinct_orderings(row: &[usize]) -> Vec<Vec<usize>> {
    fn rec(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        let mut tried = Vec::new();
        for j in 0..rest.len() {
            if tried.contains(&rest[j]) {
                continue;
            }
            tried.push(rest[j]);
            let v = rest.remove(j);
            cur.push(v);
            rec(rest, cur, out);
            cur.pop();
            rest.insert(j, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut row.to_vec(), &mut Vec::new(), &mut out);
    out
}

/// Probability of the multigraph `g` by replaying the attachment rule edge by
/// edge and summing over the distinct orders of each row.
pub fn replay_probability(g: &AttachmentLog, profile: &DeltaProfile) -> f64 {
    let n = g.n();
    let m = g.m();
    let mut deg = vec![0f64; n + 1];
    deg[0] = m as f64;
    deg[1] = m as f64;
    let mut p = 1.0;
    for t in 2..=n {
        let delta = profile.delta_at(t);
        let mut row_p = 0.0;
        for order in distinct_orderings(g.row(t)) {
            let mut d = deg.clone();
            let mut q = 1.0;
            for &v in &order {
                let total: f64 = (0..t).map(|u| d[u] + delta).sum();
                q *= (d[v] + delta) / total;
                d[v] += 1.0;
            }
            row_p += q;
        }
        p *= row_p;
        for &v in g.row(t) {
            deg[v] += 1.0;
        }
        deg[t] = m as f64;
    }
    p
}

/// Bold set straight from the definition, quadratic time.
pub fn bold_brute(g: &AttachmentLog, tau_prime: usize) -> Vec<usize> {
    let n = g.n();
    let m = g.m();
    let row = |t: usize| -> Vec<usize> { if t == 1 { vec![0; m] } else { g.row(t).to_vec() } };
    let degree = |v: usize| -> usize {
        let inn: usize = (1..=n).map(|u| row(u).iter().filter(|&&w| w == v).count()).sum();
        inn + if v >= 1 { m } else { 0 }
    };
    (tau_prime + 1..=n)
        .filter(|&v| degree(v) == m)
        .filter(|&v| {
            row(v).iter().all(|&w| {
                (1..=n).filter(|&u| u != v && row(u).contains(&w)).all(|u| u <= tau_prime)
            })
        })
        .collect()
}

/// All permutations of `items`.
pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for j in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(j);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Average of `exp(log_lr)` over every relabeling of `bold`; `None` if some
/// relabeling leaves the support.
pub fn permuted_lr_brute(g: &AttachmentLog, bold: &[usize], tau: usize, delta0: f64, delta1: f64) -> Option<f64> {
    let n = g.n();
    let perms = permutations(bold);
    let mut sum = 0.0;
    for images in &perms {
        let mut perm: Vec<usize> = (0..=n).collect();
        for (&v, &w) in bold.iter().zip(images) {
            perm[v] = w;
        }
        let h = g.apply_permutation(&perm).ok()?;
        sum += log_lr(&h, tau, delta0, delta1).unwrap().exp();
    }
    Some(sum / perms.len() as f64)
}

/// `e_r` of integer weights in exact arithmetic.
pub fn elementary_symmetric_exact(w: &[u64], r: usize) -> u128 {
    let mut e = vec![0u128; r + 1];
    e[0] = 1;
    for &x in w {
        for j in (1..=r).rev() {
            e[j] += x as u128 * e[j - 1];
        }
    }
    e[r]
}

/// Asymptotic Kolmogorov p-value of a one-sample KS statistic `d` on `n`
/// points (Stephens' finite-sample correction).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k as i32 - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// KS statistic of `xs` against the CDF `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Writes a line to the real stderr, bypassing the test harness capture.
pub fn report(line: &str) {
    let mut e = std::io::stderr().lock();
    let _ = writeln!(e, "{line}");
}
