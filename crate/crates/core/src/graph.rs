//! Attachment logs, degree statistics, bold vertices and relabelling.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// A labeled preferential-attachment multigraph on vertices `0..=n`.
///
/// Vertex 1 sends its `m` edges to vertex 0 (implicit). Every later vertex
/// `t in 2..=n` sends `m` edges to targets in `0..t`, stored in attachment
/// order. Multiple edges to the same target are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttachmentLog {
    n: usize,
    m: usize,
    // row for arrival t occupies targets[(t-2)*m .. (t-1)*m]
    targets: Vec<usize>,
}

impl AttachmentLog {
    /// The two-vertex graph with `m` parallel edges `1 -> 0`.
    pub fn base(m: usize) -> Result<Self> {
        Self::from_flat(1, m, Vec::new())
    }

    /// Builds a log from explicit `(t, targets)` rows, which must cover
    /// `t = 2..=n` in increasing order.
    pub fn from_rows<I, R>(n: usize, m: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, R)>,
        R: AsRef<[usize]>,
    {
        check_header(n, m)?;
        let mut targets = Vec::with_capacity(n.saturating_sub(1) * m);
        let mut expected = 2;
        for (t, row) in rows {
            if t < expected {
                return Err(Error::Parse(format!("arrival {t} is duplicated or out of order")));
            }
            if t > n {
                return Err(Error::Parse(format!("arrival {t} exceeds n = {n}")));
            }
            if t > expected {
                return Err(Error::MissingRow { t: expected });
            }
            push_row(&mut targets, t, m, row.as_ref())?;
            expected += 1;
        }
        if expected <= n {
            return Err(Error::MissingRow { t: expected });
        }
        Ok(Self { n, m, targets })
    }

    /// Builds a log from the flat concatenation of rows `2..=n`.
    pub fn from_flat(n: usize, m: usize, targets: Vec<usize>) -> Result<Self> {
        check_header(n, m)?;
        let rows = n.saturating_sub(1);
        if targets.len() != rows * m {
            let full = targets.len() / m;
            let t = full + 2;
            return if targets.len() % m != 0 {
                Err(Error::WrongOutDegree { t, expected: m, found: targets.len() % m })
            } else if full < rows {
                Err(Error::MissingRow { t })
            } else {
                Err(Error::Parse(format!("{} rows given for n = {n}", full)))
            };
        }
        for (j, &v) in targets.iter().enumerate() {
            let t = j / m + 2;
            if v >= t {
                return Err(Error::TargetTooLarge { t, target: v });
            }
        }
        Ok(Self { n, m, targets })
    }

    pub(crate) fn from_flat_unchecked(n: usize, m: usize, targets: Vec<usize>) -> Self {
        debug_assert_eq!(targets.len(), n.saturating_sub(1) * m);
        Self { n, m, targets }
    }

    /// Largest vertex label.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges per arrival.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Targets of arrival `t` (for `t = 1` this is `m` copies of vertex 0,
    /// which are not stored and therefore not returned here).
    pub fn row(&self, t: usize) -> &[usize] {
        assert!(t >= 2 && t <= self.n, "row {t} out of range 2..={}", self.n);
        &self.targets[(t - 2) * self.m..(t - 1) * self.m]
    }

    /// Iterator over `(t, targets)` for `t = 2..=n`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.targets.chunks(self.m.max(1)).enumerate().map(|(j, r)| (j + 2, r))
    }

    /// Flat targets of arrivals `2..=n`.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Degrees (in + out) of vertices `0..=t` in the graph after arrival `t`.
    pub fn degrees_upto(&self, t: usize) -> Vec<u64> {
        assert!(t >= 1 && t <= self.n);
        let m = self.m as u64;
        let mut d = vec![m; t + 1];
        for &v in &self.targets[..(t - 1) * self.m] {
            d[v] += 1;
        }
        d
    }

    /// Final degrees of vertices `0..=n`.
    pub fn degrees(&self) -> Vec<u64> {
        self.degrees_upto(self.n)
    }

    /// In-degrees of vertices `0..=n`.
    pub fn in_degrees(&self) -> Vec<u64> {
        let mut d = vec![0u64; self.n + 1];
        d[0] = self.m as u64;
        for &v in &self.targets {
            d[v] += 1;
        }
        d
    }

    /// Degree of each attachment target just before the edge is added,
    /// aligned with [`targets`](Self::targets). Obtained by replaying the log.
    pub fn attachment_degrees(&self) -> Vec<u64> {
        let m = self.m as u64;
        let mut d = vec![m; self.n + 1];
        let mut out = Vec::with_capacity(self.targets.len());
        for &v in &self.targets {
            out.push(d[v]);
            d[v] += 1;
        }
        out
    }

    /// Sufficient statistics `N_{>k}` of the graph after arrival `upto`,
    /// optionally with in-degrees split at `split_at`.
    pub fn degree_tail_counts(&self, upto: usize, split_at: Option<usize>) -> Result<DegreeTailCounts> {
        if upto < 1 || upto > self.n {
            return Err(Error::DomainError(format!("prefix time {upto} outside 1..={}", self.n)));
        }
        if let Some(tau) = split_at {
            if tau > upto {
                return Err(Error::DomainError(format!("split time {tau} exceeds prefix time {upto}")));
            }
        }
        let deg = self.degrees_upto(upto);
        let mut counts = DegreeTailCounts::from_degrees(self.n, self.m, &deg);
        counts.upto = upto;
        if let Some(tau) = split_at {
            let mut pre = vec![0u64; upto + 1];
            let mut post = vec![0u64; upto + 1];
            pre[0] = self.m as u64;
            for (t, row) in self.rows().take_while(|(t, _)| *t <= upto) {
                let h = if t <= tau { &mut pre } else { &mut post };
                for &v in row {
                    h[v] += 1;
                }
            }
            counts.split = Some(SplitInDegrees { tau, pre, post });
        }
        Ok(counts)
    }

    /// Bold vertices for the cutoff `tau_prime`: vertices `v > tau_prime` of
    /// degree `m` such that, for every target `w` of `v`, every other vertex
    /// pointing to `w` is `<= tau_prime`.
    pub fn bold_vertices(&self, tau_prime: usize) -> Result<BoldSet> {
        if tau_prime >= self.n {
            return Err(Error::DomainError(format!("cutoff {tau_prime} must be below n = {}", self.n)));
        }
        const NONE: usize = usize::MAX;
        let n = self.n;
        let m = self.m;
        let mut indeg = vec![0u64; n + 1];
        // two largest distinct labels pointing to each vertex
        let mut top = vec![(NONE, NONE); n + 1];
        let note = |w: usize, p: usize, top: &mut Vec<(usize, usize)>| {
            let (a, b) = top[w];
            if a == p || b == p {
                return;
            }
            if a == NONE || p > a {
                top[w] = (p, a);
            } else if b == NONE || p > b {
                top[w] = (a, p);
            }
        };
        indeg[0] = m as u64;
        note(0, 1, &mut top);
        for (t, row) in self.rows() {
            for &w in row {
                indeg[w] += 1;
                note(w, t, &mut top);
            }
        }
        let mut members = Vec::new();
        for v in tau_prime + 1..=n {
            if indeg[v] != 0 {
                continue;
            }
            let children: &[usize] = if v == 1 { &[0] } else { self.row(v) };
            let unique_late_parent = children.iter().all(|&w| {
                let (a, b) = top[w];
                let other = if a == v { b } else { a };
                other == NONE || other <= tau_prime
            });
            if unique_late_parent {
                members.push(v);
            }
        }
        Ok(BoldSet { tau_prime, members, weights: None })
    }

    /// Relabels vertices: every edge `a -> b` becomes `perm[a] -> perm[b]`.
    pub fn apply_permutation(&self, perm: &[usize]) -> Result<AttachmentLog> {
        let n = self.n;
        let m = self.m;
        if perm.len() != n + 1 {
            return Err(Error::DomainError(format!("permutation has length {}, expected {}", perm.len(), n + 1)));
        }
        let mut seen = vec![false; n + 1];
        for &p in perm {
            if p > n || seen[p] {
                return Err(Error::DomainError("not a permutation of 0..=n".into()));
            }
            seen[p] = true;
        }
        let base = vec![0usize; m];
        let mut targets = vec![0usize; self.targets.len()];
        for t in 1..=n {
            let row = if t == 1 { &base[..] } else { self.row(t) };
            let nt = perm[t];
            for (i, &w) in row.iter().enumerate() {
                let nw = perm[w];
                if nw >= nt {
                    return Err(Error::SupportViolation { from: nt, to: nw });
                }
                if nt >= 2 {
                    targets[(nt - 2) * m + i] = nw;
                }
            }
        }
        Ok(Self { n, m, targets })
    }

    /// The induced subgraph on vertices `0..=t`.
    pub fn prefix(&self, t: usize) -> Result<AttachmentLog> {
        if t < 1 || t > self.n {
            return Err(Error::DomainError(format!("prefix time {t} outside 1..={}", self.n)));
        }
        Ok(Self { n: t, m: self.m, targets: self.targets[..(t - 1) * self.m].to_vec() })
    }

    /// Serializes to the PALOG v1 text format.
    pub fn to_palog(&self) -> String {
        let mut s = String::with_capacity(16 + self.targets.len() * 8);
        let _ = writeln!(s, "PALOG v1 n={} m={}", self.n, self.m);
        for (t, row) in self.rows() {
            let _ = write!(s, "{t}");
            for v in row {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s
    }

    /// Parses the PALOG v1 text format.
    pub fn parse_palog(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let (n, m) = parse_header(header)?;
        let rows = lines.map(|line| {
            let mut it = line.split_whitespace();
            let t = parse_usize(it.next().unwrap_or(""), "arrival index")?;
            let row = it.map(|x| parse_usize(x, "target")).collect::<Result<Vec<_>>>()?;
            Ok((t, row))
        });
        let rows = rows.collect::<Result<Vec<_>>>()?;
        Self::from_rows(n, m, rows)
    }
}

impl std::fmt::Display for AttachmentLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_palog())
    }
}

impl std::str::FromStr for AttachmentLog {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse_palog(s)
    }
}

fn check_header(n: usize, m: usize) -> Result<()> {
    if n < 1 || m < 1 {
        return Err(Error::DomainError(format!("need n >= 1 and m >= 1, got n = {n}, m = {m}")));
    }
    Ok(())
}

fn push_row(targets: &mut Vec<usize>, t: usize, m: usize, row: &[usize]) -> Result<()> {
    if row.len() != m {
        return Err(Error::WrongOutDegree { t, expected: m, found: row.len() });
    }
    if let Some(&v) = row.iter().find(|&&v| v >= t) {
        return Err(Error::TargetTooLarge { t, target: v });
    }
    targets.extend_from_slice(row);
    Ok(())
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("bad {what} {s:?}")))
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    if it.next() != Some("PALOG") || it.next() != Some("v1") {
        return Err(Error::Parse(format!("bad header {line:?}")));
    }
    let mut n = None;
    let mut m = None;
    for kv in it {
        match kv.split_once('=') {
            Some(("n", v)) => n = Some(parse_usize(v, "n")?),
            Some(("m", v)) => m = Some(parse_usize(v, "m")?),
            _ => return Err(Error::Parse(format!("bad header field {kv:?}"))),
        }
    }
    match (n, m) {
        (Some(n), Some(m)) => Ok((n, m)),
        _ => Err(Error::Parse(format!("header must declare n and m: {line:?}"))),
    }
}

/// In-degrees split by the arrival time of the edge source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitInDegrees {
    pub tau: usize,
    /// In-degree received from sources `<= tau` (including vertex 1).
    pub pre: Vec<u64>,
    /// In-degree received from sources `> tau`.
    pub post: Vec<u64>,
}

/// `N_{>k}` = number of vertices of degree strictly greater than `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTailCounts {
    pub n: usize,
    pub m: usize,
    /// Prefix time the counts refer to.
    pub upto: usize,
    // tail[j] = N_{>m+j}; zero beyond the end
    tail: Vec<u64>,
    pub split: Option<SplitInDegrees>,
}

impl DegreeTailCounts {
    pub(crate) fn from_degrees(n: usize, m: usize, degrees: &[u64]) -> Self {
        let max = degrees.iter().copied().max().unwrap_or(m as u64) as usize;
        let len = max.saturating_sub(m);
        let mut hist = vec![0u64; len + 1];
        for &d in degrees {
            hist[d as usize - m] += 1;
        }
        // N_{>m+j} = sum of hist above j
        let mut tail = vec![0u64; len];
        let mut acc = 0;
        for j in (0..len).rev() {
            acc += hist[j + 1];
            tail[j] = acc;
        }
        Self { n, m, upto: degrees.len().saturating_sub(1), tail, split: None }
    }

    /// `N_{>k}` (zero for `k` at or above the maximum degree).
    pub fn get(&self, k: usize) -> u64 {
        assert!(k >= self.m, "k = {k} below m = {}", self.m);
        self.tail.get(k - self.m).copied().unwrap_or(0)
    }

    /// Nonzero `(k, N_{>k})` pairs in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.tail.iter().enumerate().map(move |(j, &c)| (self.m + j, c))
    }

    /// Largest `k` with a nonzero count, if any.
    pub fn max_k(&self) -> Option<usize> {
        if self.tail.is_empty() {
            None
        } else {
            Some(self.m + self.tail.len() - 1)
        }
    }

    /// `sum_k N_{>k}`, the excess degree over the minimum.
    pub fn excess(&self) -> u64 {
        self.tail.iter().sum()
    }
}

/// Bold vertices for a cutoff, with optional attachment weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BoldSet {
    pub tau_prime: usize,
    /// Sorted member labels.
    pub members: Vec<usize>,
    /// Weight of each member, aligned with `members`, once bound.
    pub weights: Option<Vec<f64>>,
}

impl BoldSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    /// Attaches `W_k = prod_i (D_{k,i} + delta1) / (D_{k,i} + delta0)` to each
    /// member, with `D_{k,i}` the target degree just before the edge.
    pub fn bind_weights(&mut self, g: &AttachmentLog, delta0: f64, delta1: f64) -> Result<()> {
        let w = arrival_weights(g, delta0, delta1)?;
        self.weights = Some(self.members.iter().map(|&k| w[k]).collect());
        Ok(())
    }
}

/// `W_t` for every arrival `t` (index 0 unused and 1 for the base step).
pub fn arrival_weights(g: &AttachmentLog, delta0: f64, delta1: f64) -> Result<Vec<f64>> {
    let m = g.m();
    let ad = g.attachment_degrees();
    let mut w = vec![1.0; g.n() + 1];
    // the base step is deterministic and keeps weight 1
    for (j, &d) in ad.iter().enumerate() {
        let t = j / m + 2;
        let den = d as f64 + delta0;
        if den <= 0.0 {
            return Err(Error::UndefinedWeight { t });
        }
        w[t] *= (d as f64 + delta1) / den;
    }
    Ok(w)
}
