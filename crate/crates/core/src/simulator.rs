//! Sequential sampling of attachment logs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fenwick::DegreeTree;
use crate::graph::AttachmentLog;

/// The attachment shift as a function of arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaProfile {
    Constant { delta0: f64 },
    /// `delta0` for arrivals `t <= tau`, `delta1` afterwards.
    Step { delta0: f64, delta1: f64, tau: usize },
}

impl DeltaProfile {
    pub fn constant(delta0: f64) -> Self {
        DeltaProfile::Constant { delta0 }
    }

    pub fn step(delta0: f64, delta1: f64, tau: usize) -> Self {
        DeltaProfile::Step { delta0, delta1, tau }
    }

    /// Shift used by arrival `t`.
    #[inline]
    pub fn delta_at(&self, t: usize) -> f64 {
        match *self {
            DeltaProfile::Constant { delta0 } => delta0,
            DeltaProfile::Step { delta0, delta1, tau } => {
                if t <= tau {
                    delta0
                } else {
                    delta1
                }
            }
        }
    }

    pub fn delta0(&self) -> f64 {
        match *self {
            DeltaProfile::Constant { delta0 } | DeltaProfile::Step { delta0, .. } => delta0,
        }
    }

    /// Checks that every shift exceeds `-m`.
    pub fn validate(&self, m: usize) -> Result<()> {
        let check = |d: f64, name: &str| {
            if d.is_finite() && d > -(m as f64) {
                Ok(())
            } else {
                Err(Error::DomainError(format!("{name} = {d} must be finite and > -{m}")))
            }
        };
        match *self {
            DeltaProfile::Constant { delta0 } => check(delta0, "delta0"),
            DeltaProfile::Step { delta0, delta1, .. } => {
                check(delta0, "delta0")?;
                check(delta1, "delta1")
            }
        }
    }
}

/// Growing graph together with the prefix-sum structure used for sampling.
#[derive(Debug, Clone)]
pub struct SamplerState {
    m: usize,
    /// Next arrival to be processed.
    t: usize,
    /// Edges of arrival `t` already placed.
    placed: usize,
    degrees: Vec<u64>,
    tree: DegreeTree,
    targets: Vec<usize>,
}

impl SamplerState {
    /// Base graph (vertices 0 and 1) with room for vertices up to `capacity`.
    pub fn new(m: usize, capacity: usize) -> Result<Self> {
        if m == 0 || capacity == 0 {
            return Err(Error::DomainError("need m >= 1 and capacity >= 1".into()));
        }
        let mut tree = DegreeTree::with_capacity(capacity + 1);
        tree.add(0, m as u64);
        tree.add(1, m as u64);
        let mut degrees = vec![0u64; capacity + 1];
        degrees[0] = m as u64;
        degrees[1] = m as u64;
        Ok(Self {
            m,
            t: 2,
            placed: 0,
            degrees,
            tree,
            targets: Vec::with_capacity(capacity.saturating_sub(1) * m),
        })
    }

    /// Arrival currently being sampled and the 1-based index of its next edge.
    pub fn position(&self) -> (usize, usize) {
        (self.t, self.placed + 1)
    }

    /// Current degree of `v`.
    pub fn degree(&self, v: usize) -> u64 {
        self.degrees[v]
    }

    /// Total weight `(2m + delta) t - 2m + i - 1` at the current sub-step.
    pub fn total_weight(&self, delta: f64) -> f64 {
        let (t, i) = self.position();
        crate::likelihood::s_value(t, i, delta, self.m)
    }

    /// Exact probability that the next edge lands on `v`.
    pub fn probability(&self, v: usize, delta: f64) -> f64 {
        if v >= self.t {
            return 0.0;
        }
        (self.degrees[v] as f64 + delta) / self.total_weight(delta)
    }

    /// Draws the target of the next edge without recording it.
    pub fn sample_attachment<R: Rng + ?Sized>(&self, delta: f64, rng: &mut R) -> usize {
        let total = self.total_weight(delta);
        let u = rng.random::<f64>() * total;
        self.tree.search(u, delta, self.t)
    }

    /// Records an edge from the current arrival to `v`.
    pub fn attach(&mut self, v: usize) {
        debug_assert!(v < self.t);
        self.degrees[v] += 1;
        self.tree.add(v, 1);
        self.targets.push(v);
        self.placed += 1;
        if self.placed == self.m {
            let t = self.t;
            if t < self.degrees.len() {
                self.degrees[t] = self.m as u64;
                self.tree.add(t, self.m as u64);
            }
            self.t += 1;
            self.placed = 0;
        }
    }

    /// Consumes the state, returning the log of completed arrivals.
    pub fn into_log(self) -> AttachmentLog {
        let n = self.t - 1;
        let mut targets = self.targets;
        targets.truncate((n - 1) * self.m);
        AttachmentLog::from_flat_unchecked(n, self.m, targets)
    }
}

/// Simulates `G_n` from an arbitrary random source.
pub fn simulate_with<R: Rng + ?Sized>(n: usize, m: usize, profile: &DeltaProfile, rng: &mut R) -> Result<AttachmentLog> {
    if n < 1 || m < 1 {
        return Err(Error::DomainError(format!("need n >= 1 and m >= 1, got n = {n}, m = {m}")));
    }
    profile.validate(m)?;
    let mut state = SamplerState::new(m, n)?;
    for t in 2..=n {
        let delta = profile.delta_at(t);
        for _ in 0..m {
            let v = state.sample_attachment(delta, rng);
            state.attach(v);
        }
    }
    Ok(state.into_log())
}

/// Simulates `G_n` with a generator seeded from `seed`.
pub fn simulate(n: usize, m: usize, profile: &DeltaProfile, seed: u64) -> Result<AttachmentLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with(n, m, profile, &mut rng)
}
