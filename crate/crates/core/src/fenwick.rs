//! Prefix-sum tree over integer vertex degrees.
//!
//! The sampling weight of vertex `v` is `deg[v] + shift`, where `shift` is the
//! current affine parameter. Degrees are stored exactly as integers and the
//! shift is applied on the fly from the number of live vertices inside each
//! tree node, so the total weight never drifts from its closed form.

#[derive(Debug, Clone)]
pub(crate) struct DegreeTree {
    // 1-based Fenwick array; slot `j` holds vertex `j - 1`.
    tree: Vec<u64>,
    top_bit: usize,
}

impl DegreeTree {
    pub fn with_capacity(vertices: usize) -> Self {
        let len = vertices.max(1);
        let mut top_bit = 1;
        while top_bit * 2 <= len {
            top_bit *= 2;
        }
        Self { tree: vec![0; len + 1], top_bit }
    }

    pub fn add(&mut self, vertex: usize, amount: u64) {
        let mut j = vertex + 1;
        while j < self.tree.len() {
            self.tree[j] += amount;
            j += j & j.wrapping_neg();
        }
    }

    /// Sum of degrees of vertices `0..count`.
    #[cfg(test)]
    pub fn prefix(&self, count: usize) -> u64 {
        let mut j = count;
        let mut s = 0;
        while j > 0 {
            s += self.tree[j];
            j &= j - 1;
        }
        s
    }

    /// Smallest vertex `v < live` such that the cumulative weight of vertices
    /// `0..=v` exceeds `target`, where vertex weights are `deg + shift` and
    /// only vertices below `live` carry the shift.
    pub fn search(&self, target: f64, shift: f64, live: usize) -> usize {
        let mut pos = 0usize;
        let mut rem = target;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() {
                // node `next` covers slots pos+1..=next, i.e. vertices pos..next
                let live_here = next.min(live).saturating_sub(pos);
                let w = self.tree[next] as f64 + shift * live_here as f64;
                if w <= rem {
                    rem -= w;
                    pos = next;
                }
            }
            step >>= 1;
        }
        pos.min(live.saturating_sub(1))
    }
}
