//! The random graph driven by a loop soup and its coalescent partition.
//!
//! Every loop joins all the vertices it visits, so one arrival can merge
//! many components at once. [`ClusterState`] is a union-find with a
//! component-size histogram kept in step with every merge.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{out_of_range, Error, Result};
use crate::loop_measure::{Loop, LoopSoup, ModelParams, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MergeEvent {
    pub time: f64,
    pub loop_length: usize,
    /// Number of distinct components joined by the loop.
    pub roots_merged: usize,
}

/// Union-find over `1..=n` with union by size and path compression.
#[derive(Debug, Clone)]
pub struct ClusterState {
    parent: Vec<u32>,
    size: Vec<u32>,
    hist: BTreeMap<u32, u64>,
    n_components: u32,
    roots: Vec<u32>,
}

impl ClusterState {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(out_of_range("n", 0.0, "[1, ∞)"));
        }
        Ok(Self {
            parent: (0..n).collect(),
            size: vec![1; n as usize],
            hist: BTreeMap::from([(1, u64::from(n))]),
            n_components: n,
            roots: Vec::new(),
        })
    }

    pub fn n(&self) -> u32 {
        self.parent.len() as u32
    }

    fn root(&mut self, i: u32) -> u32 {
        let mut r = i;
        while self.parent[r as usize] != r {
            r = self.parent[r as usize];
        }
        let mut c = i;
        while self.parent[c as usize] != r {
            let next = self.parent[c as usize];
            self.parent[c as usize] = r;
            c = next;
        }
        r
    }

    fn check(&self, v: Vertex) -> Result<()> {
        if v == 0 || v > self.n() {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n() })
        } else {
            Ok(())
        }
    }

    /// Representative vertex of the component of `v`.
    pub fn find(&mut self, v: Vertex) -> Result<Vertex> {
        self.check(v)?;
        Ok(self.root(v - 1) + 1)
    }

    pub fn component_size(&mut self, v: Vertex) -> Result<u32> {
        self.check(v)?;
        let r = self.root(v - 1);
        Ok(self.size[r as usize])
    }

    fn hist_remove(&mut self, s: u32) {
        let c = self.hist.get_mut(&s).expect("size present in histogram");
        *c -= 1;
        if *c == 0 {
            self.hist.remove(&s);
        }
    }

    /// Merges every component visited by `lp`.
    pub fn apply_loop(&mut self, lp: &Loop, time: f64) -> Result<MergeEvent> {
        for &v in lp.vertices() {
            self.check(v)?;
        }
        let mut roots = std::mem::take(&mut self.roots);
        roots.clear();
        for &v in lp.vertices() {
            let r = self.root(v - 1);
            roots.push(r);
        }
        roots.sort_unstable();
        roots.dedup();
        let merged = roots.len();
        if merged > 1 {
            let big = *roots
                .iter()
                .max_by_key(|&&r| (self.size[r as usize], std::cmp::Reverse(r)))
                .expect("non-empty");
            let mut total = 0u32;
            for &r in &roots {
                let s = self.size[r as usize];
                self.hist_remove(s);
                total += s;
                self.parent[r as usize] = big;
            }
            self.size[big as usize] = total;
            *self.hist.entry(total).or_insert(0) += 1;
            self.n_components -= merged as u32 - 1;
        }
        self.roots = roots;
        Ok(MergeEvent {
            time,
            loop_length: lp.len(),
            roots_merged: merged,
        })
    }

    /// Component sizes and their counts.
    pub fn hist(&self) -> &BTreeMap<u32, u64> {
        &self.hist
    }

    /// The two largest component sizes (second is 0 with a single component).
    pub fn top2(&self) -> (u32, u32) {
        let mut it = self.hist.iter().rev();
        match it.next() {
            None => (0, 0),
            Some((&k, &c)) if c >= 2 => (k, k),
            Some((&k, _)) => (k, it.next().map_or(0, |(&k2, _)| k2)),
        }
    }

    pub fn n_components(&self) -> u32 {
        self.n_components
    }

    /// Number of components of size `k` divided by `n`.
    pub fn rho_hat(&self, k: u32) -> f64 {
        self.hist.get(&k).copied().unwrap_or(0) as f64 / f64::from(self.n())
    }

    /// `Z(k)`: number of vertices in components of size at least `k`.
    pub fn z_count(&self, k: u32) -> u64 {
        self.hist.range(k..).map(|(&s, &c)| u64::from(s) * c).sum()
    }

    /// Vertices in the component of `x`, sorted.
    pub fn component_of(&mut self, x: Vertex) -> Result<Vec<Vertex>> {
        self.check(x)?;
        let r = self.root(x - 1);
        Ok((0..self.n()).filter(|&i| self.root(i) == r).map(|i| i + 1).collect())
    }

    /// All components, each sorted, ordered by smallest element.
    pub fn partition(&mut self) -> Vec<Vec<Vertex>> {
        let mut by_root: BTreeMap<u32, Vec<Vertex>> = BTreeMap::new();
        let mut order = Vec::new();
        for i in 0..self.n() {
            let r = self.root(i);
            let e = by_root.entry(r).or_insert_with(|| {
                order.push(r);
                Vec::new()
            });
            e.push(i + 1);
        }
        order.into_iter().map(|r| by_root.remove(&r).expect("root")).collect()
    }

    pub fn snapshot(&self, time: f64) -> Snapshot {
        Snapshot {
            time,
            hist: self.hist.iter().map(|(&k, &c)| (k, c)).collect(),
            top2: self.top2(),
            n_components: self.n_components,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    /// `(size, count)` pairs in increasing size.
    pub hist: Vec<(u32, u64)>,
    pub top2: (u32, u32),
    pub n_components: u32,
}

/// Snapshots of the cluster state after all loops with time `≤ c`, for each checkpoint `c`.
pub fn evolve(soup: &LoopSoup, checkpoints: &[f64]) -> Result<Vec<Snapshot>> {
    if checkpoints.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::BadCheckpoints {
            horizon: soup.horizon(),
        });
    }
    if checkpoints.iter().any(|&c| !(c >= 0.0 && c <= soup.horizon())) {
        return Err(Error::BadCheckpoints {
            horizon: soup.horizon(),
        });
    }
    let mut state = ClusterState::new(soup.params().n())?;
    let mut loops = soup.loops().iter().peekable();
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        while let Some(tl) = loops.next_if(|tl| tl.time <= c) {
            state.apply_loop(&tl.lp, tl.time)?;
        }
        out.push(state.snapshot(c));
    }
    Ok(out)
}

/// Cluster state after every loop of `soup` with time `≤ t`.
pub fn state_at(soup: &LoopSoup, t: f64) -> Result<ClusterState> {
    let mut state = ClusterState::new(soup.params().n())?;
    for tl in soup.up_to(t) {
        state.apply_loop(&tl.lp, tl.time)?;
    }
    Ok(state)
}

/// CSV rows `t,k,count`.
pub fn write_hist_csv<W: Write>(mut w: W, snapshots: &[Snapshot]) -> Result<()> {
    writeln!(w, "t,k,count")?;
    for s in snapshots {
        for &(k, c) in &s.hist {
            writeln!(w, "{},{},{}", s.time, k, c)?;
        }
    }
    Ok(())
}

/// CSV rows `t,c1,c2,n_components`.
pub fn write_top2_csv<W: Write>(mut w: W, snapshots: &[Snapshot]) -> Result<()> {
    writeln!(w, "t,c1,c2,n_components")?;
    for s in snapshots {
        writeln!(w, "{},{},{},{}", s.time, s.top2.0, s.top2.1, s.n_components)?;
    }
    Ok(())
}

/// Probability that the partition at time `t` is finer than a partition
/// with the given block sizes: `(ε/(ε+1))^t ∏ (1 - |B|/(n(ε+1)))^{-t}`.
pub fn semigroup_prob(params: &ModelParams, t: f64, blocks: &[u32]) -> Result<f64> {
    let total: u64 = blocks.iter().map(|&b| u64::from(b)).sum();
    if blocks.contains(&0) || total != u64::from(params.n()) {
        return Err(Error::NotAPartition {
            got: total,
            n: params.n(),
        });
    }
    if !(t >= 0.0) {
        return Err(out_of_range("t", t, "[0, ∞)"));
    }
    let x = params.step_probability();
    let log: f64 = blocks.iter().map(|&b| -(-f64::from(b) * x).ln_1p()).sum::<f64>()
        + params.kill_probability().ln();
    Ok((t * log).exp().min(1.0))
}

/// Relative tail tolerance of [`merge_rate`].
pub const MERGE_RATE_TOL: f64 = 1e-12;
const MERGE_RATE_MAX_TERMS: usize = 10_000;

/// Rate at which the blocks indexed by `j` merge into one (and no other
/// block joins them).
///
/// Sums `Σ_{k ≥ L} (x^k / k) Q(k)` with `x = 1/(n(ε+1))`, where `Q(k)` is
/// the multinomially weighted sum over compositions of `k` into `L` positive
/// parts of `∏ |B_{j_u}|^{k_u}`.
pub fn merge_rate(params: &ModelParams, blocks: &[u32], j: &[usize]) -> Result<f64> {
    let sizes = merge_sizes(params, blocks, j)?;
    let s: f64 = sizes.iter().sum::<f64>() * params.step_probability();
    let l = sizes.len();
    // first term lower-bounds the rate: Q(L) x^L / L = (L-1)! ∏ (b x)
    let first: f64 = ln_factorial(l - 1) + sizes.iter().map(|b| (b * params.step_probability()).ln()).sum::<f64>();
    let mut k = l;
    loop {
        let ln_tail = (k as f64 + 1.0) * s.ln() - (k as f64 + 1.0).ln() - (-s).ln_1p();
        if ln_tail <= MERGE_RATE_TOL.ln() + first {
            break;
        }
        k += 1;
        if k > MERGE_RATE_MAX_TERMS {
            return Err(Error::Truncation { terms: k });
        }
    }
    Ok(merge_rate_partial(params, &sizes, k))
}

fn merge_sizes(params: &ModelParams, blocks: &[u32], j: &[usize]) -> Result<Vec<f64>> {
    if j.len() < 2 {
        return Err(out_of_range("|J|", j.len() as f64, "[2, number of blocks]"));
    }
    let total: u64 = blocks.iter().map(|&b| u64::from(b)).sum();
    if blocks.contains(&0) || total > u64::from(params.n()) {
        return Err(Error::NotAPartition {
            got: total,
            n: params.n(),
        });
    }
    let mut seen = vec![false; blocks.len()];
    let mut sizes = Vec::with_capacity(j.len());
    for &i in j {
        if i >= blocks.len() || seen[i] {
            return Err(out_of_range("block index", i as f64, format!("distinct in [0, {})", blocks.len())));
        }
        seen[i] = true;
        sizes.push(f64::from(blocks[i]));
    }
    Ok(sizes)
}

fn ln_factorial(n: usize) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

/// Series for the merge rate summed over loop lengths `L..=kmax`.
pub(crate) fn merge_rate_partial(params: &ModelParams, sizes: &[f64], kmax: usize) -> f64 {
    let x = params.step_probability();
    let lf: Vec<f64> = (0..=kmax).map(ln_factorial).collect();
    // d[k] = Σ over compositions of k into the blocks seen so far (each part ≥ 1)
    //        of multinomial(k; k_1, …) ∏ (b_u x)^{k_u}
    let mut d = vec![0.0; kmax + 1];
    d[0] = 1.0;
    for &b in sizes {
        let lbx = (b * x).ln();
        let mut next = vec![0.0; kmax + 1];
        for (k, slot) in next.iter_mut().enumerate().skip(1) {
            let mut acc = 0.0;
            for m in 1..=k {
                if d[k - m] == 0.0 {
                    continue;
                }
                acc += (lf[k] - lf[m] - lf[k - m] + m as f64 * lbx).exp() * d[k - m];
            }
            *slot = acc;
        }
        d = next;
    }
    d.iter()
        .enumerate()
        .skip(sizes.len().max(2))
        .map(|(k, &q)| q / k as f64)
        .sum()
}
