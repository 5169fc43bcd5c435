//! Component exploration and its dominating Galton-Watson walk.
//!
//! Starting from `x`, the exploration keeps a set of active vertices. At
//! step `k` it explores the smallest active vertex `x_k`: every vertex not
//! yet seen that shares with `x_k` a loop avoiding the explored set
//! `H_{k-1}` becomes active. `ξ_k` counts these new vertices and the
//! exploration stops at `T = min{k : ξ_1 + … + ξ_k ≤ k - 1}`, the size of
//! the component of `x`.

use std::collections::BTreeSet;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loop_measure::{
    beta_vertex, mu_hit_set_and_vertex, poisson_count, through_vertex_length_mass, LoopSoup,
    ModelParams, SeriesSampler, TimedLoop, Vertex,
};
use crate::rng::{self, AUX_STREAM_OFFSET};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplorationTrace {
    /// Explored vertices `x_1, x_2, …`.
    pub order: Vec<Vertex>,
    /// `ξ_k`: newly activated vertices at step `k`.
    pub xi: Vec<u64>,
    /// `|A_k|` after step `k`.
    pub active_sizes: Vec<u64>,
    /// `ζ¹_k`: `Σ (|ℓ| - 1)` over loops through `x_k` avoiding `H_{k-1}`.
    pub zeta1: Vec<u64>,
    /// `ζ²_k`: `Σ (|ℓ| - 1)` over loops through `x_k` meeting `H_{k-1}`.
    pub zeta2: Vec<u64>,
    /// Stopping step `T`, or the number of steps taken when truncated.
    pub t_stop: u64,
    /// Vertices found so far, sorted; the whole component when `complete`.
    pub component: Vec<Vertex>,
    /// False when a step limit ended the exploration early.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledGWTrace {
    pub zeta1: Vec<u64>,
    /// Real `ζ²_k` along the exploration, for comparison.
    pub zeta2: Vec<u64>,
    /// Auxiliary draws with the law of `ζ²_k`, one per exploration step.
    pub zeta2_bar: Vec<u64>,
    /// `ζ̄_k`: `ζ¹_k + ζ̄²_k` while the component lasts, then fresh draws of
    /// the full offspring law.
    pub zeta_bar: Vec<u64>,
    /// Stopping step of the walk driven by `ζ̄`; a lower bound if censored.
    pub t_bar: u64,
    pub censored: bool,
    /// `|C(x)| = T`.
    pub component_size: u64,
}

/// Loops of a soup up to time `t`, indexed by the vertices they visit.
pub struct Explorer<'a> {
    params: ModelParams,
    t: f64,
    loops: &'a [TimedLoop],
    index: Vec<Vec<u32>>,
}

const NEUTRAL: u8 = 0;
const ACTIVE: u8 = 1;
const EXPLORED: u8 = 2;

impl<'a> Explorer<'a> {
    pub fn new(soup: &'a LoopSoup, t: f64) -> Self {
        let loops = soup.up_to(t);
        let n = soup.params().n() as usize;
        let mut index = vec![Vec::new(); n];
        for (i, tl) in loops.iter().enumerate() {
            let vs = tl.lp.vertices();
            for (pos, &v) in vs.iter().enumerate() {
                if !vs[..pos].contains(&v) {
                    index[v as usize - 1].push(i as u32);
                }
            }
        }
        Self {
            params: *soup.params(),
            t,
            loops,
            index,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    fn loops_through(&self, x: Vertex) -> impl Iterator<Item = &'a TimedLoop> + '_ {
        self.index[x as usize - 1].iter().map(move |&i| &self.loops[i as usize])
    }

    /// `{y ≠ x : some loop avoiding `forbidden` visits both x and y}`.
    pub fn neighbors(&self, x: Vertex, forbidden: &BTreeSet<Vertex>) -> Result<BTreeSet<Vertex>> {
        self.params.check_vertex(x)?;
        if forbidden.contains(&x) {
            return Err(Error::InvalidParams(format!("vertex {x} is in the forbidden set")));
        }
        let mut out = BTreeSet::new();
        for tl in self.loops_through(x) {
            let vs = tl.lp.vertices();
            if vs.iter().any(|v| forbidden.contains(v)) {
                continue;
            }
            out.extend(vs.iter().copied().filter(|&y| y != x));
        }
        Ok(out)
    }

    pub fn explore(&self, x: Vertex) -> Result<ExplorationTrace> {
        self.explore_until(x, u64::MAX)
    }

    /// Exploration stopped after at most `max_steps` steps.
    pub fn explore_until(&self, x: Vertex, max_steps: u64) -> Result<ExplorationTrace> {
        self.params.check_vertex(x)?;
        let mut status = vec![NEUTRAL; self.params.n() as usize];
        let mut active = BTreeSet::from([x]);
        status[x as usize - 1] = ACTIVE;
        let mut tr = ExplorationTrace {
            order: Vec::new(),
            xi: Vec::new(),
            active_sizes: Vec::new(),
            zeta1: Vec::new(),
            zeta2: Vec::new(),
            t_stop: 0,
            component: Vec::new(),
            complete: true,
        };
        let mut found = vec![x];
        while let Some(xk) = active.pop_first() {
            if tr.order.len() as u64 >= max_steps {
                active.insert(xk);
                tr.complete = false;
                break;
            }
            let (mut xi, mut z1, mut z2) = (0u64, 0u64, 0u64);
            for tl in self.loops_through(xk) {
                let vs = tl.lp.vertices();
                let weight = vs.len() as u64 - 1;
                if vs.iter().any(|&v| v != xk && status[v as usize - 1] == EXPLORED) {
                    z2 += weight;
                    continue;
                }
                z1 += weight;
                for &y in vs {
                    if status[y as usize - 1] == NEUTRAL {
                        status[y as usize - 1] = ACTIVE;
                        active.insert(y);
                        found.push(y);
                        xi += 1;
                    }
                }
            }
            status[xk as usize - 1] = EXPLORED;
            tr.order.push(xk);
            tr.xi.push(xi);
            tr.zeta1.push(z1);
            tr.zeta2.push(z2);
            tr.active_sizes.push(active.len() as u64);
        }
        tr.t_stop = tr.order.len() as u64;
        found.sort_unstable();
        tr.component = found;
        Ok(tr)
    }

    /// Runs the exploration from `x` together with the dominating walk.
    ///
    /// At step `k ≤ T` the walk increment is `ζ¹_k` plus an independent draw
    /// `ζ̄²_k` with the law of `ζ²_k`: a Poisson number (mean `t μ(F)`, `F`
    /// the loops through `x_k` meeting `k - 1` other given vertices) of
    /// loops, each contributing its length minus one. Past `T` increments
    /// are fresh draws of the full offspring law. The walk is censored after
    /// `step_cap` steps.
    pub fn couple_gw(&self, x: Vertex, aux_seed: u64, step_cap: u64) -> Result<CoupledGWTrace> {
        let tr = self.explore(x)?;
        let mut rng = rng::stream(aux_seed, AUX_STREAM_OFFSET);
        let n = self.params.n();
        let mut zeta2_bar = Vec::with_capacity(tr.zeta1.len());
        for k in 0..tr.zeta1.len() as u32 {
            // H_{k-1} has k vertices at 0-based step k
            zeta2_bar.push(self.sample_hitting(k.min(n - 1), &mut rng)?);
        }
        let mut zeta_bar: Vec<u64> = tr.zeta1.iter().zip(&zeta2_bar).map(|(a, b)| a + b).collect();
        let mut walk: i64 = 1;
        let mut t_bar = 0u64;
        let mut absorbed = false;
        for &z in &zeta_bar {
            t_bar += 1;
            walk += z as i64 - 1;
            if walk == 0 {
                absorbed = true;
                break;
            }
        }
        let mut censored = false;
        if !absorbed {
            let full = OffspringSampler::full(&self.params, self.t);
            loop {
                if t_bar >= step_cap {
                    censored = true;
                    break;
                }
                let z = full.sample(&mut rng);
                zeta_bar.push(z);
                t_bar += 1;
                walk += z as i64 - 1;
                if walk == 0 {
                    break;
                }
            }
        } else {
            zeta_bar.truncate(t_bar as usize);
        }
        Ok(CoupledGWTrace {
            zeta1: tr.zeta1,
            zeta2: tr.zeta2,
            zeta2_bar,
            zeta_bar,
            t_bar,
            censored,
            component_size: tr.t_stop,
        })
    }

    fn sample_hitting<R: Rng + ?Sized>(&self, h: u32, rng: &mut R) -> Result<u64> {
        if h == 0 {
            return Ok(0);
        }
        let rate = self.t * mu_hit_set_and_vertex(&self.params, h)?;
        let count = poisson_count(rate, rng);
        if count == 0 {
            return Ok(0);
        }
        let sampler = OffspringSampler::hitting(&self.params, h);
        Ok((0..count).map(|_| sampler.length(rng) - 1).sum())
    }
}

type Weight = Box<dyn Fn(u32) -> f64>;

/// Samples `Σ (|ℓ| - 1)` over a Poisson family of loops through a vertex.
struct OffspringSampler {
    rate: f64,
    lengths: SeriesSampler<Weight>,
}

impl OffspringSampler {
    /// Loops through `x` meeting `h` other given vertices (rate per unit time).
    fn hitting(params: &ModelParams, h: u32) -> Self {
        let p = *params;
        let total = mu_hit_set_and_vertex(params, h).expect("h < n");
        let weight: Weight = Box::new(move |m| {
            (through_vertex_length_mass(&p, 0, m) - through_vertex_length_mass(&p, h, m)).max(0.0)
        });
        Self {
            rate: total,
            lengths: SeriesSampler::new(weight, 2, total, p.ratio(), 1.0 / p.nf()),
        }
    }

    /// All loops through `x`, over soup time `t`.
    fn full(params: &ModelParams, t: f64) -> Self {
        let p = *params;
        let total = beta_vertex(params);
        let weight: Weight = Box::new(move |m| through_vertex_length_mass(&p, 0, m));
        Self {
            rate: t * total,
            lengths: SeriesSampler::new(weight, 2, total, p.ratio(), 1.0 / p.nf()),
        }
    }

    fn length<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        u64::from(self.lengths.sample(rng))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let count = poisson_count(self.rate, rng);
        (0..count).map(|_| self.length(rng) - 1).sum()
    }
}

pub fn neighbors(soup: &LoopSoup, t: f64, x: Vertex, forbidden: &BTreeSet<Vertex>) -> Result<BTreeSet<Vertex>> {
    Explorer::new(soup, t).neighbors(x, forbidden)
}

pub fn explore(soup: &LoopSoup, t: f64, x: Vertex) -> Result<ExplorationTrace> {
    Explorer::new(soup, t).explore(x)
}

/// [`Explorer::couple_gw`] with the default step cap `10 n`.
pub fn couple_gw(soup: &LoopSoup, t: f64, x: Vertex, aux_seed: u64) -> Result<CoupledGWTrace> {
    let cap = 10 * u64::from(soup.params().n());
    Explorer::new(soup, t).couple_gw(x, aux_seed, cap)
}

/// `min{k : s_1 + … + s_k ≤ k - 1}` for a walk started at one.
pub fn walk_stopping_time(steps: &[u64]) -> Option<u64> {
    let mut sum = 0u64;
    for (i, &s) in steps.iter().enumerate() {
        sum += s;
        if sum <= i as u64 {
            return Some(i as u64 + 1);
        }
    }
    None
}

/// CSV rows `step,x_k,xi_k,active_size`.
pub fn write_trace_csv<W: Write>(mut w: W, tr: &ExplorationTrace) -> Result<()> {
    writeln!(w, "step,x_k,xi_k,active_size")?;
    for (i, ((x, xi), a)) in tr.order.iter().zip(&tr.xi).zip(&tr.active_sizes).enumerate() {
        writeln!(w, "{},{},{},{}", i + 1, x, xi, a)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct TraceSummary {
    #[serde(rename = "T")]
    pub t_stop: u64,
    pub component_size: usize,
    pub censored: bool,
}

pub fn trace_summary(tr: &ExplorationTrace) -> TraceSummary {
    TraceSummary {
        t_stop: tr.t_stop,
        component_size: tr.component.len(),
        censored: !tr.complete,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_process::state_at;
    use crate::gw_analytics::compound_poisson_pmf;
    use crate::loop_measure::{offspring_law_exact, sample_soup, Loop};
    use proptest::prelude::*;

    fn figure_soup() -> LoopSoup {
        let params = ModelParams::new(7, 1.0).unwrap();
        let loops = [vec![1, 2, 3, 4], vec![2, 5, 2, 3], vec![3, 6, 4], vec![6, 7]]
            .into_iter()
            .enumerate()
            .map(|(i, v)| TimedLoop {
                time: 0.1 * (i + 1) as f64,
                lp: Loop::new(v).unwrap(),
            })
            .collect();
        LoopSoup::from_loops(params, 1.0, loops).unwrap()
    }

    #[test]
    fn figure_neighbors() {
        let soup = figure_soup();
        let none = BTreeSet::new();
        assert_eq!(neighbors(&soup, 1.0, 1, &none).unwrap(), BTreeSet::from([2, 3, 4]));
        assert_eq!(neighbors(&soup, 1.0, 3, &BTreeSet::from([1, 2])).unwrap(), BTreeSet::from([4, 6]));
        assert!(neighbors(&soup, 1.0, 3, &BTreeSet::from([3])).is_err());
        let empty = LoopSoup::from_loops(*soup.params(), 1.0, vec![]).unwrap();
        assert!(neighbors(&empty, 1.0, 1, &none).unwrap().is_empty());
    }

    #[test]
    fn figure_exploration() {
        let soup = figure_soup();
        let tr = explore(&soup, 1.0, 1).unwrap();
        assert_eq!(tr.xi, vec![3, 1, 1, 0, 0, 1, 0]);
        assert_eq!(tr.t_stop, 7);
        assert_eq!(tr.order, vec![1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(tr.component, (1..=7).collect::<Vec<_>>());
        assert_eq!(&tr.zeta1[..3], &[3, 3, 2]);
        assert_eq!(&tr.zeta2[..3], &[0, 3, 6]);
        assert_eq!(walk_stopping_time(&tr.xi), Some(7));
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &tr).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert!(csv.starts_with("step,x_k,xi_k,active_size\n1,1,3,3\n2,2,1,3\n"));
        let js = serde_json::to_string(&trace_summary(&tr)).unwrap();
        assert_eq!(js, r#"{"T":7,"component_size":7,"censored":false}"#);
        // before the last loop arrives, 7 is cut off
        let tr = explore(&soup, 0.35, 1).unwrap();
        assert_eq!(tr.t_stop, 6);
    }

    #[test]
    fn trivial_explorations() {
        let params = ModelParams::new(4, 1.0).unwrap();
        let empty = LoopSoup::from_loops(params, 1.0, vec![]).unwrap();
        let tr = explore(&empty, 1.0, 3).unwrap();
        assert_eq!((tr.xi.clone(), tr.t_stop), (vec![0], 1));
        let one = LoopSoup::from_loops(
            params,
            1.0,
            vec![TimedLoop {
                time: 0.5,
                lp: Loop::new(vec![1, 2]).unwrap(),
            }],
        )
        .unwrap();
        let tr = explore(&one, 1.0, 1).unwrap();
        assert_eq!((tr.xi.clone(), tr.t_stop), (vec![1, 0], 2));
        let tr = Explorer::new(&one, 1.0).explore_until(1, 1).unwrap();
        assert!(!tr.complete && tr.t_stop == 1);
    }

    #[test]
    fn empty_soup_coupling() {
        let params = ModelParams::new(50, 1.0).unwrap();
        let t = 25.0;
        let empty = LoopSoup::from_loops(params, t, vec![]).unwrap();
        for s in 0..100 {
            let c = couple_gw(&empty, t, 1, s).unwrap();
            assert_eq!((c.zeta1.clone(), c.t_bar, c.component_size), (vec![0], 1, 1));
        }
        // over random soups, P(T̄ = 1) = P(ζ̄_1 = 0) = e^{-tβ}
        let sampler = crate::loop_measure::SoupSampler::new(params);
        let reps = 20_000u64;
        let mut ones = 0;
        for r in 0..reps {
            let soup = sampler.sample(t, &mut rng::stream(3, r)).unwrap();
            let c = couple_gw(&soup, t, 1, r).unwrap();
            assert!(c.t_bar >= c.component_size);
            if c.t_bar == 1 {
                ones += 1;
            }
        }
        let p = (-t * beta_vertex(&params)).exp();
        let f = ones as f64 / reps as f64;
        assert!((f - p).abs() < 3.0 * crate::stats::binomial_se(p, reps as usize), "{f} vs {p}");
    }

    proptest! {
        #[test]
        fn exploration_agrees_with_union_find(seed in 0u64..300, n in 2u32..50, e in 0.3f64..2.0, tf in 0.1f64..2.0) {
            let params = ModelParams::new(n, e).unwrap();
            let t = tf * f64::from(n);
            let soup = sample_soup(&params, t, seed).unwrap();
            let ex = Explorer::new(&soup, t);
            let mut state = state_at(&soup, t).unwrap();
            for x in 1..=n {
                let tr = ex.explore(x).unwrap();
                prop_assert_eq!(&tr.component, &state.component_of(x).unwrap());
                prop_assert_eq!(tr.t_stop as usize, tr.component.len());
                prop_assert_eq!(walk_stopping_time(&tr.xi), Some(tr.t_stop));
                let mut a = 1i64;
                for (k, (&xi, &sz)) in tr.xi.iter().zip(&tr.active_sizes).enumerate() {
                    a += xi as i64 - 1;
                    prop_assert_eq!(a, sz as i64);
                    prop_assert_eq!(a == 0, k + 1 == tr.xi.len());
                    prop_assert!(tr.zeta1[k] >= xi);
                }
            }
            let c = ex.couple_gw(1, seed, 10 * u64::from(n)).unwrap();
            prop_assert!(c.t_bar >= c.component_size);
            for k in 0..c.component_size as usize {
                prop_assert!(c.zeta_bar[k] >= c.zeta1[k]);
            }
        }
    }

    #[test]
    fn first_increment_law() {
        // ζ̄_1 ~ CPois(t β, ν_n) with n = 100, ε = 1 and soup time n · 0.5
        let params = ModelParams::new(100, 1.0).unwrap();
        let t = 50.0;
        let law = offspring_law_exact(&params, 0).unwrap();
        let target = compound_poisson_pmf(t * law.rate(), &law.pmf_vec(1e-18), 40);
        let reps = 20_000u64;
        let mut counts = vec![0u64; 41];
        let sampler = crate::loop_measure::SoupSampler::new(params);
        for r in 0..reps {
            let mut rng = rng::stream(99, r);
            let soup = sampler.sample(t, &mut rng).unwrap();
            let c = Explorer::new(&soup, t).couple_gw(1, r, 1).unwrap();
            counts[(c.zeta_bar[0] as usize).min(40)] += 1;
        }
        let mut probs: Vec<f64> = target[..40].to_vec();
        probs.push(1.0 - probs.iter().sum::<f64>());
        let res = crate::stats::chi_square_gof(&counts, &probs, 5.0);
        assert!(res.p_value > 0.01, "{res:?}");
    }

    #[test]
    fn second_increment_mixes_real_and_auxiliary() {
        // given x_2, ζ̄_2 = ζ¹_2 + ζ̄²_2 must again follow CPois(t β, ν_n)
        let params = ModelParams::new(100, 1.0).unwrap();
        let t = 150.0;
        let law = offspring_law_exact(&params, 0).unwrap();
        let target = compound_poisson_pmf(t * law.rate(), &law.pmf_vec(1e-18), 40);
        let sampler = crate::loop_measure::SoupSampler::new(params);
        let mut counts = vec![0u64; 41];
        let mut used = 0u64;
        let mut r = 0u64;
        while used < 15_000 {
            let mut rng = rng::stream(7, r);
            let soup = sampler.sample(t, &mut rng).unwrap();
            let c = Explorer::new(&soup, t).couple_gw(1, r, 2).unwrap();
            r += 1;
            if c.component_size < 2 {
                continue;
            }
            used += 1;
            counts[(c.zeta_bar[1] as usize).min(40)] += 1;
        }
        let mut probs: Vec<f64> = target[..40].to_vec();
        probs.push(1.0 - probs.iter().sum::<f64>());
        let res = crate::stats::chi_square_gof(&counts, &probs, 5.0);
        assert!(res.p_value > 0.01, "{res:?}");
    }
}
