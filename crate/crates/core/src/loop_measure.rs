//! The loop measure `μ` on the complete graph with self-loops and exact
//! samplers for the Poisson loop soup.
//!
//! A based loop `(x_1, …, x_k)` with `k ≥ 2` has weight `1/(k (n(ε+1))^k)`;
//! the measure on unrooted loops is its push-forward under rotation. Summing
//! over vertex sequences, a loop of length `k` on a ground set of `m`
//! vertices carries total mass `(m/(n(ε+1)))^k / k`, which gives every
//! closed form in this module.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::rng::{self, GENERATOR_ID};

/// Vertex ids are 1-based, in `1..=n`.
pub type Vertex = u32;

/// Relative size of a neglected series tail.
pub(crate) const SERIES_TAIL_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: u32,
    epsilon: f64,
}

impl ModelParams {
    pub fn new(n: u32, epsilon: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n = {n} must be at least 2")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon = {epsilon} must be a positive finite number"
            )));
        }
        Ok(Self { n, epsilon })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `κ_n = nε`.
    pub fn killing_intensity(&self) -> f64 {
        self.nf() * self.epsilon
    }

    /// Transition probability `P_{x,y} = 1/(n(ε+1))` of the killed walk.
    pub fn step_probability(&self) -> f64 {
        1.0 / (self.nf() * (self.epsilon + 1.0))
    }

    /// Probability that the walk is killed at a given step.
    pub fn kill_probability(&self) -> f64 {
        self.epsilon / (self.epsilon + 1.0)
    }

    pub(crate) fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    /// `1/(ε+1)`: the mass ratio between consecutive loop lengths.
    pub(crate) fn ratio(&self) -> f64 {
        1.0 / (self.epsilon + 1.0)
    }

    pub(crate) fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v == 0 || v > self.n {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        } else {
            Ok(())
        }
    }
}

/// An unrooted loop, stored as its lexicographically least rotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loop {
    vertices: Box<[Vertex]>,
}

impl Loop {
    /// Builds the loop of a based loop; any rotation of the same sequence
    /// gives an equal `Loop`.
    pub fn new(mut vertices: Vec<Vertex>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(out_of_range("loop length", vertices.len() as f64, "[2, ∞)"));
        }
        if let Some(&v) = vertices.iter().find(|&&v| v == 0) {
            return Err(Error::VertexOutOfRange { vertex: v, n: 0 });
        }
        let shift = least_rotation(&vertices);
        vertices.rotate_left(shift);
        Ok(Self {
            vertices: vertices.into_boxed_slice(),
        })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.contains(&v)
    }

    /// Number of visits of the loop to `v`.
    pub fn visits(&self, v: Vertex) -> usize {
        self.vertices.iter().filter(|&&w| w == v).count()
    }

    /// Weight `μ*(ℓ) = 1/(k (n(ε+1))^k)` of one based representative.
    pub fn based_weight(&self, params: &ModelParams) -> f64 {
        let k = self.len() as f64;
        (k * params.step_probability().ln()).exp() / k
    }
}

/// Start index of the lexicographically least rotation of `s`.
fn least_rotation(s: &[Vertex]) -> usize {
    let n = s.len();
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let a = s[(i + k) % n];
        let b = s[(j + k) % n];
        if a == b {
            k += 1;
            continue;
        }
        if a > b {
            i += k + 1;
        } else {
            j += k + 1;
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedLoop {
    pub time: f64,
    pub lp: Loop,
}

/// A realization of the loop soup on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSoup {
    params: ModelParams,
    horizon: f64,
    loops: Vec<TimedLoop>,
    seed: u64,
    stream: u64,
    generator_id: String,
    fixed_length: Option<u32>,
}

impl LoopSoup {
    /// Assembles a soup from explicit loops (sorted stably by time).
    pub fn from_loops(params: ModelParams, horizon: f64, mut loops: Vec<TimedLoop>) -> Result<Self> {
        loops.sort_by(|a, b| a.time.total_cmp(&b.time));
        let soup = Self {
            params,
            horizon,
            loops,
            seed: 0,
            stream: 0,
            generator_id: "manual".to_string(),
            fixed_length: None,
        };
        soup.validate()?;
        Ok(soup)
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(out_of_range("horizon", self.horizon, "[0, ∞)"));
        }
        let mut last = 0.0f64;
        for tl in &self.loops {
            if !(tl.time >= last && tl.time <= self.horizon) {
                return Err(out_of_range("loop time", tl.time, format!("[{last}, {}]", self.horizon)));
            }
            last = tl.time;
            for &v in tl.lp.vertices() {
                self.params.check_vertex(v)?;
            }
            if let Some(j) = self.fixed_length {
                if tl.lp.len() != j as usize {
                    return Err(out_of_range("loop length", tl.lp.len() as f64, format!("{{{j}}}")));
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn loops(&self) -> &[TimedLoop] {
        &self.loops
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn generator_id(&self) -> &str {
        &self.generator_id
    }

    pub fn fixed_length(&self) -> Option<u32> {
        self.fixed_length
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    /// Loops that arrived at or before `t`.
    pub fn up_to(&self, t: f64) -> &[TimedLoop] {
        let end = self.loops.partition_point(|tl| tl.time <= t);
        &self.loops[..end]
    }

    /// `S_{t,x}`: total number of visits to vertices other than `x` by the
    /// loops through `x` present at time `t`.
    pub fn visits_besides(&self, t: f64, x: Vertex) -> u64 {
        self.up_to(t)
            .iter()
            .filter(|tl| tl.lp.contains(x))
            .map(|tl| (tl.lp.len() - tl.lp.visits(x)) as u64)
            .sum()
    }

    /// True when some loop through `x` visits a vertex twice, or two loops
    /// through `x` share a vertex other than `x`. On the complement the
    /// number of neighbours of `x` equals `Σ (|ℓ| - 1)` over loops through `x`.
    pub fn has_overlap_at(&self, t: f64, x: Vertex) -> bool {
        let mut seen = std::collections::HashSet::new();
        for tl in self.up_to(t).iter().filter(|tl| tl.lp.contains(x)) {
            if tl.lp.visits(x) > 1 {
                return true;
            }
            for &v in tl.lp.vertices() {
                if v != x && !seen.insert(v) {
                    return true;
                }
            }
        }
        false
    }

    /// Writes the soup as a JSON header line followed by one
    /// `time,v1;v2;...;vk` record per loop. Floats use the shortest
    /// representation that parses back to the same bits.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = SoupHeader {
            n: self.params.n,
            epsilon: self.params.epsilon,
            horizon: self.horizon,
            seed: self.seed,
            stream: self.stream,
            generator_id: self.generator_id.clone(),
            fixed_length: self.fixed_length,
            loops: self.loops.len(),
        };
        serde_json::to_writer(&mut w, &header)?;
        writeln!(w)?;
        let mut line = String::new();
        for tl in &self.loops {
            line.clear();
            line.push_str(&format!("{},", tl.time));
            for (i, v) in tl.lp.vertices().iter().enumerate() {
                if i > 0 {
                    line.push(';');
                }
                line.push_str(&v.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header_line = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })??;
        let header: SoupHeader = serde_json::from_str(&header_line).map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        let params = ModelParams::new(header.n, header.epsilon)?;
        let mut loops = Vec::with_capacity(header.loops);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                line: lineno,
                msg: msg.to_string(),
            };
            let (time, verts) = line.split_once(',').ok_or_else(|| parse_err("expected `time,v1;...`"))?;
            let time: f64 = time.parse().map_err(|_| parse_err("bad time"))?;
            let vertices = verts
                .split(';')
                .map(|v| v.parse::<Vertex>().map_err(|_| parse_err("bad vertex id")))
                .collect::<Result<Vec<_>>>()?;
            loops.push(TimedLoop {
                time,
                lp: Loop::new(vertices)?,
            });
        }
        if loops.len() != header.loops {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header announces {} loops, found {}", header.loops, loops.len()),
            });
        }
        let soup = Self {
            params,
            horizon: header.horizon,
            loops,
            seed: header.seed,
            stream: header.stream,
            generator_id: header.generator_id,
            fixed_length: header.fixed_length,
        };
        soup.validate()?;
        Ok(soup)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SoupHeader {
    n: u32,
    epsilon: f64,
    horizon: f64,
    seed: u64,
    stream: u64,
    generator_id: String,
    fixed_length: Option<u32>,
    loops: usize,
}

// ---------------------------------------------------------------------------
// Closed-form masses
// ---------------------------------------------------------------------------

/// `μ(𝒟ℒ(K_n \ V))` for `|V| = v`: the mass of loops avoiding `v` given vertices.
pub fn mu_restricted_total(params: &ModelParams, v: u32) -> Result<f64> {
    if v >= params.n {
        return Err(out_of_range("v", f64::from(v), format!("[0, {}]", params.n - 1)));
    }
    let a = f64::from(params.n - v) / (params.nf() * (params.epsilon + 1.0));
    Ok(-(-a).ln_1p() - a)
}

/// Total mass of the loop measure, `log(1 + 1/ε) - 1/(ε+1)`.
pub fn mu_total(params: &ModelParams) -> f64 {
    let r = params.ratio();
    -(-r).ln_1p() - r
}

/// `β_{n,ε}`: mass of the loops through a fixed vertex.
pub fn beta_vertex(params: &ModelParams) -> f64 {
    (1.0 / params.killing_intensity()).ln_1p() - params.step_probability()
}

/// Mass of the loops through `x` that avoid a set of `v` other vertices.
pub fn beta_vertex_avoiding(params: &ModelParams, v: u32) -> Result<f64> {
    if v + 2 > params.n {
        return Err(out_of_range("v", f64::from(v), format!("[0, {}]", params.n - 2)));
    }
    Ok((1.0 / (params.killing_intensity() + f64::from(v))).ln_1p() - params.step_probability())
}

/// `μ` of the loops of length `m` through `x` that avoid `v` other vertices:
/// `((1-v/n)^m - (1-(v+1)/n)^m) / (m (ε+1)^m)`.
pub(crate) fn through_vertex_length_mass(params: &ModelParams, v: u32, m: u32) -> f64 {
    let nf = params.nf();
    let free = nf - f64::from(v);
    let mf = f64::from(m);
    // a^m - (a - 1/n)^m with a = free/n, written to avoid cancellation.
    let top = (mf * (free / nf).ln()).exp() * -(mf * (-1.0 / free).ln_1p()).exp_m1();
    top * (mf * params.ratio().ln()).exp() / mf
}

/// Law of `Σ (|ℓ|-1)` over loops through `x` avoiding `v` given vertices:
/// compound Poisson with per-unit-time rate [`Self::rate`] and jump law
/// [`Self::pmf`] on `{1, 2, …}`.
#[derive(Debug, Clone, Copy)]
pub struct ExactOffspringLaw {
    params: ModelParams,
    v: u32,
    rate: f64,
}

impl ExactOffspringLaw {
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn avoided(&self) -> u32 {
        self.v
    }

    /// `ν_n(j)`, the probability that one loop contributes `j` offspring.
    pub fn pmf(&self, j: u32) -> f64 {
        if j == 0 {
            return 0.0;
        }
        through_vertex_length_mass(&self.params, self.v, j + 1) / self.rate
    }

    /// `ν_n` on `1..=j_max` with `j_max` chosen so the neglected tail is
    /// below `tol`. Index 0 holds `ν_n(0) = 0`.
    pub fn pmf_vec(&self, tol: f64) -> Vec<f64> {
        let r = self.params.ratio();
        let mut out = vec![0.0];
        let mut j = 1u32;
        loop {
            out.push(self.pmf(j));
            // ν_n(j) ≤ r^{j+1} / (n b_n): geometric tail.
            let tail = r.powi(j as i32 + 2) / ((1.0 - r) * self.params.nf() * self.rate);
            if tail < tol || j > 100_000 {
                break;
            }
            j += 1;
        }
        out
    }

    /// Mean jump size `Σ j ν_n(j)`.
    pub fn jump_mean(&self) -> f64 {
        self.pmf_vec(1e-17).iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }
}

pub fn offspring_law_exact(params: &ModelParams, v: u32) -> Result<ExactOffspringLaw> {
    let rate = beta_vertex_avoiding(params, v)?;
    Ok(ExactOffspringLaw {
        params: *params,
        v,
        rate,
    })
}

/// `μ(F_{A,x})`: mass of the loops through `x` that meet a set of `a` other vertices.
pub fn mu_hit_set_and_vertex(params: &ModelParams, a: u32) -> Result<f64> {
    if a >= params.n {
        return Err(out_of_range("a", f64::from(a), format!("[0, {}]", params.n - 1)));
    }
    let ne = params.killing_intensity();
    let af = f64::from(a);
    Ok((af / (ne * (ne + af + 1.0))).ln_1p())
}

/// Probability that no loop of the soup at time `n t` meets both of two
/// disjoint vertex sets of sizes `f1` and `f2`.
pub fn prob_no_loop_linking(params: &ModelParams, f1: u32, f2: u32, t: f64) -> Result<f64> {
    if f1 == 0 || f2 == 0 || u64::from(f1) + u64::from(f2) > u64::from(params.n) {
        return Err(out_of_range(
            "f1 + f2",
            f64::from(f1) + f64::from(f2),
            format!("[2, {}] with f1, f2 ≥ 1", params.n),
        ));
    }
    if !(t >= 0.0) {
        return Err(out_of_range("t", t, "[0, ∞)"));
    }
    let ne = params.killing_intensity();
    let (a, b) = (f64::from(f1), f64::from(f2));
    let linked = (a * b) / ((ne + a) * (ne + b));
    Ok((params.nf() * t * (-linked).ln_1p()).exp())
}

/// Upper bound on the probability that a loop through `x` at time `t` revisits
/// a vertex or meets another loop through `x` away from `x`.
pub fn anomaly_bound(params: &ModelParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(out_of_range("t", t, "[0, ∞)"));
    }
    let (n, e) = (params.nf(), params.epsilon);
    Ok(t * (e + 1.0) / (n * n * e.powi(3)) + t * t / (n.powi(3) * e.powi(4)))
}

/// Probability generating function of `S_{t,x}`
/// (see [`LoopSoup::visits_besides`]), valid for `0 ≤ u < (nε+1)/(n-1) + 1`.
pub fn visits_besides_pgf(params: &ModelParams, t: f64, u: f64) -> f64 {
    let (n, ne) = (params.nf(), params.killing_intensity());
    let d = n * (params.epsilon + 1.0) - u * (n - 1.0);
    (1.0 + 1.0 / ne).powf(-t) * (1.0 - 1.0 / d).powf(-t)
}

/// `E[S_{t,x}(S_{t,x}-1)]`.
pub fn visits_besides_factorial_moment(params: &ModelParams, t: f64) -> f64 {
    let (n, ne) = (params.nf(), params.killing_intensity());
    t * (n - 1.0).powi(2) * (2.0 * ne + t + 1.0) / (ne.powi(2) * (ne + 1.0).powi(2))
}

/// `E[S_{t,x}] = t (n-1) / (nε (nε+1))`.
pub fn visits_besides_mean(params: &ModelParams, t: f64) -> f64 {
    let (n, ne) = (params.nf(), params.killing_intensity());
    t * (n - 1.0) / (ne * (ne + 1.0))
}

/// Probability that a loop of the soup has length `k`.
pub fn length_probability(params: &ModelParams, k: u32) -> f64 {
    if k < 2 {
        return 0.0;
    }
    let kf = f64::from(k);
    (kf * params.ratio().ln()).exp() / kf / mu_total(params)
}

/// Total mass `1/(j(ε+1)^j)` of the loops of length `j`.
pub fn fixed_length_total_mass(params: &ModelParams, j: u32) -> f64 {
    let jf = f64::from(j);
    (jf * params.ratio().ln()).exp() / jf
}

/// `β^{(j)}_{n,ε}`: mass of the loops of length `j` through a fixed vertex.
pub fn fixed_length_vertex_rate(params: &ModelParams, j: u32) -> f64 {
    let jf = f64::from(j);
    fixed_length_total_mass(params, j) * -(jf * (-1.0 / params.nf()).ln_1p()).exp_m1()
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Exact sampler for an integer law with weights `w(m)`, `m ≥ first`,
/// known total mass and a geometric envelope `w(m) ≤ scale · ratio^m`.
///
/// Values up to a cap are drawn by inverse CDF; the cap is the first index
/// where the envelope tail falls below `SERIES_TAIL_TOL` of the mass. The
/// remaining tail is drawn by rejection from the envelope.
#[derive(Debug, Clone)]
pub(crate) struct SeriesSampler<W> {
    weight: W,
    first: u32,
    cdf: Vec<f64>,
    ratio: f64,
    scale: f64,
}

impl<W: Fn(u32) -> f64> SeriesSampler<W> {
    pub(crate) fn new(weight: W, first: u32, total: f64, ratio: f64, scale: f64) -> Self {
        debug_assert!(ratio > 0.0 && ratio < 1.0 && total > 0.0);
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        let mut m = first;
        loop {
            acc += weight(m) / total;
            cdf.push(acc);
            let tail = scale * ratio.powf(f64::from(m) + 1.0) / (1.0 - ratio);
            if tail < SERIES_TAIL_TOL * total || cdf.len() > 1_000_000 {
                break;
            }
            m += 1;
        }
        Self {
            weight,
            first,
            cdf,
            ratio,
            scale,
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let last = *self.cdf.last().expect("non-empty cdf");
        if u < last {
            let idx = self.cdf.partition_point(|&c| c <= u);
            return self.first + idx as u32;
        }
        let cap = self.first + self.cdf.len() as u32 - 1;
        loop {
            // m = cap + 1 + Geometric(1 - ratio) has law ∝ ratio^m on m > cap.
            let g: f64 = rng.gen();
            let extra = ((1.0 - g).ln() / self.ratio.ln()).floor() as u32;
            let m = cap + 1 + extra;
            let accept = (self.weight)(m) / (self.scale * self.ratio.powf(f64::from(m)));
            if rng.gen::<f64>() < accept {
                return m;
            }
        }
    }
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

type LengthWeight = Box<dyn Fn(u32) -> f64 + Send + Sync>;

/// Samples soups for a fixed `ModelParams`, caching the length law.
pub struct SoupSampler {
    params: ModelParams,
    lengths: SeriesSampler<LengthWeight>,
    total: f64,
}

impl SoupSampler {
    pub fn new(params: ModelParams) -> Self {
        let r = params.ratio();
        let total = mu_total(&params);
        let weight: LengthWeight = Box::new(move |k| (f64::from(k) * r.ln()).exp() / f64::from(k));
        // r^k / k ≤ r^k / 2 for k ≥ 2
        let lengths = SeriesSampler::new(weight, 2, total, r, 0.5);
        Self {
            params,
            lengths,
            total,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Loop-length sampler cap: lengths above it come from the rejection tail.
    pub fn length_cap(&self) -> u32 {
        self.lengths.first + self.lengths.cdf.len() as u32 - 1
    }

    pub fn sample_length<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.lengths.sample(rng)
    }

    /// Loops of the soup on `[0, horizon]`: a Poisson number of iid
    /// (time, length, vertices) draws, sorted by time.
    pub fn sample_loops<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> Vec<TimedLoop> {
        let count = poisson_count(horizon * self.total, rng);
        let n = self.params.n;
        let mut loops = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let time = horizon * rng.gen::<f64>();
            let len = self.lengths.sample(rng);
            let vertices = (0..len).map(|_| rng.gen_range(1..=n)).collect();
            loops.push(TimedLoop {
                time,
                lp: Loop::new(vertices).expect("length ≥ 2 and ids ≥ 1"),
            });
        }
        loops.sort_by(|a, b| a.time.total_cmp(&b.time));
        loops
    }

    pub fn sample<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> Result<LoopSoup> {
        check_horizon(horizon)?;
        Ok(LoopSoup {
            params: self.params,
            horizon,
            loops: self.sample_loops(horizon, rng),
            seed: 0,
            stream: 0,
            generator_id: "external".to_string(),
            fixed_length: None,
        })
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon >= 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(out_of_range("horizon", horizon, "[0, ∞)"))
    }
}

/// Samples the soup on `[0, horizon]` from stream `stream` of `seed`.
pub fn sample_soup_stream(params: &ModelParams, horizon: f64, seed: u64, stream: u64) -> Result<LoopSoup> {
    check_horizon(horizon)?;
    let sampler = SoupSampler::new(*params);
    let mut rng = rng::stream(seed, stream);
    Ok(LoopSoup {
        params: *params,
        horizon,
        loops: sampler.sample_loops(horizon, &mut rng),
        seed,
        stream,
        generator_id: GENERATOR_ID.to_string(),
        fixed_length: None,
    })
}

pub fn sample_soup(params: &ModelParams, horizon: f64, seed: u64) -> Result<LoopSoup> {
    sample_soup_stream(params, horizon, seed, 0)
}

/// Loops of length exactly `j` on `[0, horizon]`.
pub fn sample_fixed_length_loops<R: Rng + ?Sized>(
    params: &ModelParams,
    j: u32,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<TimedLoop>> {
    if j < 2 {
        return Err(out_of_range("j", f64::from(j), "[2, ∞)"));
    }
    check_horizon(horizon)?;
    let count = poisson_count(horizon * fixed_length_total_mass(params, j), rng);
    let n = params.n;
    let mut loops: Vec<TimedLoop> = (0..count)
        .map(|_| {
            let time = horizon * rng.gen::<f64>();
            let vertices = (0..j).map(|_| rng.gen_range(1..=n)).collect();
            TimedLoop {
                time,
                lp: Loop::new(vertices).expect("j ≥ 2"),
            }
        })
        .collect();
    loops.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(loops)
}

pub fn sample_fixed_length_soup_stream(
    params: &ModelParams,
    j: u32,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Result<LoopSoup> {
    let mut rng = rng::stream(seed, stream);
    let loops = sample_fixed_length_loops(params, j, horizon, &mut rng)?;
    Ok(LoopSoup {
        params: *params,
        horizon,
        loops,
        seed,
        stream,
        generator_id: GENERATOR_ID.to_string(),
        fixed_length: Some(j),
    })
}

pub fn sample_fixed_length_soup(params: &ModelParams, j: u32, horizon: f64, seed: u64) -> Result<LoopSoup> {
    sample_fixed_length_soup_stream(params, j, horizon, seed, 0)
}
