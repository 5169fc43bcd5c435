//! Galton-Watson analytics for the two offspring laws of the model.
//!
//! * [`CPGeo`]: compound Poisson with geometric jumps on `{1, 2, …}`, the
//!   limit of the number of new neighbours found at one exploration step.
//!   With `λ = t/(ε(ε+1))` and `p = ε/(ε+1)` its mean is `t/ε²`.
//! * [`FixedLengthOffspring`]: `(j-1)·Poisson(t)`, the same quantity when
//!   every loop has length `j`.
//!
//! Total progeny laws come from the hitting-time (Dwass) representation
//! `P(T = k) = (u/k) P(X_1 + … + X_k = k - u)`.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{out_of_range, Error, Result};

/// `CPois(λ, Geo_{ℕ*}(p))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CPGeo {
    lambda: f64,
    p: f64,
}

impl CPGeo {
    pub fn new(lambda: f64, p: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(out_of_range("lambda", lambda, "[0, ∞)"));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(out_of_range("p", p, "(0, 1)"));
        }
        Ok(Self { lambda, p })
    }

    /// The limiting offspring law at model time `t`.
    pub fn from_model(eps: f64, t: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(out_of_range("eps", eps, "(0, ∞)"));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(out_of_range("t", t, "[0, ∞)"));
        }
        Self::new(t / (eps * (eps + 1.0)), eps / (eps + 1.0))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `ε = p/(1-p)`.
    pub fn epsilon(&self) -> f64 {
        self.p / (1.0 - self.p)
    }

    /// `t = λ ε (ε+1)`.
    pub fn model_time(&self) -> f64 {
        let e = self.epsilon();
        self.lambda * e * (e + 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.lambda / self.p
    }

    pub fn variance(&self) -> f64 {
        self.lambda * (2.0 - self.p) / (self.p * self.p)
    }

    pub fn is_supercritical(&self) -> bool {
        self.mean() > 1.0
    }
}

/// `(j-1)·Poisson(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedLengthOffspring {
    j: u32,
    t: f64,
}

impl FixedLengthOffspring {
    pub fn new(j: u32, t: f64) -> Result<Self> {
        if j < 2 {
            return Err(out_of_range("j", f64::from(j), "[2, ∞)"));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(out_of_range("t", t, "[0, ∞)"));
        }
        Ok(Self { j, t })
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    fn step(&self) -> f64 {
        f64::from(self.j - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Offspring {
    CpGeo(CPGeo),
    FixedLength(FixedLengthOffspring),
}

impl From<CPGeo> for Offspring {
    fn from(l: CPGeo) -> Self {
        Offspring::CpGeo(l)
    }
}

impl From<FixedLengthOffspring> for Offspring {
    fn from(l: FixedLengthOffspring) -> Self {
        Offspring::FixedLength(l)
    }
}

impl Offspring {
    pub fn mean(&self) -> f64 {
        match self {
            Offspring::CpGeo(l) => l.mean(),
            Offspring::FixedLength(l) => l.step() * l.t,
        }
    }

    pub fn pmf(&self, m: u64) -> f64 {
        match self {
            Offspring::CpGeo(l) => cp_pmf(l, m),
            Offspring::FixedLength(l) => {
                let step = u64::from(l.j - 1);
                if !m.is_multiple_of(step) {
                    0.0
                } else {
                    poisson_pmf(l.t, m / step)
                }
            }
        }
    }

    /// `log E[s^X]`, or an error outside the domain of convergence.
    pub fn ln_pgf(&self, s: f64) -> Result<f64> {
        match self {
            Offspring::CpGeo(l) => {
                let bound = 1.0 / (1.0 - l.p);
                if !(s >= 0.0 && s < bound) {
                    return Err(out_of_range("s", s, format!("[0, {bound})")));
                }
                let u = 1.0 - s;
                Ok(-l.lambda * u / (u + s * l.p))
            }
            Offspring::FixedLength(l) => {
                if !(s >= 0.0 && s.is_finite()) {
                    return Err(out_of_range("s", s, "[0, ∞)"));
                }
                Ok(l.t * (s.powf(l.step()) - 1.0))
            }
        }
    }

    /// `log E[e^{θX}]` for `θ` below the abscissa of convergence.
    pub fn ln_mgf(&self, theta: f64) -> f64 {
        match self {
            Offspring::CpGeo(l) => {
                let e = l.epsilon();
                let t = l.model_time();
                if theta >= (e + 1.0).ln() {
                    return f64::INFINITY;
                }
                -t / e + t / (e + 1.0 - theta.exp())
            }
            Offspring::FixedLength(l) => l.t * (l.step() * theta).exp_m1(),
        }
    }

    /// Supremum of the domain of the mgf.
    fn theta_max(&self) -> f64 {
        match self {
            Offspring::CpGeo(l) => (l.epsilon() + 1.0).ln(),
            Offspring::FixedLength(l) => {
                // θ - t(e^{(j-1)θ} - 1) peaks at ln(1/((j-1)t))/(j-1)
                let peak = (1.0 / (l.step() * l.t)).ln() / l.step();
                2.0 * peak.max(0.0) + 1.0
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Offspring::CpGeo(l) => {
                if l.lambda == 0.0 {
                    return 0;
                }
                let count = Poisson::new(l.lambda).expect("λ > 0").sample(rng) as u64;
                let geo = Geometric::new(l.p).expect("p in (0,1)");
                (0..count).map(|_| geo.sample(rng) + 1).sum()
            }
            Offspring::FixedLength(l) => {
                if l.t == 0.0 {
                    return 0;
                }
                let k = Poisson::new(l.t).expect("t > 0").sample(rng) as u64;
                k * u64::from(l.j - 1)
            }
        }
    }

    /// Total progeny `P(T^{(u)} = k)`.
    pub fn progeny_pmf(&self, u: u32, k: u64) -> f64 {
        match self {
            Offspring::CpGeo(l) => progeny_pmf_law(l, u, k),
            Offspring::FixedLength(l) => fixed_length_progeny_pmf(u, l.j, l.t, k),
        }
    }

    pub fn extinction_prob(&self) -> f64 {
        extinction_generic(self)
    }

    /// `sup_{θ > 0} θ - log E[e^{θX}]`, zero unless the law is subcritical.
    pub fn cramer_h(&self) -> f64 {
        let hi = self.theta_max();
        golden_max(|th| th - self.ln_mgf(th), 1e-9, hi - 1e-9).1.max(0.0)
    }

    /// Maximizer of [`Self::cramer_h`].
    pub(crate) fn cramer_theta(&self) -> f64 {
        let hi = self.theta_max();
        golden_max(|th| th - self.ln_mgf(th), 1e-9, hi - 1e-9).0
    }

    /// `sup_{θ ≥ 0} -log E[e^{-θX}] - θ`, zero unless the law is supercritical.
    pub fn tail_rate_i(&self) -> f64 {
        // -log E[e^{-θX}] ≤ -log P(X = 0), so the objective is negative past it.
        let hi = (-(self.pmf(0).ln())).max(1e-6);
        let (_, val) = golden_max(|th| -self.ln_mgf(-th) - th, 0.0, hi);
        val.max(0.0)
    }
}

fn poisson_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (kf * mean.ln() - mean - ln_gamma(kf + 1.0)).exp()
}

/// Running `log Σ exp(x_i)`.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// `P(X = m)` for `X ~ CPois(λ, Geo(p))`:
/// `e^{-λ} Σ_{j=1}^{m} λ^j/j! C(m-1, j-1) p^j (1-p)^{m-j}`.
pub fn cp_pmf(law: &CPGeo, m: u64) -> f64 {
    let (lam, p) = (law.lambda, law.p);
    if m == 0 {
        return (-lam).exp();
    }
    if lam == 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    let lq = (-p).ln_1p();
    // log of the j = 1 term, then term ratios
    let mut lt = lam.ln() + p.ln() + (mf - 1.0) * lq;
    let step = lam.ln() + p.ln() - lq;
    let mut acc = LogSum::new();
    acc.add(lt);
    for j in 1..m {
        let jf = j as f64;
        lt += step + (mf - jf).ln() - jf.ln() - (jf + 1.0).ln();
        acc.add(lt);
    }
    (acc.value() - lam).exp()
}

/// `φ(s) = exp(-λ(1-s)/(1-s+sp))`.
pub fn pgf(law: &CPGeo, s: f64) -> Result<f64> {
    Offspring::CpGeo(*law).ln_pgf(s).map(f64::exp)
}

/// `L(θ) = exp(-t/ε + t/(ε+1-e^θ))`, the mgf of `CPGeo::from_model(eps, t)`.
pub fn mgf_l(eps: f64, t: f64, theta: f64) -> Result<f64> {
    let law = CPGeo::from_model(eps, t)?;
    let bound = (eps + 1.0).ln();
    if !(theta < bound) {
        return Err(out_of_range("theta", theta, format!("(-∞, {bound})")));
    }
    Ok(Offspring::CpGeo(law).ln_mgf(theta).exp())
}

/// Smallest fixed point of the pgf on `[0, 1]`.
pub fn extinction_prob(law: &CPGeo) -> f64 {
    extinction_generic(&Offspring::CpGeo(*law))
}

fn extinction_generic(off: &Offspring) -> f64 {
    if off.mean() <= 1.0 {
        return 1.0;
    }
    // f(s) = log φ(s) - log s is positive below the root and negative on (q, 1).
    let f = |s: f64| off.ln_pgf(s).expect("s in [0,1)") - s.ln();
    let mut lo = 1e-300;
    if f(lo) <= 0.0 {
        // q below 1e-300: iterate s ← φ(s) from 0, which converges from below.
        let mut s = 0.0;
        for _ in 0..200 {
            s = off.ln_pgf(s).expect("s in [0,1)").exp();
        }
        return s;
    }
    let mut hi = 1.0 - 1e-15;
    if f(hi) >= 0.0 {
        return 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    // Newton polish on g(s) = φ(s) - s
    let mut s = 0.5 * (lo + hi);
    for _ in 0..3 {
        let h = 1e-7 * s.max(1e-300);
        let phi = |x: f64| off.ln_pgf(x).expect("x in [0,1)").exp();
        let g = phi(s) - s;
        let dg = (phi(s + h) - phi(s - h)) / (2.0 * h) - 1.0;
        let next = s - g / dg;
        if next > lo && next < hi {
            s = next;
        }
    }
    s
}

/// `P(T^{(u)} = k)` for the offspring law `CPGeo::from_model(eps, t)`.
pub fn progeny_pmf(u: u32, eps: f64, t: f64, k: u64) -> Result<f64> {
    if u == 0 {
        return Err(out_of_range("u", 0.0, "[1, ∞)"));
    }
    if k < u64::from(u) {
        return Err(out_of_range("k", k as f64, format!("[{u}, ∞)")));
    }
    Ok(progeny_pmf_law(&CPGeo::from_model(eps, t)?, u, k))
}

/// `P(T^{(u)} = k) = (u/k) e^{-kλ} (1-p)^{k-u} Σ_{j=1}^{k-u} C(k-u-1, j-1) c^j / j!`
/// with `c = kλp/(1-p)`; `e^{-uλ}` at `k = u`.
pub fn progeny_pmf_law(law: &CPGeo, u: u32, k: u64) -> f64 {
    let uu = u64::from(u);
    if k < uu || u == 0 {
        return 0.0;
    }
    let (lam, p) = (law.lambda, law.p);
    let kf = k as f64;
    if k == uu {
        return (-kf * lam).exp();
    }
    if lam == 0.0 {
        return 0.0;
    }
    let m = k - uu;
    let lq = (-p).ln_1p();
    let lc = kf.ln() + lam.ln() + p.ln() - lq;
    let mut lt = lc;
    let mut acc = LogSum::new();
    acc.add(lt);
    for j in 1..m {
        let jf = j as f64;
        lt += lc + ((m - j) as f64).ln() - jf.ln() - (jf + 1.0).ln();
        acc.add(lt);
    }
    (f64::from(u).ln() - kf.ln() - kf * lam + (m as f64) * lq + acc.value()).exp()
}

/// Both sides of the hitting-time identity: the closed-form progeny pmf and
/// `(u/k)` times the `k`-fold convolution of [`cp_pmf`] evaluated at `k - u`.
pub fn dwass_identity_check(u: u32, law: &CPGeo, k: u64) -> Result<(f64, f64)> {
    if u == 0 || k < u64::from(u) {
        return Err(out_of_range("k", k as f64, format!("[{u}, ∞) with u ≥ 1")));
    }
    let target = (k - u64::from(u)) as usize;
    let base: Vec<f64> = (0..=target as u64).map(|m| cp_pmf(law, m)).collect();
    let mut acc = vec![0.0; target + 1];
    acc[0] = 1.0;
    for _ in 0..k {
        acc = convolve_truncated(&acc, &base, target + 1);
    }
    let rhs = f64::from(u) / k as f64 * acc[target];
    Ok((progeny_pmf_law(law, u, k), rhs))
}

pub(crate) fn convolve_truncated(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &x) in a.iter().enumerate().take(len) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Law of the supercritical process conditioned on extinction:
/// `p̃ = 1 - q(1-p)`, `λ̃ = λ q p / p̃`.
pub fn dual_params(law: &CPGeo) -> Result<CPGeo> {
    if !law.is_supercritical() {
        return Err(Error::InvalidParams(format!(
            "dual law needs a supercritical law, mean is {}",
            law.mean()
        )));
    }
    let q = extinction_prob(law);
    let pt = 1.0 - q * (1.0 - law.p);
    CPGeo::new(law.lambda * q * law.p / pt, pt)
}

/// `h(t) = sup_{θ ∈ (0, log(ε+1))} θ - log L(θ)`.
pub fn cramer_h(eps: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(out_of_range("t", t, "(0, ∞)"));
    }
    Ok(Offspring::CpGeo(CPGeo::from_model(eps, t)?).cramer_h())
}

/// `I_t = sup_{θ ≥ 0} -log L(-θ) - θ` for `t > ε²`.
pub fn tail_rate_i(eps: f64, t: f64) -> Result<f64> {
    let law = CPGeo::from_model(eps, t)?;
    if !law.is_supercritical() {
        return Err(Error::InvalidParams(format!(
            "tail rate needs t > eps^2 (t = {t}, eps = {eps})"
        )));
    }
    Ok(Offspring::CpGeo(law).tail_rate_i())
}

/// `P(T^{(u,j)} = u + (j-1)m) = (u/m!) (u+(j-1)m)^{m-1} t^m e^{-(u+(j-1)m)t}`,
/// zero off the lattice `u + (j-1)ℕ`.
pub fn fixed_length_progeny_pmf(u: u32, j: u32, t: f64, k: u64) -> f64 {
    let uu = u64::from(u);
    if u == 0 || j < 2 || k < uu {
        return 0.0;
    }
    let step = u64::from(j - 1);
    if !(k - uu).is_multiple_of(step) {
        return 0.0;
    }
    let m = (k - uu) / step;
    let kf = k as f64;
    if m == 0 {
        return (-kf * t).exp();
    }
    if t == 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    (f64::from(u).ln() - ln_gamma(mf + 1.0) + (mf - 1.0) * kf.ln() + mf * t.ln() - kf * t).exp()
}

/// Outcome of one simulated Galton-Watson total progeny.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GwRun {
    Extinct(u64),
    /// The walk was still alive after `cap` steps.
    Censored(u64),
}

/// Total progeny through the walk `S_k = u + Σ_{i≤k} (X_i - 1)`, stopped at
/// its first zero or after `cap` steps.
pub fn simulate_gw<R: Rng + ?Sized>(off: &Offspring, u: u32, cap: u64, rng: &mut R) -> GwRun {
    let mut active = u64::from(u);
    let mut k = 0u64;
    while active > 0 {
        if k >= cap {
            return GwRun::Censored(k);
        }
        k += 1;
        active = active + off.sample(rng) - 1;
    }
    GwRun::Extinct(k)
}

/// Seeded [`simulate_gw`].
pub fn simulate_gw_seeded(off: &Offspring, u: u32, cap: u64, seed: u64) -> GwRun {
    simulate_gw(off, u, cap, &mut crate::rng::stream(seed, 0))
}

/// Total variation over a finite support, with a bound on what lies outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvDistance {
    /// `(1/2) Σ |p1 - p2|` over the supplied support.
    pub distance: f64,
    /// Bound on the contribution of the missing mass of both pmfs.
    pub tail_bound: f64,
}

pub fn tv_distance(pmf1: &[f64], pmf2: &[f64]) -> Result<TvDistance> {
    if pmf1.iter().chain(pmf2).any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidParams("pmf entries must be nonnegative".into()));
    }
    let len = pmf1.len().max(pmf2.len());
    let at = |p: &[f64], i: usize| p.get(i).copied().unwrap_or(0.0);
    let distance = 0.5 * (0..len).map(|i| (at(pmf1, i) - at(pmf2, i)).abs()).sum::<f64>();
    let miss1 = (1.0 - pmf1.iter().sum::<f64>()).max(0.0);
    let miss2 = (1.0 - pmf2.iter().sum::<f64>()).max(0.0);
    Ok(TvDistance {
        distance,
        tail_bound: 0.5 * (miss1 + miss2),
    })
}

/// Compound Poisson pmf on `0..=kmax` by Panjer's recursion; `jump[0]` is ignored.
pub fn compound_poisson_pmf(rate: f64, jump: &[f64], kmax: usize) -> Vec<f64> {
    let mut g = vec![0.0; kmax + 1];
    let jump_mass: f64 = jump.iter().skip(1).sum();
    g[0] = (-rate * jump_mass).exp();
    for m in 1..=kmax {
        let mut s = 0.0;
        for i in 1..=m.min(jump.len().saturating_sub(1)) {
            s += i as f64 * jump[i] * g[m - i];
        }
        g[m] = rate * s / m as f64;
    }
    g
}

/// Maximize a unimodal `f` on `[a, b]` by golden-section search.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let (fa, fb) = (f(a), f(b));
    [(x, fx), (a, fa), (b, fb)]
        .into_iter()
        .filter(|(_, v)| v.is_finite())
        .fold((x, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
}

/// Total progeny law on `u..=k_max` with an adaptive, rigorously bounded cutoff.
#[derive(Debug, Clone, Serialize)]
pub struct ProgenyLaw {
    pub u: u32,
    pub offspring: Offspring,
    /// `pmf[k] = P(T = k)`; zero for `k < u`.
    pub pmf: Vec<f64>,
    /// `1 - q^u`, the probability that `T` is infinite.
    pub defect: f64,
    pub extinction: f64,
    /// Upper bound on `P(k_max < T < ∞)`.
    pub tail_bound: f64,
}

/// Largest support the adaptive cutoff will grow to.
pub const PROGENY_MAX_SUPPORT: u64 = 200_000;

impl ProgenyLaw {
    /// Extends the support until the tail bound falls below `tol` or
    /// [`PROGENY_MAX_SUPPORT`] is reached.
    ///
    /// The bound is `e^{θ* u} e^{-k h}` (Chernoff at the maximizer of the
    /// Cramér transform) when subcritical and `u e^{-kI/u} / (1 - e^{-I})`
    /// when supercritical. Critical laws only get the cap.
    pub fn new(offspring: Offspring, u: u32, tol: f64) -> Result<Self> {
        if u == 0 {
            return Err(out_of_range("u", 0.0, "[1, ∞)"));
        }
        let q = offspring.extinction_prob();
        let uf = f64::from(u);
        let mean = offspring.mean();
        let bound: Box<dyn Fn(u64) -> f64> = if mean < 1.0 {
            let h = offspring.cramer_h();
            let th = offspring.cramer_theta();
            Box::new(move |k| (th * uf - k as f64 * h).exp())
        } else if mean > 1.0 {
            let i = offspring.tail_rate_i();
            Box::new(move |k| uf * (-(k as f64) * i / uf).exp() / -(-i).exp_m1())
        } else {
            Box::new(|_| 1.0)
        };
        let mut kmax = u64::from(u);
        while bound(kmax) > tol && kmax < PROGENY_MAX_SUPPORT {
            kmax = (kmax * 2).max(16).min(PROGENY_MAX_SUPPORT);
        }
        // shrink back to the first k meeting the tolerance
        if bound(kmax) <= tol {
            let (mut lo, mut hi) = (u64::from(u), kmax);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if bound(mid) <= tol {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            kmax = hi;
        }
        let pmf = (0..=kmax).map(|k| offspring.progeny_pmf(u, k)).collect();
        Ok(Self {
            u,
            offspring,
            pmf,
            defect: 1.0 - q.powi(u as i32),
            extinction: q,
            tail_bound: bound(kmax).min(1.0),
        })
    }

    pub fn k_max(&self) -> u64 {
        self.pmf.len() as u64 - 1
    }

    pub fn mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    pub fn cdf(&self, k: u64) -> f64 {
        self.pmf.iter().take(k as usize + 1).sum()
    }
}
