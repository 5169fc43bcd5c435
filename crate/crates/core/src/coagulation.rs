//! Multi-collision coagulation equations with multiplicative kernels.
//!
//! The full system is `dρ(k)/dt = Σ_{j≥2} (ε+1)^{-j} G_j(ρ, k)` and the
//! fixed-arity system is `dρ(k)/dt = G_j(ρ, k)`, where
//!
//! ```text
//! G_j(ρ,k) = (1/j) (a^{*j})(k) − kρ(k) m1^{j−1} − kρ(k) Σ_{h=1}^{j−1} C(j−1,h) g^h m1^{j−1−h}
//! ```
//!
//! with `a_i = iρ(i)`, `m1 = Σ iρ(i)` and gel mass `g = m0 − m1`. Because the
//! gain at `k` only involves sizes below `k`, the truncated system is exact for
//! every `k ≤ K`; mass that flows past `K` is attributed to the gel.

use std::io::Write;

use serde::Serialize;

use crate::error::{out_of_range, Error, Result};
use crate::gw_analytics::{
    fixed_length_progeny_pmf, progeny_pmf, CPGeo, FixedLengthOffspring, Offspring,
};

/// Truncated cluster-density profile `ρ(1..=K)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityVector {
    /// `rho[k-1] = ρ(k)`.
    rho: Vec<f64>,
    m0: f64,
    t: f64,
}

impl DensityVector {
    /// `m0` is the initial first moment, the reference for the gel mass.
    pub fn new(rho: Vec<f64>, m0: f64, t: f64) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::Config("density profile must have K ≥ 1".into()));
        }
        if let Some((i, &v)) = rho.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(out_of_range("rho", v, format!("[0, ∞) at k = {}", i + 1)));
        }
        if !(m0 >= 0.0 && m0.is_finite()) {
            return Err(out_of_range("m0", m0, "[0, ∞)"));
        }
        Ok(Self { rho, m0, t })
    }

    /// `ρ = δ₁` on `1..=K`, with `m0 = 1`.
    pub fn monodisperse(k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Config("density profile must have K ≥ 1".into()));
        }
        let mut rho = vec![0.0; k_max];
        rho[0] = 1.0;
        Ok(Self { rho, m0: 1.0, t: 0.0 })
    }

    pub fn k_max(&self) -> usize {
        self.rho.len()
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// `ρ(k)`, zero outside `1..=K`.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.rho.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rho
    }

    /// `Σ_k k^r ρ(k)` over the truncation.
    pub fn moment(&self, r: u32) -> f64 {
        self.rho
            .iter()
            .enumerate()
            .map(|(i, &v)| ((i + 1) as f64).powi(r as i32) * v)
            .sum()
    }

    pub fn m1(&self) -> f64 {
        self.moment(1)
    }

    /// `m0 − m1`.
    pub fn gel(&self) -> f64 {
        self.m0 - self.m1()
    }
}

/// Free-function form of [`DensityVector::moment`].
pub fn moments(rho: &DensityVector, r: u32) -> f64 {
    rho.moment(r)
}

fn check_arity(j: u32, jmax: u32) -> Result<()> {
    if j < 2 || j > jmax {
        return Err(out_of_range("j", f64::from(j), format!("[2, {jmax}]")));
    }
    Ok(())
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Per-step building blocks of `G_j` for every `j` up to `jmax`.
struct Terms {
    /// `conv[j][k-1] = (a^{*j})(k)`; rows 0 and 1 unused except row 1 = a.
    conv: Vec<Vec<f64>>,
    /// `loss[j] = m1^{j−1} + Σ_h C(j−1,h) g^h m1^{j−1−h}`.
    loss: Vec<f64>,
}

impl Terms {
    fn new(rho: &[f64], m0: f64, jmax: u32, only: Option<u32>) -> Self {
        let kk = rho.len();
        let a: Vec<f64> = rho.iter().enumerate().map(|(i, &v)| (i + 1) as f64 * v).collect();
        let m1: f64 = a.iter().sum();
        let g = m0 - m1;
        let jm = jmax as usize;
        let mut conv = vec![Vec::new(); jm + 1];
        conv[1] = a.clone();
        for j in 2..=jm {
            // indices are shifted: conv[j][k-1] holds size k
            let prev = &conv[j - 1];
            let mut next = vec![0.0; kk];
            for (ip, &pv) in prev.iter().enumerate() {
                if pv == 0.0 {
                    continue;
                }
                for (ia, &av) in a.iter().enumerate() {
                    let idx = ip + ia + 1;
                    if idx >= kk {
                        break;
                    }
                    next[idx] += pv * av;
                }
            }
            conv[j] = next;
        }
        let loss = (0..=jmax)
            .map(|j| {
                if j < 2 || only.is_some_and(|o| o != j) {
                    return 0.0;
                }
                let e = j - 1;
                let gel: f64 = (1..=e)
                    .map(|h| binomial(e, h) * g.powi(h as i32) * m1.powi((e - h) as i32))
                    .sum();
                m1.powi(e as i32) + gel
            })
            .collect();
        Self { conv, loss }
    }

    fn g(&self, rho: &[f64], j: u32, k: usize) -> f64 {
        let gain = if (j as usize) <= k {
            self.conv[j as usize][k - 1] / f64::from(j)
        } else {
            0.0
        };
        gain - k as f64 * rho[k - 1] * self.loss[j as usize]
    }
}

/// `G_j(ρ, k)` for `2 ≤ j` and `1 ≤ k ≤ K`.
pub fn g_j(rho: &DensityVector, j: u32, k: usize) -> Result<f64> {
    check_arity(j, u32::MAX)?;
    if k == 0 || k > rho.k_max() {
        return Err(out_of_range("k", k as f64, format!("[1, {}]", rho.k_max())));
    }
    // arities above k contribute no gain, so the convolution depth can be capped
    let depth = j.min(k as u32).max(2);
    let mut terms = Terms::new(&rho.rho, rho.m0, depth, None);
    if depth < j {
        terms.loss = loss_only(rho, j);
    }
    Ok(terms.g(&rho.rho, j, k))
}

fn loss_only(rho: &DensityVector, j: u32) -> Vec<f64> {
    let m1 = rho.m1();
    let g = rho.m0 - m1;
    let e = j - 1;
    let mut v = vec![0.0; j as usize + 1];
    v[j as usize] = m1.powi(e as i32)
        + (1..=e)
            .map(|h| binomial(e, h) * g.powi(h as i32) * m1.powi((e - h) as i32))
            .sum::<f64>();
    v
}

/// Right-hand side of the full system together with a bound on the dropped arities.
#[derive(Debug, Clone, Serialize)]
pub struct Rhs {
    pub values: Vec<f64>,
    /// Upper bound on `sup_k |Σ_{j>Jmax} (ε+1)^{-j} G_j(ρ,k)|`.
    pub tail_bound: f64,
}

fn rhs_full_raw(rho: &[f64], m0: f64, eps: f64, jmax: u32) -> Vec<f64> {
    let terms = Terms::new(rho, m0, jmax, None);
    let r = 1.0 / (eps + 1.0);
    (1..=rho.len())
        .map(|k| {
            let mut w = r;
            let mut s = 0.0;
            for j in 2..=jmax {
                w *= r;
                s += w * terms.g(rho, j, k);
            }
            s
        })
        .collect()
}

fn rhs_fixed_raw(rho: &[f64], m0: f64, j: u32) -> Vec<f64> {
    let terms = Terms::new(rho, m0, j, Some(j));
    (1..=rho.len()).map(|k| terms.g(rho, j, k)).collect()
}

/// `Σ_{j=2}^{Jmax} (ε+1)^{-j} G_j(ρ,k)` for every `k ≤ K`.
///
/// The tail bound uses `|G_j| ≤ M^j / j + kρ(k) M^{j−1}` with
/// `M = max(m0, m1, |g| + m1)`, summed geometrically.
pub fn rhs_full(rho: &DensityVector, eps: f64, jmax: u32) -> Result<Rhs> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(out_of_range("eps", eps, "(0, ∞)"));
    }
    check_arity(2, jmax)?;
    let values = rhs_full_raw(&rho.rho, rho.m0, eps, jmax);
    let m1 = rho.m1();
    let big = rho.m0.max(m1).max((rho.m0 - m1).abs() + m1);
    let x = big / (eps + 1.0);
    let tail_bound = if x >= 1.0 {
        f64::INFINITY
    } else {
        let kr = rho
            .rho
            .iter()
            .enumerate()
            .map(|(i, &v)| (i + 1) as f64 * v)
            .fold(0.0, f64::max);
        let geo = x.powi(jmax as i32 + 1) / (1.0 - x);
        geo / f64::from(jmax + 1) + kr * geo / big.max(f64::MIN_POSITIVE)
    };
    Ok(Rhs { values, tail_bound })
}

/// `G_j(ρ,k)` for every `k ≤ K`, the right-hand side of the fixed-arity system.
pub fn rhs_fixed_j(rho: &DensityVector, j: u32) -> Result<Vec<f64>> {
    check_arity(j, u32::MAX)?;
    Ok(rhs_fixed_raw(&rho.rho, rho.m0, j))
}

/// Solver settings. `fixed_j = Some(j)` selects the fixed-arity system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub k_max: usize,
    pub jmax: u32,
    pub dt: f64,
    pub eps: f64,
    pub fixed_j: Option<u32>,
}

pub const DEFAULT_DT: f64 = 1e-3;
/// Values below this before clamping are treated as step-size instability.
pub const NEGATIVITY_TOL: f64 = -1e-8;

impl SolverConfig {
    pub fn new(k_max: usize, jmax: u32, dt: f64, eps: f64) -> Result<Self> {
        let c = Self {
            k_max,
            jmax,
            dt,
            eps,
            fixed_j: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn fixed(k_max: usize, j: u32, dt: f64) -> Result<Self> {
        let c = Self {
            k_max,
            jmax: j,
            dt,
            eps: 1.0,
            fixed_j: Some(j),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.jmax < 2 || (self.k_max as u64) < u64::from(self.jmax) {
            return Err(Error::Config(format!(
                "need K ≥ Jmax ≥ 2, got K = {}, Jmax = {}",
                self.k_max, self.jmax
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(out_of_range("dt", self.dt, "(0, ∞)"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(out_of_range("eps", self.eps, "(0, ∞)"));
        }
        if let Some(j) = self.fixed_j {
            if j != self.jmax {
                return Err(Error::Config("fixed_j must equal Jmax".into()));
            }
        }
        Ok(())
    }

    /// Last time for which the analytic solution is mass conserving:
    /// `ε²` for the full system, `1/(j−1)` for fixed arity `j`.
    pub fn validated_until(&self) -> f64 {
        match self.fixed_j {
            Some(j) => 1.0 / f64::from(j - 1),
            None => self.eps * self.eps,
        }
    }

    fn rhs(&self, rho: &[f64], m0: f64) -> Vec<f64> {
        match self.fixed_j {
            Some(j) => rhs_fixed_raw(rho, m0, j),
            None => rhs_full_raw(rho, m0, self.eps, self.jmax),
        }
    }
}

/// RK4 output.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub states: Vec<DensityVector>,
    /// Number of entries set from a small negative value to zero.
    pub clamp_events: u64,
    /// Mass outflow rate `−Σ_k k dρ(k)/dt` at each output state.
    pub mass_flux_out: Vec<f64>,
    /// True when the run extends past the mass-conserving window.
    pub unvalidated: bool,
}

/// Integrates with classical fixed-step RK4 and records the state at each
/// output time (sorted, within `[rho0.t, t_end]`; `t_end` is always included).
///
/// Between outputs the interval is split into `ceil(Δ/dt)` equal steps.
pub fn integrate(
    rho0: &DensityVector,
    t_end: f64,
    config: &SolverConfig,
    output_times: &[f64],
) -> Result<Trajectory> {
    config.validate()?;
    if rho0.k_max() != config.k_max {
        return Err(Error::Config(format!(
            "initial profile has K = {}, config has K = {}",
            rho0.k_max(),
            config.k_max
        )));
    }
    let t0 = rho0.t;
    if !(t_end >= t0 && t_end.is_finite()) {
        return Err(out_of_range("t_end", t_end, format!("[{t0}, ∞)")));
    }
    let mut outs: Vec<f64> = output_times.to_vec();
    if outs.iter().any(|&t| !(t >= t0 && t <= t_end)) || outs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("output times must be sorted within [t0, t_end]".into()));
    }
    if outs.last() != Some(&t_end) {
        outs.push(t_end);
    }
    let m0 = rho0.m0;
    let mut y = rho0.rho.clone();
    let mut t = t0;
    let mut clamp_events = 0u64;
    let mut states = Vec::with_capacity(outs.len());
    let mut flux = Vec::with_capacity(outs.len());
    let record = |y: &[f64], t: f64, states: &mut Vec<DensityVector>, flux: &mut Vec<f64>| {
        let d = config.rhs(y, m0);
        flux.push(-d.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum::<f64>());
        states.push(DensityVector {
            rho: y.to_vec(),
            m0,
            t,
        });
    };
    for &target in &outs {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / config.dt).ceil().max(1.0) as u64;
            let h = span / steps as f64;
            for s in 0..steps {
                rk4_step(&mut y, h, |v| config.rhs(v, m0));
                let ts = t + (s + 1) as f64 * h;
                for (i, v) in y.iter_mut().enumerate() {
                    if *v < 0.0 {
                        if *v < NEGATIVITY_TOL {
                            return Err(Error::Unstable {
                                t: ts,
                                k: i + 1,
                                value: *v,
                            });
                        }
                        *v = 0.0;
                        clamp_events += 1;
                    }
                }
            }
            t = target;
        }
        record(&y, target, &mut states, &mut flux);
    }
    Ok(Trajectory {
        states,
        clamp_events,
        mass_flux_out: flux,
        unvalidated: t_end > config.validated_until(),
    })
}

fn rk4_step<F: Fn(&[f64]) -> Vec<f64>>(y: &mut [f64], h: f64, f: F) {
    let k1 = f(y);
    let stage = |k: &[f64], c: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    let k2 = f(&stage(&k1, h / 2.0));
    let k3 = f(&stage(&k2, h / 2.0));
    let k4 = f(&stage(&k3, h));
    for i in 0..y.len() {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// `ρ_{ε,t}(k) = P(T = k) / k` for the one-ancestor total progeny.
pub fn analytic_rho(eps: f64, t: f64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(out_of_range("k", 0.0, "[1, ∞)"));
    }
    Ok(progeny_pmf(1, eps, t, k)? / k as f64)
}

/// `ρ^{(j)}_t(k) = e^{-tk} (tk)^{(k−1)/(j−1)} / (k² ((k−1)/(j−1))!)`, zero off the lattice.
pub fn analytic_rho_fixed_j(j: u32, t: f64, k: u64) -> Result<f64> {
    if j < 2 {
        return Err(out_of_range("j", f64::from(j), "[2, ∞)"));
    }
    if k == 0 {
        return Err(out_of_range("k", 0.0, "[1, ∞)"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(out_of_range("t", t, "[0, ∞)"));
    }
    Ok(fixed_length_progeny_pmf(1, j, t, k) / k as f64)
}

/// Analytic profile on `1..=k_max` with `m0 = 1`.
pub fn analytic_profile(eps: f64, t: f64, k_max: usize) -> Result<DensityVector> {
    let law = CPGeo::from_model(eps, t)?;
    let off = Offspring::CpGeo(law);
    let rho = (1..=k_max as u64).map(|k| off.progeny_pmf(1, k) / k as f64).collect();
    DensityVector::new(rho, 1.0, t)
}

pub fn analytic_profile_fixed_j(j: u32, t: f64, k_max: usize) -> Result<DensityVector> {
    FixedLengthOffspring::new(j, t)?;
    let rho = (1..=k_max as u64)
        .map(|k| fixed_length_progeny_pmf(1, j, t, k) / k as f64)
        .collect();
    DensityVector::new(rho, 1.0, t)
}

/// First and second moments of an analytic profile with a bounded tail.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnalyticMoments {
    pub m1: f64,
    pub m2: f64,
    pub k_max: u64,
    /// Upper bound on the omitted part of `m2` (and hence of `m1`).
    pub tail_bound: f64,
}

/// Moments of `ρ(k) = P(T=k)/k` for a subcritical offspring law.
///
/// The cutoff `K` is the first one where the Chernoff bound
/// `e^{θ*} e^{-(K+1)h} (K + 1/(1 − e^{-h}))` on `Σ_{k>K} k P(T=k)` is below `tol`.
pub fn analytic_moments(offspring: Offspring, tol: f64) -> Result<AnalyticMoments> {
    if offspring.mean() >= 1.0 {
        return Err(out_of_range("offspring mean", offspring.mean(), "[0, 1)"));
    }
    if !(tol > 0.0) {
        return Err(out_of_range("tol", tol, "(0, ∞)"));
    }
    let h = offspring.cramer_h();
    let th = offspring.cramer_theta();
    let bound = |k: u64| {
        let kf = k as f64;
        (th - (kf + 1.0) * h).exp() * (kf + 1.0 / -(-h).exp_m1())
    };
    let mut k_max = 1u64;
    while bound(k_max) > tol {
        k_max *= 2;
        if k_max > 1 << 24 {
            return Err(Error::Truncation {
                terms: k_max as usize,
            });
        }
    }
    let (mut lo, mut hi) = (k_max / 2, k_max);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if bound(mid) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let k_max = hi;
    let (m1, m2) = (1..=k_max).fold((0.0, 0.0), |(a, b), k| {
        let p = offspring.progeny_pmf(1, k);
        (a + p, b + k as f64 * p)
    });
    Ok(AnalyticMoments {
        m1,
        m2,
        k_max,
        tail_bound: bound(k_max),
    })
}

/// Result of checking that an analytic profile solves its equation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residual {
    /// `sup_k |Δρ(k)/Δt − rhs(k)|` with a central difference.
    pub residual: f64,
    pub worst_k: usize,
    /// Contribution of arities above `Jmax` (zero for fixed arity).
    pub truncation_tail: f64,
}

fn residual_of(
    minus: &DensityVector,
    plus: &DensityVector,
    rhs: &[f64],
    fd: f64,
    tail: f64,
) -> Residual {
    let (worst_k, residual) = minus
        .rho
        .iter()
        .zip(&plus.rho)
        .zip(rhs)
        .enumerate()
        .map(|(i, ((a, b), r))| (i + 1, ((b - a) / (2.0 * fd) - r).abs()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    Residual {
        residual,
        worst_k,
        truncation_tail: tail,
    }
}

/// Residual of the analytic full-system solution at `t ∈ (0, ε²)`.
pub fn residual(eps: f64, t: f64, config: &SolverConfig, fd_step: f64) -> Result<Residual> {
    config.validate()?;
    if !(t > 0.0 && t < eps * eps) {
        return Err(out_of_range("t", t, format!("(0, {})", eps * eps)));
    }
    if !(fd_step > 0.0 && fd_step < t) {
        return Err(out_of_range("fd_step", fd_step, format!("(0, {t})")));
    }
    let here = analytic_profile(eps, t, config.k_max)?;
    let rhs = rhs_full(&here, eps, config.jmax)?;
    let minus = analytic_profile(eps, t - fd_step, config.k_max)?;
    let plus = analytic_profile(eps, t + fd_step, config.k_max)?;
    Ok(residual_of(&minus, &plus, &rhs.values, fd_step, rhs.tail_bound))
}

/// Residual of the analytic fixed-arity solution at `t ∈ (0, 1/(j−1))`.
pub fn residual_fixed_j(j: u32, t: f64, k_max: usize, fd_step: f64) -> Result<Residual> {
    check_arity(j, u32::MAX)?;
    let tc = 1.0 / f64::from(j - 1);
    if !(t > 0.0 && t < tc) {
        return Err(out_of_range("t", t, format!("(0, {tc})")));
    }
    if !(fd_step > 0.0 && fd_step < t) {
        return Err(out_of_range("fd_step", fd_step, format!("(0, {t})")));
    }
    let here = analytic_profile_fixed_j(j, t, k_max)?;
    let rhs = rhs_fixed_j(&here, j)?;
    let minus = analytic_profile_fixed_j(j, t - fd_step, k_max)?;
    let plus = analytic_profile_fixed_j(j, t + fd_step, k_max)?;
    Ok(residual_of(&minus, &plus, &rhs, fd_step, 0.0))
}

/// Writes `t,k,rho` rows for every state.
pub fn write_rho_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    writeln!(w, "t,k,rho")?;
    for s in &traj.states {
        for (i, v) in s.rho.iter().enumerate() {
            writeln!(w, "{},{},{}", s.t, i + 1, v)?;
        }
    }
    Ok(())
}

/// Writes `t,m1,m2,gel` rows for every state.
pub fn write_moments_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    writeln!(w, "t,m1,m2,gel")?;
    for s in &traj.states {
        writeln!(w, "{},{},{},{}", s.t, s.m1(), s.moment(2), s.gel())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compositions(k: usize, j: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if j == 0 {
            if k == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for i in 1..=k {
            prefix.push(i);
            compositions(k - i, j - 1, prefix, out);
            prefix.pop();
        }
    }

    #[test]
    fn gain_matches_brute_force_compositions() {
        // integer densities keep every product and sum exact
        for kk in 1..=12usize {
            let rho: Vec<f64> = (1..=kk).map(|i| ((i * 7) % 5) as f64).collect();
            let dv = DensityVector::new(rho.clone(), 0.0, 0.0).unwrap();
            let m1: f64 = rho.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
            for j in 2..=4u32 {
                for k in 1..=kk {
                    let mut all = Vec::new();
                    compositions(k, j as usize, &mut Vec::new(), &mut all);
                    let sum: f64 = all
                        .iter()
                        .map(|c| c.iter().map(|&i| i as f64 * rho[i - 1]).product::<f64>())
                        .sum();
                    let gain = if j as usize <= k { sum / f64::from(j) } else { 0.0 };
                    let g = m0_gel_loss(k, &rho, m1, 0.0, j);
                    assert_eq!(g_j(&dv, j, k).unwrap(), gain - g, "K={kk} j={j} k={k}");
                }
            }
        }
    }

    /// Loss terms written exactly as in the equation, for an independent check.
    fn m0_gel_loss(k: usize, rho: &[f64], m1: f64, m0: f64, j: u32) -> f64 {
        let g = m0 - m1;
        let kr = k as f64 * rho[k - 1];
        let mut s = kr * m1.powi(j as i32 - 1);
        for h in 1..j {
            let c = (1..=h).fold(1.0, |a, i| a * f64::from(j - i) / f64::from(i));
            s += kr * c * g.powi(h as i32) * m1.powi((j - 1 - h) as i32);
        }
        s
    }

    #[test]
    fn monodisperse_values() {
        let mut rho = DensityVector::monodisperse(5).unwrap();
        assert_eq!(g_j(&rho, 2, 2).unwrap(), 0.5);
        assert_eq!(g_j(&rho, 3, 2).unwrap(), 0.0);
        assert_eq!(g_j(&rho, 2, 1).unwrap(), -1.0);
        assert_eq!(rho.m1(), 1.0);
        assert_eq!(rho.moment(2), 1.0);
        assert!(g_j(&rho, 1, 1).is_err());
        assert!(g_j(&rho, 2, 6).is_err());
        assert!(g_j(&rho, 2, 0).is_err());
        rho.rho = vec![0.0; 5];
        let r = rhs_full(&rho, 1.0, 5).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn k1_rate_is_geometric_sum() {
        let rho = DensityVector::monodisperse(60).unwrap();
        for eps in [0.5, 1.0, 3.0] {
            let exact = -1.0 / (eps * (eps + 1.0));
            let mut prev = f64::INFINITY;
            for jmax in [2u32, 5, 10, 20, 40, 60] {
                let r = rhs_full(&rho, eps, jmax).unwrap();
                let err = (r.values[0] - exact).abs();
                assert!(err <= prev);
                let partial: f64 = (2..=jmax).map(|j| (eps + 1.0).powi(-(j as i32))).sum();
                assert!((r.values[0] + partial).abs() < 1e-15);
                assert!(err <= r.tail_bound * (1.0 + 1e-12));
                prev = err;
            }
            if eps >= 1.0 {
                assert!(prev < 1e-11, "eps={eps} err={prev}");
            }
        }
    }

    /// j = 2 with the (ε+1)^{-2} weight removed is Flory's equation.
    #[test]
    fn flory_reduction() {
        let prof = analytic_profile(1.0, 0.4, 30).unwrap();
        let mut rho = prof.rho.clone();
        rho[3] *= 0.9;
        rho[10] *= 0.7;
        let dv = DensityVector::new(rho.clone(), 1.0, 0.0).unwrap();
        let n = |x: usize| rho[x - 1];
        let n0 = |x: usize| if x == 1 { 1.0 } else { 0.0 };
        for x in 1..=30 {
            let gain: f64 = (1..x).map(|y| (y * (x - y)) as f64 * n(y) * n(x - y)).sum::<f64>() / 2.0;
            let coll: f64 = (1..=30).map(|y| (x * y) as f64 * n(x) * n(y)).sum();
            let gel: f64 = x as f64 * n(x) * (1..=30).map(|y| y as f64 * (n0(y) - n(y))).sum::<f64>();
            let flory = gain - coll - gel;
            let full = rhs_full(&dv, 1.0, 2).unwrap().values[x - 1] * 4.0;
            assert!((full - flory).abs() < 1e-15, "x={x}: {full} vs {flory}");
            assert!((rhs_fixed_j(&dv, 2).unwrap()[x - 1] - flory).abs() < 1e-15);
        }
    }

    #[test]
    fn fixed_and_full_agree_for_binary() {
        let dv = analytic_profile_fixed_j(2, 0.3, 25).unwrap();
        let full = rhs_full(&dv, 0.7, 2).unwrap().values;
        let fixed = rhs_fixed_j(&dv, 2).unwrap();
        for (a, b) in full.iter().zip(&fixed) {
            assert!((a * 1.7f64.powi(2) - b).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_examples() {
        assert!((analytic_rho(1.0, 0.5, 1).unwrap() - (-0.25f64).exp()).abs() < 1e-15);
        assert!((analytic_rho(1.0, 0.5, 1).unwrap() - 0.7788).abs() < 1e-4);
        let want = 1.5f64.powi(2) * (-1.5f64).exp() / 18.0;
        let got = analytic_rho_fixed_j(2, 0.5, 3).unwrap();
        assert!((got - want).abs() < 1e-13 * want);
        assert!((got - 0.0278913).abs() < 1e-7);
        assert_eq!(analytic_rho_fixed_j(3, 0.4, 4).unwrap(), 0.0);
        assert_eq!(analytic_rho(1.0, 0.0, 1).unwrap(), 1.0);
        assert_eq!(analytic_rho(1.0, 0.0, 2).unwrap(), 0.0);
        assert_eq!(analytic_rho_fixed_j(3, 0.0, 1).unwrap(), 1.0);
        assert_eq!(analytic_rho_fixed_j(3, 0.0, 3).unwrap(), 0.0);
        // j = 2 is the Borel-Tanner profile (tx)^{x-1} e^{-tx} / (x · x!)
        for x in 1..15u64 {
            let t: f64 = 0.7;
            let fact: f64 = (1..=x).map(|i| i as f64).product();
            let bt = (t * x as f64).powi(x as i32 - 1) * (-t * x as f64).exp() / (x as f64 * fact);
            let got = analytic_rho_fixed_j(2, t, x).unwrap();
            assert!((got - bt).abs() < 1e-13 * bt);
        }
    }

    #[test]
    fn second_moment_blows_up_like_inverse_distance() {
        for (eps, t) in [(1.0, 0.5), (1.0, 0.9), (2.0, 1.0)] {
            let m = analytic_moments(Offspring::CpGeo(CPGeo::from_model(eps, t).unwrap()), 1e-7).unwrap();
            let want = 1.0 / (1.0 - t / (eps * eps));
            assert!((m.m2 - want).abs() < 1e-6 * want, "eps={eps} t={t}: {} vs {want}", m.m2);
            assert!((m.m1 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn residual_of_analytic_solution() {
        let cfg = SolverConfig::new(50, 40, DEFAULT_DT, 1.0).unwrap();
        let r = residual(1.0, 0.3, &cfg, 1e-5).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
        let mut prev = 0.0;
        for jmax in [40u32, 10, 6, 4, 3, 2] {
            let c = SolverConfig::new(50, jmax, DEFAULT_DT, 1.0).unwrap();
            let r = residual(1.0, 0.3, &c, 1e-5).unwrap();
            assert!(r.residual >= prev, "Jmax={jmax}");
            prev = r.residual;
        }
        for j in [2u32, 3, 4] {
            let r = residual_fixed_j(j, 0.3, 50, 1e-5).unwrap();
            assert!(r.residual < 1e-6, "j={j}: {r:?}");
        }
        assert!(residual(1.0, 1.2, &cfg, 1e-5).is_err());
    }

    #[test]
    fn rk4_tracks_analytic_profile() {
        let cfg = SolverConfig::new(60, 40, DEFAULT_DT, 1.0).unwrap();
        let rho0 = DensityVector::monodisperse(60).unwrap();
        let zero = integrate(&rho0, 0.0, &cfg, &[]).unwrap();
        assert_eq!(zero.states[0], rho0);
        let tr = integrate(&rho0, 0.5, &cfg, &[0.25]).unwrap();
        for s in &tr.states {
            let exact = analytic_profile(1.0, s.time(), 60).unwrap();
            let sup = s.rho.iter().zip(&exact.rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(sup < 1e-4, "t={} sup={sup}", s.time());
        }
        assert!(!tr.unvalidated);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let cfg = |dt| SolverConfig::new(30, 30, dt, 1.0).unwrap();
        let rho0 = DensityVector::monodisperse(30).unwrap();
        let exact = analytic_profile(1.0, 0.5, 30).unwrap();
        let dts = [0.1, 0.05, 0.025];
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| {
                let tr = integrate(&rho0, 0.5, &cfg(dt), &[]).unwrap();
                tr.states[0].rho.iter().zip(&exact.rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .collect();
        let (slope, _) = crate::stats::linear_fit(
            &dts.iter().map(|d| d.ln()).collect::<Vec<_>>(),
            &errs.iter().map(|e| e.ln()).collect::<Vec<_>>(),
        );
        assert!((slope - 4.0).abs() < 0.5, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn fixed_j_integration() {
        for j in [2u32, 3] {
            let cfg = SolverConfig::fixed(60, j, DEFAULT_DT).unwrap();
            let rho0 = DensityVector::monodisperse(60).unwrap();
            let tend = 0.9 / f64::from(j - 1);
            let tr = integrate(&rho0, tend, &cfg, &[0.25]).unwrap();
            for s in &tr.states {
                let exact = analytic_profile_fixed_j(j, s.time(), 60).unwrap();
                let sup = s.rho.iter().zip(&exact.rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(sup < 1e-4, "j={j} t={} sup={sup}", s.time());
            }
        }
    }

    #[test]
    fn config_and_flags() {
        assert!(SolverConfig::new(3, 4, 1e-3, 1.0).is_err());
        assert!(SolverConfig::new(4, 1, 1e-3, 1.0).is_err());
        assert!(SolverConfig::new(4, 4, 0.0, 1.0).is_err());
        let cfg = SolverConfig::new(20, 10, 1e-2, 0.5).unwrap();
        let rho0 = DensityVector::monodisperse(20).unwrap();
        let tr = integrate(&rho0, 0.3, &cfg, &[0.1, 0.2]).unwrap();
        assert!(tr.unvalidated);
        assert_eq!(tr.states.len(), 3);
        assert!(integrate(&rho0, 0.3, &cfg, &[0.2, 0.1]).is_err());
        let mut buf = Vec::new();
        write_moments_csv(&mut buf, &tr).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    #[test]
    fn huge_step_is_reported_unstable() {
        let cfg = SolverConfig::new(20, 10, 2.0, 0.2).unwrap();
        let rho0 = DensityVector::monodisperse(20).unwrap();
        assert!(matches!(integrate(&rho0, 4.0, &cfg, &[]), Err(Error::Unstable { .. })));
    }
}
