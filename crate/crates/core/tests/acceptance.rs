//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p loopsoup --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use loopsoup::coagulation::{
    analytic_moments, analytic_profile, analytic_profile_fixed_j, integrate, residual,
    residual_fixed_j, DensityVector, SolverConfig,
};
use loopsoup::experiments::{self, Command, ExperimentConfig};
use loopsoup::exploration::explore;
use loopsoup::graph_process::semigroup_prob;
use loopsoup::gw_analytics::{progeny_pmf, CPGeo, Offspring};
use loopsoup::loop_measure::{
    beta_vertex, length_probability, mu_restricted_total, sample_soup_stream, visits_besides_factorial_moment,
    visits_besides_mean, SoupSampler, TimedLoop,
};
use loopsoup::stats::{chi_square_gof, chi_square_sf, mean_var};
use loopsoup::{rng, Loop, LoopSoup, ModelParams};

const SEED: u64 = 1;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn ln_fact(n: u64) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Offspring pmf summed over the number of geometric jumps, then convolved
/// `k` times; `u/k · P(X_1 + … + X_k = k − u)`.
fn dwass_oracle(lam: f64, p: f64, u: u64, k: u64) -> f64 {
    let len = (k - u + 1) as usize;
    let x: Vec<f64> = (0..len as u64)
        .map(|m| {
            if m == 0 {
                return (-lam).exp();
            }
            (1..=m)
                .map(|j| {
                    let pois = (-lam + j as f64 * lam.ln() - ln_fact(j)).exp();
                    let nb = (ln_fact(m - 1) - ln_fact(j - 1) - ln_fact(m - j)).exp();
                    pois * nb * p.powi(j as i32) * (1.0 - p).powi((m - j) as i32)
                })
                .sum()
        })
        .collect();
    let mut acc = vec![0.0; len];
    acc[0] = 1.0;
    for _ in 0..k {
        let mut next = vec![0.0; len];
        for (i, a) in acc.iter().enumerate() {
            for (j, b) in x.iter().enumerate().take(len - i) {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    u as f64 / k as f64 * acc[len - 1]
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for eps in [0.5, 1.0, 2.0] {
        for f in [0.5, 1.0, 1.5] {
            let t = f * eps * eps;
            let law = CPGeo::from_model(eps, t).unwrap();
            for u in 1..=4u32 {
                for k in u64::from(u)..=40 {
                    let got = progeny_pmf(u, eps, t, k).unwrap();
                    let want = dwass_oracle(law.lambda(), law.p(), u64::from(u), k);
                    worst = worst.max((got - want).abs());
                }
            }
        }
    }
    outcome(
        worst < 1e-10,
        format!("max |progeny_pmf - oracle| = {worst:.2e} over 9 (ε,t) points, u ≤ 4, k ≤ 40"),
    )
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [0.5f64, 1.0, 2.0] {
        let e2 = eps * eps;
        let below = Offspring::CpGeo(CPGeo::from_model(eps, e2 * (1.0 - 1e-3)).unwrap()).extinction_prob();
        let above = Offspring::CpGeo(CPGeo::from_model(eps, e2 * (1.0 + 1e-3)).unwrap()).extinction_prob();
        ok &= (below - 1.0).abs() <= 1e-10 && above < 1.0;
        parts.push(format!("ε={eps}: q(−)={below}, q(+)={above:.8}"));
    }
    outcome(ok, parts.join("; "))
}

fn sup_diff(a: &DensityVector, b: &DensityVector) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn criterion_3() -> Outcome {
    let times = [0.25, 0.5, 0.9];
    let rho0 = DensityVector::monodisperse(60).unwrap();
    let cfg = SolverConfig::new(60, 40, 1e-3, 1.0).unwrap();
    let tr = integrate(&rho0, 0.9, &cfg, &times).unwrap();
    let full = tr
        .states
        .iter()
        .map(|s| sup_diff(s, &analytic_profile(1.0, s.time(), 60).unwrap()))
        .fold(0.0, f64::max);
    let res = residual(1.0, 0.3, &SolverConfig::new(50, 40, 1e-3, 1.0).unwrap(), 1e-5).unwrap();
    let mut ok = full < 1e-4 && res.residual < 1e-6;
    let mut detail = format!("full: sup err {full:.2e}, residual {:.2e}", res.residual);
    for j in [2u32, 3] {
        let cfg = SolverConfig::fixed(60, j, 1e-3).unwrap();
        let tr = integrate(&rho0, 0.9, &cfg, &times).unwrap();
        let err = tr
            .states
            .iter()
            .map(|s| sup_diff(s, &analytic_profile_fixed_j(j, s.time(), 60).unwrap()))
            .fold(0.0, f64::max);
        let r = residual_fixed_j(j, 0.3, 50, 1e-5).unwrap();
        ok &= err < 1e-4 && r.residual < 1e-6;
        detail.push_str(&format!("; j={j}: sup err {err:.2e}, residual {:.2e}", r.residual));
    }
    outcome(ok, detail)
}

fn criterion_4() -> Outcome {
    let m = analytic_moments(Offspring::CpGeo(CPGeo::from_model(1.0, 0.9).unwrap()), 1e-6).unwrap();
    outcome(
        (m.m2 - 10.0).abs() <= 1e-3,
        format!("Σ k² ρ = {:.8} (K = {}, tail ≤ {:.1e})", m.m2, m.k_max, m.tail_bound),
    )
}

fn experiment(cmd: Command, cfg: ExperimentConfig) -> Outcome {
    let r = experiments::run(cmd, &cfg).unwrap();
    let detail = r
        .checks
        .iter()
        .map(|c| format!("{} [{}]", c.detail, if c.passed { "ok" } else { "failed" }))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(r.passed(), detail)
}

fn criterion_5() -> Outcome {
    let cfg = ExperimentConfig {
        n_grid: Some(vec![250, 500, 1000, 2000]),
        eps: 1.0,
        t: Some(0.5),
        replicas: Some(200_000),
        kmax: 10,
        seed: SEED,
        ..Default::default()
    };
    experiment(Command::ComponentLaw, cfg)
}

fn criterion_6() -> Outcome {
    let cfg = ExperimentConfig {
        n_grid: Some(vec![100_000]),
        eps: 1.0,
        t_grid: Some(vec![0.5, 2.0]),
        replicas: Some(100),
        a_factor: 1.5,
        super_tol: 0.01,
        super_frac_min: 0.95,
        c2_log_factor: 20.0,
        sub_prob_max: 0.05,
        seed: SEED,
        ..Default::default()
    };
    experiment(Command::PhaseScan, cfg)
}

fn criterion_7() -> Outcome {
    let params = ModelParams::new(7, 1.0).unwrap();
    let loops = [vec![1, 2, 3, 4], vec![2, 5, 2, 3], vec![3, 6, 4], vec![6, 7]]
        .into_iter()
        .enumerate()
        .map(|(i, v)| TimedLoop {
            time: 0.1 * (i + 1) as f64,
            lp: Loop::new(v).unwrap(),
        })
        .collect();
    let soup = LoopSoup::from_loops(params, 1.0, loops).unwrap();
    let tr = explore(&soup, 1.0, 1).unwrap();
    outcome(
        tr.xi == [3, 1, 1, 0, 0, 1, 0] && tr.t_stop == 7,
        format!("xi = {:?}, T = {}", tr.xi, tr.t_stop),
    )
}

fn criterion_8() -> Outcome {
    let reps = 100_000u64;
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut block = 0u64;
    for n in 4..=8u32 {
        let params = ModelParams::new(n, 1.0).unwrap();
        let sampler = SoupSampler::new(params);
        let b1 = n.div_ceil(2);
        let blocks = [b1, n - b1];
        for t in [0.5, 1.0] {
            let p = semigroup_prob(&params, t, &blocks).unwrap();
            let hits = (0..reps)
                .filter(|&r| {
                    let mut g = rng::stream(SEED, (block << 32) | r);
                    sampler.sample_loops(t, &mut g).iter().all(|tl| {
                        let vs = tl.lp.vertices();
                        vs.iter().all(|&v| v <= b1) || vs.iter().all(|&v| v > b1)
                    })
                })
                .count();
            block += 1;
            let phat = hits as f64 / reps as f64;
            let z = (phat - p) / (p * (1.0 - p) / reps as f64).sqrt();
            worst = worst.max(z.abs());
            ok &= z.abs() <= 3.0;
        }
    }
    outcome(ok, format!("max |z| = {worst:.2} over n ∈ 4..8, t ∈ {{0.5, 1}} (3σ)"))
}

fn criterion_9() -> Outcome {
    let params = ModelParams::new(10, 0.5).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;

    // loop lengths of one long soup against the length law
    let soup = sample_soup_stream(&params, 5e5, SEED, 1 << 40).unwrap();
    let kmax = 40u32;
    let mut counts = vec![0u64; (kmax - 1) as usize];
    let mut tail = 0u64;
    for tl in soup.loops() {
        let k = tl.lp.len() as u32;
        if k <= kmax {
            counts[(k - 2) as usize] += 1;
        } else {
            tail += 1;
        }
    }
    counts.push(tail);
    let mut probs: Vec<f64> = (2..=kmax).map(|k| length_probability(&params, k)).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    let gof = chi_square_gof(&counts, &probs, 5.0);
    ok &= gof.p_value > 0.01;
    parts.push(format!("length χ² p = {:.3} ({} loops)", gof.p_value, soup.len()));

    // per-replica statistics of short soups
    let reps = 100_000u64;
    let t = 20.0;
    let (a_max, b_max) = (3u32, 6u32);
    let mut through = Vec::with_capacity(reps as usize);
    let mut in_a = Vec::with_capacity(reps as usize);
    let mut in_b = Vec::with_capacity(reps as usize);
    let mut s_fact = Vec::with_capacity(reps as usize);
    let mut s_val = Vec::with_capacity(reps as usize);
    for r in 0..reps {
        let soup = sample_soup_stream(&params, t, SEED, (2 << 40) | r).unwrap();
        through.push(soup.loops().iter().filter(|tl| tl.lp.contains(1)).count() as f64);
        let inside = |lo: u32, hi: u32| {
            soup.loops()
                .iter()
                .filter(|tl| tl.lp.vertices().iter().all(|&v| v >= lo && v <= hi))
                .count() as f64
        };
        in_a.push(inside(1, a_max));
        in_b.push(inside(a_max + 1, b_max));
        let s = soup.visits_besides(t, 1) as f64;
        s_val.push(s);
        s_fact.push(s * (s - 1.0));
    }
    let rf = reps as f64;

    let (m, v) = mean_var(&through);
    let rate = t * beta_vertex(&params);
    let z_mean = (m - rate) / (rate / rf).sqrt();
    let disp = v * (rf - 1.0) / m;
    let sf = chi_square_sf(disp, rf - 1.0);
    let p_disp = 2.0 * sf.min(1.0 - sf);
    ok &= z_mean.abs() <= 3.0 && p_disp > 0.01;
    parts.push(format!("loops through x: z = {z_mean:.2}, dispersion p = {p_disp:.3}"));

    let (ma, va) = mean_var(&in_a);
    let (mb, vb) = mean_var(&in_b);
    let cov = in_a.iter().zip(&in_b).map(|(a, b)| (a - ma) * (b - mb)).sum::<f64>() / (rf - 1.0);
    let z_cov = cov / (va * vb / rf).sqrt();
    let ea = t * mu_restricted_total(&params, params.n() - a_max).unwrap();
    let z_a = (ma - ea) / (ea / rf).sqrt();
    ok &= z_cov.abs() <= 3.0 && z_a.abs() <= 3.0;
    parts.push(format!("disjoint sets: cov z = {z_cov:.2}, mean z = {z_a:.2}"));

    let (fm, fv) = mean_var(&s_fact);
    let want = visits_besides_factorial_moment(&params, t);
    let z_f = (fm - want) / (fv / rf).sqrt();
    let (sm, sv) = mean_var(&s_val);
    let z_s = (sm - visits_besides_mean(&params, t)) / (sv / rf).sqrt();
    ok &= z_f.abs() <= 3.0 && z_s.abs() <= 3.0;
    parts.push(format!("S(S-1): z = {z_f:.2}, S: z = {z_s:.2}"));

    outcome(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("closed-form cross-validation", criterion_1),
        ("criticality of the extinction probability", criterion_2),
        ("coagulation solver vs analytic profiles", criterion_3),
        ("second moment of the analytic profile", criterion_4),
        ("component law converges at rate 1/n", criterion_5),
        ("phase transition of the largest components", criterion_6),
        ("exploration of the four-loop example", criterion_7),
        ("partition semigroup formula", criterion_8),
        ("soup sampler laws", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} criterion {}: {name} ({secs:.1}s) :: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        if !o.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
