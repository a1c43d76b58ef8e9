//! Independent reference machinery for the acceptance checks: randomized model
//! instances with hand-derived analytic gradients, and a two-state instance small
//! enough to brute-force by exhaustive piecewise-constant control enumeration with
//! exact (closed-form) flow propagation per segment.

use fieldgame::lq::LqModelSpec;
use fieldgame::markov::ProbabilityVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random four-state instance with smooth polynomial population couplings.
///
/// Baselines `q̄ᵢⱼ(t,π) = aᵢⱼ + bᵢⱼ πᵢπⱼ + cᵢⱼ sin²(t) π_j²` stay positive by
/// construction; agent costs mix a constant, a quadratic in the next state's mass,
/// and a linear self term; the principal pays an exponential of a random linear
/// functional plus a random diagonal quadratic at the terminal time.
pub fn random_instance(seed: u64) -> LqModelSpec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 4;

    let mut lambda = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                lambda[i * m + j] = 0.1 + 1.5 * rng.random::<f64>();
            }
        }
    }
    let gamma: Vec<f64> = (0..m).map(|_| 0.5 + 2.5 * rng.random::<f64>()).collect();
    let alpha_min = -2.0 + 2.5 * rng.random::<f64>();
    let alpha_max = 2.0 + 6.0 * rng.random::<f64>();

    let a: Vec<f64> = (0..m * m).map(|_| 0.05 + 0.5 * rng.random::<f64>()).collect();
    let b: Vec<f64> = (0..m * m).map(|_| 0.8 * rng.random::<f64>()).collect();
    let c: Vec<f64> = (0..m * m).map(|_| 0.4 * rng.random::<f64>()).collect();
    let d: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let e: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let f: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let g: Vec<f64> = (0..m).map(|_| 0.9 * rng.random::<f64>()).collect();
    let h: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();

    LqModelSpec {
        m,
        lambda,
        gamma,
        alpha_min,
        alpha_max,
        base_rate: {
            let (a, b, c) = (a.clone(), b.clone(), c.clone());
            Box::new(move |t: f64, i, j, pi: &[f64]| {
                let s = t.sin();
                a[i * 4 + j] + b[i * 4 + j] * pi[i] * pi[j] + c[i * 4 + j] * s * s * pi[j] * pi[j]
            })
        },
        base_rate_grad_pi: Box::new(move |t: f64, i, j, pi: &[f64], out: &mut [f64]| {
            out.fill(0.0);
            let s = t.sin();
            out[i] += b[i * 4 + j] * pi[j];
            out[j] += b[i * 4 + j] * pi[i] + 2.0 * c[i * 4 + j] * s * s * pi[j];
        }),
        agent_cost: {
            let (d, e, f) = (d.clone(), e.clone(), f.clone());
            Box::new(move |_t: f64, i, pi: &[f64]| {
                let nxt = (i + 1) % 4;
                d[i] + e[i] * pi[nxt] * pi[nxt] + f[i] * pi[i]
            })
        },
        agent_cost_grad_pi: Box::new(move |_t: f64, i, pi: &[f64], out: &mut [f64]| {
            out.fill(0.0);
            let nxt = (i + 1) % 4;
            out[nxt] = 2.0 * e[i] * pi[nxt];
            out[i] += f[i];
        }),
        principal_cost: {
            let g = g.clone();
            Box::new(move |_t: f64, pi: &[f64]| {
                (g.iter().zip(pi).map(|(gk, pk)| gk * pk).sum::<f64>()).exp()
            })
        },
        principal_cost_grad_pi: Box::new(move |_t: f64, pi: &[f64], out: &mut [f64]| {
            let c0 = (g.iter().zip(pi).map(|(gk, pk)| gk * pk).sum::<f64>()).exp();
            for (o, gk) in out.iter_mut().zip(&g) {
                *o = gk * c0;
            }
        }),
        terminal_cost: {
            let h = h.clone();
            Box::new(move |pi: &[f64]| h.iter().zip(pi).map(|(hk, pk)| hk * pk * pk).sum())
        },
        terminal_cost_grad: Box::new(move |pi: &[f64], out: &mut [f64]| {
            for ((o, hk), pk) in out.iter_mut().zip(&h).zip(pi) {
                *o = 2.0 * hk * pk;
            }
        }),
    }
}

/// A random point with the population bounded away from the simplex boundary.
pub fn random_interior(rng: &mut ChaCha8Rng) -> (f64, Vec<f64>, Vec<f64>) {
    let t = 2.0 * rng.random::<f64>();
    let raw: [f64; 4] = core::array::from_fn(|_| rng.random::<f64>() + 0.1);
    let total: f64 = raw.iter().sum();
    let pi = raw.iter().map(|r| 0.6 * r / total + 0.1).collect();
    let y = (0..4).map(|_| 6.0 * rng.random::<f64>() - 3.0).collect();
    (t, pi, y)
}

// ─── Two-state brute-force instance ──────────────────────────────────────────────────

/// Effort bound of the two-state instance.
pub const TOY_ALPHA_MAX: f64 = 10.0;
/// Baseline jump rate of the two-state instance.
pub const TOY_BASE_RATE: f64 = 0.1;
/// Horizon of the two-state instance.
pub const TOY_HORIZON: f64 = 1.0;

/// Two states, unit effort coupling both ways, unit effort costs, constant baseline,
/// no agent flow cost, principal pays the second state's mass. Small enough that the
/// optimal control can be bracketed by exhaustive search.
pub fn toy_model() -> (LqModelSpec<f64>, ProbabilityVector<f64>) {
    let model = LqModelSpec {
        m: 2,
        lambda: vec![0.0, 1.0, 1.0, 0.0],
        gamma: vec![1.0, 1.0],
        alpha_min: 0.0,
        alpha_max: TOY_ALPHA_MAX,
        base_rate: Box::new(|_, _, _, _| TOY_BASE_RATE),
        base_rate_grad_pi: Box::new(|_, _, _, _, out| out.fill(0.0)),
        agent_cost: Box::new(|_, _, _| 0.0),
        agent_cost_grad_pi: Box::new(|_, _, _, out| out.fill(0.0)),
        principal_cost: Box::new(|_, pi: &[f64]| pi[1]),
        principal_cost_grad_pi: Box::new(|_, _, out: &mut [f64]| {
            out[0] = 0.0;
            out[1] = 1.0;
        }),
        terminal_cost: Box::new(|_| 0.0),
        terminal_cost_grad: Box::new(|_, out| out.fill(0.0)),
    };
    (model, ProbabilityVector::new(vec![0.5, 0.5]).unwrap())
}

/// One segment of the toy flow under a constant control pair, solved in closed form.
/// Affine in the segment's starting mass `x = π₀`: returns `(end, cost)` maps
/// `x ↦ ea·x + eb` and `x ↦ ca·x + cb`.
///
/// With `q₀₁ = q̄ + α₀`, `q₁₀ = q̄ + α₁`, `ρ = q₀₁ + q₁₀`:
/// `π₀(s) = π₀* + (x − π₀*) e^{−ρs}` and the segment cost
/// `∫ [π₁ (1 + ½α₁²) + π₀ ½α₀²] ds` follows from `∫π₀`.
fn toy_segment_maps(alpha0: f64, alpha1: f64, h: f64) -> (f64, f64, f64, f64) {
    let q01 = TOY_BASE_RATE + alpha0;
    let q10 = TOY_BASE_RATE + alpha1;
    let rho = q01 + q10;
    let decay = (-rho * h).exp();
    let pstar = q10 / rho;

    let ea = decay;
    let eb = pstar * (1.0 - decay);

    // ∫₀ʰ π₀ ds = x·(1−e^{−ρh})/ρ + π₀*(h − (1−e^{−ρh})/ρ)
    let int_slope = (1.0 - decay) / rho;
    let int_icept = pstar * (h - int_slope);

    let weight = 0.5 * alpha0 * alpha0 - 1.0 - 0.5 * alpha1 * alpha1;
    let ca = weight * int_slope;
    let cb = weight * int_icept + (1.0 + 0.5 * alpha1 * alpha1) * h;
    (ea, eb, ca, cb)
}

/// The exact objective of one piecewise-constant control sequence on the toy
/// instance (controls per segment, equal segment lengths over the toy horizon).
pub fn toy_sequence_objective(controls: &[(f64, f64)], p0_first: f64) -> f64 {
    let h = TOY_HORIZON / controls.len() as f64;
    let mut x = p0_first;
    let mut cost = 0.0;
    for &(a0, a1) in controls {
        let (ea, eb, ca, cb) = toy_segment_maps(a0, a1, h);
        cost += ca * x + cb;
        x = ea * x + eb;
    }
    cost
}

/// Exhaustive minimum over every piecewise-constant control on `segments` equal
/// segments with each state's effort on a uniform grid of `levels` values spanning
/// the admissible interval. `levels = 9, segments = 4` enumerates 81⁴ ≈ 4.3·10⁷
/// sequences; the per-segment affine maps make that a few hundred million flops.
pub fn toy_exhaustive_minimum(levels: usize, segments: usize, p0_first: f64) -> f64 {
    assert_eq!(segments, 4, "the enumeration below is written for four segments");
    let h = TOY_HORIZON / segments as f64;
    let mut ops = Vec::with_capacity(levels * levels);
    for i in 0..levels {
        for j in 0..levels {
            let a0 = TOY_ALPHA_MAX * i as f64 / (levels - 1) as f64;
            let a1 = TOY_ALPHA_MAX * j as f64 / (levels - 1) as f64;
            ops.push(toy_segment_maps(a0, a1, h));
        }
    }

    let mut best = f64::INFINITY;
    for &(ea1, eb1, ca1, cb1) in &ops {
        let x1 = ea1 * p0_first + eb1;
        let c1 = ca1 * p0_first + cb1;
        for &(ea2, eb2, ca2, cb2) in &ops {
            let x2 = ea2 * x1 + eb2;
            let c2 = c1 + ca2 * x1 + cb2;
            for &(ea3, eb3, ca3, cb3) in &ops {
                let x3 = ea3 * x2 + eb3;
                let c3 = c2 + ca3 * x2 + cb3;
                for &(_, _, ca4, cb4) in &ops {
                    let c4 = c3 + ca4 * x3 + cb4;
                    if c4 < best {
                        best = c4;
                    }
                }
            }
        }
    }
    best
}
