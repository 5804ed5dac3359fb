//! Maximization of concave, degree-one homogeneous functions over the simplex.

use std::collections::VecDeque;

use microlp::{ComparisonOp, OptimizationDirection, Problem};

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One piece of the objective with a supergradient. Pieces are concave and homogeneous
/// of degree one, so `F_i(v) <= grad . v` for every `v`.
#[derive(Clone, Debug)]
pub(crate) struct Cut {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Objective value and up to two cuts (one per side of the optimal arm).
#[derive(Clone, Debug)]
pub(crate) struct Evaluation {
    pub cuts: Vec<Cut>,
}

impl Evaluation {
    pub fn value(&self) -> f64 {
        self.cuts.iter().map(|c| c.value).fold(f64::INFINITY, f64::min)
    }

    /// Supergradient of the minimum: the gradient of the smallest piece.
    pub fn supergradient(&self) -> &[f64] {
        let mut best = &self.cuts[0];
        for c in &self.cuts[1..] {
            if c.value < best.value {
                best = c;
            }
        }
        &best.grad
    }
}

#[derive(Clone, Debug)]
pub(crate) struct AscentOutcome {
    pub weights: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub gap: f64,
}

/// `min over q in [0,1] of max_a (q g1_a + (1-q) g2_a)`, a global upper bound on the
/// maximum of `min(F_1, F_2)` over the simplex.
fn dual_bound(cuts: &[Cut]) -> f64 {
    match cuts {
        [c] => c.grad.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        [c1, c2] => {
            let envelope = |q: f64| {
                c1.grad
                    .iter()
                    .zip(&c2.grad)
                    .map(|(a, b)| q * a + (1.0 - q) * b)
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let mut best = envelope(0.0).min(envelope(1.0));
            let k = c1.grad.len();
            for i in 0..k {
                for j in i + 1..k {
                    let (si, sj) = (c1.grad[i] - c2.grad[i], c1.grad[j] - c2.grad[j]);
                    if si != sj {
                        let q = (c2.grad[j] - c2.grad[i]) / (si - sj);
                        if q > 0.0 && q < 1.0 {
                            best = best.min(envelope(q));
                        }
                    }
                }
            }
            best
        }
        _ => unreachable!("one or two cuts"),
    }
}

/// Same bound over every cut collected so far: `min over mixtures alpha of
/// max_a (sum_i alpha_i g_i)_a`. The mixture returned by the LP is renormalized and the
/// bound re-evaluated from it, so solver round-off cannot make it invalid.
fn bundle_bound(bundle: &VecDeque<Vec<f64>>) -> f64 {
    let Some(k) = bundle.front().map(Vec::len) else {
        return f64::INFINITY;
    };
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let z = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let alpha: Vec<_> = bundle.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for a in 0..k {
        let row = alpha.iter().zip(bundle).map(|(&v, g)| (v, g[a])).chain([(z, -1.0)]);
        lp.add_constraint(row.collect::<Vec<_>>(), ComparisonOp::Le, 0.0);
    }
    lp.add_constraint(alpha.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    let Some(sol) = lp.solve().ok().and_then(|o| o.solution().cloned()) else {
        return f64::INFINITY;
    };
    let mix: Vec<f64> = alpha.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
    let total: f64 = mix.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return f64::INFINITY;
    }
    (0..k)
        .map(|a| mix.iter().zip(bundle).map(|(m, g)| m * g[a]).sum::<f64>() / total)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Prox-regularized step on the two-cut model: maximizes `min(g1.v, g2.v) - rho/2 |v-w|^2`
/// over the simplex through its one-dimensional dual in the mixing coefficient `q`.
fn model_step(w: &[f64], cuts: &[Cut], rho: f64) -> Vec<f64> {
    let (g1, g2) = match cuts {
        [c] => (&c.grad, &c.grad),
        [c1, c2] => (&c1.grad, &c2.grad),
        _ => unreachable!("one or two cuts"),
    };
    let target = |q: f64| -> Vec<f64> {
        let shifted: Vec<f64> = (0..w.len()).map(|a| w[a] + (q * g1[a] + (1.0 - q) * g2[a]) / rho).collect();
        project_simplex(&shifted)
    };
    if cuts.len() == 1 {
        return target(1.0);
    }
    let diff: Vec<f64> = g1.iter().zip(g2.iter()).map(|(a, b)| a - b).collect();
    // derivative of the convex dual in q is (g1 - g2).v(q), nondecreasing in q
    let slope = |v: &[f64]| dot(&diff, v);
    let same_support = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (*x > 0.0) == (*y > 0.0));
    let (v_lo, v_hi) = (target(0.0), target(1.0));
    let (s_lo, s_hi) = (slope(&v_lo), slope(&v_hi));
    if s_lo >= 0.0 {
        return v_lo;
    }
    if s_hi <= 0.0 {
        return v_hi;
    }
    // v(q) is affine while its support stays fixed, so once both ends share a support
    // a secant step lands on the root
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (mut v_lo, mut v_hi, mut s_lo, mut s_hi) = (v_lo, v_hi, s_lo, s_hi);
    while hi - lo > 1e-14 {
        let secant = same_support(&v_lo, &v_hi);
        let mut q = if secant { lo + (hi - lo) * (-s_lo / (s_hi - s_lo)) } else { 0.5 * (lo + hi) };
        if !(q > lo && q < hi) {
            q = 0.5 * (lo + hi);
        }
        let v = target(q);
        let sv = slope(&v);
        if sv == 0.0 || (secant && same_support(&v, &v_lo)) {
            return v;
        }
        if sv < 0.0 {
            (lo, v_lo, s_lo) = (q, v, sv);
        } else {
            (hi, v_hi, s_hi) = (q, v, sv);
        }
    }
    target(0.5 * (lo + hi))
}

/// Proximal ascent driven by the two side cuts. Stops once the dual bound certifies a
/// relative gap below `tol`.
pub(crate) fn proximal_two_cut_ascent(
    mut eval: impl FnMut(&[f64]) -> Evaluation,
    start: Vec<f64>,
    tol: f64,
    max_iter: usize,
    use_bundle: bool,
) -> AscentOutcome {
    let k = start.len();
    let mut w = start;
    let mut current = eval(&w);
    let mut f = current.value();
    let gmax = current
        .cuts
        .iter()
        .flat_map(|c| c.grad.iter().copied())
        .fold(0.0_f64, f64::max);
    let mut rho = (gmax * k as f64 / 0.1).max(1e-300);
    let rho_min = rho * 1e-6;
    // past this the steps are below rounding and f no longer moves
    let rho_max = rho * 1e10;
    // every cut ever seen bounds the objective from above; a bounded window of them
    // certifies optima where one side is itself nonsmooth
    let capacity = 8 * k;
    let mut bundle: VecDeque<Vec<f64>> = VecDeque::with_capacity(capacity + 2);
    let remember = |bundle: &mut VecDeque<Vec<f64>>, e: &Evaluation| {
        for c in &e.cuts {
            if bundle.len() == capacity {
                bundle.pop_front();
            }
            bundle.push_back(c.grad.clone());
        }
    };
    remember(&mut bundle, &current);
    let mut null_steps = 0;
    let mut iterations = 0;
    let gap = loop {
        let mut gap = (dual_bound(&current.cuts) - f).max(0.0);
        let stalled = rho > rho_max || iterations >= max_iter;
        if use_bundle && gap > tol * f.abs() && (null_steps > 0 || stalled) {
            gap = gap.min((bundle_bound(&bundle) - f).max(0.0));
        }
        if gap <= tol * f.abs() || stalled {
            break gap;
        }
        iterations += 1;
        let v = model_step(&w, &current.cuts, rho);
        let predicted = current
            .cuts
            .iter()
            .map(|c| dot(&c.grad, &v))
            .fold(f64::INFINITY, f64::min)
            - f;
        if predicted <= 1e-15 * f.abs() {
            // the dual mixing weight is only resolved to finite precision, which spoils
            // the recovered step when rho is small
            rho *= 4.0;
            continue;
        }
        let candidate = eval(&v);
        remember(&mut bundle, &candidate);
        let fv = candidate.value();
        if fv - f >= 0.1 * predicted {
            w = v;
            f = fv;
            current = candidate;
            rho = (rho * 0.5).max(rho_min);
        } else {
            null_steps += 1;
            rho *= 4.0;
        }
    };
    AscentOutcome { weights: w, value: f, iterations, gap }
}

/// Projected supergradient ascent with steps `c / sqrt(n)`, `c = 1 / (max |g_0| + 1e-12)`,
/// keeping the best iterate. Stops when the best value has improved by less than
/// `1e-10` over the last `patience` iterations.
pub(crate) fn projected_subgradient_ascent(
    mut eval: impl FnMut(&[f64]) -> Evaluation,
    start: Vec<f64>,
    max_iter: usize,
    patience: usize,
) -> AscentOutcome {
    let mut w = start;
    let first = eval(&w);
    let c = 1.0 / (first.supergradient().iter().fold(0.0_f64, |m, g| m.max(g.abs())) + 1e-12);
    let mut best_w = w.clone();
    let mut best = first.value();
    let mut best_cuts = first.cuts.clone();
    let mut mark = best;
    let mut since_mark = 0;
    let mut current = first;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let step = c / (iterations as f64).sqrt();
        let g = current.supergradient();
        let moved: Vec<f64> = w.iter().zip(g).map(|(x, gi)| x + step * gi).collect();
        w = project_simplex(&moved);
        current = eval(&w);
        let f = current.value();
        if f > best {
            best = f;
            best_w.clone_from(&w);
            best_cuts = current.cuts.clone();
        }
        since_mark += 1;
        if since_mark >= patience {
            if best - mark < 1e-10 {
                break;
            }
            mark = best;
            since_mark = 0;
        }
    }
    let gap = (dual_bound(&best_cuts[..best_cuts.len().min(2)]) - best).max(0.0);
    AscentOutcome { weights: best_w, value: best, iterations, gap }
}

/// Root of a nondecreasing function on `[lo, hi]` by bisection down to machine precision.
pub(crate) fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, usize) {
    let mut n = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || n >= 200 {
            return (mid, n);
        }
        n += 1;
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Maximizer of a unimodal function on `[lo, hi]` by golden-section search.
pub(crate) fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    let (fl, fh) = (f(lo), f(hi));
    [(x1, f1), (x2, f2), (lo, fl), (hi, fh)]
        .into_iter()
        .fold((lo, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}
