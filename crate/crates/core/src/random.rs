//! Random instances and allocations for property tests and benchmarks.
//!
//! Draws are reproducible given the RNG; none of these functions read
//! global state.

use rand::Rng;

use crate::model::{Allocation, Bundle, Instance, Tail, Utility};

/// Positive weights normalised to sum to one.
pub fn entitlements<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// A nonzero vector whose entries are zero with probability 0.3 and
/// uniform on `[lo, hi)` otherwise.
pub fn sparse_vector<R: Rng + ?Sized>(rng: &mut R, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut r: Vec<f64> = (0..m)
        .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(lo..hi) })
        .collect();
    if r.iter().all(|&v| v == 0.0) {
        let j = rng.gen_range(0..m);
        r[j] = rng.gen_range(lo..hi);
    }
    r
}

pub fn quantities<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(0.5..2.0)).collect()
}

/// Leontief agents with proportions in `{0} ∪ [0.1, 1)`.
pub fn leontief_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Instance {
    let q = quantities(rng, m);
    let e = entitlements(rng, n);
    let agents = e
        .into_iter()
        .map(|ei| (ei, Utility::leontief(sparse_vector(rng, m, 0.1, 1.0))))
        .collect();
    Instance::from_parts(&q, agents).expect("generated instance is valid")
}

/// Leontief agents, each made satiable with probability `p_satiable`.
/// Satiation bundles are small enough that several agents can reach them.
pub fn satiable_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, p_satiable: f64) -> Instance {
    let q = quantities(rng, m);
    let e = entitlements(rng, n);
    let agents = e
        .into_iter()
        .map(|ei| {
            if rng.gen_bool(p_satiable) {
                let scale = rng.gen_range(0.05..0.6);
                let r: Vec<f64> = sparse_vector(rng, m, 0.1, 1.0)
                    .iter()
                    .zip(&q)
                    .map(|(v, qj)| v * qj * scale)
                    .collect();
                (ei, Utility::satiable_leontief(r))
            } else {
                (ei, Utility::leontief(sparse_vector(rng, m, 0.1, 1.0)))
            }
        })
        .collect();
    Instance::from_parts(&q, agents).expect("generated instance is valid")
}

/// A piecewise-linear utility with 2 to 4 breakpoints on a random support.
pub fn tabulated_utility<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Utility {
    let support: Vec<bool> = sparse_vector(rng, m, 1.0, 2.0).iter().map(|&v| v > 0.0).collect();
    let k = rng.gen_range(2..=4);
    let mut points = vec![(0.0, vec![0.0; m])];
    for _ in 1..k {
        let (t, w) = points.last().expect("nonempty").clone();
        let mut step: Vec<f64> = (0..m)
            .map(|j| {
                if support[j] && rng.gen_bool(0.7) {
                    rng.gen_range(0.05..0.5)
                } else {
                    0.0
                }
            })
            .collect();
        if step.iter().all(|&s| s == 0.0) {
            let j = (0..m).find(|&j| support[j]).expect("support is nonempty");
            step[j] = rng.gen_range(0.05..0.5);
        }
        let w = w.iter().zip(&step).map(|(a, b)| a + b).collect();
        points.push((t + rng.gen_range(0.2..1.0), w));
    }
    let tail = if rng.gen_bool(0.5) { Tail::Satiate } else { Tail::Linear };
    let refs: Vec<(f64, &[f64])> = points.iter().map(|(t, w)| (*t, w.as_slice())).collect();
    Utility::tabulated(&refs, tail)
}

/// Any mix of Leontief, satiable Leontief and tabulated agents.
pub fn pc_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Instance {
    let q = quantities(rng, m);
    let e = entitlements(rng, n);
    let agents = e
        .into_iter()
        .map(|ei| {
            let u = match rng.gen_range(0..3) {
                0 => Utility::leontief(sparse_vector(rng, m, 0.1, 1.0)),
                1 => Utility::satiable_leontief(sparse_vector(rng, m, 0.05, 0.6)),
                _ => tabulated_utility(rng, m),
            };
            (ei, u)
        })
        .collect();
    Instance::from_parts(&q, agents).expect("generated instance is valid")
}

/// A non-wasteful allocation built by raising utility levels at random
/// rates. Each round every active agent climbs at its own rate until some
/// good runs out or someone satiates; agents that need more of an exhausted
/// good, or are satiated, stop.
pub fn non_wasteful_allocation<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Allocation {
    let n = instance.n();
    let q = instance.quantities();
    let mut levels = vec![0.0; n];
    let mut active: Vec<usize> = (0..n).collect();

    let bundles = |levels: &[f64]| -> Option<Vec<Vec<f64>>> {
        (0..n)
            .map(|i| instance.utility(i).bundle_at(levels[i]).into_finite())
            .collect()
    };
    let fits = |levels: &[f64]| -> bool {
        let Some(rows) = bundles(levels) else { return false };
        (0..q.len()).all(|j| rows.iter().map(|r| r[j]).sum::<f64>() <= q[j])
    };

    let mut stalled = 0;
    while !active.is_empty() {
        let rates: Vec<f64> = active.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
        let raised = |s: f64| -> Vec<f64> {
            let mut l = levels.clone();
            for (&i, rho) in active.iter().zip(&rates) {
                l[i] += s * rho;
                if let Some(cap) = instance.utility(i).cap() {
                    l[i] = l[i].min(cap);
                }
            }
            l
        };
        let s_cap = active
            .iter()
            .zip(&rates)
            .filter_map(|(&i, rho)| instance.utility(i).cap().map(|c| (c - levels[i]) / rho))
            .fold(f64::INFINITY, f64::min);
        let s = if s_cap.is_finite() && fits(&raised(s_cap)) {
            s_cap
        } else {
            let mut hi = if s_cap.is_finite() { s_cap } else { 1.0 };
            while fits(&raised(hi)) {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if fits(&raised(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        levels = raised(s);

        let rows = bundles(&levels).expect("feasible levels have finite bundles");
        let exhausted: Vec<bool> = (0..q.len())
            .map(|j| q[j] - rows.iter().map(|r| r[j]).sum::<f64>() <= 1e-12 * q[j].max(1.0))
            .collect();
        let stuck = |i: usize| -> bool {
            let u = instance.utility(i);
            if u.cap().is_some_and(|c| levels[i] >= c) {
                return true;
            }
            let probe = levels[i] + 1e-7 * levels[i].max(1.0);
            match u.bundle_at(probe) {
                Bundle::Infinite => true,
                Bundle::Finite(w) => (0..q.len()).any(|j| exhausted[j] && w[j] > rows[i][j]),
            }
        };
        let before = active.len();
        active.retain(|&i| !stuck(i));
        if active.len() == before {
            // Rounding left every good fractionally short of exhaustion;
            // another round finishes the job.
            stalled += 1;
            assert!(stalled < 100, "water-filling made no progress");
        }
    }

    Allocation::from_rows(bundles(&levels).expect("feasible levels have finite bundles"))
        .expect("bundles share a length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::is_non_wasteful;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_allocations_are_non_wasteful() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=4);
            let instance = pc_instance(&mut rng, n, m);
            let x = non_wasteful_allocation(&instance, &mut rng);
            instance.check_feasible(&x).unwrap();
            let report = is_non_wasteful(&instance, &x).unwrap();
            assert!(report.verdict, "{instance:?}\n{x:?}\n{report:?}");
        }
    }
}
