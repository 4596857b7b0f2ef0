//! Verifiers for allocation properties, and a brute-force leximin oracle.
//!
//! Every verifier reduces its input to parsimonious bundles first and notes
//! the reduction in the report. A `false` verdict always comes with at least
//! one [`Witness`]: a violated inequality `lhs <= rhs` with `slack = lhs - rhs`.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grf::grf_allocate;
use crate::model::{Allocation, Bundle, Instance, Norm, TOL};

/// A good counts as exhausted when its leftover is within
/// `BOTTLENECK_TOL · max(1, q_j)`.
pub const BOTTLENECK_TOL: f64 = 1e-7;
/// Allowed shortfall of a bottleneck share below the entitlement.
pub const SHARE_SLACK: f64 = 1e-9;
/// Tolerance for agreement with the water-filling output.
pub const AGREEMENT_TOL: f64 = 1e-6;
/// Utility gains below this are attributed to rounding.
pub const IMPROVEMENT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub agents: Vec<usize>,
    pub goods: Vec<usize>,
    /// The inequality that should hold, written as `lhs <= rhs`.
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; positive means violated.
    pub slack: f64,
}

impl Witness {
    pub fn new(agents: Vec<usize>, goods: Vec<usize>, inequality: impl Into<String>, lhs: f64, rhs: f64) -> Witness {
        Witness {
            agents,
            goods,
            inequality: inequality.into(),
            lhs,
            rhs,
            slack: lhs - rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: bool,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl PropertyReport {
    pub fn new(property: impl Into<String>) -> PropertyReport {
        PropertyReport {
            property: property.into(),
            verdict: true,
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn fail(&mut self, witness: Witness) {
        self.verdict = false;
        self.witnesses.push(witness);
    }
}

/// Replaces every bundle by its parsimonious reduction.
pub fn parsimonious_reduction(instance: &Instance, x: &Allocation) -> Allocation {
    let mut y = x.clone();
    for i in 0..instance.n() {
        let p = instance.utility(i).parsimonize(x.row(i));
        y.row_mut(i).copy_from_slice(&p);
    }
    y
}

fn reduce(instance: &Instance, x: &Allocation, report: &mut PropertyReport) -> Allocation {
    let y = parsimonious_reduction(instance, x);
    if y.max_abs_diff(x) > TOL {
        report
            .notes
            .push("input was not parsimonious and was reduced before checking".into());
    }
    y
}

pub fn is_parsimonious_allocation(instance: &Instance, x: &Allocation) -> Result<PropertyReport> {
    instance.check_feasible(x)?;
    let mut report = PropertyReport::new("parsimonious");
    for i in 0..instance.n() {
        let p = instance.utility(i).parsimonize(x.row(i));
        for (j, (&xij, &pij)) in x.row(i).iter().zip(&p).enumerate() {
            if xij - pij > TOL {
                report.fail(Witness::new(vec![i], vec![j], "x_ij <= w_j(u_i(x_i))", xij, pij));
            }
        }
    }
    Ok(report)
}

pub fn is_non_wasteful(instance: &Instance, x: &Allocation) -> Result<PropertyReport> {
    let mut report = is_parsimonious_allocation(instance, x)?;
    report.property = "non-wasteful".into();
    let y = parsimonious_reduction(instance, x);
    // Leftovers within the bottleneck tolerance count as exhausted.
    let q = instance.quantities();
    let z: Vec<f64> = y
        .leftover(&q)
        .iter()
        .zip(&q)
        .map(|(v, qj)| if *v > BOTTLENECK_TOL * qj.max(1.0) { *v } else { 0.0 })
        .collect();
    let spare: Vec<usize> = (0..instance.m()).filter(|&j| z[j] > 0.0).collect();
    for i in 0..instance.n() {
        let u = instance.utility(i);
        let before = u.level(y.row(i));
        let topped: Vec<f64> = y.row(i).iter().zip(&z).map(|(a, b)| a + b).collect();
        let after = u.level(&topped);
        if after - before > IMPROVEMENT_TOL * before.max(1.0) {
            report.fail(Witness::new(
                vec![i],
                spare.clone(),
                "u_i(x_i + z) <= u_i(x_i)",
                after,
                before,
            ));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct FalsifierOptions {
    /// Grid points per agent along each search ray.
    pub grid: usize,
    /// Number of random multi-agent directions.
    pub directions: usize,
    pub seed: u64,
}

impl Default for FalsifierOptions {
    fn default() -> Self {
        FalsifierOptions {
            grid: 200,
            directions: 64,
            seed: 0,
        }
    }
}

/// For instances with perfectly complementary utilities Pareto efficiency
/// coincides with non-wastefulness; the verdict is that equivalence, backed
/// by a search for a dominating allocation in utility-level space.
pub fn is_pareto_efficient(instance: &Instance, x: &Allocation) -> Result<PropertyReport> {
    is_pareto_efficient_with(instance, x, &FalsifierOptions::default())
}

pub fn is_pareto_efficient_with(
    instance: &Instance,
    x: &Allocation,
    options: &FalsifierOptions,
) -> Result<PropertyReport> {
    let mut report = is_non_wasteful(instance, x)?;
    report.property = "pareto".into();
    let found = pareto_falsifier(instance, x, options)?;
    if !found.is_empty() {
        report.notes.push(format!(
            "found {} dominating allocation(s) in utility-level space",
            found.len()
        ));
    }
    for w in found {
        report.fail(w);
    }
    Ok(report)
}

/// Searches for allocations that weakly raise every agent's utility and
/// strictly raise at least one. Candidates are built from parsimonious
/// bundles at raised levels `t + s·d·(T - t)`, where `T` is each agent's
/// standalone level; directions `d` are the coordinate axes and random
/// nonnegative vectors, and `s` runs over a grid in `(0, 1]`.
pub fn pareto_falsifier(instance: &Instance, x: &Allocation, options: &FalsifierOptions) -> Result<Vec<Witness>> {
    let n = instance.n();
    if (n as f64) * (options.grid as f64) > 1e7 {
        return Err(Error::TooLarge(format!(
            "falsifier grid of {} points for {n} agents exceeds 10^7",
            options.grid
        )));
    }
    instance.check_feasible(x)?;
    let q = instance.quantities();
    let levels: Vec<f64> = (0..n).map(|i| instance.utility(i).level(x.row(i))).collect();
    let headroom: Vec<f64> = (0..n)
        .map(|i| (instance.standalone_level(i) - levels[i]).max(0.0))
        .collect();

    let mut directions: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 0..options.directions {
        directions.push((0..n).map(|_| rng.gen::<f64>()).collect());
    }

    let mut witnesses = Vec::new();
    for d in &directions {
        for g in 1..=options.grid {
            let s = g as f64 / options.grid as f64;
            let target: Vec<f64> = (0..n).map(|i| levels[i] + s * d[i] * headroom[i]).collect();
            let gains: Vec<f64> = (0..n).map(|i| target[i] - levels[i]).collect();
            let Some(best) = (0..n).max_by(|&a, &b| gains[a].total_cmp(&gains[b])) else {
                break;
            };
            if gains[best] <= IMPROVEMENT_TOL * levels[best].max(1.0) {
                continue;
            }
            let mut used = vec![0.0; q.len()];
            let mut finite = true;
            for i in 0..n {
                match instance.utility(i).bundle_at(target[i]) {
                    Bundle::Finite(w) => used.iter_mut().zip(&w).for_each(|(u, v)| *u += v),
                    Bundle::Infinite => finite = false,
                }
            }
            if finite && used.iter().zip(&q).all(|(u, qj)| *u <= qj + TOL) {
                witnesses.push(Witness::new(
                    vec![best],
                    vec![],
                    "u_i(z_i) <= u_i(x_i) for every feasible Z that weakly dominates X",
                    target[best],
                    levels[best],
                ));
                break;
            }
        }
        if !witnesses.is_empty() {
            break;
        }
    }
    Ok(witnesses)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fairer {
    X,
    Y,
    Equivalent,
}

/// Compares two parsimonious allocations. Agents whose norms differ form
/// the set `D`; the allocation whose smallest entitlement-scaled norm over
/// `D` is larger is fairer, with ties going to `X`.
pub fn fairer_than(x: &Allocation, y: &Allocation, norm: &Norm, entitlements: &[f64]) -> Fairer {
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut any = false;
    for (i, e) in entitlements.iter().enumerate() {
        let nx = norm.eval(x.row(i));
        let ny = norm.eval(y.row(i));
        if (nx - ny).abs() > TOL {
            any = true;
            min_x = min_x.min(nx / e);
            min_y = min_y.min(ny / e);
        }
    }
    if !any {
        Fairer::Equivalent
    } else if min_x >= min_y - TOL {
        Fairer::X
    } else {
        Fairer::Y
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NormFairOptions {
    /// Grid points per agent for the certificate on small instances;
    /// zero skips it.
    pub certificate_grid: usize,
}

impl Default for NormFairOptions {
    fn default() -> Self {
        NormFairOptions { certificate_grid: 50 }
    }
}

pub fn is_norm_fair(instance: &Instance, x: &Allocation, norm: &Norm) -> Result<PropertyReport> {
    is_norm_fair_with(instance, x, norm, &NormFairOptions::default())
}

/// The fair allocation is unique, so `X` is fair exactly when it matches the
/// water-filling output. Instances with at most three agents and goods also
/// get a grid search for a strictly fairer allocation.
pub fn is_norm_fair_with(
    instance: &Instance,
    x: &Allocation,
    norm: &Norm,
    options: &NormFairOptions,
) -> Result<PropertyReport> {
    instance.check_feasible(x)?;
    let mut report = PropertyReport::new(format!("norm-fair:{norm}"));
    let x = reduce(instance, x, &mut report);
    let fair = grf_allocate(instance, norm)?;
    let diff = fair.allocation.max_abs_diff(&x);
    if diff > AGREEMENT_TOL {
        let (mut wi, mut wj, mut best) = (0, 0, -1.0);
        for i in 0..instance.n() {
            for j in 0..instance.m() {
                let d = (fair.allocation.get(i, j) - x.get(i, j)).abs();
                if d > best {
                    (wi, wj, best) = (i, j, d);
                }
            }
        }
        report.fail(Witness::new(
            vec![wi],
            vec![wj],
            "|x_ij - fair_ij| <= 1e-6",
            diff,
            AGREEMENT_TOL,
        ));
    }
    if options.certificate_grid > 0 && instance.n() <= 3 && instance.m() <= 3 {
        if let Some(w) = fairer_on_grid(instance, &x, norm, options.certificate_grid) {
            report.fail(w);
        }
    }
    Ok(report)
}

/// Parsimonious bundles at `k + 1` evenly spaced levels in a range per agent.
struct LevelGrid {
    levels: Vec<f64>,
    bundles: Vec<Vec<f64>>,
    scaled: Vec<f64>,
}

/// `[0, T_i]` for every agent, `T_i` being its standalone level.
fn standalone_ranges(instance: &Instance) -> Vec<(f64, f64)> {
    (0..instance.n()).map(|i| (0.0, instance.standalone_level(i))).collect()
}

fn level_grids(instance: &Instance, norm: &Norm, ranges: &[(f64, f64)], k: usize) -> Vec<LevelGrid> {
    ranges
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let u = instance.utility(i);
            let e = instance.agents()[i].entitlement;
            let mut grid = LevelGrid {
                levels: Vec::with_capacity(k + 1),
                bundles: Vec::with_capacity(k + 1),
                scaled: Vec::with_capacity(k + 1),
            };
            for g in 0..=k {
                let t = if g == k { hi } else { lo + (hi - lo) * g as f64 / k as f64 };
                let w = u
                    .bundle_at(t)
                    .into_finite()
                    .expect("levels up to the standalone level have finite bundles");
                grid.scaled.push(norm.eval(&w) / e);
                grid.levels.push(t);
                grid.bundles.push(w);
            }
            grid
        })
        .collect()
}

fn fits(grids: &[LevelGrid], point: &[usize], q: &[f64]) -> bool {
    q.iter().enumerate().all(|(j, qj)| {
        let used: f64 = grids.iter().zip(point).map(|(g, &p)| g.bundles[p][j]).sum();
        used <= qj + 1e-12 * qj.max(1.0)
    })
}

fn fairer_on_grid(instance: &Instance, x: &Allocation, norm: &Norm, k: usize) -> Option<Witness> {
    let grids = level_grids(instance, norm, &standalone_ranges(instance), k);
    let q = instance.quantities();
    let e = instance.entitlements();
    let n = instance.n();
    let mut point = vec![0; n];
    loop {
        if fits(&grids, &point, &q) {
            let y = Allocation::from_rows(
                grids.iter().zip(&point).map(|(g, &p)| g.bundles[p].clone()).collect(),
            )
            .expect("bundles share a length");
            if fairer_than(x, &y, norm, &e) == Fairer::Y {
                let (dx, dy) = differing_minima(x, &y, norm, &e);
                return Some(Witness::new(
                    (0..n).collect(),
                    vec![],
                    "min over D of |y_i|/e_i <= min over D of |x_i|/e_i",
                    dy,
                    dx,
                ));
            }
        }
        // Odometer increment over the grid.
        let mut i = 0;
        loop {
            if i == n {
                return None;
            }
            point[i] += 1;
            if point[i] < grids[i].levels.len() {
                break;
            }
            point[i] = 0;
            i += 1;
        }
    }
}

fn differing_minima(x: &Allocation, y: &Allocation, norm: &Norm, e: &[f64]) -> (f64, f64) {
    let (mut mx, mut my) = (f64::INFINITY, f64::INFINITY);
    for (i, ei) in e.iter().enumerate() {
        let (nx, ny) = (norm.eval(x.row(i)), norm.eval(y.row(i)));
        if (nx - ny).abs() > TOL {
            mx = mx.min(nx / ei);
            my = my.min(ny / ei);
        }
    }
    (mx, my)
}

/// Bottleneck-based fairness: parsimonious, and every agent is either
/// satiated or holds at least its entitlement share of some exhausted good.
pub fn is_bbf(instance: &Instance, x: &Allocation) -> Result<PropertyReport> {
    let mut report = is_parsimonious_allocation(instance, x)?;
    report.property = "bbf".into();
    let y = reduce(instance, x, &mut report);
    let q = instance.quantities();
    let leftover = y.leftover(&q);
    let bottlenecks: Vec<usize> = (0..instance.m())
        .filter(|&j| leftover[j] <= BOTTLENECK_TOL * q[j].max(1.0))
        .collect();
    for i in 0..instance.n() {
        let u = instance.utility(i);
        if let Some(cap) = u.cap() {
            if cap - u.level(y.row(i)) <= BOTTLENECK_TOL * cap.max(1.0) {
                continue;
            }
        }
        let e = instance.agents()[i].entitlement;
        let best = bottlenecks
            .iter()
            .map(|&j| y.get(i, j) / q[j])
            .fold(f64::NEG_INFINITY, f64::max);
        if !(best >= e - SHARE_SLACK) {
            report.fail(Witness::new(
                vec![i],
                bottlenecks.clone(),
                "e_i <= max over bottleneck goods j of x_ij / q_j",
                e,
                best.max(0.0),
            ));
        }
    }
    Ok(report)
}

/// Exact leximin solution on a grid of utility levels.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub allocation: Allocation,
    pub levels: Vec<f64>,
    /// Sorted entitlement-scaled norms of the winning point.
    pub profile: Vec<f64>,
    /// The level range searched for each agent.
    pub ranges: Vec<(f64, f64)>,
}

/// Largest instance the oracle accepts.
pub const ORACLE_MAX_AGENTS: usize = 4;
pub const ORACLE_MAX_GOODS: usize = 4;
pub const ORACLE_MAX_GRID: usize = 400;
const ORACLE_MAX_WORK: f64 = 2e8;

/// Leximin over entitlement-scaled norms, found by exhaustive search over
/// `k + 1` levels per agent subject to feasibility.
///
/// A pass on the grid `{T_i·g/k}` finds the largest threshold `v` that all
/// agents can reach at once. The exact leximin point gives every agent a
/// scaled norm of at least `v`, so agent `i`'s level lies between `L_i`,
/// the last grid level below `v`, and `U_i`, the most it can get while
/// everyone else holds `L_k`. The exhaustive search then runs on a
/// `k`-step grid over this box.
pub fn brute_force_fairness_oracle(instance: &Instance, norm: &Norm, k: usize) -> Result<OracleSolution> {
    let (n, m) = (instance.n(), instance.m());
    if n > ORACLE_MAX_AGENTS || m > ORACLE_MAX_GOODS || k > ORACLE_MAX_GRID || k == 0 {
        return Err(Error::TooLarge(format!(
            "oracle accepts at most {ORACLE_MAX_AGENTS} agents, {ORACLE_MAX_GOODS} goods and a grid of \
             1..={ORACLE_MAX_GRID}; got {n} agents, {m} goods, grid {k}"
        )));
    }
    norm.validate()?;
    for i in 0..n {
        if !instance.utility(i).is_compatible(norm) {
            return Err(Error::Incompatible {
                agent: Some(i),
                norm: norm.to_string(),
            });
        }
    }
    let q = instance.quantities();

    let full = standalone_ranges(instance);
    let ranges = zoom(instance, &level_grids(instance, norm, &full, k), &full, &q);

    let grids = level_grids(instance, norm, &ranges, k);
    let lower = max_min_point(&grids, &q);
    let mut upper = lower.clone();
    for i in 0..n {
        let mut p = lower.clone();
        let (mut a, mut b) = (lower[i], grids[i].levels.len());
        while b - a > 1 {
            p[i] = (a + b) / 2;
            if fits(&grids, &p, &q) {
                a = p[i];
            } else {
                b = p[i];
            }
        }
        upper[i] = a;
    }

    // Enumerate the agents with the smallest ranges; the widest is last.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| upper[i] - lower[i]);
    let work: f64 = order[..n - 1]
        .iter()
        .map(|&i| (upper[i] - lower[i] + 1) as f64)
        .product();
    if work > ORACLE_MAX_WORK {
        return Err(Error::TooLarge(format!("oracle search space of {work:.0} points")));
    }

    let mut best: Option<(Vec<f64>, Vec<usize>)> = None;
    let mut point = lower.clone();
    search(&grids, &q, &order, 0, &lower, &upper, &mut point, &mut best);
    let (profile, point) = best.expect("the threshold point is feasible");
    let allocation = Allocation::from_rows(
        grids.iter().zip(&point).map(|(g, &p)| g.bundles[p].clone()).collect(),
    )
    .expect("bundles share a length");
    Ok(OracleSolution {
        allocation,
        levels: grids.iter().zip(&point).map(|(g, &p)| g.levels[p]).collect(),
        profile,
        ranges,
    })
}

/// Narrows each agent's level range to the box certified by the max-min
/// threshold of `grids`.
fn zoom(instance: &Instance, grids: &[LevelGrid], ranges: &[(f64, f64)], q: &[f64]) -> Vec<(f64, f64)> {
    let (n, m) = (instance.n(), instance.m());
    let base = max_min_point(grids, q);
    let floors: Vec<f64> = (0..n).map(|i| grids[i].levels[base[i].saturating_sub(1)]).collect();
    let floor_bundles: Vec<Vec<f64>> = (0..n).map(|i| grids[i].bundles[base[i].saturating_sub(1)].clone()).collect();
    (0..n)
        .map(|i| {
            let others: Vec<f64> = (0..m)
                .map(|j| (0..n).filter(|&k| k != i).map(|k| floor_bundles[k][j]).sum())
                .collect();
            let fits_alone = |t: f64| match instance.utility(i).bundle_at(t) {
                Bundle::Finite(w) => (0..m).all(|j| w[j] + others[j] <= q[j]),
                Bundle::Infinite => false,
            };
            // Keeps `hi` on the infeasible side, so the range contains
            // every feasible level.
            let (mut lo, mut hi) = (floors[i], ranges[i].1);
            if fits_alone(hi) {
                return (floors[i], hi);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if fits_alone(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (floors[i], hi)
        })
        .collect()
}

/// The grid point where each agent sits at the smallest level reaching the
/// largest scaled norm that all agents can reach together.
fn max_min_point(grids: &[LevelGrid], q: &[f64]) -> Vec<usize> {
    let reach = |g: &LevelGrid, v: f64| -> Option<usize> {
        let idx = g.scaled.partition_point(|s| *s < v);
        (idx < g.scaled.len()).then_some(idx)
    };
    let mut thresholds: Vec<f64> = grids.iter().flat_map(|g| g.scaled.iter().copied()).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let point_at = |v: f64| -> Option<Vec<usize>> { grids.iter().map(|g| reach(g, v)).collect() };
    let feasible_at = |v: f64| point_at(v).is_some_and(|p| fits(grids, &p, q));
    // The smallest threshold puts everyone at the bottom of their range,
    // which is feasible.
    let (mut lo, mut hi) = (0, thresholds.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible_at(thresholds[mid]) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    point_at(thresholds[lo]).expect("threshold is reachable")
}

#[allow(clippy::too_many_arguments)]
fn search(
    grids: &[LevelGrid],
    q: &[f64],
    order: &[usize],
    depth: usize,
    lower: &[usize],
    upper: &[usize],
    point: &mut Vec<usize>,
    best: &mut Option<(Vec<f64>, Vec<usize>)>,
) {
    let agent = order[depth];
    if depth + 1 == order.len() {
        // Raise the last agent as far as it fits.
        let (mut a, mut b) = (lower[agent], upper[agent] + 1);
        point[agent] = a;
        if !fits(grids, point, q) {
            return;
        }
        while b - a > 1 {
            point[agent] = (a + b) / 2;
            if fits(grids, point, q) {
                a = point[agent];
            } else {
                b = point[agent];
            }
        }
        point[agent] = a;
        let mut profile: Vec<f64> = grids.iter().zip(point.iter()).map(|(g, &p)| g.scaled[p]).collect();
        profile.sort_by(f64::total_cmp);
        let better = match best {
            None => true,
            Some((b, _)) => profile.iter().zip(b.iter()).find(|(x, y)| x != y).is_some_and(|(x, y)| x > y),
        };
        if better {
            *best = Some((profile, point.clone()));
        }
        point[agent] = lower[agent];
        return;
    }
    for g in lower[agent]..=upper[agent] {
        point[agent] = g;
        // Every deeper agent sits at its lower bound, so failing here rules
        // out all larger values too.
        if !fits(grids, point, q) {
            break;
        }
        search(grids, q, order, depth + 1, lower, upper, point, best);
    }
    point[agent] = lower[agent];
}
