//! Norm-fair allocation under entitlements by water-filling.
//!
//! Every active agent `i` is raised to a parsimonious bundle with
//! `‖x_i‖ = h·e_i` for the largest feasible `h`. Goods that run out join
//! the exhausted set `G`; agents that cannot grow without more of some good
//! in `G` (or that are satiated) freeze, their bundles are subtracted from
//! the remaining supply, and the loop repeats on the others. Each round
//! freezes at least one agent, so there are at most `n` rounds.
//!
//! For the Leontief family the step has a closed form. Any other compatible
//! utility goes through a bisection on `h`, with each agent's bundle found
//! by a second bisection on its utility level.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, Norm, Utility};

/// A good is exhausted once its leftover is within this fraction of its supply.
pub const EXHAUSTION_TOL: f64 = 1e-7;

/// How each allocation step finds its fairness level `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepMethod {
    /// Closed form when every agent is in the Leontief family, bisection otherwise.
    #[default]
    Auto,
    ClosedForm,
    Bisection,
}

#[derive(Debug, Clone, Copy)]
pub struct GrfOptions {
    pub method: StepMethod,
    /// Relative tolerance on `h` for the bisection path.
    pub tolerance: f64,
}

impl Default for GrfOptions {
    fn default() -> Self {
        GrfOptions {
            method: StepMethod::Auto,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrfIteration {
    pub h: f64,
    /// Goods exhausted so far (cumulative).
    pub exhausted: Vec<usize>,
    /// Agents frozen in this round.
    pub frozen: Vec<usize>,
    /// Frozen bundles plus the active agents' tentative bundles.
    pub snapshot: Allocation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GrfTrace {
    pub iterations: Vec<GrfIteration>,
}

impl GrfTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct GrfSolution {
    pub allocation: Allocation,
    /// Utility level of each agent's bundle.
    pub levels: Vec<f64>,
    pub trace: GrfTrace,
}

/// Result of one allocation step, indexed like the active set passed in.
#[derive(Debug, Clone)]
pub struct Step {
    pub h: f64,
    pub bundles: Vec<Vec<f64>>,
    pub levels: Vec<f64>,
}

/// Parsimonious bundle of `u` with norm `h`.
pub fn oracle_query(u: &Utility, norm: &Norm, h: f64) -> Result<Vec<f64>> {
    if !u.is_compatible(norm) {
        return Err(Error::Incompatible {
            agent: None,
            norm: norm.to_string(),
        });
    }
    match u.proportions() {
        Some(r) => leontief_query(r, u.is_satiable(), norm, h),
        None => oracle_query_bisect(u, norm, h, 1e-9).map(|(_, x)| x),
    }
}

fn leontief_query(r: &[f64], satiable: bool, norm: &Norm, h: f64) -> Result<Vec<f64>> {
    if h <= 0.0 {
        return Ok(vec![0.0; r.len()]);
    }
    let size = norm.eval(r);
    if satiable {
        if h > size + 1e-9 * h.max(1.0) {
            return Err(Error::Satiated {
                agent: None,
                level: h,
                cap: size,
            });
        }
        if h >= size {
            return Ok(r.to_vec());
        }
    }
    Ok(r.iter().map(|rj| h * rj / size).collect())
}

/// Generic oracle: bisection on the utility level using only `w(t)` and the
/// norm. Returns the level together with its bundle.
pub fn oracle_query_bisect(u: &Utility, norm: &Norm, h: f64, tol: f64) -> Result<(f64, Vec<f64>)> {
    let t = level_for_norm(u, norm, h, tol)?;
    let x = u
        .bundle_at(t)
        .into_finite()
        .expect("level_for_norm stays within the cap");
    Ok((t, x))
}

fn norm_at(u: &Utility, norm: &Norm, t: f64) -> f64 {
    u.bundle_at(t)
        .as_finite()
        .map_or(f64::INFINITY, |x| norm.eval(x))
}

fn level_for_norm(u: &Utility, norm: &Norm, h: f64, tol: f64) -> Result<f64> {
    if h <= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, f64::NAN);
    if let Some(cap) = u.cap() {
        let top = norm_at(u, norm, cap);
        if h > top + tol * h.max(1.0) {
            return Err(Error::Satiated {
                agent: None,
                level: h,
                cap: top,
            });
        }
        if h >= top {
            return Ok(cap);
        }
        hi = cap;
    }
    if let Utility::TabulatedPc(tab) = u {
        // Norms at breakpoints are increasing; narrow to one segment.
        for b in &tab.breakpoints[1..] {
            if norm_at(u, norm, b.t) >= h {
                hi = b.t;
                break;
            }
            lo = b.t;
        }
    }
    if hi.is_nan() {
        hi = if lo > 0.0 { 2.0 * lo } else { 1.0 };
        let mut doublings = 0;
        while norm_at(u, norm, hi) < h {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 2000 || !hi.is_finite() {
                return Err(Error::Unbounded);
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_at(u, norm, mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest `h` such that every active agent can hold a parsimonious bundle
/// of norm `h·e_i` within the remaining quantities.
pub fn allocation_step(
    instance: &Instance,
    active: &[usize],
    remaining: &[f64],
    norm: &Norm,
    method: StepMethod,
    tol: f64,
) -> Result<Step> {
    match resolve_method(instance, active, method)? {
        StepMethod::ClosedForm => closed_form_step(instance, active, remaining, norm),
        _ => bisection_step(instance, active, remaining, norm, tol),
    }
}

fn resolve_method(instance: &Instance, active: &[usize], method: StepMethod) -> Result<StepMethod> {
    let leontief = active.iter().all(|&i| instance.utility(i).proportions().is_some());
    match method {
        StepMethod::Auto if leontief => Ok(StepMethod::ClosedForm),
        StepMethod::Auto => Ok(StepMethod::Bisection),
        StepMethod::ClosedForm if !leontief => {
            let agent = active
                .iter()
                .copied()
                .find(|&i| instance.utility(i).proportions().is_none())
                .unwrap_or_default();
            Err(Error::UnsupportedUtility {
                agent,
                reason: "the closed-form step needs Leontief utilities".into(),
            })
        }
        other => Ok(other),
    }
}

fn closed_form_step(instance: &Instance, active: &[usize], remaining: &[f64], norm: &Norm) -> Result<Step> {
    let m = instance.m();
    let mut directions = Vec::with_capacity(active.len());
    let mut h = f64::INFINITY;
    let mut satiation = Vec::with_capacity(active.len());
    for &i in active {
        let agent = &instance.agents()[i];
        let r = agent.utility.proportions().expect("resolved to closed form");
        let size = norm.eval(r);
        directions.push(r.iter().map(|rj| agent.entitlement * rj / size).collect::<Vec<_>>());
        let limit = if agent.utility.is_satiable() {
            size / agent.entitlement
        } else {
            f64::INFINITY
        };
        h = h.min(limit);
        satiation.push(limit);
    }
    for j in 0..m {
        let demand: f64 = directions.iter().map(|d| d[j]).sum();
        if demand > 0.0 {
            h = h.min(remaining[j].max(0.0) / demand);
        }
    }
    if !h.is_finite() {
        return Err(Error::Unbounded);
    }
    let mut bundles = Vec::with_capacity(active.len());
    let mut levels = Vec::with_capacity(active.len());
    for (k, &i) in active.iter().enumerate() {
        let agent = &instance.agents()[i];
        let r = agent.utility.proportions().expect("resolved to closed form");
        if h >= satiation[k] {
            bundles.push(r.to_vec());
            levels.push(1.0);
        } else {
            levels.push(h * agent.entitlement / norm.eval(r));
            bundles.push(directions[k].iter().map(|d| d * h).collect());
        }
    }
    Ok(Step { h, bundles, levels })
}

fn bisection_step(
    instance: &Instance,
    active: &[usize],
    remaining: &[f64],
    norm: &Norm,
    tol: f64,
) -> Result<Step> {
    let m = instance.m();
    let evaluate = |h: f64| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut levels = Vec::with_capacity(active.len());
        let mut bundles = Vec::with_capacity(active.len());
        for &i in active {
            let (t, x) = oracle_query_bisect(instance.utility(i), norm, h * instance.agents()[i].entitlement, tol)
                .map_err(|e| with_agent(e, i))?;
            levels.push(t);
            bundles.push(x);
        }
        Ok((levels, bundles))
    };
    let fits = |bundles: &[Vec<f64>]| {
        (0..m).all(|j| bundles.iter().map(|x| x[j]).sum::<f64>() <= remaining[j].max(0.0))
    };

    let mut cap_h = f64::INFINITY;
    for &i in active {
        let u = instance.utility(i);
        if let Some(cap) = u.cap() {
            cap_h = cap_h.min(norm_at(u, norm, cap) / instance.agents()[i].entitlement);
        }
    }
    if cap_h.is_finite() {
        let (levels, bundles) = evaluate(cap_h)?;
        if fits(&bundles) {
            return Ok(Step {
                h: cap_h,
                bundles,
                levels,
            });
        }
    }

    let mut lo = 0.0;
    let mut hi = cap_h;
    if !hi.is_finite() {
        hi = 1.0;
        let mut doublings = 0;
        while fits(&evaluate(hi)?.1) {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 1000 {
                return Err(Error::Unbounded);
            }
        }
    }
    while hi - lo > tol * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fits(&evaluate(mid)?.1) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (levels, bundles) = evaluate(lo)?;
    Ok(Step { h: lo, bundles, levels })
}

fn with_agent(err: Error, i: usize) -> Error {
    match err {
        Error::Satiated { level, cap, .. } => Error::Satiated {
            agent: Some(i),
            level,
            cap,
        },
        Error::Incompatible { norm, .. } => Error::Incompatible { agent: Some(i), norm },
        other => other,
    }
}

/// Agents among `active` that cannot grow: some exhausted good they would
/// need more of, or a satiated utility. `levels` is parallel to `active`.
pub fn frozen_set(instance: &Instance, active: &[usize], exhausted: &[bool], levels: &[f64]) -> Vec<usize> {
    active
        .iter()
        .zip(levels)
        .filter(|&(&i, &t)| is_stuck(instance.utility(i), exhausted, t))
        .map(|(&i, _)| i)
        .collect()
}

fn is_stuck(u: &Utility, exhausted: &[bool], t: f64) -> bool {
    if let Some(cap) = u.cap() {
        if cap - t <= 1e-9 * cap.max(1.0) {
            return true;
        }
    }
    match u.proportions() {
        Some(r) => r.iter().zip(exhausted).any(|(rj, g)| *g && *rj > 0.0),
        None => {
            let delta = 1e-6 * t.max(1.0);
            let now = u.bundle_at(t);
            let now = now.as_finite().expect("active levels are attainable");
            match u.bundle_at(t + delta) {
                crate::model::Bundle::Infinite => true,
                crate::model::Bundle::Finite(next) => (0..now.len()).any(|j| exhausted[j] && next[j] > now[j]),
            }
        }
    }
}

/// The unique norm-fair allocation under entitlements.
pub fn grf_allocate(instance: &Instance, norm: &Norm) -> Result<GrfSolution> {
    grf_allocate_with(instance, norm, &GrfOptions::default())
}

pub fn grf_allocate_with(instance: &Instance, norm: &Norm, options: &GrfOptions) -> Result<GrfSolution> {
    norm.validate()?;
    for (i, agent) in instance.agents().iter().enumerate() {
        if !agent.utility.is_compatible(norm) {
            return Err(Error::Incompatible {
                agent: Some(i),
                norm: norm.to_string(),
            });
        }
    }
    let (n, m) = (instance.n(), instance.m());
    let quantities = instance.quantities();
    let method = resolve_method(instance, &(0..n).collect::<Vec<_>>(), options.method)?;
    let threshold = EXHAUSTION_TOL.max(10.0 * options.tolerance);

    let mut remaining = quantities.clone();
    let mut active: Vec<usize> = (0..n).collect();
    let mut exhausted = vec![false; m];
    let mut allocation = Allocation::zeros(n, m);
    let mut levels = vec![0.0; n];
    let mut trace = GrfTrace::default();

    while !active.is_empty() {
        let step = allocation_step(instance, &active, &remaining, norm, method, options.tolerance)?;

        for j in 0..m {
            if exhausted[j] || !active.iter().any(|&i| instance.utility(i).demands(j)) {
                continue;
            }
            let used: f64 = step.bundles.iter().map(|x| x[j]).sum();
            if remaining[j] - used <= threshold * quantities[j].max(1.0) {
                exhausted[j] = true;
            }
        }

        let frozen = frozen_set(instance, &active, &exhausted, &step.levels);
        if frozen.is_empty() {
            return Err(Error::NoProgress {
                iteration: trace.len() + 1,
            });
        }

        let mut snapshot = allocation.clone();
        for (k, &i) in active.iter().enumerate() {
            snapshot.row_mut(i).copy_from_slice(&step.bundles[k]);
        }
        for (k, &i) in active.iter().enumerate() {
            if !frozen.contains(&i) {
                continue;
            }
            allocation.row_mut(i).copy_from_slice(&step.bundles[k]);
            levels[i] = step.levels[k];
            for j in 0..m {
                remaining[j] = (remaining[j] - step.bundles[k][j]).max(0.0);
            }
        }
        active.retain(|i| !frozen.contains(i));
        trace.iterations.push(GrfIteration {
            h: step.h,
            exhausted: (0..m).filter(|&j| exhausted[j]).collect(),
            frozen,
            snapshot,
        });
    }

    Ok(GrfSolution {
        allocation,
        levels,
        trace,
    })
}
