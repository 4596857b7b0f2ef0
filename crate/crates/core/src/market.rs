//! Fisher-market equilibrium for Leontief economies, and BBF allocations
//! derived from it.
//!
//! Equilibrium prices minimise the convex dual of the Eisenberg–Gale program
//!
//! ```text
//! φ(π) = Σ_j q_j π_j − Σ_i e_i log(π·r_i),    π >= 0,
//! ```
//!
//! whose gradient is `q_j − Σ_i e_i r_ij / (π·r_i)`: supply minus demand
//! when each agent spends its whole budget on its proportions. At the
//! minimiser every priced good clears and every free good is in excess
//! supply. The parsimonious equilibrium bundles `y_i = e_i r_i / (π·r_i)`
//! form a BBF allocation.
//!
//! Satiable Leontief agents are first converted into plain Leontief agents
//! by giving each one a private good of quantity 1 (see [`extend_satiable`]).

use serde::Serialize;

use crate::checks::{PropertyReport, Witness};
use crate::error::{Error, Result};
use crate::model::{Agent, Allocation, Good, Instance, Utility};

/// Prices below this are reported as exactly zero.
pub const PRICE_SNAP: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VirtualGood {
    /// Index of the good in the extended instance.
    pub good: usize,
    /// The only agent that demands it.
    pub agent: usize,
}

/// An instance whose satiable agents were made non-satiable.
#[derive(Debug, Clone)]
pub struct ExtensionMap {
    pub original: Instance,
    pub extended: Instance,
    pub virtual_goods: Vec<VirtualGood>,
}

/// Appends one private good per satiable Leontief agent so that its
/// utility becomes Leontief with proportions `(r, 1)`.
pub fn extend_satiable(instance: &Instance) -> Result<ExtensionMap> {
    let m = instance.m();
    let mut satiable = Vec::new();
    for (i, agent) in instance.agents().iter().enumerate() {
        match &agent.utility {
            Utility::SatiableLeontief { .. } => satiable.push(i),
            Utility::TabulatedPc(tab) if tab.tail == crate::model::Tail::Satiate => {
                return Err(Error::UnsupportedUtility {
                    agent: i,
                    reason: "satiable tabulated utilities have no market pipeline".into(),
                })
            }
            _ => {}
        }
    }
    if satiable.is_empty() {
        return Ok(ExtensionMap {
            original: instance.clone(),
            extended: instance.clone(),
            virtual_goods: Vec::new(),
        });
    }

    let mut goods = instance.goods().to_vec();
    let mut virtual_goods = Vec::with_capacity(satiable.len());
    for (k, &i) in satiable.iter().enumerate() {
        goods.push(Good {
            name: format!("virtual:{}", instance.agents()[i].name),
            quantity: 1.0,
        });
        virtual_goods.push(VirtualGood { good: m + k, agent: i });
    }
    let agents = instance
        .agents()
        .iter()
        .enumerate()
        .map(|(i, agent)| {
            let utility = match &agent.utility {
                Utility::Leontief { r } | Utility::SatiableLeontief { r } => {
                    let mut extended = r.clone();
                    extended.extend(satiable.iter().map(|&s| if s == i { 1.0 } else { 0.0 }));
                    Utility::Leontief { r: extended }
                }
                Utility::TabulatedPc(tab) => {
                    let mut tab = tab.clone();
                    for b in &mut tab.breakpoints {
                        b.w.extend(std::iter::repeat_n(0.0, satiable.len()));
                    }
                    Utility::TabulatedPc(tab)
                }
            };
            Agent {
                name: agent.name.clone(),
                entitlement: agent.entitlement,
                utility,
            }
        })
        .collect();
    Ok(ExtensionMap {
        original: instance.clone(),
        extended: Instance::new(goods, agents)?,
        virtual_goods,
    })
}

fn leontief_rows(instance: &Instance) -> Result<Vec<&[f64]>> {
    instance
        .agents()
        .iter()
        .enumerate()
        .map(|(i, a)| match &a.utility {
            Utility::Leontief { r } => Ok(r.as_slice()),
            other => Err(Error::UnsupportedUtility {
                agent: i,
                reason: format!(
                    "the dual solver needs plain Leontief utilities, got {}{}",
                    other.kind(),
                    if other.is_satiable() { " (extend it first)" } else { "" }
                ),
            }),
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dual objective; `+∞` where some agent's bundle is free.
pub fn dual_objective(instance: &Instance, prices: &[f64]) -> Result<f64> {
    let rows = leontief_rows(instance)?;
    Ok(objective(&rows, &instance.entitlements(), &instance.quantities(), prices))
}

/// Analytic gradient of [`dual_objective`].
pub fn dual_gradient(instance: &Instance, prices: &[f64]) -> Result<Vec<f64>> {
    let rows = leontief_rows(instance)?;
    Ok(gradient(&rows, &instance.entitlements(), &instance.quantities(), prices))
}

fn objective(rows: &[&[f64]], e: &[f64], q: &[f64], pi: &[f64]) -> f64 {
    let mut value = dot(q, pi);
    for (r, ei) in rows.iter().zip(e) {
        let cost = dot(r, pi);
        if cost <= 0.0 {
            return f64::INFINITY;
        }
        value -= ei * cost.ln();
    }
    value
}

/// `φ(to) − φ(from)`, computed from the step itself so that it stays
/// accurate when the change is far below the magnitude of `φ`.
fn objective_change(rows: &[&[f64]], e: &[f64], q: &[f64], from: &[f64], to: &[f64]) -> f64 {
    let d: Vec<f64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
    let mut change = dot(q, &d);
    for (r, ei) in rows.iter().zip(e) {
        if dot(r, to) <= 0.0 {
            return f64::INFINITY;
        }
        change -= ei * (dot(r, &d) / dot(r, from)).ln_1p();
    }
    change
}

fn gradient(rows: &[&[f64]], e: &[f64], q: &[f64], pi: &[f64]) -> Vec<f64> {
    let mut g = q.to_vec();
    for (r, ei) in rows.iter().zip(e) {
        let cost = dot(r, pi);
        for (gj, rj) in g.iter_mut().zip(r.iter()) {
            *gj -= ei * rj / cost;
        }
    }
    g
}

/// `‖π − max(π − ∇φ, 0)‖₂`, zero exactly at a constrained minimiser.
fn projected_gradient_norm(pi: &[f64], g: &[f64]) -> f64 {
    pi.iter()
        .zip(g)
        .map(|(p, gj)| {
            let d = p - (p - gj).max(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct DualOptions {
    /// Stop once the projected gradient norm is below `tolerance·max(1, |φ|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Sufficient-decrease slope for the Armijo test.
    pub armijo: f64,
    /// Step shrink factor while backtracking.
    pub shrink: f64,
    /// Keep the objective value after every accepted step.
    pub record_history: bool,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            tolerance: 1e-9,
            max_iterations: 100_000,
            armijo: 1e-4,
            shrink: 0.5,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub prices: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub projected_gradient_norm: f64,
    /// Objective after each accepted step, starting at the initial point.
    /// Values are accumulated from exact step changes.
    pub history: Vec<f64>,
    /// Prices after each accepted step, matching `history`.
    pub iterates: Vec<Vec<f64>>,
}

/// Equilibrium prices of an all-Leontief Fisher market.
pub fn eg_dual_solve(instance: &Instance) -> Result<Vec<f64>> {
    eg_dual_solve_with(instance, &DualOptions::default()).map(|s| s.prices)
}

/// Projected gradient descent with Armijo backtracking, started from
/// `π = 1`. Trial steps use the Barzilai–Borwein length; every accepted step
/// satisfies the sufficient-decrease test, so `φ` never increases.
pub fn eg_dual_solve_with(instance: &Instance, options: &DualOptions) -> Result<DualSolution> {
    let rows = leontief_rows(instance)?;
    let e = instance.entitlements();
    let q = instance.quantities();
    let m = instance.m();

    let mut pi = vec![1.0; m];
    let mut f = objective(&rows, &e, &q, &pi);
    let mut g = gradient(&rows, &e, &q, &pi);
    let mut history = Vec::new();
    let mut iterates = Vec::new();
    if options.record_history {
        history.push(f);
        iterates.push(pi.clone());
    }
    let mut step = 1.0;
    let mut iterations = 0;
    let mut residual = projected_gradient_norm(&pi, &g);

    while residual > options.tolerance * f.abs().max(1.0) {
        if iterations >= options.max_iterations {
            return Err(Error::Diverged { iterations, residual });
        }
        iterations += 1;

        let mut t = step;
        let (candidate, change) = loop {
            let candidate: Vec<f64> = pi.iter().zip(&g).map(|(p, gj)| (p - t * gj).max(0.0)).collect();
            let change = objective_change(&rows, &e, &q, &pi, &candidate);
            let decrease: f64 = g.iter().zip(candidate.iter().zip(&pi)).map(|(gj, (c, p))| gj * (c - p)).sum();
            if change <= options.armijo * decrease {
                break (candidate, change);
            }
            t *= options.shrink;
            if t < 1e-300 {
                return Err(Error::Diverged { iterations, residual });
            }
        };

        let g_new = gradient(&rows, &e, &q, &candidate);
        let (mut ss, mut sy) = (0.0, 0.0);
        for j in 0..m {
            let s = candidate[j] - pi[j];
            ss += s * s;
            sy += s * (g_new[j] - g[j]);
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (t * 2.0).min(1e12) };

        pi = candidate;
        f += change;
        g = g_new;
        if options.record_history {
            history.push(f);
            iterates.push(pi.clone());
        }
        residual = projected_gradient_norm(&pi, &g);
    }

    // φ is minimised along the ray {sπ} at s = Σe / (π·q); this exact step
    // pins the budget identity Σ_j π_j q_j = Σ_i e_i.
    let total_budget: f64 = e.iter().sum();
    let spend = dot(&pi, &q);
    if spend > 0.0 {
        let s = total_budget / spend;
        let scaled: Vec<f64> = pi.iter().map(|p| p * s).collect();
        let change = objective_change(&rows, &e, &q, &pi, &scaled);
        if change <= 0.0 {
            pi = scaled;
            f += change;
            if options.record_history {
                history.push(f);
                iterates.push(pi.clone());
            }
        }
    }
    for p in &mut pi {
        if *p < PRICE_SNAP {
            *p = 0.0;
        }
    }
    let g = gradient(&rows, &e, &q, &pi);
    Ok(DualSolution {
        objective: objective(&rows, &e, &q, &pi),
        projected_gradient_norm: projected_gradient_norm(&pi, &g),
        prices: pi,
        iterations,
        history,
        iterates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// `max_i |t_i (π·r_i) − e_i|`.
    pub budget_gap: f64,
    /// `max_{j: π_j > 0} |Σ_i y_ij − q_j|`.
    pub clearing_gap: f64,
    pub dual_gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub prices: Vec<f64>,
    pub levels: Vec<f64>,
    /// Parsimonious equilibrium bundles; free goods may be left over.
    pub allocation: Allocation,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl EquilibriumResult {
    /// The allocation with every free good's leftover handed to agent 0, so
    /// that all markets clear exactly.
    pub fn padded_allocation(&self, instance: &Instance) -> Allocation {
        let mut x = self.allocation.clone();
        let leftover = x.leftover(&instance.quantities());
        for (j, z) in leftover.into_iter().enumerate() {
            if self.prices[j] == 0.0 && z > 0.0 {
                x.row_mut(0)[j] += z;
            }
        }
        x
    }
}

/// Demands `t_i = e_i / (π·r_i)` and parsimonious bundles `t_i r_i`.
pub fn equilibrium_from_prices(instance: &Instance, prices: &[f64]) -> Result<EquilibriumResult> {
    let rows = leontief_rows(instance)?;
    if prices.len() != instance.m() {
        return Err(Error::Shape(format!(
            "{} prices for {} goods",
            prices.len(),
            instance.m()
        )));
    }
    let e = instance.entitlements();
    let q = instance.quantities();
    let mut levels = Vec::with_capacity(rows.len());
    let mut allocation = Allocation::zeros(instance.n(), instance.m());
    let mut budget_gap: f64 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let cost = dot(r, prices);
        if !(cost > 0.0) {
            return Err(Error::BadPrices { agent: i, cost });
        }
        let t = e[i] / cost;
        for (x, rj) in allocation.row_mut(i).iter_mut().zip(r.iter()) {
            *x = t * rj;
        }
        budget_gap = budget_gap.max((t * cost - e[i]).abs());
        levels.push(t);
    }
    let clearing_gap = (0..instance.m())
        .filter(|&j| prices[j] > 0.0)
        .map(|j| (allocation.column_total(j) - q[j]).abs())
        .fold(0.0, f64::max);
    let g = gradient(&rows, &e, &q, prices);
    Ok(EquilibriumResult {
        prices: prices.to_vec(),
        levels,
        allocation,
        residuals: Residuals {
            budget_gap,
            clearing_gap,
            dual_gradient_norm: projected_gradient_norm(prices, &g),
        },
        iterations: 0,
    })
}

/// Checks both equilibrium conditions for `(π, Y)`: every agent spends its
/// budget on an optimal bundle, priced goods clear and free goods are not
/// over-allocated.
pub fn check_equilibrium(instance: &Instance, prices: &[f64], y: &Allocation, tol: f64) -> PropertyReport {
    let mut report = PropertyReport::new("equilibrium");
    let rows = match leontief_rows(instance) {
        Ok(rows) => rows,
        Err(err) => {
            report.fail(Witness::new(vec![], vec![], format!("supported utilities ({err})"), 1.0, 0.0));
            return report;
        }
    };
    if prices.len() != instance.m() || y.n() != instance.n() || y.m() != instance.m() {
        report.fail(Witness::new(vec![], vec![], "prices and allocation match the instance shape", 1.0, 0.0));
        return report;
    }
    let e = instance.entitlements();
    let q = instance.quantities();
    for (i, r) in rows.iter().enumerate() {
        let cost = dot(r, prices);
        let t = instance.utility(i).level(y.row(i));
        let gap = (t * cost - e[i]).abs();
        if !(gap <= tol) {
            report.fail(Witness::new(
                vec![i],
                vec![],
                "|t_i (π·r_i) − e_i| <= tol",
                gap,
                tol,
            ));
        }
        let spent = dot(y.row(i), prices);
        if spent > e[i] + tol {
            report.fail(Witness::new(vec![i], vec![], "π·y_i <= e_i", spent, e[i] + tol));
        }
    }
    for j in 0..instance.m() {
        let total = y.column_total(j);
        if prices[j] > 0.0 {
            let gap = (total - q[j]).abs();
            if gap > tol {
                report.fail(Witness::new(vec![], vec![j], "|Σ_i y_ij − q_j| <= tol (priced good)", gap, tol));
            }
        } else if total > q[j] + tol {
            report.fail(Witness::new(vec![], vec![j], "Σ_i y_ij <= q_j (free good)", total, q[j] + tol));
        }
    }
    report
}

#[derive(Debug, Clone)]
pub struct BbfSolution {
    /// Parsimonious allocation over the original goods.
    pub allocation: Allocation,
    /// Utility levels under the original utilities.
    pub levels: Vec<f64>,
    /// Equilibrium of the extended market.
    pub equilibrium: EquilibriumResult,
    pub extension: ExtensionMap,
}

/// A BBF allocation for Leontief and satiable Leontief agents.
pub fn bbf_allocate(instance: &Instance) -> Result<BbfSolution> {
    bbf_allocate_with(instance, &DualOptions::default())
}

pub fn bbf_allocate_with(instance: &Instance, options: &DualOptions) -> Result<BbfSolution> {
    for (i, agent) in instance.agents().iter().enumerate() {
        if agent.utility.proportions().is_none() {
            return Err(Error::UnsupportedUtility {
                agent: i,
                reason: "BBF allocation is computed for Leontief and satiable Leontief utilities only".into(),
            });
        }
    }
    let extension = extend_satiable(instance)?;
    let dual = eg_dual_solve_with(&extension.extended, options)?;
    let mut equilibrium = equilibrium_from_prices(&extension.extended, &dual.prices)?;
    equilibrium.iterations = dual.iterations;

    let m = instance.m();
    let mut allocation = equilibrium.allocation.truncate_goods(m);
    let mut levels = Vec::with_capacity(instance.n());
    for i in 0..instance.n() {
        let u = instance.utility(i);
        if u.is_satiable() && equilibrium.levels[i] >= 1.0 {
            allocation
                .row_mut(i)
                .copy_from_slice(u.proportions().expect("checked above"));
        }
        levels.push(u.level(allocation.row(i)));
    }
    // Solver residue can leave a priced good over-allocated by a hair;
    // shrink uniformly so the result is feasible.
    let q = instance.quantities();
    let shrink = (0..m)
        .map(|j| {
            let total = allocation.column_total(j);
            if total > q[j] {
                q[j] / total
            } else {
                1.0
            }
        })
        .fold(1.0, f64::min);
    if shrink < 1.0 {
        for i in 0..instance.n() {
            for x in allocation.row_mut(i) {
                *x *= shrink;
            }
            levels[i] = instance.utility(i).level(allocation.row(i));
        }
    }
    Ok(BbfSolution {
        allocation,
        levels,
        equilibrium,
        extension,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sep() -> Instance {
        Instance::from_parts(
            &[1.0, 1.0],
            vec![(0.5, Utility::leontief([1.0, 0.0])), (0.5, Utility::leontief([1.0, 1.0]))],
        )
        .unwrap()
    }

    fn sat() -> Instance {
        Instance::from_parts(
            &[1.0, 1.0],
            vec![(0.5, Utility::satiable_leontief([0.4, 0.4])), (0.5, Utility::leontief([1.0, 0.0]))],
        )
        .unwrap()
    }

    fn fig3r() -> Instance {
        let e = 1.0 / 3.0;
        Instance::from_parts(
            &[1.0, 1.0],
            vec![
                (e, Utility::leontief([1.0, 0.0])),
                (e, Utility::leontief([0.0, 1.0])),
                (e, Utility::leontief([1.0, 1.0])),
            ],
        )
        .unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn extension_examples() {
        let ext = extend_satiable(&sat()).unwrap();
        assert_eq!(ext.extended.quantities(), vec![1.0, 1.0, 1.0]);
        assert_eq!(ext.extended.utility(0), &Utility::leontief([0.4, 0.4, 1.0]));
        assert_eq!(ext.extended.utility(1), &Utility::leontief([1.0, 0.0, 0.0]));
        assert_eq!(ext.virtual_goods, vec![VirtualGood { good: 2, agent: 0 }]);

        let plain = extend_satiable(&sep()).unwrap();
        assert_eq!(plain.extended, sep());
        assert!(plain.virtual_goods.is_empty());

        let two = Instance::from_parts(
            &[1.0],
            vec![(0.5, Utility::satiable_leontief([0.2])), (0.5, Utility::satiable_leontief([0.3]))],
        )
        .unwrap();
        let ext = extend_satiable(&two).unwrap();
        assert_eq!(ext.extended.utility(0), &Utility::leontief([0.2, 1.0, 0.0]));
        assert_eq!(ext.extended.utility(1), &Utility::leontief([0.3, 0.0, 1.0]));
    }

    #[test]
    fn tabulated_satiate_is_unsupported() {
        let inst = Instance::from_parts(
            &[1.0],
            vec![(1.0, Utility::tabulated(&[(0.0, &[0.0]), (1.0, &[0.5])], crate::model::Tail::Satiate))],
        )
        .unwrap();
        assert!(matches!(extend_satiable(&inst), Err(Error::UnsupportedUtility { .. })));
        assert!(matches!(bbf_allocate(&inst), Err(Error::UnsupportedUtility { .. })));
    }

    #[test]
    fn dual_solve_examples() {
        assert_close(&eg_dual_solve(&sep()).unwrap(), &[1.0, 0.0], 1e-8);
        assert_close(&eg_dual_solve(&fig3r()).unwrap(), &[0.5, 0.5], 1e-8);
        let free = Instance::from_parts(
            &[1.0, 10.0],
            vec![(0.5, Utility::leontief([1.0, 1.0])), (0.5, Utility::leontief([1.0, 1.0]))],
        )
        .unwrap();
        assert_close(&eg_dual_solve(&free).unwrap(), &[1.0, 0.0], 1e-8);
    }

    #[test]
    fn prices_to_equilibrium() {
        let eq = equilibrium_from_prices(&sep(), &[1.0, 0.0]).unwrap();
        assert_close(&eq.levels, &[0.5, 0.5], 1e-15);
        assert_eq!(eq.allocation.to_rows(), vec![vec![0.5, 0.0], vec![0.5, 0.5]]);
        assert_eq!(eq.residuals.clearing_gap, 0.0);

        let cross = Instance::from_parts(
            &[1.0, 1.0],
            vec![(0.5, Utility::leontief([1.0, 0.5])), (0.5, Utility::leontief([0.5, 1.0]))],
        )
        .unwrap();
        let eq = equilibrium_from_prices(&cross, &[0.5, 0.5]).unwrap();
        assert_close(&eq.levels, &[2.0 / 3.0, 2.0 / 3.0], 1e-15);
        assert_close(eq.allocation.row(0), &[2.0 / 3.0, 1.0 / 3.0], 1e-15);
        assert_close(eq.allocation.row(1), &[1.0 / 3.0, 2.0 / 3.0], 1e-15);

        let eq = equilibrium_from_prices(&fig3r(), &[0.5, 0.5]).unwrap();
        assert_close(&eq.levels, &[2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0], 1e-15);

        assert!(matches!(
            equilibrium_from_prices(&sep(), &[0.0, 1.0]),
            Err(Error::BadPrices { agent: 0, .. })
        ));
    }

    #[test]
    fn equilibrium_checks() {
        let y = Allocation::from_rows(vec![vec![0.5, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!(check_equilibrium(&sep(), &[1.0, 0.0], &y, 1e-9).verdict);
        let bad = check_equilibrium(&sep(), &[0.5, 0.5], &y, 1e-9);
        assert!(!bad.verdict);
        assert!(bad.witnesses.iter().any(|w| w.agents == vec![0]));

        let single = Instance::from_parts(&[1.0], vec![(1.0, Utility::leontief([1.0]))]).unwrap();
        let y = Allocation::from_rows(vec![vec![1.0]]).unwrap();
        assert!(check_equilibrium(&single, &[1.0], &y, 1e-9).verdict);
    }

    #[test]
    fn bbf_examples() {
        let sol = bbf_allocate(&sep()).unwrap();
        assert_close(sol.allocation.row(0), &[0.5, 0.0], 1e-8);
        assert_close(sol.allocation.row(1), &[0.5, 0.5], 1e-8);

        let sol = bbf_allocate(&sat()).unwrap();
        assert_close(&sol.equilibrium.prices, &[5.0 / 6.0, 0.0, 1.0 / 6.0], 1e-8);
        assert_close(sol.allocation.row(0), &[0.4, 0.4], 1e-8);
        assert_close(sol.allocation.row(1), &[0.6, 0.0], 1e-8);
        assert_eq!(sol.allocation.m(), 2);

        let single = Instance::from_parts(&[1.0, 1.0], vec![(1.0, Utility::leontief([1.0, 1.0]))]).unwrap();
        let sol = bbf_allocate(&single).unwrap();
        assert_close(sol.allocation.row(0), &[1.0, 1.0], 1e-8);
    }

    #[test]
    fn descent_is_monotone() {
        let opts = DualOptions {
            record_history: true,
            ..Default::default()
        };
        let sol = eg_dual_solve_with(&fig3r(), &opts).unwrap();
        assert!(sol.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn iteration_cap_reports_divergence() {
        let opts = DualOptions {
            max_iterations: 1,
            ..Default::default()
        };
        assert!(matches!(eg_dual_solve_with(&sep(), &opts), Err(Error::Diverged { .. })));
    }
}
