use serde::{Deserialize, Serialize};

use super::utility::Utility;
use super::TOL;
use crate::error::{Error, Result};

fn default_quantity() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Good {
    pub name: String,
    #[serde(default = "default_quantity")]
    pub quantity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub name: String,
    pub entitlement: f64,
    pub utility: Utility,
}

#[derive(Deserialize, Serialize)]
struct InstanceRepr {
    goods: Vec<Good>,
    agents: Vec<Agent>,
}

/// An economy: goods in fixed supply and agents with entitlements.
///
/// Construction validates every invariant, so a value of this type always
/// has positive quantities, positive entitlements summing to one, and
/// utilities of the right dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    goods: Vec<Good>,
    agents: Vec<Agent>,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = Error;

    fn try_from(repr: InstanceRepr) -> Result<Instance> {
        Instance::new(repr.goods, repr.agents)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(instance: Instance) -> InstanceRepr {
        InstanceRepr {
            goods: instance.goods,
            agents: instance.agents,
        }
    }
}

impl Instance {
    pub fn new(goods: Vec<Good>, agents: Vec<Agent>) -> Result<Instance> {
        let invalid = |msg: String| Err(Error::InvalidInstance(msg));
        if goods.is_empty() {
            return invalid("an instance needs at least one good".into());
        }
        if agents.is_empty() {
            return invalid("an instance needs at least one agent".into());
        }
        for g in &goods {
            if !(g.quantity.is_finite() && g.quantity > 0.0) {
                return invalid(format!(
                    "good `{}` must have a positive finite quantity, got {}",
                    g.name, g.quantity
                ));
            }
        }
        let m = goods.len();
        for a in &agents {
            if !(a.entitlement.is_finite() && a.entitlement > 0.0) {
                return invalid(format!(
                    "agent `{}` must have a positive entitlement, got {}",
                    a.name, a.entitlement
                ));
            }
            if let Err(msg) = a.utility.validate(m) {
                return invalid(format!("agent `{}`: {msg}", a.name));
            }
        }
        let total: f64 = agents.iter().map(|a| a.entitlement).sum();
        if (total - 1.0).abs() > TOL {
            return invalid(format!("entitlements must sum to 1 (within 1e-9), got {total}"));
        }
        Ok(Instance { goods, agents })
    }

    /// Shorthand with generated names: goods `g1, g2, ...`, agents `A, B, ...`.
    pub fn from_parts(quantities: &[f64], agents: Vec<(f64, Utility)>) -> Result<Instance> {
        let goods = quantities
            .iter()
            .enumerate()
            .map(|(j, &q)| Good {
                name: format!("g{}", j + 1),
                quantity: q,
            })
            .collect();
        let agents = agents
            .into_iter()
            .enumerate()
            .map(|(i, (e, utility))| Agent {
                name: agent_name(i),
                entitlement: e,
                utility,
            })
            .collect();
        Instance::new(goods, agents)
    }

    pub fn goods(&self) -> &[Good] {
        &self.goods
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn m(&self) -> usize {
        self.goods.len()
    }

    pub fn quantities(&self) -> Vec<f64> {
        self.goods.iter().map(|g| g.quantity).collect()
    }

    pub fn entitlements(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.entitlement).collect()
    }

    pub fn utility(&self, i: usize) -> &Utility {
        &self.agents[i].utility
    }

    /// True when every agent is Leontief or satiable Leontief.
    pub fn is_leontief_family(&self) -> bool {
        self.agents.iter().all(|a| a.utility.proportions().is_some())
    }

    /// Agent `i`'s utility if it were handed the entire supply.
    pub fn standalone_level(&self, i: usize) -> f64 {
        self.utility(i).level(&self.quantities())
    }

    /// Rejects allocations of the wrong shape or exceeding supply.
    pub fn check_feasible(&self, x: &Allocation) -> Result<()> {
        if x.n() != self.n() || x.m() != self.m() {
            return Err(Error::Shape(format!(
                "allocation is {}x{} but the instance has {} agents and {} goods",
                x.n(),
                x.m(),
                self.n(),
                self.m()
            )));
        }
        for j in 0..self.m() {
            let used = x.column_total(j);
            if used > self.goods[j].quantity + TOL {
                return Err(Error::InvalidInstance(format!(
                    "good `{}` is over-allocated: {used} > {}",
                    self.goods[j].name, self.goods[j].quantity
                )));
            }
        }
        if x.data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInstance(
                "allocation entries must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// A copy of this instance with goods and agents reordered.
    pub fn permuted(&self, agent_order: &[usize], good_order: &[usize]) -> Instance {
        let goods = good_order.iter().map(|&j| self.goods[j].clone()).collect();
        let agents = agent_order
            .iter()
            .map(|&i| {
                let mut a = self.agents[i].clone();
                a.utility = permute_utility(&a.utility, good_order);
                a
            })
            .collect();
        Instance { goods, agents }
    }
}

fn permute_utility(u: &Utility, good_order: &[usize]) -> Utility {
    let pick = |v: &[f64]| good_order.iter().map(|&j| v[j]).collect::<Vec<_>>();
    match u {
        Utility::Leontief { r } => Utility::Leontief { r: pick(r) },
        Utility::SatiableLeontief { r } => Utility::SatiableLeontief { r: pick(r) },
        Utility::TabulatedPc(tab) => {
            let mut tab = tab.clone();
            for b in &mut tab.breakpoints {
                b.w = pick(&b.w);
            }
            Utility::TabulatedPc(tab)
        }
    }
}

pub(crate) fn agent_name(i: usize) -> String {
    let mut name = String::new();
    let mut k = i;
    loop {
        name.insert(0, (b'A' + (k % 26) as u8) as char);
        if k < 26 {
            break;
        }
        k = k / 26 - 1;
    }
    name
}

/// An `n x m` matrix of nonnegative shares; row `i` is agent `i`'s bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Allocation {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl Allocation {
    pub fn zeros(n: usize, m: usize) -> Allocation {
        Allocation {
            n,
            m,
            data: vec![0.0; n * m],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Allocation> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("allocation rows have differing lengths".into()));
        }
        Ok(Allocation {
            n,
            m,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.m.max(1)).take(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn column_total(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    /// `z_j = q_j - Σ_i x_ij`.
    pub fn leftover(&self, quantities: &[f64]) -> Vec<f64> {
        (0..self.m).map(|j| quantities[j] - self.column_total(j)).collect()
    }

    pub fn max_abs_diff(&self, other: &Allocation) -> f64 {
        assert_eq!((self.n, self.m), (other.n, other.m), "allocation shapes differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Drops trailing goods, keeping the first `m` columns.
    pub fn truncate_goods(&self, m: usize) -> Allocation {
        Allocation::from_rows(self.rows().map(|r| r[..m].to_vec()).collect())
            .expect("rows share a length")
    }
}

impl TryFrom<Vec<Vec<f64>>> for Allocation {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Allocation> {
        Allocation::from_rows(rows)
    }
}

impl From<Allocation> for Vec<Vec<f64>> {
    fn from(x: Allocation) -> Vec<Vec<f64>> {
        x.to_rows()
    }
}
