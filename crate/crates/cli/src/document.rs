//! JSON documents written by the `solve` and `oracle` commands.

use std::io;

use fairshare::grf::GrfTrace;
use fairshare::market::Residuals;
use fairshare::{Allocation, Instance, Norm};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize)]
pub struct VirtualGoodEntry {
    pub good: String,
    pub index: usize,
    pub agent: String,
}

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct AllocationDocument {
    pub solver: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<String>,
    pub goods: Vec<String>,
    pub agents: Vec<String>,
    pub allocation: Allocation,
    pub levels: Vec<f64>,
    /// Each agent's norm under the solved norm.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norms: Option<Vec<f64>>,
    /// Prices of the goods of the extended market, original goods first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Residuals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub virtual_goods: Option<Vec<VirtualGoodEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<GrfTrace>,
    pub metadata: Metadata,
}

impl AllocationDocument {
    pub fn new(solver: &str, instance: &Instance, allocation: Allocation, levels: Vec<f64>, tolerance: f64) -> Self {
        AllocationDocument {
            solver: solver.into(),
            norm: None,
            goods: instance.goods().iter().map(|g| g.name.clone()).collect(),
            agents: instance.agents().iter().map(|a| a.name.clone()).collect(),
            allocation,
            levels,
            norms: None,
            prices: None,
            residuals: None,
            virtual_goods: None,
            trace: None,
            metadata: Metadata {
                tolerance,
                iterations: None,
                grid: None,
            },
        }
    }

    pub fn with_norm(mut self, norm: &Norm) -> Self {
        self.norm = Some(norm.to_string());
        self.norms = Some(self.allocation.rows().map(|r| norm.eval(r)).collect());
        self
    }
}

/// An allocation file: either a bare matrix or any document with an
/// `allocation` field.
#[derive(Deserialize)]
#[serde(untagged)]
pub enum AllocationFile {
    Matrix(Allocation),
    Document { allocation: Allocation },
}

impl AllocationFile {
    pub fn into_allocation(self) -> Allocation {
        match self {
            AllocationFile::Matrix(x) | AllocationFile::Document { allocation: x } => x,
        }
    }
}

/// Goods-by-agents table of shares `x_ij / q_j`.
pub fn write_csv<W: io::Write>(instance: &Instance, x: &Allocation, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["good".to_string(), "quantity".to_string()];
    header.extend(instance.agents().iter().map(|a| a.name.clone()));
    w.write_record(&header)?;
    for (j, good) in instance.goods().iter().enumerate() {
        let mut record = vec![good.name.clone(), crate::output::fmt_num(good.quantity)];
        record.extend((0..instance.n()).map(|i| crate::output::fmt_num(x.get(i, j) / good.quantity)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
