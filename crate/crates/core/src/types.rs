//! Declarations, weekly batches, inspection budgets and the label gate.

use std::cell::{Cell, RefCell};
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What an inspection reveals about a declaration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InspectionOutcome {
    pub illicit: bool,
    /// Extra duties recoverable by inspecting the item. Zero for licit items.
    pub revenue: f64,
}

impl InspectionOutcome {
    pub const LICIT: InspectionOutcome = InspectionOutcome {
        illicit: false,
        revenue: 0.0,
    };

    pub fn illicit(revenue: f64) -> Self {
        InspectionOutcome {
            illicit: true,
            revenue,
        }
    }
}

/// One import-declaration record.
///
/// The ground truth is private: simulation code reads it through a
/// [`LabelGate`], which audits every access.
#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub id: u64,
    pub week: u32,
    pub fob_value: f64,
    pub gross_weight: f64,
    pub quantity: u32,
    pub tariff_code: String,
    pub importer_id: String,
    pub declarant_id: String,
    pub office_id: String,
    ground_truth: InspectionOutcome,
}

/// Trade features of a declaration, without its label.
#[derive(Debug, Clone, PartialEq)]
pub struct DeclarationFields {
    pub id: u64,
    pub week: u32,
    pub fob_value: f64,
    pub gross_weight: f64,
    pub quantity: u32,
    pub tariff_code: String,
    pub importer_id: String,
    pub declarant_id: String,
    pub office_id: String,
}

impl Declaration {
    /// Builds a declaration, enforcing the record invariants.
    pub fn new(fields: DeclarationFields, ground_truth: InspectionOutcome) -> Result<Self> {
        let id = fields.id;
        let bad = |reason: &str| Error::InvalidDeclaration {
            id,
            reason: reason.to_string(),
        };
        if !(fields.fob_value.is_finite() && fields.fob_value > 0.0) {
            return Err(bad("fob_value must be positive"));
        }
        if !(fields.gross_weight.is_finite() && fields.gross_weight > 0.0) {
            return Err(bad("gross_weight must be positive"));
        }
        if fields.quantity < 1 {
            return Err(bad("quantity must be at least 1"));
        }
        if !(ground_truth.revenue.is_finite() && ground_truth.revenue >= 0.0) {
            return Err(bad("revenue must be non-negative"));
        }
        if !ground_truth.illicit && ground_truth.revenue != 0.0 {
            return Err(bad("licit items carry zero revenue"));
        }
        Ok(Declaration {
            id: fields.id,
            week: fields.week,
            fob_value: fields.fob_value,
            gross_weight: fields.gross_weight,
            quantity: fields.quantity,
            tariff_code: fields.tariff_code,
            importer_id: fields.importer_id,
            declarant_id: fields.declarant_id,
            office_id: fields.office_id,
            ground_truth,
        })
    }

    /// Unaudited label access, for serialization and data generation only.
    pub(crate) fn ground_truth(&self) -> InspectionOutcome {
        self.ground_truth
    }
}

/// All declarations sharing one week index.
#[derive(Debug, Clone, PartialEq)]
pub struct WeekBatch {
    pub week: u32,
    pub items: Vec<Declaration>,
}

impl WeekBatch {
    pub fn new(week: u32, items: Vec<Declaration>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if let Some(d) = items.iter().find(|d| d.week != week) {
            return Err(Error::InvalidDeclaration {
                id: d.id,
                reason: format!("week {} in batch for week {week}", d.week),
            });
        }
        Ok(WeekBatch { week, items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Number of items that may be inspected from a batch: `max(1, floor(rate * n))`.
pub fn budget(batch: &WeekBatch, inspection_rate: f64) -> Result<usize> {
    budget_for_size(batch.len(), inspection_rate)
}

pub(crate) fn budget_for_size(n: usize, inspection_rate: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    if !(inspection_rate > 0.0 && inspection_rate <= 1.0) {
        return Err(Error::config("inspection_rate", "must lie in (0, 1]"));
    }
    // The nudge absorbs representation error such as 0.29 * 100 = 28.999999999999996.
    let raw = (inspection_rate * n as f64 + 1e-9).floor() as usize;
    Ok(raw.clamp(1, n))
}

/// Counts of audited label reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakReport {
    /// Reads made on behalf of a selection strategy.
    pub strategy_reads: u64,
    /// Strategy reads of items that were never inspected. Must stay zero.
    pub unselected_reads: u64,
    /// Reads made by the evaluator to compute metrics.
    pub evaluation_reads: u64,
}

impl LeakReport {
    pub fn merge(&mut self, other: LeakReport) {
        self.strategy_reads += other.strategy_reads;
        self.unselected_reads += other.unselected_reads;
        self.evaluation_reads += other.evaluation_reads;
    }
}

/// Audited access to ground truth.
///
/// Strategy-side reads succeed only for items previously opened for
/// inspection; any other attempt is refused and counted. Evaluator reads are
/// always allowed and counted separately.
#[derive(Debug, Default)]
pub struct LabelGate {
    inspected: RefCell<HashSet<u64>>,
    strategy_reads: Cell<u64>,
    unselected_reads: Cell<u64>,
    evaluation_reads: Cell<u64>,
}

impl LabelGate {
    pub fn new() -> Self {
        Self::default()
    }

    /// Marks items as inspected, making their labels readable by strategies.
    pub fn open_inspection<'a>(&self, ids: impl IntoIterator<Item = &'a u64>) {
        self.inspected.borrow_mut().extend(ids.into_iter().copied());
    }

    pub fn is_inspected(&self, id: u64) -> bool {
        self.inspected.borrow().contains(&id)
    }

    /// Strategy-side read. Returns `None` for uninspected items.
    pub fn label(&self, d: &Declaration) -> Option<InspectionOutcome> {
        self.strategy_reads.set(self.strategy_reads.get() + 1);
        if self.is_inspected(d.id) {
            Some(d.ground_truth)
        } else {
            self.unselected_reads.set(self.unselected_reads.get() + 1);
            None
        }
    }

    /// Evaluator-side read, used only to score a selection after the fact.
    pub fn evaluate(&self, d: &Declaration) -> InspectionOutcome {
        self.evaluation_reads.set(self.evaluation_reads.get() + 1);
        d.ground_truth
    }

    pub fn report(&self) -> LeakReport {
        LeakReport {
            strategy_reads: self.strategy_reads.get(),
            unselected_reads: self.unselected_reads.get(),
            evaluation_reads: self.evaluation_reads.get(),
        }
    }
}
