//! Class rebalancing by bootstrap oversampling or random undersampling, and
//! week binning of ventilation-day counts.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    Oversample,
    Undersample,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResamplePlan {
    pub mode: ResampleMode,
    pub seed: u64,
}

impl ResamplePlan {
    pub fn none() -> Self {
        Self {
            mode: ResampleMode::None,
            seed: 0,
        }
    }

    pub fn apply(&self, table: &DataTable) -> Result<DataTable> {
        match self.mode {
            ResampleMode::Oversample => oversample(table, self),
            ResampleMode::Undersample => undersample(table, self),
            ResampleMode::None => Ok(table.clone()),
        }
    }
}

/// (class, count) for every class with at least one row, by class id.
fn present_classes(table: &DataTable) -> Result<Vec<(usize, usize)>> {
    let counts = table.class_counts()?;
    let present: Vec<(usize, usize)> = counts.into_iter().enumerate().filter(|&(_, n)| n > 0).collect();
    if present.len() < 2 {
        return Err(Error::SingleClass);
    }
    Ok(present)
}

/// Grows every non-majority class to `max(count, floor(majority / 2))` by
/// drawing its rows uniformly with replacement and appending the copies.
/// Original rows are untouched and keep their order; copies carry their
/// origin row id with a replica counter.
pub fn oversample(table: &DataTable, plan: &ResamplePlan) -> Result<DataTable> {
    let present = present_classes(table)?;
    let labels = table.require_labels()?;
    let (majority_class, majority) = present
        .iter()
        .copied()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("at least two classes");
    let target = majority / 2;
    let mut rng = rng_from_seed(plan.seed);
    let mut sources = Vec::new();
    for &(class, count) in &present {
        if class == majority_class || count >= target {
            continue;
        }
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        for _ in count..target {
            sources.push(members[rng.gen_range(0..members.len())]);
        }
    }
    let mut out = table.clone();
    out.append_replicas(&sources);
    Ok(out)
}

/// Shrinks every class to the smallest class count by sampling rows without
/// replacement. The surviving rows keep their original relative order.
pub fn undersample(table: &DataTable, plan: &ResamplePlan) -> Result<DataTable> {
    let present = present_classes(table)?;
    let labels = table.require_labels()?;
    let minority = present.iter().map(|&(_, n)| n).min().expect("non-empty");
    let mut rng = rng_from_seed(plan.seed);
    let mut keep = Vec::with_capacity(minority * present.len());
    for &(class, count) in &present {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if count == minority {
            keep.extend(members);
        } else {
            keep.extend(sample(&mut rng, count, minority).into_iter().map(|k| members[k]));
        }
    }
    keep.sort_unstable();
    Ok(table.select_rows(&keep))
}

/// Supported bin counts for ventilation-day targets.
pub const BIN_COUNTS: std::ops::RangeInclusive<usize> = 3..=7;
pub const WEEK_LENGTH: i64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSpec {
    bin_count: usize,
}

impl BinSpec {
    pub fn new(bin_count: usize) -> Result<Self> {
        if !BIN_COUNTS.contains(&bin_count) {
            return Err(Error::InvalidArgument(format!(
                "bin_count {bin_count} outside {}..={}",
                BIN_COUNTS.start(),
                BIN_COUNTS.end()
            )));
        }
        Ok(Self { bin_count })
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    /// Display labels: `0`, `1`, ..., and `>n` for the open top class.
    pub fn labels(&self) -> Vec<String> {
        let top = self.bin_count - 1;
        (0..self.bin_count)
            .map(|c| if c == top { format!(">{}", top - 1) } else { c.to_string() })
            .collect()
    }
}

/// 0 days is class 0; otherwise `min(ceil(days / 7), bin_count - 1)`.
pub fn bin_ventilation_days(days: i64, spec: BinSpec) -> Result<usize> {
    if days < 0 {
        return Err(Error::InvalidArgument(format!("negative ventilation days {days}")));
    }
    let weeks = (days + WEEK_LENGTH - 1) / WEEK_LENGTH;
    Ok((weeks as usize).min(spec.bin_count - 1))
}

/// Replaces day-count labels with week-bin class ids.
pub fn bin_table_labels(table: DataTable, spec: BinSpec) -> Result<DataTable> {
    let labels = table
        .require_labels()?
        .iter()
        .map(|&d| bin_ventilation_days(d as i64, spec))
        .collect::<Result<Vec<_>>>()?;
    table.with_labels(labels)
}
