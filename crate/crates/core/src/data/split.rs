use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::table::{class_counts, DataTable};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Assignment of every row to one of `fold_count` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub fold_count: usize,
    pub fold_assignment: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.fold_assignment
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f == fold).then_some(i))
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.fold_assignment
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f != fold).then_some(i))
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.fold_assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold assignment.
///
/// Each class's rows are shuffled, the classes are laid end to end in class
/// order, and position `p` of that sequence goes to fold `p % fold_count`.
/// Dealing continues across class boundaries, so fold sizes differ by at most
/// one and every class lands `floor` or `ceil` of `count / fold_count` rows
/// in each fold.
pub fn split_stratified(table: &DataTable, fold_count: usize, seed: u64) -> Result<SplitPlan> {
    let labels = table.require_labels()?;
    stratified_assignment(labels, fold_count, seed)
}

pub fn stratified_assignment(labels: &[usize], fold_count: usize, seed: u64) -> Result<SplitPlan> {
    if fold_count == 0 {
        return Err(Error::InvalidArgument("fold_count must be positive".into()));
    }
    let counts = class_counts(labels);
    for (class, &count) in counts.iter().enumerate() {
        if count > 0 && count < fold_count {
            return Err(Error::ClassTooSmall {
                class,
                count,
                needed: fold_count,
            });
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); counts.len()];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut rng = rng_from_seed(seed);
    let mut assignment = vec![0; labels.len()];
    let mut pos = 0usize;
    for m in &mut members {
        m.shuffle(&mut rng);
        for &i in m.iter() {
            assignment[i] = pos % fold_count;
            pos += 1;
        }
    }
    Ok(SplitPlan {
        fold_count,
        fold_assignment: assignment,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_rows_two_classes_one_each_per_fold() {
        let labels: Vec<usize> = [0; 5].into_iter().chain([1; 5]).collect();
        let plan = stratified_assignment(&labels, 5, 3).unwrap();
        for f in 0..5 {
            let idx = plan.test_indices(f);
            let a = idx.iter().filter(|&&i| labels[i] == 0).count();
            assert_eq!((idx.len(), a), (2, 1));
        }
    }

    #[test]
    fn clinical_sized_folds() {
        // 260 deaths out of 1384
        let labels: Vec<usize> = (0..1384).map(|i| usize::from(i < 260)).collect();
        let plan = stratified_assignment(&labels, 5, 11).unwrap();
        let mut sizes = plan.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![276, 277, 277, 277, 277]);
        for f in 0..5 {
            let deaths = plan.test_indices(f).iter().filter(|&&i| labels[i] == 1).count();
            assert!(deaths == 51 || deaths == 52, "fold {f}: {deaths}");
        }
    }

    #[test]
    fn small_class_and_zero_folds_rejected() {
        let labels = vec![0, 0, 0, 0, 0, 1, 1];
        assert!(matches!(
            stratified_assignment(&labels, 3, 0),
            Err(Error::ClassTooSmall { class: 1, count: 2, needed: 3 })
        ));
        assert!(stratified_assignment(&labels, 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_stratification(
            counts in prop::collection::vec(5usize..60, 2..4),
            k in 2usize..6,
            seed in any::<u64>(),
        ) {
            let mut labels = Vec::new();
            for (c, &n) in counts.iter().enumerate() {
                labels.extend(std::iter::repeat_n(c, n));
            }
            let n = labels.len();
            let plan = stratified_assignment(&labels, k, seed).unwrap();
            prop_assert_eq!(plan.fold_assignment.len(), n);
            let sizes = plan.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            for (c, &nc) in counts.iter().enumerate() {
                for f in 0..k {
                    let got = plan.test_indices(f).iter().filter(|&&i| labels[i] == c).count() as f64;
                    let expect = (nc as f64 * sizes[f] as f64 / n as f64).round();
                    prop_assert!((got - expect).abs() <= 1.0, "class {} fold {}: {} vs {}", c, f, got, expect);
                }
            }
            prop_assert_eq!(plan, stratified_assignment(&labels, k, seed).unwrap());
        }
    }
}
