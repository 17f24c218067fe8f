use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Cohort;
use crate::error::{Error, Result};
use crate::rng;

/// A seeded, class-preserving train/test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub test_fraction: f64,
    pub strata: String,
    pub train_index: Vec<usize>,
    pub test_index: Vec<usize>,
}

/// Per-class test quotas by largest remainder, so the global test size is
/// `round(n * fraction)` and each class is within one row of its share.
fn allocate(class_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let target = (n as f64 * fraction).round() as usize;
    let exact: Vec<f64> = class_sizes.iter().map(|&c| c as f64 * fraction).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut left = target.saturating_sub(quota.iter().sum());
    for &c in order.iter().cycle().take(order.len() * 2) {
        if left == 0 {
            break;
        }
        if quota[c] < class_sizes[c] {
            quota[c] += 1;
            left -= 1;
        }
    }
    quota
}

pub fn stratified_split(cohort: &Cohort, outcome: &str, test_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test_fraction {test_fraction} outside (0,1)")));
    }
    let y = cohort.binary_outcome(outcome)?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
    for (i, &c) in y.iter().enumerate() {
        by_class[c as usize].push(i);
    }
    for (c, rows) in by_class.iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::DegenerateStratum(c as u32));
        }
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let quota = allocate(&sizes, test_fraction);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut rows) in by_class.into_iter().enumerate() {
        rows.shuffle(&mut rng::stream(seed, &[0x5_9117, c as u64]));
        test.extend_from_slice(&rows[..quota[c]]);
        train.extend_from_slice(&rows[quota[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan { seed, test_fraction, strata: outcome.to_string(), train_index: train, test_index: test })
}

/// Fold id (0..folds) per row; each class is shuffled and dealt round-robin,
/// continuing the deal across classes so fold sizes differ by at most one.
pub fn stratified_kfold(y: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config("cross-validation needs at least 2 folds".into()));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &c) in y.iter().enumerate() {
        by_class[c as usize].push(i);
    }
    let minority = by_class[0].len().min(by_class[1].len());
    if minority < folds {
        return Err(Error::StratificationImpossible { minority, folds });
    }
    let mut assignment = vec![0usize; y.len()];
    let mut next = 0usize;
    for (c, rows) in by_class.iter_mut().enumerate() {
        rows.shuffle(&mut rng::stream(seed, &[0xF01D, c as u64]));
        for &r in rows.iter() {
            assignment[r] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Cell, Kind, Role, VariableSpec};
    use proptest::prelude::*;

    fn cohort_with(y: &[i64]) -> Cohort {
        let mut c = Cohort::new(y.len());
        c.push_column(
            VariableSpec::indexed("y", Kind::Binary, &["normal", "dementia"], "normal", Role::Outcome),
            y.iter().map(|&v| Cell::Category(v)).collect(),
        )
        .unwrap();
        c
    }

    fn positives_in(plan: &SplitPlan, y: &[i64]) -> usize {
        plan.test_index.iter().filter(|&&i| y[i] == 1).count()
    }

    #[test]
    fn exact_proportions() {
        let y: Vec<i64> = (0..100).map(|i| (i < 10) as i64).collect();
        let plan = stratified_split(&cohort_with(&y), "y", 0.2, 3).unwrap();
        assert_eq!(plan.test_index.len(), 20);
        assert_eq!(positives_in(&plan, &y), 2);
    }

    #[test]
    fn balanced_half_split() {
        let y: Vec<i64> = (0..10).map(|i| (i % 2) as i64).collect();
        for seed in 0..10 {
            let plan = stratified_split(&cohort_with(&y), "y", 0.5, seed).unwrap();
            assert_eq!(plan.test_index.len(), 5);
            let pos = positives_in(&plan, &y);
            assert!(pos == 2 || pos == 3);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let y: Vec<i64> = (0..57).map(|i| (i % 4 == 0) as i64).collect();
        let a = stratified_split(&cohort_with(&y), "y", 0.2, 11).unwrap();
        let b = stratified_split(&cohort_with(&y), "y", 0.2, 11).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = stratified_split(&cohort_with(&y), "y", 0.2, 12).unwrap();
        assert_ne!(a.test_index, c.test_index);
    }

    #[test]
    fn degenerate_stratum_and_bad_outcome() {
        let y = [0, 0, 0, 1];
        assert_eq!(stratified_split(&cohort_with(&y), "y", 0.2, 1), Err(Error::DegenerateStratum(1)));
        assert!(matches!(stratified_split(&cohort_with(&y), "z", 0.2, 1), Err(Error::InvalidOutcome(_))));
    }

    #[test]
    fn kfold_requires_minority_per_fold() {
        let y = [0u8, 0, 0, 0, 1, 1];
        assert_eq!(stratified_kfold(&y, 3, 1), Err(Error::StratificationImpossible { minority: 2, folds: 3 }));
        let f = stratified_kfold(&y, 2, 1).unwrap();
        for fold in 0..2 {
            assert_eq!((0..6).filter(|&i| f[i] == fold && y[i] == 1).count(), 1);
        }
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n0 in 2usize..60, n1 in 2usize..60, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let y: Vec<i64> = (0..n0 + n1).map(|i| (i >= n0) as i64).collect();
            let plan = stratified_split(&cohort_with(&y), "y", frac, seed).unwrap();
            let mut all: Vec<usize> = plan.train_index.iter().chain(&plan.test_index).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n0 + n1).collect::<Vec<_>>());
            for (class, size) in [(0i64, n0), (1, n1)] {
                let got = plan.test_index.iter().filter(|&&i| y[i] == class).count() as f64;
                prop_assert!((got - (size as f64 * frac).round()).abs() <= 1.0);
            }
        }
    }
}
