use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::eegio::Label;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Subject-level k-fold partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Fails if any subject is in both the train and the test side of a
    /// fold, or in more than one test set.
    pub fn check_leakage(&self) -> Result<()> {
        let mut tested = HashSet::new();
        for f in &self.folds {
            check_disjoint(&f.train, &f.test)?;
            for s in &f.test {
                if !tested.insert(s.as_str()) {
                    return Err(Error::Leakage(format!("{s} (tested in two folds)")));
                }
            }
        }
        Ok(())
    }
}

pub fn check_disjoint(train: &[String], test: &[String]) -> Result<()> {
    let train: HashSet<&str> = train.iter().map(String::as_str).collect();
    match test.iter().find(|s| train.contains(s.as_str())) {
        Some(s) => Err(Error::Leakage(s.clone())),
        None => Ok(()),
    }
}

/// Stratified subject k-fold. Within each class, subjects are sorted,
/// shuffled with `seed` and dealt round-robin; the second class continues
/// where the first stopped so fold sizes differ by at most one.
pub fn subject_kfold(subjects: &[(String, Label)], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k = {k}; need at least 2 folds")));
    }
    if subjects.len() < k {
        return Err(Error::TooFewSubjects(format!("{} subjects for {k} folds", subjects.len())));
    }
    let mut seen = HashSet::new();
    for (id, _) in subjects {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidSpec(format!("duplicate subject id {id}")));
        }
    }
    let mut test: Vec<Vec<String>> = vec![Vec::new(); k];
    let mut next = 0;
    for label in [Label::Hc, Label::Ad] {
        let mut ids: Vec<String> = subjects.iter().filter(|(_, l)| *l == label).map(|(s, _)| s.clone()).collect();
        if ids.is_empty() {
            return Err(Error::TooFewSubjects(format!("no {label:?} subjects")));
        }
        ids.sort();
        ids.shuffle(&mut stream(seed, Purpose::Folds, &[label as u64]));
        for id in ids {
            test[next % k].push(id);
            next += 1;
        }
    }
    let folds = (0..k)
        .map(|f| {
            let mut te = test[f].clone();
            te.sort();
            let mut tr: Vec<String> = test.iter().enumerate().filter(|(j, _)| *j != f).flat_map(|(_, t)| t.clone()).collect();
            tr.sort();
            Fold { train: tr, test: te }
        })
        .collect();
    let plan = FoldPlan { k, seed, folds };
    plan.check_leakage()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn subjects(n_hc: usize, n_ad: usize) -> Vec<(String, Label)> {
        let mut v: Vec<_> = (0..n_hc).map(|i| (format!("hc{i}"), Label::Hc)).collect();
        v.extend((0..n_ad).map(|i| (format!("ad{i}"), Label::Ad)));
        v
    }

    #[test]
    fn balanced_ten_subjects_give_one_per_class_per_fold() {
        let plan = subject_kfold(&subjects(5, 5), 5, 3).unwrap();
        for f in &plan.folds {
            assert_eq!(f.test.len(), 2);
            assert_eq!(f.test.iter().filter(|s| s.starts_with("hc")).count(), 1);
            assert_eq!(f.train.len(), 8);
        }
    }

    #[test]
    fn plan_is_seeded() {
        let s = subjects(7, 9);
        assert_eq!(subject_kfold(&s, 5, 11).unwrap(), subject_kfold(&s, 5, 11).unwrap());
        assert_ne!(subject_kfold(&s, 5, 11).unwrap(), subject_kfold(&s, 5, 12).unwrap());
        let mut rev = s.clone();
        rev.reverse();
        assert_eq!(subject_kfold(&s, 5, 11).unwrap(), subject_kfold(&rev, 5, 11).unwrap());
    }

    #[test]
    fn preconditions() {
        assert!(matches!(subject_kfold(&subjects(2, 2), 5, 0), Err(Error::TooFewSubjects(_))));
        assert!(matches!(subject_kfold(&subjects(6, 0), 5, 0), Err(Error::TooFewSubjects(_))));
        assert!(subject_kfold(&subjects(3, 3), 1, 0).is_err());
        let mut dup = subjects(3, 3);
        dup.push(("hc0".into(), Label::Ad));
        assert!(subject_kfold(&dup, 5, 0).is_err());
    }

    #[test]
    fn leakage_is_detected() {
        let mut plan = subject_kfold(&subjects(5, 5), 5, 0).unwrap();
        let moved = plan.folds[0].test[0].clone();
        plan.folds[0].train.push(moved.clone());
        assert!(matches!(plan.check_leakage(), Err(Error::Leakage(s)) if s == moved));
    }

    proptest! {
        #[test]
        fn folds_partition_subjects(n_hc in 1usize..20, n_ad in 1usize..20, k in 2usize..8, seed in any::<u64>()) {
            prop_assume!(n_hc + n_ad >= k);
            let s = subjects(n_hc, n_ad);
            let plan = subject_kfold(&s, k, seed).unwrap();
            let mut all: Vec<String> = plan.folds.iter().flat_map(|f| f.test.clone()).collect();
            all.sort();
            let mut want: Vec<String> = s.iter().map(|(id, _)| id.clone()).collect();
            want.sort();
            prop_assert_eq!(all, want);
            let sizes: Vec<usize> = plan.folds.iter().map(|f| f.test.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for f in &plan.folds {
                prop_assert!(!f.test.is_empty());
                prop_assert_eq!(f.train.len() + f.test.len(), n_hc + n_ad);
                prop_assert!(check_disjoint(&f.train, &f.test).is_ok());
                // Per-class counts differ from the proportional share by < 1.
                let hc = f.test.iter().filter(|s| s.starts_with("hc")).count() as f64;
                prop_assert!((hc - n_hc as f64 / k as f64).abs() < 1.0 + 1e-9);
            }
        }
    }
}
