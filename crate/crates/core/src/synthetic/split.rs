use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::largest_remainder;
use super::scene::Grade;
use super::SyntheticError;
use crate::derive_seed;

/// Evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// 70 / 15 / 15 train / validation / test over all grades.
    Iid,
    /// Train and validate (70 : 30) on Good + Poor, test on Limited only.
    LimitedHoldout,
    /// Train and validate (70 : 30) on Good + Limited, test on Poor only.
    PoorHoldout,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Iid, Scenario::LimitedHoldout, Scenario::PoorHoldout];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Iid => "iid",
            Scenario::LimitedHoldout => "limited-holdout",
            Scenario::PoorHoldout => "poor-holdout",
        }
    }

    pub fn held_out(self) -> Option<Grade> {
        match self {
            Scenario::Iid => None,
            Scenario::LimitedHoldout => Some(Grade::Limited),
            Scenario::PoorHoldout => Some(Grade::Poor),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| format!("unknown scenario '{s}' (expected iid, limited-holdout or poor-holdout)"))
    }
}

/// Disjoint index sets into a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions `grades` (one entry per image) for `scenario`.
///
/// Train and validation are stratified by grade. Held-out test sets contain
/// only the held-out grade.
pub fn make_split(grades: &[Grade], scenario: Scenario, seed: u64) -> Result<Split, SyntheticError> {
    let mut by_grade: [Vec<usize>; 3] = Default::default();
    for (i, g) in grades.iter().enumerate() {
        by_grade[*g as usize].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x7370_6c69));
    for group in by_grade.iter_mut() {
        group.shuffle(&mut rng);
    }
    let require = |g: Grade| {
        if by_grade[g as usize].is_empty() {
            Err(SyntheticError::MissingGrade { grade: g, scenario })
        } else {
            Ok(())
        }
    };
    require(Grade::Good)?;

    let (pool, mut test, fractions): (Vec<Grade>, Vec<usize>, [f64; 2]) = match scenario.held_out() {
        None => {
            if by_grade[1].is_empty() && by_grade[2].is_empty() {
                require(Grade::Limited)?;
            }
            (Grade::ALL.to_vec(), Vec::new(), [0.70, 0.15])
        }
        Some(held) => {
            for g in Grade::ALL {
                require(g)?;
            }
            let pool = Grade::ALL.into_iter().filter(|&g| g != held).collect();
            (pool, by_grade[held as usize].clone(), [0.70, 0.30])
        }
    };

    let pool_sizes: Vec<f64> = pool.iter().map(|&g| by_grade[g as usize].len() as f64).collect();
    let total: usize = pool_sizes.iter().sum::<f64>() as usize;
    let n_train = (total as f64 * fractions[0]).round() as usize;
    let n_val = ((total as f64 * fractions[1]).round() as usize).min(total - n_train);

    let train_counts = largest_remainder(n_train, &pool_sizes);
    let rest: Vec<f64> = pool_sizes
        .iter()
        .zip(&train_counts)
        .map(|(s, t)| s - *t as f64)
        .collect();
    let val_counts = largest_remainder(n_val, &rest);

    let (mut train, mut val) = (Vec::new(), Vec::new());
    for ((g, t), v) in pool.iter().zip(&train_counts).zip(&val_counts) {
        let group = &by_grade[*g as usize];
        train.extend_from_slice(&group[..*t]);
        val.extend_from_slice(&group[*t..t + v]);
        test.extend_from_slice(&group[t + v..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, val, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn grades(good: usize, limited: usize, poor: usize) -> Vec<Grade> {
        let mut v = vec![Grade::Good; good];
        v.extend(vec![Grade::Limited; limited]);
        v.extend(vec![Grade::Poor; poor]);
        v
    }

    fn assert_partition(split: &Split, n: usize) {
        let all: Vec<usize> = split.train.iter().chain(&split.val).chain(&split.test).copied().collect();
        let set: HashSet<usize> = all.iter().copied().collect();
        assert_eq!(all.len(), set.len(), "parts overlap");
        assert_eq!(set, (0..n).collect());
    }

    #[test]
    fn iid_sizes() {
        let g = grades(210, 647, 143);
        let s = make_split(&g, Scenario::Iid, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (700, 150, 150));
        assert_partition(&s, 1000);
        // stratified
        let good_train = s.train.iter().filter(|&&i| g[i] == Grade::Good).count();
        assert_eq!(good_train, 147);
    }

    #[test]
    fn limited_holdout_isolates_limited() {
        let g = grades(100, 300, 80);
        let s = make_split(&g, Scenario::LimitedHoldout, 3).unwrap();
        assert!(s.train.iter().chain(&s.val).all(|&i| g[i] != Grade::Limited));
        assert!(s.test.iter().all(|&i| g[i] == Grade::Limited));
        assert_eq!(s.test.len(), 300);
        assert_eq!(s.train.len(), 126);
        assert_eq!(s.val.len(), 54);
        assert_partition(&s, g.len());
    }

    #[test]
    fn poor_holdout_isolates_poor() {
        let g = grades(100, 300, 80);
        let s = make_split(&g, Scenario::PoorHoldout, 3).unwrap();
        assert!(s.test.iter().all(|&i| g[i] == Grade::Poor));
        assert!(s.train.iter().chain(&s.val).all(|&i| g[i] != Grade::Poor));
        assert_partition(&s, g.len());
    }

    #[test]
    fn missing_grade_is_an_error() {
        let g = grades(10, 0, 10);
        assert!(matches!(
            make_split(&g, Scenario::LimitedHoldout, 0),
            Err(SyntheticError::MissingGrade { grade: Grade::Limited, .. })
        ));
        assert!(make_split(&g, Scenario::Iid, 0).is_ok());
        assert!(make_split(&grades(0, 5, 5), Scenario::Iid, 0).is_err());
    }

    #[test]
    fn tiny_groups_never_overflow() {
        let g = grades(1, 1, 1);
        let s = make_split(&g, Scenario::Iid, 0).unwrap();
        assert_partition(&s, 3);
    }

    #[test]
    fn scenario_names() {
        for sc in Scenario::ALL {
            assert_eq!(sc.as_str().parse::<Scenario>().unwrap(), sc);
        }
        assert!("ood".parse::<Scenario>().is_err());
    }
}
