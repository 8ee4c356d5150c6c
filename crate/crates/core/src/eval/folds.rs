use rand::seq::SliceRandom;

use super::EvalError;
use crate::ingest::Class;
use crate::learners::seed::rng_for;

/// Shuffles each class with its own stream, then deals the rows round-robin
/// into `k` folds. The dealer position carries over from Low to High, so fold
/// sizes differ by at most one as well as per-class counts.
///
/// Classes smaller than `k` are allowed here; some folds then miss a class.
pub(crate) fn assign_stratified(labels: &[Class], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    let mut dealer = 0;
    for class in [Class::Low, Class::High] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng_for(seed, class.code() as u64));
        for i in idx {
            folds[dealer % k].push(i);
            dealer += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    folds
}

/// Stratified, seeded k-fold partition of `0..labels.len()`.
pub fn stratified_kfold(labels: &[Class], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFolds(k));
    }
    for class in [Class::Low, Class::High] {
        let count = labels.iter().filter(|c| **c == class).count();
        if count < k {
            return Err(EvalError::ClassTooSmall { class, count, k });
        }
    }
    Ok(assign_stratified(labels, k, seed))
}

/// Stratified split into (train, test) index lists.
///
/// The test size is `round(n · test_fraction)`, shared between the classes by
/// largest remainder. Both classes must end up on both sides.
pub fn holdout_split(labels: &[Class], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(test_fraction));
    }
    let by_class: Vec<Vec<usize>> = [Class::Low, Class::High]
        .iter()
        .map(|c| (0..labels.len()).filter(|&i| labels[i] == *c).collect())
        .collect();
    let target = (labels.len() as f64 * test_fraction).round() as usize;
    let exact: Vec<f64> = by_class.iter().map(|v| v.len() as f64 * test_fraction).collect();
    let mut take: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let mut missing = target.saturating_sub(take.iter().sum());
    for &c in order.iter().cycle().take(2 * missing.max(1)) {
        if missing == 0 {
            break;
        }
        if take[c] < by_class[c].len() {
            take[c] += 1;
            missing -= 1;
        }
    }
    for (c, class) in [Class::Low, Class::High].into_iter().enumerate() {
        let n = by_class[c].len();
        if take[c] == 0 || take[c] == n {
            return Err(EvalError::HoldoutTooSmall { class, count: n });
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut idx) in by_class.into_iter().enumerate() {
        idx.shuffle(&mut rng_for(seed, 16 + c as u64));
        test.extend_from_slice(&idx[..take[c]]);
        train.extend_from_slice(&idx[take[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
