//! Stratified k-fold splitting shared by the classifier tuners.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::LikertClass;
use crate::error::{AlqaError, Result};

/// Fold index per sample. Each class's samples are shuffled with `seed`
/// and dealt round-robin, continuing where the previous class stopped.
/// The fold count is reduced to the smallest class size (never below 2).
pub fn stratified_folds(labels: &[LikertClass], folds: usize, seed: u64) -> Result<(Vec<usize>, usize)> {
    if folds < 2 {
        return Err(AlqaError::Parameter(format!("need at least 2 folds, got {folds}")));
    }
    if labels.len() < 2 {
        return Err(AlqaError::Training("cross-validation needs at least 2 samples".into()));
    }
    let mut by_class: BTreeMap<LikertClass, Vec<usize>> = BTreeMap::new();
    for (i, c) in labels.iter().enumerate() {
        by_class.entry(*c).or_default().push(i);
    }
    let smallest = by_class.values().map(Vec::len).min().unwrap_or(0);
    let k = folds.min(smallest.max(2)).min(labels.len());
    if k < folds {
        log::warn!("reducing cross-validation from {folds} to {k} folds (smallest class has {smallest} samples)");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for idx in by_class.values_mut() {
        idx.shuffle(&mut rng);
        for &i in idx.iter() {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok((assignment, k))
}

/// Index of the best grid point: highest score, ties to the earliest entry
/// of a grid enumerated in the tie-break order.
pub fn argmax_first(scores: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<LikertClass> = (0..50).map(|i| LikertClass::new(1 + (i % 2) as u8).unwrap()).collect();
        let (f, k) = stratified_folds(&labels, 5, 3).unwrap();
        assert_eq!(k, 5);
        for fold in 0..5 {
            let members: Vec<usize> = (0..50).filter(|&i| f[i] == fold).collect();
            assert_eq!(members.len(), 10);
            assert_eq!(members.iter().filter(|&&i| i % 2 == 0).count(), 5);
        }
        assert_eq!(stratified_folds(&labels, 5, 3).unwrap(), (f, k));
    }

    #[test]
    fn folds_shrink_for_small_classes() {
        let labels: Vec<LikertClass> = [1, 1, 1, 2, 2, 2, 2, 2, 2].iter().map(|c| LikertClass::new(*c).unwrap()).collect();
        assert_eq!(stratified_folds(&labels, 10, 0).unwrap().1, 3);
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax_first(&[3, 5, 5, 1]), Some(1));
        assert_eq!(argmax_first(&[]), None);
    }
}
