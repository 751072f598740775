//! Slow, independent reference computations for cross-checking the main
//! implementations in tests. Nothing here is used at run time.

/// Minimizes ½αᵀQα − eᵀα over 0 ≤ α ≤ C, yᵀα = 0 (Q = yyᵀ∘K) with
/// accelerated projected gradient. Returns (α, dual objective −f(α)).
pub fn svm_dual_qp(k: &[Vec<f64>], y: &[f64], c: f64, iterations: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j]).collect()).collect();
    let lipschitz = spectral_bound(&q);
    let objective = |a: &[f64]| -> f64 {
        let mut f = 0.0;
        for i in 0..n {
            for j in 0..n {
                f += 0.5 * a[i] * q[i][j] * a[j];
            }
            f -= a[i];
        }
        f
    };
    let mut alpha = vec![0.0; n];
    let mut momentum = alpha.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * momentum[j]).sum::<f64>() - 1.0).collect();
        let step: Vec<f64> = (0..n).map(|i| momentum[i] - grad[i] / lipschitz).collect();
        let next = project(&step, y, c);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        momentum = (0..n).map(|i| next[i] + (t - 1.0) / t_next * (next[i] - alpha[i])).collect();
        // restart when the objective goes up
        if objective(&next) > objective(&alpha) {
            momentum = alpha.clone();
            t = 1.0;
            continue;
        }
        alpha = next;
        t = t_next;
    }
    let f = objective(&alpha);
    (alpha, -f)
}

fn spectral_bound(q: &[Vec<f64>]) -> f64 {
    // power iteration, inflated for safety
    let n = q.len();
    let mut v = vec![1.0; n];
    let mut lambda = 1.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        lambda = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    lambda * 1.05 + 1e-12
}

/// Euclidean projection onto the box ∩ hyperplane. The constraint value
/// g(λ) = Σ yᵢ clip(vᵢ − λyᵢ, 0, C) is piecewise linear and non-increasing
/// in λ, so the root is found exactly between consecutive breakpoints.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c)).collect() };
    let g = |lambda: f64| -> f64 { at(lambda).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let mut breaks: Vec<f64> = v.iter().zip(y).flat_map(|(vi, yi)| [vi / yi, (vi - c) / yi]).collect();
    breaks.sort_by(f64::total_cmp);
    let values: Vec<f64> = breaks.iter().map(|&b| g(b)).collect();
    for k in 0..breaks.len() {
        if values[k] == 0.0 {
            return at(breaks[k]);
        }
        if k + 1 < breaks.len() && values[k] > 0.0 && values[k + 1] < 0.0 {
            let t = values[k] / (values[k] - values[k + 1]);
            return at(breaks[k] + t * (breaks[k + 1] - breaks[k]));
        }
    }
    // g is constant outside the breakpoints; any root sits on the boundary
    at(if values[0] < 0.0 { breaks[0] } else { breaks[breaks.len() - 1] })
}

/// Mann–Whitney AUC by counting positive/negative pairs, ties worth ½.
/// `None` when either side is empty.
pub fn auc_pair_counting(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

/// Dice overlap 2|A∩B| / (|A| + |B|) of two boolean masks.
pub fn dice(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count() as f64;
    let total = (a.iter().filter(|x| **x).count() + b.iter().filter(|x| **x).count()) as f64;
    if total == 0.0 {
        1.0
    } else {
        2.0 * inter / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_dual() {
        let e2 = (-2.0f64).exp();
        let k = vec![vec![1.0, e2], vec![e2, 1.0]];
        let (a, obj) = svm_dual_qp(&k, &[-1.0, 1.0], 10.0, 5000);
        let expected = 1.0 / (1.0 - e2);
        assert!((a[0] - expected).abs() < 1e-6 && (a[1] - expected).abs() < 1e-6);
        assert!((obj - expected).abs() < 1e-9);
    }

    #[test]
    fn pair_counting() {
        assert_eq!(auc_pair_counting(&[0.9, 0.1], &[true, false]), Some(1.0));
        assert_eq!(auc_pair_counting(&[0.5, 0.5], &[true, false]), Some(0.5));
        assert_eq!(auc_pair_counting(&[0.5], &[true]), None);
    }
}
