//! Evaluation metrics.

use crate::{Error, Result};

/// Rank-based area under the ROC curve with midrank tie handling.
/// Labels must contain both classes.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "auc: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::MetricUndefined(
            "auc needs at least one positive and one negative".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    // midranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share the average rank
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let p = positives as f64;
    let n = negatives as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Pairwise-comparison reference for the rank-based computation: counts
/// wins plus half-credit ties over all positive/negative pairs.
pub fn auc_pairwise_oracle(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let positives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(&s, _)| s)
        .collect();
    let negatives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| !l)
        .map(|(&s, _)| s)
        .collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::MetricUndefined(
            "auc needs at least one positive and one negative".into(),
        ));
    }
    let mut total = 0.0;
    for &p in &positives {
        for &n in &negatives {
            total += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    Ok(total / (positives.len() * negatives.len()) as f64)
}

fn masked_pairs<'a>(
    pred: &'a [f64],
    target: &'a [f64],
    mask: &'a [bool],
) -> impl Iterator<Item = (f64, f64)> + 'a {
    pred.iter()
        .zip(target)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((&p, &t), _)| (p, t))
}

pub fn rmse(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<f64> {
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::EmptySplit("rmse over an empty mask".into()));
    }
    let ss: f64 = masked_pairs(pred, target, mask)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((ss / count as f64).sqrt())
}

pub fn mae(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<f64> {
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::EmptySplit("mae over an empty mask".into()));
    }
    let sum: f64 = masked_pairs(pred, target, mask)
        .map(|(p, t)| (p - t).abs())
        .sum();
    Ok(sum / count as f64)
}

/// Coefficient of determination. A constant target makes the total sum of
/// squares zero and the score undefined.
pub fn r2(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<f64> {
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::EmptySplit("r2 over an empty mask".into()));
    }
    let mean: f64 = masked_pairs(pred, target, mask).map(|(_, t)| t).sum::<f64>() / count as f64;
    let ss_res: f64 = masked_pairs(pred, target, mask)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    let ss_tot: f64 = masked_pairs(pred, target, mask)
        .map(|(_, t)| (t - mean) * (t - mean))
        .sum();
    if ss_tot == 0.0 {
        return Err(Error::MetricUndefined("r2 with a constant target".into()));
    }
    Ok(1.0 - ss_res / ss_tot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn auc_perfect_and_constant() {
        let labels = vec![false, false, true, true];
        assert_eq!(auc_roc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 1.0);
        // constant scores tie everything: 0.5 by midrank
        assert_eq!(auc_roc(&[0.3; 4], &labels).unwrap(), 0.5);
        assert!(auc_roc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = crate::rng::rng_from_seed(77);
        for case in 0..200 {
            let n = rng.gen_range(4..40);
            // quantized scores force plenty of ties
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen_range(0..8) as f64) / 8.0)
                .collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            if labels.iter().all(|&l| l) {
                labels[0] = false;
            }
            if labels.iter().all(|&l| !l) {
                labels[0] = true;
            }
            let fast = auc_roc(&scores, &labels).unwrap();
            let slow = auc_pairwise_oracle(&scores, &labels).unwrap();
            assert!(
                (fast - slow).abs() < 1e-12,
                "case {}: {} vs {}",
                case,
                fast,
                slow
            );
        }
    }

    #[test]
    fn regression_metrics_hand_case() {
        let mask = vec![true, true];
        // rmse of [0,0] vs [3,4]: sqrt((9+16)/2) = 2.5 sqrt(2)
        let r = rmse(&[0.0, 0.0], &[3.0, 4.0], &mask).unwrap();
        assert!((r - 2.5 * 2.0f64.sqrt()).abs() < 1e-12);
        assert!((mae(&[0.0, 0.0], &[3.0, 4.0], &mask).unwrap() - 3.5).abs() < 1e-12);
        // exact prediction
        assert_eq!(rmse(&[3.0, 4.0], &[3.0, 4.0], &mask).unwrap(), 0.0);
        assert_eq!(r2(&[3.0, 4.0], &[3.0, 4.0], &mask).unwrap(), 1.0);
        // predicting the mean gives r2 = 0
        assert!(r2(&[3.5, 3.5], &[3.0, 4.0], &mask).unwrap().abs() < 1e-12);
        // degenerate cases
        assert!(rmse(&[1.0], &[1.0], &[false]).is_err());
        assert!(r2(&[1.0, 2.0], &[5.0, 5.0], &[true, true]).is_err());
    }

    #[test]
    fn masked_entries_are_ignored() {
        let mask = vec![true, false, true];
        let r = rmse(&[1.0, 100.0, 1.0], &[1.0, 0.0, 1.0], &mask).unwrap();
        assert_eq!(r, 0.0);
    }
}
