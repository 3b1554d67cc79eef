use crate::asgm::AsgmSpec;
use crate::error::{invalid, Result};

use super::task::TaskKind;

/// Reference ordering of a model grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedRanking {
    /// Grid indices from best to worst.
    pub order: Vec<usize>,
    /// 1-based rank of each grid entry, indexed like the grid.
    pub ranks: Vec<usize>,
}

/// Orders the grid by the task's ranked parameter: larger `q` is better, and
/// for the false-positive task smaller `p` is better. The other parameter
/// must be identical across the grid.
pub fn expected_ranking(task: TaskKind, grid: &[AsgmSpec]) -> Result<ExpectedRanking> {
    if grid.is_empty() {
        return Err(invalid("model grid is empty"));
    }
    for spec in grid {
        if spec.family != task.family() {
            return Err(invalid(format!("task {task} cannot rank a {} model", spec.family)));
        }
        spec.validate()?;
    }
    let key = |s: &AsgmSpec| match task {
        // Negate so that ascending key means better.
        TaskKind::PreQNegPP => s.p.unwrap_or(0.0),
        _ => -s.q,
    };
    let fixed = |s: &AsgmSpec| match task {
        TaskKind::PreQNegPP => Some(s.q),
        TaskKind::PreQNegPQ => s.p,
        _ => None,
    };
    if grid.iter().any(|s| fixed(s) != fixed(&grid[0])) {
        return Err(invalid(format!("task {task}: the non-ranked parameter must be fixed across the grid")));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| key(&grid[a]).total_cmp(&key(&grid[b])));
    if order.windows(2).any(|w| key(&grid[w[0]]) == key(&grid[w[1]])) {
        return Err(invalid(format!("task {task}: ranked parameter has ties in the model grid")));
    }
    let mut ranks = vec![0; grid.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    Ok(ExpectedRanking { order, ranks })
}

/// Ranking induced by metric values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    pub ranks: Vec<usize>,
    /// Two models had equal values; they were ordered by grid position.
    pub tied: bool,
}

pub fn ranks_from_values(values: &[f64], higher_is_better: bool) -> Ranking {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps grid order among ties.
    order.sort_by(|&a, &b| {
        let c = values[a].total_cmp(&values[b]);
        if higher_is_better {
            c.reverse()
        } else {
            c
        }
    });
    let tied = order.windows(2).any(|w| values[w[0]] == values[w[1]]);
    let mut ranks = vec![0; values.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    Ranking { ranks, tied }
}

fn check_pair(expected: &[usize], actual: &[usize]) -> Result<()> {
    if expected.len() != actual.len() {
        return Err(invalid(format!("rankings differ in length: {} vs {}", expected.len(), actual.len())));
    }
    if expected.len() < 2 {
        return Err(invalid("rank statistics need at least two models"));
    }
    for r in [expected, actual] {
        let mut seen = vec![false; r.len()];
        for &v in r {
            if v == 0 || v > r.len() || std::mem::replace(&mut seen[v - 1], true) {
                return Err(invalid(format!("{r:?} is not a permutation of 1..={}", r.len())));
            }
        }
    }
    Ok(())
}

/// `1 - 6 Σ d² / (n(n² - 1))`.
pub fn spearman(expected: &[usize], actual: &[usize]) -> Result<f64> {
    check_pair(expected, actual)?;
    let n = expected.len() as f64;
    let d2: f64 = expected
        .iter()
        .zip(actual)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(1.0 - 6.0 * d2 / (n * (n * n - 1.0)))
}

/// `(C - D) / (C + D)`. Discordant pairs are counted as inversions with a
/// merge sort, `O(n log n)`.
pub fn kendall(expected: &[usize], actual: &[usize]) -> Result<f64> {
    check_pair(expected, actual)?;
    let n = expected.len();
    // `actual` rearranged into expected order; discordant pairs are its inversions.
    let mut seq = vec![0; n];
    for (&e, &a) in expected.iter().zip(actual) {
        seq[e - 1] = a;
    }
    let discordant = count_inversions(&mut seq);
    let pairs = n * (n - 1) / 2;
    let concordant = pairs - discordant;
    Ok((concordant as f64 - discordant as f64) / pairs as f64)
}

fn count_inversions(v: &mut [usize]) -> usize {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = count_inversions(&mut v[..mid]) + count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i] <= v[j] {
            merged.push(v[i]);
            i += 1;
        } else {
            count += mid - i;
            merged.push(v[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..]);
    v.copy_from_slice(&merged);
    count
}

/// `(1/n) Σ |r*ᵢ - rᵢ|`.
pub fn mean_rank_deviation(expected: &[usize], actual: &[usize]) -> Result<f64> {
    check_pair(expected, actual)?;
    let total: usize = expected.iter().zip(actual).map(|(&a, &b)| a.abs_diff(b)).sum();
    Ok(total as f64 / expected.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_ranking_examples() {
        let grid: Vec<_> = [0.2, 0.8, 0.5].into_iter().map(AsgmSpec::acc_q).collect();
        let r = expected_ranking(TaskKind::AccQ, &grid).unwrap();
        assert_eq!(r.order, vec![1, 2, 0]);
        assert_eq!(r.ranks, vec![3, 1, 2]);

        let grid = vec![AsgmSpec::pre_q_neg_p(0.9, 0.01), AsgmSpec::pre_q_neg_p(0.9, 0.3)];
        let r = expected_ranking(TaskKind::PreQNegPP, &grid).unwrap();
        assert_eq!(r.order, vec![0, 1]);

        let r = expected_ranking(TaskKind::LowDisAccQ, &[AsgmSpec::low_dis_acc_q(0.4)]).unwrap();
        assert_eq!(r.ranks, vec![1]);
    }

    #[test]
    fn expected_ranking_rejects_bad_grids() {
        let tied = vec![AsgmSpec::acc_q(0.5), AsgmSpec::acc_q(0.5)];
        assert!(expected_ranking(TaskKind::AccQ, &tied).is_err());
        let mixed = vec![AsgmSpec::acc_q(0.5), AsgmSpec::low_dis_acc_q(0.6)];
        assert!(expected_ranking(TaskKind::AccQ, &mixed).is_err());
        let unfixed = vec![AsgmSpec::pre_q_neg_p(0.5, 0.1), AsgmSpec::pre_q_neg_p(0.6, 0.2)];
        assert!(expected_ranking(TaskKind::PreQNegPQ, &unfixed).is_err());
        assert!(expected_ranking(TaskKind::PreQNegPP, &unfixed).is_err());
        assert!(expected_ranking(TaskKind::AccQ, &[]).is_err());
    }

    #[test]
    fn statistic_examples() {
        assert_eq!(spearman(&[1, 2, 3, 4], &[1, 2, 3, 4]).unwrap(), 1.0);
        assert_eq!(spearman(&[1, 2, 3, 4], &[4, 3, 2, 1]).unwrap(), -1.0);
        assert!((spearman(&[1, 2, 3, 4], &[2, 1, 3, 4]).unwrap() - 0.8).abs() < 1e-12);

        assert_eq!(kendall(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(kendall(&[1, 2, 3], &[3, 2, 1]).unwrap(), -1.0);
        assert!((kendall(&[1, 2, 3], &[1, 3, 2]).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        assert_eq!(mean_rank_deviation(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        assert_eq!(mean_rank_deviation(&[1, 2], &[2, 1]).unwrap(), 1.0);
        assert_eq!(mean_rank_deviation(&[1, 2, 3, 4], &[2, 1, 4, 3]).unwrap(), 1.0);
    }

    #[test]
    fn statistics_validate_input() {
        assert!(spearman(&[1, 2], &[1, 2, 3]).is_err());
        assert!(kendall(&[1, 1], &[1, 2]).is_err());
        assert!(mean_rank_deviation(&[0, 1], &[1, 2]).is_err());
        assert!(spearman(&[1], &[1]).is_err());
    }

    #[test]
    fn ranks_from_values_orders_and_flags_ties() {
        let r = ranks_from_values(&[0.2, 0.9, 0.5], true);
        assert_eq!(r, Ranking { ranks: vec![3, 1, 2], tied: false });
        let r = ranks_from_values(&[0.2, 0.9, 0.5], false);
        assert_eq!(r.ranks, vec![1, 3, 2]);
        let r = ranks_from_values(&[0.5, 0.7, 0.5], true);
        assert_eq!(r, Ranking { ranks: vec![2, 1, 3], tied: true });
    }
}
