//! Inter- and intra-subject consistency of collected ratings.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::correlate::srcc;
use crate::rating::RatingSet;
use crate::rng::indexed_stream;
use crate::stats::median;

#[derive(Debug, Error)]
pub enum ConsistencyError {
    #[error("item '{item_id}' has {count} rating(s); split-half needs >= 2 per item")]
    InsufficientRatings { item_id: String, count: usize },
    #[error("correlation failed: {0}")]
    Correlation(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitHalfReport {
    pub median_srcc: f64,
    pub iterations: usize,
}

/// Inter-subject consistency: each iteration splits every item's raters
/// into two random halves, computes per-half mean scores, and correlates
/// the two half-MOS vectors across items. Reports the median SRCC over
/// `n_iter` seeded iterations.
///
/// With an odd rater count the extra rater lands in a random half.
pub fn split_half_consistency(
    ratings: &RatingSet,
    n_iter: usize,
    seed: u64,
) -> Result<SplitHalfReport, ConsistencyError> {
    let by_item = ratings.by_item();
    for (item, list) in &by_item {
        if list.len() < 2 {
            return Err(ConsistencyError::InsufficientRatings {
                item_id: item.to_string(),
                count: list.len(),
            });
        }
    }

    let items: Vec<&str> = by_item.keys().copied().collect();
    let mut srccs = Vec::with_capacity(n_iter);
    for iter in 0..n_iter {
        let mut rng = indexed_stream(seed, "consistency.split_half", iter as u64);
        let mut half_a = Vec::with_capacity(items.len());
        let mut half_b = Vec::with_capacity(items.len());
        for item in &items {
            let mut scores: Vec<f64> = by_item[item].iter().map(|&(_, s)| s as f64).collect();
            scores.shuffle(&mut rng);
            let mut size_a = scores.len() / 2;
            if scores.len() % 2 == 1 && rng.random::<bool>() {
                size_a += 1;
            }
            let (a, b) = scores.split_at(size_a);
            half_a.push(a.iter().sum::<f64>() / a.len() as f64);
            half_b.push(b.iter().sum::<f64>() / b.len() as f64);
        }
        let r = srcc(&half_a, &half_b)
            .map_err(|e| ConsistencyError::Correlation(e.to_string()))?;
        srccs.push(r.r);
    }
    Ok(SplitHalfReport {
        median_srcc: median(&srccs),
        iterations: n_iter,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ObserverConsistency {
    pub observer_id: String,
    pub srcc: f64,
    pub n_items: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntraSubjectReport {
    pub per_observer: Vec<ObserverConsistency>,
    pub median_srcc: f64,
    /// Observers left out: fewer than 3 rated items, or a correlation that
    /// is undefined (constant scores).
    pub excluded: usize,
}

/// Intra-subject consistency: SRCC between each observer's scores and the
/// overall MOS of the items they rated. Observers with fewer than 3 rated
/// items are excluded and counted.
pub fn intra_subject_consistency(ratings: &RatingSet) -> IntraSubjectReport {
    let mos = ratings.mos();
    let mut per_observer = Vec::new();
    let mut excluded = 0;
    for (observer, list) in ratings.by_observer() {
        if list.len() < 3 {
            excluded += 1;
            continue;
        }
        let own: Vec<f64> = list.iter().map(|&(_, s)| s as f64).collect();
        let consensus: Vec<f64> = list
            .iter()
            .map(|&(item, _)| mos.q(item).expect("mos covers every rated item"))
            .collect();
        match srcc(&own, &consensus) {
            Ok(r) => per_observer.push(ObserverConsistency {
                observer_id: observer.to_string(),
                srcc: r.r,
                n_items: list.len(),
            }),
            Err(_) => excluded += 1,
        }
    }
    let median_srcc = if per_observer.is_empty() {
        f64::NAN
    } else {
        median(&per_observer.iter().map(|o| o.srcc).collect::<Vec<_>>())
    };
    IntraSubjectReport {
        per_observer,
        median_srcc,
        excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rating::Rating;

    fn rating(observer: &str, item: &str, score: u8) -> Rating {
        Rating {
            observer_id: observer.into(),
            item_id: item.into(),
            score,
        }
    }

    #[test]
    fn identical_observers_give_perfect_split_half() {
        let mut ratings = Vec::new();
        for k in 0..6 {
            for (i, score) in [(0, 4u8), (1, 9), (2, 13), (3, 18)] {
                ratings.push(rating(&format!("u{k}"), &format!("v{i}"), score));
            }
        }
        let set = RatingSet { ratings };
        let report = split_half_consistency(&set, 25, 7).unwrap();
        assert_eq!(report.median_srcc, 1.0);
        assert_eq!(report.iterations, 25);
    }

    #[test]
    fn split_half_requires_two_ratings_per_item() {
        let set = RatingSet {
            ratings: vec![rating("u1", "v1", 10), rating("u1", "v2", 12), rating("u2", "v2", 14)],
        };
        assert!(matches!(
            split_half_consistency(&set, 5, 0),
            Err(ConsistencyError::InsufficientRatings { .. })
        ));
    }

    #[test]
    fn split_half_deterministic_per_seed() {
        let mut ratings = Vec::new();
        for k in 0..5 {
            for i in 0..6 {
                let score = (2 * i + (k % 3)) as u8;
                ratings.push(rating(&format!("u{k}"), &format!("v{i}"), score));
            }
        }
        let set = RatingSet { ratings };
        let a = split_half_consistency(&set, 50, 3).unwrap();
        let b = split_half_consistency(&set, 50, 3).unwrap();
        assert_eq!(a.median_srcc, b.median_srcc);
    }

    #[test]
    fn single_observer_is_self_consistent() {
        let set = RatingSet {
            ratings: vec![
                rating("u1", "v1", 3),
                rating("u1", "v2", 9),
                rating("u1", "v3", 15),
            ],
        };
        let report = intra_subject_consistency(&set);
        assert_eq!(report.per_observer.len(), 1);
        assert_eq!(report.per_observer[0].srcc, 1.0);
        assert_eq!(report.median_srcc, 1.0);
    }

    #[test]
    fn reversed_observer_scores_near_minus_one() {
        let mut ratings = Vec::new();
        for k in 0..10 {
            for i in 0..8 {
                ratings.push(rating(&format!("u{k}"), &format!("v{i}"), (2 * i + 2) as u8));
            }
        }
        for i in 0..8 {
            ratings.push(rating("rev", &format!("v{i}"), (18 - 2 * i) as u8));
        }
        let set = RatingSet { ratings };
        let report = intra_subject_consistency(&set);
        let rev = report
            .per_observer
            .iter()
            .find(|o| o.observer_id == "rev")
            .unwrap();
        assert!(rev.srcc < -0.9, "srcc = {}", rev.srcc);
    }

    #[test]
    fn short_observers_are_excluded_and_counted() {
        let set = RatingSet {
            ratings: vec![
                rating("u1", "v1", 3),
                rating("u1", "v2", 9),
                rating("u1", "v3", 15),
                rating("u2", "v1", 4),
            ],
        };
        let report = intra_subject_consistency(&set);
        assert_eq!(report.excluded, 1);
        assert_eq!(report.per_observer.len(), 1);
    }
}
