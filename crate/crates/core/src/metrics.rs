//! Ranking and the two top-N metrics, Precision@k and nDCG@k.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

/// Games ordered best first, with already-liked games removed.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
    pub excluded: BTreeSet<usize>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Descending score, ascending game index on ties.
pub fn rank_games(scores: &[f64], exclude: &BTreeSet<usize>) -> RankedList {
    let mut order: Vec<usize> = (0..scores.len()).filter(|j| !exclude.contains(j)).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    RankedList {
        scores: order.iter().map(|&j| scores[j]).collect(),
        order,
        excluded: exclude.clone(),
    }
}

/// Hits in the top `k`, divided by `k` (short lists count missing slots as
/// misses).
pub fn precision_at_k(ranked: &RankedList, liked: &HashSet<usize>, k: usize) -> f64 {
    assert!(k >= 1, "precision cutoff must be positive");
    let hits = ranked.order.iter().take(k).filter(|j| liked.contains(j)).count();
    hits as f64 / k as f64
}

/// DCG of the top `k` normalized by the ideal DCG. `None` when the player
/// has no validation likes, since the ideal gain is then zero.
pub fn ndcg_at_k(ranked: &RankedList, liked: &HashSet<usize>, k: usize) -> Option<f64> {
    assert!(k >= 1, "nDCG cutoff must be positive");
    if liked.is_empty() {
        return None;
    }
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = ranked
        .order
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, j)| liked.contains(j))
        .map(|(pos, _)| discount(pos + 1))
        .sum();
    let ideal: f64 = (1..=liked.len().min(k)).map(discount).sum();
    Some(dcg / ideal)
}

/// One player to evaluate: validation likes plus training likes to exclude.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPlayer {
    pub player_id: String,
    pub validation: Vec<usize>,
    pub exclude: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerMetrics {
    pub player_id: String,
    pub precision: f64,
    pub ndcg: f64,
    pub validation_likes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision_k: usize,
    pub precision: f64,
    pub ndcg_at_m: f64,
    pub counted_players: usize,
    /// Players left out of the averages (no validation likes or nothing
    /// left to rank).
    pub skipped_players: Vec<String>,
    pub per_player: Vec<PlayerMetrics>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metric report serializes")
    }
}

/// Ranks each player's scores, skipping excluded games, and macro-averages
/// Precision@`precision_k` and nDCG over the whole remaining list.
/// `scores(slot)` returns the full score vector for `players[slot]`.
pub fn evaluate_player_set<F>(scores: F, players: &[EvalPlayer], precision_k: usize) -> MetricReport
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    try_evaluate_player_set(|slot| Ok::<_, std::convert::Infallible>(scores(slot)), players, precision_k)
        .unwrap_or_else(|never| match never {})
}

/// [`evaluate_player_set`] for score providers that can fail; the first
/// failure (in player order) aborts the evaluation.
pub fn try_evaluate_player_set<F, E>(scores: F, players: &[EvalPlayer], precision_k: usize) -> Result<MetricReport, E>
where
    F: Fn(usize) -> Result<Vec<f64>, E> + Sync,
    E: Send,
{
    let evaluate = |slot: usize| -> Result<Option<PlayerMetrics>, E> {
        let player = &players[slot];
        if player.validation.is_empty() {
            return Ok(None);
        }
        let exclude: BTreeSet<usize> = player.exclude.iter().copied().collect();
        let ranked = rank_games(&scores(slot)?, &exclude);
        if ranked.is_empty() {
            log::warn!("player {} has no candidate games left to rank", player.player_id);
            return Ok(None);
        }
        let liked: HashSet<usize> = player.validation.iter().copied().collect();
        Ok(ndcg_at_k(&ranked, &liked, ranked.len()).map(|ndcg| PlayerMetrics {
            player_id: player.player_id.clone(),
            precision: precision_at_k(&ranked, &liked, precision_k),
            ndcg,
            validation_likes: liked.len(),
        }))
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<Option<PlayerMetrics>, E>> = {
        use rayon::prelude::*;
        (0..players.len()).into_par_iter().map(evaluate).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<Option<PlayerMetrics>, E>> = (0..players.len()).map(evaluate).collect();

    let mut per_player = Vec::new();
    let mut skipped_players = Vec::new();
    for (player, outcome) in players.iter().zip(outcomes) {
        match outcome? {
            Some(metrics) => per_player.push(metrics),
            None => skipped_players.push(player.player_id.clone()),
        }
    }
    let counted = per_player.len();
    let mean = |f: fn(&PlayerMetrics) -> f64| {
        if counted == 0 {
            0.0
        } else {
            per_player.iter().map(f).sum::<f64>() / counted as f64
        }
    };
    Ok(MetricReport {
        precision_k,
        precision: mean(|p| p.precision),
        ndcg_at_m: mean(|p| p.ndcg),
        counted_players: counted,
        skipped_players,
        per_player,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[usize]) -> HashSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn ranking_example_vector() {
        let scores = [1.41, 0.10, 0.82, 0.04];
        assert_eq!(rank_games(&scores, &BTreeSet::new()).order, [0, 2, 1, 3]);
        assert_eq!(rank_games(&scores, &[0].into()).order, [2, 1, 3]);
        assert_eq!(rank_games(&[0.3; 5], &BTreeSet::new()).order, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn precision_cases() {
        let ranked = rank_games(&(0..40).map(|j| -(j as f64)).collect::<Vec<_>>(), &BTreeSet::new());
        assert_eq!(precision_at_k(&ranked, &set(&[0, 3, 7, 11, 19, 25]), 20), 0.25);
        assert_eq!(precision_at_k(&ranked, &set(&[30]), 20), 0.0);
        let short = rank_games(&[1.0, 0.5], &BTreeSet::new());
        assert_eq!(precision_at_k(&short, &set(&[0, 1]), 20), 0.1);
    }

    #[test]
    fn ndcg_cases() {
        let ranked = rank_games(&[5.0, 4.0, 3.0, 2.0, 1.0], &BTreeSet::new());
        assert_eq!(ndcg_at_k(&ranked, &set(&[0]), 5), Some(1.0));
        assert!((ndcg_at_k(&ranked, &set(&[2]), 5).unwrap() - 0.5).abs() < 1e-15);
        let two = ndcg_at_k(&ranked, &set(&[0, 2]), 5).unwrap();
        let expected = (1.0 + 0.5) / (1.0 + 1.0 / 3f64.log2());
        assert!((two - expected).abs() < 1e-12);
        assert!((two - 0.9197).abs() < 5e-5);
        assert_eq!(ndcg_at_k(&ranked, &set(&[]), 5), None);
    }

    #[test]
    fn oracle_scores_are_perfect() {
        let players = vec![
            EvalPlayer {
                player_id: "a".into(),
                validation: vec![3, 9],
                exclude: vec![0],
            },
            EvalPlayer {
                player_id: "b".into(),
                validation: (0..25).collect(),
                exclude: vec![],
            },
        ];
        let report = evaluate_player_set(
            |slot| {
                let mut s = vec![0.0; 30];
                for &j in &players[slot].validation {
                    s[j] = f64::INFINITY;
                }
                s
            },
            &players,
            20,
        );
        assert_eq!(report.per_player[0].precision, 2.0 / 20.0);
        assert_eq!(report.per_player[1].precision, 1.0);
        assert_eq!(report.ndcg_at_m, 1.0);
    }

    #[test]
    fn macro_average_of_two_hand_computed_players() {
        let players = vec![
            EvalPlayer {
                player_id: "a".into(),
                validation: vec![2],
                exclude: vec![],
            },
            EvalPlayer {
                player_id: "b".into(),
                validation: vec![1],
                exclude: vec![0],
            },
            EvalPlayer {
                player_id: "c".into(),
                validation: vec![],
                exclude: vec![],
            },
        ];
        // a: item 2 at rank 3 -> 0.5 ; b: after excluding 0, item 1 at rank 1 -> 1.0
        let report = evaluate_player_set(|_| vec![4.0, 3.0, 2.0, 1.0], &players, 2);
        assert_eq!(report.counted_players, 2);
        assert_eq!(report.skipped_players, ["c"]);
        assert!((report.ndcg_at_m - 0.75).abs() < 1e-15);
        assert!((report.precision - 0.25).abs() < 1e-15);
    }
}
