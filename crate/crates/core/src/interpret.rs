//! Top-k coefficient reports over fitted models: correlated games, tag
//! responses, question responses and tag × question interactions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cf::MvnModel;
use crate::content::{InteractionModel, QuestionsModel, TagsModel};
use crate::data::axis_index;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    CorrelatedGames,
    TagResponse,
    QuestionResponse,
    InteractionPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    /// Ranking key: the signed coefficient, or its magnitude for global
    /// interaction reports.
    pub strength: f64,
    /// The raw coefficient.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationReport {
    pub subject: String,
    pub kind: ReportKind,
    pub entries: Vec<ReportEntry>,
}

impl InterpretationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let heading = match self.kind {
            ReportKind::CorrelatedGames => "most correlated games",
            ReportKind::TagResponse => "strongest tag responses",
            ReportKind::QuestionResponse => "strongest question responses",
            ReportKind::InteractionPairs => "strongest interactions",
        };
        let mut out = format!("{}: {heading}\n", self.subject);
        if self.entries.is_empty() {
            out.push_str("  (none)\n");
        }
        let width = self.entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
        for (rank, entry) in self.entries.iter().enumerate() {
            let _ = writeln!(out, "  {:>2}. {:<width$}  {:+.4}", rank + 1, entry.name, entry.value);
        }
        out
    }
}

/// Sorts by descending strength, names ascending on ties, and keeps `top_k`.
fn top_entries(mut entries: Vec<ReportEntry>, top_k: usize) -> Vec<ReportEntry> {
    entries.sort_by(|a, b| b.strength.total_cmp(&a.strength).then_with(|| a.name.cmp(&b.name)));
    entries.truncate(top_k);
    entries
}

fn lookup(axis: &[String], id: &str, what: &'static str) -> Result<usize> {
    axis_index(axis, id).ok_or_else(|| Error::Unknown {
        what,
        name: id.to_owned(),
    })
}

pub fn top_correlated_games(model: &MvnModel, game: &str, top_k: usize) -> Result<InterpretationReport> {
    let j = lookup(&model.game_ids, game, "game")?;
    let mut report = InterpretationReport {
        subject: game.to_owned(),
        kind: ReportKind::CorrelatedGames,
        entries: Vec::new(),
    };
    if !(model.moments.sigma[(j, j)] > 0.0) {
        log::warn!("game {game} has zero variance; no correlations to report");
        return Ok(report);
    }
    let corr = model.correlation();
    let entries = (0..model.m())
        .filter(|&other| other != j)
        .map(|other| ReportEntry {
            name: model.game_ids[other].clone(),
            strength: corr[(j, other)],
            value: corr[(j, other)],
        })
        .collect();
    report.entries = top_entries(entries, top_k);
    Ok(report)
}

pub fn top_tag_responses(model: &TagsModel, player: &str, top_k: usize) -> Result<InterpretationReport> {
    let i = lookup(&model.player_ids, player, "player")?;
    let entries = model
        .tag_names
        .iter()
        .enumerate()
        .map(|(t, name)| ReportEntry {
            name: name.clone(),
            strength: model.t[(i, t)],
            value: model.t[(i, t)],
        })
        .collect();
    Ok(InterpretationReport {
        subject: player.to_owned(),
        kind: ReportKind::TagResponse,
        entries: top_entries(entries, top_k),
    })
}

pub fn top_question_responses(model: &QuestionsModel, game: &str, top_k: usize) -> Result<InterpretationReport> {
    let j = lookup(&model.game_ids, game, "game")?;
    let entries = model
        .question_ids
        .iter()
        .enumerate()
        .map(|(q, name)| ReportEntry {
            name: name.clone(),
            strength: model.q[(j, q)],
            value: model.q[(j, q)],
        })
        .collect();
    Ok(InterpretationReport {
        subject: game.to_owned(),
        kind: ReportKind::QuestionResponse,
        entries: top_entries(entries, top_k),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionQuery<'a> {
    /// Questions interacting most positively with one tag.
    Tag(&'a str),
    /// All (tag, question) pairs by magnitude.
    Global,
}

pub fn top_interactions(
    model: &InteractionModel,
    query: InteractionQuery<'_>,
    top_k: usize,
) -> Result<InterpretationReport> {
    let (subject, entries) = match query {
        InteractionQuery::Tag(tag) => {
            let t = lookup(&model.tag_names, tag, "tag")?;
            let entries = model
                .question_ids
                .iter()
                .enumerate()
                .map(|(q, name)| ReportEntry {
                    name: name.clone(),
                    strength: model.a[(t, q)],
                    value: model.a[(t, q)],
                })
                .collect();
            (tag.to_owned(), entries)
        }
        InteractionQuery::Global => {
            let mut entries = Vec::with_capacity(model.a.len());
            for (t, tag) in model.tag_names.iter().enumerate() {
                for (q, question) in model.question_ids.iter().enumerate() {
                    let value = model.a[(t, q)];
                    entries.push(ReportEntry {
                        name: format!("{tag} x {question}"),
                        strength: value.abs(),
                        value,
                    });
                }
            }
            ("all tags".to_owned(), entries)
        }
    };
    Ok(InterpretationReport {
        subject,
        kind: ReportKind::InteractionPairs,
        entries: top_entries(entries, top_k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GameLikeMatrix;
    use crate::linalg::Moments;
    use nalgebra::{DMatrix, DVector};

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn entry_names(report: &InterpretationReport) -> Vec<&str> {
        report.entries.iter().map(|e| e.name.as_str()).collect()
    }

    #[test]
    fn co_liked_pair_is_mutual_top_entry() {
        let likes = GameLikeMatrix::from_pairs(&[
            ("a", "x"),
            ("a", "y"),
            ("b", "z"),
            ("c", "x"),
            ("c", "y"),
            ("c", "z"),
            ("d", "w"),
        ]);
        let model = MvnModel::fit(&likes, false).unwrap();
        let report = top_correlated_games(&model, "x", 2).unwrap();
        assert_eq!(report.entries[0].name, "y");
        assert!((report.entries[0].strength - 1.0).abs() < 1e-12);
        assert_eq!(top_correlated_games(&model, "y", 1).unwrap().entries[0].name, "x");
        assert!(top_correlated_games(&model, "nope", 1).is_err());
    }

    #[test]
    fn zero_variance_game_gives_empty_report() {
        let likes = GameLikeMatrix::from_pairs(&[("a", "x"), ("b", "x"), ("a", "y")]);
        let model = MvnModel::fit(&likes, false).unwrap();
        assert!(top_correlated_games(&model, "x", 3).unwrap().entries.is_empty());
    }

    #[test]
    fn correlated_games_follow_hand_sorted_covariance() {
        // corr(a,b) = 0.1/0.25 = 0.4, corr(a,c) = -0.05/sqrt(0.25*0.16) = -0.25
        let sigma = DMatrix::from_row_slice(3, 3, &[0.25, 0.1, -0.05, 0.1, 0.25, 0.0, -0.05, 0.0, 0.16]);
        let model = MvnModel::from_moments(
            names(&["a", "b", "c"]),
            Moments {
                mu: DVector::from_element(3, 0.5),
                sigma,
            },
            false,
            1e-9,
        )
        .unwrap();
        let report = top_correlated_games(&model, "a", 5).unwrap();
        assert_eq!(entry_names(&report), ["b", "c"]);
        assert!((report.entries[0].strength - 0.4).abs() < 1e-12);
        assert!((report.entries[1].strength + 0.25).abs() < 1e-12);
    }

    #[test]
    fn tag_responses() {
        let likes = GameLikeMatrix::from_pairs(&[("p1", "g1"), ("p2", "g2"), ("p2", "g3")]);
        let model = TagsModel::fit_targets(
            &likes.to_dense(),
            &DMatrix::identity(3, 3),
            1.0,
            likes.player_ids().to_vec(),
            names(&["puzzle", "racing", "rpg"]),
        )
        .unwrap();
        assert_eq!(top_tag_responses(&model, "p1", 1).unwrap().entries[0].name, "puzzle");

        let mut zero = model.clone();
        zero.t.row_mut(0).fill(0.0);
        let report = top_tag_responses(&zero, "p1", 3).unwrap();
        assert!(report.entries.iter().all(|e| e.strength == 0.0));
        // ties resolve alphabetically
        assert_eq!(entry_names(&report), ["puzzle", "racing", "rpg"]);

        let hand = TagsModel {
            player_ids: names(&["p"]),
            tag_names: names(&["a", "b", "c", "d"]),
            t: DMatrix::from_row_slice(1, 4, &[0.2, -0.7, 0.9, 0.2]),
            lambda: 1.0,
        };
        assert_eq!(entry_names(&top_tag_responses(&hand, "p", 3).unwrap()), ["c", "a", "d"]);
    }

    #[test]
    fn question_responses() {
        let model = QuestionsModel {
            game_ids: names(&["g1", "g2"]),
            question_ids: names(&["crosswords", "racing", "romance"]),
            q: DMatrix::from_row_slice(2, 3, &[0.5, -0.1, 0.3, 0.0, 0.0, 0.0]),
            lambda: 1.0,
        };
        let report = top_question_responses(&model, "g1", 2).unwrap();
        assert_eq!(entry_names(&report), ["crosswords", "romance"]);
        assert!(top_question_responses(&model, "g2", 3)
            .unwrap()
            .entries
            .iter()
            .all(|e| e.strength == 0.0));
        assert!(top_question_responses(&model, "g3", 1).is_err());
    }

    #[test]
    fn interaction_reports() {
        let mut a = DMatrix::zeros(2, 3);
        a[(1, 0)] = 0.8;
        let single = InteractionModel {
            tag_names: names(&["puzzle", "racing"]),
            question_ids: names(&["crosswords", "speed", "teamwork"]),
            a,
            lambda: 1.0,
        };
        let global = top_interactions(&single, InteractionQuery::Global, 1).unwrap();
        assert_eq!(global.entries[0].name, "racing x crosswords");

        let hand = InteractionModel {
            a: DMatrix::from_row_slice(2, 3, &[0.3, -0.9, 0.1, 0.5, 0.0, -0.4]),
            ..single
        };
        let global = top_interactions(&hand, InteractionQuery::Global, 4).unwrap();
        assert_eq!(
            entry_names(&global),
            ["puzzle x speed", "racing x crosswords", "racing x teamwork", "puzzle x crosswords"]
        );
        assert_eq!(global.entries[0].value, -0.9);
        let per_tag = top_interactions(&hand, InteractionQuery::Tag("puzzle"), 3).unwrap();
        assert_eq!(entry_names(&per_tag), ["crosswords", "teamwork", "speed"]);
        assert!(top_interactions(&hand, InteractionQuery::Tag("sports"), 3).is_err());
    }
}
