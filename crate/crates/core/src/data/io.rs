//! Long-format CSV ingestion and export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use super::{sorted_unique, axis_index, GameFeatureMatrix, GameLikeMatrix, PlayerFeatureMatrix};
use crate::error::{Error, Result};

/// How questionnaire answers in a file are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LikertScale {
    /// Answers already in -2..=2.
    Centered,
    /// Answers in 1..=5, shifted by -3 on ingestion.
    OneToFive,
    /// Decide from the file: any answer <= 0 means centered, otherwise any
    /// answer >= 3 means one-to-five; a file holding only 1s and 2s is
    /// read as centered.
    #[default]
    Auto,
}

struct Row {
    line: u64,
    fields: Vec<String>,
}

/// Reads a headed CSV, checking the header and field count. IDs containing
/// commas cannot be quoted, so they show up as extra fields and are rejected.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Row>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .quoting(false)
        .trim(Trim::All)
        .flexible(true)
        .from_reader(file);

    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };

    let mut records = reader.records();
    match records.next() {
        None => return Ok(Vec::new()),
        Some(first) => {
            let first = first.map_err(|e| parse_err(1, e.to_string()))?;
            if !first.iter().eq(header.iter().copied()) {
                return Err(parse_err(
                    1,
                    format!("expected header `{}`, found `{}`", header.join(","), join(&first)),
                ));
            }
        }
    }

    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        if let Some(empty) = record.iter().position(str::is_empty) {
            return Err(parse_err(line, format!("empty `{}` field", header[empty])));
        }
        rows.push(Row {
            line,
            fields: record.iter().map(str::to_owned).collect(),
        });
    }
    Ok(rows)
}

fn join(record: &StringRecord) -> String {
    record.iter().collect::<Vec<_>>().join(",")
}

/// Reads `player_id,game_id` rows. Duplicate rows collapse to a single like.
pub fn load_likes(path: impl AsRef<Path>) -> Result<GameLikeMatrix> {
    let path = path.as_ref();
    let rows = read_rows(path, &["player_id", "game_id"])?;
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_owned()));
    }
    let pairs: Vec<(&str, &str)> = rows
        .iter()
        .map(|r| (r.fields[0].as_str(), r.fields[1].as_str()))
        .collect();
    Ok(GameLikeMatrix::from_pairs(&pairs))
}

/// Reads `game_id,tag` rows. A file without data rows yields an empty
/// matrix, which [`GameFeatureMatrix::align_to`] rejects.
pub fn load_game_tags(path: impl AsRef<Path>) -> Result<GameFeatureMatrix> {
    let rows = read_rows(path.as_ref(), &["game_id", "tag"])?;
    let pairs: Vec<(&str, &str)> = rows
        .iter()
        .map(|r| (r.fields[0].as_str(), r.fields[1].as_str()))
        .collect();
    Ok(GameFeatureMatrix::from_pairs(&pairs))
}

/// Reads `player_id,question_id,answer` rows. Unanswered cells are neutral
/// (0); a repeated answer overwrites the earlier one.
pub fn load_player_questions(
    path: impl AsRef<Path>,
    scale: LikertScale,
) -> Result<PlayerFeatureMatrix> {
    let path = path.as_ref();
    let rows = read_rows(path, &["player_id", "question_id", "answer"])?;
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_owned()));
    }
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };

    let mut answers = Vec::with_capacity(rows.len());
    for row in &rows {
        let value: i64 = row.fields[2]
            .parse()
            .map_err(|_| parse_err(row.line, format!("answer `{}` is not an integer", row.fields[2])))?;
        if !(-2..=5).contains(&value) {
            return Err(parse_err(
                row.line,
                format!("answer {value} is outside both -2..=2 and 1..=5"),
            ));
        }
        answers.push(value);
    }

    let scale = match scale {
        LikertScale::Auto => {
            if answers.iter().any(|&a| a <= 0) {
                LikertScale::Centered
            } else if answers.iter().any(|&a| a >= 3) {
                LikertScale::OneToFive
            } else {
                LikertScale::Centered
            }
        }
        explicit => explicit,
    };
    let (lo, hi, shift) = match scale {
        LikertScale::OneToFive => (1, 5, -3),
        _ => (-2, 2, 0),
    };
    if let Some((row, a)) = rows.iter().zip(&answers).find(|(_, a)| !(lo..=hi).contains(*a)) {
        return Err(parse_err(
            row.line,
            format!("answer {a} does not fit the {lo}..={hi} scale used by this file"),
        ));
    }

    let player_ids = sorted_unique(rows.iter().map(|r| r.fields[0].as_str()));
    let question_ids = sorted_unique(rows.iter().map(|r| r.fields[1].as_str()));
    let s = question_ids.len();
    let mut values = vec![0i8; player_ids.len() * s];
    for (row, a) in rows.iter().zip(&answers) {
        let i = axis_index(&player_ids, &row.fields[0]).unwrap();
        let j = axis_index(&question_ids, &row.fields[1]).unwrap();
        values[i * s + j] = (a + shift) as i8;
    }
    PlayerFeatureMatrix::new(player_ids, question_ids, values)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn check_id(id: &str) -> Result<()> {
    if id.contains(',') || id.contains('\n') {
        Err(Error::Alignment(format!("ID `{id}` cannot be written to CSV")))
    } else {
        Ok(())
    }
}

/// Writes one `player_id,game_id` row per like, in canonical order.
pub fn save_likes(likes: &GameLikeMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "player_id,game_id").map_err(io)?;
    for (i, j) in likes.pairs() {
        let (p, g) = (&likes.player_ids()[i], &likes.game_ids()[j]);
        check_id(p)?;
        check_id(g)?;
        writeln!(out, "{p},{g}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn save_game_tags(tags: &GameFeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "game_id,tag").map_err(io)?;
    for (i, g) in tags.game_ids().iter().enumerate() {
        check_id(g)?;
        for (j, t) in tags.tag_names().iter().enumerate() {
            if tags.get(i, j) {
                check_id(t)?;
                writeln!(out, "{g},{t}").map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

/// Writes every cell on the centered scale, including neutral answers.
pub fn save_player_questions(questions: &PlayerFeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "player_id,question_id,answer").map_err(io)?;
    for (i, p) in questions.player_ids().iter().enumerate() {
        check_id(p)?;
        for (j, q) in questions.question_ids().iter().enumerate() {
            check_id(q)?;
            writeln!(out, "{p},{q},{}", questions.get(i, j)).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}
