//! Versioned JSON container for fitted models, and serde adapters that
//! store matrices as `{rows, cols, data}` with row-major `data`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cf::{KnnModel, MvnModel, SvdModel};
use crate::content::{InteractionModel, QuestionsModel, TagsModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u64 = 1;

pub mod dense_matrix {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct RowMajor {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(matrix: &DMatrix<f64>, serializer: S) -> Result<S::Ok, S::Error> {
        RowMajor {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
            data: matrix.transpose().as_slice().to_vec(),
        }
        .serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<DMatrix<f64>, D::Error> {
        let raw = RowMajor::deserialize(deserializer)?;
        if raw.rows * raw.cols != raw.data.len() {
            return Err(serde::de::Error::custom(format!(
                "{} values for a {}x{} matrix",
                raw.data.len(),
                raw.rows,
                raw.cols
            )));
        }
        Ok(DMatrix::from_row_slice(raw.rows, raw.cols, &raw.data))
    }
}

pub mod dense_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(vector: &DVector<f64>, serializer: S) -> Result<S::Ok, S::Error> {
        vector.as_slice().serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<DVector<f64>, D::Error> {
        Vec::<f64>::deserialize(deserializer).map(DVector::from_vec)
    }
}

/// Any fitted model, tagged by `kind`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SavedModel {
    Mvn(MvnModel),
    Knn(KnnModel),
    Svd(SvdModel),
    Tags(TagsModel),
    Questions(QuestionsModel),
    Interactions(InteractionModel),
}

impl SavedModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            SavedModel::Mvn(_) => "mvn",
            SavedModel::Knn(_) => "knn",
            SavedModel::Svd(_) => "svd",
            SavedModel::Tags(_) => "tags",
            SavedModel::Questions(_) => "questions",
            SavedModel::Interactions(_) => "interactions",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    #[serde(flatten)]
    model: SavedModel,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<u64>,
}

pub fn model_to_json(model: &SavedModel) -> Result<String> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn model_from_json(text: &str) -> Result<SavedModel> {
    let probe: VersionProbe = serde_json::from_str(text)?;
    match probe.format_version {
        Some(MODEL_FORMAT_VERSION) => {}
        found => {
            return Err(Error::FormatVersion {
                found: found.unwrap_or(0),
                expected: MODEL_FORMAT_VERSION,
            })
        }
    }
    let file: ModelFile = serde_json::from_str(text)?;
    Ok(file.model)
}

pub fn save_model(model: &SavedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GameLikeMatrix;

    #[test]
    fn model_round_trip_and_version_check() {
        let likes = GameLikeMatrix::from_pairs(&[("a", "x"), ("b", "y"), ("c", "x"), ("c", "z")]);
        let model = SavedModel::Mvn(MvnModel::fit(&likes, false).unwrap());
        let json = model_to_json(&model).unwrap();
        assert!(json.contains("\"format_version\":1"));
        assert!(json.contains("\"kind\":\"mvn\""));
        let back = model_from_json(&json).unwrap();
        assert_eq!(model_to_json(&back).unwrap(), json);

        let bumped = json.replace("\"format_version\":1", "\"format_version\":99");
        assert!(matches!(
            model_from_json(&bumped),
            Err(Error::FormatVersion { found: 99, .. })
        ));
    }
}
