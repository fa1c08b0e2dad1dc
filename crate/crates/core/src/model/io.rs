//! JSON model files.
//!
//! ```json
//! { "name": "...", "layout": {"s0":1,"s1":2,"s2":2,"splus":4},
//!   "blocks": { "+:-1,0": [[1,0,0,0], ...], ... } }
//! ```
//! All 36 blocks must be present, each as a row-major array of rows.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BlockKey, Matrix, ModelError, PhaseLayout, QbdModel};

#[derive(Serialize, Deserialize)]
struct ModelFile {
    name: String,
    layout: PhaseLayout,
    blocks: BTreeMap<String, Vec<Vec<f64>>>,
}

pub fn from_json(text: &str) -> Result<QbdModel, ModelError> {
    let file: ModelFile = serde_json::from_str(text)?;
    let l = file.layout;
    let layout = PhaseLayout::new(l.s0, l.s1, l.s2, l.splus)?;
    let mut blocks = BTreeMap::new();
    for (text_key, rows) in file.blocks {
        let key = BlockKey::parse(&text_key)?;
        let ncols = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(ModelError::RaggedRow { key: text_key, row: i });
            }
            flat.extend_from_slice(row);
        }
        blocks.insert(key, Matrix::from_row_slice(rows.len(), ncols, &flat));
    }
    QbdModel::new(file.name, layout, blocks)
}

pub fn to_json(model: &QbdModel) -> String {
    let blocks = model
        .blocks()
        .map(|(key, m)| {
            let rows = m.row_iter().map(|r| r.iter().copied().collect()).collect();
            (key.file_key(), rows)
        })
        .collect();
    let file = ModelFile {
        name: model.name().to_string(),
        layout: *model.layout(),
        blocks,
    };
    serde_json::to_string_pretty(&file).expect("model serialization is infallible")
}

pub fn read_model(path: impl AsRef<Path>) -> Result<QbdModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text)
}

pub fn write_model(model: &QbdModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    std::fs::write(path, to_json(model)).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_additional_server, build_priority_setup};

    #[test]
    fn round_trip_is_exact() {
        for model in [
            build_priority_setup(0.1, 0.821, 1.0, 1.0, 2.0, 2.0).unwrap(),
            build_additional_server(1.9, 1.074, 1.0, 1.0).unwrap(),
        ] {
            let text = to_json(&model);
            assert_eq!(text.matches(":[").count() + text.matches(": [").count(), 36);
            assert_eq!(from_json(&text).unwrap(), model);
        }
    }

    #[test]
    fn missing_and_misshapen_blocks_are_errors() {
        let model = build_priority_setup(0.1, 0.5, 1.0, 1.0, 2.0, 2.0).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&model)).unwrap();
        let blocks = v["blocks"].as_object_mut().unwrap();
        blocks.remove("0:1,1");
        let err = from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, ModelError::MissingBlock { .. }), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(&to_json(&model)).unwrap();
        v["blocks"]["+:0,0"] = serde_json::json!([[1.0, 2.0], [3.0]]);
        assert!(matches!(from_json(&v.to_string()), Err(ModelError::RaggedRow { .. })));

        v["blocks"]["+:0,0"] = serde_json::json!([[1.0]]);
        assert!(matches!(from_json(&v.to_string()), Err(ModelError::ShapeMismatch { .. })));

        v["blocks"]["x:0,0"] = serde_json::json!([[1.0]]);
        assert!(from_json(&v.to_string()).is_err());
    }
}
