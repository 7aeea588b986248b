//! File formats: DOTA annotation text, image tiling and the versioned JSON
//! documents exchanged by the command-line tool.

mod dota;
mod tile;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dota::{parse_dota, write_dota, DotaRecord};
pub use tile::{tile_annotations, tile_starts, Tile, TileSpec, TiledRecord};

pub const SCHEMA: &str = "orp/1";

/// The fifteen DOTA v1.0 category names, one per line.
pub const DOTA15_VOCABULARY: &str = include_str!("../../data/dota15.txt");

pub fn dota15_classes() -> Vec<&'static str> {
    DOTA15_VOCABULARY
        .lines()
        .filter(|l| !l.is_empty())
        .collect()
}

/// Parses a document and checks its schema tag.
pub fn read_document<T: DeserializeOwned>(text: &str) -> Result<T> {
    #[derive(Deserialize)]
    struct Tag {
        schema: Option<String>,
    }
    let tag: Tag = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    match tag.schema.as_deref() {
        Some(SCHEMA) => {}
        Some(other) => {
            return Err(Error::Schema(format!(
                "unsupported schema {other:?}, expected {SCHEMA:?}"
            )))
        }
        None => {
            return Err(Error::Schema(format!(
                "missing \"schema\": \"{SCHEMA}\" field"
            )))
        }
    }
    serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
}

/// Serializes `body` wrapped in a versioned document.
pub fn write_document<T: Serialize>(body: &T) -> Result<String> {
    let mut v = serde_json::to_value(body).map_err(|e| Error::Schema(e.to_string()))?;
    match v.as_object_mut() {
        Some(m) => {
            m.insert("schema".into(), SCHEMA.into());
        }
        None => return Err(Error::Schema("document body must be a JSON object".into())),
    }
    serde_json::to_string_pretty(&v).map_err(|e| Error::Schema(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Body {
        n: u32,
    }

    #[test]
    fn schema_tag_roundtrip() {
        let s = write_document(&Body { n: 3 }).unwrap();
        assert!(s.contains("orp/1"));
        assert_eq!(read_document::<Body>(&s).unwrap(), Body { n: 3 });
        assert!(read_document::<Body>("{\"n\": 3}").is_err());
        assert!(read_document::<Body>("{\"schema\": \"orp/2\", \"n\": 3}").is_err());
    }

    #[test]
    fn vocabulary_has_fifteen_classes() {
        let v = dota15_classes();
        assert_eq!(v.len(), 15);
        assert!(v.contains(&"plane") && v.contains(&"swimming-pool"));
    }
}
