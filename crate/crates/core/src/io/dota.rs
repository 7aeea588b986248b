use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::Quad;

/// One DOTA annotation line: four corners, a class token and a difficulty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DotaRecord {
    pub coords: [f64; 8],
    pub class: String,
    pub difficulty: u8,
}

impl DotaRecord {
    pub fn corners(&self) -> [Point2<f64>; 4] {
        let c = &self.coords;
        [
            Point2::new(c[0], c[1]),
            Point2::new(c[2], c[3]),
            Point2::new(c[4], c[5]),
            Point2::new(c[6], c[7]),
        ]
    }

    pub fn to_quad(&self) -> Result<Quad> {
        Quad::new(self.corners())
    }

    pub fn shifted(&self, dx: f64, dy: f64) -> Self {
        let mut coords = self.coords;
        for (i, v) in coords.iter_mut().enumerate() {
            *v -= if i % 2 == 0 { dx } else { dy };
        }
        Self {
            coords,
            class: self.class.clone(),
            difficulty: self.difficulty,
        }
    }
}

fn parse_line(line: &str, n: usize) -> Result<DotaRecord> {
    let err = |reason: String| Error::Parse { line: n, reason };
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 10 {
        return Err(err(format!("expected 10 fields, found {}", tokens.len())));
    }
    let mut coords = [0.0; 8];
    for (k, t) in tokens[..8].iter().enumerate() {
        let v: f64 = t
            .parse()
            .map_err(|_| err(format!("coordinate {} is not a number: {t:?}", k + 1)))?;
        if !v.is_finite() {
            return Err(err(format!("coordinate {} is not finite", k + 1)));
        }
        coords[k] = v;
    }
    let difficulty = match tokens[9] {
        "0" => 0,
        "1" => 1,
        t => return Err(err(format!("difficulty must be 0 or 1, found {t:?}"))),
    };
    let rec = DotaRecord {
        coords,
        class: tokens[8].to_string(),
        difficulty,
    };
    rec.to_quad()
        .map_err(|e| err(format!("invalid quadrilateral: {e}")))?;
    Ok(rec)
}

/// Parses DOTA text. Blank lines and `imagesource:` / `gsd:` headers are
/// skipped; line numbers in errors are 1-based.
pub fn parse_dota(text: &str) -> Result<Vec<DotaRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with("imagesource") || t.starts_with("gsd") {
            continue;
        }
        out.push(parse_line(t, i + 1)?);
    }
    Ok(out)
}

/// Writes one line per record using the shortest round-trip float format.
pub fn write_dota(records: &[DotaRecord]) -> String {
    let mut s = String::new();
    for r in records {
        for v in r.coords {
            write!(s, "{v} ").unwrap();
        }
        writeln!(s, "{} {}", r.class, r.difficulty).unwrap();
    }
    s
}
