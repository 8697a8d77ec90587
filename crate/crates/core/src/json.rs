//! The MD-system JSON document.
//!
//! ```json
//! { "n": 1,
//!   "breakpoints": ["0/1", "1/3", "1/1"],
//!   "partitions": [[0, 1]],
//!   "values": [["2/1", "-1/1"]] }
//! ```
//!
//! The level-0 partition is implicit. Rationals are written as `"num/den"`
//! in lowest terms, so a parse/serialize round trip is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{AtomGrid, CellLabeling};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::system::MdSystem;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdSystemDoc {
    pub n: usize,
    pub breakpoints: Vec<String>,
    pub partitions: Vec<Vec<usize>>,
    pub values: Vec<Vec<String>>,
}

impl MdSystemDoc {
    pub fn from_system(d: &MdSystem) -> Self {
        Self {
            n: d.n(),
            breakpoints: d.grid().breakpoints().iter().map(format_rational).collect(),
            partitions: (1..=d.n()).map(|k| d.partition(k).labels().to_vec()).collect(),
            values: (1..=d.n())
                .map(|k| d.difference(k).iter().map(format_rational).collect())
                .collect(),
        }
    }

    pub fn to_system(&self) -> Result<MdSystem> {
        if self.partitions.len() != self.n || self.values.len() != self.n {
            return Err(Error::Shape(format!(
                "n = {} but {} partitions and {} value rows",
                self.n,
                self.partitions.len(),
                self.values.len()
            )));
        }
        let breakpoints = parse_all(&self.breakpoints)?;
        let grid = AtomGrid::new(breakpoints)?;
        let partitions = self.partitions.iter().map(|p| CellLabeling::new(p.iter().copied())).collect();
        let values = self.values.iter().map(|row| parse_all(row)).collect::<Result<Vec<_>>>()?;
        MdSystem::new(grid, partitions, values)
    }
}

fn parse_all(items: &[String]) -> Result<Vec<Rational>> {
    items.iter().map(|s| parse_rational(s)).collect()
}

impl Serialize for MdSystem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MdSystemDoc::from_system(self).serialize(serializer)
    }
}

impl MdSystem {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MdSystemDoc::from_system(self)).expect("plain data")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&MdSystemDoc::from_system(self)).expect("plain data")
    }

    /// Parses the document and checks shapes; martingale invariants are left
    /// to [`MdSystem::validate`].
    pub fn from_json(text: &str) -> Result<MdSystem> {
        let doc: MdSystemDoc =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.to_system()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::random_md;

    #[test]
    fn thirds_document() {
        let text = r#"{"n":1,"breakpoints":["0","1/3","2/3","1"],
            "partitions":[[0,1,2]],"values":[["2","-1","-1"]]}"#;
        let d = MdSystem::from_json(text).unwrap();
        assert!(d.validate().valid);
        let out = d.to_json();
        assert!(out.contains(r#""values":[["2/1","-1/1","-1/1"]]"#));
        assert_eq!(MdSystem::from_json(&out).unwrap(), d);
    }

    #[test]
    fn zero_denominator_is_parse_error() {
        let text = r#"{"n":1,"breakpoints":["0","1/0","1"],"partitions":[[0,1]],"values":[["1","-1"]]}"#;
        assert!(matches!(MdSystem::from_json(text), Err(Error::Parse(_))));
    }

    #[test]
    fn shape_mismatch() {
        let text = r#"{"n":2,"breakpoints":["0","1"],"partitions":[[0]],"values":[["0"]]}"#;
        assert!(matches!(MdSystem::from_json(text), Err(Error::Shape(_))));
        assert!(matches!(MdSystem::from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn random_round_trip() {
        for seed in 0..5 {
            let d = random_md(3, 3, 7, seed);
            assert_eq!(MdSystem::from_json(&d.to_json_pretty()).unwrap(), d);
        }
    }
}
