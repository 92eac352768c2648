//! CSV + JSON sidecar serialization of grid functions.
//!
//! The CSV has header `index,x,value` (1D) or `index,x,y,value` (2D) and
//! prints every binary64 with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces the values bit for bit.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Grid, GridFunction, IndexBox};
use crate::error::{Error, Result};

/// Sidecar metadata describing the grid of a serialized function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub dim: usize,
    pub h: f64,
    pub origin: Vec<f64>,
    pub extent: Vec<usize>,
    pub support: Option<IndexBox>,
}

impl GridMetadata {
    pub fn of(f: &GridFunction) -> Self {
        let g = f.grid();
        Self {
            dim: g.dim(),
            h: g.h(),
            origin: g.origin().to_vec(),
            extent: g.extent().to_vec(),
            support: f.support(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, &self.origin, self.h, &self.extent)
    }
}

pub fn write_csv<W: Write>(f: &GridFunction, mut out: W) -> Result<()> {
    let g = f.grid();
    if g.dim() == 1 {
        writeln!(out, "index,x,value")?;
    } else {
        writeln!(out, "index,x,y,value")?;
    }
    for (k, v) in f.values().iter().enumerate() {
        let p = g.coord(k);
        if g.dim() == 1 {
            writeln!(out, "{k},{},{v}", p[0])?;
        } else {
            writeln!(out, "{k},{},{},{v}", p[0], p[1])?;
        }
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(meta: &GridMetadata, input: R) -> Result<GridFunction> {
    let grid = meta.grid()?;
    let mut values = vec![0.0; grid.len()];
    let mut seen = vec![false; grid.len()];
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty csv".into()))??;
    let expected = if grid.dim() == 1 { "index,x,value" } else { "index,x,y,value" };
    if header.trim() != expected {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != grid.dim() + 2 {
            return Err(Error::Parse(format!("line {}: wrong field count", lineno + 2)));
        }
        let k: usize = fields[0]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
        if k >= grid.len() {
            return Err(Error::Parse(format!("line {}: index {k} out of range", lineno + 2)));
        }
        let v: f64 = fields[fields.len() - 1]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
        values[k] = v;
        seen[k] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Parse("csv does not cover every node".into()));
    }
    let f = GridFunction::new(&grid, values)?;
    match meta.support {
        Some(b) => f.with_support(b),
        None => Ok(f),
    }
}

/// Writes `<stem>.csv` and `<stem>.json` next to each other.
pub fn save(f: &GridFunction, csv_path: &Path, json_path: &Path) -> Result<()> {
    let file = std::fs::File::create(csv_path)?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(f, &mut w)?;
    w.flush()?;
    std::fs::write(json_path, crate::json::to_sorted_string(&GridMetadata::of(f))?)?;
    Ok(())
}

pub fn load(csv_path: &Path, json_path: &Path) -> Result<GridFunction> {
    let meta: GridMetadata = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
    let file = std::fs::File::open(csv_path)?;
    read_csv(&meta, std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 12)) {
            let g = Grid::new(2, &[-0.3, 0.7], 0.1, &[4, 3]).unwrap();
            let f = GridFunction::new(&g, values).unwrap();
            let mut buf = Vec::new();
            write_csv(&f, &mut buf).unwrap();
            let meta = GridMetadata::of(&f);
            let back = read_csv(&meta, buf.as_slice()).unwrap();
            for k in 0..g.len() {
                prop_assert_eq!(f.get(k).to_bits(), back.get(k).to_bits());
            }
        }
    }

    #[test]
    fn header_and_support_survive() {
        let g = Grid::new(1, &[0.0], 0.5, &[5]).unwrap();
        let f = GridFunction::new(&g, vec![0.0, 1.5, -2.0, 0.0, 0.0]).unwrap().with_tight_support();
        let dir = std::env::temp_dir().join(format!("fraclap-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let (c, j) = (dir.join("u.csv"), dir.join("u.json"));
        save(&f, &c, &j).unwrap();
        let text = std::fs::read_to_string(&c).unwrap();
        assert!(text.starts_with("index,x,value\n0,0,0\n1,0.5,1.5\n"));
        let back = load(&c, &j).unwrap();
        assert_eq!(back, f);
        std::fs::remove_dir_all(&dir).ok();
    }
}
