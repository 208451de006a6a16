//! Plain-text point sets: header `x,y,z,class`, one point per line. The
//! class column is empty for unlabeled sets.

use std::path::Path;

use sparse_occ_core::{validate, ClassId, ClassTaxonomy, LabeledPointSet};

use super::{FormatError, Result};

pub fn write_csv(path: impl AsRef<Path>, set: &LabeledPointSet, taxonomy: &ClassTaxonomy) -> Result<()> {
    validate(set, taxonomy)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "z", "class"])?;
    for (i, p) in set.positions().iter().enumerate() {
        let class = set.classes().map(|c| c[i].to_string()).unwrap_or_default();
        w.write_record([p[0].to_string(), p[1].to_string(), p[2].to_string(), class])?;
    }
    w.flush().map_err(FormatError::Io)?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>, taxonomy: &ClassTaxonomy) -> Result<LabeledPointSet> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["x", "y", "z", "class"] {
        return Err(FormatError::CsvRecord {
            line: 1,
            reason: "expected header x,y,z,class".into(),
        });
    }
    let mut positions = Vec::new();
    let mut classes: Vec<Option<ClassId>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| FormatError::CsvRecord { line, reason };
        let coord = |k: usize| {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("column {k}: {e}")))
        };
        positions.push([coord(0)?, coord(1)?, coord(2)?]);
        let c = rec[3].trim();
        classes.push(if c.is_empty() {
            None
        } else {
            Some(c.parse().map_err(|e| bad(format!("class: {e}")))?)
        });
    }
    let set = if classes.iter().all(Option::is_some) && !classes.is_empty() {
        LabeledPointSet::labeled(positions, classes.into_iter().flatten().collect())?
    } else if classes.iter().all(Option::is_none) {
        LabeledPointSet::new(positions)
    } else {
        return Err(FormatError::CsvRecord {
            line: 0,
            reason: "class column is only partly filled".into(),
        });
    };
    validate(&set, taxonomy)?;
    Ok(set)
}
