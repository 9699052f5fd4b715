//! Structured-text (JSON) file formats for cell systems,
//! representations, and homology bases: human-diffable fixtures.
//!
//! Cell system files carry `dim`, `alphabet_size`, `cells`, `relators`
//! (arrays of `[generator, exponent]` pairs), `boundaries` (one
//! row-major matrix per positive degree; each entry is an array of
//! `[coefficient, word]` terms) and `marks` (name to array of
//! `[degree, index]` pairs). Representation files carry `n`,
//! `alphabet_size` and `images` as nested rows of `[re, im]` pairs.
//! Bases files list, per degree, the columns of cycle representatives.

use crate::cellsys::{CellError, CellSystem, GrMatrix, GroupRingElement, NumericChainComplex, Word};
use crate::liealg::Representation;
use crate::linalg::{CMatrix, Tolerance};
use crate::torsion::HomologyBasisSet;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("read: {0}")]
    Read(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Cell(#[from] CellError),
}

type WordRepr = Vec<(usize, i8)>;
type EntryRepr = Vec<(i64, WordRepr)>;

#[derive(Debug, Serialize, Deserialize)]
struct CellSystemFile {
    dim: usize,
    alphabet_size: usize,
    cells: Vec<usize>,
    #[serde(default)]
    relators: Vec<WordRepr>,
    boundaries: Vec<Vec<Vec<EntryRepr>>>,
    #[serde(default)]
    marks: BTreeMap<String, Vec<(usize, usize)>>,
}

fn word_from_repr(r: &WordRepr) -> Result<Word, IoError> {
    for &(_, e) in r {
        if e != 1 && e != -1 {
            return Err(IoError::Invalid(format!("word exponent {e} must be +-1")));
        }
    }
    Ok(Word::new(r.clone()))
}

fn word_to_repr(w: &Word) -> WordRepr {
    w.letters().to_vec()
}

fn entry_from_repr(r: &EntryRepr) -> Result<GroupRingElement, IoError> {
    let mut terms = Vec::with_capacity(r.len());
    for (c, w) in r {
        terms.push((*c, word_from_repr(w)?));
    }
    Ok(GroupRingElement::from_terms(terms))
}

fn entry_to_repr(e: &GroupRingElement) -> EntryRepr {
    e.terms()
        .iter()
        .map(|(c, w)| (*c, word_to_repr(w)))
        .collect()
}

pub fn cell_system_from_str(s: &str) -> Result<CellSystem, IoError> {
    let file: CellSystemFile = serde_json::from_str(s)?;
    if file.cells.len() != file.dim + 1 {
        return Err(IoError::Invalid(format!(
            "cells array has {} entries for dim {}",
            file.cells.len(),
            file.dim
        )));
    }
    if file.boundaries.len() != file.dim {
        return Err(IoError::Invalid(format!(
            "boundaries array has {} entries for dim {}",
            file.boundaries.len(),
            file.dim
        )));
    }
    let mut boundaries = Vec::with_capacity(file.dim);
    for (p, rows) in file.boundaries.iter().enumerate() {
        let (r, c) = (file.cells[p], file.cells[p + 1]);
        if rows.len() != r || rows.iter().any(|row| row.len() != c) {
            return Err(IoError::Invalid(format!(
                "boundary {} must be {r}x{c}",
                p + 1
            )));
        }
        let mut m = GrMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                m.set(i, j, entry_from_repr(entry)?);
            }
        }
        boundaries.push(m);
    }
    let relators = file
        .relators
        .iter()
        .map(word_from_repr)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CellSystem::new(
        file.dim,
        file.alphabet_size,
        file.cells,
        boundaries,
        relators,
        file.marks,
    )?)
}

pub fn cell_system_to_string(cs: &CellSystem) -> String {
    let boundaries = (1..=cs.dim())
        .map(|p| {
            let b = cs.boundary(p);
            (0..b.rows())
                .map(|i| (0..b.cols()).map(|j| entry_to_repr(b.get(i, j))).collect())
                .collect()
        })
        .collect();
    let file = CellSystemFile {
        dim: cs.dim(),
        alphabet_size: cs.alphabet_size(),
        cells: cs.cells().to_vec(),
        relators: cs.relators().iter().map(word_to_repr).collect(),
        boundaries,
        marks: cs.marks().clone(),
    };
    serde_json::to_string_pretty(&file).expect("serializable")
}

pub fn load_cell_system(path: &Path) -> Result<CellSystem, IoError> {
    cell_system_from_str(&std::fs::read_to_string(path)?)
}

pub fn save_cell_system(cs: &CellSystem, path: &Path) -> Result<(), IoError> {
    Ok(std::fs::write(path, cell_system_to_string(cs))?)
}

#[derive(Debug, Serialize, Deserialize)]
struct RepresentationFile {
    n: usize,
    alphabet_size: usize,
    images: Vec<Vec<Vec<(f64, f64)>>>,
}

pub fn representation_from_str(s: &str, tol: Tolerance) -> Result<Representation, IoError> {
    let file: RepresentationFile = serde_json::from_str(s)?;
    if file.images.len() != file.alphabet_size {
        return Err(IoError::Invalid(format!(
            "{} images for alphabet of size {}",
            file.images.len(),
            file.alphabet_size
        )));
    }
    let mut images = Vec::with_capacity(file.images.len());
    for (k, rows) in file.images.iter().enumerate() {
        if rows.len() != file.n || rows.iter().any(|r| r.len() != file.n) {
            return Err(IoError::Invalid(format!(
                "image {k} must be {0}x{0}",
                file.n
            )));
        }
        images.push(CMatrix::from_fn(file.n, file.n, |i, j| {
            let (re, im) = rows[i][j];
            Complex64::new(re, im)
        }));
    }
    Representation::new(file.n, images, tol).map_err(|e| IoError::Invalid(e.to_string()))
}

pub fn representation_to_string(rep: &Representation) -> String {
    let images = rep
        .images
        .iter()
        .map(|m| {
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect())
                .collect()
        })
        .collect();
    let file = RepresentationFile {
        n: rep.n,
        alphabet_size: rep.alphabet_size(),
        images,
    };
    serde_json::to_string_pretty(&file).expect("serializable")
}

pub fn load_representation(path: &Path, tol: Tolerance) -> Result<Representation, IoError> {
    representation_from_str(&std::fs::read_to_string(path)?, tol)
}

#[derive(Debug, Serialize, Deserialize)]
struct BasesFile {
    /// Per degree, the list of basis columns; each column lists the
    /// [re, im] coordinates in the chain group of that degree.
    bases: Vec<Vec<Vec<(f64, f64)>>>,
}

pub fn bases_from_str(s: &str, cc: &NumericChainComplex) -> Result<HomologyBasisSet, IoError> {
    let file: BasesFile = serde_json::from_str(s)?;
    if file.bases.len() > cc.n() + 1 {
        return Err(IoError::Invalid(format!(
            "{} degrees of bases for a complex of dimension {}",
            file.bases.len(),
            cc.n()
        )));
    }
    let mut out = HomologyBasisSet::empty_for(cc);
    for (p, cols) in file.bases.iter().enumerate() {
        if cols.is_empty() {
            continue;
        }
        let rows = cc.dim_at(p);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(IoError::Invalid(format!(
                "degree {p} columns must have {rows} coordinates"
            )));
        }
        let m = CMatrix::from_fn(rows, cols.len(), |i, j| {
            let (re, im) = cols[j][i];
            Complex64::new(re, im)
        });
        out.set_basis(p, m);
    }
    Ok(out)
}

pub fn bases_to_string(h: &HomologyBasisSet) -> String {
    let bases = (0..h.degrees())
        .map(|p| {
            let m = h.basis(p);
            (0..m.cols())
                .map(|j| m.column(j).iter().map(|z| (z.re, z.im)).collect())
                .collect()
        })
        .collect();
    serde_json::to_string_pretty(&BasesFile { bases }).expect("serializable")
}

pub fn load_bases(path: &Path, cc: &NumericChainComplex) -> Result<HomologyBasisSet, IoError> {
    bases_from_str(&std::fs::read_to_string(path)?, cc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{make_space, SpaceRecipe};

    #[test]
    fn cell_system_round_trip_is_identical() {
        for recipe in [
            SpaceRecipe::Point,
            SpaceRecipe::Circle,
            SpaceRecipe::Disk,
            SpaceRecipe::Sphere2,
            SpaceRecipe::Sphere3,
            SpaceRecipe::SolidTorus,
            SpaceRecipe::Lens { p: 5, q: 2 },
        ] {
            let cs = make_space(&recipe).unwrap();
            let text = cell_system_to_string(&cs);
            let back = cell_system_from_str(&text).unwrap();
            assert_eq!(cs, back, "round trip changed {recipe}");
        }
    }

    #[test]
    fn representation_round_trip() {
        use crate::samples;
        let mut rng = samples::rng_from_seed(9);
        let rep = samples::random_representation(2, 2, &mut rng);
        let text = representation_to_string(&rep);
        let back = representation_from_str(&text, Tolerance::default()).unwrap();
        for (a, b) in rep.images.iter().zip(&back.images) {
            assert!(a.sub(b).max_abs() == 0.0);
        }
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        assert!(matches!(
            cell_system_from_str("{ not json"),
            Err(IoError::Parse(_))
        ));
        // Well-formed JSON, wrong shape.
        assert!(matches!(
            cell_system_from_str(r#"{"dim": 1, "alphabet_size": 0, "cells": [1], "boundaries": []}"#),
            Err(IoError::Invalid(_))
        ));
    }

    #[test]
    fn bad_word_exponent_is_rejected() {
        let text = r#"{
            "dim": 1, "alphabet_size": 1, "cells": [1, 1],
            "boundaries": [[[ [[1, [[0, 2]]]] ]]],
            "relators": [], "marks": {}
        }"#;
        assert!(matches!(cell_system_from_str(text), Err(IoError::Invalid(_))));
    }
}
