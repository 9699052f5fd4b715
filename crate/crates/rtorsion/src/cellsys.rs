//! CW complexes with group-ring boundary data and their twisting into
//! numeric chain complexes.
//!
//! Cells are anonymous indices per dimension; boundary matrices have
//! entries in the integral group ring of a free alphabet, with chosen
//! lifts baked into the words. Fundamental groups are never presented
//! abstractly: every formula downstream only needs words evaluated
//! through Ad of a representation, which sidesteps the word problem.
//!
//! Matrix composition over the group ring multiplies entries left to
//! right, `(d d')_{ik} = sum_l d_{il} d'_{lk}`, matching the matrix
//! product of the twisted blocks. The chain axiom d o d = 0 is checked
//! numerically after twisting, never symbolically.

use crate::liealg::{adjoint_of_word, validate_representation, AdjointData, Letter, LieError, Representation};
use crate::linalg::{CMatrix, Tolerance};
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error)]
pub enum CellError {
    #[error("AlphabetMismatch: representation has {rep} letters, complex expects {complex}")]
    AlphabetMismatch { rep: usize, complex: usize },
    #[error("DegreeOutOfRange: degree {degree} not in 0..={dim}")]
    DegreeOutOfRange { degree: usize, dim: usize },
    #[error("BadIdentification: {0}")]
    BadIdentification(String),
    #[error("NotAChainComplex: |d_{degree} d_{next}|_max = {norm:.3e}", next = degree + 1)]
    NotAChainComplex { degree: usize, norm: f64 },
    #[error("Shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Rep(#[from] LieError),
}

/// A word in the generator alphabet, stored freely reduced.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn new(letters: Vec<Letter>) -> Self {
        assert!(
            letters.iter().all(|&(_, e)| e == 1 || e == -1),
            "word exponents must be +-1"
        );
        Word { letters }.reduced()
    }

    pub fn generator(g: usize) -> Self {
        Word {
            letters: vec![(g, 1)],
        }
    }

    /// t^k for k of either sign.
    pub fn power(g: usize, k: i64) -> Self {
        let e: i8 = if k >= 0 { 1 } else { -1 };
        Word {
            letters: vec![(g, e); k.unsigned_abs() as usize],
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|&(g, _)| g).max()
    }

    /// Cancels adjacent inverse pairs until stable.
    fn reduced(self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for l in self.letters {
            match out.last() {
                Some(&(g, e)) if g == l.0 && e == -l.1 => {
                    out.pop();
                }
                _ => out.push(l),
            }
        }
        Word { letters: out }
    }

    pub fn concat(&self, rhs: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&rhs.letters);
        Word { letters }.reduced()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self
                .letters
                .iter()
                .rev()
                .map(|&(g, e)| (g, -e))
                .collect(),
        }
    }

    fn shift_generators(&self, offset: usize) -> Word {
        Word {
            letters: self.letters.iter().map(|&(g, e)| (g + offset, e)).collect(),
        }
    }
}

/// Finite integer combination of words; terms are kept sorted by word
/// with no zero coefficients, so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupRingElement {
    terms: Vec<(i64, Word)>,
}

impl GroupRingElement {
    pub fn zero() -> Self {
        GroupRingElement { terms: Vec::new() }
    }

    pub fn one() -> Self {
        GroupRingElement::term(1, Word::empty())
    }

    pub fn term(coeff: i64, word: Word) -> Self {
        if coeff == 0 {
            return GroupRingElement::zero();
        }
        GroupRingElement {
            terms: vec![(coeff, word)],
        }
    }

    pub fn from_terms(terms: Vec<(i64, Word)>) -> Self {
        let mut map: BTreeMap<Word, i64> = BTreeMap::new();
        for (c, w) in terms {
            *map.entry(w).or_insert(0) += c;
        }
        GroupRingElement {
            terms: map
                .into_iter()
                .filter(|&(_, c)| c != 0)
                .map(|(w, c)| (c, w))
                .collect(),
        }
    }

    pub fn terms(&self) -> &[(i64, Word)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn neg(&self) -> Self {
        GroupRingElement {
            terms: self.terms.iter().map(|(c, w)| (-c, w.clone())).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        GroupRingElement::from_terms(terms)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (c1, w1) in &self.terms {
            for (c2, w2) in &rhs.terms {
                terms.push((c1 * c2, w1.concat(w2)));
            }
        }
        GroupRingElement::from_terms(terms)
    }

    /// u . self . v over the group ring.
    fn sandwich(&self, left: Option<&Word>, right: Option<&Word>) -> Self {
        GroupRingElement {
            terms: self
                .terms
                .iter()
                .map(|(c, w)| {
                    let mut out = w.clone();
                    if let Some(u) = left {
                        out = u.concat(&out);
                    }
                    if let Some(v) = right {
                        out = out.concat(v);
                    }
                    (*c, out)
                })
                .collect(),
        }
        .normalized()
    }

    fn normalized(self) -> Self {
        GroupRingElement::from_terms(self.terms)
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.terms.iter().filter_map(|(_, w)| w.max_generator()).max()
    }

    /// True when the element is a plain integer times the empty word.
    pub fn is_integral(&self) -> bool {
        self.terms.iter().all(|(_, w)| w.is_empty())
    }

    fn shift_generators(&self, offset: usize) -> Self {
        GroupRingElement {
            terms: self
                .terms
                .iter()
                .map(|(c, w)| (*c, w.shift_generators(offset)))
                .collect(),
        }
    }
}

/// Rectangular matrix over the group ring, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<GroupRingElement>,
}

impl GrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        GrMatrix {
            rows,
            cols,
            entries: vec![GroupRingElement::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &GroupRingElement {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: GroupRingElement) {
        self.entries[i * self.cols + j] = v;
    }

}

/// A finite CW complex with group-ring boundary matrices, optional
/// relator words (metadata for representation validation) and named
/// marked subcomplexes used for gluing.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSystem {
    dim: usize,
    alphabet_size: usize,
    cells: Vec<usize>,
    boundaries: Vec<GrMatrix>,
    relators: Vec<Word>,
    marks: BTreeMap<String, Vec<(usize, usize)>>,
}

impl CellSystem {
    pub fn new(
        dim: usize,
        alphabet_size: usize,
        cells: Vec<usize>,
        boundaries: Vec<GrMatrix>,
        relators: Vec<Word>,
        marks: BTreeMap<String, Vec<(usize, usize)>>,
    ) -> Result<Self, CellError> {
        if cells.len() != dim + 1 {
            return Err(CellError::Shape(format!(
                "cell counts: got {} entries for dimension {dim}",
                cells.len()
            )));
        }
        if boundaries.len() != dim {
            return Err(CellError::Shape(format!(
                "boundaries: got {} matrices for dimension {dim}",
                boundaries.len()
            )));
        }
        for p in 1..=dim {
            let b = &boundaries[p - 1];
            if b.rows() != cells[p - 1] || b.cols() != cells[p] {
                return Err(CellError::Shape(format!(
                    "boundary {p} is {}x{}, expected {}x{}",
                    b.rows(),
                    b.cols(),
                    cells[p - 1],
                    cells[p]
                )));
            }
            for e in &b.entries {
                if let Some(g) = e.max_generator() {
                    if g >= alphabet_size {
                        return Err(CellError::Shape(format!(
                            "boundary {p} uses generator {g} outside alphabet of size {alphabet_size}"
                        )));
                    }
                }
            }
        }
        for w in &relators {
            if let Some(g) = w.max_generator() {
                if g >= alphabet_size {
                    return Err(CellError::Shape(format!(
                        "relator uses generator {g} outside alphabet of size {alphabet_size}"
                    )));
                }
            }
        }
        for (name, cells_of_mark) in &marks {
            for &(p, i) in cells_of_mark {
                if p > dim || i >= cells[p] {
                    return Err(CellError::Shape(format!(
                        "mark '{name}' references cell ({p}, {i}) outside the complex"
                    )));
                }
            }
        }
        Ok(CellSystem {
            dim,
            alphabet_size,
            cells,
            boundaries,
            relators,
            marks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// d_p for p in 1..=dim.
    pub fn boundary(&self, p: usize) -> &GrMatrix {
        &self.boundaries[p - 1]
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn marks(&self) -> &BTreeMap<String, Vec<(usize, usize)>> {
        &self.marks
    }

    pub fn mark(&self, name: &str) -> Option<&Vec<(usize, usize)>> {
        self.marks.get(name)
    }

    pub fn add_mark(&mut self, name: &str, cells: Vec<(usize, usize)>) {
        self.marks.insert(name.to_string(), cells);
    }

    pub fn relator_slices(&self) -> Vec<&[Letter]> {
        self.relators.iter().map(|w| w.letters()).collect()
    }
}

/// The twisted complex: dense complex boundary matrices with d x d
/// blocks per cell pair, coordinates ordered cell-major.
#[derive(Debug, Clone)]
pub struct NumericChainComplex {
    d: usize,
    dims: Vec<usize>,
    boundaries: Vec<CMatrix>,
}

impl NumericChainComplex {
    /// Wraps raw boundary matrices; `dims` are the chain-group
    /// dimensions for degrees 0..=n and `boundaries[p-1]` is d_p.
    pub fn from_boundaries(
        d: usize,
        dims: Vec<usize>,
        boundaries: Vec<CMatrix>,
    ) -> Result<Self, CellError> {
        if dims.is_empty() || boundaries.len() + 1 != dims.len() {
            return Err(CellError::Shape(
                "chain complex needs one boundary per positive degree".into(),
            ));
        }
        for (p, b) in boundaries.iter().enumerate() {
            if b.rows() != dims[p] || b.cols() != dims[p + 1] {
                return Err(CellError::Shape(format!(
                    "boundary {} is {}x{}, expected {}x{}",
                    p + 1,
                    b.rows(),
                    b.cols(),
                    dims[p],
                    dims[p + 1]
                )));
            }
            if !b.is_finite() {
                return Err(CellError::Shape(format!(
                    "boundary {} has non-finite entries",
                    p + 1
                )));
            }
        }
        Ok(NumericChainComplex { d, dims, boundaries })
    }

    pub fn coefficient_dim(&self) -> usize {
        self.d
    }

    /// Top degree.
    pub fn n(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim_at(&self, p: usize) -> usize {
        if p < self.dims.len() {
            self.dims[p]
        } else {
            0
        }
    }

    /// d_p: C_p -> C_{p-1}; degenerate degrees give zero-size matrices.
    pub fn boundary(&self, p: usize) -> CMatrix {
        if p == 0 {
            CMatrix::zeros(0, self.dim_at(0))
        } else if p <= self.boundaries.len() {
            self.boundaries[p - 1].clone()
        } else {
            CMatrix::zeros(self.dim_at(p - 1), 0)
        }
    }

    /// Largest entry of any composite d_p d_{p+1}.
    pub fn max_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in 1..self.boundaries.len() {
            let prod = self.boundaries[p - 1].mul(&self.boundaries[p]);
            worst = worst.max(prod.max_abs());
        }
        worst
    }
}

fn twisted_block(
    entry: &GroupRingElement,
    rep: &Representation,
    ad: &AdjointData,
) -> Result<CMatrix, LieError> {
    let mut out = CMatrix::zeros(ad.d, ad.d);
    for (c, w) in entry.terms() {
        let block = adjoint_of_word(rep, ad, w.letters())?;
        out = out.add(&block.scale(Complex64::new(*c as f64, 0.0)));
    }
    Ok(out)
}

fn twist_impl(
    cs: &CellSystem,
    rep: &Representation,
    ad: &AdjointData,
    parallel: bool,
) -> Result<NumericChainComplex, CellError> {
    if rep.alphabet_size() != cs.alphabet_size {
        return Err(CellError::AlphabetMismatch {
            rep: rep.alphabet_size(),
            complex: cs.alphabet_size,
        });
    }
    validate_representation(rep, &cs.relator_slices())?;
    let d = ad.d;
    let mut boundaries = Vec::with_capacity(cs.dim);
    for p in 1..=cs.dim {
        let b = cs.boundary(p);
        let (rows, cols) = (b.rows(), b.cols());
        let column_blocks: Result<Vec<Vec<CMatrix>>, LieError> = {
            let one_column = |j: usize| -> Result<Vec<CMatrix>, LieError> {
                (0..rows).map(|i| twisted_block(b.get(i, j), rep, ad)).collect()
            };
            #[cfg(feature = "parallel")]
            {
                if parallel {
                    (0..cols).into_par_iter().map(one_column).collect()
                } else {
                    (0..cols).map(one_column).collect()
                }
            }
            #[cfg(not(feature = "parallel"))]
            {
                let _ = parallel;
                (0..cols).map(one_column).collect()
            }
        };
        let column_blocks = column_blocks?;
        let mut out = CMatrix::zeros(d * rows, d * cols);
        for (j, col) in column_blocks.iter().enumerate() {
            for (i, block) in col.iter().enumerate() {
                out.set_block(d * i, d * j, block);
            }
        }
        boundaries.push(out);
    }
    let dims = cs.cells.iter().map(|&m| d * m).collect();
    NumericChainComplex::from_boundaries(d, dims, boundaries)
}

/// Twists the complex by Ad of the representation: every group-ring
/// entry becomes its d x d adjoint block. Validates the alphabet and the
/// relators first. Runs block assembly in parallel when the `parallel`
/// feature is enabled.
pub fn twist(
    cs: &CellSystem,
    rep: &Representation,
    ad: &AdjointData,
) -> Result<NumericChainComplex, CellError> {
    twist_impl(cs, rep, ad, true)
}

/// Sequential variant of [`twist`]; output is identical.
pub fn twist_seq(
    cs: &CellSystem,
    rep: &Representation,
    ad: &AdjointData,
) -> Result<NumericChainComplex, CellError> {
    twist_impl(cs, rep, ad, false)
}

/// Per-degree composite norms from `validate_boundary`.
#[derive(Debug, Clone)]
pub struct BoundaryReport {
    pub per_degree: Vec<(usize, f64)>,
    pub max_norm: f64,
}

/// Checks |d_p d_{p+1}|_max <= pivot_eps at every degree.
pub fn validate_boundary(
    cc: &NumericChainComplex,
    tol: Tolerance,
) -> Result<BoundaryReport, CellError> {
    let mut per_degree = Vec::new();
    let mut max_norm = 0.0f64;
    for p in 1..=cc.n() {
        let prod = cc.boundary(p).mul(&cc.boundary(p + 1));
        let norm = prod.max_abs();
        per_degree.push((p, norm));
        max_norm = max_norm.max(norm);
        if norm > tol.pivot_eps {
            return Err(CellError::NotAChainComplex { degree: p, norm });
        }
    }
    Ok(BoundaryReport {
        per_degree,
        max_norm,
    })
}

/// Adds a cancelling pair: a new p-cell e and a new (p+1)-cell f with
/// d(f) = 1*e + attach, where `attach` gives the boundary of f on the
/// old p-cells. The new p-cell's own boundary is forced by the chain
/// axiom: d(e) = -d(attach).
pub fn elementary_expand(
    cs: &CellSystem,
    p: usize,
    attach: &[GroupRingElement],
) -> Result<CellSystem, CellError> {
    if p > cs.dim {
        return Err(CellError::DegreeOutOfRange {
            degree: p,
            dim: cs.dim,
        });
    }
    if attach.len() != cs.cells[p] {
        return Err(CellError::Shape(format!(
            "attach column has {} entries, expected {}",
            attach.len(),
            cs.cells[p]
        )));
    }
    for e in attach {
        if let Some(g) = e.max_generator() {
            if g >= cs.alphabet_size {
                return Err(CellError::Shape(format!(
                    "attach uses generator {g} outside alphabet of size {}",
                    cs.alphabet_size
                )));
            }
        }
    }
    let extends_dim = p == cs.dim;
    let new_dim = if extends_dim { cs.dim + 1 } else { cs.dim };
    let mut cells = cs.cells.clone();
    if extends_dim {
        cells.push(0);
    }
    let eps_index = cells[p];
    cells[p] += 1;
    let phi_index = cells[p + 1];
    cells[p + 1] += 1;

    let mut boundaries = cs.boundaries.clone();
    if extends_dim {
        boundaries.push(GrMatrix::zeros(cs.cells[p], 0));
    }

    // d_p gains a column for e, with d(e) = -d(attach).
    if p >= 1 {
        let old = &boundaries[p - 1];
        let mut grown = GrMatrix::zeros(old.rows(), old.cols() + 1);
        for i in 0..old.rows() {
            for j in 0..old.cols() {
                grown.set(i, j, old.get(i, j).clone());
            }
            // coefficient of the (p-1)-cell i in d(attach):
            // sum over old p-cells j of d_p[i][j] * attach[j], matching
            // the left-to-right entry product of the composite.
            let mut acc = GroupRingElement::zero();
            for (j, a) in attach.iter().enumerate() {
                if !a.is_zero() && !old.get(i, j).is_zero() {
                    acc = acc.add(&old.get(i, j).mul(a));
                }
            }
            grown.set(i, old.cols(), acc.neg());
        }
        boundaries[p - 1] = grown;
    }

    // d_{p+1} gains the e row and the f column.
    {
        let old = &boundaries[p];
        let mut grown = GrMatrix::zeros(old.rows() + 1, old.cols() + 1);
        for i in 0..old.rows() {
            for j in 0..old.cols() {
                grown.set(i, j, old.get(i, j).clone());
            }
        }
        for (i, a) in attach.iter().enumerate() {
            grown.set(i, old.cols(), a.clone());
        }
        grown.set(eps_index, phi_index, GroupRingElement::one());
        boundaries[p] = grown;
    }

    // A (p+2)-boundary, if present, gains a zero row for f.
    if p + 2 <= new_dim {
        let old = &boundaries[p + 1];
        let mut grown = GrMatrix::zeros(old.rows() + 1, old.cols());
        for i in 0..old.rows() {
            for j in 0..old.cols() {
                grown.set(i, j, old.get(i, j).clone());
            }
        }
        boundaries[p + 1] = grown;
    }

    CellSystem::new(
        new_dim,
        cs.alphabet_size,
        cells,
        boundaries,
        cs.relators.clone(),
        cs.marks.clone(),
    )
}

/// Replaces the chosen lift of cell (p, j) by the deck transform `u`:
/// column j of d_p is right-multiplied by u and row j of d_{p+1} is
/// left-multiplied by u^{-1}. The twisted complex changes by a
/// unimodular block change of basis, so torsion is unaffected.
pub fn relabel_lift(cs: &CellSystem, p: usize, j: usize, u: &Word) -> Result<CellSystem, CellError> {
    if p > cs.dim {
        return Err(CellError::DegreeOutOfRange {
            degree: p,
            dim: cs.dim,
        });
    }
    if j >= cs.cells[p] {
        return Err(CellError::Shape(format!(
            "cell ({p}, {j}) outside the complex"
        )));
    }
    if let Some(g) = u.max_generator() {
        if g >= cs.alphabet_size {
            return Err(CellError::Shape(format!(
                "relabel word uses generator {g} outside alphabet of size {}",
                cs.alphabet_size
            )));
        }
    }
    let u_inv = u.inverse();
    let mut boundaries = cs.boundaries.clone();
    if p >= 1 {
        let old = &boundaries[p - 1];
        let mut m = old.clone();
        for i in 0..old.rows() {
            m.set(i, j, old.get(i, j).sandwich(None, Some(u)));
        }
        boundaries[p - 1] = m;
    }
    if p < cs.dim {
        let old = &boundaries[p];
        let mut m = old.clone();
        for k in 0..old.cols() {
            m.set(j, k, old.get(j, k).sandwich(Some(&u_inv), None));
        }
        boundaries[p] = m;
    }
    CellSystem::new(
        cs.dim,
        cs.alphabet_size,
        cs.cells.clone(),
        boundaries,
        cs.relators.clone(),
        cs.marks.clone(),
    )
}

/// Per-degree cell index maps realizing Y -> X_nu -> X.
#[derive(Debug, Clone)]
pub struct InclusionMaps {
    pub y_in_x1: Vec<Vec<usize>>,
    pub y_in_x2: Vec<Vec<usize>>,
    pub x1_in_x: Vec<Vec<usize>>,
    pub x2_in_x: Vec<Vec<usize>>,
}

/// The shared subcomplex extracted as its own CellSystem plus the
/// inclusion index maps.
#[derive(Debug, Clone)]
pub struct UnionData {
    pub intersection: CellSystem,
    pub maps: InclusionMaps,
}

/// Glues two complexes along marked subcomplexes, pairing cells by
/// their position in the mark lists. The identified subcomplex must be
/// closed under boundaries with identity labels and matching integer
/// coefficients on both sides; the alphabets stay disjoint, so the
/// fundamental group of the result is the free product.
pub fn union_along(
    cs1: &CellSystem,
    cs2: &CellSystem,
    mark1: &str,
    mark2: &str,
) -> Result<(CellSystem, UnionData), CellError> {
    let m1 = cs1
        .mark(mark1)
        .ok_or_else(|| CellError::BadIdentification(format!("no mark '{mark1}' on first complex")))?;
    let m2 = cs2
        .mark(mark2)
        .ok_or_else(|| CellError::BadIdentification(format!("no mark '{mark2}' on second complex")))?;
    if m1.len() != m2.len() {
        return Err(CellError::BadIdentification(format!(
            "marks pair {} cells against {}",
            m1.len(),
            m2.len()
        )));
    }
    for (&(p1, _), &(p2, _)) in m1.iter().zip(m2.iter()) {
        if p1 != p2 {
            return Err(CellError::BadIdentification(format!(
                "paired cells have dimensions {p1} and {p2}"
            )));
        }
    }
    // Bijectivity within each mark.
    for (m, side) in [(m1, "first"), (m2, "second")] {
        let mut seen = std::collections::BTreeSet::new();
        for &cell in m {
            if !seen.insert(cell) {
                return Err(CellError::BadIdentification(format!(
                    "mark on {side} complex repeats cell {cell:?}"
                )));
            }
        }
    }
    let dim = cs1.dim.max(cs2.dim);
    let max_mark_dim = m1.iter().map(|&(p, _)| p).max();
    // Per-degree: identified cell index -> position in the pairing.
    let mut pos1: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); dim + 1];
    let mut pos2: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); dim + 1];
    for (k, (&(p, i1), &(_, i2))) in m1.iter().zip(m2.iter()).enumerate() {
        pos1[p].insert(i1, k);
        pos2[p].insert(i2, k);
    }

    // Boundary entries of identified cells must be trivial words on
    // identified cells, identical on both sides.
    let check_side = |cs: &CellSystem,
                      pos: &[BTreeMap<usize, usize>],
                      side: &str|
     -> Result<(), CellError> {
        for p in 1..=cs.dim {
            let b = cs.boundary(p);
            for &j in pos[p].keys() {
                for i in 0..b.rows() {
                    let entry = b.get(i, j);
                    if entry.is_zero() {
                        continue;
                    }
                    if !pos[p - 1].contains_key(&i) {
                        return Err(CellError::BadIdentification(format!(
                            "{side} complex: identified cell ({p}, {j}) has boundary outside the mark"
                        )));
                    }
                    if !entry.is_integral() {
                        return Err(CellError::BadIdentification(format!(
                            "{side} complex: identified cell ({p}, {j}) carries non-trivial labels"
                        )));
                    }
                }
            }
        }
        Ok(())
    };
    check_side(cs1, &pos1, "first")?;
    check_side(cs2, &pos2, "second")?;

    // Matching boundary structure across the pairing.
    for (k, (&(p, i1), &(_, i2))) in m1.iter().zip(m2.iter()).enumerate() {
        if p == 0 {
            continue;
        }
        let b1 = cs1.boundary(p);
        let b2 = cs2.boundary(p);
        for (&r1, &kr) in &pos1[p - 1] {
            // Row of the same paired (p-1)-cell on the other side.
            let (&r2, _) = pos2[p - 1]
                .iter()
                .find(|&(_, &kk)| kk == kr)
                .expect("positions cover the pairing");
            if b1.get(r1, i1) != b2.get(r2, i2) {
                return Err(CellError::BadIdentification(format!(
                    "pair {k}: boundary coefficients differ between the two marks"
                )));
            }
        }
    }

    // Assemble X. Cells of X in degree p: all of cs1, then the
    // unidentified cells of cs2 in their original order.
    let cells1 = |p: usize| if p <= cs1.dim { cs1.cells[p] } else { 0 };
    let cells2 = |p: usize| if p <= cs2.dim { cs2.cells[p] } else { 0 };
    let mut x1_in_x: Vec<Vec<usize>> = Vec::with_capacity(dim + 1);
    let mut x2_in_x: Vec<Vec<usize>> = Vec::with_capacity(dim + 1);
    let mut cells: Vec<usize> = Vec::with_capacity(dim + 1);
    for p in 0..=dim {
        let map1: Vec<usize> = (0..cells1(p)).collect();
        let mut map2: Vec<usize> = Vec::with_capacity(cells2(p));
        let mut next = cells1(p);
        for i in 0..cells2(p) {
            if let Some(&k) = pos2[p].get(&i) {
                // Identified: lands on the cs1 partner.
                let (&i1, _) = pos1[p]
                    .iter()
                    .find(|&(_, &kk)| kk == k)
                    .expect("positions cover the pairing");
                map2.push(i1);
            } else {
                map2.push(next);
                next += 1;
            }
        }
        cells.push(next);
        x1_in_x.push(map1);
        x2_in_x.push(map2);
    }

    let offset = cs1.alphabet_size;
    let alphabet_size = cs1.alphabet_size + cs2.alphabet_size;
    let mut boundaries = Vec::with_capacity(dim);
    for p in 1..=dim {
        let mut b = GrMatrix::zeros(cells[p - 1], cells[p]);
        if p <= cs1.dim {
            let b1 = cs1.boundary(p);
            for j in 0..b1.cols() {
                for i in 0..b1.rows() {
                    if !b1.get(i, j).is_zero() {
                        b.set(x1_in_x[p - 1][i], x1_in_x[p][j], b1.get(i, j).clone());
                    }
                }
            }
        }
        if p <= cs2.dim {
            let b2 = cs2.boundary(p);
            for j in 0..b2.cols() {
                if pos2[p].contains_key(&j) {
                    continue; // identified columns were written from cs1
                }
                for i in 0..b2.rows() {
                    if !b2.get(i, j).is_zero() {
                        b.set(
                            x2_in_x[p - 1][i],
                            x2_in_x[p][j],
                            b2.get(i, j).shift_generators(offset),
                        );
                    }
                }
            }
        }
        boundaries.push(b);
    }

    let mut relators = cs1.relators.clone();
    relators.extend(cs2.relators.iter().map(|w| w.shift_generators(offset)));

    // Marks: cs1 marks carry over; cs2 marks are remapped, renamed on
    // collision unless they land on the same cells.
    let mut marks = cs1.marks.clone();
    for (name, cells_of_mark) in &cs2.marks {
        let remapped: Vec<(usize, usize)> = cells_of_mark
            .iter()
            .map(|&(p, i)| (p, x2_in_x[p][i]))
            .collect();
        match marks.get(name) {
            Some(existing) if *existing == remapped => {}
            Some(_) => {
                marks.insert(format!("{name}_2"), remapped);
            }
            None => {
                marks.insert(name.clone(), remapped);
            }
        }
    }

    let x = CellSystem::new(dim, alphabet_size, cells, boundaries, relators, marks)?;

    // Extract Y from the pairing, cells ordered by mark position.
    let ydim = max_mark_dim.unwrap_or(0);
    let mut y_cells = vec![0usize; ydim + 1];
    let mut y_index_of_pos: Vec<usize> = vec![0; m1.len()];
    let mut y_in_x1: Vec<Vec<usize>> = vec![Vec::new(); ydim + 1];
    let mut y_in_x2: Vec<Vec<usize>> = vec![Vec::new(); ydim + 1];
    for (k, (&(p, i1), &(_, i2))) in m1.iter().zip(m2.iter()).enumerate() {
        y_index_of_pos[k] = y_cells[p];
        y_cells[p] += 1;
        y_in_x1[p].push(i1);
        y_in_x2[p].push(i2);
    }
    let mut y_boundaries = Vec::with_capacity(ydim);
    for p in 1..=ydim {
        let mut b = GrMatrix::zeros(y_cells[p - 1], y_cells[p]);
        let b1 = cs1.boundary(p);
        for (k, &(pp, i1)) in m1.iter().enumerate() {
            if pp != p {
                continue;
            }
            for (&r1, &kr) in &pos1[p - 1] {
                let entry = b1.get(r1, i1);
                if !entry.is_zero() {
                    b.set(y_index_of_pos[kr], y_index_of_pos[k], entry.clone());
                }
            }
        }
        y_boundaries.push(b);
    }
    let mut y_marks = BTreeMap::new();
    let y_all: Vec<(usize, usize)> = {
        let mut counters = vec![0usize; ydim + 1];
        m1.iter()
            .map(|&(p, _)| {
                let idx = counters[p];
                counters[p] += 1;
                (p, idx)
            })
            .collect()
    };
    y_marks.insert(mark1.to_string(), y_all);
    let intersection = CellSystem::new(ydim, 0, y_cells, y_boundaries, Vec::new(), y_marks)?;

    Ok((
        x,
        UnionData {
            intersection,
            maps: InclusionMaps {
                y_in_x1,
                y_in_x2,
                x1_in_x,
                x2_in_x,
            },
        },
    ))
}

/// Pushes a chain vector through a per-degree cell index map, block by
/// block of size d.
pub fn push_chain(
    v: &[Complex64],
    cell_map: &[usize],
    target_cells: usize,
    d: usize,
) -> Vec<Complex64> {
    assert_eq!(v.len(), cell_map.len() * d, "push_chain shape");
    let mut out = vec![Complex64::new(0.0, 0.0); target_cells * d];
    for (c, &tc) in cell_map.iter().enumerate() {
        for r in 0..d {
            out[tc * d + r] += v[c * d + r];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Tolerance;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn point() -> CellSystem {
        CellSystem::new(0, 0, vec![1], vec![], vec![], BTreeMap::new()).unwrap()
    }

    fn circle() -> CellSystem {
        // One vertex, one loop e with d(e) = (t - 1) v.
        let mut b1 = GrMatrix::zeros(1, 1);
        b1.set(
            0,
            0,
            GroupRingElement::from_terms(vec![(1, Word::generator(0)), (-1, Word::empty())]),
        );
        CellSystem::new(1, 1, vec![1, 1], vec![b1], vec![], BTreeMap::new()).unwrap()
    }

    fn generic_rep() -> Representation {
        // [[2,1],[1,1]] has det 1 and Ad - I invertible.
        Representation::new(
            2,
            vec![CMatrix::from_real_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]])],
            Tolerance::default(),
        )
        .unwrap()
    }

    #[test]
    fn word_reduction_and_inverse() {
        let w = Word::new(vec![(0, 1), (1, 1), (1, -1), (0, -1), (0, 1)]);
        assert_eq!(w, Word::generator(0));
        let u = Word::new(vec![(0, 1), (1, -1)]);
        assert!(u.concat(&u.inverse()).is_empty());
    }

    #[test]
    fn group_ring_arithmetic() {
        let t = GroupRingElement::term(1, Word::generator(0));
        let one = GroupRingElement::one();
        let tm1 = t.add(&one.neg());
        // (t - 1)(t + 1) = t^2 - 1.
        let tp1 = t.add(&one);
        let prod = tm1.mul(&tp1);
        let expected = GroupRingElement::from_terms(vec![
            (1, Word::new(vec![(0, 1), (0, 1)])),
            (-1, Word::empty()),
        ]);
        assert_eq!(prod, expected);
        assert!(tm1.add(&tm1.neg()).is_zero());
    }

    #[test]
    fn twist_point_and_circle() {
        let rep = generic_rep();
        let ad = AdjointData::new(&rep).unwrap();
        // Point: C_0 = C^d, no boundary maps.
        let rep_empty = Representation::new(2, vec![], Tolerance::default()).unwrap();
        let ad_empty = AdjointData::new(&rep_empty).unwrap();
        let cc = twist(&point(), &rep_empty, &ad_empty).unwrap();
        assert_eq!(cc.dims(), &[3]);

        // Circle: d_1 = Ad_A - I.
        let cc = twist(&circle(), &rep, &ad).unwrap();
        let ad_a = adjoint_of_word(&rep, &ad, &[(0, 1)]).unwrap();
        let expected = ad_a.sub(&CMatrix::identity(3));
        assert!(cc.boundary(1).sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn twist_rejects_alphabet_mismatch() {
        let rep = Representation::new(
            2,
            vec![CMatrix::identity(2), CMatrix::identity(2)],
            Tolerance::default(),
        )
        .unwrap();
        let ad = AdjointData::new(&rep).unwrap();
        assert!(matches!(
            twist(&circle(), &rep, &ad),
            Err(CellError::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn twist_parallel_matches_sequential() {
        let rep = generic_rep();
        let ad = AdjointData::new(&rep).unwrap();
        let cs = elementary_expand(&circle(), 1, &[GroupRingElement::zero()]).unwrap();
        let a = twist(&cs, &rep, &ad).unwrap();
        let b = twist_seq(&cs, &rep, &ad).unwrap();
        for p in 1..=cs.dim() {
            assert!(a.boundary(p).sub(&b.boundary(p)).max_abs() == 0.0);
        }
    }

    #[test]
    fn validate_boundary_detects_corruption() {
        let rep = generic_rep();
        let ad = AdjointData::new(&rep).unwrap();
        let tol = Tolerance::default();
        let cc = twist(&circle(), &rep, &ad).unwrap();
        assert!(validate_boundary(&cc, tol).is_ok()); // single degree, vacuous

        // A fake two-degree complex with d_1 d_2 != 0.
        let ad_a = adjoint_of_word(&rep, &ad, &[(0, 1)]).unwrap();
        let d1 = ad_a.sub(&CMatrix::identity(3));
        let d2 = ad_a.add(&CMatrix::identity(3));
        let bad = NumericChainComplex::from_boundaries(3, vec![3, 3, 3], vec![d1, d2]).unwrap();
        assert!(matches!(
            validate_boundary(&bad, tol),
            Err(CellError::NotAChainComplex { degree: 1, .. })
        ));
    }

    #[test]
    fn expand_point_gives_cancelling_pair() {
        let cs = elementary_expand(&point(), 0, &[GroupRingElement::zero()]).unwrap();
        assert_eq!(cs.cells(), &[2, 1]);
        // d of the new 1-cell is 1 * (empty word) on the new 0-cell.
        assert_eq!(cs.boundary(1).get(1, 0), &GroupRingElement::one());
        assert!(cs.boundary(1).get(0, 0).is_zero());
    }

    #[test]
    fn expand_keeps_chain_axiom_with_word_attach() {
        let rep = generic_rep();
        let ad = AdjointData::new(&rep).unwrap();
        let tol = Tolerance::default();
        // Expand the circle at degree 1 with a wordy attach column.
        let attach = vec![GroupRingElement::from_terms(vec![
            (2, Word::generator(0)),
            (-1, Word::new(vec![(0, -1)])),
        ])];
        let cs = elementary_expand(&circle(), 1, &attach).unwrap();
        assert_eq!(cs.dim(), 2);
        assert_eq!(cs.cells(), &[1, 2, 1]);
        let cc = twist(&cs, &rep, &ad).unwrap();
        assert!(validate_boundary(&cc, tol).is_ok());
        // Expanding twice in disjoint degrees commutes.
        let a = elementary_expand(&elementary_expand(&circle(), 0, &[GroupRingElement::zero()]).unwrap(), 1, &[GroupRingElement::zero(), GroupRingElement::zero()]);
        assert!(a.is_ok());
    }

    #[test]
    fn expand_rejects_bad_degree() {
        assert!(matches!(
            elementary_expand(&point(), 3, &[]),
            Err(CellError::DegreeOutOfRange { .. })
        ));
    }

    #[test]
    fn relabel_lift_preserves_chain_axiom_and_blocks() {
        let rep = generic_rep();
        let ad = AdjointData::new(&rep).unwrap();
        let attach = vec![GroupRingElement::term(1, Word::generator(0))];
        let cs = elementary_expand(&circle(), 1, &attach).unwrap();
        let relabeled = relabel_lift(&cs, 1, 0, &Word::generator(0)).unwrap();
        let cc = twist(&relabeled, &rep, &ad).unwrap();
        assert!(validate_boundary(&cc, Tolerance::default()).is_ok());
    }

    #[test]
    fn union_of_circles_along_points_is_wedge() {
        let mut c1 = circle();
        c1.add_mark("point", vec![(0, 0)]);
        let mut c2 = circle();
        c2.add_mark("point", vec![(0, 0)]);
        let (x, data) = union_along(&c1, &c2, "point", "point").unwrap();
        assert_eq!(x.alphabet_size(), 2);
        assert_eq!(x.cells(), &[1, 2]);
        assert_eq!(data.intersection.cells(), &[1]);
        // Second circle's loop label was shifted to generator 1.
        assert_eq!(
            x.boundary(1).get(0, 1),
            &GroupRingElement::from_terms(vec![(1, Word::generator(1)), (-1, Word::empty())])
        );
    }

    #[test]
    fn union_rejects_dimension_mismatch() {
        let mut c1 = circle();
        c1.add_mark("m", vec![(0, 0)]);
        let mut c2 = circle();
        c2.add_mark("m", vec![(1, 0)]);
        assert!(matches!(
            union_along(&c1, &c2, "m", "m"),
            Err(CellError::BadIdentification(_))
        ));
    }

    #[test]
    fn union_rejects_nontrivial_labels() {
        // Mark the loop of the circle: its boundary entry carries t.
        let mut c1 = circle();
        c1.add_mark("m", vec![(0, 0), (1, 0)]);
        let mut c2 = circle();
        c2.add_mark("m", vec![(0, 0), (1, 0)]);
        assert!(matches!(
            union_along(&c1, &c2, "m", "m"),
            Err(CellError::BadIdentification(_))
        ));
    }

    #[test]
    fn push_chain_places_blocks() {
        let v = vec![c(1.0, 0.0), c(2.0, 0.0)];
        let out = push_chain(&v, &[2], 3, 2);
        assert_eq!(out.len(), 6);
        assert!(out[4] == c(1.0, 0.0) && out[5] == c(2.0, 0.0));
    }
}
