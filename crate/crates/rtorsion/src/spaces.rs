//! Built-in cell systems: point, circle, disk, spheres, solid torus
//! with a marked boundary disk, closed lens spaces, puncturing, disk
//! sum, and connected sum.
//!
//! The disk is the minimal CW model (one cell per dimension 0..2 with
//! d(c) = 0 and d(f) = c); the solid torus is its spine circle extended
//! by two elementary expansions so that it carries a marked disk to
//! glue along. Lens spaces use the standard one-cell-per-dimension
//! model with d_1 = t - 1, d_2 = 1 + t + ... + t^{p-1} and
//! d_3 = t^{qbar} - 1 where qbar inverts q mod p. Orientation and sign
//! conventions are fixed here once; the sign ambiguity of torsion
//! absorbs global flips.

use crate::cellsys::{
    elementary_expand, union_along, CellError, CellSystem, GrMatrix, GroupRingElement, UnionData,
    Word,
};
use crate::liealg::AdjointData;
use crate::linalg::CMatrix;
use crate::torsion::HomologyBasisSet;
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("UnknownRecipe: {0}")]
    UnknownRecipe(String),
    #[error("BadParams: {0}")]
    BadParams(String),
    #[error("NoThreeCell: the complex has no 3-cell to remove")]
    NoThreeCell,
    #[error("NoMarkedDisk: no mark '{0}' on the complex")]
    NoMarkedDisk(String),
    #[error(transparent)]
    Cell(#[from] CellError),
}

/// A named constructor with integer parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpaceRecipe {
    Point,
    Circle,
    Disk,
    Sphere2,
    Sphere3,
    SolidTorus,
    Lens { p: u64, q: u64 },
}

impl SpaceRecipe {
    pub fn parse(name: &str, params: &[i64]) -> Result<Self, SpaceError> {
        match (name, params) {
            ("point", []) => Ok(SpaceRecipe::Point),
            ("circle", []) => Ok(SpaceRecipe::Circle),
            ("disk", []) => Ok(SpaceRecipe::Disk),
            ("sphere2", []) => Ok(SpaceRecipe::Sphere2),
            ("sphere3", []) => Ok(SpaceRecipe::Sphere3),
            ("solid_torus", []) => Ok(SpaceRecipe::SolidTorus),
            ("lens", [p, q]) => {
                if *p < 2 || *q < 1 {
                    return Err(SpaceError::BadParams(format!("lens({p}, {q})")));
                }
                Ok(SpaceRecipe::Lens {
                    p: *p as u64,
                    q: *q as u64,
                })
            }
            ("lens", _) => Err(SpaceError::BadParams(
                "lens expects two parameters p q".into(),
            )),
            (other, _) => Err(SpaceError::UnknownRecipe(other.to_string())),
        }
    }
}

impl std::fmt::Display for SpaceRecipe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpaceRecipe::Point => write!(f, "point"),
            SpaceRecipe::Circle => write!(f, "circle"),
            SpaceRecipe::Disk => write!(f, "disk"),
            SpaceRecipe::Sphere2 => write!(f, "sphere2"),
            SpaceRecipe::Sphere3 => write!(f, "sphere3"),
            SpaceRecipe::SolidTorus => write!(f, "solid_torus"),
            SpaceRecipe::Lens { p, q } => write!(f, "lens({p},{q})"),
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// q^{-1} mod p by the extended Euclidean algorithm.
fn mod_inverse(q: u64, p: u64) -> Option<u64> {
    let (mut r0, mut r1) = (p as i64, (q % p) as i64);
    let (mut s0, mut s1) = (0i64, 1i64);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (s0, s1) = (s1, s0 - quot * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(p as i64) as u64)
}

fn point() -> CellSystem {
    let mut marks = BTreeMap::new();
    marks.insert("point".to_string(), vec![(0, 0)]);
    CellSystem::new(0, 0, vec![1], vec![], vec![], marks).expect("static model")
}

fn circle() -> CellSystem {
    let mut b1 = GrMatrix::zeros(1, 1);
    b1.set(
        0,
        0,
        GroupRingElement::from_terms(vec![(1, Word::generator(0)), (-1, Word::empty())]),
    );
    let mut marks = BTreeMap::new();
    marks.insert("point".to_string(), vec![(0, 0)]);
    CellSystem::new(1, 1, vec![1, 1], vec![b1], vec![], marks).expect("static model")
}

fn disk() -> CellSystem {
    // v, a trivially labelled loop c with d(c) = 0, and f with d(f) = c.
    let b1 = GrMatrix::zeros(1, 1);
    let mut b2 = GrMatrix::zeros(1, 1);
    b2.set(0, 0, GroupRingElement::one());
    let mut marks = BTreeMap::new();
    marks.insert("disk".to_string(), vec![(0, 0), (1, 0), (2, 0)]);
    marks.insert("point".to_string(), vec![(0, 0)]);
    CellSystem::new(2, 0, vec![1, 1, 1], vec![b1, b2], vec![], marks).expect("static model")
}

fn sphere2() -> CellSystem {
    // Two cells in each dimension 0..2, trivial alphabet.
    let mut b1 = GrMatrix::zeros(2, 2);
    for j in 0..2 {
        b1.set(0, j, GroupRingElement::term(-1, Word::empty()));
        b1.set(1, j, GroupRingElement::one());
    }
    let mut b2 = GrMatrix::zeros(2, 2);
    for j in 0..2 {
        b2.set(0, j, GroupRingElement::one());
        b2.set(1, j, GroupRingElement::term(-1, Word::empty()));
    }
    CellSystem::new(2, 0, vec![2, 2, 2], vec![b1, b2], vec![], BTreeMap::new())
        .expect("static model")
}

fn sphere3() -> CellSystem {
    let s2 = sphere2();
    let mut b3 = GrMatrix::zeros(2, 2);
    for j in 0..2 {
        b3.set(0, j, GroupRingElement::one());
        b3.set(1, j, GroupRingElement::term(-1, Word::empty()));
    }
    let mut boundaries = vec![s2.boundary(1).clone(), s2.boundary(2).clone()];
    boundaries.push(b3);
    CellSystem::new(3, 0, vec![2, 2, 2, 2], boundaries, vec![], BTreeMap::new())
        .expect("static model")
}

/// Appends a marked disk: an arc pair hanging the disk basepoint off
/// 0-cell 0, then a trivially labelled loop and its filling 2-cell.
/// Two elementary expansions; homology is untouched.
fn append_marked_disk(cs: &CellSystem) -> Result<CellSystem, CellError> {
    let attach_arc: Vec<GroupRingElement> = (0..cs.cells()[0])
        .map(|i| {
            if i == 0 {
                GroupRingElement::term(-1, Word::empty())
            } else {
                GroupRingElement::zero()
            }
        })
        .collect();
    let with_arc = elementary_expand(cs, 0, &attach_arc)?;
    let attach_loop = vec![GroupRingElement::zero(); with_arc.cells()[1]];
    let mut out = elementary_expand(&with_arc, 1, &attach_loop)?;
    let w = cs.cells()[0]; // the fresh basepoint
    let c1 = with_arc.cells()[1]; // the fresh loop
    let f = if out.dim() >= 2 { out.cells()[2] - 1 } else { 0 };
    out.add_mark("disk", vec![(0, w), (1, c1), (2, f)]);
    Ok(out)
}

fn solid_torus() -> CellSystem {
    append_marked_disk(&circle()).expect("static model")
}

fn lens(p: u64, q: u64) -> Result<CellSystem, SpaceError> {
    if p < 2 || gcd(p, q % p) != 1 {
        return Err(SpaceError::BadParams(format!(
            "lens parameters need p >= 2 and gcd(p, q) = 1, got ({p}, {q})"
        )));
    }
    let qbar = mod_inverse(q, p).ok_or_else(|| {
        SpaceError::BadParams(format!("q = {q} is not invertible mod p = {p}"))
    })?;
    let t_minus_1 =
        GroupRingElement::from_terms(vec![(1, Word::generator(0)), (-1, Word::empty())]);
    let mut b1 = GrMatrix::zeros(1, 1);
    b1.set(0, 0, t_minus_1.clone());
    let mut b2 = GrMatrix::zeros(1, 1);
    b2.set(
        0,
        0,
        GroupRingElement::from_terms((0..p).map(|k| (1, Word::power(0, k as i64))).collect()),
    );
    let mut b3 = GrMatrix::zeros(1, 1);
    b3.set(
        0,
        0,
        GroupRingElement::from_terms(vec![
            (1, Word::power(0, qbar as i64)),
            (-1, Word::empty()),
        ]),
    );
    let relator = Word::power(0, p as i64);
    let mut marks = BTreeMap::new();
    marks.insert("point".to_string(), vec![(0, 0)]);
    Ok(CellSystem::new(
        3,
        1,
        vec![1, 1, 1, 1],
        vec![b1, b2, b3],
        vec![relator],
        marks,
    )?)
}

pub fn make_space(recipe: &SpaceRecipe) -> Result<CellSystem, SpaceError> {
    match recipe {
        SpaceRecipe::Point => Ok(point()),
        SpaceRecipe::Circle => Ok(circle()),
        SpaceRecipe::Disk => Ok(disk()),
        SpaceRecipe::Sphere2 => Ok(sphere2()),
        SpaceRecipe::Sphere3 => Ok(sphere3()),
        SpaceRecipe::SolidTorus => Ok(solid_torus()),
        SpaceRecipe::Lens { p, q } => lens(*p, *q),
    }
}

/// Removes the last 3-cell and appends marked-disk cells so the result
/// can be disk-summed.
pub fn puncture(n: &CellSystem) -> Result<CellSystem, SpaceError> {
    if n.dim() != 3 || n.cells()[3] == 0 {
        return Err(SpaceError::NoThreeCell);
    }
    let mut cells = n.cells().to_vec();
    cells[3] -= 1;
    let old_b3 = n.boundary(3);
    let mut b3 = GrMatrix::zeros(old_b3.rows(), old_b3.cols() - 1);
    for i in 0..old_b3.rows() {
        for j in 0..old_b3.cols() - 1 {
            b3.set(i, j, old_b3.get(i, j).clone());
        }
    }
    let boundaries = vec![n.boundary(1).clone(), n.boundary(2).clone(), b3];
    let punctured = CellSystem::new(
        3,
        n.alphabet_size(),
        cells,
        boundaries,
        n.relators().to_vec(),
        n.marks().clone(),
    )?;
    Ok(append_marked_disk(&punctured)?)
}

/// Glues two complexes along their marked disks. The alphabets stay
/// disjoint, so the fundamental group of the result is the free
/// product.
pub fn disk_sum(
    m: &CellSystem,
    nstar: &CellSystem,
) -> Result<(CellSystem, UnionData), SpaceError> {
    if m.mark("disk").is_none() {
        return Err(SpaceError::NoMarkedDisk("disk".into()));
    }
    if nstar.mark("disk").is_none() {
        return Err(SpaceError::NoMarkedDisk("disk".into()));
    }
    Ok(union_along(m, nstar, "disk", "disk")?)
}

/// The connected sum M # N realized as the disk sum of M with the
/// punctured N; the representation of the result restricts to the two
/// pieces along the disjoint alphabets.
pub fn connected_sum(
    m: &CellSystem,
    n: &CellSystem,
) -> Result<(CellSystem, UnionData), SpaceError> {
    let nstar = puncture(n)?;
    disk_sum(m, &nstar)
}

/// The degree-0 homology basis a marked disk inherits from the point:
/// the d coordinate vectors supported on the disk's basepoint 0-cell.
/// With this basis the disk's torsion is 1.
pub fn disk_standard_basis(
    cs: &CellSystem,
    mark: &str,
    ad: &AdjointData,
) -> Result<HomologyBasisSet, SpaceError> {
    let cells = cs
        .mark(mark)
        .ok_or_else(|| SpaceError::NoMarkedDisk(mark.to_string()))?;
    let basepoint = cells
        .iter()
        .find(|&&(p, _)| p == 0)
        .map(|&(_, i)| i)
        .ok_or_else(|| SpaceError::BadParams(format!("mark '{mark}' has no 0-cell")))?;
    let d = ad.d;
    let rows = d * cs.cells()[0];
    let mut h0 = CMatrix::zeros(rows, d);
    for k in 0..d {
        h0[(basepoint * d + k, k)] = Complex64::new(1.0, 0.0);
    }
    let mut bases = vec![h0];
    for p in 1..=cs.dim() {
        bases.push(CMatrix::zeros(d * cs.cells()[p], 0));
    }
    Ok(HomologyBasisSet::new(bases))
}
