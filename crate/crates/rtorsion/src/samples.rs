//! Seeded random generators for the property suites: SL(n,C) matrices,
//! words, valid cell systems, exact complexes, and homology bases.
//!
//! Random cell systems are grown from the built-in models by elementary
//! expansions with random attach columns, basepoint wedges, and lift
//! relabelings; each of those moves preserves the chain axiom, so every
//! generated system is valid by construction and relator-free (random
//! SL(2) images are then always admissible).

use crate::cellsys::{
    elementary_expand, relabel_lift, union_along, CellSystem, GroupRingElement, NumericChainComplex,
    Word,
};
use crate::liealg::{Letter, Representation};
use crate::linalg::{det, image_basis, CMatrix, Tolerance};
use crate::spaces::{make_space, SpaceRecipe};
use crate::torsion::{homology_basis, HomologyBasisSet};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic per-case stream: one master seed, one stream per case.
pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(case.wrapping_add(1));
    r
}

pub fn random_complex_entry<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_complex_entry(rng))
}

/// Random invertible matrix with a determinant bounded away from zero.
pub fn random_invertible<R: Rng>(k: usize, rng: &mut R) -> CMatrix {
    loop {
        let m = random_matrix(k, k, rng);
        if det(&m).map(|d| d.norm() > 0.05).unwrap_or(false) {
            return m;
        }
    }
}

/// Random element of SL(n,C): unit-disk entries rescaled by a principal
/// n-th root of the determinant. The norm bound keeps word products
/// well-conditioned for the inverse-based adjoint evaluation.
pub fn random_sl<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    loop {
        let m = random_matrix(n, n, rng);
        let d = det(&m).expect("square");
        if d.norm() < 0.2 {
            continue;
        }
        let root = d.powf(1.0 / n as f64);
        let out = m.scale(Complex64::new(1.0, 0.0) / root);
        if out.max_abs() < 3.0 {
            return out;
        }
    }
}

pub fn random_representation<R: Rng>(n: usize, alphabet: usize, rng: &mut R) -> Representation {
    let images = (0..alphabet).map(|_| random_sl(n, rng)).collect();
    Representation::new(n, images, Tolerance::default()).expect("shapes are valid")
}

pub fn random_word_letters<R: Rng>(alphabet: usize, max_len: usize, rng: &mut R) -> Vec<Letter> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            (
                rng.gen_range(0..alphabet),
                if rng.gen_bool(0.5) { 1 } else { -1i8 },
            )
        })
        .collect()
}

pub fn random_word<R: Rng>(alphabet: usize, max_len: usize, rng: &mut R) -> Word {
    Word::new(random_word_letters(alphabet, max_len, rng))
}

fn random_group_ring_element<R: Rng>(alphabet: usize, rng: &mut R) -> GroupRingElement {
    let terms = rng.gen_range(0..=2);
    GroupRingElement::from_terms(
        (0..terms)
            .map(|_| {
                let coeff = *[-2i64, -1, 1, 2].get(rng.gen_range(0..4)).unwrap();
                (coeff, random_word(alphabet.max(1), 3, rng))
            })
            .collect(),
    )
}

/// A random valid cell system: a wedge of circles grown by random
/// elementary expansions and occasional lift relabelings. Dimension at
/// most 3, at most `max_cells` cells per dimension, relator-free.
pub fn random_cellsystem<R: Rng>(max_cells: usize, rng: &mut R) -> CellSystem {
    let letters = rng.gen_range(1..=2usize);
    let mut cs = make_space(&SpaceRecipe::Circle).expect("builtin");
    for _ in 1..letters {
        let mut other = make_space(&SpaceRecipe::Circle).expect("builtin");
        other.add_mark("point", vec![(0, 0)]);
        let (wedge, _) = union_along(&cs, &other, "point", "point").expect("point gluing");
        cs = wedge;
    }
    let expansions = rng.gen_range(0..=3usize);
    for _ in 0..expansions {
        let p = rng.gen_range(0..=cs.dim().min(2));
        if cs.cells()[p] + 1 > max_cells || cs.cells().get(p + 1).copied().unwrap_or(0) + 1 > max_cells
        {
            continue;
        }
        let attach: Vec<GroupRingElement> = (0..cs.cells()[p])
            .map(|_| random_group_ring_element(cs.alphabet_size(), rng))
            .collect();
        cs = elementary_expand(&cs, p, &attach).expect("expansion is always valid");
    }
    if rng.gen_bool(0.5) {
        let p = rng.gen_range(0..=cs.dim());
        let j = rng.gen_range(0..cs.cells()[p]);
        let u = random_word(cs.alphabet_size(), 2, rng);
        cs = relabel_lift(&cs, p, j, &u).expect("relabel is always valid");
    }
    cs
}

/// Exact complex 0 -> C^k -> C^k -> 0 with unit-disk entries and
/// determinant magnitude at least `det_floor`.
pub fn random_two_term<R: Rng>(k: usize, det_floor: f64, rng: &mut R) -> (NumericChainComplex, CMatrix) {
    loop {
        let m = random_matrix(k, k, rng);
        let d = det(&m).expect("square");
        if d.norm() < det_floor {
            continue;
        }
        let cc = NumericChainComplex::from_boundaries(1, vec![k, k], vec![m.clone()])
            .expect("shapes are valid");
        return (cc, m);
    }
}

/// A longer random exact complex: block sums of invertible two-term
/// pieces, mixed by invertible basis changes in every degree.
pub fn random_exact_complex<R: Rng>(top: usize, max_block: usize, rng: &mut R) -> NumericChainComplex {
    assert!(top >= 1);
    let mut dims = vec![0usize; top + 1];
    let mut blocks: Vec<Vec<(usize, CMatrix)>> = vec![Vec::new(); top]; // per boundary p: (row offset handled later)
    let pieces = rng.gen_range(1..=3usize);
    for _ in 0..pieces {
        let p = rng.gen_range(0..top); // piece occupies degrees p, p+1
        let k = rng.gen_range(1..=max_block);
        let m = random_invertible(k, rng);
        dims[p] += k;
        dims[p + 1] += k;
        blocks[p].push((k, m));
    }
    // Assemble block-diagonal boundaries; degrees with no pieces stay 0.
    let mut boundaries = Vec::with_capacity(top);
    for p in 0..top {
        let rows = dims[p];
        let cols = dims[p + 1];
        let mut b = CMatrix::zeros(rows, cols);
        // Row offset: pieces at boundary p sit after the columns of
        // pieces at boundary p-1 inside degree p.
        let row_start = blocks
            .get(p.wrapping_sub(1))
            .filter(|_| p > 0)
            .map(|v| v.iter().map(|(k, _)| k).sum::<usize>())
            .unwrap_or(0);
        // Column offset inside degree p+1 starts at 0 for these pieces.
        let (mut r0, mut c0) = (row_start, 0usize);
        for (k, m) in &blocks[p] {
            b.set_block(r0, c0, m);
            r0 += k;
            c0 += k;
        }
        boundaries.push(b);
    }
    let cc = NumericChainComplex::from_boundaries(1, dims.clone(), boundaries).expect("shapes");
    // Mix with invertible changes of basis; exactness is preserved.
    let gs: Vec<CMatrix> = dims.iter().map(|&k| if k == 0 { CMatrix::zeros(0, 0) } else { random_invertible(k, rng) }).collect();
    let gs_inv: Vec<CMatrix> = gs
        .iter()
        .map(|g| {
            if g.rows() == 0 {
                CMatrix::zeros(0, 0)
            } else {
                g.inverse().expect("invertible by construction")
            }
        })
        .collect();
    let mixed: Vec<CMatrix> = (1..=top)
        .map(|p| gs_inv[p - 1].mul(&cc.boundary(p)).mul(&gs[p]))
        .collect();
    NumericChainComplex::from_boundaries(1, dims, mixed).expect("shapes")
}

/// Homology bases in every degree: computed representatives mixed by a
/// random invertible recombination, plus random boundary vectors.
pub fn random_homology_bases<R: Rng>(
    cc: &NumericChainComplex,
    tol: Tolerance,
    rng: &mut R,
) -> HomologyBasisSet {
    let mut out = HomologyBasisSet::empty_for(cc);
    for p in 0..=cc.n() {
        let h = homology_basis(cc, p, tol);
        if h.cols() == 0 {
            continue;
        }
        let mut m = h.mul(&random_invertible(h.cols(), rng));
        let bounds = image_basis(&cc.boundary(p + 1), tol);
        if bounds.cols() > 0 {
            let mix = random_matrix(bounds.cols(), m.cols(), rng);
            m = m.add(&bounds.mul(&mix));
        }
        out.set_basis(p, m);
    }
    out
}

/// Random complex-orthogonal matrix (O^T O = I) via the Cayley
/// transform of a random skew matrix; used to re-mix B-orthonormal
/// coefficient bases.
pub fn random_complex_orthogonal<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    loop {
        let a = random_matrix(d, d, rng).scale(Complex64::new(0.3, 0.0));
        let skew = a.sub(&a.transpose()).scale(Complex64::new(0.5, 0.0));
        let id = CMatrix::identity(d);
        let plus = id.add(&skew);
        if let Ok(inv) = plus.inverse() {
            return id.sub(&skew).mul(&inv);
        }
    }
}
