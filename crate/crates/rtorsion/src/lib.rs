//! Twisted Reidemeister torsion of finite CW complexes.
//!
//! A complex is described combinatorially by boundary matrices over the
//! integral group ring of a free generator alphabet ([`cellsys`]). A
//! representation sends each letter to a matrix in SL(n,C) and twists
//! the complex through the adjoint action on sl(n,C) ([`liealg`]),
//! producing dense complex boundary matrices. The torsion of the
//! resulting based chain complex, its behaviour under Mayer-Vietoris
//! gluings, and the normalization realizing the multiplicativity of
//! torsion under disk sums and connected sums live in [`torsion`];
//! ready-made models (circle, disk, solid torus, lens spaces, sums)
//! live in [`spaces`].
//!
//! With the default `parallel` feature, block assembly and the
//! randomized verification suite fan out over rayon; disabling the
//! feature gives a fully sequential build with identical results.

pub mod cellsys;
pub mod io;
pub mod liealg;
pub mod linalg;
pub mod samples;
pub mod spaces;
pub mod suite;
pub mod torsion;

pub use cellsys::{CellSystem, NumericChainComplex};
pub use liealg::{AdjointData, Representation};
pub use linalg::{CMatrix, Tolerance};
pub use torsion::{HomologyBasisSet, TorsionValue};
