//! Finite operad-algebras over prime fields, the tame automorphism groups
//! acting on their tuples, and the finite certificates that go with them.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front-end and parallel census drivers live in the `tamealt` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod action;
pub mod algebra;
pub mod census;
pub mod ffield;
pub mod operad;
pub mod rng;
pub mod spectral;
pub mod tame;

pub use action::{Bsgs, OmegaIndex, Perm};
pub use algebra::{AlgebraStructure, AutGroup};
pub use ffield::{FieldElement, Matrix, PrimeField};
pub use operad::{FreeElement, Signature, Term};
pub use tame::{GammaGenerators, GroupWord, Transvection};
