//! Integral Apollonian circle packings: exact quadruple algebra, orbit
//! enumeration, prime components, quadratic and pinch families, residue walks,
//! numerical experiments and SVG rendering.

pub mod components;
pub mod enumerate;
pub mod error;
pub mod forms;
pub mod modular;
pub mod pinch;
pub mod primes;
pub mod quadruple;
pub mod render;
pub mod residues;
pub mod stats;
pub mod walks;

pub use error::{Error, Result};
pub use primes::{is_odd_prime_curvature, is_prime, prime_pi, PrimalityTester, PrimeTable};
pub use quadruple::{apply_swap, descartes_form, is_primitive, reduce_to_root, Quadruple, SwapIndex};
pub use residues::{admissible_residues, mod8_case, Mod8Case, ResidueClassSet};
