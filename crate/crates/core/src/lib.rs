//! Numerical laboratory for vector coherent state (VCS) frames built from
//! bordered hermitian matrices on the poly-disc.
//!
//! The crate pairs every closed-form object (eigensystems, matrix powers,
//! moment integrals, normalizations, frame operators) with an independent
//! brute-force route (dense eigensolver, repeated multiplication, tensor
//! quadrature, Monte Carlo) so that each identity can be audited at finite
//! truncation.

pub mod disc;
pub mod frame;
pub mod linalg;
pub mod moments;
pub mod quadrature;
pub mod states;
pub mod zmatrix;

pub use disc::DiscTuple;
pub use linalg::{ComplexMatrix, HermitianEig};
pub use moments::MomentTable;
pub use states::VcsState;
