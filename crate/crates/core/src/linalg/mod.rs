//! Numerical kernels shared by the physics modules.

pub mod arnoldi;
pub mod band;
pub mod dense;
pub mod eigen;
pub mod sparse;

pub use band::BandLu;
pub use dense::CMatrix;
pub use sparse::SparseMatrix;
