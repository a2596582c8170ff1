#![no_std]
#![doc = include_str!("../README.md")]

// Float math comes from num-traits (libm). When std is anywhere in the build
// graph its inherent f64 methods take precedence, hence the scattered
// `allow(unused_imports)` on those imports.
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod lindblad;
pub mod observables;
pub mod stability;
pub mod steadystate;
pub mod sweep;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;
