//! Higher commutators of finite algebras, and bounded evidence for the
//! infinite algebras `A_n` whose nilpotence and supernilpotence come apart.

pub mod algebra;
pub mod computable;
pub mod congruence;
pub mod commutator;
pub mod cube;
pub mod element;
pub mod error;
pub mod matrices;
pub mod nat;
pub mod pool;
pub mod series;
pub mod verify;

pub use algebra::{apply, ComputableAlgebra, Evaluator, FiniteAlgebra, Operation};
pub use computable::{an_algebra, sec3_algebra, AnAlgebra, Sec3Algebra};
pub use congruence::{Partition, PartialCongruence};
pub use cube::{gcube, parse_cube, Cube, Line, Square};
pub use element::Element;
pub use error::{Error, Result};
pub use nat::Nat;
pub use pool::{ElemId, ElementPool};
