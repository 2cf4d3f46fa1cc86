pub mod bubbles;
pub mod clifford;
pub mod degree;
pub mod expr;
pub mod geometry;
pub mod grid;
pub mod jet;
pub mod morse;
pub mod quadrature;
pub mod reduced_functional;
