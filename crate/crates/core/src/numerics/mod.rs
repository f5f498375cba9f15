//! Generic numerical building blocks: bracketing root finders, adaptive
//! Gauss–Kronrod quadrature and polynomial least squares.

pub mod fit;
pub mod quadrature;
pub mod roots;
