//! Steady states of the harvested diffusive logistic equation
//! `-u'' = a u - f(u) - c h` on `(0, 1)` with Dirichlet boundary conditions.

pub mod continuation;
pub mod diagram;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod solver;
pub mod spectral;
