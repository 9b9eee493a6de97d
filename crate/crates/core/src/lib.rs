//! Hamiltonian decompositions of dense regular graphs: a randomized
//! construction pipeline (edge split, regular core extraction, rotation
//! steps, residual completion), exact verifiers, and exact counts and
//! bounds for small graphs.

pub mod counting;
pub mod decompose;
pub mod expansion;
pub mod factor;
pub mod graph;
pub mod hamilton;
pub mod partition;
pub mod regularize;
pub mod rng;
pub mod rotation;
pub mod walecki;
