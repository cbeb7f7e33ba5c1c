#![no_std]

extern crate alloc;

pub mod diff;
pub mod equivariant;
pub mod flow;
pub mod geom;
pub mod invariant;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod mol;
pub mod nn;
pub mod rng;
pub mod toy;
