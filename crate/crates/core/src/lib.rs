//! Simulation, tomography and calibration toolkit for a programmable linear-optical
//! chip that generates heralded two-qubit dual-rail states.
//!
//! Modules are layered bottom-up: [`fock`] computes exact multi-photon amplitudes,
//! [`circuit`] builds mode unitaries from netlists and the parametric chip model,
//! [`stategen`] produces heralded states, [`tomography`] reconstructs them,
//! [`calibration`] fits the chip model, and [`source`] covers source metrology and
//! rate accounting.

pub mod calibration;
pub mod circuit;
pub mod fock;
pub mod linalg;
pub mod source;
pub mod stategen;
pub mod tomography;
