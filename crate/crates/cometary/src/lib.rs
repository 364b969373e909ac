//! Transversality of parabolic-orbit manifolds in planar restricted N-body problems.

pub mod config;
pub mod harmonics;
pub mod quadrature;
pub mod melnikov;
pub mod asymptotics;
pub mod dynamics;
pub mod cli;
