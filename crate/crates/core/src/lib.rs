//! Deterministic 2D redirected-walking simulation.
//!
//! A simulated walker follows planned paths through a randomized virtual room
//! while a redirection controller bends, stretches and rotates the mapping onto
//! a small physical room. Controllers come in a vanilla form and a form that
//! fuses a forecast of the walker's future virtual position (or walking
//! direction) into its steering. The [`simulation`] module runs paired Monte
//! Carlo comparisons of the two and reports reset counts and the mean virtual
//! distance between resets.

pub mod agent;
pub mod controllers;
pub mod environment;
pub mod geometry;
pub mod predictor;
pub mod redirection;
pub mod rng;
pub mod simulation;
pub mod stats;
