pub mod geometry;
pub mod pointsets;
pub mod densities;
pub mod potentials;
pub mod verification;
pub mod cli;
