pub mod chirp;
pub mod cutoff;
pub mod error;
pub mod exec;
pub mod grid;
pub mod littlewood_paley;
pub mod operator;
pub mod sobolev;
pub mod spectral;
pub mod symbols;
pub mod trace;
