pub mod build;
pub mod cluster;
pub mod eval;
pub mod gradcheck;
pub mod synth;
pub mod train;
