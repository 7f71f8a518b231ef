pub mod analyze;
pub mod equilibrium;
pub mod report;
pub mod sample;
pub mod verify;
