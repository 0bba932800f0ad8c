pub mod analysis;
pub mod experiment;
pub mod formulations;
pub mod lp;
pub mod topology;
pub mod traffic;
