pub mod algebra;
pub mod cli;
pub mod amodule;
pub mod exterior;
pub mod exprdsl;
pub mod fields;
pub mod geometry;
pub mod integrate;
pub mod oracle;
