pub mod checks;
pub mod commands;
pub mod config;
pub mod fixtures;
pub mod suite;
pub mod svg;
