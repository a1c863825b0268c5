pub mod campaign;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod report;
