//! Experiment runner, verification suite and report generator for `bbmlab`.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;
pub mod report;
pub mod verify;
