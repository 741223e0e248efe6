//! Command-line pipeline: simulate targets, perturb them, fit archetypes,
//! score the grid and render reports. Every command writes under `--out`
//! with a `manifest.json` listing its artifacts and their hashes.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod svg;
