//! File formats, benchmarks and the command-line front end for
//! `sparse-occ-core`.
//!
//! - [`formats`]: binary point sets (`OPS1`), voxel grids (`OVG1`), feature
//!   maps (`FMAP`), class scores (`SCRS`) and CSV point sets.
//! - [`config`]: JSON descriptions of scenes, cameras, class weights and
//!   sample queries.
//! - [`bench`]: one-to-one assignment versus nearest-neighbor matching
//!   timings, power-law fits and JSON/CSV/SVG reports.
//! - [`cli`]: the `sparse-occ` subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod config;
pub mod formats;
pub mod mem;
