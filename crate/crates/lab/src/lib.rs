//! File formats, seeded experiment sweeps and the command-line front end for
//! `wpl-core`.

pub mod experiments;
pub mod formats;
pub mod seeds;
