//! Command-line front end and file formats for `cvxlab-core`: a rayon
//! executor, the `cvxlab` command, grid files and report output.

pub mod cli;
pub mod exec;
pub mod fields;
pub mod gridio;
pub mod output;
pub mod params;
pub mod regions;

pub use cli::run;
pub use exec::Pool;
