//! File formats, parallel censuses, the action pipeline and the command
//! line front end over `tamealt-core`.

pub mod cli;
pub mod formats;
pub mod parallel;
pub mod pipeline;
pub mod reports;

pub use tamealt_core as core;
