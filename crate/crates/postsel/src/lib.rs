//! File formats, batch drivers and the command line for `postsel-core`.

pub mod batch;
pub mod cli;
pub mod format;
pub mod io;
