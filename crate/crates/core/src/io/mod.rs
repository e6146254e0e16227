//! The artifact's external surface: map and config file formats, report
//! writers, and the PGM heatmap format.

pub mod config;
pub mod mapfile;
pub mod pgm;
pub mod report;
