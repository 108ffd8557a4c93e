//! Configuration, VTK snapshots and CSV diagnostics.

pub mod config;
pub mod csv;
pub mod vtk;

pub use config::{parse_config, preset, print_config, IcPattern, Preset, SimConfig, PRESETS};
pub use self::csv::{read_csv, render_csv, write_csv};
pub use vtk::{render_vtk, write_vtk, PointField};
