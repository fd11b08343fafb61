//! Scene files, the command runner and JSON reports.

pub mod commands;
pub mod report;
pub mod scene;

pub use commands::{cmd_check, cmd_integrate, cmd_invariants, CheckOptions, CommandError, IntegrateTarget};
pub use report::{IdentityRow, Report};
pub use scene::{load_scene, parse_scene, Scene, SceneError};
