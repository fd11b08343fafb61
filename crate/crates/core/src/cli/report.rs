use serde::Serialize;
use serde_json::Value;

/// One checked identity: its worst residual against a fixed tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityRow {
    /// A non-finite residual fails.
    pub fn new(name: impl Into<String>, max_residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), max_residual, tolerance, pass: max_residual <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub scene_digest: String,
    pub results: Value,
    pub identities: Vec<IdentityRow>,
    pub exit: i32,
}

impl Report {
    pub fn new(command: &str, scene_digest: &str, results: Value, identities: Vec<IdentityRow>) -> Self {
        let exit = if identities.iter().all(|r| r.pass) { 0 } else { 1 };
        Self { command: command.to_string(), scene_digest: scene_digest.to_string(), results, identities, exit }
    }

    pub fn passed(&self) -> bool {
        self.exit == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
