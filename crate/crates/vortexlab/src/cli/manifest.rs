use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io;
use crate::profile::ProfileDescriptor;

/// Record of one invocation: what ran, on which inputs, and what it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the resolved arguments as canonical JSON.
    pub config_digest: String,
    /// SHA-256 of the profile descriptor as canonical JSON.
    pub profile_digest: Option<String>,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<PathBuf>,
}

pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new<C: Serialize>(
        command: &C,
        profile: Option<&ProfileDescriptor>,
        wall: Duration,
        outputs: Vec<PathBuf>,
    ) -> Self {
        let config = io::to_json(command).expect("arguments serialize");
        let name = serde_json::to_value(command)
            .ok()
            .and_then(|v| v.as_object().and_then(|o| o.keys().next().cloned()))
            .unwrap_or_default();
        RunManifest {
            command: name,
            config_digest: digest(&config),
            profile_digest: profile.map(|d| digest(&io::to_json(d).expect("descriptor serializes"))),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: wall.as_secs_f64(),
            outputs,
        }
    }
}

/// `<output>.manifest.json` next to the first output.
pub fn default_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}
