use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "talc";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run a command and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective arguments after the subcommand, with config-file values
    /// already expanded into flags.
    pub args: Vec<String>,
    /// Directory the command ran in; relative paths in `args` resolve against it.
    pub working_dir: String,
    pub resolved_config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(out_dir: &Path, command: &str) -> PathBuf {
    out_dir.join(format!("{command}.manifest.json"))
}

/// Reads inputs and writes outputs on behalf of one command, hashing both.
pub struct Recorder {
    manifest: RunManifest,
}

impl Recorder {
    pub fn new(command: &str, args: &[String]) -> Self {
        let working_dir = std::env::current_dir()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        Recorder {
            manifest: RunManifest {
                tool: TOOL.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                args: args.to_vec(),
                working_dir,
                resolved_config: serde_json::Value::Null,
                seed: None,
                inputs: Vec::new(),
                outputs: Vec::new(),
            },
        }
    }

    pub fn read(&mut self, path: &Path) -> CliResult<String> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes)
            .map_err(|_| CliError::validation(format!("{} is not valid UTF-8", path.display())))?;
        self.manifest.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(text)
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> CliResult {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| {
                CliError::Internal(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
        fs::write(path, contents)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
        self.manifest.outputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> CliResult {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Internal(format!("serializing {}: {e}", path.display())))?;
        text.push('\n');
        self.write(path, &text)
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn config<T: Serialize>(&mut self, config: &T) {
        self.manifest.resolved_config = serde_json::to_value(config).unwrap_or_default();
    }

    pub fn finish(self, out_dir: &Path) -> CliResult<PathBuf> {
        let path = manifest_path(out_dir, &self.manifest.command);
        fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", out_dir.display())))?;
        let mut text = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn recorder_tracks_files() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        fs::write(&input, "abc").unwrap();
        let mut rec = Recorder::new("demo", &["--x".into()]);
        assert_eq!(rec.read(&input).unwrap(), "abc");
        rec.write(&dir.path().join("sub/out.txt"), "xyz").unwrap();
        rec.seed(7);
        let path = rec.finish(dir.path()).unwrap();
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(m.command, "demo");
        assert_eq!(m.inputs[0].sha256, sha256_hex(b"abc"));
        assert_eq!(m.outputs.len(), 1);
        assert_eq!(m.seed, Some(7));
        assert!(rec_missing_input_is_validation());
    }

    fn rec_missing_input_is_validation() -> bool {
        let mut rec = Recorder::new("demo", &[]);
        matches!(
            rec.read(Path::new("/nonexistent/x")),
            Err(CliError::Validation(_))
        )
    }
}
