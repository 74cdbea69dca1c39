//! `run.json`: the command that produced an output directory, digests of its
//! inputs and of every file it wrote. Contains no timestamps, so identical
//! runs produce identical manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use affect_audit::digest::sha256_hex;
use affect_audit::report::InputDigest;
use serde::{Deserialize, Serialize};

use crate::{commands, EvalArgs, ReplayArgs, ScanArgs, UsageError};

pub const MANIFEST: &str = "run.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Scan(ScanArgs),
    Eval(EvalArgs),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<InputDigest>,
}

/// Writes files under an output directory and remembers their digests.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<InputDigest>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Outputs { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let bytes = contents.as_ref();
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(InputDigest { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn finish(mut self, config: RunConfig, inputs: Vec<InputDigest>) -> Result<()> {
        self.written.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs,
            outputs: self.written,
        };
        let json = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.dir.join(MANIFEST), json).context("writing run.json")?;
        Ok(())
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: not a run manifest: {e}", path.display())).into())
}

/// Re-runs a recorded command into a new directory and checks that inputs
/// and outputs match the recorded digests. Exit 1 on any difference.
pub fn replay(args: &ReplayArgs) -> Result<ExitCode> {
    if !args.manifest.exists() {
        return Err(UsageError(format!("manifest `{}` does not exist", args.manifest.display())).into());
    }
    let recorded = read_manifest(&args.manifest)?;
    let code = match recorded.config.clone() {
        RunConfig::Scan(mut a) => {
            a.out = args.out.clone();
            commands::scan(&a)?
        }
        RunConfig::Eval(mut a) => {
            a.out = args.out.clone();
            commands::eval(&a)?
        }
    };
    if code != ExitCode::SUCCESS {
        return Ok(code);
    }
    let fresh = read_manifest(&args.out.join(MANIFEST))?;
    let mut same = true;
    if fresh.inputs != recorded.inputs {
        same = false;
        println!("inputs differ from the recorded digests");
    }
    if fresh.outputs != recorded.outputs {
        same = false;
        for (a, b) in fresh.outputs.iter().zip(&recorded.outputs) {
            if a != b {
                println!("output {} differs", a.path);
            }
        }
        if fresh.outputs.len() != recorded.outputs.len() {
            println!("output file count differs: {} vs {}", fresh.outputs.len(), recorded.outputs.len());
        }
    }
    if same {
        println!("replay reproduced all {} output file(s)", fresh.outputs.len());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
