//! Seeded run execution: the worker pool for seed sweeps, reproducibility
//! verification, and RunRecord persistence.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tpt_core::io::to_stable_json;
use tpt_core::{Error, Result};

/// One persisted run. Wall time and input hashes are provenance; the payload
/// alone must be bit-for-bit reproducible from (config, seed).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    /// Resolved configuration snapshot (flags merged with --config).
    pub config: serde_json::Value,
    pub seed: u64,
    pub wall_time_ms: f64,
    /// sha256 of every input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    pub payload: serde_json::Value,
}

/// What one seeded run produced.
pub struct RunOutput {
    pub payload: serde_json::Value,
    /// A rejection verdict (exit code 1); distinct from an error.
    pub rejected: bool,
    /// Artifacts written next to the record, name -> contents.
    pub extra_files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn new<T: Serialize>(payload: &T, rejected: bool) -> Result<RunOutput> {
        Ok(RunOutput {
            payload: serde_json::to_value(payload)?,
            rejected,
            extra_files: Vec::new(),
        })
    }
}

/// Shared driver for every seeded command: runs the job once per seed
/// (twice under --verify-repro), prints each payload as one JSON line in
/// seed order, persists RunRecords, and maps rejections to exit code 1.
pub struct Runner {
    pub command: &'static str,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    /// When set, `<command>-<seed>.json` plus any extra files land here.
    pub out_dir: Option<PathBuf>,
    pub verify_repro: bool,
    pub workers: usize,
}

impl Runner {
    pub fn execute<F>(&self, job: F) -> Result<ExitCode>
    where
        F: Fn(u64) -> Result<RunOutput> + Sync,
    {
        if self.seeds.is_empty() {
            return Err(Error::EmptyInput("seeds"));
        }
        let runs = self.run_all(&job)?;
        if self.verify_repro {
            let rerun = self.run_all(&job)?;
            for (i, &seed) in self.seeds.iter().enumerate() {
                let first = to_stable_json(&runs[i].0.payload)?;
                let second = to_stable_json(&rerun[i].0.payload)?;
                if first != second {
                    return Err(Error::Numerical(format!(
                        "verify-repro: payload for seed {seed} differs between runs"
                    )));
                }
            }
        }

        let mut rejected = false;
        for (i, &seed) in self.seeds.iter().enumerate() {
            let (output, wall_time_ms) = &runs[i];
            println!("{}", to_stable_json(&output.payload)?);
            rejected |= output.rejected;
            if let Some(dir) = &self.out_dir {
                fs::create_dir_all(dir)?;
                for (name, contents) in &output.extra_files {
                    fs::write(dir.join(name), contents)?;
                }
                let record = RunRecord {
                    command: self.command.to_string(),
                    config: self.config.clone(),
                    seed,
                    wall_time_ms: *wall_time_ms,
                    inputs: self.inputs.clone(),
                    payload: output.payload.clone(),
                };
                let path = dir.join(format!("{}-{seed}.json", self.command));
                fs::write(path, to_stable_json(&record)?)?;
            }
        }
        Ok(if rejected {
            ExitCode::from(1)
        } else {
            ExitCode::SUCCESS
        })
    }

    fn run_all<F>(&self, job: &F) -> Result<Vec<(RunOutput, f64)>>
    where
        F: Fn(u64) -> Result<RunOutput> + Sync,
    {
        let timed = |seed: u64| -> Result<(RunOutput, f64)> {
            let start = Instant::now();
            let output = job(seed)?;
            Ok((output, start.elapsed().as_secs_f64() * 1e3))
        };
        let workers = self.workers.clamp(1, self.seeds.len());
        if workers == 1 {
            return self.seeds.iter().map(|&seed| timed(seed)).collect();
        }

        // Work-stealing by atomic index; results keep seed order, so the
        // pool size never changes what gets printed or written.
        let slots: Vec<Mutex<Option<Result<(RunOutput, f64)>>>> =
            self.seeds.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&seed) = self.seeds.get(i) else {
                        break;
                    };
                    *slots[i].lock().unwrap() = Some(timed(seed));
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.into_inner().unwrap().expect("pool fills every slot"))
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Reads a UTF-8 input file and records its hash under the path as given.
pub fn read_input(path: &Path, inputs: &mut BTreeMap<String, String>) -> Result<String> {
    let bytes = fs::read(path).map_err(|err| {
        std::io::Error::new(err.kind(), format!("{}: {err}", path.display()))
    })?;
    inputs.insert(path.display().to_string(), sha256_hex(&bytes));
    String::from_utf8(bytes).map_err(|_| Error::Parse(format!("{}: not UTF-8", path.display())))
}

/// Parses `7`, `0..19` (both ends inclusive), or `3,7,11` into a list.
pub fn parse_index_list(text: &str) -> Result<Vec<u64>> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo = parse_u64(lo)?;
        let hi = parse_u64(hi)?;
        if hi < lo {
            return Err(Error::Parse(format!("range `{text}` is descending")));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(parse_u64).collect()
}

fn parse_u64(field: &str) -> Result<u64> {
    let trimmed = field.trim();
    trimmed
        .parse()
        .map_err(|_| Error::Parse(format!("`{trimmed}` is not a non-negative integer")))
}

/// Pool size: the --workers flag when given, else TPT_WORKERS, else 1.
pub fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> usize {
    config
        .or(flag)
        .or_else(|| std::env::var("TPT_WORKERS").ok()?.parse().ok())
        .unwrap_or(1)
        .max(1)
}
