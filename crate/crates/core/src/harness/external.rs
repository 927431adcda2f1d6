//! External trainer plug-in.
//!
//! The toolkit writes both datasets to temporary JSONL files, starts the
//! command, sends one request line
//! `{"train_path": ..., "eval_path": ..., "spec": {...}}` and reads one
//! reply line `{"accuracy": float, "n_eval": int}`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::augment::{write_dataset, AugmentedDataset};
use crate::error::{Error, Result};

use super::TrainerSpec;

#[derive(Serialize)]
struct Request<'a> {
    train_path: &'a Path,
    eval_path: &'a Path,
    spec: &'a TrainerSpec,
}

#[derive(Debug, Deserialize)]
pub(super) struct Reply {
    pub accuracy: f64,
    pub n_eval: usize,
}

pub(super) fn run(
    command: &[String],
    train: &AugmentedDataset,
    eval: &AugmentedDataset,
    spec: &TrainerSpec,
) -> Result<Reply> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| Error::Trainer("empty external trainer command".into()))?;
    let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let train_path = dir.path().join("train.jsonl");
    let eval_path = dir.path().join("eval.jsonl");
    write_dataset(train, &train_path)?;
    write_dataset(eval, &eval_path)?;

    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| Error::Trainer(format!("cannot start {program:?}: {e}")))?;

    let mut line = serde_json::to_string(&Request {
        train_path: &train_path,
        eval_path: &eval_path,
        spec,
    })?;
    line.push('\n');
    {
        let mut stdin = child.stdin.take().expect("piped stdin");
        stdin
            .write_all(line.as_bytes())
            .map_err(|e| Error::Trainer(format!("writing request: {e}")))?;
    }
    let mut reply = String::new();
    BufReader::new(child.stdout.take().expect("piped stdout"))
        .read_line(&mut reply)
        .map_err(|e| Error::Trainer(format!("reading reply: {e}")))?;
    let status = child
        .wait()
        .map_err(|e| Error::Trainer(format!("waiting for trainer: {e}")))?;
    if !status.success() {
        return Err(Error::Trainer(format!("{program:?} exited with {status}")));
    }
    serde_json::from_str(reply.trim())
        .map_err(|e| Error::Trainer(format!("bad reply {:?}: {e}", reply.trim())))
}
