//! External detector subprocess protocol.
//!
//! The command runs under `sh -c` and receives the groups file format on
//! stdin: the version header, then one `group_id<TAB>label<TAB>event ids`
//! line per group. The label column carries the placeholder `normal`;
//! ground truth is never forwarded. The command must print exactly one
//! `normal` or `anomalous` line per group.

use std::io::Write;
use std::process::{Command, Stdio};

use crate::artifact;
use crate::error::{Error, Result};
use crate::grouper::{DatasetView, Label};
use crate::template_miner::TemplateSet;

pub fn run(command: &str, view: &DatasetView, set: &TemplateSet) -> Result<Vec<Label>> {
    let mut input = String::new();
    input.push_str(&artifact::header("groups"));
    input.push('\n');
    for g in 0..view.len() {
        let ids: Vec<&str> = view.events(g).map(|e| set.event_id(e)).collect();
        input.push_str(&format!("{}\tnormal\t{}\n", view.group_id(g), ids.join(" ")));
    }

    let fail = |message: String| Error::External {
        command: command.to_string(),
        message,
    };

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| fail(format!("failed to spawn: {e}")))?;

    // The writer runs on its own thread so a child that streams output
    // before draining stdin cannot deadlock the pipe pair.
    let mut stdin = child.stdin.take().expect("stdin was piped");
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let output = child
        .wait_with_output()
        .map_err(|e| fail(format!("failed to read output: {e}")))?;
    writer.join().expect("stdin writer panicked");

    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(fail(format!(
            "exited with {}: {}",
            output.status,
            stderr.trim()
        )));
    }

    let stdout = String::from_utf8_lossy(&output.stdout);
    let mut labels = Vec::new();
    for line in stdout.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        labels.push(
            Label::from_artifact_str(line)
                .ok_or_else(|| fail(format!("invalid prediction line `{line}`")))?,
        );
    }
    if labels.len() != view.len() {
        return Err(fail(format!(
            "expected {} prediction lines, got {}",
            view.len(),
            labels.len()
        )));
    }
    Ok(labels)
}
