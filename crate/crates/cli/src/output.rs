use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use orliczkit::constants::ConstantReport;
use serde::Serialize;

/// A finished command: the JSON report, extra files, and the exit code.
pub struct Run {
    pub command: &'static str,
    pub report: serde_json::Value,
    pub files: Vec<(String, String)>,
    pub exit_code: u8,
    /// Printed to stderr after the report.
    pub notes: Vec<String>,
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    config: &'a C,
    result: &'a R,
}

pub fn envelope<C: Serialize, R: Serialize>(command: &str, config: &C, result: &R) -> Result<serde_json::Value, String> {
    serde_json::to_value(Envelope { command, config, result }).map_err(|e| e.to_string())
}

/// Writes the report to stdout and, with `--out`, `<command>.json` plus the
/// CSV files into that directory.
pub fn emit(run: &Run, out: Option<&Path>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(&run.report).map_err(|e| e.to_string())? + "\n";
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        let json = dir.join(format!("{}.json", run.command));
        std::fs::write(&json, &text).map_err(|e| format!("cannot write {}: {e}", json.display()))?;
        for (name, body) in &run.files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
    }
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(format!("cannot write to stdout: {e}")),
        _ => Ok(()),
    }
}

/// `x,supremand` and `x,ln_supremand` CSVs, one pair per sup term.
pub fn trace_files(prefix: &str, report: &ConstantReport) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for (i, term) in report.terms.iter().enumerate() {
        let mut lin = String::from("x,supremand\n");
        let mut ln = String::from("x,ln_supremand\n");
        for tp in &term.trace {
            let _ = writeln!(lin, "{},{}", tp.x, tp.value);
            let _ = writeln!(ln, "{},{}", tp.x, tp.ln_value);
        }
        files.push((format!("{prefix}-term{i}.csv"), lin));
        files.push((format!("{prefix}-term{i}.ln.csv"), ln));
    }
    files
}
