//! Aggregation of RunRecord JSONs into one CSV table per command.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use tpt_core::io::{format_float, to_stable_json};
use tpt_core::learner::{LearnOutcome, LearnStatus};
use tpt_core::tester::TheoryParameters;
use tpt_core::{Error, FoolingReport, Result, SuiteRow, TesterVerdict};

use crate::run::RunRecord;

/// Commands whose records the report understands, in output order.
const COMMANDS: [&str; 6] = ["test", "learn", "fool", "lift", "signapprox", "params"];

pub struct ReportRequest {
    pub dir: PathBuf,
    pub out_dir: PathBuf,
}

/// Flattens every RunRecord under `dir` into `report-<command>.csv` files,
/// one per known command (header-only when no records match). Malformed
/// records are skipped with a warning on stderr; the summary JSON printed
/// to stdout carries the counts. Idempotent: outputs are CSV, inputs JSON.
pub fn run(request: &ReportRequest) -> Result<ExitCode> {
    let mut paths: Vec<PathBuf> = fs::read_dir(&request.dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|path| path.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();

    let mut by_command: BTreeMap<&str, Vec<RunRecord>> = BTreeMap::new();
    let mut skipped = 0usize;
    let mut records = 0usize;
    for path in &paths {
        let parsed = fs::read_to_string(path)
            .map_err(Error::from)
            .and_then(|text| serde_json::from_str::<RunRecord>(&text).map_err(Error::from));
        match parsed {
            Ok(record) => match COMMANDS.iter().find(|&&c| c == record.command) {
                Some(&command) => {
                    records += 1;
                    by_command.entry(command).or_default().push(record);
                }
                None => {
                    eprintln!(
                        "warning: {}: unknown command `{}`, skipped",
                        path.display(),
                        record.command
                    );
                    skipped += 1;
                }
            },
            Err(err) => {
                eprintln!("warning: {}: {err}, skipped", path.display());
                skipped += 1;
            }
        }
    }

    fs::create_dir_all(&request.out_dir)?;
    let mut rows_written = BTreeMap::new();
    for command in COMMANDS {
        let records = by_command.get(command).map_or(&[][..], Vec::as_slice);
        let (table, rows, row_warnings) = flatten(command, records);
        skipped += row_warnings;
        fs::write(request.out_dir.join(format!("report-{command}.csv")), table)?;
        rows_written.insert(command.to_string(), rows);
    }

    let summary = serde_json::json!({
        "records": records,
        "skipped": skipped,
        "rows": rows_written,
        "out_dir": request.out_dir.display().to_string(),
    });
    println!("{}", to_stable_json(&summary)?);
    Ok(ExitCode::SUCCESS)
}

/// Builds one command's CSV. Returns (text, data rows, skipped payloads).
fn flatten(command: &str, records: &[RunRecord]) -> (String, usize, usize) {
    let header: &[&str] = match command {
        "test" => &["seed", "accepted", "worst_alpha", "worst_dev", "k", "eta", "m"],
        "learn" => &[
            "seed",
            "status",
            "train_loss",
            "d",
            "epsilon",
            "k",
            "eta",
            "m",
            "worst_dev",
        ],
        "fool" => &[
            "seed",
            "ptf_id",
            "k",
            "gap",
            "slack",
            "discrete_expectation",
            "gaussian_estimate",
            "estimator_error",
        ],
        "lift" => &[
            "seed",
            "block_size",
            "rows",
            "input_dimension",
            "lifted_dimension",
            "lifted_csv",
            "lifted_sha256",
        ],
        "signapprox" => &[
            "seed",
            "p_id",
            "degree",
            "error",
            "grid_residual",
            "grid_nodes",
            "range",
        ],
        "params" => &[
            "seed",
            "d",
            "epsilon",
            "n",
            "c1",
            "c2",
            "k",
            "log10_k",
            "eta",
            "eta_underflow",
            "log10_eta",
            "m",
            "log10_m",
        ],
        _ => unreachable!("flatten only sees known commands"),
    };

    let mut out = header.join(",");
    out.push('\n');
    let mut rows = 0usize;
    let mut warnings = 0usize;
    // Acceptance bookkeeping for the summary row of test/learn sweeps.
    let mut verdicts = 0usize;
    let mut accepted = 0usize;

    for record in records {
        let fields = match payload_fields(command, record) {
            Ok(per_payload) => per_payload,
            Err(err) => {
                eprintln!(
                    "warning: {command}-{}: payload does not match the {command} schema ({err}), skipped",
                    record.seed
                );
                warnings += 1;
                continue;
            }
        };
        for mut row in fields {
            if let Some(flag) = row.accepted {
                verdicts += 1;
                accepted += usize::from(flag);
            }
            row.cells.insert(0, record.seed.to_string());
            debug_assert_eq!(row.cells.len(), header.len());
            out.push_str(&row.cells.join(","));
            out.push('\n');
            rows += 1;
        }
    }

    if verdicts > 0 {
        let mut cells = vec![String::new(); header.len()];
        cells[0] = "summary".to_string();
        cells[1] = format_float(accepted as f64 / verdicts as f64);
        out.push_str(&cells.join(","));
        out.push('\n');
        rows += 1;
    }
    (out, rows, warnings)
}

struct Row {
    cells: Vec<String>,
    /// Set on verdict-bearing rows; drives the acceptance-fraction summary.
    accepted: Option<bool>,
}

fn payload_fields(command: &str, record: &RunRecord) -> Result<Vec<Row>> {
    let payload = record.payload.clone();
    let rows = match command {
        "test" => {
            let v: TesterVerdict = serde_json::from_value(payload)?;
            vec![Row {
                cells: vec![
                    v.accepted.to_string(),
                    format_alpha(v.worst_alpha.exponents()),
                    format_float(v.worst_dev),
                    v.k.to_string(),
                    format_float(v.eta),
                    v.m.to_string(),
                ],
                accepted: Some(v.accepted),
            }]
        }
        "learn" => {
            let o: LearnOutcome = serde_json::from_value(payload)?;
            let status = match o.status {
                LearnStatus::Accepted => "accepted",
                LearnStatus::Rejected => "rejected",
            };
            vec![Row {
                cells: vec![
                    status.to_string(),
                    o.train_loss.map(format_float).unwrap_or_default(),
                    o.d.to_string(),
                    format_float(o.epsilon),
                    o.tester.k.to_string(),
                    format_float(o.tester.eta),
                    o.tester.m.to_string(),
                    format_float(o.tester.worst_dev),
                ],
                accepted: Some(o.status == LearnStatus::Accepted),
            }]
        }
        "fool" => {
            let r: FoolingReport = serde_json::from_value(payload)?;
            vec![Row {
                cells: vec![
                    csv_quote(&r.ptf_id),
                    r.k.to_string(),
                    format_float(r.gap),
                    format_float(r.slack),
                    format_float(r.discrete_expectation),
                    format_float(r.gaussian_estimate),
                    format_float(r.estimator_error),
                ],
                accepted: None,
            }]
        }
        "lift" => {
            let get = |key: &str| -> Result<serde_json::Value> {
                payload
                    .get(key)
                    .cloned()
                    .ok_or_else(|| Error::Parse(format!("missing field `{key}`")))
            };
            vec![Row {
                cells: vec![
                    plain_cell(&get("block_size")?),
                    plain_cell(&get("rows")?),
                    plain_cell(&get("input_dimension")?),
                    plain_cell(&get("lifted_dimension")?),
                    csv_quote(&plain_cell(&get("lifted_csv")?)),
                    plain_cell(&get("lifted_sha256")?),
                ],
                accepted: None,
            }]
        }
        "signapprox" => {
            let rows: Vec<SuiteRow> = serde_json::from_value(payload)?;
            rows.into_iter()
                .map(|r| Row {
                    cells: vec![
                        csv_quote(&r.p_id),
                        r.degree.to_string(),
                        format_float(r.error),
                        format_float(r.grid_residual),
                        r.grid_nodes.to_string(),
                        format_float(r.range),
                    ],
                    accepted: None,
                })
                .collect()
        }
        "params" => {
            let p: TheoryParameters = serde_json::from_value(payload)?;
            vec![Row {
                cells: vec![
                    p.d.to_string(),
                    format_float(p.epsilon),
                    p.n.to_string(),
                    format_float(p.c1),
                    format_float(p.c2),
                    p.k.map(|k| k.to_string()).unwrap_or_default(),
                    format_float(p.log10_k),
                    format_float(p.eta),
                    p.eta_underflow.to_string(),
                    format_float(p.log10_eta),
                    p.m.map(|m| m.to_string()).unwrap_or_default(),
                    format_float(p.log10_m),
                ],
                accepted: None,
            }]
        }
        _ => unreachable!("payload_fields only sees known commands"),
    };
    Ok(rows)
}

fn format_alpha(exponents: &[u16]) -> String {
    let joined: Vec<String> = exponents.iter().map(u16::to_string).collect();
    joined.join(";")
}

fn plain_cell(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Quotes a CSV field when it contains a delimiter, quote, or newline.
fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
