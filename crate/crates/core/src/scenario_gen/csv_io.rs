//! `dataset.csv` reader and writer.
//!
//! Layout: a `# seed=<u64>` comment line, then the header
//! `id,load1..,gen1..,angle1..,flow1..,split,label_c<ID>..` and one row per
//! condition. Floats are written with 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::database::{LabeledDatabase, OperatingCondition, Split};
use super::ScenarioError;
use crate::grid::SecurityLabel;

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(db: &LabeledDatabase) -> Vec<String> {
    let first = db.conditions.first();
    let count = |f: fn(&OperatingCondition) -> usize| first.map(f).unwrap_or(0);
    let mut h = vec!["id".to_string()];
    let groups: [(&str, usize); 4] = [
        ("load", count(|c| c.loads_mw.len())),
        ("gen", count(|c| c.dispatch_mw.len())),
        ("angle", count(|c| c.angles_rad.len())),
        ("flow", count(|c| c.flows_mw.len())),
    ];
    for (name, n) in groups {
        h.extend((1..=n).map(|k| format!("{name}{k}")));
    }
    h.push("split".into());
    h.extend(db.contingencies.iter().map(|c| format!("label_c{c}")));
    h
}

pub fn save_database(db: &LabeledDatabase, path: &Path) -> Result<(), ScenarioError> {
    let io_err = |e: std::io::Error| ScenarioError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(out, "# seed={}", db.seed).map_err(io_err)?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header(db)).map_err(csv_write_err)?;
    for c in &db.conditions {
        let mut rec = vec![c.id.to_string()];
        rec.extend(
            c.loads_mw
                .iter()
                .chain(&c.dispatch_mw)
                .chain(&c.angles_rad)
                .chain(&c.flows_mw)
                .map(|&v| format_f64(v)),
        );
        rec.push(c.split.as_str().to_string());
        rec.extend(c.labels.iter().map(|l| l.as_u8().to_string()));
        writer.write_record(rec).map_err(csv_write_err)?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

fn csv_write_err(e: csv::Error) -> ScenarioError {
    ScenarioError::MalformedFile {
        line: 0,
        message: e.to_string(),
    }
}

struct Layout {
    loads: usize,
    gens: usize,
    angles: usize,
    flows: usize,
    contingencies: Vec<u32>,
}

fn parse_header(fields: &csv::StringRecord, line: u64) -> Result<Layout, ScenarioError> {
    let bad = |message: String| ScenarioError::MalformedFile { line, message };
    let names: Vec<&str> = fields.iter().collect();
    if names.first() != Some(&"id") {
        return Err(bad("header must start with `id`".into()));
    }
    let mut pos = 1;
    let mut group = |prefix: &str| {
        let mut k = 0;
        while pos < names.len() && names[pos] == format!("{prefix}{}", k + 1) {
            k += 1;
            pos += 1;
        }
        k
    };
    let loads = group("load");
    let gens = group("gen");
    let angles = group("angle");
    let flows = group("flow");
    if names.get(pos) != Some(&"split") {
        return Err(bad(format!("expected `split` at column {}", pos + 1)));
    }
    let contingencies = names[pos + 1..]
        .iter()
        .map(|n| {
            n.strip_prefix("label_c")
                .and_then(|id| id.parse::<u32>().ok())
                .ok_or_else(|| bad(format!("bad label column `{n}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if contingencies.is_empty() {
        return Err(bad("no label columns".into()));
    }
    if loads == 0 || gens == 0 || angles == 0 || flows == 0 {
        return Err(bad("missing feature columns".into()));
    }
    Ok(Layout {
        loads,
        gens,
        angles,
        flows,
        contingencies,
    })
}

pub fn load_database(path: &Path) -> Result<LabeledDatabase, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_database(&text)
}

pub fn parse_database(text: &str) -> Result<LabeledDatabase, ScenarioError> {
    let first = text.lines().next().unwrap_or("");
    let seed = first
        .strip_prefix("# seed=")
        .and_then(|s| s.trim().parse::<u64>().ok())
        .ok_or_else(|| ScenarioError::MalformedFile {
            line: 1,
            message: "expected `# seed=<u64>` on the first line".into(),
        })?;

    // csv positions are relative to the body; the seed line shifts them by one
    let body = text.split_once('\n').map(|(_, rest)| rest).unwrap_or("");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(body.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_read_err)?,
        None => {
            return Err(ScenarioError::MalformedFile {
                line: 2,
                message: "missing header".into(),
            })
        }
    };
    let header_line = header.position().map(|p| p.line() + 1).unwrap_or(2);
    let layout = parse_header(&header, header_line)?;

    let mut conditions = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_read_err)?;
        let line = rec.position().map(|p| p.line() + 1).unwrap_or(0);
        let bad = |message: String| ScenarioError::MalformedFile { line, message };
        let float = |k: usize| -> Result<f64, ScenarioError> {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("column {}: `{}` is not a number", k + 1, &rec[k])))
        };
        let id = rec[0]
            .trim()
            .parse::<u64>()
            .map_err(|_| bad(format!("bad id `{}`", &rec[0])))?;
        let mut k = 1;
        let mut take = |n: usize| -> Result<Vec<f64>, ScenarioError> {
            let v = (k..k + n).map(float).collect::<Result<Vec<_>, _>>()?;
            k += n;
            Ok(v)
        };
        let loads_mw = take(layout.loads)?;
        let dispatch_mw = take(layout.gens)?;
        let angles_rad = take(layout.angles)?;
        let flows_mw = take(layout.flows)?;
        let split_col = 1 + layout.loads + layout.gens + layout.angles + layout.flows;
        let split =
            Split::parse(rec[split_col].trim()).ok_or_else(|| bad(format!("bad split `{}`", &rec[split_col])))?;
        let labels = (split_col + 1..rec.len())
            .map(|j| match rec[j].trim() {
                "0" => Ok(SecurityLabel::Insecure),
                "1" => Ok(SecurityLabel::Secure),
                other => Err(bad(format!("label must be 0 or 1, got `{other}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        conditions.push(OperatingCondition {
            id,
            loads_mw,
            dispatch_mw,
            angles_rad,
            flows_mw,
            split,
            labels,
        });
    }
    Ok(LabeledDatabase {
        seed,
        contingencies: layout.contingencies,
        conditions,
    })
}

fn csv_read_err(e: csv::Error) -> ScenarioError {
    let line = e.position().map(|p| p.line() + 1).unwrap_or(0);
    ScenarioError::MalformedFile {
        line,
        message: e.to_string(),
    }
}
