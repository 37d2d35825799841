use std::path::PathBuf;

use anyhow::Result;
use clap::ValueEnum;
use mupir_core::{bounds, capacity, query_cardinality, source_count};
use serde::Serialize;

use super::emit;
use crate::grid::parse_range;
use crate::Status;

#[derive(clap::Args)]
pub struct Args {
    /// Message counts, e.g. `1-4` or `2,3`.
    #[arg(long = "K", default_value = "1-4")]
    messages: String,
    /// Database counts.
    #[arg(long = "N", default_value = "1-2")]
    databases: String,
    /// User counts.
    #[arg(long = "U", default_value = "1-3")]
    users: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Serialize)]
struct Row {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "U")]
    u: usize,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "L")]
    l: String,
    #[serde(rename = "Q")]
    q: String,
    #[serde(rename = "D")]
    d: String,
    #[serde(rename = "C")]
    c: String,
    #[serde(rename = "C_decimal")]
    c_decimal: String,
}

const HEADER: [&str; 9] = ["K", "N", "U", "S", "L", "|Q|", "D", "C", "C (decimal)"];

pub fn execute(args: Args) -> Result<Status> {
    let ks = parse_range(&args.messages)?;
    let ns = parse_range(&args.databases)?;
    let us = parse_range(&args.users)?;
    let mut rows = Vec::new();
    for &k in &ks {
        for &n in &ns {
            for &u in &us {
                let s = source_count(n, u)?;
                let q = query_cardinality(s, k);
                let c = capacity(s, k);
                rows.push(Row {
                    k,
                    n,
                    u,
                    s,
                    l: bounds::block_length_big(s, k).to_string(),
                    d: (&q * s).to_string(),
                    q: q.to_string(),
                    c_decimal: format!("{:.6}", c.to_f64()),
                    c: c.to_string(),
                });
            }
        }
    }
    let text = match args.format {
        Format::Json => mupir_core::json::to_canonical_pretty(&rows)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(HEADER)?;
            for r in &rows {
                w.write_record(fields(r))?;
            }
            String::from_utf8(w.into_inner()?)?
        }
        Format::Table => table(&rows),
    };
    emit(args.out.as_deref(), &text)?;
    Ok(Status::Passed)
}

fn fields(r: &Row) -> [String; 9] {
    [
        r.k.to_string(),
        r.n.to_string(),
        r.u.to_string(),
        r.s.to_string(),
        r.l.clone(),
        r.q.clone(),
        r.d.clone(),
        r.c.clone(),
        r.c_decimal.clone(),
    ]
}

fn table(rows: &[Row]) -> String {
    let cells: Vec<[String; 9]> = rows.iter().map(fields).collect();
    let mut widths = HEADER.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cols: Vec<&str>| {
        let padded: Vec<String> = cols.iter().zip(widths).map(|(c, w)| format!("{c:>w$}")).collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(HEADER.to_vec());
    for row in &cells {
        line(row.iter().map(String::as_str).collect());
    }
    out
}
