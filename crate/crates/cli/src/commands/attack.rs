use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use mupir_core::adversary::{self, AttackReport, SingletonCatalog, Verdict};
use mupir_core::simnet::{self, Transcript, UserId};
use serde::Serialize;

use super::{emit, read};
use crate::Status;

#[derive(clap::Args)]
pub struct Args {
    /// Transcript written by `mupir run --out`.
    #[arg(long)]
    transcript: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Cross)]
    mode: Mode,
    /// Attacked database, counted from 1.
    #[arg(long)]
    database: usize,
    /// In single mode, attack only this user's set (0 is the requester).
    #[arg(long)]
    user: Option<u32>,
    /// Report destination (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Cross,
}

#[derive(Serialize)]
struct Output {
    mode: Mode,
    database: usize,
    theta: usize,
    results: Vec<Entry>,
}

#[derive(Serialize)]
struct Entry {
    user: Option<UserId>,
    report: AttackReport,
}

pub fn execute(args: Args) -> Result<Status> {
    let transcript: Transcript = serde_json::from_str(&read(&args.transcript)?)
        .with_context(|| format!("parsing {}", args.transcript.display()))?;
    let config = transcript.config();
    if args.database == 0 || args.database > config.databases() {
        bail!("--database must be in 1..={}", config.databases());
    }
    let db = args.database - 1;
    let catalog = SingletonCatalog::for_config(config)?;
    let sets = simnet::observed_sets(&transcript, db);

    let results = match args.mode {
        Mode::Cross => {
            if args.user.is_some() {
                bail!("--user only applies to --mode single");
            }
            vec![Entry { user: None, report: adversary::infer_cross_user(&sets, &catalog)? }]
        }
        Mode::Single => {
            let chosen: Vec<_> = match args.user {
                Some(u) => {
                    let found: Vec<_> = sets.iter().filter(|(id, _)| id.0 == u).collect();
                    if found.is_empty() {
                        bail!("user {u} sent nothing to database {}", args.database);
                    }
                    found
                }
                None => sets.iter().collect(),
            };
            chosen
                .into_iter()
                .map(|(id, set)| Ok(Entry { user: Some(*id), report: adversary::infer_single_user(set, &catalog)? }))
                .collect::<Result<_>>()?
        }
    };

    let theta = transcript.theta();
    for e in &results {
        let who = match e.user {
            Some(u) => format!("user {}", u.0),
            None => "all users".to_owned(),
        };
        println!(
            "database {} {}: beta={:?} comparisons={} verdict={} (true theta={})",
            args.database,
            who,
            e.report.beta,
            e.report.comparisons,
            describe(&e.report),
            theta + 1
        );
    }
    if let Some(path) = &args.out {
        let output = Output { mode: args.mode, database: db, theta, results };
        emit(Some(path), &(mupir_core::json::to_canonical_pretty(&output)? + "\n"))?;
    }
    Ok(Status::Passed)
}

fn describe(report: &AttackReport) -> String {
    match report.verdict {
        Verdict::Message(m) => format!("message {}", m + 1),
        Verdict::Tie => {
            let idx: Vec<String> = report.tied_indices.iter().map(|i| (i + 1).to_string()).collect();
            format!("tie among {}", idx.join(","))
        }
    }
}
