use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::ValueEnum;
use mupir_core::privacylab::{self, Mode as LabMode, MutualInformation, QueryDistribution};
use mupir_core::{source_count, Error, Rational};
use serde::Serialize;

use super::{emit, yes_no};
use crate::Status;

/// Largest acceptable total variation between sampled marginals.
const SAMPLED_TV_LIMIT: f64 = 0.05;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long = "K")]
    messages: usize,
    /// Source count; alternatively give `--N` and `--U`.
    #[arg(long = "S", conflicts_with_all = ["databases", "users"])]
    sources: Option<usize>,
    #[arg(long = "N", requires = "users")]
    databases: Option<usize>,
    #[arg(long = "U", requires = "databases")]
    users: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
    mode: Mode,
    /// Draws per (source, theta) in sampled mode.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Required in sampled mode.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-source results (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Serialize)]
struct SourceResult {
    source: usize,
    mutual_information_bits: f64,
    identical: bool,
    /// Largest marginal total variation against theta = 1.
    max_marginal_tv: String,
    passed: bool,
}

pub fn execute(args: Args) -> Result<Status> {
    let k = args.messages;
    let s = match (args.sources, args.databases, args.users) {
        (Some(s), _, _) => s,
        (None, Some(n), Some(u)) => source_count(n, u)?,
        _ => bail!("give --S, or both --N and --U"),
    };
    if k == 0 || s == 0 {
        bail!("--K and the source count must be at least 1");
    }
    let mode = match args.mode {
        Mode::Exhaustive => LabMode::Exhaustive,
        Mode::Sampled => match args.seed {
            Some(seed) => LabMode::Sampled { count: args.samples, seed },
            None => bail!("--seed is required in sampled mode"),
        },
    };

    let mut results = Vec::new();
    for source in 0..s {
        let dists = (0..k)
            .map(|theta| {
                let m = match mode {
                    LabMode::Sampled { count, seed } => {
                        LabMode::Sampled { count, seed: seed.wrapping_add((source * k + theta) as u64) }
                    }
                    LabMode::Exhaustive => LabMode::Exhaustive,
                };
                privacylab::enumerate_distribution(k, s, source, theta, &m)
            })
            .collect::<Result<Vec<QueryDistribution>, Error>>()
            .map_err(|e| match e {
                Error::EnumerationBound { outcomes, bound } => anyhow::anyhow!(
                    "exhaustive enumeration needs {outcomes} outcomes, above the limit of {bound}; use --mode sampled"
                ),
                other => other.into(),
            })?;
        let identical = dists.windows(2).all(|w| w[0].support() == w[1].support());
        let tv = dists[1..]
            .iter()
            .map(|d| privacylab::marginal_total_variation(&dists[0], d))
            .max_by(|a, b| a.to_f64().total_cmp(&b.to_f64()))
            .unwrap_or_else(Rational::zero);
        let (mi, passed) = match mode {
            LabMode::Exhaustive => {
                let mi = privacylab::mutual_information_with_theta(&dists)?;
                (mi, matches!(mi, MutualInformation::Zero))
            }
            // Finite samples never coincide exactly; judge by the marginals.
            LabMode::Sampled { .. } => (MutualInformation::Zero, tv.to_f64() < SAMPLED_TV_LIMIT),
        };
        let mi_text = match (args.mode, mi) {
            (Mode::Sampled, _) => "n/a".to_owned(),
            (_, MutualInformation::Zero) => "0 (exact)".to_owned(),
            (_, MutualInformation::Positive(b)) => format!("{b:.6} bits"),
        };
        println!(
            "source {}: MI={} identical={} max_marginal_tv={:.6} {}",
            source + 1,
            mi_text,
            yes_no(identical),
            tv.to_f64(),
            if passed { "PASS" } else { "FAIL" }
        );
        results.push(SourceResult {
            source,
            mutual_information_bits: mi.bits(),
            identical,
            max_marginal_tv: tv.to_string(),
            passed,
        });
    }
    if let Some(path) = &args.out {
        emit(Some(path), &(mupir_core::json::to_canonical_pretty(&results)? + "\n"))?;
    }
    Ok(if results.iter().all(|r| r.passed) { Status::Passed } else { Status::Failed })
}
