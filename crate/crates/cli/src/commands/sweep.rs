use std::path::PathBuf;

use anyhow::Result;
use mupir_core::adversary;

use super::emit;
use crate::grid::parse_range;
use crate::Status;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long = "K", default_value_t = 2)]
    messages: usize,
    /// Source counts to sweep, e.g. `2-6`.
    #[arg(long = "S", default_value = "2-6")]
    sources: String,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn execute(args: Args) -> Result<Status> {
    let sizes: Vec<(usize, usize)> = parse_range(&args.sources)?.into_iter().map(|s| (args.messages, s)).collect();
    let report = adversary::complexity_sweep(&sizes, args.trials, args.seed)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "comparisons", "fitted_slope"])?;
    for p in &report.points {
        w.write_record([p.n.to_string(), p.mean_comparisons.to_string(), String::new()])?;
    }
    let slope = report.fitted_slope.map(|s| format!("{s:.6}")).unwrap_or_default();
    w.write_record(["", "", slope.as_str()])?;
    emit(args.out.as_deref(), &String::from_utf8(w.into_inner()?)?)?;
    Ok(Status::Passed)
}
