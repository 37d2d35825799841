use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use mupir_core::simnet::{self, Channel, RoutingPolicy, RoutingTable};
use mupir_core::{bounds, capacity, MessageSet, SystemConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{emit, read, yes_no};
use crate::config::ExperimentConfig;
use crate::Status;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long = "K")]
    messages: Option<usize>,
    #[arg(long = "N")]
    databases: Option<usize>,
    #[arg(long = "U")]
    users: Option<usize>,
    /// Desired message, counted from 1.
    #[arg(long)]
    theta: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    routing: Option<Routing>,
    /// JSON list of channels, one per source; used with `--routing file`.
    #[arg(long)]
    routing_file: Option<PathBuf>,
    /// Message contents as hex, one line per message. Drawn from the seed
    /// when absent.
    #[arg(long)]
    messages_file: Option<PathBuf>,
    /// Transcript destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the requester's private plan here.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Routing {
    Uniform,
    File,
}

impl Routing {
    fn parse(s: &str) -> Result<Self> {
        Routing::from_str(s, true).map_err(|_| anyhow::anyhow!("routing must be `uniform` or `file`, got {s:?}"))
    }
}

pub fn execute(args: Args) -> Result<Status> {
    let flags = ExperimentConfig {
        messages: args.messages,
        databases: args.databases,
        users: args.users,
        theta: args.theta,
        seed: args.seed,
        routing: args.routing.map(|r| r.to_possible_value().expect("no skipped variants").get_name().to_owned()),
        routing_file: args.routing_file,
        messages_file: args.messages_file,
        out: args.out,
        plan_out: args.plan_out,
    };
    let cfg = match &args.config {
        Some(path) => flags.or(ExperimentConfig::load(path)?),
        None => flags,
    };

    let system = cfg.system()?;
    let theta = cfg.theta_index(&system)?;
    let seed = cfg.seed()?;
    let l = bounds::block_length(system.sources(), system.messages())?;
    let messages = match &cfg.messages_file {
        Some(path) => load_messages(path, &system, l)?,
        // Offset so message contents are not correlated with the plan's stream.
        None => MessageSet::random(system.messages(), l, &mut ChaCha8Rng::seed_from_u64(seed ^ 0x6d65_7373_6167_6573)),
    };
    let routing = cfg.routing.as_deref().map(Routing::parse).transpose()?.unwrap_or(Routing::Uniform);
    let policy = match (routing, &cfg.routing_file) {
        (Routing::Uniform, None) => RoutingPolicy::Uniform,
        (Routing::Uniform, Some(_)) => bail!("--routing-file needs --routing file"),
        (Routing::File, None) => bail!("--routing file needs --routing-file"),
        (Routing::File, Some(path)) => {
            let channels: Vec<Channel> =
                serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            RoutingPolicy::Fixed(RoutingTable::new(&system, channels)?)
        }
    };

    let (plan, transcript) = simnet::run_retrieval_with_plan(&system, theta, &messages, seed, &policy)?;
    if let Some(path) = &cfg.out {
        emit(Some(path), &(mupir_core::json::to_canonical_pretty(&transcript)? + "\n"))?;
    }
    if let Some(path) = &cfg.plan_out {
        emit(Some(path), &(mupir_core::json::to_canonical_pretty(&plan)? + "\n"))?;
    }

    let cap = capacity(system.sources(), system.messages());
    let matched = *transcript.rate() == cap;
    let correct = Some(transcript.recovered()) == messages.message(theta);
    println!(
        "L={} D={} rate={} capacity={} match={} correct={}",
        transcript.block_length(),
        transcript.downloaded_bits(),
        transcript.rate(),
        cap,
        yes_no(matched),
        yes_no(correct)
    );
    Ok(if matched && correct { Status::Passed } else { Status::Failed })
}

fn load_messages(path: &Path, system: &SystemConfig, l: usize) -> Result<MessageSet> {
    let text = read(path)?;
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|s| !s.is_empty()).collect();
    if lines.len() != system.messages() {
        bail!("{} holds {} messages, expected {}", path.display(), lines.len(), system.messages());
    }
    MessageSet::from_hex(&lines, l).with_context(|| format!("parsing {}", path.display()))
}
