//! `key=value` config files and flag resolution. Precedence: command-line
//! flag, then config file, then built-in default.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use xlda_core::harness::TrainerKind;
use xlda_core::{Balance, CompositionPolicy, DirectionMode, TrainerSpec};

use crate::cli::{BalanceArg, Common, ModeArg, PolicyArgs, TrainerArg, TrainerArgs};

const KEYS: &[&str] = &[
    "seed",
    "jobs",
    "trainer",
    "trainer_cmd",
    "feature_dim",
    "ngram_orders",
    "epochs",
    "batch_size",
    "peak_lr",
    "warmup_fraction",
    "mode",
    "include_monolingual",
    "balance",
    "sample_size",
];

/// Bad flags, bad config: exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(Usage(msg.into()).into())
}

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key=value", n + 1));
            };
            let k = k.trim().replace('-', "_");
            if !KEYS.contains(&k.as_str()) {
                return usage(format!("config line {}: unknown key {k:?}", n + 1));
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Usage(format!("cannot read config {}: {e}", p.display())))?;
                Config::parse(&text)
            }
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> anyhow::Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => match v.parse() {
                Ok(x) => Ok(Some(x)),
                Err(_) => usage(format!("config {key}: cannot parse {v:?}")),
            },
        }
    }

    fn get_enum<T: ValueEnum>(&self, key: &str) -> anyhow::Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => match T::from_str(&v.replace('_', "-"), true) {
                Ok(x) => Ok(Some(x)),
                Err(_) => usage(format!("config {key}: unknown value {v:?}")),
            },
        }
    }
}

pub struct Resolved {
    pub config: Config,
    pub seed: u64,
    pub jobs: usize,
}

pub fn resolve_common(common: &Common) -> anyhow::Result<Resolved> {
    let config = Config::load(common.config.as_deref())?;
    let seed = match common.seed {
        Some(s) => s,
        None => config.get("seed")?.unwrap_or(0),
    };
    let jobs = match common.jobs {
        Some(j) => j,
        None => config.get("jobs")?.unwrap_or(1),
    };
    if jobs == 0 {
        return usage("--jobs must be at least 1");
    }
    Ok(Resolved { config, seed, jobs })
}

pub fn split_command(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

pub fn resolve_trainer(args: &TrainerArgs, config: &Config, seed: u64) -> anyhow::Result<TrainerSpec> {
    let d = TrainerSpec::default();
    let kind = match args.trainer.or(config.get_enum("trainer")?) {
        None | Some(TrainerArg::Builtin) => TrainerKind::BuiltinLinear,
        Some(TrainerArg::External) => TrainerKind::External,
    };
    let command = args
        .trainer_cmd
        .clone()
        .or(config.get::<String>("trainer_cmd")?)
        .map(|c| split_command(&c));
    if kind == TrainerKind::External && command.as_ref().map_or(true, Vec::is_empty) {
        return usage("--trainer external needs --trainer-cmd");
    }
    let orders = match args.ngram_orders.clone().or(config.get("ngram_orders")?) {
        None => d.ngram_orders.clone(),
        Some(s) => parse_orders(&s)?,
    };
    let spec = TrainerSpec {
        kind,
        feature_dim: pick(args.feature_dim, config, "feature_dim", d.feature_dim)?,
        ngram_orders: orders,
        epochs: pick(args.epochs, config, "epochs", d.epochs)?,
        batch_size: pick(args.batch_size, config, "batch_size", d.batch_size)?,
        peak_lr: pick(args.peak_lr, config, "peak_lr", d.peak_lr)?,
        warmup_fraction: pick(args.warmup_fraction, config, "warmup_fraction", d.warmup_fraction)?,
        seed,
        external_command: command.filter(|_| kind == TrainerKind::External),
    };
    if let Err(e) = spec.check() {
        return usage(e.to_string());
    }
    if !spec.feature_dim.is_power_of_two() {
        return usage(format!("feature_dim {} is not a power of two", spec.feature_dim));
    }
    Ok(spec)
}

fn pick<T: FromStr>(flag: Option<T>, config: &Config, key: &str, default: T) -> anyhow::Result<T> {
    Ok(match flag {
        Some(v) => v,
        None => config.get(key)?.unwrap_or(default),
    })
}

fn parse_orders(s: &str) -> anyhow::Result<Vec<usize>> {
    let orders: Result<Vec<usize>, _> = s.split(',').map(|p| p.trim().parse()).collect();
    match orders {
        Ok(o) if !o.is_empty() && !o.contains(&0) => Ok(o),
        _ => usage(format!("bad n-gram orders {s:?}")),
    }
}

/// The policy seed is the global seed; grid runs re-key it per cell.
pub fn resolve_policy(args: &PolicyArgs, config: &Config, seed: u64) -> anyhow::Result<CompositionPolicy> {
    let mode = match args.mode.or(config.get_enum("mode")?) {
        None | Some(ModeArg::Both) => DirectionMode::Both,
        Some(ModeArg::SingleRandom) => DirectionMode::SingleRandom,
    };
    let balance = match args.balance.or(config.get_enum("balance")?) {
        None | Some(BalanceArg::All) => Balance::All,
        Some(BalanceArg::UniformSample) => Balance::UniformSample,
    };
    let include_monolingual =
        args.include_monolingual || config.get("include_monolingual")?.unwrap_or(false);
    let policy = CompositionPolicy {
        direction_mode: mode,
        include_monolingual,
        per_augmentor_balance: balance,
        sample_size: args.sample_size.or(config.get("sample_size")?),
        seed: Some(seed),
    };
    if let Err(e) = policy.check() {
        return usage(e.to_string());
    }
    Ok(policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = Config::parse("# trainer\nepochs = 5\npeak-lr=2.0\nmode=single_random\n").unwrap();
        assert_eq!(c.get::<usize>("epochs").unwrap(), Some(5));
        assert_eq!(c.get::<f64>("peak_lr").unwrap(), Some(2.0));
        assert_eq!(c.get_enum::<ModeArg>("mode").unwrap(), Some(ModeArg::SingleRandom));
        assert!(Config::parse("colour=red").is_err());
        assert!(Config::parse("epochs").is_err());
        assert!(c.get::<usize>("peak_lr").is_err());
    }

    #[test]
    fn flags_win() {
        let c = Config::parse("epochs=5\nbatch_size=8").unwrap();
        let args = TrainerArgs {
            epochs: Some(2),
            ..TrainerArgs::default()
        };
        let spec = resolve_trainer(&args, &c, 1).unwrap();
        assert_eq!((spec.epochs, spec.batch_size), (2, 8));
    }
}
