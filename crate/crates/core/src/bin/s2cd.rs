use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use s2cd::commands::{
    cmd_ablate, cmd_evaluate, cmd_theory, cmd_train_student, cmd_train_teacher, default_variants, parse_variants,
    StudentMode,
};
use s2cd::config::RunConfig;
use s2cd::engine::AblationFlags;

#[derive(Parser)]
#[command(name = "s2cd", version, about = "Teacher-student lane-change training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the config's seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a teacher bundle in the Simple world.
    TrainTeacher(Common),
    /// Train an S2CD student (or the plain PPO baseline) in the Complex world.
    TrainStudent {
        #[command(flatten)]
        common: Common,
        /// Teacher bundle directory (overrides `teacher.bundle`).
        #[arg(long)]
        teacher: Option<PathBuf>,
        /// Components to remove, e.g. `no-kl,no-decay`.
        #[arg(long)]
        ablate: Option<String>,
        /// Plain PPO without a teacher.
        #[arg(long, conflicts_with_all = ["teacher", "ablate"])]
        baseline: bool,
    },
    /// Evaluate a teacher bundle or a student checkpoint.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Drop the teacher's override from an S2CD student.
        #[arg(long)]
        ungated: bool,
    },
    /// Train and evaluate ablation variants.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        teacher: Option<PathBuf>,
        /// Comma-separated variants; `+` combines removals within one.
        #[arg(long)]
        ablate: Option<String>,
    },
    /// Tabular theorem sweeps.
    Theory(Common),
}

fn resolve(c: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seeds = vec![s];
        cfg.theory.seed = s;
    }
    let out = c
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .context("an output directory is required (--out or out_dir)")?;
    cfg.out_dir = Some(out.clone());
    cfg.validate()?;
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainTeacher(c) => {
            let (cfg, out) = resolve(&c)?;
            for r in cmd_train_teacher(&cfg, &out)? {
                println!("seed {} steps {} eval_success {:.3}", r.seed, r.training_steps, r.eval_success);
            }
        }
        Command::TrainStudent { common, teacher, ablate, baseline } => {
            let (mut cfg, out) = resolve(&common)?;
            if teacher.is_some() {
                cfg.teacher.bundle = teacher;
            }
            let mode = if baseline {
                StudentMode::Baseline
            } else {
                let flags: AblationFlags = ablate.as_deref().unwrap_or("full").parse()?;
                StudentMode::S2cd(flags)
            };
            let runs = cmd_train_student(&cfg, mode, &out)?;
            for (seed, rows) in cfg.seeds.iter().zip(&runs) {
                let collisions: usize = rows.iter().map(|r| r.collisions).sum();
                println!("seed {seed} phases {} collisions {collisions}", rows.len());
            }
        }
        Command::Evaluate { common, checkpoint, ungated } => {
            let (cfg, out) = resolve(&common)?;
            let s = cmd_evaluate(&cfg, &checkpoint, ungated, &out)?;
            println!(
                "success {:.2}% return {:.3} cost {:.3} speed {:.2}",
                s.overall.success_rate, s.overall.episodic_return, s.overall.episodic_cost, s.overall.episodic_speed
            );
        }
        Command::Ablate { common, teacher, ablate } => {
            let (mut cfg, out) = resolve(&common)?;
            if teacher.is_some() {
                cfg.teacher.bundle = teacher;
            }
            let variants = match ablate {
                Some(s) => parse_variants(&s)?,
                None => default_variants(),
            };
            for r in cmd_ablate(&cfg, &variants, &out)? {
                println!("{} seed {} success {:.2}%", r.variant, r.seed, r.success_rate);
            }
        }
        Command::Theory(c) => {
            let (cfg, out) = resolve(&c)?;
            let r = cmd_theory(&cfg, &out)?;
            println!(
                "instances {} min theorem-4 margin {:.3e} min theorem-3 slack {:.3e}",
                r.instances.len(),
                r.min_theorem4_margin,
                r.min_slack
            );
            if !(r.theorem4_holds && r.theorem3_holds) {
                bail!("theorem check violated");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
