//! Command implementations behind the CLI. Each writes a snapshot of its
//! config next to its outputs and is deterministic given (config, seeds).
//!
//! Output layout under `out`:
//! - `config.json`: the validated config.
//! - `train-teacher`: `seed_<s>/teacher/` (bundle), `seed_<s>/metrics.csv`,
//!   `seed_<s>/fits.csv`, `summary.json`.
//! - `train-student`: `seed_<s>/student/`, `seed_<s>/metrics.csv`.
//! - `evaluate`: `eval_summary.json`, `episodes.csv`.
//! - `ablate`: `<variant>/seed_<s>/...`, `ablation.csv`.
//! - `theory`: `theory_report.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::engine::{load_student, save_student, train_s2cd, AblationFlags, StudentPolicy};
use crate::error::{Error, Result};
use crate::eval::{EpisodeRecord, EvalProtocol, EvalSummary};
use crate::mdp::HighwayEnv;
use crate::ppo::{train_ppo, write_metrics_csv, PhaseMetrics};
use crate::sim::Fidelity;
use crate::teacher::{load_bundle, save_bundle, teacher_advise, train_teacher, FitReport, TeacherBundle};
use crate::theory::{run_sweep, TheoryReport};

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

fn prepare(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.json"), cfg.to_json()?)?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn env(cfg: &RunConfig, fidelity: Fidelity, seed: u64) -> Result<HighwayEnv> {
    HighwayEnv::new(cfg.sim(fidelity), cfg.reward, cfg.train_densities.clone(), seed)
}

fn protocol(cfg: &RunConfig, fidelity: Fidelity) -> EvalProtocol {
    EvalProtocol {
        sim: cfg.sim(fidelity),
        reward: cfg.reward,
        densities: cfg.eval_densities.clone(),
        seeds: cfg.eval_seeds.clone(),
        episodes_per_seed: cfg.eval_episodes,
    }
}

/// Greedy teacher evaluated in the Simple world.
pub fn evaluate_teacher(cfg: &RunConfig, bundle: &TeacherBundle) -> Result<(EvalSummary, Vec<EpisodeRecord>)> {
    protocol(cfg, Fidelity::Simple).run(|o| Ok(teacher_advise(bundle, o)?.action))
}

/// Student (gated or not, as stored) evaluated in the Complex world.
pub fn evaluate_student(cfg: &RunConfig, student: &StudentPolicy) -> Result<(EvalSummary, Vec<EpisodeRecord>)> {
    protocol(cfg, Fidelity::Complex).run(|o| student.act(o))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherRun {
    pub seed: u64,
    pub training_steps: usize,
    /// Fraction of successful evaluation episodes.
    pub eval_success: f64,
}

pub fn cmd_train_teacher(cfg: &RunConfig, out: &Path) -> Result<Vec<TeacherRun>> {
    prepare(cfg, out)?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let dir = seed_dir(out, seed);
        fs::create_dir_all(&dir)?;
        let mut tr = train_teacher(env(cfg, Fidelity::Simple, seed)?, &cfg.teacher.ppo, cfg.teacher.quality, seed)?;
        let (summary, _) = evaluate_teacher(cfg, &tr.bundle)?;
        tr.bundle.manifest.eval_success = Some(summary.overall.success_rate / 100.0);
        save_bundle(&tr.bundle, &dir.join("teacher"))?;
        write_metrics_csv(&dir.join("metrics.csv"), &tr.metrics)?;
        write_csv::<FitReport>(&dir.join("fits.csv"), &tr.fits)?;
        runs.push(TeacherRun {
            seed,
            training_steps: tr.bundle.manifest.training_steps,
            eval_success: summary.overall.success_rate / 100.0,
        });
    }
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&runs)?)?;
    Ok(runs)
}

/// Which learner `train-student` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudentMode {
    S2cd(AblationFlags),
    /// Plain PPO in the Complex world, no teacher.
    Baseline,
}

fn teacher_for(cfg: &RunConfig) -> Result<TeacherBundle> {
    let path = cfg
        .teacher
        .bundle
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("teacher.bundle (or --teacher) is required".into()))?;
    load_bundle(path)
}

fn train_one(cfg: &RunConfig, mode: StudentMode, teacher: Option<&TeacherBundle>, seed: u64) -> Result<(StudentPolicy, Vec<PhaseMetrics>)> {
    match (mode, teacher) {
        (StudentMode::Baseline, _) => {
            let (agent, rows) = train_ppo(env(cfg, Fidelity::Complex, seed)?, cfg.baseline.clone(), seed)?;
            Ok((StudentPolicy::baseline(&agent), rows))
        }
        (StudentMode::S2cd(flags), Some(b)) => {
            let mut hp = cfg.student.clone();
            hp.flags = flags;
            train_s2cd(env(cfg, Fidelity::Complex, seed)?, b.clone(), hp, seed)
        }
        (StudentMode::S2cd(_), None) => Err(Error::InvalidConfig("S2CD training needs a teacher bundle".into())),
    }
}

/// Trains one student per seed. The teacher is loaded and checked before any
/// training starts.
pub fn cmd_train_student(cfg: &RunConfig, mode: StudentMode, out: &Path) -> Result<Vec<Vec<PhaseMetrics>>> {
    cfg.validate()?;
    let teacher = match mode {
        StudentMode::Baseline => None,
        StudentMode::S2cd(_) => Some(teacher_for(cfg)?),
    };
    prepare(cfg, out)?;
    let mut all = Vec::new();
    for &seed in &cfg.seeds {
        let dir = seed_dir(out, seed);
        fs::create_dir_all(&dir)?;
        let (student, rows) = train_one(cfg, mode, teacher.as_ref(), seed)?;
        save_student(&student, &dir.join("student"))?;
        write_metrics_csv(&dir.join("metrics.csv"), &rows)?;
        all.push(rows);
    }
    Ok(all)
}

/// Evaluates a teacher bundle (Simple world) or a student checkpoint
/// (Complex world). `ungated` drops the teacher's override from an S2CD
/// student.
pub fn cmd_evaluate(cfg: &RunConfig, checkpoint: &Path, ungated: bool, out: &Path) -> Result<EvalSummary> {
    cfg.validate()?;
    let (summary, records) = if checkpoint.join("manifest.json").exists() {
        evaluate_teacher(cfg, &load_bundle(checkpoint)?)?
    } else {
        let student = load_student(checkpoint)?;
        let student = if ungated { student.ungated() } else { student };
        evaluate_student(cfg, &student)?
    };
    prepare(cfg, out)?;
    fs::write(out.join("eval_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    write_csv(&out.join("episodes.csv"), &records)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub seed: u64,
    pub success_rate: f64,
    pub episodic_return: f64,
    pub episodic_cost: f64,
    pub episodic_speed: f64,
    pub train_collisions: usize,
    pub final_tau: f64,
}

/// The full method plus each single-component removal.
pub fn default_variants() -> Vec<AblationFlags> {
    ["full", "no-dual-source", "no-adaptive-clip", "no-kl", "no-decay"]
        .iter()
        .map(|s| s.parse().expect("known flags"))
        .collect()
}

/// Parses a comma-separated variant list; `+` combines removals within one
/// variant (`no-kl+no-decay`).
pub fn parse_variants(spec: &str) -> Result<Vec<AblationFlags>> {
    let v: Vec<AblationFlags> = spec
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::InvalidInput("empty ablation list".into()));
    }
    Ok(v)
}

pub fn cmd_ablate(cfg: &RunConfig, variants: &[AblationFlags], out: &Path) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    let teacher = teacher_for(cfg)?;
    prepare(cfg, out)?;
    let mut rows = Vec::new();
    for flags in variants {
        let label = flags.label();
        for &seed in &cfg.seeds {
            let dir = seed_dir(&out.join(&label), seed);
            fs::create_dir_all(&dir)?;
            let (student, metrics) = train_one(cfg, StudentMode::S2cd(*flags), Some(&teacher), seed)?;
            save_student(&student, &dir.join("student"))?;
            write_metrics_csv(&dir.join("metrics.csv"), &metrics)?;
            let (summary, _) = evaluate_student(cfg, &student)?;
            rows.push(AblationRow {
                variant: label.clone(),
                seed,
                success_rate: summary.overall.success_rate,
                episodic_return: summary.overall.episodic_return,
                episodic_cost: summary.overall.episodic_cost,
                episodic_speed: summary.overall.episodic_speed,
                train_collisions: metrics.iter().map(|m| m.collisions).sum(),
                final_tau: metrics.last().map_or(1.0, |m| m.tau),
            });
        }
    }
    write_csv(&out.join("ablation.csv"), &rows)?;
    Ok(rows)
}

pub fn cmd_theory(cfg: &RunConfig, out: &Path) -> Result<TheoryReport> {
    prepare(cfg, out)?;
    let report = run_sweep(&cfg.theory)?;
    fs::write(out.join("theory_report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_lists() {
        assert_eq!(default_variants().len(), 5);
        assert_eq!(default_variants()[0], AblationFlags::all_on());
        let v = parse_variants("full, no-kl+no-decay").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].label(), "no-kl+no-decay");
        assert!(parse_variants(" , ").is_err());
        assert!(parse_variants("no-teacher").is_err());
    }

    #[test]
    fn student_without_teacher_fails_before_writing() {
        let dir = std::env::temp_dir().join(format!("s2cd-cmd-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let err = cmd_train_student(&RunConfig::default(), StudentMode::S2cd(AblationFlags::all_on()), &dir);
        assert!(err.is_err());
        assert!(!dir.exists());
    }
}
