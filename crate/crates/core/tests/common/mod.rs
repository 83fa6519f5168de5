#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use s2cd::commands::{cmd_ablate, cmd_evaluate, cmd_theory, cmd_train_student, cmd_train_teacher, seed_dir, StudentMode};
use s2cd::config::RunConfig;
use s2cd::engine::{
    adaptive_epsilon, clip_interval, decay_tau, s2cd_loss, switch_action, AblationFlags, Choice, S2cdHyper,
    S2cdSample, SwitchConfig, AUG_DIM,
};
use s2cd::nn::{log_softmax, softmax, DenseNet, NetSpec};
use s2cd::ppo::{ppo_loss, HyperParams, Origin, PpoSample};

pub fn nets(seed: u64, input: usize) -> (DenseNet, DenseNet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        DenseNet::new(NetSpec::policy(input).with_hidden(vec![16, 16]), &mut rng).unwrap(),
        DenseNet::new(NetSpec::value(input).with_hidden(vec![16, 16]), &mut rng).unwrap(),
    )
}

fn rel_err(fd: f64, an: f64) -> f64 {
    (fd - an).abs() / fd.abs().max(an.abs()).max(1e-4)
}

/// Fourth-order central difference of `f` along parameter `i`.
fn central<F: Fn(&DenseNet) -> f64>(net: &DenseNet, i: usize, f: F) -> f64 {
    let h = 1e-4;
    let at = |d: f64| {
        let mut n = net.clone();
        n.params_mut()[i] += d;
        f(&n)
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

/// Worst relative error between analytic and finite-difference gradients
/// over every parameter of both networks.
fn fd_check<F>(policy: &DenseNet, value: &DenseNet, grads: (&[f64], &[f64]), loss: F) -> (f64, usize)
where
    F: Fn(&DenseNet, &DenseNet) -> f64,
{
    let mut worst: f64 = 0.0;
    for i in 0..policy.param_count() {
        let fd = central(policy, i, |p| loss(p, value));
        worst = worst.max(rel_err(fd, grads.0[i]));
    }
    for i in 0..value.param_count() {
        let fd = central(value, i, |v| loss(policy, v));
        worst = worst.max(rel_err(fd, grads.1[i]));
    }
    (worst, policy.param_count() + value.param_count())
}

fn near_kink(r: f64, intervals: &[(f64, f64)]) -> bool {
    intervals.iter().any(|(lo, hi)| (r - lo).abs() < 1e-3 || (r - hi).abs() < 1e-3)
}

pub fn ppo_batch(policy: &DenseNet, n: usize, rng: &mut ChaCha8Rng, clip: f64) -> Vec<PpoSample> {
    let mut out = Vec::new();
    while out.len() < n {
        let obs: Vec<f64> = (0..policy.spec().input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let action = rng.gen_range(0..3);
        let r: f64 = rng.gen_range(0.6..1.4);
        if near_kink(r, &[(1.0 - clip, 1.0 + clip)]) {
            continue;
        }
        let lp = log_softmax(policy.forward(&obs).unwrap().1.raw());
        out.push(PpoSample {
            obs,
            action,
            logprob_old: lp[action] - r.ln(),
            advantage: rng.gen_range(-2.0..2.0),
            value_target: rng.gen_range(-1.0..1.0),
        });
    }
    out
}

pub fn s2cd_batch(policy: &DenseNet, n: usize, rng: &mut ChaCha8Rng, hp: &S2cdHyper, tau: f64) -> Vec<S2cdSample> {
    let mut out = Vec::new();
    while out.len() < n {
        let obs: Vec<f64> = (0..policy.spec().input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let action = rng.gen_range(0..3);
        let origin = if rng.gen_bool(0.5) { Origin::Teacher } else { Origin::Student };
        let executed = origin == Origin::Student || rng.gen_bool(0.5);
        let eps_prime = rng.gen_range(0.0..hp.psi);
        let r: f64 = rng.gen_range(0.6..1.4);
        let intervals = [
            clip_interval(origin, hp.ppo.clip_eps, 0.0),
            clip_interval(origin, hp.ppo.clip_eps, tau * eps_prime),
        ];
        if near_kink(r, &intervals) {
            continue;
        }
        let lp = log_softmax(policy.forward(&obs).unwrap().1.raw());
        let z: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let tp = softmax(&z);
        out.push(S2cdSample {
            obs,
            action,
            logprob_old: lp[action] - r.ln(),
            advantage: rng.gen_range(-2.0..2.0),
            value_target: executed.then(|| rng.gen_range(-1.0..1.0)),
            origin,
            eps_prime,
            teacher_probs: executed.then(|| [tp[0], tp[1], tp[2]]),
        });
    }
    out
}

pub struct GradientReport {
    /// (label, worst relative error, parameters checked)
    pub cases: Vec<(String, f64, usize)>,
}

impl GradientReport {
    pub fn worst(&self) -> f64 {
        self.cases.iter().map(|c| c.1).fold(0.0, f64::max)
    }

    pub fn min_params(&self) -> usize {
        self.cases.iter().map(|c| c.2).min().unwrap_or(0)
    }
}

/// Finite-difference check of the PPO loss and of the student loss under
/// all 16 flag combinations.
pub fn gradient_suite(seed: u64) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();

    let (policy, value) = nets(seed, 11);
    let hp = HyperParams::default();
    let batch = ppo_batch(&policy, 12, &mut rng, hp.clip_eps);
    let out = ppo_loss(&batch, &policy, &value, &hp).unwrap();
    let (w, n) = fd_check(&policy, &value, (&out.policy_grad, &out.value_grad), |p, v| {
        ppo_loss(&batch, p, v, &hp).unwrap().loss
    });
    cases.push(("ppo".to_string(), w, n));

    let (policy, value) = nets(seed + 1, AUG_DIM);
    for flags in AblationFlags::combinations() {
        let hp = S2cdHyper {
            flags,
            ..Default::default()
        };
        let tau = 0.6;
        let batch = s2cd_batch(&policy, 12, &mut rng, &hp, tau);
        let out = s2cd_loss(&batch, &policy, &value, &hp, tau).unwrap();
        let (w, n) = fd_check(&policy, &value, (&out.policy_grad, &out.value_grad), |p, v| {
            s2cd_loss(&batch, p, v, &hp, tau).unwrap().loss
        });
        cases.push((format!("s2cd[{}]", flags.label()), w, n));
    }
    GradientReport { cases }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest per-sample difference (loss and every gradient entry) between
/// the student loss and the PPO loss, at τ = 0 with all flags on and at
/// τ = 0.7 with all flags off.
pub fn reduction_gap(seed: u64, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (policy, value) = nets(seed, AUG_DIM);
    let mut worst: f64 = 0.0;
    for (flags, tau) in [(AblationFlags::all_on(), 0.0), (AblationFlags::all_off(), 0.7)] {
        let hp = S2cdHyper {
            flags,
            ..Default::default()
        };
        for p in ppo_batch(&policy, samples, &mut rng, hp.ppo.clip_eps) {
            let tp = softmax(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), 0.0]);
            let s = S2cdSample {
                obs: p.obs.clone(),
                action: p.action,
                logprob_old: p.logprob_old,
                advantage: p.advantage,
                value_target: Some(p.value_target),
                origin: if rng.gen_bool(0.5) { Origin::Teacher } else { Origin::Student },
                eps_prime: rng.gen_range(0.0..hp.psi),
                teacher_probs: Some([tp[0], tp[1], tp[2]]),
            };
            let a = ppo_loss(std::slice::from_ref(&p), &policy, &value, &hp.ppo).unwrap();
            let b = s2cd_loss(std::slice::from_ref(&s), &policy, &value, &hp, tau).unwrap();
            worst = worst
                .max((a.loss - b.loss).abs())
                .max(max_diff(&a.policy_grad, &b.policy_grad))
                .max(max_diff(&a.value_grad, &b.value_grad));
        }
    }
    worst
}

pub struct ClipAlgebra {
    pub samples: usize,
    pub eps_prime_out_of_range: usize,
    /// Largest |teacher interval − (student interval + 2τε′)| over both ends.
    pub max_shift_error: f64,
    pub switch_monotonicity_violations: usize,
}

pub fn clipping_algebra(seed: u64, samples: usize) -> ClipAlgebra {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ClipAlgebra {
        samples,
        eps_prime_out_of_range: 0,
        max_shift_error: 0.0,
        switch_monotonicity_violations: 0,
    };
    for _ in 0..samples {
        let psi = rng.gen_range(1e-3..0.2);
        let eps = rng.gen_range(psi..0.3);
        let tau: f64 = rng.gen_range(0.0..=1.0);
        let (ps, pt) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
        let e = adaptive_epsilon(ps, pt, psi);
        if !(0.0..=psi).contains(&e) {
            out.eps_prime_out_of_range += 1;
        }
        let (slo, shi) = clip_interval(Origin::Student, eps, tau * e);
        let (tlo, thi) = clip_interval(Origin::Teacher, eps, tau * e);
        let shift = 2.0 * tau * e;
        out.max_shift_error = out.max_shift_error.max((tlo - (slo + shift)).abs()).max((thi - (shi + shift)).abs());

        let cfg = SwitchConfig {
            tolerance_eps: rng.gen_range(0.01..1.0),
            q1: rng.gen_range(0.5..10.0),
            q2: rng.gen_range(1.0..20.0),
        };
        let gap = rng.gen_range(0.0..1.0);
        let n = rng.gen_range(0..200u64);
        let t0 = (1.0 - decay_tau(n, &cfg)) * cfg.tolerance_eps;
        let t1 = (1.0 - decay_tau(n + 1, &cfg)) * cfg.tolerance_eps;
        let teacher_later = switch_action(gap, 0.0, decay_tau(n + 1, &cfg), &cfg).0 == Choice::Teacher;
        let teacher_now = switch_action(gap, 0.0, decay_tau(n, &cfg), &cfg).0 == Choice::Teacher;
        if t1 < t0 || (teacher_later && !teacher_now) {
            out.switch_monotonicity_violations += 1;
        }
    }
    out
}

pub fn tiny_config(seed: u64) -> RunConfig {
    let small = |total: usize| HyperParams {
        total_steps: total,
        steps_per_phase: 400,
        update_epochs: 2,
        hidden: vec![16, 16],
        ..Default::default()
    };
    let mut cfg = RunConfig {
        seeds: vec![seed],
        eval_seeds: vec![900],
        eval_episodes: 2,
        ..Default::default()
    };
    cfg.teacher.ppo = small(800);
    cfg.student.ppo = small(800);
    cfg.baseline = small(800);
    cfg.theory.instances = 5;
    cfg
}

/// Relative path -> bytes for every file below `root`.
pub fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Runs every command on a tiny config into `root`.
pub fn run_all_commands(root: &Path, seed: u64) {
    let mut cfg = tiny_config(seed);
    let teacher_out = root.join("teacher");
    cmd_train_teacher(&cfg, &teacher_out).unwrap();
    cfg.teacher.bundle = Some(seed_dir(&teacher_out, seed).join("teacher"));
    let student_out = root.join("student");
    cmd_train_student(&cfg, StudentMode::S2cd(AblationFlags::all_on()), &student_out).unwrap();
    cmd_train_student(&cfg, StudentMode::Baseline, &root.join("baseline")).unwrap();
    let ckpt = seed_dir(&student_out, seed).join("student");
    cmd_evaluate(&cfg, &ckpt, false, &root.join("eval")).unwrap();
    let variants = ["full", "no-kl"].map(|v| v.parse().unwrap());
    cmd_ablate(&cfg, &variants, &root.join("ablate")).unwrap();
    cmd_theory(&cfg, &root.join("theory")).unwrap();
}

/// Runs every command twice and lists the files that differ. Both runs
/// write to the same absolute path, since config snapshots record paths.
pub fn determinism_diffs(seed: u64) -> (usize, Vec<PathBuf>) {
    let base = tempfile::tempdir().unwrap();
    let run = base.path().join("run");
    run_all_commands(&run, seed);
    let first = read_tree(&run);
    fs::remove_dir_all(&run).unwrap();
    run_all_commands(&run, seed);
    let second = read_tree(&run);
    let mut diffs: Vec<PathBuf> = first
        .iter()
        .filter(|(k, v)| second.get(*k) != Some(*v))
        .map(|(k, _)| k.clone())
        .collect();
    diffs.extend(second.keys().filter(|k| !first.contains_key(*k)).cloned());
    (first.len(), diffs)
}
