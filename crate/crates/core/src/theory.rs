//! Exact tabular checks of the mixed-policy results: the return bound in
//! terms of E√KL and the "mixed is no worse than the teacher" property.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{argmax, kl_divergence, softmax};

const ROW_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    /// `p[s][a][s']`.
    pub p: Vec<Vec<Vec<f64>>>,
    /// `r[s][a]`.
    pub r: Vec<Vec<f64>>,
    pub gamma: f64,
    pub mu0: Vec<f64>,
}

/// `pi[s][a]`, rows are distributions.
pub type PolicyTable = Vec<Vec<f64>>;

fn check_row(row: &[f64], what: &str) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL || row.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidInput(format!("{what} is not a distribution (sum {sum})")));
    }
    Ok(())
}

impl TabularMdp {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::InvalidInput("empty MDP".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidInput(format!("gamma must be in [0, 1), got {}", self.gamma)));
        }
        if self.p.len() != self.n_states || self.r.len() != self.n_states || self.mu0.len() != self.n_states {
            return Err(Error::DimensionMismatch {
                expected: self.n_states,
                got: self.p.len(),
            });
        }
        for s in 0..self.n_states {
            if self.p[s].len() != self.n_actions || self.r[s].len() != self.n_actions {
                return Err(Error::DimensionMismatch {
                    expected: self.n_actions,
                    got: self.p[s].len(),
                });
            }
            for a in 0..self.n_actions {
                check_row(&self.p[s][a], &format!("P(.|{s},{a})"))?;
            }
        }
        check_row(&self.mu0, "initial distribution")
    }

    pub fn r_max(&self) -> f64 {
        self.r.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check_policy(&self, pi: &PolicyTable) -> Result<()> {
        if pi.len() != self.n_states {
            return Err(Error::DimensionMismatch {
                expected: self.n_states,
                got: pi.len(),
            });
        }
        for (s, row) in pi.iter().enumerate() {
            if row.len() != self.n_actions {
                return Err(Error::DimensionMismatch {
                    expected: self.n_actions,
                    got: row.len(),
                });
            }
            check_row(row, &format!("policy row {s}"))?;
        }
        Ok(())
    }

    /// Expected reward and transition matrix under `pi`.
    pub fn induced(&self, pi: &PolicyTable) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.n_states;
        let mut r = vec![0.0; n];
        let mut p = vec![vec![0.0; n]; n];
        for s in 0..n {
            for a in 0..self.n_actions {
                let w = pi[s][a];
                if w == 0.0 {
                    continue;
                }
                r[s] += w * self.r[s][a];
                for (t, q) in self.p[s][a].iter().enumerate() {
                    p[s][t] += w * q;
                }
            }
        }
        (r, p)
    }

    /// Q(s, a) = r(s, a) + γ Σ P(s'|s, a) V(s').
    pub fn q_from_v(&self, v: &[f64]) -> Vec<Vec<f64>> {
        (0..self.n_states)
            .map(|s| {
                (0..self.n_actions)
                    .map(|a| self.r[s][a] + self.gamma * self.p[s][a].iter().zip(v).map(|(p, x)| p * x).sum::<f64>())
                    .collect()
            })
            .collect()
    }

    /// J = Σ μ0(s) V(s).
    pub fn expected_return(&self, v: &[f64]) -> f64 {
        self.mu0.iter().zip(v).map(|(m, x)| m * x).sum()
    }
}

/// Random MDP with Dirichlet(1) transition rows, uniform rewards in
/// [−1, 1] and a Dirichlet(1) initial distribution.
pub fn random_mdp<R: Rng + ?Sized>(n_states: usize, n_actions: usize, gamma: f64, rng: &mut R) -> Result<TabularMdp> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::InvalidInput("MDP needs at least one state and action".into()));
    }
    let mut simplex = |n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        let d = Dirichlet::new_with_size(1.0, n).expect("valid Dirichlet");
        let mut row: Vec<f64> = d.sample(rng);
        // renormalize so rows pass the 1e-12 check exactly
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
        row
    };
    let p = (0..n_states).map(|_| (0..n_actions).map(|_| simplex(n_states)).collect()).collect();
    let mu0 = simplex(n_states);
    let r = (0..n_states).map(|_| (0..n_actions).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
    let mdp = TabularMdp {
        n_states,
        n_actions,
        p,
        r,
        gamma,
        mu0,
    };
    mdp.validate()?;
    Ok(mdp)
}

/// Solves V = r_π + γ P_π V by fixed-point sweeps until the residual is
/// below 1e-12.
pub fn exact_policy_value(mdp: &TabularMdp, pi: &PolicyTable) -> Result<Vec<f64>> {
    mdp.validate()?;
    mdp.check_policy(pi)?;
    let (r, p) = mdp.induced(pi);
    let n = mdp.n_states;
    let mut v = vec![0.0; n];
    for _ in 0..MAX_SWEEPS {
        let next: Vec<f64> = (0..n)
            .map(|s| r[s] + mdp.gamma * p[s].iter().zip(&v).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if residual < RESIDUAL_TOL {
            return Ok(v);
        }
    }
    Err(Error::NonFinite("policy evaluation did not converge".into()))
}

/// Optimal Q by value iteration.
pub fn optimal_q(mdp: &TabularMdp) -> Result<Vec<Vec<f64>>> {
    mdp.validate()?;
    let mut v = vec![0.0; mdp.n_states];
    for _ in 0..MAX_SWEEPS {
        let q = mdp.q_from_v(&v);
        let next: Vec<f64> = q.iter().map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect();
        let residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if residual < RESIDUAL_TOL {
            return Ok(mdp.q_from_v(&v));
        }
    }
    Err(Error::NonFinite("value iteration did not converge".into()))
}

/// Normalized discounted visitation d = (1 − γ) Σ γ^t μ0 P^t.
pub fn discounted_visitation(mdp: &TabularMdp, pi: &PolicyTable) -> Result<Vec<f64>> {
    mdp.check_policy(pi)?;
    let (_, p) = mdp.induced(pi);
    let n = mdp.n_states;
    let g = mdp.gamma;
    let mut d = mdp.mu0.iter().map(|m| (1.0 - g) * m).collect::<Vec<_>>();
    for _ in 0..MAX_SWEEPS {
        let mut next: Vec<f64> = mdp.mu0.iter().map(|m| (1.0 - g) * m).collect();
        for s in 0..n {
            for t in 0..n {
                next[t] += g * d[s] * p[s][t];
            }
        }
        let residual = next.iter().zip(&d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        d = next;
        if residual < RESIDUAL_TOL * 1e-2 {
            return Ok(d);
        }
    }
    Err(Error::NonFinite("visitation did not converge".into()))
}

pub fn one_hot_policy(actions: &[usize], n_actions: usize) -> PolicyTable {
    actions
        .iter()
        .map(|&a| (0..n_actions).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Deterministic policy taking each row's most probable action.
pub fn greedy_projection(pi: &PolicyTable) -> PolicyTable {
    let n_actions = pi.first().map_or(0, Vec::len);
    one_hot_policy(&pi.iter().map(|row| argmax(row)).collect::<Vec<_>>(), n_actions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedPolicy {
    pub policy: PolicyTable,
    /// Per-state intervention indicator.
    pub intervene: Vec<bool>,
    /// d_mix-weighted intervention rate.
    pub omega: f64,
    pub visitation: Vec<f64>,
}

/// Mixes per state: the teacher's row where
/// `Q_t(s, argmax π_t) − Q_t(s, argmax π_s) > tolerance`, the student's otherwise.
pub fn build_mixed_policy(
    mdp: &TabularMdp,
    teacher: &PolicyTable,
    student: &PolicyTable,
    tolerance: f64,
) -> Result<MixedPolicy> {
    mdp.check_policy(student)?;
    let q_t = mdp.q_from_v(&exact_policy_value(mdp, teacher)?);
    let intervene: Vec<bool> = (0..mdp.n_states)
        .map(|s| q_t[s][argmax(&teacher[s])] - q_t[s][argmax(&student[s])] > tolerance)
        .collect();
    let policy: PolicyTable = intervene
        .iter()
        .enumerate()
        .map(|(s, &t)| if t { teacher[s].clone() } else { student[s].clone() })
        .collect();
    let visitation = discounted_visitation(mdp, &policy)?;
    let omega = visitation.iter().zip(&intervene).filter(|(_, t)| **t).fold(0.0, |acc, (d, _)| acc + d);
    Ok(MixedPolicy {
        policy,
        intervene,
        omega: omega.clamp(0.0, 1.0),
        visitation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem4Report {
    pub j_teacher: f64,
    pub j_mix: f64,
    /// min over states of V_mix(s) − V_teacher(s).
    pub min_state_margin: f64,
    /// J_mix − J_teacher.
    pub margin: f64,
}

/// Mixed-vs-teacher comparison under the greedy premise: both policies are
/// replaced by their argmax actions and the switch uses the teacher's exact Q.
pub fn check_theorem4(mdp: &TabularMdp, teacher: &PolicyTable, student: &PolicyTable, tolerance: f64) -> Result<Theorem4Report> {
    let t = greedy_projection(teacher);
    let s = greedy_projection(student);
    let mix = build_mixed_policy(mdp, &t, &s, tolerance)?;
    let v_t = exact_policy_value(mdp, &t)?;
    let v_m = exact_policy_value(mdp, &mix.policy)?;
    let j_teacher = mdp.expected_return(&v_t);
    let j_mix = mdp.expected_return(&v_m);
    Ok(Theorem4Report {
        j_teacher,
        j_mix,
        min_state_margin: v_m.iter().zip(&v_t).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min),
        margin: j_mix - j_teacher,
    })
}

/// Inputs of the closed-form bound `√2 (1 − ω) R_max / (1 − γ)² · √(H − κ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBoundInputs {
    /// d_mix-average teacher entropy.
    pub h: f64,
    /// Residual term, reported as H − E[KL].
    pub kappa: f64,
    pub r_max: f64,
    pub omega: f64,
    pub gamma: f64,
}

impl TheoremBoundInputs {
    pub fn coefficient(&self) -> f64 {
        std::f64::consts::SQRT_2 * (1.0 - self.omega) * self.r_max / (1.0 - self.gamma).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub j_teacher: f64,
    pub j_mix: f64,
    pub omega: f64,
    /// E_{d_mix} √KL(π_t ‖ π_s).
    pub mean_sqrt_kl: f64,
    pub bound_rhs: f64,
    /// `bound_rhs − |J_mix − J_teacher|`.
    pub slack: f64,
    pub inputs: TheoremBoundInputs,
}

/// Checks `|J_mix − J_t| ≤ √2 (1 − ω) R_max / (1 − γ)² · E_{d_mix} √KL(π_t ‖ π_s)`
/// with every quantity computed exactly.
pub fn check_theorem3(mdp: &TabularMdp, teacher: &PolicyTable, student: &PolicyTable, tolerance: f64) -> Result<Theorem3Report> {
    let mix = build_mixed_policy(mdp, teacher, student, tolerance)?;
    let j_teacher = mdp.expected_return(&exact_policy_value(mdp, teacher)?);
    let j_mix = mdp.expected_return(&exact_policy_value(mdp, &mix.policy)?);
    let d = &mix.visitation;
    let kl: Vec<f64> = (0..mdp.n_states).map(|s| kl_divergence(&teacher[s], &student[s]).max(0.0)).collect();
    let mean_sqrt_kl = d.iter().zip(&kl).map(|(w, k)| w * k.sqrt()).sum::<f64>();
    let entropy = |row: &[f64]| -row.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>();
    let h = d.iter().zip(teacher).map(|(w, row)| w * entropy(row)).sum::<f64>();
    let mean_kl = d.iter().zip(&kl).map(|(w, k)| w * k).sum::<f64>();
    let inputs = TheoremBoundInputs {
        h,
        kappa: h - mean_kl,
        r_max: mdp.r_max(),
        omega: mix.omega,
        gamma: mdp.gamma,
    };
    let bound_rhs = inputs.coefficient() * mean_sqrt_kl;
    Ok(Theorem3Report {
        j_teacher,
        j_mix,
        omega: mix.omega,
        mean_sqrt_kl,
        bound_rhs,
        slack: bound_rhs - (j_mix - j_teacher).abs(),
        inputs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryConfig {
    pub instances: usize,
    pub min_states: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub gamma: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            instances: 100,
            min_states: 2,
            max_states: 20,
            max_actions: 4,
            gamma: 0.9,
            tolerance: 0.0,
            seed: 0,
        }
    }
}

impl TheoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 || self.min_states == 0 || self.min_states > self.max_states || self.max_actions < 2 {
            return Err(Error::InvalidConfig(format!("invalid theory sweep bounds: {self:?}")));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma must be in [0, 1), got {}", self.gamma)));
        }
        if self.tolerance.is_nan() {
            return Err(Error::InvalidConfig("tolerance is NaN".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub index: usize,
    pub n_states: usize,
    pub n_actions: usize,
    pub j_teacher: f64,
    pub j_mix: f64,
    pub omega: f64,
    pub bound_rhs: f64,
    pub slack: f64,
    /// Random deterministic teacher and student.
    pub theorem4_margin: f64,
    /// Uniform student against the optimal teacher.
    pub theorem4_margin_optimal: f64,
    pub inputs: TheoremBoundInputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub config: TheoryConfig,
    pub instances: Vec<InstanceReport>,
    pub min_theorem4_margin: f64,
    pub min_slack: f64,
    pub theorem4_holds: bool,
    pub theorem3_holds: bool,
}

/// Margin below which the mixed policy counts as worse than the teacher.
pub const THEOREM4_TOLERANCE: f64 = 1e-9;

fn random_stochastic<R: Rng + ?Sized>(n_states: usize, n_actions: usize, scale: f64, rng: &mut R) -> PolicyTable {
    (0..n_states)
        .map(|_| {
            let z: Vec<f64> = (0..n_actions).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
            softmax(&z)
        })
        .collect()
}

/// Runs both checks over `config.instances` random MDPs.
pub fn run_sweep(config: &TheoryConfig) -> Result<TheoryReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut instances = Vec::with_capacity(config.instances);
    for index in 0..config.instances {
        let n_states = rng.gen_range(config.min_states..=config.max_states);
        let n_actions = rng.gen_range(2..=config.max_actions);
        let mdp = random_mdp(n_states, n_actions, config.gamma, &mut rng)?;

        let teacher = random_stochastic(n_states, n_actions, 3.0, &mut rng);
        let student = random_stochastic(n_states, n_actions, 3.0, &mut rng);
        let t3 = check_theorem3(&mdp, &teacher, &student, config.tolerance)?;

        let t_det: Vec<usize> = (0..n_states).map(|_| rng.gen_range(0..n_actions)).collect();
        let s_det: Vec<usize> = (0..n_states).map(|_| rng.gen_range(0..n_actions)).collect();
        let t4 = check_theorem4(
            &mdp,
            &one_hot_policy(&t_det, n_actions),
            &one_hot_policy(&s_det, n_actions),
            config.tolerance,
        )?;
        let q_star = optimal_q(&mdp)?;
        let optimal = greedy_projection(&q_star);
        let uniform = vec![vec![1.0 / n_actions as f64; n_actions]; n_states];
        let t4_opt = check_theorem4(&mdp, &optimal, &uniform, config.tolerance)?;

        instances.push(InstanceReport {
            index,
            n_states,
            n_actions,
            j_teacher: t3.j_teacher,
            j_mix: t3.j_mix,
            omega: t3.omega,
            bound_rhs: t3.bound_rhs,
            slack: t3.slack,
            theorem4_margin: t4.margin.min(t4.min_state_margin),
            theorem4_margin_optimal: t4_opt.margin.min(t4_opt.min_state_margin),
            inputs: t3.inputs,
        });
    }
    let min_theorem4_margin = instances
        .iter()
        .map(|i| i.theorem4_margin.min(i.theorem4_margin_optimal))
        .fold(f64::INFINITY, f64::min);
    let min_slack = instances.iter().map(|i| i.slack).fold(f64::INFINITY, f64::min);
    Ok(TheoryReport {
        config: config.clone(),
        theorem4_holds: min_theorem4_margin >= -THEOREM4_TOLERANCE,
        theorem3_holds: min_slack >= 0.0,
        instances,
        min_theorem4_margin,
        min_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn null_and_geometric_values() {
        let mut mdp = random_mdp(4, 2, 0.9, &mut rng(1)).unwrap();
        mdp.r.iter_mut().flatten().for_each(|v| *v = 0.0);
        let pi = vec![vec![0.5, 0.5]; 4];
        assert!(exact_policy_value(&mdp, &pi).unwrap().iter().all(|v| *v == 0.0));

        let one = TabularMdp {
            n_states: 1,
            n_actions: 1,
            p: vec![vec![vec![1.0]]],
            r: vec![vec![1.0]],
            gamma: 0.96,
            mu0: vec![1.0],
        };
        let v = exact_policy_value(&one, &vec![vec![1.0]]).unwrap();
        assert!((v[0] - 25.0).abs() < 1e-9);
    }

    #[test]
    fn bad_rows_are_rejected() {
        let mdp = random_mdp(3, 2, 0.9, &mut rng(2)).unwrap();
        assert!(exact_policy_value(&mdp, &vec![vec![0.6, 0.6]; 3]).is_err());
        let mut broken = mdp.clone();
        broken.p[0][0][0] += 0.1;
        assert!(broken.validate().is_err());
    }

    #[test]
    fn identical_policies_never_intervene() {
        let mut r = rng(3);
        let mdp = random_mdp(6, 3, 0.9, &mut r).unwrap();
        let pi = random_stochastic(6, 3, 2.0, &mut r);
        let mix = build_mixed_policy(&mdp, &pi, &pi, 0.0).unwrap();
        assert!(mix.intervene.iter().all(|t| !t));
        assert_eq!(mix.policy, pi);
        let t3 = check_theorem3(&mdp, &pi, &pi, 0.0).unwrap();
        assert_eq!(t3.bound_rhs, 0.0);
        assert!(t3.slack.abs() < 1e-15);
        let t4 = check_theorem4(&mdp, &pi, &pi, 0.0).unwrap();
        assert_eq!(t4.margin, 0.0);
    }

    #[test]
    fn always_intervening_gives_the_teacher() {
        let mut r = rng(4);
        let mdp = random_mdp(5, 3, 0.9, &mut r).unwrap();
        let t = random_stochastic(5, 3, 2.0, &mut r);
        let s = random_stochastic(5, 3, 2.0, &mut r);
        let mix = build_mixed_policy(&mdp, &t, &s, f64::NEG_INFINITY).unwrap();
        assert_eq!(mix.policy, t);
        assert!((mix.omega - 1.0).abs() < 1e-12);
        let rep = check_theorem3(&mdp, &t, &s, f64::NEG_INFINITY).unwrap();
        assert!(rep.j_mix == rep.j_teacher && rep.slack >= 0.0);
    }

    #[test]
    fn zero_horizon_picks_the_better_immediate_reward() {
        let mut r = rng(5);
        let mdp = random_mdp(7, 3, 0.0, &mut r).unwrap();
        let t: Vec<usize> = (0..7).map(|_| r.gen_range(0..3)).collect();
        let s: Vec<usize> = (0..7).map(|_| r.gen_range(0..3)).collect();
        let mix = build_mixed_policy(&mdp, &one_hot_policy(&t, 3), &one_hot_policy(&s, 3), 0.0).unwrap();
        let (r_mix, _) = mdp.induced(&mix.policy);
        for st in 0..7 {
            assert_eq!(r_mix[st], mdp.r[st][t[st]].max(mdp.r[st][s[st]]));
        }
    }

    #[test]
    fn single_state_optimal_margin_is_zero() {
        let cfg = TheoryConfig {
            instances: 10,
            min_states: 1,
            max_states: 1,
            ..Default::default()
        };
        let rep = run_sweep(&cfg).unwrap();
        assert!(rep.instances.iter().all(|i| i.theorem4_margin_optimal == 0.0 && i.theorem4_margin >= 0.0));
    }

    #[test]
    fn slack_vanishes_toward_the_teacher() {
        let mut r = rng(6);
        let mdp = random_mdp(8, 3, 0.9, &mut r).unwrap();
        let t = random_stochastic(8, 3, 2.0, &mut r);
        let far = random_stochastic(8, 3, 2.0, &mut r);
        let blend = |lam: f64| -> PolicyTable {
            t.iter()
                .zip(&far)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (1.0 - lam) * x + lam * y).collect())
                .collect()
        };
        let s0 = check_theorem3(&mdp, &t, &blend(0.0), 0.0).unwrap().slack;
        let s_near = check_theorem3(&mdp, &t, &blend(1e-3), 0.0).unwrap().slack;
        let s_far = check_theorem3(&mdp, &t, &blend(1.0), 0.0).unwrap().slack;
        assert!(s0.abs() < 1e-15);
        assert!(s_near >= 0.0 && s_near < s_far);
    }

    #[test]
    fn sweep_is_reproducible() {
        let cfg = TheoryConfig { instances: 5, ..Default::default() };
        let a = serde_json::to_string(&run_sweep(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_sweep(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn mixed_rows_and_visitation_are_distributions(seed in 0u64..10_000, n in 1usize..12, m in 2usize..5) {
            let mut r = rng(seed);
            let mdp = random_mdp(n, m, 0.9, &mut r).unwrap();
            let t = random_stochastic(n, m, 2.0, &mut r);
            let s = random_stochastic(n, m, 2.0, &mut r);
            let mix = build_mixed_policy(&mdp, &t, &s, 0.0).unwrap();
            prop_assert!((0.0..=1.0).contains(&mix.omega));
            for row in &mix.policy {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            prop_assert!((mix.visitation.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}
