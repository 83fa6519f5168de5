use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::OBS_DIM;
use crate::nn::{clip_grad_norm, AdamW, DenseNet, NetSpec};

/// One visited state-action pair with its regression targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedRow {
    pub obs: Vec<f64>,
    pub action: usize,
    /// Observed immediate reward.
    pub reward: f64,
    /// `reward + γ·next_value·(1 − done)`.
    pub q_target: f64,
    pub next_value: f64,
    pub done: bool,
}

impl SupervisedRow {
    pub fn new(obs: Vec<f64>, action: usize, reward: f64, next_value: f64, done: bool, gamma: f64) -> Self {
        let live = if done { 0.0 } else { 1.0 };
        Self {
            obs,
            action,
            reward,
            q_target: reward + gamma * next_value * live,
            next_value,
            done,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub epochs: usize,
    pub minibatch: usize,
    pub learning_rate: f64,
    /// Fraction of rows held out for the reported validation loss.
    pub holdout: f64,
    pub max_grad_norm: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            epochs: 4,
            minibatch: 64,
            learning_rate: 1e-3,
            holdout: 0.1,
            max_grad_norm: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub rows: usize,
    pub return_train_mse: f64,
    pub return_holdout_mse: f64,
    pub q_train_mse: f64,
    pub q_holdout_mse: f64,
    /// Variance of the held-out Q targets, the baseline a useful fit must beat.
    pub q_holdout_target_var: f64,
}

/// Return and Q-Value networks with their optimizers, so fitting can
/// continue across phases.
#[derive(Debug, Clone)]
pub struct ValueHeads {
    pub return_net: DenseNet,
    pub qvalue_net: DenseNet,
    return_opt: AdamW,
    q_opt: AdamW,
}

impl ValueHeads {
    pub fn new<R: Rng + ?Sized>(hidden: &[usize], opts: &FitOptions, rng: &mut R) -> Result<Self> {
        let return_net = DenseNet::new(NetSpec::vector(OBS_DIM, 3).with_hidden(hidden.to_vec()), rng)?;
        let qvalue_net = DenseNet::new(NetSpec::vector(OBS_DIM, 3).with_hidden(hidden.to_vec()), rng)?;
        let (mut return_net, mut qvalue_net) = (return_net, qvalue_net);
        return_net.zero_output_layer();
        qvalue_net.zero_output_layer();
        let return_opt = AdamW::new(return_net.param_count(), opts.learning_rate).with_weight_decay(0.0);
        let q_opt = AdamW::new(qvalue_net.param_count(), opts.learning_rate).with_weight_decay(0.0);
        Ok(Self {
            return_net,
            qvalue_net,
            return_opt,
            q_opt,
        })
    }

    /// Squared error on the visited action's output only.
    fn masked_mse(net: &DenseNet, rows: &[&SupervisedRow], target: fn(&SupervisedRow) -> f64) -> Result<f64> {
        if rows.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for r in rows {
            let e = net.predict(&r.obs)?[r.action] - target(r);
            total += e * e;
        }
        Ok(total / rows.len() as f64)
    }

    fn descend<R: Rng + ?Sized>(&mut self, rows: &[&SupervisedRow], opts: &FitOptions, rng: &mut R) -> Result<()> {
        let mut idx: Vec<usize> = (0..rows.len()).collect();
        let total = (opts.epochs * rows.len().div_ceil(opts.minibatch)) as f64;
        let mut done = 0.0;
        for _ in 0..opts.epochs {
            idx.shuffle(rng);
            for chunk in idx.chunks(opts.minibatch) {
                let n = chunk.len() as f64;
                let mut g_ret = self.return_net.zero_grad();
                let mut g_q = self.qvalue_net.zero_grad();
                for &i in chunk {
                    let r = rows[i];
                    let mut seed = [0.0; 3];
                    let (out, cache) = self.return_net.forward(&r.obs)?;
                    seed[r.action] = 2.0 * (out[r.action] - r.reward) / n;
                    self.return_net.backward(&cache, &seed, &mut g_ret)?;
                    let mut seed = [0.0; 3];
                    let (out, cache) = self.qvalue_net.forward(&r.obs)?;
                    seed[r.action] = 2.0 * (out[r.action] - r.q_target) / n;
                    self.qvalue_net.backward(&cache, &seed, &mut g_q)?;
                }
                clip_grad_norm(&mut g_ret, opts.max_grad_norm);
                clip_grad_norm(&mut g_q, opts.max_grad_norm);
                // learning rate anneals linearly within each fit
                let progress = done / total;
                self.return_opt.step(self.return_net.params_mut(), &g_ret, progress)?;
                self.q_opt.step(self.qvalue_net.params_mut(), &g_q, progress)?;
                done += 1.0;
            }
        }
        Ok(())
    }

    /// Fits on `rows` with a seeded train/held-out split and reports losses.
    pub fn fit<R: Rng + ?Sized>(&mut self, rows: &[SupervisedRow], opts: &FitOptions, rng: &mut R) -> Result<FitReport> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("cannot fit value heads on an empty buffer".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.action >= 3 || !r.q_target.is_finite() || !r.reward.is_finite()) {
            return Err(Error::InvalidInput(format!("bad supervised row: action {} q {}", r.action, r.q_target)));
        }
        let mut order: Vec<&SupervisedRow> = rows.iter().collect();
        order.shuffle(rng);
        let n_hold = ((rows.len() as f64) * opts.holdout).floor() as usize;
        let (hold, train) = order.split_at(n_hold);
        self.descend(train, opts, rng)?;
        let q_mean = hold.iter().map(|r| r.q_target).sum::<f64>() / hold.len().max(1) as f64;
        Ok(FitReport {
            rows: rows.len(),
            return_train_mse: Self::masked_mse(&self.return_net, train, |r| r.reward)?,
            return_holdout_mse: Self::masked_mse(&self.return_net, hold, |r| r.reward)?,
            q_train_mse: Self::masked_mse(&self.qvalue_net, train, |r| r.q_target)?,
            q_holdout_mse: Self::masked_mse(&self.qvalue_net, hold, |r| r.q_target)?,
            q_holdout_target_var: hold.iter().map(|r| (r.q_target - q_mean).powi(2)).sum::<f64>()
                / hold.len().max(1) as f64,
        })
    }
}

/// Fresh Return / Q-Value networks fitted on `rows`.
pub fn fit_value_heads<R: Rng + ?Sized>(
    rows: &[SupervisedRow],
    hidden: &[usize],
    opts: &FitOptions,
    rng: &mut R,
) -> Result<(DenseNet, DenseNet, FitReport)> {
    let mut heads = ValueHeads::new(hidden, opts, rng)?;
    let report = heads.fit(rows, opts, rng)?;
    Ok((heads.return_net, heads.qvalue_net, report))
}
