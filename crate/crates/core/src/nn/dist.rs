//! Categorical-distribution helpers on logits, with gradients.

/// Smallest student probability used inside a KL log.
pub const KL_FLOOR: f64 = 1e-12;

pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

/// Entropy of softmax(z) and its gradient with respect to z.
pub fn entropy_with_grad(z: &[f64]) -> (f64, Vec<f64>) {
    let lp = log_softmax(z);
    let p: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
    let h = -p.iter().zip(&lp).map(|(a, b)| a * b).sum::<f64>();
    let grad = p.iter().zip(&lp).map(|(pi, li)| -pi * (li + h)).collect();
    (h, grad)
}

/// KL(target ‖ softmax(z)) with the student side floored at [`KL_FLOOR`],
/// and its gradient with respect to z.
pub fn kl_with_grad(target: &[f64], z: &[f64]) -> (f64, Vec<f64>) {
    let lp = log_softmax(z);
    let p: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
    let mut kl = 0.0;
    // mass of target on entries whose student log-prob is not floored
    let mut live_mass = 0.0;
    for i in 0..target.len() {
        if target[i] <= 0.0 {
            continue;
        }
        let log_s = if p[i] < KL_FLOOR {
            KL_FLOOR.ln()
        } else {
            live_mass += target[i];
            lp[i]
        };
        kl += target[i] * (target[i].ln() - log_s);
    }
    let grad = (0..z.len())
        .map(|i| {
            let own = if target[i] > 0.0 && p[i] >= KL_FLOOR { target[i] } else { 0.0 };
            p[i] * live_mass - own
        })
        .collect();
    (kl, grad)
}

/// KL(p ‖ q) between explicit distributions, q floored at [`KL_FLOOR`].
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a.ln() - b.max(KL_FLOOR).ln()))
        .sum()
}
