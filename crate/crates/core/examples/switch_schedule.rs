//! Prints the intervention tolerance and adaptive clip intervals as τ decays.

use s2cd::engine::{adaptive_epsilon, clip_interval, decay_tau, switch_action, SwitchConfig};
use s2cd::ppo::Origin;

fn main() {
    let cfg = SwitchConfig::default();
    let eps_prime = adaptive_epsilon(0.2, 0.6, 0.2);
    for n in [0, 15, 30, 45, 60] {
        let tau = decay_tau(n, &cfg);
        let (choice, _) = switch_action(1.0, 0.8, tau, &cfg);
        let s = clip_interval(Origin::Student, 0.2, tau * eps_prime);
        let t = clip_interval(Origin::Teacher, 0.2, tau * eps_prime);
        println!(
            "episodes {n:>2} tau {tau:.4} threshold {:.3} gap 0.2 -> {choice:?}  student [{:.3}, {:.3}] teacher [{:.3}, {:.3}]",
            (1.0 - tau) * cfg.tolerance_eps,
            s.0,
            s.1,
            t.0,
            t.1
        );
    }
}
