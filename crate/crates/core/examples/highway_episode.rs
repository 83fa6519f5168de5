//! Drives one always-Follow episode in each fidelity and prints its length.

use s2cd::mdp::{Environment, HighwayEnv};
use s2cd::sim::{Action, Density, Fidelity};

fn main() -> s2cd::Result<()> {
    for fidelity in [Fidelity::Simple, Fidelity::Complex] {
        let mut env = HighwayEnv::single(fidelity, Density::Medium, 7)?;
        env.reset()?;
        let (mut steps, mut ret) = (0, 0.0);
        loop {
            let s = env.step(Action::Follow)?;
            steps += 1;
            ret += s.reward.total;
            if s.done() {
                println!(
                    "{fidelity:?}: {steps} decisions, return {ret:.2}, success {}, collision {}",
                    s.events.success, s.events.collision
                );
                break;
            }
        }
    }
    Ok(())
}
