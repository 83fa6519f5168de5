//! Short plain-PPO run in the Simple world, printing per-phase metrics.

use s2cd::mdp::HighwayEnv;
use s2cd::ppo::{train_ppo, HyperParams};
use s2cd::sim::{Density, Fidelity};

fn main() -> s2cd::Result<()> {
    let env = HighwayEnv::single(Fidelity::Simple, Density::Medium, 1)?;
    let hp = HyperParams {
        total_steps: 20_000,
        ..Default::default()
    };
    let (_, rows) = train_ppo(env, hp, 1)?;
    for r in rows {
        println!(
            "step {:>6} episodes {:>3} success {:.2} collisions {:>3} entropy {:.3}",
            r.step, r.episodes, r.success_rate, r.collisions, r.entropy
        );
    }
    Ok(())
}
