//! Evaluates a scripted keep-lane policy with the standard protocol.

use s2cd::eval::EvalProtocol;
use s2cd::mdp::RewardConfig;
use s2cd::sim::{Action, Density, SimConfig};

fn main() -> s2cd::Result<()> {
    let proto = EvalProtocol {
        sim: SimConfig::simple(Density::Medium, 0),
        reward: RewardConfig::default(),
        densities: vec![Density::Low, Density::Medium, Density::High],
        seeds: vec![1000, 1001],
        episodes_per_seed: 9,
    };
    let (summary, records) = proto.run(|_| Ok(Action::Follow))?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    println!("{} episode records", records.len());
    Ok(())
}
