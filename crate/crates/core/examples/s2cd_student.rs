//! Trains a teacher briefly, then an S2CD student in the Complex world,
//! printing the weaning columns.

use s2cd::engine::{train_s2cd, S2cdHyper};
use s2cd::mdp::HighwayEnv;
use s2cd::ppo::HyperParams;
use s2cd::sim::{Density, Fidelity};
use s2cd::teacher::{train_teacher, TeacherQuality};

fn main() -> s2cd::Result<()> {
    let teacher_hp = HyperParams {
        total_steps: 20_000,
        ..Default::default()
    };
    let simple = HighwayEnv::single(Fidelity::Simple, Density::Medium, 1)?;
    let bundle = train_teacher(simple, &teacher_hp, TeacherQuality::High, 1)?.bundle;

    let mut hp = S2cdHyper::default();
    hp.ppo.total_steps = 20_000;
    let complex = HighwayEnv::single(Fidelity::Complex, Density::Medium, 1)?;
    let (_, rows) = train_s2cd(complex, bundle, hp, 1)?;
    for r in rows {
        println!(
            "step {:>6} tau {:.4} intervention {:.3} teacher samples {:.3} collisions {}",
            r.step, r.tau, r.intervention_rate, r.teacher_sample_fraction, r.collisions
        );
    }
    Ok(())
}
