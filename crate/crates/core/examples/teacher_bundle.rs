//! Trains a small teacher, saves the bundle and queries its advice.

use s2cd::mdp::{Environment, HighwayEnv};
use s2cd::ppo::HyperParams;
use s2cd::sim::{Density, Fidelity};
use s2cd::teacher::{load_bundle, save_bundle, teacher_advise, train_teacher, TeacherQuality};

fn main() -> s2cd::Result<()> {
    let env = HighwayEnv::single(Fidelity::Simple, Density::Medium, 1)?;
    let hp = HyperParams {
        total_steps: 20_000,
        ..Default::default()
    };
    let tr = train_teacher(env, &hp, TeacherQuality::High, 1)?;
    for f in &tr.fits {
        println!("q holdout mse {:.4} (target var {:.4})", f.q_holdout_mse, f.q_holdout_target_var);
    }
    let dir = std::env::temp_dir().join("s2cd-example-teacher");
    save_bundle(&tr.bundle, &dir)?;
    let bundle = load_bundle(&dir)?;

    let mut probe = HighwayEnv::single(Fidelity::Simple, Density::Medium, 9)?;
    let obs = probe.reset()?;
    let adv = teacher_advise(&bundle, &obs)?;
    println!("advice {:?} probs {:?} q {:?}", adv.action, adv.probs, adv.q_pred);
    Ok(())
}
