//! Runs the tabular theorem sweep and prints the tightest instances.

use s2cd::theory::{run_sweep, TheoryConfig};

fn main() -> s2cd::Result<()> {
    let report = run_sweep(&TheoryConfig::default())?;
    let mut by_slack = report.instances.clone();
    by_slack.sort_by(|a, b| a.slack.total_cmp(&b.slack));
    for i in by_slack.iter().take(5) {
        println!(
            "#{:<3} {:>2}x{} |J_mix - J_t| {:.4} bound {:.4} omega {:.3}",
            i.index,
            i.n_states,
            i.n_actions,
            (i.j_mix - i.j_teacher).abs(),
            i.bound_rhs,
            i.omega
        );
    }
    println!(
        "theorem 4 holds: {} (min margin {:.2e}); bound holds: {}",
        report.theorem4_holds, report.min_theorem4_margin, report.theorem3_holds
    );
    Ok(())
}
