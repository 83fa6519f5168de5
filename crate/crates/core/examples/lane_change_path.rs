//! Plans a left lane change and tracks it with the lateral PID.

use s2cd::control::{pid_step, plan_lane_change, LaneGeometry, PidGains, PidState};

fn main() -> s2cd::Result<()> {
    let geom = LaneGeometry {
        lanes_count: 3,
        lane_width: 3.75,
    };
    let y0 = geom.center(1);
    let path = plan_lane_change((0.0, y0), 1, 2, &geom)?;
    println!("waypoints: {:?}", path.waypoints());

    let (dt, v) = (0.05, 20.0);
    let (mut x, mut y) = (0.0, y0);
    let mut pid = PidState::default();
    for k in 0..20 {
        let err = path.lateral_at(x + 2.0) - y;
        let u = pid_step(&PidGains::LATERAL, err, &mut pid, dt);
        y += (u * v).clamp(-5.0, 5.0) * dt;
        x += v * dt;
        if k % 4 == 0 {
            println!("x {x:5.1} y {y:6.3} target {:6.3}", path.lateral_at(x));
        }
    }
    Ok(())
}
