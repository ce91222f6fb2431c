//! Composing, inverting and comparing SE(3) poses.
//!
//! ```text
//! cargo run --example pose_algebra
//! ```

use std::f64::consts::FRAC_PI_2;

use spatial_ssl::pose::{quat_dist, se_dist, Pose, Quaternion, Se2Pose};

fn main() {
    // robot at (1, 0) facing +y; a marker 0.5 m ahead of it
    let robot = Pose::new([1.0, 0.0, 0.0], Quaternion::from_yaw(FRAC_PI_2));
    let marker_in_robot = Pose::from_translation([0.5, 0.0, 0.0]);

    let marker = robot.compose(&marker_in_robot);
    println!("marker in world       {:?}", marker.position);

    // ⊖robot ⊕ marker recovers the marker in the robot frame
    let back = robot.relative(&marker);
    println!("marker in robot frame {:?}", back.position);
    assert!(back.approx_eq(&marker_in_robot, 1e-12));

    // q and -q are the same rotation
    let q = Quaternion::from_axis_angle([0.0, 0.0, 1.0], 0.3);
    let flipped = Quaternion::new(-q.w, -q.x, -q.y, -q.z);
    println!("quat_dist(q, -q)      {:.2e}", quat_dist(q, flipped));

    // the weighted distance used by the losses
    let a = Pose::new([0.0, 0.0, 0.0], Quaternion::from_yaw(0.0));
    let b = Pose::new([0.03, 0.04, 0.0], Quaternion::from_yaw(0.1));
    for lambda_o in [0.0, 1.0, 10.0] {
        println!("se_dist λ_o = {lambda_o:<4}     {:.4}", se_dist(&a, &b, lambda_o));
    }

    // planar poses lift to SE(3) and project back
    let p = Se2Pose::new(0.2, -0.1, 2.5);
    let lifted = p.lift();
    println!("SE(2) round trip      {:?}", lifted.to_se2());
}
