//! Reverse-mode gradients of a pose-regressing MLP, checked against finite
//! differences, then a few Adam steps towards a fixed target pose.
//!
//! ```text
//! cargo run --release --example autodiff_mlp
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spatial_ssl::autodiff::{Activation, AdamState, MlpSpec, Tape};
use spatial_ssl::losses::QUAT_NORM_EPS;
use spatial_ssl::pose::{se_dist, Pose, Quaternion};
use spatial_ssl::scalar::Scalar;

fn loss<S: Scalar>(spec: &MlpSpec, theta: &[S], x: &[f64], target: &Pose<f64>) -> S {
    let like = theta[0];
    let x: Vec<S> = x.iter().map(|v| like.lift(*v)).collect();
    let pred = Pose::from_output(&spec.forward(theta, &x).unwrap(), QUAT_NORM_EPS);
    se_dist(&target.lift(like), &pred, 1.0)
}

fn main() {
    let spec = MlpSpec::new(vec![7, 16, 8, 7], Activation::Tanh).unwrap();
    let mut params = spec.init(&mut ChaCha8Rng::seed_from_u64(0));
    println!("{} parameters", params.len());

    let x = [0.1, -0.4, 0.9, 0.0, 0.3, -0.2, 0.5];
    let target = Pose::new([0.2, -0.1, 0.0], Quaternion::from_yaw(0.7));

    let tape = Tape::new();
    let theta = tape.vars(params.values());
    let l = loss(&spec, &theta, &x, &target);
    let grad = tape.gradient(l, &theta);
    println!("loss {:.5}, tape holds {} nodes", l.value(), tape.len());

    let h = 1e-5;
    let mut probe = params.values().to_vec();
    for i in [0, 50, 200, params.len() - 1] {
        probe[i] += h;
        let up = loss(&spec, &probe, &x, &target);
        probe[i] -= 2.0 * h;
        let down = loss(&spec, &probe, &x, &target);
        probe[i] += h;
        println!("∂L/∂θ[{i:>3}]  tape {:+.6e}  central difference {:+.6e}", grad[i], (up - down) / (2.0 * h));
    }

    let mut adam = AdamState::new(params.len(), 1e-2);
    let mut tape = Tape::new();
    for step in 0..=200 {
        tape.reset();
        let theta = tape.vars(params.values());
        let l = loss(&spec, &theta, &x, &target);
        if step % 50 == 0 {
            println!("step {step:>3}  loss {:.5}", l.value());
        }
        let g = tape.gradient(l, &theta);
        drop(theta);
        adam.step(params.values_mut(), &g);
    }
}
