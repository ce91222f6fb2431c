//! Seeded Ornstein-Uhlenbeck velocity commands standing in for teleoperation.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// One mean-reverting velocity channel with stationary mean `mean`,
/// stationary standard deviation `std` and correlation time `tau` (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuChannel {
    pub mean: f64,
    pub std: f64,
    pub tau: f64,
    /// Commands are clipped to `[-limit, limit]`.
    pub limit: f64,
}

impl OuChannel {
    pub fn is_valid(&self) -> bool {
        self.std >= 0.0 && self.tau > 0.0 && self.limit > 0.0 && self.mean.is_finite() && self.std.is_finite()
    }
}

/// Independent OU processes, one per velocity channel, advanced with the
/// exact discretisation.
#[derive(Debug, Clone)]
pub struct OuController<const N: usize> {
    channels: [OuChannel; N],
    state: [f64; N],
}

impl<const N: usize> OuController<N> {
    pub fn new(channels: [OuChannel; N]) -> Self {
        let state = channels.map(|c| c.mean);
        Self { channels, state }
    }

    pub fn state(&self) -> [f64; N] {
        self.state
    }

    pub fn state_mut(&mut self) -> &mut [f64; N] {
        &mut self.state
    }

    /// Advances all channels by `dt` and returns the clipped command.
    pub fn step<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> [f64; N] {
        for (s, c) in self.state.iter_mut().zip(&self.channels) {
            let a = (-dt / c.tau).exp();
            let z: f64 = rng.sample(StandardNormal);
            *s = c.mean + (*s - c.mean) * a + c.std * (1.0 - a * a).sqrt() * z;
            *s = s.clamp(-c.limit, c.limit);
        }
        self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stationary_moments() {
        let ch = OuChannel { mean: 0.3, std: 0.1, tau: 0.5, limit: 10.0 };
        let mut c = OuController::new([ch]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..200_000).map(|_| c.step(0.1, &mut rng)[0]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.3).abs() < 0.01, "{mean}");
        assert!((var.sqrt() - 0.1).abs() < 0.01, "{}", var.sqrt());
    }

    #[test]
    fn commands_respect_limits() {
        let ch = OuChannel { mean: 0.0, std: 5.0, tau: 1.0, limit: 0.2 };
        let mut c = OuController::new([ch, ch]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            assert!(c.step(0.1, &mut rng).iter().all(|v| v.abs() <= 0.2));
        }
    }
}
