use std::f64::consts::PI;

use rand::{Rng, RngCore};

use super::render::{Glyph, GlyphRole};
use super::Dynamics;

pub(crate) const DT: f64 = 0.05;
pub(crate) const HORIZON: usize = 200;
pub const MAX_TORQUE: f64 = 2.0;
pub const GRAVITY: f64 = 9.8;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;
pub const SUCCESS_ANGLE: f64 = 0.15;
pub const SUCCESS_SPEED: f64 = 1.0;
pub const START_JITTER: f64 = 0.1;

const BOB_RADIUS_PX: f64 = 3.0;
const ARM: f64 = 0.8;

/// Torque-limited pendulum; `theta` is the angle from upright in `(-pi, pi]`.
///
/// State and proprioception: `[cos theta, sin theta, theta_dot]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pendulum {
    pub theta: f64,
    pub theta_dot: f64,
}

pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

impl Pendulum {
    /// Mechanical energy per unit mass with the pivot as reference; the
    /// upright equilibrium has energy `g l`.
    pub fn energy(&self) -> f64 {
        0.5 * LENGTH * LENGTH * self.theta_dot * self.theta_dot + GRAVITY * LENGTH * self.theta.cos()
    }
}

impl Dynamics for Pendulum {
    fn reset(&mut self, rng: &mut dyn RngCore) {
        self.theta = wrap_angle(PI + rng.random_range(-START_JITTER..START_JITTER));
        self.theta_dot = rng.random_range(-START_JITTER..START_JITTER);
    }

    fn integrate(&mut self, action: &[f64], dt: f64) {
        let acc = GRAVITY / LENGTH * self.theta.sin() + action[0] / (MASS * LENGTH * LENGTH);
        self.theta_dot += dt * acc;
        self.theta = wrap_angle(self.theta + dt * self.theta_dot);
    }

    fn success(&self) -> bool {
        self.theta.abs() < SUCCESS_ANGLE && self.theta_dot.abs() < SUCCESS_SPEED
    }

    fn dense_reward(&self) -> f64 {
        self.theta.cos() - 0.01 * self.theta_dot * self.theta_dot
    }

    fn distance_to_goal(&self) -> f64 {
        self.theta.abs()
    }

    fn state(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }

    fn proprio(&self) -> Vec<f64> {
        self.state()
    }

    fn glyphs(&self) -> Vec<Glyph> {
        vec![
            Glyph {
                x: 0.0,
                y: ARM,
                radius_px: BOB_RADIUS_PX,
                intensity: 0.5,
                role: GlyphRole::Goal,
            },
            Glyph {
                x: ARM * self.theta.sin(),
                y: ARM * self.theta.cos(),
                radius_px: BOB_RADIUS_PX,
                intensity: 1.0,
                role: GlyphRole::Agent,
            },
        ]
    }

    /// Energy pumping towards the upright energy, then PD balance near the top.
    fn expert_action(&self) -> Vec<f64> {
        let u = if self.theta.abs() < 0.3 {
            -(20.0 * self.theta + 4.0 * self.theta_dot)
        } else {
            let deficit = GRAVITY * LENGTH - self.energy();
            4.0 * deficit * self.theta_dot
        };
        vec![u.clamp(-MAX_TORQUE, MAX_TORQUE)]
    }

    fn clone_box(&self) -> Box<dyn Dynamics> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Env, EnvSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn upright_rest_is_an_equilibrium() {
        let mut p = Pendulum::default();
        p.integrate(&[0.0], DT);
        assert_eq!(p, Pendulum::default());
        assert!(p.success());
        assert_eq!(p.dense_reward(), 1.0);
    }

    #[test]
    fn matches_independent_reintegration() {
        let mut env = Env::new(EnvSpec::pendulum()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        env.reset(&mut rng);
        let s = env.state();
        let mut th = s[1].atan2(s[0]);
        let mut om = s[2];
        for _ in 0..50 {
            let a = rng.random_range(-3.0..3.0);
            env.step(&[a]).unwrap();
            om += 0.05 * (9.8 * th.sin() + a.clamp(-2.0, 2.0));
            th += 0.05 * om;
            let s = env.state();
            assert!((s[0] - th.cos()).abs() <= 1e-10);
            assert!((s[1] - th.sin()).abs() <= 1e-10);
            assert!((s[2] - om).abs() <= 1e-10);
        }
    }

    #[test]
    fn expert_swings_up() {
        let mut env = Env::new(EnvSpec::pendulum()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let mut successes = 0;
        for _ in 0..100 {
            let mut res = env.reset(&mut rng);
            assert!(env.state()[0] < -0.99);
            let mut ok = false;
            while !res.truncated {
                res = env.step(&env.expert_action()).unwrap();
                ok |= res.info.success;
            }
            successes += ok as usize;
        }
        assert!(successes >= 90, "{successes}/100");
    }
}
