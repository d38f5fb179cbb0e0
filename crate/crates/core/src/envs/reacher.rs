use rand::{Rng, RngCore};

use super::render::{Glyph, GlyphRole};
use super::Dynamics;

pub(crate) const DT: f64 = 0.05;
pub(crate) const HORIZON: usize = 100;
pub const FRICTION: f64 = 0.5;
pub const SUCCESS_RADIUS: f64 = 0.05;
pub const START_RANGE: f64 = 0.9;
pub const GOAL_RANGE: f64 = 0.8;
pub const EXPERT_KP: f64 = 4.0;
pub const EXPERT_KD: f64 = 3.0;

const AGENT_RADIUS_PX: f64 = 3.0;
const GOAL_RADIUS_PX: f64 = 6.0;
const GOAL_INTENSITY: f64 = 0.5;

/// Point mass in `[-1, 1]^2` with viscous friction and reflecting walls.
///
/// State: `[x, y, vx, vy, gx, gy]`; proprioception: `[x, y, vx, vy]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reacher {
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub goal: [f64; 2],
}

impl Reacher {
    pub fn distance(&self) -> f64 {
        (self.pos[0] - self.goal[0]).hypot(self.pos[1] - self.goal[1])
    }
}

/// One step of the reacher dynamics on a single axis.
fn axis_step(x: f64, v: f64, a: f64, dt: f64) -> (f64, f64) {
    let mut x_new = x + dt * v;
    let mut v_new = v + dt * (a - FRICTION * v);
    if x_new > 1.0 {
        x_new = 2.0 - x_new;
        v_new = -v_new;
    } else if x_new < -1.0 {
        x_new = -2.0 - x_new;
        v_new = -v_new;
    }
    (x_new, v_new)
}

impl Dynamics for Reacher {
    fn reset(&mut self, rng: &mut dyn RngCore) {
        for i in 0..2 {
            self.pos[i] = rng.random_range(-START_RANGE..START_RANGE);
        }
        for i in 0..2 {
            self.goal[i] = rng.random_range(-GOAL_RANGE..GOAL_RANGE);
        }
        self.vel = [0.0, 0.0];
    }

    fn integrate(&mut self, action: &[f64], dt: f64) {
        for i in 0..2 {
            (self.pos[i], self.vel[i]) = axis_step(self.pos[i], self.vel[i], action[i], dt);
        }
    }

    fn success(&self) -> bool {
        self.distance() < SUCCESS_RADIUS
    }

    fn dense_reward(&self) -> f64 {
        -self.distance()
    }

    fn distance_to_goal(&self) -> f64 {
        self.distance()
    }

    fn state(&self) -> Vec<f64> {
        vec![self.pos[0], self.pos[1], self.vel[0], self.vel[1], self.goal[0], self.goal[1]]
    }

    fn proprio(&self) -> Vec<f64> {
        vec![self.pos[0], self.pos[1], self.vel[0], self.vel[1]]
    }

    fn glyphs(&self) -> Vec<Glyph> {
        vec![
            Glyph {
                x: self.goal[0],
                y: self.goal[1],
                radius_px: GOAL_RADIUS_PX,
                intensity: GOAL_INTENSITY,
                role: GlyphRole::Goal,
            },
            Glyph {
                x: self.pos[0],
                y: self.pos[1],
                radius_px: AGENT_RADIUS_PX,
                intensity: 1.0,
                role: GlyphRole::Agent,
            },
        ]
    }

    fn expert_action(&self) -> Vec<f64> {
        (0..2)
            .map(|i| EXPERT_KP * (self.goal[i] - self.pos[i]) - EXPERT_KD * self.vel[i])
            .collect()
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
    fn rest_is_an_equilibrium() {
        let mut r = Reacher {
            pos: [0.3, -0.4],
            ..Default::default()
        };
        r.integrate(&[0.0, 0.0], DT);
        assert_eq!(r.pos, [0.3, -0.4]);
        assert_eq!(r.vel, [0.0, 0.0]);
    }

    #[test]
    fn at_goal_is_success_and_expert_is_idle() {
        let r = Reacher {
            pos: [0.2, 0.2],
            vel: [0.0, 0.0],
            goal: [0.2, 0.2],
        };
        assert!(r.success());
        let a = r.expert_action();
        assert!(a.iter().all(|v| v.abs() <= 1e-6 * EXPERT_KP));
    }

    #[test]
    fn walls_reflect() {
        let (x, v) = axis_step(0.99, 1.0, 0.0, 0.05);
        assert!((x - 0.96).abs() < 1e-12);
        assert!(v < 0.0);
        let (x, v) = axis_step(-0.99, -1.0, 0.0, 0.05);
        assert!((x + 0.96).abs() < 1e-12);
        assert!(v > 0.0);
    }

    #[test]
    fn matches_independent_reintegration() {
        let mut env = Env::new(EnvSpec::point_reacher()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        env.reset(&mut rng);
        let s0 = env.state();
        let (mut x, mut y, mut vx, mut vy) = (s0[0], s0[1], s0[2], s0[3]);
        for _ in 0..50 {
            let a = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            env.step(&a).unwrap();
            let (ax, ay) = (a[0].clamp(-1.0, 1.0), a[1].clamp(-1.0, 1.0));
            let nx = x + 0.05 * vx;
            let ny = y + 0.05 * vy;
            vx += 0.05 * (ax - 0.5 * vx);
            vy += 0.05 * (ay - 0.5 * vy);
            x = nx;
            y = ny;
            if x > 1.0 {
                x = 2.0 - x;
                vx = -vx;
            }
            if x < -1.0 {
                x = -2.0 - x;
                vx = -vx;
            }
            if y > 1.0 {
                y = 2.0 - y;
                vy = -vy;
            }
            if y < -1.0 {
                y = -2.0 - y;
                vy = -vy;
            }
            let s = env.state();
            for (got, want) in s[..4].iter().zip([x, y, vx, vy]) {
                assert!((got - want).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn reset_ranges_are_uniform() {
        // chi-square over 10 bins per coordinate, 10^4 resets
        let mut r = Reacher::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bins = 10;
        let n = 10_000;
        let mut counts = vec![[0usize; 10]; 4];
        for _ in 0..n {
            r.reset(&mut rng);
            let vals = [
                (r.pos[0], START_RANGE),
                (r.pos[1], START_RANGE),
                (r.goal[0], GOAL_RANGE),
                (r.goal[1], GOAL_RANGE),
            ];
            for (k, (v, range)) in vals.iter().enumerate() {
                assert!(v.abs() <= *range);
                let b = (((v + range) / (2.0 * range)) * bins as f64) as usize;
                counts[k][b.min(bins - 1)] += 1;
            }
        }
        let expected = n as f64 / bins as f64;
        for c in &counts {
            let chi2: f64 = c.iter().map(|o| (*o as f64 - expected).powi(2) / expected).sum();
            // 9 degrees of freedom, p = 0.001
            assert!(chi2 < 27.88, "chi2 = {chi2}");
        }
    }

    #[test]
    fn expert_solves_the_task() {
        let mut env = Env::new(EnvSpec::point_reacher()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let mut successes = 0;
        for _ in 0..100 {
            let mut res = env.reset(&mut rng);
            let mut ok = false;
            while !res.truncated {
                res = env.step(&env.expert_action()).unwrap();
                ok |= res.info.success;
            }
            successes += ok as usize;
        }
        assert!(successes >= 95, "{successes}/100");
    }
}
