//! Dubins-style planar navigation with delta controls on speed and turn
//! rate, against maps with rectangular and circular obstacles.
//!
//! State is `[x, y, theta, v, omega]`; the action increments the velocity
//! pair, so control effort is bounded per step while speed itself is not:
//!
//! ```text
//! v'     = v + dv              omega' = omega + dw
//! theta' = theta + omega' dt
//! x'     = x + v' cos(theta') dt + alpha e0 dt
//! y'     = y + v' sin(theta') dt + alpha e1 dt
//! ```
//!
//! Reward is negative goal distance minus `10` per unit of smooth
//! penetration depth into any obstacle. Rectangles use a smooth minimum of
//! the four edge depths, circles the radial depth; both are softplus-clipped
//! at sharpness 6, so the cost fades within a fraction of a unit outside
//! the true boundary.

use super::smooth::{safe_dist, smooth_min, smooth_relu};
use super::{Model, SuccessKind};
use crate::autodiff::AdScalar;
use crate::error::{Error, Result};
use crate::real::Real;
use rand::Rng;
use serde::Deserialize;
use std::path::Path;

const DT: f64 = 0.25;
const MAX_DELTA_V: f64 = 0.3;
const MAX_DELTA_W: f64 = 0.3;
const OBSTACLE_COST: f64 = 10.0;
const EDGE_SHARPNESS: f64 = 6.0;

/// Axis-aligned rectangle or circle blocking the plane.
#[derive(Clone, Debug, PartialEq)]
pub enum Obstacle<T> {
    Rect { x0: T, x1: T, y0: T, y1: T },
    Circle { x: T, y: T, r: T },
}

/// Start pose, goal disc, and obstacle set for one navigation task.
#[derive(Clone, Debug, PartialEq)]
pub struct DubinsMap<T> {
    pub name: String,
    /// `[x, y, theta]`.
    pub start: [T; 3],
    pub goal: [T; 2],
    pub goal_radius: T,
    pub obstacles: Vec<Obstacle<T>>,
}

impl<T: Real> Default for DubinsMap<T> {
    fn default() -> Self {
        DubinsMap {
            name: "open".to_string(),
            start: [T::c(0.0), T::c(0.0), T::c(0.0)],
            goal: [T::c(6.0), T::c(0.0)],
            goal_radius: T::c(0.5),
            obstacles: Vec::new(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    #[serde(default)]
    name: Option<String>,
    start: [f64; 3],
    goal: [f64; 2],
    #[serde(default = "default_goal_radius")]
    goal_radius: f64,
    #[serde(default)]
    rects: Vec<RectRaw>,
    #[serde(default)]
    circles: Vec<CircleRaw>,
}

fn default_goal_radius() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RectRaw {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircleRaw {
    x: f64,
    y: f64,
    radius: f64,
}

impl<T: Real> DubinsMap<T> {
    /// Parses a TOML map file. Unknown keys and malformed geometry are
    /// reported with the file path; TOML syntax errors keep their line
    /// information.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Map {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let raw: MapFile = toml::from_str(text).map_err(|e| Error::Map {
            path: origin.to_string(),
            reason: e.to_string(),
        })?;
        let geometry_err = |reason: String| Error::Map {
            path: origin.to_string(),
            reason,
        };
        if raw.goal_radius <= 0.0 {
            return Err(geometry_err(format!(
                "goal_radius must be positive, got {}",
                raw.goal_radius
            )));
        }
        let mut obstacles = Vec::new();
        for r in &raw.rects {
            if r.x_min >= r.x_max || r.y_min >= r.y_max {
                return Err(geometry_err(format!(
                    "degenerate rectangle [{}, {}] x [{}, {}]",
                    r.x_min, r.x_max, r.y_min, r.y_max
                )));
            }
            obstacles.push(Obstacle::Rect {
                x0: T::c(r.x_min),
                x1: T::c(r.x_max),
                y0: T::c(r.y_min),
                y1: T::c(r.y_max),
            });
        }
        for c in &raw.circles {
            if c.radius <= 0.0 {
                return Err(geometry_err(format!(
                    "circle radius must be positive, got {}",
                    c.radius
                )));
            }
            obstacles.push(Obstacle::Circle {
                x: T::c(c.x),
                y: T::c(c.y),
                r: T::c(c.radius),
            });
        }
        Ok(DubinsMap {
            name: raw.name.unwrap_or_else(|| origin.to_string()),
            start: [T::c(raw.start[0]), T::c(raw.start[1]), T::c(raw.start[2])],
            goal: [T::c(raw.goal[0]), T::c(raw.goal[1])],
            goal_radius: T::c(raw.goal_radius),
            obstacles,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Dubins<T> {
    alpha: T,
    map: DubinsMap<T>,
}

impl<T: Real> Dubins<T> {
    pub fn new(alpha: T, map: DubinsMap<T>) -> Self {
        Dubins { alpha, map }
    }

    pub fn map(&self) -> &DubinsMap<T> {
        &self.map
    }

    /// Smooth penetration depth of `(x, y)` into one obstacle.
    fn penetration<S: AdScalar<Base = T>>(&self, ob: &Obstacle<T>, x: S, y: S) -> S {
        match *ob {
            Obstacle::Rect { x0, x1, y0, y1 } => {
                let depth_x = smooth_min(x.add_c(-x0), -x.add_c(-x1), EDGE_SHARPNESS);
                let depth_y = smooth_min(y.add_c(-y0), -y.add_c(-y1), EDGE_SHARPNESS);
                smooth_relu(smooth_min(depth_x, depth_y, EDGE_SHARPNESS), EDGE_SHARPNESS)
            }
            Obstacle::Circle { x: cx, y: cy, r } => {
                let d = safe_dist(x.add_c(-cx), y.add_c(-cy));
                smooth_relu(-d.add_c(-r), EDGE_SHARPNESS)
            }
        }
    }
}

impl<T: Real> Model<T> for Dubins<T> {
    fn name(&self) -> &'static str {
        "dubins"
    }

    fn n_s(&self) -> usize {
        5
    }

    fn n_a(&self) -> usize {
        2
    }

    fn n_eps(&self) -> usize {
        2
    }

    fn action_bounds(&self) -> Vec<(T, T)> {
        vec![
            (T::c(-MAX_DELTA_V), T::c(MAX_DELTA_V)),
            (T::c(-MAX_DELTA_W), T::c(MAX_DELTA_W)),
        ]
    }

    fn var_names(&self) -> Vec<String> {
        ["x", "y", "theta", "v", "omega"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn transition<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S], e: &[S]) -> Vec<S> {
        let dt = T::c(DT);
        let next_v = s[3] + a[0];
        let next_w = s[4] + a[1];
        let next_theta = s[2] + next_w.scale(dt);
        let step = next_v.scale(dt);
        let noise_scale = self.alpha * dt;
        let next_x = s[0] + step * next_theta.cos() + e[0].scale(noise_scale);
        let next_y = s[1] + step * next_theta.sin() + e[1].scale(noise_scale);
        vec![next_x, next_y, next_theta, next_v, next_w]
    }

    fn reward<S: AdScalar<Base = T>>(&self, s: &[S], _a: &[S]) -> S {
        let d = safe_dist(
            s[0].add_c(-self.map.goal[0]),
            s[1].add_c(-self.map.goal[1]),
        );
        let mut r = -d;
        for ob in &self.map.obstacles {
            r = r - self.penetration(ob, s[0], s[1]).scale(T::c(OBSTACLE_COST));
        }
        r
    }

    fn is_done(&self, s: &[T]) -> bool {
        let dx = s[0] - self.map.goal[0];
        let dy = s[1] - self.map.goal[1];
        dx * dx + dy * dy <= self.map.goal_radius * self.map.goal_radius
    }

    fn success_kind(&self) -> SuccessKind {
        SuccessKind::Reach
    }

    fn init_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> Vec<T> {
        vec![
            self.map.start[0],
            self.map.start[1],
            self.map.start[2],
            T::c(0.0),
            T::c(0.0),
        ]
    }

    fn xy_indices(&self) -> Option<(usize, usize)> {
        Some((0, 1))
    }

    fn goal_xy(&self) -> Option<(T, T)> {
        Some((self.map.goal[0], self.map.goal[1]))
    }
}
