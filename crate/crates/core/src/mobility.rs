//! Random-waypoint mobility.
//!
//! A node alternates between pausing and traveling in a straight line to a
//! uniformly drawn waypoint at a uniformly drawn speed in `[0, v_max]`.
//! Trajectories are a pure function of the per-node RNG stream, so two
//! runs with identical streams coincide exactly.

use rand::Rng;

use crate::netgraph::Point;

#[derive(Debug, Clone, Copy)]
pub struct MobilityParams {
    /// Rectangle the node may occupy, `(width, height)` in meters.
    pub area: (f64, f64),
    /// Upper bound of the uniform speed draw, m/s.
    pub v_max: f64,
    /// Pause duration on arrival at a waypoint, seconds.
    pub pause_s: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct WaypointState {
    position: Point,
    waypoint: Point,
    speed: f64,
    pause_remaining: f64,
    moving: bool,
}

impl WaypointState {
    /// A freshly placed node: paused with an expired timer, so the first
    /// `advance` immediately draws its first waypoint and speed.
    pub fn new(position: Point) -> Self {
        WaypointState {
            position,
            waypoint: position,
            speed: 0.0,
            pause_remaining: 0.0,
            moving: false,
        }
    }

    /// A node mid-leg, for deterministic tests and replays.
    pub fn moving_leg(position: Point, waypoint: Point, speed: f64) -> Self {
        WaypointState { position, waypoint, speed, pause_remaining: 0.0, moving: true }
    }

    pub fn position(&self) -> Point {
        self.position
    }

    /// 0 while paused, otherwise the drawn leg speed.
    pub fn current_speed(&self) -> f64 {
        if self.moving {
            self.speed
        } else {
            0.0
        }
    }

    /// Advance the node by `dt` seconds, consuming pauses, leg travel and
    /// waypoint draws as they occur within the interval.
    pub fn advance(&mut self, dt: f64, params: &MobilityParams, rng: &mut impl Rng) {
        assert!(dt >= 0.0, "dt must be non-negative");
        let mut remaining = dt;
        while remaining > 0.0 {
            if !self.moving {
                if self.pause_remaining > 0.0 {
                    let used = self.pause_remaining.min(remaining);
                    self.pause_remaining -= used;
                    remaining -= used;
                    continue;
                }
                self.waypoint = Point::new(
                    rng.gen_range(0.0..params.area.0),
                    rng.gen_range(0.0..params.area.1),
                );
                self.speed = if params.v_max > 0.0 {
                    rng.gen_range(0.0..=params.v_max)
                } else {
                    0.0
                };
                self.moving = true;
                continue;
            }
            let dist = self.position.distance(&self.waypoint);
            if dist == 0.0 {
                self.arrive(params);
                continue;
            }
            if self.speed <= 0.0 {
                // a zero-speed leg never arrives; the node just sits there
                return;
            }
            let travel_time = dist / self.speed;
            if travel_time <= remaining {
                self.position = self.waypoint;
                remaining -= travel_time;
                self.arrive(params);
            } else {
                let frac = self.speed * remaining / dist;
                self.position = Point::new(
                    self.position.x + (self.waypoint.x - self.position.x) * frac,
                    self.position.y + (self.waypoint.y - self.position.y) * frac,
                );
                remaining = 0.0;
            }
        }
    }

    fn arrive(&mut self, params: &MobilityParams) {
        self.moving = false;
        self.speed = 0.0;
        self.pause_remaining = params.pause_s;
    }
}
