//! Random-waypoint motion and the running-average speed statistic.

use rand_chacha::ChaCha12Rng;

use crate::model::{distance, Position};
use crate::rng::{u01, uniform_f64};

/// Motion parameters shared by all nodes, taken from the scenario.
#[derive(Clone, Copy, Debug)]
pub struct MobilityParams {
    pub world_width: f64,
    pub world_height: f64,
    pub min_speed: f64,
    pub max_speed: f64,
    pub pause_ticks: u64,
}

/// Per-node random-waypoint state.
#[derive(Clone, PartialEq, Debug)]
pub struct WaypointState {
    pub current: Position,
    pub target: Position,
    /// Length units covered per tick while en route.
    pub speed: f64,
    pub pause_remaining: u64,
}

impl WaypointState {
    /// A node that starts at rest at `p` and will pick a waypoint on its
    /// first step.
    pub fn at(p: Position) -> Self {
        WaypointState {
            current: p,
            target: p,
            speed: 0.0,
            pause_remaining: 0,
        }
    }
}

/// Advance one tick of random-waypoint motion. While pausing, only the
/// pause counter changes. At the end of a pause a fresh uniform waypoint
/// and speed are drawn from the node's own stream and the node moves
/// toward it, clamping exactly onto the target on the arrival tick.
pub fn mobility_step(state: &mut WaypointState, params: &MobilityParams, rng: &mut ChaCha12Rng) {
    if state.pause_remaining > 0 {
        state.pause_remaining -= 1;
        return;
    }
    if state.current == state.target {
        state.target = Position::new(
            uniform_f64(rng, 0.0, params.world_width),
            uniform_f64(rng, 0.0, params.world_height),
        );
        state.speed = if params.max_speed > params.min_speed {
            uniform_f64(rng, params.min_speed, params.max_speed)
        } else {
            let _ = u01(rng); // keep stream consumption uniform
            params.min_speed
        };
        if state.speed <= 0.0 {
            // Zero-speed legs would never arrive; stay put this tick.
            state.target = state.current;
            return;
        }
    }

    let remaining = distance(state.current, state.target);
    if remaining <= state.speed {
        state.current = state.target;
        state.pause_remaining = params.pause_ticks;
    } else {
        let f = state.speed / remaining;
        state.current = Position::new(
            state.current.x + (state.target.x - state.current.x) * f,
            state.current.y + (state.target.y - state.current.y) * f,
        );
    }
}

/// Incremental form of the running average speed: total displacement over
/// the number of sampled ticks.
#[derive(Clone, PartialEq, Debug)]
pub struct SpeedHistory {
    pub prev_position: Position,
    pub cumulative_displacement: f64,
    pub samples: u64,
}

impl SpeedHistory {
    pub fn starting_at(p: Position) -> Self {
        SpeedHistory {
            prev_position: p,
            cumulative_displacement: 0.0,
            samples: 0,
        }
    }
}

/// Fold one per-tick position sample into the history.
pub fn update_speed_history(h: &mut SpeedHistory, new_pos: Position) {
    h.cumulative_displacement += distance(h.prev_position, new_pos);
    h.samples += 1;
    h.prev_position = new_pos;
}

/// The mobility measure M: average per-tick displacement so far. A node
/// with no samples yet counts as immobile.
pub fn mobility_metric(h: &SpeedHistory) -> f64 {
    if h.samples == 0 {
        0.0
    } else {
        h.cumulative_displacement / h.samples as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, StreamDomain};
    use proptest::prelude::*;

    fn params() -> MobilityParams {
        MobilityParams {
            world_width: 100.0,
            world_height: 100.0,
            min_speed: 1.0,
            max_speed: 3.0,
            pause_ticks: 2,
        }
    }

    #[test]
    fn pause_counts_down_without_moving() {
        let mut s = WaypointState {
            current: Position::new(5.0, 5.0),
            target: Position::new(5.0, 5.0),
            speed: 2.0,
            pause_remaining: 2,
        };
        let mut rng = derive_stream(1, StreamDomain::NodeMobility, 1);
        mobility_step(&mut s, &params(), &mut rng);
        assert_eq!(s.current, Position::new(5.0, 5.0));
        assert_eq!(s.pause_remaining, 1);
    }

    #[test]
    fn advances_toward_target_by_speed() {
        let mut s = WaypointState {
            current: Position::new(0.0, 0.0),
            target: Position::new(10.0, 0.0),
            speed: 3.0,
            pause_remaining: 0,
        };
        let mut rng = derive_stream(1, StreamDomain::NodeMobility, 1);
        mobility_step(&mut s, &params(), &mut rng);
        assert_eq!(s.current, Position::new(3.0, 0.0));
    }

    #[test]
    fn arrival_clamps_onto_target() {
        let mut s = WaypointState {
            current: Position::new(9.0, 0.0),
            target: Position::new(10.0, 0.0),
            speed: 3.0,
            pause_remaining: 0,
        };
        let mut rng = derive_stream(1, StreamDomain::NodeMobility, 1);
        mobility_step(&mut s, &params(), &mut rng);
        assert_eq!(s.current, Position::new(10.0, 0.0));
        assert_eq!(s.pause_remaining, 2);
    }

    #[test]
    fn speed_history_direct_formula() {
        let mut h = SpeedHistory::starting_at(Position::new(0.0, 0.0));
        update_speed_history(&mut h, Position::new(3.0, 4.0));
        update_speed_history(&mut h, Position::new(3.0, 4.0));
        assert_eq!(mobility_metric(&h), 2.5);
    }

    #[test]
    fn stationary_node_has_zero_mobility() {
        let mut h = SpeedHistory::starting_at(Position::new(7.0, 7.0));
        for _ in 0..10 {
            update_speed_history(&mut h, Position::new(7.0, 7.0));
        }
        assert_eq!(mobility_metric(&h), 0.0);
    }

    #[test]
    fn single_step_average_is_the_step() {
        let mut h = SpeedHistory::starting_at(Position::new(0.0, 0.0));
        update_speed_history(&mut h, Position::new(7.0, 0.0));
        assert_eq!(mobility_metric(&h), 7.0);
    }

    #[test]
    fn no_samples_means_zero() {
        let h = SpeedHistory::starting_at(Position::new(1.0, 1.0));
        assert_eq!(mobility_metric(&h), 0.0);
    }

    #[test]
    fn fixed_ratio_example() {
        let mut h = SpeedHistory::starting_at(Position::new(0.0, 0.0));
        update_speed_history(&mut h, Position::new(10.0, 0.0));
        for _ in 0..3 {
            let stay = h.prev_position;
            update_speed_history(&mut h, stay);
        }
        assert_eq!(mobility_metric(&h), 2.5);
    }

    proptest! {
        /// The incremental form must equal a literal re-summation of the
        /// whole displacement trace.
        #[test]
        fn metric_matches_trace_oracle(seed in 0u64..500, steps in 1usize..60) {
            let mut rng = derive_stream(seed, StreamDomain::NodeMobility, 42);
            let start = Position::new(uniform_f64(&mut rng, 0.0, 100.0), uniform_f64(&mut rng, 0.0, 100.0));
            let mut h = SpeedHistory::starting_at(start);
            let mut trace = alloc::vec![start];
            for _ in 0..steps {
                let p = Position::new(uniform_f64(&mut rng, 0.0, 100.0), uniform_f64(&mut rng, 0.0, 100.0));
                update_speed_history(&mut h, p);
                trace.push(p);
            }
            let total: f64 = trace.windows(2).map(|w| distance(w[0], w[1])).sum();
            let oracle = total / steps as f64;
            prop_assert!((mobility_metric(&h) - oracle).abs() < 1e-9);
        }

        /// Motion never leaves the world rectangle and identical seeds give
        /// identical trajectories.
        #[test]
        fn stays_in_world_and_is_deterministic(seed in 0u64..200) {
            let p = params();
            let start = Position::new(50.0, 50.0);
            let mut a = WaypointState::at(start);
            let mut b = WaypointState::at(start);
            let mut rng_a = derive_stream(seed, StreamDomain::NodeMobility, 3);
            let mut rng_b = derive_stream(seed, StreamDomain::NodeMobility, 3);
            for _ in 0..200 {
                mobility_step(&mut a, &p, &mut rng_a);
                mobility_step(&mut b, &p, &mut rng_b);
                prop_assert_eq!(&a, &b);
                prop_assert!(a.current.x >= 0.0 && a.current.x <= p.world_width);
                prop_assert!(a.current.y >= 0.0 && a.current.y <= p.world_height);
            }
        }
    }
}
