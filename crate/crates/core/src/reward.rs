//! Step rewards: the negative step distance and its UCH-scaled form,
//! `mu(t) * raw` with `mu(t) = mu0 / (pi + pi * exp(-t))`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{distance, Metric};
use crate::grid::{Coord, GridMap, Outcome, Transition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("mu0 must be positive and finite when UCH is enabled, got {0}")]
    Mu0(f64),
    #[error("goal_reward must be finite, got {0}")]
    GoalReward(f64),
}

/// How a blocked move is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollisionPenalty {
    /// The distance of the step the agent tried to take.
    #[default]
    AttemptedStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub metric: Metric,
    pub mu0: f64,
    pub uch_enabled: bool,
    pub goal_reward: f64,
    pub collision_penalty: CollisionPenalty,
}

impl RewardConfig {
    pub const DEFAULT_MU0: f64 = 0.016;

    /// Unshaped reward under `metric`.
    pub fn raw(metric: Metric) -> Self {
        RewardConfig {
            metric,
            mu0: Self::DEFAULT_MU0,
            uch_enabled: false,
            goal_reward: 0.0,
            collision_penalty: CollisionPenalty::AttemptedStep,
        }
    }

    pub fn uch(metric: Metric, mu0: f64) -> Self {
        RewardConfig {
            mu0,
            uch_enabled: true,
            ..Self::raw(metric)
        }
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        if self.uch_enabled && !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return Err(RewardError::Mu0(self.mu0));
        }
        if !self.goal_reward.is_finite() {
            return Err(RewardError::GoalReward(self.goal_reward));
        }
        Ok(())
    }
}

pub fn raw_reward(metric: Metric, prev: Coord, current: Coord) -> f64 {
    -distance(metric, current.as_point(), prev.as_point())
}

pub fn uch_coefficient(t: u64, mu0: f64) -> f64 {
    mu0 / (PI + PI * (-(t as f64)).exp())
}

/// Reward for `transition` during episode `t`. A blocked move is charged
/// the distance of the attempted step.
pub fn shaped_reward(cfg: &RewardConfig, t: u64, map: &GridMap, transition: &Transition) -> f64 {
    let from = map.coords(transition.from);
    let to = match transition.outcome {
        Outcome::BlockedStay => match cfg.collision_penalty {
            CollisionPenalty::AttemptedStep => from.offset(transition.action),
        },
        Outcome::Moved | Outcome::ReachedGoal => map.coords(transition.to),
    };
    let base = raw_reward(cfg.metric, from, to);
    let mut reward = if cfg.uch_enabled {
        uch_coefficient(t, cfg.mu0) * base
    } else {
        base
    };
    if transition.outcome == Outcome::ReachedGoal {
        reward += cfg.goal_reward;
    }
    reward
}
