//! Tabular Q-learning over the 8-action grid: the Q-table, epsilon-greedy
//! selection, the one-step update and the training loop for the four
//! algorithm variants.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::Metric;
use crate::grid::{Action, ActionMask, Cell, GridError, GridMap, Outcome};
use crate::paco::{run_paco, seed_qtable, AntTour, PacoError, PacoParams};
use crate::reward::{shaped_reward, RewardConfig, RewardError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("invalid learning parameter: {0}")]
    Params(String),
    #[error("no legal action to choose from")]
    NoLegalAction,
    #[error("reward must be finite, got {0}")]
    NonFiniteReward(f64),
    #[error("Q-table is {got_h}x{got_v} but the map is {h}x{v}")]
    DimensionMismatch {
        got_h: usize,
        got_v: usize,
        h: usize,
        v: usize,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error("ant colony initialisation failed: {0}")]
    Paco(#[from] PacoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    h: usize,
    v: usize,
    values: Vec<[f64; Action::COUNT]>,
}

impl QTable {
    pub fn zeros(map: &GridMap) -> Self {
        Self::constant(map, 0.0)
    }

    pub fn constant(map: &GridMap, value: f64) -> Self {
        QTable {
            h: map.h(),
            v: map.v(),
            values: vec![[value; Action::COUNT]; map.cell_count()],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h, self.v)
    }

    pub fn check_dims(&self, map: &GridMap) -> Result<(), LearnError> {
        if (self.h, self.v) != (map.h(), map.v()) {
            return Err(LearnError::DimensionMismatch {
                got_h: self.h,
                got_v: self.v,
                h: map.h(),
                v: map.v(),
            });
        }
        Ok(())
    }

    pub fn get(&self, cell: Cell, action: Action) -> f64 {
        self.values[cell.index()][action.index()]
    }

    pub fn set(&mut self, cell: Cell, action: Action, value: f64) {
        self.values[cell.index()][action.index()] = value;
    }

    pub fn row(&self, cell: Cell) -> &[f64; Action::COUNT] {
        &self.values[cell.index()]
    }

    /// Largest value over all eight actions at `cell`.
    pub fn max_value(&self, cell: Cell) -> f64 {
        self.row(cell)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flat_map(|r| r.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub episodes: usize,
    /// Per-episode step cap; `None` means `4 * h * v`.
    pub max_steps: Option<usize>,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            alpha: 0.3,
            gamma: 0.95,
            epsilon: 0.1,
            episodes: 1000,
            max_steps: None,
        }
    }
}

impl LearnParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::Params(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.max_steps == Some(0) {
            return bad("max_steps must be positive");
        }
        Ok(())
    }

    pub fn step_cap(&self, map: &GridMap) -> usize {
        self.max_steps.unwrap_or(4 * map.cell_count())
    }
}

/// With probability `epsilon` a uniformly random legal action, otherwise a
/// legal action of maximal value with ties broken uniformly at random.
pub fn epsilon_greedy<R: Rng + ?Sized>(
    q_row: &[f64; Action::COUNT],
    legal: ActionMask,
    epsilon: f64,
    rng: &mut R,
) -> Result<Action, LearnError> {
    if legal.is_empty() {
        return Err(LearnError::NoLegalAction);
    }
    if rng.gen::<f64>() < epsilon {
        let k = rng.gen_range(0..legal.len());
        return Ok(legal.iter().nth(k).unwrap());
    }
    let best = legal
        .iter()
        .map(|a| q_row[a.index()])
        .fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<Action> = legal.iter().filter(|a| q_row[a.index()] == best).collect();
    if tied.len() == 1 {
        return Ok(tied[0]);
    }
    Ok(tied[rng.gen_range(0..tied.len())])
}

/// Deterministic greedy choice: the first legal action of maximal value.
pub fn greedy_action(q_row: &[f64; Action::COUNT], legal: ActionMask) -> Option<Action> {
    let mut best: Option<Action> = None;
    for a in legal.iter() {
        if best.is_none_or(|b| q_row[a.index()] > q_row[b.index()]) {
            best = Some(a);
        }
    }
    best
}

/// `Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))`, the max
/// taken over all eight actions at `s_next`.
pub fn q_update(
    q: &mut QTable,
    s: Cell,
    a: Action,
    r: f64,
    s_next: Cell,
    params: &LearnParams,
) -> Result<(), LearnError> {
    if !r.is_finite() {
        return Err(LearnError::NonFiniteReward(r));
    }
    let target = r + params.gamma * q.max_value(s_next);
    let old = q.get(s, a);
    q.set(s, a, old + params.alpha * (target - old));
    Ok(())
}

/// Greedy rollout of the current table from the start cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPath {
    pub cells: Vec<Cell>,
    pub reached_goal: bool,
}

impl GreedyPath {
    /// FNV-1a over the cell numbers, used to tell paths apart in traces.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for c in &self.cells {
            for b in (c.number() as u64).to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Follows the greedy legal action from the start until the goal, a
/// revisited cell (the policy loops) or `cap` steps.
pub fn greedy_path(map: &GridMap, q: &QTable, cap: usize) -> Result<GreedyPath, LearnError> {
    let mut seen = vec![false; map.cell_count()];
    let mut cell = map.start();
    seen[cell.index()] = true;
    let mut cells = vec![cell];
    for _ in 0..cap {
        let legal = map.legal_actions(cell)?;
        let Some(a) = greedy_action(q.row(cell), legal) else {
            break;
        };
        let t = map.step(cell, a)?;
        cell = t.to;
        cells.push(cell);
        if t.outcome == Outcome::ReachedGoal {
            return Ok(GreedyPath {
                cells,
                reached_goal: true,
            });
        }
        if seen[cell.index()] {
            break;
        }
        seen[cell.index()] = true;
    }
    Ok(GreedyPath {
        cells,
        reached_goal: false,
    })
}

/// Sum of rewards collected along `path` during episode `t`.
pub fn path_return(
    map: &GridMap,
    cfg: &RewardConfig,
    t: u64,
    path: &[Cell],
) -> Result<f64, LearnError> {
    let mut total = 0.0;
    for w in path.windows(2) {
        let a = map
            .action_between(w[0], w[1])
            .ok_or(LearnError::Params("path cells are not adjacent".into()))?;
        total += shaped_reward(cfg, t, map, &map.step(w[0], a)?);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// Sum of rewards collected while exploring.
    pub ret: f64,
    pub steps: usize,
    pub reached_goal: bool,
    /// Return of the greedy rollout after the episode, `None` when that
    /// rollout does not reach the goal.
    pub greedy_return: Option<f64>,
    pub greedy_steps: usize,
    pub greedy_fingerprint: u64,
}

/// One exploring episode from the start cell. Every action may be attempted;
/// blocked moves leave the agent in place.
pub fn run_episode<R: Rng + ?Sized>(
    map: &GridMap,
    q: &mut QTable,
    reward: &RewardConfig,
    params: &LearnParams,
    t: u64,
    rng: &mut R,
) -> Result<EpisodeRecord, LearnError> {
    q.check_dims(map)?;
    let mut s = map.start();
    let mut ret = 0.0;
    let mut steps = 0;
    let mut reached_goal = false;
    for _ in 0..params.step_cap(map) {
        let a = epsilon_greedy(q.row(s), ActionMask::ALL, params.epsilon, rng)?;
        let tr = map.step(s, a)?;
        let r = shaped_reward(reward, t, map, &tr);
        q_update(q, s, a, r, tr.to, params)?;
        ret += r;
        steps += 1;
        s = tr.to;
        if tr.outcome == Outcome::ReachedGoal {
            reached_goal = true;
            break;
        }
    }
    let greedy = greedy_path(map, q, params.step_cap(map))?;
    let greedy_return = if greedy.reached_goal {
        Some(path_return(map, reward, t, &greedy.cells)?)
    } else {
        None
    };
    Ok(EpisodeRecord {
        ret,
        steps,
        reached_goal,
        greedy_return,
        greedy_steps: greedy.cells.len() - 1,
        greedy_fingerprint: greedy.fingerprint(),
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub records: Vec<EpisodeRecord>,
}

impl TrainingTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Per-episode greedy-rollout returns; `NaN` where the rollout failed.
    /// This is the series the convergence metrics are computed on.
    pub fn returns(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.greedy_return.unwrap_or(f64::NAN))
            .collect()
    }

    pub fn training_returns(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ret).collect()
    }

    pub fn total_steps(&self) -> usize {
        self.records.iter().map(|r| r.steps).sum()
    }
}

/// The four compared algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Zero-initialised table, raw Euclidean reward.
    A,
    /// Ant-colony seeded table, raw Euclidean reward.
    B,
    /// Zero-initialised table, UCH-shaped reward.
    C,
    /// Ant-colony seeded table, UCH-shaped reward.
    D,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::A, Variant::B, Variant::C, Variant::D];

    pub fn letter(self) -> char {
        match self {
            Variant::A => 'a',
            Variant::B => 'b',
            Variant::C => 'c',
            Variant::D => 'd',
        }
    }

    pub fn seeds_from_colony(self) -> bool {
        matches!(self, Variant::B | Variant::D)
    }

    pub fn shapes_reward(self) -> bool {
        matches!(self, Variant::C | Variant::D)
    }

    /// Reward used by this variant given the experiment's reward settings:
    /// a and b always use the raw Euclidean step penalty.
    pub fn reward_config(self, base: &RewardConfig) -> RewardConfig {
        if self.shapes_reward() {
            *base
        } else {
            RewardConfig {
                metric: Metric::Euclidean,
                uch_enabled: false,
                ..*base
            }
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Variant::A),
            "b" => Ok(Variant::B),
            "c" => Ok(Variant::C),
            "d" => Ok(Variant::D),
            other => Err(format!("unknown variant {other:?} (expected a, b, c or d)")),
        }
    }
}

/// Random streams derived from a run seed. Each purpose gets its own
/// ChaCha stream so one consumer never shifts another's draws, and every
/// variant trained with the same seed sees the same numbers.
pub fn stream_rng(seed: u64, stream: RngStream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngStream {
    Colony = 1,
    Episodes = 2,
    MapLayout = 3,
}

/// Q-table initialisation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitConfig {
    pub paco: PacoParams,
    /// Value written on the best tour's moves.
    pub v_init: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            paco: PacoParams::default(),
            v_init: 9.3397,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trace: TrainingTrace,
    pub q: QTable,
    pub colony_tour: Option<AntTour>,
}

pub fn initial_table(
    map: &GridMap,
    variant: Variant,
    reward: &RewardConfig,
    init: &InitConfig,
    seed: u64,
) -> Result<(QTable, Option<AntTour>), LearnError> {
    if !variant.seeds_from_colony() {
        return Ok((QTable::zeros(map), None));
    }
    let mut rng = stream_rng(seed, RngStream::Colony);
    let metric = variant.reward_config(reward).metric;
    let out = run_paco(map, &init.paco, metric, &mut rng)?;
    let q = seed_qtable(&out.best_tour, init.v_init, map)?;
    Ok((q, Some(out.best_tour)))
}

pub fn train(
    map: &GridMap,
    variant: Variant,
    reward: &RewardConfig,
    learn: &LearnParams,
    init: &InitConfig,
    seed: u64,
) -> Result<TrainOutcome, LearnError> {
    learn.validate()?;
    let reward = variant.reward_config(reward);
    reward.validate()?;
    let (mut q, colony_tour) = initial_table(map, variant, &reward, init, seed)?;
    let mut rng = stream_rng(seed, RngStream::Episodes);
    let mut trace = TrainingTrace {
        records: Vec::with_capacity(learn.episodes),
    };
    for t in 0..learn.episodes {
        trace.records.push(run_episode(
            map, &mut q, &reward, learn, t as u64, &mut rng,
        )?);
    }
    Ok(TrainOutcome {
        trace,
        q,
        colony_tour,
    })
}
