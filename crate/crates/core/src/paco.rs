//! Path Adaptive Collaborative Optimization: an ant colony search over the
//! grid whose evaporation rate decays with a sigmoid in the iteration
//! counter, and the Q-table seeding built from its best tour.
//!
//! Each iteration releases `m` ants from the start cell. An ant moves to an
//! allowed neighbour `j` of its current cell `i` with probability
//! proportional to `tau_ij^alpha * eta_j^beta`, where `eta_j` is
//! `1 / (1 + d(j, goal))`. Ants never revisit a cell; an ant with no allowed
//! neighbour is abandoned for the iteration. After all ants have moved the
//! field evaporates by `rho(nc) = lambda1 / (1 + exp(lambda * nc / (3m)))`
//! and every goal-reaching ant deposits `Q / L_k` on each edge it used.

use rand::Rng;
use thiserror::Error;

use crate::geometry::{distance, Metric};
use crate::grid::{Action, Cell, GridError, GridMap};
use crate::qlearn::QTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PacoError {
    #[error("invalid ant colony parameter: {0}")]
    Params(String),
    #[error("ant at cell {0} has no allowed neighbour")]
    DeadEnd(Cell),
    #[error("goal is unreachable from the start")]
    Unreachable,
    #[error("no ant reached the goal within {iterations} iterations")]
    NoPathFound { iterations: usize },
    #[error("tour does not reach the goal")]
    TourIncomplete,
    #[error("tour length must be positive, got {0}")]
    TourLength(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacoParams {
    /// Ants per iteration.
    pub m: usize,
    /// Pheromone exponent.
    pub alpha: f64,
    /// Heuristic exponent.
    pub beta: f64,
    /// Volatility adjustment coefficient.
    pub lambda1: f64,
    /// Volatility shape parameter.
    pub lambda: f64,
    pub q_deposit: f64,
    pub tau0: f64,
    pub max_iters: usize,
}

impl Default for PacoParams {
    fn default() -> Self {
        PacoParams {
            m: 20,
            alpha: 1.0,
            beta: 4.0,
            lambda1: 0.9,
            lambda: 1.0,
            q_deposit: 1.0,
            tau0: 1.0,
            max_iters: 60,
        }
    }
}

impl PacoParams {
    pub fn validate(&self) -> Result<(), PacoError> {
        let bad = |what: &str| Err(PacoError::Params(what.to_string()));
        if self.m == 0 {
            return bad("m must be at least 1");
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return bad("tau0 must be positive");
        }
        if !(self.lambda1 > 0.0 && self.lambda1 < 2.0) {
            return bad("lambda1 must lie in (0, 2)");
        }
        if !(self.q_deposit > 0.0 && self.q_deposit.is_finite()) {
            return bad("q must be positive");
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return bad("alpha and beta must be finite");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be nonnegative");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        Ok(())
    }
}

/// Pheromone per directed edge, stored as one slot per (cell, action).
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneField {
    tau: Vec<[f64; Action::COUNT]>,
}

impl PheromoneField {
    pub fn new(map: &GridMap, tau0: f64) -> Self {
        PheromoneField {
            tau: vec![[tau0; Action::COUNT]; map.cell_count()],
        }
    }

    pub fn get(&self, from: Cell, action: Action) -> f64 {
        self.tau[from.index()][action.index()]
    }

    pub fn set(&mut self, from: Cell, action: Action, value: f64) {
        self.tau[from.index()][action.index()] = value;
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.tau.iter().flat_map(|row| row.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntTour {
    pub visited: Vec<Cell>,
    pub reached_goal: bool,
    /// Euclidean length of the walked path.
    pub length: f64,
}

impl AntTour {
    /// Builds a tour from a cell sequence, measuring its Euclidean length.
    pub fn from_cells(map: &GridMap, visited: Vec<Cell>) -> Self {
        let length = path_length(map, &visited, Metric::Euclidean);
        let reached_goal = visited.last() == Some(&map.goal());
        AntTour {
            visited,
            reached_goal,
            length,
        }
    }

    /// `(from, action)` for each step of the tour.
    pub fn moves<'a>(&'a self, map: &'a GridMap) -> impl Iterator<Item = (Cell, Action)> + 'a {
        self.visited.windows(2).map(move |w| {
            let a = map
                .action_between(w[0], w[1])
                .expect("tour cells are adjacent");
            (w[0], a)
        })
    }
}

pub fn path_length(map: &GridMap, cells: &[Cell], metric: Metric) -> f64 {
    cells
        .windows(2)
        .map(|w| {
            distance(
                metric,
                map.coords(w[0]).as_point(),
                map.coords(w[1]).as_point(),
            )
        })
        .sum()
}

fn heuristic(map: &GridMap, metric: Metric, cell: Cell) -> f64 {
    let d = distance(
        metric,
        map.coords(cell).as_point(),
        map.coords(map.goal()).as_point(),
    );
    1.0 / (1.0 + d)
}

/// Move probabilities for an ant at `current` that has already visited the
/// cells flagged in `tabu` (indexed by [`Cell::index`]). Returns one entry
/// per allowed move; tabu and illegal moves are omitted (probability zero).
pub fn transition_probabilities(
    field: &PheromoneField,
    params: &PacoParams,
    map: &GridMap,
    metric: Metric,
    current: Cell,
    tabu: &[bool],
) -> Result<Vec<(Action, Cell, f64)>, PacoError> {
    let legal = map.legal_actions(current)?;
    let coord = map.coords(current);
    let mut weights: Vec<(Action, Cell, f64)> = legal
        .iter()
        .filter_map(|a| {
            let next = map.cell_at(coord.offset(a))?;
            if tabu[next.index()] {
                return None;
            }
            let w = field.get(current, a).powf(params.alpha)
                * heuristic(map, metric, next).powf(params.beta);
            Some((a, next, w))
        })
        .collect();
    if weights.is_empty() {
        return Err(PacoError::DeadEnd(current));
    }
    let total: f64 = weights.iter().map(|w| w.2).sum();
    if total > 0.0 && total.is_finite() {
        for w in &mut weights {
            w.2 /= total;
        }
    } else {
        // every weight underflowed; fall back to uniform
        let p = 1.0 / weights.len() as f64;
        for w in &mut weights {
            w.2 = p;
        }
    }
    Ok(weights)
}

pub fn volatility(nc: usize, params: &PacoParams) -> f64 {
    let exponent = params.lambda * nc as f64 / (3.0 * params.m as f64);
    params.lambda1 / (1.0 + exponent.exp())
}

/// Evaporates the whole field by `rho(nc)` and deposits `Q / L_k` along each
/// goal-reaching tour. Tours that did not reach the goal deposit nothing.
pub fn update_pheromones(
    field: &mut PheromoneField,
    tours: &[AntTour],
    nc: usize,
    params: &PacoParams,
    map: &GridMap,
) -> Result<(), PacoError> {
    for tour in tours.iter().filter(|t| t.reached_goal) {
        if tour.length.is_nan() || tour.length <= 0.0 {
            return Err(PacoError::TourLength(tour.length));
        }
    }
    let keep = 1.0 - volatility(nc, params);
    for row in &mut field.tau {
        for tau in row.iter_mut() {
            *tau *= keep;
        }
    }
    for tour in tours.iter().filter(|t| t.reached_goal) {
        let deposit = params.q_deposit / tour.length;
        for (from, action) in tour.moves(map) {
            field.tau[from.index()][action.index()] += deposit;
        }
    }
    Ok(())
}

fn walk_ant<R: Rng + ?Sized>(
    field: &PheromoneField,
    params: &PacoParams,
    map: &GridMap,
    metric: Metric,
    rng: &mut R,
) -> Result<AntTour, PacoError> {
    let mut tabu = vec![false; map.cell_count()];
    let mut current = map.start();
    tabu[current.index()] = true;
    let mut visited = vec![current];
    while current != map.goal() {
        let options = match transition_probabilities(field, params, map, metric, current, &tabu) {
            Ok(o) => o,
            Err(PacoError::DeadEnd(_)) => break,
            Err(e) => return Err(e),
        };
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = options.last().unwrap().1;
        for &(_, next, p) in &options {
            acc += p;
            if draw < acc {
                chosen = next;
                break;
            }
        }
        current = chosen;
        tabu[current.index()] = true;
        visited.push(current);
    }
    Ok(AntTour::from_cells(map, visited))
}

#[derive(Debug, Clone)]
pub struct PacoOutcome {
    pub best_tour: AntTour,
    pub field: PheromoneField,
    /// Shortest goal-reaching tour of each iteration, `None` when no ant
    /// arrived.
    pub history: Vec<Option<f64>>,
}

/// Runs the colony for `max_iters` iterations and returns the shortest
/// goal-reaching tour seen. `metric` drives the goal-distance heuristic.
pub fn run_paco<R: Rng + ?Sized>(
    map: &GridMap,
    params: &PacoParams,
    metric: Metric,
    rng: &mut R,
) -> Result<PacoOutcome, PacoError> {
    params.validate()?;
    if !map.goal_reachable() {
        return Err(PacoError::Unreachable);
    }
    let mut field = PheromoneField::new(map, params.tau0);
    let mut best: Option<AntTour> = None;
    let mut history = Vec::with_capacity(params.max_iters);
    for nc in 0..params.max_iters {
        let tours = (0..params.m)
            .map(|_| walk_ant(&field, params, map, metric, rng))
            .collect::<Result<Vec<_>, _>>()?;
        let iter_best = tours
            .iter()
            .filter(|t| t.reached_goal)
            .min_by(|a, b| a.length.total_cmp(&b.length));
        history.push(iter_best.map(|t| t.length));
        if let Some(t) = iter_best {
            if best.as_ref().is_none_or(|b| t.length < b.length) {
                best = Some(t.clone());
            }
        }
        update_pheromones(&mut field, &tours, nc, params, map)?;
    }
    let best_tour = best.ok_or(PacoError::NoPathFound {
        iterations: params.max_iters,
    })?;
    Ok(PacoOutcome {
        best_tour,
        field,
        history,
    })
}

/// Q-table holding `v_init` on every `(cell, action)` of the tour and zero
/// elsewhere.
pub fn seed_qtable(best_tour: &AntTour, v_init: f64, map: &GridMap) -> Result<QTable, PacoError> {
    if !best_tour.reached_goal || best_tour.visited.len() < 2 {
        return Err(PacoError::TourIncomplete);
    }
    let mut q = QTable::zeros(map);
    for (from, action) in best_tour.moves(map) {
        q.set(from, action, v_init);
    }
    Ok(q)
}
