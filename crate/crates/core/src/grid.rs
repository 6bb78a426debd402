//! Raster environment: cell numbering, the 8-direction action space,
//! obstacle collision and the diagonal corner-cutting prohibition.
//!
//! Cells are numbered `1..=h*v` column by column, bottom to top within a
//! column and columns left to right. Coordinates are 1-based, `x` grows to
//! the right and `y` grows upward.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("cell number {number} is outside 1..={max}")]
    CellOutOfRange { number: usize, max: usize },
    #[error("coordinate ({x}, {y}) is outside the {h}x{v} grid")]
    CoordOutOfRange { x: i64, y: i64, h: usize, v: usize },
    #[error("grid dimensions must be positive, got {h}x{v}")]
    EmptyGrid { h: usize, v: usize },
    #[error("obstacle mask has {got} cells, expected {expected}")]
    MaskLength { got: usize, expected: usize },
    #[error("start and goal are the same cell {0}")]
    StartIsGoal(usize),
    #[error("{which} cell {number} is an obstacle")]
    EndpointBlocked { which: &'static str, number: usize },
    #[error("cell {0} is an obstacle")]
    OnObstacle(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("map line {line}: {message}")]
pub struct MapParseError {
    pub line: usize,
    pub message: String,
}

/// A cell identified by its 1-based number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell(usize);

impl Cell {
    /// Builds a cell without range checking; use [`GridMap::cell`] for
    /// checked construction.
    pub const fn from_number(number: usize) -> Self {
        Cell(number)
    }

    pub const fn number(self) -> usize {
        self.0
    }

    /// Zero-based index used for dense per-cell storage.
    pub const fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coord {
    pub x: i64,
    pub y: i64,
}

impl Coord {
    pub const fn new(x: i64, y: i64) -> Self {
        Coord { x, y }
    }

    pub fn offset(self, action: Action) -> Coord {
        let (dx, dy) = action.delta();
        Coord::new(self.x + dx, self.y + dy)
    }

    pub fn as_point(self) -> (f64, f64) {
        (self.x as f64, self.y as f64)
    }
}

/// Converts a cell number to `(x, y)` on a grid with `h` columns of `v`
/// cells each: `x = ceil(c / v)`, `y = c mod v` (or `v` when the remainder
/// is zero). On square maps this is exactly `ceil(c / h)`, `mod(c, h)`.
pub fn cell_to_coords(number: usize, h: usize, v: usize) -> Result<(usize, usize), GridError> {
    let max = h * v;
    if number == 0 || number > max {
        return Err(GridError::CellOutOfRange { number, max });
    }
    let x = number.div_ceil(v);
    let y = match number % v {
        0 => v,
        r => r,
    };
    Ok((x, y))
}

pub fn coords_to_cell(x: usize, y: usize, h: usize, v: usize) -> Result<usize, GridError> {
    if x == 0 || x > h || y == 0 || y > v {
        return Err(GridError::CoordOutOfRange {
            x: x as i64,
            y: y as i64,
            h,
            v,
        });
    }
    Ok((x - 1) * v + y)
}

/// One of the eight compass moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Action {
    pub const COUNT: usize = 8;
    pub const ALL: [Action; 8] = [
        Action::N,
        Action::NE,
        Action::E,
        Action::SE,
        Action::S,
        Action::SW,
        Action::W,
        Action::NW,
    ];

    pub const fn delta(self) -> (i64, i64) {
        match self {
            Action::N => (0, 1),
            Action::NE => (1, 1),
            Action::E => (1, 0),
            Action::SE => (1, -1),
            Action::S => (0, -1),
            Action::SW => (-1, -1),
            Action::W => (-1, 0),
            Action::NW => (-1, 1),
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    pub fn from_delta(dx: i64, dy: i64) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.delta() == (dx, dy))
    }

    pub const fn is_diagonal(self) -> bool {
        let (dx, dy) = self.delta();
        dx != 0 && dy != 0
    }
}

/// Subset of the eight actions, one bit per [`Action::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ActionMask(u8);

impl ActionMask {
    pub const ALL: ActionMask = ActionMask(0xff);
    pub const NONE: ActionMask = ActionMask(0);

    pub fn insert(&mut self, action: Action) {
        self.0 |= 1 << action.index();
    }

    pub fn contains(self, action: Action) -> bool {
        self.0 & (1 << action.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |a| self.contains(*a))
    }
}

impl FromIterator<Action> for ActionMask {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        let mut mask = ActionMask::NONE;
        for a in iter {
            mask.insert(a);
        }
        mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Moved,
    BlockedStay,
    ReachedGoal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: Cell,
    pub action: Action,
    pub to: Cell,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    h: usize,
    v: usize,
    obstacles: Vec<bool>,
    start: Cell,
    goal: Cell,
}

impl GridMap {
    /// `obstacles` is indexed by [`Cell::index`].
    pub fn new(
        h: usize,
        v: usize,
        obstacles: Vec<bool>,
        start: usize,
        goal: usize,
    ) -> Result<Self, GridError> {
        if h == 0 || v == 0 {
            return Err(GridError::EmptyGrid { h, v });
        }
        if obstacles.len() != h * v {
            return Err(GridError::MaskLength {
                got: obstacles.len(),
                expected: h * v,
            });
        }
        for n in [start, goal] {
            if n == 0 || n > h * v {
                return Err(GridError::CellOutOfRange {
                    number: n,
                    max: h * v,
                });
            }
        }
        if start == goal {
            return Err(GridError::StartIsGoal(start));
        }
        if obstacles[start - 1] {
            return Err(GridError::EndpointBlocked {
                which: "start",
                number: start,
            });
        }
        if obstacles[goal - 1] {
            return Err(GridError::EndpointBlocked {
                which: "goal",
                number: goal,
            });
        }
        Ok(GridMap {
            h,
            v,
            obstacles,
            start: Cell(start),
            goal: Cell(goal),
        })
    }

    /// Obstacle-free map.
    pub fn empty(h: usize, v: usize, start: usize, goal: usize) -> Result<Self, GridError> {
        GridMap::new(h, v, vec![false; h * v], start, goal)
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn cell_count(&self) -> usize {
        self.h * self.v
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn obstacle_count(&self) -> usize {
        self.obstacles.iter().filter(|&&o| o).count()
    }

    pub fn cell(&self, number: usize) -> Result<Cell, GridError> {
        if number == 0 || number > self.cell_count() {
            return Err(GridError::CellOutOfRange {
                number,
                max: self.cell_count(),
            });
        }
        Ok(Cell(number))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> {
        (1..=self.cell_count()).map(Cell)
    }

    pub fn coords(&self, cell: Cell) -> Coord {
        let (x, y) = cell_to_coords(cell.0, self.h, self.v).expect("cell belongs to this map");
        Coord::new(x as i64, y as i64)
    }

    pub fn cell_at(&self, coord: Coord) -> Option<Cell> {
        if coord.x < 1 || coord.y < 1 || coord.x > self.h as i64 || coord.y > self.v as i64 {
            return None;
        }
        Some(Cell((coord.x as usize - 1) * self.v + coord.y as usize))
    }

    pub fn is_obstacle(&self, cell: Cell) -> bool {
        self.obstacles[cell.index()]
    }

    /// Free cell inside the grid.
    fn is_open(&self, coord: Coord) -> bool {
        self.cell_at(coord).is_some_and(|c| !self.is_obstacle(c))
    }

    fn action_allowed(&self, from: Coord, action: Action) -> bool {
        let target = from.offset(action);
        if !self.is_open(target) {
            return false;
        }
        if action.is_diagonal() {
            let (dx, dy) = action.delta();
            // both orthogonal flanks must be free
            return self.is_open(Coord::new(from.x + dx, from.y))
                && self.is_open(Coord::new(from.x, from.y + dy));
        }
        true
    }

    pub fn legal_actions(&self, from: Cell) -> Result<ActionMask, GridError> {
        self.cell(from.0)?;
        if self.is_obstacle(from) {
            return Err(GridError::OnObstacle(from.0));
        }
        let c = self.coords(from);
        Ok(Action::ALL
            .into_iter()
            .filter(|&a| self.action_allowed(c, a))
            .collect())
    }

    pub fn step(&self, from: Cell, action: Action) -> Result<Transition, GridError> {
        let legal = self.legal_actions(from)?;
        if !legal.contains(action) {
            return Ok(Transition {
                from,
                action,
                to: from,
                outcome: Outcome::BlockedStay,
            });
        }
        let to = self
            .cell_at(self.coords(from).offset(action))
            .expect("legal action stays inside the grid");
        let outcome = if to == self.goal {
            Outcome::ReachedGoal
        } else {
            Outcome::Moved
        };
        Ok(Transition {
            from,
            action,
            to,
            outcome,
        })
    }

    /// The action that moves `from` to the adjacent cell `to`, if any,
    /// ignoring obstacles.
    pub fn action_between(&self, from: Cell, to: Cell) -> Option<Action> {
        let a = self.coords(from);
        let b = self.coords(to);
        Action::from_delta(b.x - a.x, b.y - a.y)
    }

    pub fn is_valid_path(&self, path: &[Cell]) -> bool {
        let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
            return false;
        };
        if first != self.start || last != self.goal {
            return false;
        }
        if path
            .iter()
            .any(|c| self.cell(c.0).is_err() || self.is_obstacle(*c))
        {
            return false;
        }
        path.windows(2).all(|w| {
            self.action_between(w[0], w[1])
                .is_some_and(|a| self.action_allowed(self.coords(w[0]), a))
        })
    }

    /// Whether the goal can be reached from the start under the movement rules.
    pub fn goal_reachable(&self) -> bool {
        let mut seen = vec![false; self.cell_count()];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start.index()] = true;
        while let Some(c) = queue.pop_front() {
            if c == self.goal {
                return true;
            }
            let coord = self.coords(c);
            for a in Action::ALL {
                if self.action_allowed(coord, a) {
                    let n = self.cell_at(coord.offset(a)).unwrap();
                    if !seen[n.index()] {
                        seen[n.index()] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        false
    }

    /// Serializes to the plain-text map format accepted by [`load_map`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n{} {}\n", self.h, self.v, self.start, self.goal);
        for y in (1..=self.v as i64).rev() {
            let row: Vec<&str> = (1..=self.h as i64)
                .map(|x| {
                    let c = self.cell_at(Coord::new(x, y)).unwrap();
                    if self.is_obstacle(c) {
                        "1"
                    } else {
                        "0"
                    }
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Parses the plain-text map format:
///
/// ```text
/// # comment
/// h v
/// start goal
/// <v rows of h space-separated 0/1 digits, top row first>
/// ```
pub fn load_map(text: &str) -> Result<GridMap, MapParseError> {
    let err = |line: usize, message: String| MapParseError { line, message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut header = |what: &str| -> Result<(usize, usize, usize), MapParseError> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| err(text.lines().count() + 1, format!("missing {what} line")))?;
        let nums: Vec<&str> = line.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(err(
                no,
                format!("{what} line needs two integers, got {line:?}"),
            ));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(no, format!("{what}: {s:?} is not a nonnegative integer")))
        };
        Ok((no, parse(nums[0])?, parse(nums[1])?))
    };
    let (dims_line, h, v) = header("dimension")?;
    if h == 0 || v == 0 {
        return Err(err(
            dims_line,
            format!("dimensions must be positive, got {h}x{v}"),
        ));
    }
    let (ends_line, start, goal) = header("start/goal")?;

    let mut obstacles = vec![false; h * v];
    let mut last_line = ends_line;
    for row in 0..v {
        let (no, line) = lines.next().ok_or_else(|| {
            err(
                last_line + 1,
                format!("expected {v} grid rows, found {row}"),
            )
        })?;
        last_line = no;
        let digits: Vec<&str> = line.split_whitespace().collect();
        if digits.len() != h {
            return Err(err(
                no,
                format!("expected {h} cells, found {}", digits.len()),
            ));
        }
        let y = v - row;
        for (i, d) in digits.iter().enumerate() {
            let blocked = match *d {
                "0" => false,
                "1" => true,
                other => return Err(err(no, format!("cell value {other:?} is not 0 or 1"))),
            };
            obstacles[i * v + y - 1] = blocked;
        }
    }
    if let Some((no, _)) = lines.next() {
        return Err(err(no, "unexpected content after grid rows".into()));
    }
    GridMap::new(h, v, obstacles, start, goal).map_err(|e| err(ends_line, e.to_string()))
}
