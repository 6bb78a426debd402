#![allow(dead_code)]

pub mod properties;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use iql_core::grid::{Cell, GridMap};

/// Column-major numbering written out independently of the library.
pub fn number_of(x: usize, y: usize, v: usize) -> usize {
    (x - 1) * v + y
}

pub fn xy_of(n: usize, v: usize) -> (usize, usize) {
    ((n - 1) / v + 1, (n - 1) % v + 1)
}

fn free(map: &GridMap, x: i64, y: i64) -> bool {
    if x < 1 || y < 1 || x > map.h() as i64 || y > map.v() as i64 {
        return false;
    }
    let n = number_of(x as usize, y as usize, map.v());
    !map.is_obstacle(Cell::from_number(n))
}

/// Neighbours reachable in one move with their Euclidean step length. A
/// diagonal needs both orthogonal flank cells free.
pub fn neighbours(map: &GridMap, n: usize) -> Vec<(usize, f64)> {
    let (x, y) = xy_of(n, map.v());
    let (x, y) = (x as i64, y as i64);
    let mut out = Vec::new();
    for dx in -1i64..=1 {
        for dy in -1i64..=1 {
            if (dx, dy) == (0, 0) || !free(map, x + dx, y + dy) {
                continue;
            }
            if dx != 0 && dy != 0 && !(free(map, x + dx, y) && free(map, x, y + dy)) {
                continue;
            }
            let len = if dx != 0 && dy != 0 { 2f64.sqrt() } else { 1.0 };
            out.push((
                number_of((x + dx) as usize, (y + dy) as usize, map.v()),
                len,
            ));
        }
    }
    out
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Shortest Euclidean path length from start to goal, `None` if unreachable.
pub fn dijkstra(map: &GridMap) -> Option<f64> {
    let n = map.cell_count();
    let mut dist = vec![f64::INFINITY; n + 1];
    let start = map.start().number();
    let goal = map.goal().number();
    dist[start] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, start)]);
    while let Some(Item(d, u)) = heap.pop() {
        if u == goal {
            return Some(d);
        }
        if d > dist[u] {
            continue;
        }
        for (w, len) in neighbours(map, u) {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    None
}

/// Shortest path length by enumerating every simple path (with pruning of
/// partial paths already longer than the best found). Small maps only.
pub fn brute_force(map: &GridMap) -> Option<f64> {
    fn go(
        map: &GridMap,
        u: usize,
        goal: usize,
        len: f64,
        seen: &mut [bool],
        best: &mut Option<f64>,
    ) {
        if best.is_some_and(|b| len >= b + 1e-12) {
            return;
        }
        if u == goal {
            *best = Some(best.map_or(len, |b: f64| b.min(len)));
            return;
        }
        for (w, step) in neighbours(map, u) {
            if !seen[w] {
                seen[w] = true;
                go(map, w, goal, len + step, seen, best);
                seen[w] = false;
            }
        }
    }
    let mut seen = vec![false; map.cell_count() + 1];
    let start = map.start().number();
    seen[start] = true;
    let mut best = None;
    go(map, start, map.goal().number(), 0.0, &mut seen, &mut best);
    best
}

/// Map with the given obstacle mask; start and goal are forced free.
pub fn map_from_mask(h: usize, v: usize, mask: &[bool], start: usize, goal: usize) -> GridMap {
    let mut obstacles = mask.to_vec();
    obstacles[start - 1] = false;
    obstacles[goal - 1] = false;
    GridMap::new(h, v, obstacles, start, goal).expect("valid map")
}
