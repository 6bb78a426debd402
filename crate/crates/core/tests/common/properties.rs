//! Randomised property checks, each run for [`CASES`] generated inputs with a
//! fixed generator seed so failures reproduce.

// comparisons are negated on purpose so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use iql_core::geometry::{distance, Metric};
use iql_core::grid::{cell_to_coords, coords_to_cell, Action, Cell, GridMap};
use iql_core::harness::{
    generate_map, run_batch_on, write_curves, write_results, ExperimentConfig, MapSource,
};
use iql_core::metrics::{d_metric, e_metric, eta_metric, ConvergenceConfig};
use iql_core::paco::{
    transition_probabilities, update_pheromones, volatility, AntTour, PacoParams, PheromoneField,
};
use iql_core::qlearn::Variant;
use iql_core::reward::uch_coefficient;

use super::{map_from_mask, neighbours, xy_of};

pub const CASES: u32 = 10_000;

pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn finish(
    r: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>,
) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(TestCaseError::fail(format!($($msg)+)));
        }
    };
}

/// A map of at most 8x8 with a random obstacle mask and distinct free start
/// and goal cells.
pub fn small_map() -> impl Strategy<Value = GridMap> {
    (1usize..=8, 1usize..=8)
        .prop_filter("at least two cells", |(h, v)| h * v >= 2)
        .prop_flat_map(|(h, v)| {
            let n = h * v;
            (
                Just(h),
                Just(v),
                proptest::collection::vec(proptest::bool::weighted(0.3), n),
                1..=n,
                1..=n,
            )
        })
        .prop_filter("start differs from goal", |(_, _, _, s, g)| s != g)
        .prop_map(|(h, v, mask, s, g)| map_from_mask(h, v, &mask, s, g))
}

fn free_cells(map: &GridMap) -> Vec<Cell> {
    map.cells().filter(|&c| !map.is_obstacle(c)).collect()
}

pub fn numbering_bijective() -> Result<(), String> {
    let strat = (1usize..=64, 1usize..=64).prop_flat_map(|(h, v)| (Just(h), Just(v), 1..=h * v));
    finish(runner(CASES).run(&strat, |(h, v, c)| {
        let (x, y) = cell_to_coords(c, h, v).map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure!(
            (1..=h).contains(&x) && (1..=v).contains(&y),
            "({x},{y}) out of range"
        );
        ensure!((x, y) == xy_of(c, v), "cell {c} mapped to ({x},{y})");
        let back = coords_to_cell(x, y, h, v).map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure!(back == c, "cell {c} -> ({x},{y}) -> {back}");
        Ok(())
    }))
}

pub fn corner_cut_sound() -> Result<(), String> {
    finish(runner(CASES).run(&small_map(), |map| {
        for c in free_cells(&map) {
            let legal = map
                .legal_actions(c)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let here = map.coords(c);
            for a in legal.iter() {
                let (dx, dy) = a.delta();
                let open = |x: i64, y: i64| {
                    map.cell_at(iql_core::grid::Coord::new(x, y))
                        .is_some_and(|n| !map.is_obstacle(n))
                };
                ensure!(
                    open(here.x + dx, here.y + dy),
                    "{a:?} from {c} enters a blocked cell"
                );
                if a.is_diagonal() {
                    ensure!(
                        open(here.x + dx, here.y) && open(here.x, here.y + dy),
                        "{a:?} from {c} cuts a corner"
                    );
                }
            }
            let mut expected: Vec<usize> = neighbours(&map, c.number())
                .into_iter()
                .map(|n| n.0)
                .collect();
            let mut got: Vec<usize> = legal
                .iter()
                .map(|a| map.cell_at(here.offset(a)).unwrap().number())
                .collect();
            expected.sort_unstable();
            got.sort_unstable();
            ensure!(
                expected == got,
                "legal moves from {c}: {got:?} vs {expected:?}"
            );
            for a in Action::ALL {
                let t = map
                    .step(c, a)
                    .map_err(|e| TestCaseError::fail(e.to_string()))?;
                ensure!(
                    !map.is_obstacle(t.to),
                    "step {a:?} from {c} landed on an obstacle"
                );
            }
        }
        Ok(())
    }))
}

fn field_strategy() -> impl Strategy<Value = (GridMap, Vec<f64>)> {
    small_map().prop_flat_map(|map| {
        let n = map.cell_count() * Action::COUNT;
        (Just(map), proptest::collection::vec(1e-3f64..1e3, n))
    })
}

fn fill_field(map: &GridMap, taus: &[f64]) -> PheromoneField {
    let mut field = PheromoneField::new(map, 1.0);
    for c in map.cells() {
        for a in Action::ALL {
            field.set(c, a, taus[c.index() * Action::COUNT + a.index()]);
        }
    }
    field
}

fn metric() -> impl Strategy<Value = Metric> {
    prop_oneof![
        Just(Metric::Euclidean),
        Just(Metric::Chebyshev),
        Just(Metric::Manhattan)
    ]
}

pub fn probability_normalization() -> Result<(), String> {
    let strat = (
        field_strategy(),
        0.0f64..3.0,
        0.0f64..6.0,
        metric(),
        any::<prop::sample::Index>(),
        any::<u64>(),
    );
    finish(runner(CASES).run(
        &strat,
        |((map, taus), alpha, beta, metric, pick, mask_bits)| {
            let field = fill_field(&map, &taus);
            let params = PacoParams {
                alpha,
                beta,
                ..PacoParams::default()
            };
            let free = free_cells(&map);
            let current = free[pick.index(free.len())];
            let mut tabu: Vec<bool> = (0..map.cell_count())
                .map(|i| mask_bits >> (i % 64) & 1 == 1)
                .collect();
            tabu[current.index()] = true;
            let open: Vec<usize> = neighbours(&map, current.number())
                .into_iter()
                .map(|n| n.0)
                .filter(|&n| !tabu[n - 1])
                .collect();
            match transition_probabilities(&field, &params, &map, metric, current, &tabu) {
                Ok(p) => {
                    let total: f64 = p.iter().map(|x| x.2).sum();
                    ensure!((total - 1.0).abs() <= 1e-12, "probabilities sum to {total}");
                    ensure!(
                        p.iter().all(|x| (0.0..=1.0).contains(&x.2)),
                        "probability outside [0,1]"
                    );
                    let mut got: Vec<usize> = p.iter().map(|x| x.1.number()).collect();
                    got.sort_unstable();
                    let mut want = open.clone();
                    want.sort_unstable();
                    ensure!(got == want, "support {got:?} vs allowed {want:?}");
                }
                Err(e) => ensure!(open.is_empty(), "{e} although {open:?} are allowed"),
            }
            Ok(())
        },
    ))
}

/// Random walk of legal moves from the start, stopping at the goal.
fn walk(map: &GridMap, choices: &[usize]) -> AntTour {
    let mut cell = map.start();
    let mut cells = vec![cell];
    for &k in choices {
        if cell == map.goal() {
            break;
        }
        let legal: Vec<Action> = map.legal_actions(cell).unwrap().iter().collect();
        if legal.is_empty() {
            break;
        }
        let t = map.step(cell, legal[k % legal.len()]).unwrap();
        cell = t.to;
        cells.push(cell);
    }
    AntTour::from_cells(map, cells)
}

pub fn pheromone_positivity() -> Result<(), String> {
    let strat = (
        field_strategy(),
        proptest::collection::vec(proptest::collection::vec(0usize..8, 0..40), 0..6),
        0usize..2000,
        1usize..50,
        0.01f64..=1.0,
        0.0f64..5.0,
        0.01f64..10.0,
    );
    finish(
        runner(CASES).run(&strat, |((map, taus), walks, nc, m, lambda1, lambda, q)| {
            let mut field = fill_field(&map, &taus);
            let params = PacoParams {
                m,
                lambda1,
                lambda,
                q_deposit: q,
                ..PacoParams::default()
            };
            let tours: Vec<AntTour> = walks.iter().map(|w| walk(&map, w)).collect();
            update_pheromones(&mut field, &tours, nc, &params, &map)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            ensure!(
                field.values().all(|t| t > 0.0 && t.is_finite()),
                "non-positive pheromone"
            );
            Ok(())
        }),
    )
}

pub fn rho_mu_monotone() -> Result<(), String> {
    let strat = (
        0usize..5000,
        0usize..5000,
        1usize..200,
        0.01f64..=1.0,
        0.0f64..5.0,
        0u64..200,
        0u64..200,
        1e-6f64..10.0,
    );
    finish(
        runner(CASES).run(&strat, |(n1, n2, m, lambda1, lambda, t1, t2, mu0)| {
            let p = PacoParams {
                m,
                lambda1,
                lambda,
                ..PacoParams::default()
            };
            let (lo, hi) = (n1.min(n2), n1.max(n2));
            ensure!(
                volatility(lo, &p) >= volatility(hi, &p),
                "rho increased from {lo} to {hi}"
            );
            let r = volatility(lo, &p);
            ensure!(
                r > 0.0 || lambda * lo as f64 / (3.0 * m as f64) > 700.0,
                "rho vanished early"
            );
            ensure!(r <= lambda1 / 2.0 + 1e-15, "rho {r} above lambda1/2");
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let (a, b) = (uch_coefficient(lo, mu0), uch_coefficient(hi, mu0));
            ensure!(a <= b, "mu decreased from t={lo} to t={hi}");
            ensure!(
                b <= mu0 / std::f64::consts::PI * (1.0 + 1e-15),
                "mu above its limit"
            );
            Ok(())
        }),
    )
}

pub fn metric_chain() -> Result<(), String> {
    let coord = -1e3f64..1e3;
    let strat = (coord.clone(), coord.clone(), coord.clone(), coord);
    finish(runner(CASES).run(&strat, |(ax, ay, bx, by)| {
        let (a, b) = ((ax, ay), (bx, by));
        let c = distance(Metric::Chebyshev, a, b);
        let e = distance(Metric::Euclidean, a, b);
        let m = distance(Metric::Manhattan, a, b);
        let slack = 1e-12 * m.max(1.0);
        ensure!(c <= e + slack, "chebyshev {c} > euclidean {e}");
        ensure!(e <= m + slack, "euclidean {e} > manhattan {m}");
        Ok(())
    }))
}

/// Integer-valued returns: a noisy prefix, a constant run and a noisy tail,
/// with occasional missing (NaN) values.
fn series() -> impl Strategy<Value = Vec<f64>> {
    let value = prop_oneof![
        10 => (-50i32..0).prop_map(f64::from),
        1 => Just(f64::NAN),
    ];
    (
        proptest::collection::vec(value.clone(), 0..40),
        -50i32..0,
        0usize..40,
        proptest::collection::vec(value, 0..4),
    )
        .prop_map(|(mut head, level, run, tail)| {
            head.extend(std::iter::repeat_n(f64::from(level), run));
            head.extend(tail);
            head
        })
}

fn conv(window: usize) -> ConvergenceConfig {
    ConvergenceConfig {
        window,
        ..ConvergenceConfig::default()
    }
}

pub fn eta_d_codefined() -> Result<(), String> {
    let strat = (series(), 2usize..12);
    finish(runner(CASES).run(&strat, |(xs, w)| {
        if xs.len() < w {
            return Ok(());
        }
        let cfg = conv(w);
        let d = d_metric(&xs, &cfg).unwrap();
        let eta = eta_metric(&xs, &cfg).unwrap();
        let e = e_metric(&xs, &cfg).unwrap();
        if let Some(eta) = eta {
            ensure!(d.map(|d| d + w) == Some(eta), "eta {eta} but d {d:?}");
        }
        ensure!(d.is_some() || eta.is_none(), "eta without d");
        ensure!(e.is_some() == eta.is_some(), "e {e:?} vs eta {eta:?}");
        Ok(())
    }))
}

pub fn d_shift_invariant() -> Result<(), String> {
    let prefix = proptest::collection::vec((-50i32..0).prop_map(f64::from), 0..20);
    let strat = (series(), 2usize..12, -1000i32..1000, prefix);
    finish(runner(CASES).run(&strat, |(xs, w, shift, prefix)| {
        if xs.len() < w {
            return Ok(());
        }
        let cfg = conv(w);
        let d = d_metric(&xs, &cfg).unwrap();
        let moved: Vec<f64> = xs.iter().map(|x| x + f64::from(shift)).collect();
        ensure!(
            d_metric(&moved, &cfg).unwrap() == d,
            "value shift by {shift} changed d"
        );
        if let Some(j) = d.filter(|&j| j > 0) {
            let mut longer = prefix.clone();
            longer.extend_from_slice(&xs);
            let got = d_metric(&longer, &cfg).unwrap();
            ensure!(
                got == Some(j + prefix.len()),
                "time shift: {got:?} vs {}",
                j + prefix.len()
            );
        }
        Ok(())
    }))
}

fn batch_bytes(
    cfg: &ExperimentConfig,
    map: &GridMap,
    jobs: usize,
) -> Result<(Vec<u8>, Vec<u8>), String> {
    let out = run_batch_on(cfg, map, "p", Some(jobs)).map_err(|e| e.to_string())?;
    let mut results = Vec::new();
    let mut curves = Vec::new();
    write_results(&out.report, &mut results).map_err(|e| e.to_string())?;
    write_curves(&out.traces, cfg.convergence.window, &mut curves).map_err(|e| e.to_string())?;
    Ok((results, curves))
}

pub fn csv_determinism(cases: u32) -> Result<(), String> {
    let strat = (
        3usize..=5,
        3usize..=5,
        0.0f64..0.3,
        any::<u64>(),
        proptest::sample::subsequence(Variant::ALL.to_vec(), 1..=4),
        proptest::collection::btree_set(any::<u64>(), 1..=2),
        10usize..=25,
        2usize..=5,
    );
    finish(runner(cases).run(
        &strat,
        |(h, v, density, map_seed, variants, seeds, episodes, window)| {
            let map = generate_map(h, v, density, map_seed)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let mut cfg = ExperimentConfig::new(MapSource::Builtin("p".into()));
            cfg.variants = variants;
            cfg.metrics = vec![Metric::Chebyshev, Metric::Manhattan];
            cfg.seeds = seeds.into_iter().collect();
            cfg.learn.episodes = episodes;
            cfg.convergence.window = window;
            cfg.init.paco.m = 4;
            cfg.init.paco.max_iters = 20;
            let first = batch_bytes(&cfg, &map, 1);
            let second = batch_bytes(&cfg, &map, 2);
            ensure!(first == second, "outputs differ between identical runs");
            Ok(())
        },
    ))
}

/// Every property of the suite with its name.
pub type Check = fn() -> Result<(), String>;

pub fn suite() -> Vec<(&'static str, Check)> {
    vec![
        ("cell numbering bijectivity", numbering_bijective),
        ("corner-cut soundness", corner_cut_sound),
        ("probability normalization", probability_normalization),
        ("pheromone positivity", pheromone_positivity),
        ("rho and mu monotonicity", rho_mu_monotone),
        ("metric inequality chain", metric_chain),
        ("eta = d + W co-definedness", eta_d_codefined),
        ("shift invariance of d", d_shift_invariant),
        ("byte-identical CSVs", || csv_determinism(CASES)),
    ]
}
