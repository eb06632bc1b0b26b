//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any of them fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use prefmgda::baselines::{grid_search, is_supported, metric_pairs};
use prefmgda::datagen::{generate, GenSpec};
use prefmgda::forecast::{
    loss_mse, loss_qrl, metric_acc, metric_sl, mse_grad, qrl_grad, Activation, ForecastConfig,
    ForecastProblem, Model, ModelKind, ModelSpec, WindowConfig,
};
use prefmgda::mgda::MultiObjectiveProblem;
use prefmgda::posterior::achieved_granularity;
use prefmgda::prior::{solve_preferred, ConstraintSet, PriorConfig};
use prefmgda::toys::{FonsecaFleming, QuadraticBowls};
use prefmgda::{
    explore_frontier, frank_wolfe_solve, optimize, ExploreConfig, FwConfig, GradientSet,
    MetricBounds, ParamVector, PreferenceWeights, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: pass flag plus a one-line detail.
type Outcome = (bool, String);

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("min-norm matches brute force", min_norm_oracle),
        ("min-norm direction descends on every objective", descent_property),
        ("gradients match finite differences", gradient_checks),
        ("quadratic toy converges to the Pareto segment", pareto_segment_convergence),
        ("posterior coverage on the quadratic toy", posterior_coverage),
        ("grid search stays on the convex hull", nonconvex_separation),
        ("prior method vs posterior oracle on forecasting", prior_vs_oracle),
        ("explorer span vs grid span on the non-convex toy", span_vs_grid),
        ("metric formula pins", metric_pins),
        ("cli output is deterministic", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(outcome) => outcome,
            Err(e) => (false, format!("panicked: {}", panic_text(&e))),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} [{:.1}s] {}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            detail
        );
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

fn random_gradient_sets(seed: u64, count: usize) -> Vec<GradientSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let t = rng.gen_range(2..=3);
            let d = rng.gen_range(2..=8);
            let rows = (0..t)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            GradientSet::new(rows).unwrap()
        })
        .collect()
}

/// Smallest `|sum_t a_t g_t|^2` over simplex points with coordinates on a
/// `step` lattice.
fn brute_force_min_norm(g: &GradientSet, step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    let t = g.num_objectives();
    let rows: Vec<&[f64]> = g.rows().collect();
    let gram: Vec<Vec<f64>> = rows
        .iter()
        .map(|a| rows.iter().map(|b| a.iter().zip(*b).map(|(x, y)| x * y).sum()).collect())
        .collect();
    let quad = |a: &[f64]| -> f64 {
        (0..t).map(|i| (0..t).map(|j| a[i] * a[j] * gram[i][j]).sum::<f64>()).sum()
    };
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let a0 = i as f64 / n as f64;
        if t == 2 {
            best = best.min(quad(&[a0, 1.0 - a0]));
        } else {
            for j in 0..=n - i {
                let a1 = j as f64 / n as f64;
                best = best.min(quad(&[a0, a1, (1.0 - a0 - a1).max(0.0)]));
            }
        }
    }
    best
}

fn min_norm_oracle() -> Outcome {
    let sets = random_gradient_sets(1, 200);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for g in &sets {
        let r = frank_wolfe_solve(g, &FwConfig::default()).unwrap();
        worst = worst.max((r.sq_norm - brute_force_min_norm(g, 1e-3)).abs());
    }
    let elapsed = start.elapsed();
    (
        worst <= 1e-3 && elapsed < Duration::from_secs(10),
        format!("max |diff| {worst:.2e}, {:.2}s for 200 sets", elapsed.as_secs_f64()),
    )
}

fn descent_property() -> Outcome {
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    for g in random_gradient_sets(1, 200) {
        let r = frank_wolfe_solve(&g, &FwConfig::default()).unwrap();
        if r.sq_norm <= 1e-12 {
            continue;
        }
        checked += 1;
        for row in g.rows() {
            let inner: f64 = row.iter().zip(&r.direction).map(|(a, b)| a * b).sum();
            worst = worst.min(inner / r.sq_norm);
        }
    }
    (
        worst >= 1.0 - 1e-6,
        format!("{checked} non-stationary solves, min <d,g_t>/|d|^2 = {worst:.9}"),
    )
}

/// Largest violation of `|fd - g| <= 1e-4 max(|fd|, |g|)`, with central
/// differences of step 1e-5. An absolute floor of 1e-8 absorbs round-off on
/// components that are zero.
fn fd_violation(f: &dyn Fn(&[f64]) -> f64, x: &[f64], grad: &[f64]) -> f64 {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let (mut a, mut b) = (x.to_vec(), x.to_vec());
        a[i] += h;
        b[i] -= h;
        let fd = (f(&a) - f(&b)) / (2.0 * h);
        let err = (fd - grad[i]).abs();
        let allowed = (1e-4 * fd.abs().max(grad[i].abs())).max(1e-8);
        worst = worst.max(err / allowed);
    }
    worst
}

fn small_panel_problem(rng: &mut ChaCha8Rng, kind: ModelKind) -> ForecastProblem {
    let panel = generate(&GenSpec {
        seed: rng.gen(),
        series: 3,
        weeks: 40,
        ..GenSpec::default()
    })
    .unwrap();
    let cfg = ForecastConfig {
        window: WindowConfig {
            input_weeks: 3,
            horizon: 2,
            stride: 3,
        },
        model: ModelSpec { kind, seed: rng.gen() },
        ..ForecastConfig::default()
    };
    ForecastProblem::new(&panel, &cfg).unwrap()
}

fn gradient_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kinds = [
        ModelKind::Linear,
        ModelKind::Feedforward { hidden: 4, activation: Activation::Tanh },
        ModelKind::Feedforward { hidden: 4, activation: Activation::Relu },
    ];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for case in 0..50 {
        let v = match case % 5 {
            0 => {
                let n = rng.gen_range(1..8);
                let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
                let yhat: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
                let q = rng.gen_range(0.05..0.95);
                fd_violation(&|p| loss_mse(&y, p), &yhat, &mse_grad(&y, &yhat))
                    .max(fd_violation(&|p| loss_qrl(&y, p, q), &yhat, &qrl_grad(&y, &yhat, q)))
            }
            1 | 2 => {
                let kind = kinds[rng.gen_range(0..kinds.len())];
                let (d, g) = (rng.gen_range(1..5), rng.gen_range(1..4));
                let model = Model::new(ModelSpec { kind, seed: 0 }, d, g)
                    .unwrap()
                    .with_output_affine(rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0));
                let params: Vec<f64> =
                    (0..model.num_params()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let rows = rng.gen_range(1..4);
                let x: Vec<f64> = (0..rows * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let dy: Vec<f64> = (0..rows * g).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let f = |p: &[f64]| -> f64 {
                    model.forward(p, &x).unwrap().iter().zip(&dy).map(|(a, b)| a * b).sum()
                };
                fd_violation(&f, &params, &model.backward(&params, &x, &dy).unwrap())
            }
            3 => {
                let kind = kinds[rng.gen_range(0..kinds.len())];
                let problem = small_panel_problem(&mut rng, kind);
                let theta: Vec<f64> =
                    (0..problem.num_params()).map(|_| rng.gen_range(-0.5..0.5)).collect();
                let p = ParamVector::new(theta.clone()).unwrap();
                let (_, grads) = problem.evaluate(&p).unwrap();
                (0..2)
                    .map(|t| {
                        let f = |q: &[f64]| {
                            problem.evaluate(&ParamVector::new(q.to_vec()).unwrap()).unwrap().0[t]
                        };
                        fd_violation(&f, &theta, grads.row(t))
                    })
                    .fold(0.0, f64::max)
            }
            _ => {
                let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let p = ParamVector::new(x.clone()).unwrap();
                let ff = FonsecaFleming::new(2).unwrap();
                let bowls = QuadraticBowls::pair(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
                let problems: [&dyn MultiObjectiveProblem; 2] = [&ff, &bowls];
                let mut v: f64 = 0.0;
                for problem in problems {
                    let (_, grads) = problem.evaluate(&p).unwrap();
                    for t in 0..2 {
                        let f = |q: &[f64]| {
                            problem.evaluate(&ParamVector::new(q.to_vec()).unwrap()).unwrap().0[t]
                        };
                        v = v.max(fd_violation(&f, &x, grads.row(t)));
                    }
                }
                v
            }
        };
        if v > 1.0 {
            failures.push(case);
        }
        worst = worst.max(v);
    }
    (
        failures.is_empty(),
        format!("50 instances, worst error/allowed {worst:.3}, failing cases {failures:?}"),
    )
}

fn pareto_segment_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let toy = QuadraticBowls::pair(a, b).unwrap();
    let start = Instant::now();
    let (mut worst, mut max_steps) = (0.0f64, 0);
    for seed in 0..20 {
        let cfg = TrainConfig {
            seed,
            max_steps: 2000,
            ..TrainConfig::default()
        };
        let (_, trace) = optimize(&toy, &PreferenceWeights::uniform(2), &cfg).unwrap();
        worst = worst.max(toy.distance_to_segment(&trace.final_params));
        max_steps = max_steps.max(trace.len());
    }
    let elapsed = start.elapsed();
    (
        worst <= 1e-2 && max_steps <= 2000 && elapsed < Duration::from_secs(30),
        format!(
            "20 starts, max distance {worst:.2e}, max steps {max_steps}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Collapses points equal within `tol` in every coordinate, then reports
/// pairs where one point is at least as good everywhere and better by more
/// than `tol` somewhere.
fn dominated_pairs(points: &[[f64; 2]], tol: f64) -> usize {
    let mut kept: Vec<[f64; 2]> = Vec::new();
    for p in points {
        if !kept.iter().any(|q| (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol) {
            kept.push(*p);
        }
    }
    let mut count = 0;
    for p in &kept {
        for q in &kept {
            let weakly = q[0] >= p[0] && q[1] >= p[1];
            if weakly && (q[0] > p[0] + tol || q[1] > p[1] + tol) {
                count += 1;
            }
        }
    }
    count
}

fn posterior_coverage() -> Outcome {
    let toy = QuadraticBowls::pair(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
    let cfg = ExploreConfig {
        bounds: toy.frontier_bounds(),
        granularity_target: vec![0.05, 0.05],
        pace: 2.0,
        max_rounds: 50,
    };
    let archive = explore_frontier(&toy, &cfg, &TrainConfig::default()).unwrap();
    let grains = achieved_granularity(&archive, &cfg.bounds);
    let covered = grains.iter().all(|&g| g <= 0.05) || archive.len() == 50;
    let dominated = dominated_pairs(&metric_pairs(&archive).unwrap(), 1e-3);
    (
        covered && dominated == 0,
        format!(
            "{} runs, granularity {grains:.4?}, dominated pairs {dominated}",
            archive.len()
        ),
    )
}

fn nonconvex_separation() -> Outcome {
    let toy = FonsecaFleming::new(2).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.1,
        ..TrainConfig::default()
    };
    let grid = grid_search(&toy, 11, &cfg).unwrap();
    let explore = ExploreConfig {
        bounds: MetricBounds::unit(2),
        granularity_target: vec![0.05, 0.05],
        pace: 2.0,
        max_rounds: 50,
    };
    let mgda = explore_frontier(&toy, &explore, &cfg).unwrap();
    let grid_points = metric_pairs(&grid).unwrap();
    let mgda_points = metric_pairs(&mgda).unwrap();
    let achieved: Vec<[f64; 2]> = grid_points.iter().chain(&mgda_points).copied().collect();
    let off_hull = grid_points.iter().filter(|p| !is_supported(**p, &achieved, 1e-6)).count();
    let mgda_inside = mgda_points.iter().filter(|p| !is_supported(**p, &achieved, 1e-6)).count();
    (
        off_hull == 0,
        format!(
            "grid: {off_hull}/{} off the hull; explorer: {mgda_inside}/{} strictly inside it",
            grid_points.len(),
            mgda_points.len()
        ),
    )
}

/// ACC of the best sweep point with SL at or above `threshold`.
fn best_feasible_acc(points: &[[f64; 2]], threshold: f64) -> Option<f64> {
    points.iter().filter(|p| p[1] >= threshold).map(|p| p[0]).reduce(f64::max)
}

fn prior_vs_oracle() -> Outcome {
    let train = TrainConfig {
        learning_rate: 0.1,
        max_steps: 1000,
        patience: 100,
        ..TrainConfig::default()
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for data_seed in 0..3 {
        let panel = generate(&GenSpec {
            seed: data_seed,
            series: 20,
            weeks: 120,
            ..GenSpec::default()
        })
        .unwrap();
        let cfg = ForecastConfig {
            window: WindowConfig {
                input_weeks: 8,
                horizon: 8,
                stride: 2,
            },
            ..ForecastConfig::default()
        };
        let problem = ForecastProblem::new(&panel, &cfg).unwrap();

        // Oracle: a dense sweep of preference weights, refined by the explorer
        // inside the region the sweep reached.
        let mut points = Vec::new();
        for k in -10..=10 {
            let w = PreferenceWeights::new(vec![2f64.powf(k as f64 / 2.0), 1.0]).unwrap();
            let (m, _) = optimize(&problem, &w, &train).unwrap();
            points.push([m[0], m[1]]);
        }
        let lo: Vec<f64> = (0..2).map(|t| points.iter().map(|p| p[t]).fold(f64::INFINITY, f64::min)).collect();
        let hi: Vec<f64> = (0..2).map(|t| points.iter().map(|p| p[t]).fold(f64::NEG_INFINITY, f64::max)).collect();
        let explore = ExploreConfig {
            bounds: MetricBounds::new(lo, hi).unwrap(),
            granularity_target: vec![0.005, 0.005],
            pace: 2.0,
            max_rounds: 15,
        };
        let archive = explore_frontier(&problem, &explore, &train).unwrap();
        points.extend(metric_pairs(&archive).unwrap());

        for threshold in [0.90, 0.92, 0.95, 0.98] {
            let constraints = ConstraintSet::parse(&format!("sl>={threshold}")).unwrap();
            let out = solve_preferred(&problem, &constraints, &PriorConfig::default(), &train).unwrap();
            let best = best_feasible_acc(&points, threshold);
            let line = match best {
                Some(best) => {
                    let pass = out.satisfied && out.metrics[1] >= threshold && out.metrics[0] >= best - 0.05;
                    ok &= pass;
                    format!(
                        "seed {data_seed} sl>={threshold}: {} acc {:.4} sl {:.4} vs oracle acc {best:.4}",
                        if pass { "ok" } else { "miss" },
                        out.metrics[0],
                        out.metrics[1]
                    )
                }
                None => {
                    // Nothing in the sweep is feasible; the solver must not claim otherwise
                    // with a point that breaks the constraint.
                    let pass = !out.satisfied || out.metrics[1] >= threshold;
                    ok &= pass;
                    format!(
                        "seed {data_seed} sl>={threshold}: oracle empty, solver satisfied={}",
                        out.satisfied
                    )
                }
            };
            notes.push(line);
        }
    }
    (ok, format!("\n    {}", notes.join("\n    ")))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_prefmgda")
}

fn run_cli(args: &[&str], dir: &Path) -> i32 {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn span_vs_grid() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let code = run_cli(
        &[
            "frontier", "--toy", "nonconvex", "--method", "mgda", "--phi", "0.05",
            "--max-rounds", "11", "--compare-grid", "--out", "front.csv",
        ],
        dir.path(),
    );
    if code != 0 {
        return (false, format!("frontier exited with {code}"));
    }
    let text = std::fs::read_to_string(dir.path().join("front.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&text).unwrap();
    let spans: Vec<f64> = serde_json::from_value(summary["coverage_span"].clone()).unwrap();
    let grid = &summary["grid_comparison"];
    let grid_spans: Vec<f64> = serde_json::from_value(grid["coverage_span"].clone()).unwrap();
    let ratios: Vec<f64> = serde_json::from_value(grid["span_ratio"].clone()).unwrap();
    let ok = spans.iter().zip(&grid_spans).all(|(a, b)| a >= b);
    (
        ok,
        format!(
            "{} runs each, explorer span {spans:.4?}, grid span {grid_spans:.4?}, ratio {ratios:.4?}",
            summary["runs"]
        ),
    )
}

fn metric_pins() -> Outcome {
    let y = [4.0, 6.0, 10.0, 10.0];
    let yhat = [2.0, 3.0, 12.0, 8.0];
    let acc = metric_acc(&y, &yhat, 2).unwrap();
    let sl = metric_sl(&y, &yhat, 2).unwrap();
    let q_under = loss_qrl(&[1.0], &[0.0], 0.9);
    let q_over = loss_qrl(&[0.0], &[1.0], 0.9);
    let ok = (acc - 0.9).abs() <= 1e-9
        && (sl - 25.0 / 30.0).abs() <= 1e-9
        && q_under == 0.9
        && q_over == 1.0 - 0.9;
    (ok, format!("acc {acc:.12} sl {sl:.12} qrl {q_under} / {q_over}"))
}

fn cli_determinism() -> Outcome {
    let runs: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("gen-data", vec!["gen-data", "--seed", "5", "--series", "6", "--weeks", "120", "--out", "d.csv"], vec!["d.csv"]),
        ("frontier mgda", vec!["frontier", "--toy", "nonconvex", "--max-rounds", "6", "--out", "f.csv"], vec!["f.csv", "f.json"]),
        ("frontier static", vec!["frontier", "--toy", "quadratic", "--method", "static", "--max-rounds", "6", "--out", "s.csv"], vec!["s.csv", "s.json"]),
        ("frontier grid", vec!["frontier", "--data", "d.csv", "--method", "grid", "--max-rounds", "3", "--steps", "60", "--out", "g.csv"], vec!["g.csv", "g.json"]),
        ("prefer", vec!["prefer", "--data", "d.csv", "--constraints", "sl>=0.9", "--steps", "60", "--max-rounds", "3", "--out", "p.json"], vec!["p.json"]),
        ("train", vec!["train", "--data", "d.csv", "--weights", "2,1", "--steps", "60", "--trace-out", "t.csv"], vec!["t.csv"]),
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut mismatched = Vec::new();
    for (name, args, outputs) in &runs {
        let codes: Vec<i32> = dirs.iter().map(|d| run_cli(args, d.path())).collect();
        let same_files = outputs.iter().all(|f| {
            let a = std::fs::read(dirs[0].path().join(f));
            let b = std::fs::read(dirs[1].path().join(f));
            matches!((a, b), (Ok(a), Ok(b)) if a == b)
        });
        if codes[0] != codes[1] || codes[0] == 1 || !same_files {
            mismatched.push(format!("{name} (exit {codes:?})"));
        }
    }
    (
        mismatched.is_empty(),
        format!("{} subcommand runs compared; differing: {mismatched:?}", runs.len()),
    )
}
