//! Static loss scaling over a simplex grid, against MGDA exploration.

use prefmgda::baselines::{grid_search, simplex_grid, static_scaling_posterior};
use prefmgda::posterior::coverage_span;
use prefmgda::toys::QuadraticBowls;
use prefmgda::{explore_frontier, ExploreConfig, TrainConfig};

fn main() -> prefmgda::Result<()> {
    let toy = QuadraticBowls::pair(vec![0.0, 0.0], vec![1.0, 0.0])?;
    let train = TrainConfig::default();
    println!("3-objective grid at resolution 4 has {} points", simplex_grid(3, 4)?.len());

    let cfg = ExploreConfig {
        bounds: toy.frontier_bounds(),
        granularity_target: vec![0.05, 0.05],
        pace: 2.0,
        max_rounds: 12,
    };
    let mgda = explore_frontier(&toy, &cfg, &train)?;
    let fixed = static_scaling_posterior(&toy, &cfg, &train)?;
    let grid = grid_search(&toy, mgda.len().max(2), &train)?;
    for (name, a) in [("mgda explorer", &mgda), ("static explorer", &fixed), ("grid", &grid)] {
        println!("{name:<16} {:>2} runs, span {:.4?}", a.len(), coverage_span(a, &cfg.bounds));
    }
    Ok(())
}
