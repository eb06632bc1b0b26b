//! Weighted sums miss the middle of a concave frontier; MGDA does not.

use prefmgda::baselines::{grid_search, is_supported, metric_pairs};
use prefmgda::posterior::coverage_span;
use prefmgda::toys::FonsecaFleming;
use prefmgda::{explore_frontier, ExploreConfig, MetricBounds, TrainConfig};

fn main() -> prefmgda::Result<()> {
    let toy = FonsecaFleming::new(2)?;
    let train = TrainConfig {
        learning_rate: 0.1,
        ..TrainConfig::default()
    };
    let grid = grid_search(&toy, 11, &train)?;
    let cfg = ExploreConfig {
        bounds: MetricBounds::unit(2),
        granularity_target: vec![0.05, 0.05],
        pace: 2.0,
        max_rounds: 11,
    };
    let mgda = explore_frontier(&toy, &cfg, &train)?;

    let all: Vec<[f64; 2]> = metric_pairs(&grid)?.into_iter().chain(metric_pairs(&mgda)?).collect();
    for (name, archive) in [("grid", &grid), ("mgda", &mgda)] {
        println!("{name}:");
        for p in metric_pairs(archive)? {
            let tag = if is_supported(p, &all, 1e-6) { "hull" } else { "inside" };
            println!("  {:.4} {:.4}  {tag}", p[0], p[1]);
        }
        println!("  span {:.4?}", coverage_span(archive, &cfg.bounds));
    }
    Ok(())
}
