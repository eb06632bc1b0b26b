//! Granularity-driven frontier exploration on the quadratic toy.
//!
//! Writes the archive to `frontier_quadratic.csv` in the temp directory.

use prefmgda::posterior::achieved_granularity;
use prefmgda::toys::QuadraticBowls;
use prefmgda::{explore_frontier, ExploreConfig, TrainConfig};

fn main() -> prefmgda::Result<()> {
    let toy = QuadraticBowls::pair(vec![0.0, 0.0], vec![1.0, 0.0])?;
    let cfg = ExploreConfig {
        bounds: toy.frontier_bounds(),
        granularity_target: vec![0.05, 0.05],
        pace: 2.0,
        max_rounds: 50,
    };
    let archive = explore_frontier(&toy, &cfg, &TrainConfig::default())?;
    for (k, e) in archive.entries().iter().enumerate() {
        println!("{:>2}  w {:<22}  m {:.4?}", k + 1, format!("{:.3?}", e.weights), &*e.metrics);
    }
    println!("granularity {:.4?}", achieved_granularity(&archive, &cfg.bounds));

    let path = std::env::temp_dir().join("frontier_quadratic.csv");
    archive.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
