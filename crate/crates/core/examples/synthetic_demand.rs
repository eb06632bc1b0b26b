//! Generate a small demand panel and summarize it.

use prefmgda::datagen::{generate, DemandClass, GenSpec};

fn main() -> prefmgda::Result<()> {
    for class in [DemandClass::NonIntermittent, DemandClass::Intermittent, DemandClass::Mixed] {
        let panel = generate(&GenSpec {
            seed: 1,
            series: 8,
            weeks: 104,
            class,
            ..GenSpec::default()
        })?;
        let total: f64 = panel.series.iter().flat_map(|s| &s.demand).sum();
        let zeros = panel.series.iter().flat_map(|s| &s.demand).filter(|d| **d == 0.0).count();
        println!(
            "{class:?}: {} rows, mean {:.2}, zero weeks {:.0}%",
            panel.rows(),
            total / panel.rows() as f64,
            100.0 * zeros as f64 / panel.rows() as f64
        );
    }

    let panel = generate(&GenSpec { series: 2, weeks: 6, ..GenSpec::default() })?;
    let mut out = Vec::new();
    panel.write_csv(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
