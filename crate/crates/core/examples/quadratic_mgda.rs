//! MGDA on two quadratic bowls, with and without a preference.

use prefmgda::toys::QuadraticBowls;
use prefmgda::{optimize, PreferenceWeights, TrainConfig};

fn main() -> prefmgda::Result<()> {
    let toy = QuadraticBowls::pair(vec![0.0, 0.0], vec![2.0, 1.0])?;
    let cfg = TrainConfig::default();

    for w in [vec![1.0, 1.0], vec![1.5, 1.0], vec![1.0, 1.5]] {
        let (m, trace) = optimize(&toy, &PreferenceWeights::new(w.clone())?, &cfg)?;
        let theta = &trace.final_params;
        println!(
            "w {w:?}: theta {:.3?}, metrics {:.3?}, {} steps ({:?}), off-segment {:.1e}",
            &**theta,
            &*m,
            trace.len(),
            trace.stop,
            toy.distance_to_segment(theta)
        );
    }
    Ok(())
}
