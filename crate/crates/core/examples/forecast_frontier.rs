//! MSE vs pinball loss on synthetic demand, traded off in (ACC, SL) space.

use prefmgda::datagen::{generate, GenSpec};
use prefmgda::forecast::{ForecastConfig, ForecastProblem, Split, WindowConfig};
use prefmgda::prior::{solve_preferred, ConstraintSet, PriorConfig};
use prefmgda::{optimize, PreferenceWeights, TrainConfig};

fn main() -> prefmgda::Result<()> {
    let panel = generate(&GenSpec {
        seed: 7,
        series: 12,
        weeks: 120,
        ..GenSpec::default()
    })?;
    let cfg = ForecastConfig {
        window: WindowConfig {
            input_weeks: 8,
            horizon: 8,
            stride: 2,
        },
        ..ForecastConfig::default()
    };
    let problem = ForecastProblem::new(&panel, &cfg)?;
    println!(
        "{} training windows, {} validation windows",
        problem.batch(Split::Train).n,
        problem.batch(Split::Validation).n
    );
    let train = TrainConfig {
        learning_rate: 0.1,
        max_steps: 1000,
        patience: 100,
        ..TrainConfig::default()
    };

    for w in [[4.0, 1.0], [1.5, 1.0], [1.0, 1.0], [1.0, 4.0]] {
        let (m, trace) = optimize(&problem, &PreferenceWeights::new(w.to_vec())?, &train)?;
        println!("w {w:?}: ACC {:.4} SL {:.4} after {} steps", m[0], m[1], trace.len());
    }

    let c = ConstraintSet::parse("sl>=0.98")?;
    let out = solve_preferred(&problem, &c, &PriorConfig::default(), &train)?;
    println!("sl>=0.98: satisfied {} ACC {:.4} SL {:.4}", out.satisfied, out.metrics[0], out.metrics[1]);
    Ok(())
}
