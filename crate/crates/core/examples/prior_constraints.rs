//! Constraint-driven search on the quadratic toy.

use prefmgda::prior::{enumerate_feasible_subsets, solve_preferred, ConstraintSet, PriorConfig};
use prefmgda::toys::QuadraticBowls;
use prefmgda::TrainConfig;

fn main() -> prefmgda::Result<()> {
    let toy = QuadraticBowls::pair(vec![0.0, 0.0], vec![1.0, 0.0])?;
    let train = TrainConfig::default();

    let c: ConstraintSet = "m1>=0.95|m1==0.6 m2in[0.5,0.7]".parse()?;
    for (i, s) in enumerate_feasible_subsets(&c, &[0.5, 0.5])?.iter().enumerate() {
        let conds: Vec<String> = s.conditions.iter().map(ToString::to_string).collect();
        println!("subset {i}: {} -> extreme {:?}", conds.join(" & "), s.extreme_point);
    }

    for text in ["m1>=0.9", "m2>=0.97", "m1>=0.95|m1==0.6 m2in[0.5,0.7]", "m1>=1.5"] {
        let c: ConstraintSet = text.parse()?;
        let out = solve_preferred(&toy, &c, &PriorConfig::default(), &train)?;
        println!(
            "{text:<32} satisfied {:<5} metrics {:.4?} weights {:.3?} rounds {}",
            out.satisfied, &*out.metrics, &*out.weights, out.rounds
        );
    }
    Ok(())
}
