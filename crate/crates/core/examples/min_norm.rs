//! Min-norm element of the convex hull of three gradients.

use prefmgda::{frank_wolfe_solve, FwConfig, GradientSet};

fn main() -> prefmgda::Result<()> {
    let g = GradientSet::new(vec![
        vec![1.0, 0.0, 0.5],
        vec![0.0, 1.0, 0.5],
        vec![-0.4, 0.3, 1.0],
    ])?;
    let r = frank_wolfe_solve(&g, &FwConfig::default())?;
    println!("alpha     {:.4?}", &*r.alpha);
    println!("direction {:.4?}", r.direction);
    println!("|d|^2     {:.6} after {} iterations", r.sq_norm, r.iterations);

    // Every objective decreases along -d.
    for (t, row) in g.rows().enumerate() {
        let slope: f64 = row.iter().zip(&r.direction).map(|(a, b)| a * b).sum();
        println!("<d, g_{t}> = {slope:.6}");
    }
    Ok(())
}
