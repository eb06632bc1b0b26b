//! Min-norm point in the convex hull of the objective gradients.
//!
//! Solves `min_{alpha in simplex} || sum_t alpha_t g_t ||^2` with Frank-Wolfe
//! over the probability simplex. The Gram matrix is computed once per solve;
//! every iteration afterwards is `O(T^2)` regardless of the parameter count.
//!
//! Plain Frank-Wolfe zig-zags when the optimum sits on a face of the simplex,
//! so after the Frank-Wolfe loop the solver runs a small active-set refinement
//! on the support it found (exact KKT solve on that face, adding or dropping
//! vertices as needed). The refined point is only kept if it lowers the
//! objective, so the recorded objective sequence stays non-increasing.

use crate::error::{Error, Result};
use crate::types::{GradientSet, SimplexWeights};

/// Symmetric Gram matrix `M[i][j] = <g_i, g_j>`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    t: usize,
    m: Vec<f64>,
}

impl GramMatrix {
    /// Builds from a row-major `t x t` buffer. Used by tests and callers that
    /// already hold inner products.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let t = rows.len();
        if t == 0 || rows.iter().any(|r| r.len() != t) {
            return Err(Error::contract("gram matrix must be square and non-empty"));
        }
        let m: Vec<f64> = rows.into_iter().flatten().collect();
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gram matrix"));
        }
        Ok(Self { t, m })
    }

    pub fn size(&self) -> usize {
        self.t
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.t + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.m[i * self.t..(i + 1) * self.t]
    }

    /// `M * alpha`.
    pub fn times(&self, alpha: &[f64]) -> Vec<f64> {
        (0..self.t)
            .map(|r| self.row(r).iter().zip(alpha).map(|(m, a)| m * a).sum())
            .collect()
    }

    /// `alpha^T M alpha`.
    pub fn quadratic_form(&self, alpha: &[f64]) -> f64 {
        self.times(alpha).iter().zip(alpha).map(|(m, a)| m * a).sum()
    }
}

pub fn gram_matrix(g: &GradientSet) -> GramMatrix {
    let t = g.num_objectives();
    let mut m = vec![0.0; t * t];
    for i in 0..t {
        for j in i..t {
            let v: f64 = g.row(i).iter().zip(g.row(j)).map(|(a, b)| a * b).sum();
            m[i * t + j] = v;
            m[j * t + i] = v;
        }
    }
    GramMatrix { t, m }
}

/// Index `r` minimizing `(M alpha)_r`; ties go to the lowest index.
pub fn fw_linear_minimizer(alpha: &SimplexWeights, m: &GramMatrix) -> usize {
    argmin_lowest(&m.times(alpha))
}

fn argmin_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Exact minimizer over `gamma in [0, 1]` of the objective along the segment
/// from `alpha` to vertex `t_hat`.
pub fn fw_line_search(alpha: &SimplexWeights, t_hat: usize, m: &GramMatrix) -> f64 {
    let m_alpha = m.times(alpha);
    let a: f64 = m_alpha.iter().zip(alpha.iter()).map(|(x, y)| x * y).sum();
    let b = m_alpha[t_hat];
    let c = m.get(t_hat, t_hat);
    line_search_coeffs(a, b, c)
}

fn line_search_coeffs(a: f64, b: f64, c: f64) -> f64 {
    let curvature = a - 2.0 * b + c;
    if curvature <= 1e-12 {
        // q(0) = a, q(1) = c
        return if a <= c { 0.0 } else { 1.0 };
    }
    ((a - b) / curvature).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FwConfig {
    pub max_iters: usize,
    /// Stop once the line-search step falls to this value or below.
    pub gamma_tol: f64,
    /// Run the active-set refinement after the Frank-Wolfe loop.
    pub refine: bool,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            gamma_tol: 1e-5,
            refine: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinNormResult {
    pub alpha: SimplexWeights,
    /// `sum_t alpha_t g_t`.
    pub direction: Vec<f64>,
    pub sq_norm: f64,
    /// Frank-Wolfe iterations plus refinement passes.
    pub iterations: usize,
    /// Objective `alpha^T M alpha` at the start and after every accepted update.
    pub objective_history: Vec<f64>,
}

pub fn frank_wolfe_solve(g: &GradientSet, cfg: &FwConfig) -> Result<MinNormResult> {
    if cfg.max_iters == 0 {
        return Err(Error::contract("max_iters must be at least 1"));
    }
    if !(cfg.gamma_tol > 0.0) {
        return Err(Error::contract("gamma_tol must be positive"));
    }
    let t = g.num_objectives();
    let m = gram_matrix(g);

    if t == 1 || (0..t).all(|i| m.get(i, i) == 0.0) {
        let alpha = SimplexWeights::uniform(t);
        let direction = g.combine(&alpha);
        let sq_norm = dot(&direction, &direction);
        return Ok(MinNormResult {
            alpha,
            direction,
            sq_norm,
            iterations: 0,
            objective_history: vec![sq_norm],
        });
    }

    let mut alpha = vec![1.0 / t as f64; t];
    let mut q = m.quadratic_form(&alpha);
    let mut history = vec![q];
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let m_alpha = m.times(&alpha);
        let t_hat = argmin_lowest(&m_alpha);
        let a: f64 = dot(&m_alpha, &alpha);
        let gamma = line_search_coeffs(a, m_alpha[t_hat], m.get(t_hat, t_hat));
        for (i, x) in alpha.iter_mut().enumerate() {
            *x *= 1.0 - gamma;
            if i == t_hat {
                *x += gamma;
            }
        }
        q = m.quadratic_form(&alpha);
        history.push(q);
        if gamma <= cfg.gamma_tol {
            break;
        }
    }

    if cfg.refine {
        if let Some((refined, passes)) = refine_on_support(&m, &alpha) {
            iterations += passes;
            let refined_q = m.quadratic_form(&refined);
            if refined_q < q {
                alpha = refined;
                q = refined_q;
                history.push(q);
            }
        }
    }

    let alpha = SimplexWeights::new(alpha)?;
    let direction = g.combine(&alpha);
    let sq_norm = dot(&direction, &direction);
    Ok(MinNormResult {
        alpha,
        direction,
        sq_norm,
        iterations,
        objective_history: history,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Active-set refinement starting from the support of `alpha`.
///
/// Returns `None` when a face system is singular; the caller then keeps the
/// Frank-Wolfe iterate.
fn refine_on_support(m: &GramMatrix, alpha: &[f64]) -> Option<(Vec<f64>, usize)> {
    const SUPPORT_EPS: f64 = 1e-12;
    let t = m.size();
    let mut support: Vec<usize> = (0..t).filter(|&i| alpha[i] > SUPPORT_EPS).collect();
    let mut current = alpha.to_vec();
    let max_passes = 4 * t + 10;

    for pass in 1..=max_passes {
        let face = solve_face(m, &support)?;
        if face.iter().all(|&y| y >= 0.0) {
            let mut candidate = vec![0.0; t];
            for (&i, &y) in support.iter().zip(&face) {
                candidate[i] = y;
            }
            let m_alpha = m.times(&candidate);
            let value = dot(&m_alpha, &candidate);
            let r = argmin_lowest(&m_alpha);
            let slack = 1e-14 * value.abs().max(1.0);
            if m_alpha[r] >= value - slack || support.contains(&r) {
                return Some((candidate, pass));
            }
            current = candidate;
            support.push(r);
            support.sort_unstable();
            continue;
        }
        // Move from the current point toward the face solution until a weight hits zero.
        let mut step = f64::INFINITY;
        for (&i, &y) in support.iter().zip(&face) {
            if y < 0.0 {
                let x = current[i];
                step = step.min(x / (x - y));
            }
        }
        for (&i, &y) in support.iter().zip(&face) {
            current[i] += step * (y - current[i]);
        }
        support.retain(|&i| current[i] > SUPPORT_EPS);
        if support.is_empty() {
            return None;
        }
        for (i, x) in current.iter_mut().enumerate() {
            if !support.contains(&i) {
                *x = 0.0;
            }
        }
        let s: f64 = current.iter().sum();
        current.iter_mut().for_each(|x| *x /= s);
    }
    Some((current, max_passes))
}

/// Minimizes `y^T M_SS y` subject to `sum y = 1` via its KKT system.
fn solve_face(m: &GramMatrix, support: &[usize]) -> Option<Vec<f64>> {
    let n = support.len();
    let size = n + 1;
    let mut a = vec![0.0; size * size];
    let mut rhs = vec![0.0; size];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r * size + c] = m.get(i, j);
        }
        a[r * size + n] = 1.0;
        a[n * size + r] = 1.0;
    }
    rhs[n] = 1.0;
    let sol = gaussian_solve(a, rhs, size)?;
    Some(sol[..n].to_vec())
}

fn gaussian_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| {
            a[x * n + col]
                .abs()
                .partial_cmp(&a[y * n + col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot * n + col].abs() <= 1e-12 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gs(rows: &[&[f64]]) -> GradientSet {
        GradientSet::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn gm(rows: &[&[f64]]) -> GramMatrix {
        GramMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn sw(a: &[f64]) -> SimplexWeights {
        SimplexWeights::new(a.to_vec()).unwrap()
    }

    #[test]
    fn gram_examples() {
        assert_eq!(
            gram_matrix(&gs(&[&[1.0, 2.0], &[3.0, 4.0]])),
            gm(&[&[5.0, 11.0], &[11.0, 25.0]])
        );
        assert_eq!(gram_matrix(&gs(&[&[1.0, 0.0]])), gm(&[&[1.0]]));
        assert_eq!(
            gram_matrix(&gs(&[&[1.0, 0.0], &[-1.0, 0.0]])),
            gm(&[&[1.0, -1.0], &[-1.0, 1.0]])
        );
    }

    #[test]
    fn linear_minimizer_examples() {
        let id = gm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(fw_linear_minimizer(&sw(&[0.5, 0.5]), &id), 0);
        let m = gm(&[&[4.0, 1.0], &[1.0, 2.0]]);
        assert_eq!(fw_linear_minimizer(&sw(&[1.0, 0.0]), &m), 1);
        assert_eq!(fw_linear_minimizer(&sw(&[0.0, 1.0]), &m), 0);
    }

    #[test]
    fn line_search_examples() {
        let id = gm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(fw_line_search(&sw(&[1.0, 0.0]), 1, &id), 0.5);
        assert_eq!(fw_line_search(&sw(&[1.0, 0.0]), 0, &id), 0.0);
        let opp = gm(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        assert_eq!(fw_line_search(&sw(&[0.5, 0.5]), 0, &opp), 0.0);
    }

    #[test]
    fn solve_single_objective() {
        let r = frank_wolfe_solve(&gs(&[&[1.0, 0.0]]), &FwConfig::default()).unwrap();
        assert_eq!(&*r.alpha, &[1.0]);
        assert_eq!(r.direction, vec![1.0, 0.0]);
        assert_eq!(r.sq_norm, 1.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn solve_opposite_gradients() {
        let r = frank_wolfe_solve(&gs(&[&[2.0, 0.0], &[-2.0, 0.0]]), &FwConfig::default()).unwrap();
        assert_eq!(&*r.alpha, &[0.5, 0.5]);
        assert_eq!(r.sq_norm, 0.0);
    }

    #[test]
    fn solve_orthogonal_gradients() {
        let r = frank_wolfe_solve(&gs(&[&[1.0, 0.0], &[0.0, 1.0]]), &FwConfig::default()).unwrap();
        assert!((r.alpha[0] - 0.5).abs() < 1e-12);
        assert!((r.direction[0] - 0.5).abs() < 1e-12);
        assert!((r.direction[1] - 0.5).abs() < 1e-12);
        // Frozen from a grid over alpha in {0, 0.001, ..., 1}.
        assert!((r.sq_norm - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_zero_gradients_are_stationary() {
        let r = frank_wolfe_solve(&gs(&[&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]]), &FwConfig::default())
            .unwrap();
        assert_eq!(r.sq_norm, 0.0);
        assert_eq!(r.alpha, SimplexWeights::uniform(3));
    }

    #[test]
    fn refinement_fixes_near_collinear_face() {
        // Nearly collinear gradients; optimum on an edge of the simplex where
        // plain Frank-Wolfe crawls.
        let g = gs(&[
            &[-1.10360927, -1.12788718],
            &[-0.55551921, -0.676006],
            &[1.09030239, 1.3755383],
        ]);
        let plain = frank_wolfe_solve(
            &g,
            &FwConfig {
                refine: false,
                ..FwConfig::default()
            },
        )
        .unwrap();
        let refined = frank_wolfe_solve(&g, &FwConfig::default()).unwrap();
        assert!(refined.sq_norm < plain.sq_norm);
        for row in g.rows() {
            let inner: f64 = row.iter().zip(&refined.direction).map(|(a, b)| a * b).sum();
            assert!(inner >= refined.sq_norm * (1.0 - 1e-6));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let g = gs(&[&[1.0]]);
        assert!(frank_wolfe_solve(
            &g,
            &FwConfig {
                max_iters: 0,
                ..FwConfig::default()
            }
        )
        .is_err());
        assert!(frank_wolfe_solve(
            &g,
            &FwConfig {
                gamma_tol: 0.0,
                ..FwConfig::default()
            }
        )
        .is_err());
    }
}
