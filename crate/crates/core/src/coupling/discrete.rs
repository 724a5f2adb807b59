use nalgebra::DMatrix;
use rand::Rng;

use super::{CouplingSetup, CouplingTrace};
use crate::dist::sample_index;

/// Probability that the pure-birth dual moves from `x_hat` to `x_hat + 1`
/// when the chain has just moved to `y`:
///
/// ```text
/// (1 - θ_x̂) Λ(x̂ + 1, y) / (Λ P)(x̂, y),
/// ```
///
/// and 1 when `y = x̂ + 1`.
pub fn promotion_probability(link: &DMatrix<f64>, p: &DMatrix<f64>, thetas: &[f64], x_hat: usize, y: usize) -> f64 {
    if y == x_hat + 1 {
        return 1.0;
    }
    if x_hat + 1 >= link.nrows() {
        return 0.0;
    }
    let denom: f64 = (0..p.nrows()).map(|z| link[(x_hat, z)] * p[(z, y)]).sum();
    if denom <= 0.0 {
        return 0.0;
    }
    let prob = (1.0 - thetas[x_hat]) * link[(x_hat + 1, y)] / denom;
    assert!(
        (-1e-9..=1.0 + 1e-9).contains(&prob),
        "promotion probability {prob} outside [0, 1] at x̂ = {x_hat}, y = {y}"
    );
    prob.clamp(0.0, 1.0)
}

/// One coupled trace of a skip-free chain and its pure-birth dual from 0.
pub fn simulate_coupled_discrete<R: Rng + ?Sized>(setup: &CouplingSetup, rng: &mut R, horizon: u64) -> CouplingTrace {
    run(setup, rng, horizon, 0, 0, |x_hat, y, rng| {
        if y > x_hat + 1 {
            return None;
        }
        let prob = promotion_probability(&setup.link, &setup.matrix, &setup.thetas, x_hat, y);
        Some(if rng.random::<f64>() < prob { x_hat + 1 } else { x_hat })
    })
}

/// One trace of an absorbing chain from `m0` coupled to the modified dual,
/// with `P(X̄_t = ŷ | X̄_{t-1} = x̄, X_t = y) ∝ P̄(x̄, ŷ) Λ̄(ŷ, y)`.
pub fn simulate_general_dual<R: Rng + ?Sized>(setup: &CouplingSetup, rng: &mut R, horizon: u64) -> CouplingTrace {
    let n = setup.n();
    let x0 = sample_index(&setup.m0, rng);
    let bayes: Vec<f64> = (0..n).map(|i| setup.dual_m0[i] * setup.link[(i, x0)]).collect();
    let xb0 = sample_index(&bayes, rng);
    run(setup, rng, horizon, x0, xb0, |x_bar, y, rng| {
        let w: Vec<f64> = (0..n).map(|j| setup.dual[(x_bar, j)] * setup.link[(j, y)]).collect();
        if w.iter().all(|&v| v <= 0.0) {
            return None;
        }
        Some(sample_index(&w, rng))
    })
}

/// Drives `X` with the kernel and the dual with `next_dual` until both are
/// absorbed, the dual has no admissible move, or the horizon is reached.
fn run<R, F>(
    setup: &CouplingSetup,
    rng: &mut R,
    horizon: u64,
    x0: usize,
    dual0: usize,
    mut next_dual: F,
) -> CouplingTrace
where
    R: Rng + ?Sized,
    F: FnMut(usize, usize, &mut R) -> Option<usize>,
{
    let d = setup.d();
    let (mut x, mut xd) = (x0, dual0);
    let mut primal_path = vec![x];
    let mut dual_path = vec![xd];
    let mut t_primal = (x == d).then_some(0.0);
    let mut t_dual = setup.dual_absorbed(xd).then_some(0.0);
    let mut l: i64 = if setup.dual_absorbed(xd) { -1 } else { xd as i64 };
    let mut horizon_hit = false;
    let mut t = 0u64;
    while t_primal.is_none() || t_dual.is_none() {
        if t >= horizon {
            horizon_hit = true;
            break;
        }
        t += 1;
        let row: Vec<f64> = setup.matrix.row(x).iter().copied().collect();
        x = sample_index(&row, rng);
        if t_dual.is_none() {
            match next_dual(xd, x, rng) {
                Some(next) => xd = next,
                None => {
                    primal_path.push(x);
                    dual_path.push(xd);
                    if t_primal.is_none() && x == d {
                        t_primal = Some(t as f64);
                    }
                    break;
                }
            }
        }
        primal_path.push(x);
        dual_path.push(xd);
        if t_primal.is_none() && x == d {
            t_primal = Some(t as f64);
        }
        if t_dual.is_none() {
            if setup.dual_absorbed(xd) {
                t_dual = Some(t as f64);
            } else {
                l = l.max(xd as i64);
            }
        }
    }
    CouplingTrace { primal_path, dual_path, times: Vec::new(), t_primal, t_dual, l, horizon_hit }
}
