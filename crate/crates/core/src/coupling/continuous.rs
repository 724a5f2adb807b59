use rand::Rng;

use super::{CouplingSetup, CouplingTrace};
use crate::dist::sample_index;

fn exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    -(1.0 - rng.random::<f64>()).ln() / rate
}

/// One coupled trace of a skip-free generator and its pure-birth dual from 0.
///
/// `X` jumps at its own rates. The dual carries an extra clock of rate
/// `ν_x̂ Λ(x̂ + 1, x) / Λ(x̂, x)`; when it rings first the dual moves up and
/// `X` holds. When `X` jumps to `x̂ + 1` the dual follows. Both clocks are
/// redrawn after every event.
pub fn simulate_coupled_continuous<R: Rng + ?Sized>(setup: &CouplingSetup, rng: &mut R, horizon: u64) -> CouplingTrace {
    let g = &setup.matrix;
    let d = setup.d();
    let (mut x, mut x_hat, mut t) = (0usize, 0usize, 0.0f64);
    let mut primal_path = vec![x];
    let mut dual_path = vec![x_hat];
    let mut times = vec![0.0];
    let (mut t_primal, mut t_dual) = (None, None);
    let mut l: i64 = 0;
    let mut horizon_hit = false;
    let mut events = 0u64;
    while t_primal.is_none() || t_dual.is_none() {
        if events >= horizon {
            horizon_hit = true;
            break;
        }
        events += 1;
        let exit = if x == d { 0.0 } else { -g[(x, x)] };
        let dual_rate = if x_hat < d && setup.link[(x_hat, x)] > 0.0 {
            setup.rates[x_hat] * setup.link[(x_hat + 1, x)] / setup.link[(x_hat, x)]
        } else {
            0.0
        };
        let (tx, td) = (exponential(exit, rng), exponential(dual_rate, rng));
        if tx.is_infinite() && td.is_infinite() {
            break;
        }
        if tx < td {
            t += tx;
            let row: Vec<f64> = (0..g.ncols()).map(|j| if j == x { 0.0 } else { g[(x, j)].max(0.0) }).collect();
            x = sample_index(&row, rng);
            if x == x_hat + 1 {
                x_hat += 1;
            }
        } else {
            t += td;
            x_hat += 1;
        }
        primal_path.push(x);
        dual_path.push(x_hat);
        times.push(t);
        if t_primal.is_none() && x == d {
            t_primal = Some(t);
        }
        if t_dual.is_none() {
            if x_hat == d {
                t_dual = Some(t);
            } else {
                l = l.max(x_hat as i64);
            }
        }
    }
    CouplingTrace { primal_path, dual_path, times, t_primal, t_dual, l, horizon_hit }
}
