//! Action `e^{τA}·V` for several `τ` by truncated Taylor series, chained
//! through the sorted times so that the whole set costs about as much as one
//! action over the longest time.

use super::{ensure_finite, ensure_square, norm1, RealMatrix};
use crate::error::{Error, Result};

/// Bound on `‖ΔτA‖₁` per Taylor segment.
const SEGMENT_NORM: f64 = 3.5;
const MAX_DEGREE: usize = 60;

/// `e^{τᵢA}·V` for every `τᵢ`, in the order given.
pub fn exp_actions(a: &RealMatrix, v: &RealMatrix, taus: &[f64]) -> Result<Vec<RealMatrix>> {
    ensure_square(a, "exponential action")?;
    if v.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "block has {} rows, matrix is {}x{}",
            v.nrows(),
            a.nrows(),
            a.ncols()
        )));
    }
    if let Some(t) = taus.iter().find(|t| !t.is_finite()) {
        return Err(Error::Domain(format!("time {t} is not finite")));
    }
    ensure_finite(a, "exponential action matrix")?;

    let a_norm = norm1(a);
    let mut out = vec![RealMatrix::zeros(0, 0); taus.len()];
    for sign in [1.0, -1.0] {
        let mut order: Vec<usize> = (0..taus.len())
            .filter(|&i| if sign > 0.0 { taus[i] >= 0.0 } else { taus[i] < 0.0 })
            .collect();
        order.sort_by(|&i, &j| (sign * taus[i]).total_cmp(&(sign * taus[j])));
        let mut w = v.clone();
        let mut now = 0.0;
        for i in order {
            let dt = taus[i] - now;
            if dt != 0.0 {
                w = taylor_advance(a, a_norm, &w, dt);
                now = taus[i];
            }
            out[i] = w.clone();
        }
    }
    Ok(out)
}

fn taylor_advance(a: &RealMatrix, a_norm: f64, w: &RealMatrix, dt: f64) -> RealMatrix {
    let segments = ((dt.abs() * a_norm) / SEGMENT_NORM).ceil().max(1.0) as usize;
    let step = dt / segments as f64;
    let mut w = w.clone();
    for _ in 0..segments {
        let mut term = w.clone();
        let mut sum = w.clone();
        let mut prev_small = false;
        for j in 1..=MAX_DEGREE {
            term = (a * &term) * (step / j as f64);
            sum += &term;
            let small = norm1(&term) <= f64::EPSILON * 0.5 * norm1(&sum);
            if small && prev_small {
                break;
            }
            prev_small = small;
        }
        w = sum;
    }
    w
}
