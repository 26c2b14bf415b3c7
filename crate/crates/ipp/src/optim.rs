//! Derivative-free and first-order minimizers over a coordinate box.
//!
//! The Nelder-Mead variant clamps every trial point into the box, which is
//! adequate here because the objectives of interest have interior minima and
//! the box is generous. The projected-gradient routine refines a candidate
//! with Barzilai-Borwein steps and an Armijo backtracking line search.

use nalgebra::DVector;

/// Stopping and sizing knobs for one Nelder-Mead run.
#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    pub max_iters: usize,
    /// Relative spread of simplex function values at which to stop.
    pub f_tol: f64,
    /// Simplex diameter at which to stop.
    pub x_tol: f64,
    /// Initial simplex step as a fraction of the box width.
    pub init_step: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions { max_iters: 400, f_tol: 1e-12, x_tol: 1e-9, init_step: 0.05 }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub evals: usize,
}

#[inline]
fn clamp_into(x: &mut DVector<f64>, lo: f64, hi: f64) {
    for v in x.iter_mut() {
        *v = v.clamp(lo, hi);
    }
}

/// Map a trial point into the box by mirroring at the violated bound. Unlike
/// plain clamping this keeps distinct trial points distinct, so the simplex
/// cannot collapse onto a face of the box and lose a dimension.
#[inline]
fn mirror_into(x: &mut DVector<f64>, lo: f64, hi: f64) {
    for v in x.iter_mut() {
        if *v > hi {
            *v = 2.0 * hi - *v;
        } else if *v < lo {
            *v = 2.0 * lo - *v;
        }
        // huge overshoots may still be outside after one mirror
        *v = v.clamp(lo, hi);
    }
}

/// Nelder-Mead on `[lo, hi]^p` with standard coefficients (reflection 1,
/// expansion 2, contraction 1/2, shrink 1/2). Trial points are mirrored into
/// the box, and after inner convergence the simplex is rebuilt around the
/// incumbent until the budget runs out or a rebuild stops improving.
/// Non-finite objective values are treated as +inf so the simplex retreats
/// from them.
pub fn nelder_mead_box<F>(
    f: &mut F,
    x0: &DVector<f64>,
    lo: f64,
    hi: f64,
    opts: &NmOptions,
) -> MinimizeResult
where
    F: FnMut(&DVector<f64>) -> f64,
{
    let p = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &DVector<f64>, evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut incumbent = x0.clone();
    clamp_into(&mut incumbent, lo, hi);
    let mut incumbent_value = eval(&incumbent, &mut evals);
    let mut iters_left = opts.max_iters;
    let mut step = opts.init_step * (hi - lo);

    while iters_left > 0 {
        // Fresh simplex around the incumbent, one coordinate at a time,
        // flipping the step where it would leave the box.
        let mut simplex: Vec<DVector<f64>> = Vec::with_capacity(p + 1);
        simplex.push(incumbent.clone());
        for i in 0..p {
            let mut v = incumbent.clone();
            let s = if v[i] + step <= hi { step } else { -step };
            v[i] = (v[i] + s).clamp(lo, hi);
            simplex.push(v);
        }
        let mut values: Vec<f64> = vec![incumbent_value];
        values.extend(simplex[1..].iter().map(|v| eval(v, &mut evals)));

        let mut converged = false;
        while iters_left > 0 {
            iters_left -= 1;
            // order: best first
            let mut idx: Vec<usize> = (0..=p).collect();
            idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
            let reordered: Vec<DVector<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
            let revalues: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            simplex = reordered;
            values = revalues;

            let best = values[0];
            let worst = values[p];
            let spread = (worst - best).abs();
            let diam = (0..p)
                .map(|i| {
                    simplex[1..]
                        .iter()
                        .map(|v| (v[i] - simplex[0][i]).abs())
                        .fold(0.0f64, f64::max)
                })
                .fold(0.0f64, f64::max);
            if spread <= opts.f_tol * (best.abs() + 1e-12) && diam <= opts.x_tol {
                converged = true;
                break;
            }

            // centroid of all but worst
            let mut centroid = DVector::zeros(p);
            for v in simplex.iter().take(p) {
                centroid += v;
            }
            centroid /= p as f64;

            let worst_point = simplex[p].clone();
            let mut reflected = &centroid + (&centroid - &worst_point);
            mirror_into(&mut reflected, lo, hi);
            let fr = eval(&reflected, &mut evals);

            if fr < values[0] {
                let mut expanded = &centroid + (&reflected - &centroid) * 2.0;
                mirror_into(&mut expanded, lo, hi);
                let fe = eval(&expanded, &mut evals);
                if fe < fr {
                    simplex[p] = expanded;
                    values[p] = fe;
                } else {
                    simplex[p] = reflected;
                    values[p] = fr;
                }
            } else if fr < values[p - 1] {
                simplex[p] = reflected;
                values[p] = fr;
            } else {
                let (contracted, fc) = if fr < values[p] {
                    // outside contraction
                    let mut c = &centroid + (&reflected - &centroid) * 0.5;
                    mirror_into(&mut c, lo, hi);
                    let v = eval(&c, &mut evals);
                    (c, v)
                } else {
                    // inside contraction
                    let mut c = &centroid + (&worst_point - &centroid) * 0.5;
                    mirror_into(&mut c, lo, hi);
                    let v = eval(&c, &mut evals);
                    (c, v)
                };
                if fc < values[p].min(fr) {
                    simplex[p] = contracted;
                    values[p] = fc;
                } else {
                    // shrink toward best
                    let best_point = simplex[0].clone();
                    for i in 1..=p {
                        simplex[i] = &best_point + (&simplex[i] - &best_point) * 0.5;
                        values[i] = eval(&simplex[i], &mut evals);
                    }
                }
            }
        }

        let mut best_i = 0;
        for i in 1..=p {
            if values[i] < values[best_i] {
                best_i = i;
            }
        }
        let improved = values[best_i] < incumbent_value - opts.f_tol * (incumbent_value.abs() + 1e-12);
        if values[best_i] < incumbent_value {
            incumbent = simplex[best_i].clone();
            incumbent_value = values[best_i];
        }
        // Restart with a smaller simplex around the incumbent; stop once a
        // converged run no longer improves.
        step *= 0.25;
        if converged && !improved {
            break;
        }
    }

    MinimizeResult { x: incumbent, value: incumbent_value, evals }
}

/// Projected gradient descent with Barzilai-Borwein step sizes and Armijo
/// backtracking. `fg` returns the objective and its gradient. Stops when the
/// projected gradient norm falls below `g_tol` or the step stalls.
pub fn projected_gradient<FG>(
    fg: &mut FG,
    x0: &DVector<f64>,
    lo: f64,
    hi: f64,
    max_iters: usize,
    g_tol: f64,
) -> MinimizeResult
where
    FG: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let mut x = x0.clone();
    clamp_into(&mut x, lo, hi);
    let mut evals = 1usize;
    let (mut fx, mut gx) = fg(&x);
    if !fx.is_finite() {
        return MinimizeResult { x, value: f64::INFINITY, evals };
    }
    let mut step = 1.0 / gx.norm().max(1.0);
    let mut prev_x: Option<DVector<f64>> = None;
    let mut prev_g: Option<DVector<f64>> = None;

    for _ in 0..max_iters {
        // Projected gradient norm as stationarity measure.
        let mut probe = &x - &gx;
        clamp_into(&mut probe, lo, hi);
        let pg_norm = (&probe - &x).norm();
        if pg_norm < g_tol {
            break;
        }

        if let (Some(px), Some(pg)) = (&prev_x, &prev_g) {
            let s = &x - px;
            let yv = &gx - pg;
            let sy = s.dot(&yv);
            if sy > 1e-18 {
                step = (s.dot(&s) / sy).clamp(1e-12, 1e6);
            }
        }

        let mut t = step;
        let mut accepted = false;
        for _ in 0..45 {
            let mut cand = &x - &gx * t;
            clamp_into(&mut cand, lo, hi);
            let diff = &cand - &x;
            if diff.norm() == 0.0 {
                break;
            }
            evals += 1;
            let (fc, gc) = fg(&cand);
            // Armijo condition on the projected step.
            if fc.is_finite() && fc <= fx + 1e-4 * gx.dot(&diff) {
                prev_x = Some(x.clone());
                prev_g = Some(gx.clone());
                x = cand;
                fx = fc;
                gx = gc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    MinimizeResult { x, value: fx, evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(center: &[f64]) -> impl Fn(&DVector<f64>) -> f64 + '_ {
        move |x: &DVector<f64>| {
            x.iter()
                .zip(center)
                .enumerate()
                .map(|(i, (v, c))| (1.0 + i as f64) * (v - c).powi(2))
                .sum()
        }
    }

    #[test]
    fn nelder_mead_finds_interior_quadratic_minimum() {
        let center = [0.7, -1.3, 2.0, 0.0];
        let f = quadratic(&center);
        let mut obj = |x: &DVector<f64>| f(x);
        let x0 = DVector::from_vec(vec![4.0, 4.0, -4.0, 3.0]);
        let opts = NmOptions { max_iters: 2000, ..Default::default() };
        let res = nelder_mead_box(&mut obj, &x0, -5.0, 5.0, &opts);
        for (i, &c) in center.iter().enumerate() {
            assert!((res.x[i] - c).abs() < 1e-4, "coord {i}: {}", res.x[i]);
        }
    }

    #[test]
    fn nelder_mead_respects_box() {
        // Unconstrained minimum at 3, box caps at 1.
        let mut obj = |x: &DVector<f64>| (x[0] - 3.0).powi(2) + (x[1] - 3.0).powi(2);
        let x0 = DVector::from_vec(vec![0.0, 0.0]);
        let opts = NmOptions { max_iters: 1000, ..Default::default() };
        let res = nelder_mead_box(&mut obj, &x0, -1.0, 1.0, &opts);
        assert!(res.x.iter().all(|&v| (-1.0..=1.0).contains(&v)));
        assert!((res.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn projected_gradient_polishes_to_high_accuracy() {
        let center = [0.25, -0.5, 1.5];
        let mut fg = |x: &DVector<f64>| {
            let f: f64 = x
                .iter()
                .zip(&center)
                .map(|(v, c)| (v - c).powi(2))
                .sum();
            let g = DVector::from_fn(3, |i, _| 2.0 * (x[i] - center[i]));
            (f, g)
        };
        let x0 = DVector::from_vec(vec![2.0, 2.0, -2.0]);
        let res = projected_gradient(&mut fg, &x0, -5.0, 5.0, 500, 1e-12);
        for (i, &c) in center.iter().enumerate() {
            assert!((res.x[i] - c).abs() < 1e-9, "coord {i}: {}", res.x[i]);
        }
    }

    #[test]
    fn non_finite_objective_is_survivable() {
        let mut obj = |x: &DVector<f64>| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 0.5).powi(2)
            }
        };
        let x0 = DVector::from_vec(vec![2.0]);
        let res = nelder_mead_box(&mut obj, &x0, -5.0, 5.0, &NmOptions::default());
        assert!((res.x[0] - 0.5).abs() < 1e-5);
    }
}
