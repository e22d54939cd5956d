//! Box-constrained Levenberg-Marquardt with forward-difference Jacobians.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmSettings {
    pub max_iterations: usize,
    pub initial_damping: f64,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub ftol: f64,
    /// Stop when the projected gradient infinity norm falls below this.
    pub gtol: f64,
    pub fd_step: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            initial_damping: 1e-3,
            ftol: 1e-12,
            gtol: 1e-16,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmReport {
    pub iterations: usize,
    /// Half the squared residual norm at the returned point.
    pub cost: f64,
    pub stalled: bool,
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Minimizes `0.5 * |r(x)|^2` over `lower <= x <= upper`, updating `x` in
/// place. Variables pinned at a bound with the gradient pointing outward are
/// frozen for the step; trial points are projected back onto the box.
pub fn least_squares_box<F>(
    mut residuals: F,
    x: &mut [f64],
    lower: &[f64],
    upper: &[f64],
    settings: &LmSettings,
) -> LmReport
where
    F: FnMut(&[f64], &mut Vec<f64>),
{
    let n = x.len();
    for i in 0..n {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
    let mut r = Vec::new();
    residuals(x, &mut r);
    let m = r.len();
    let mut cost = half_sq(&r);
    let mut mu = settings.initial_damping;
    let mut jac = DMatrix::<f64>::zeros(m, n);
    let mut probe = x.to_vec();
    let mut r_probe = Vec::with_capacity(m);
    let mut trial = vec![0.0; n];
    let mut r_trial = Vec::with_capacity(m);

    let mut iterations = 0;
    while iterations < settings.max_iterations {
        iterations += 1;
        for j in 0..n {
            let h = if x[j] + settings.fd_step <= upper[j] {
                settings.fd_step
            } else {
                -settings.fd_step
            };
            probe.copy_from_slice(x);
            probe[j] += h;
            residuals(&probe, &mut r_probe);
            for i in 0..m {
                jac[(i, j)] = (r_probe[i] - r[i]) / h;
            }
        }
        let rv = DVector::from_column_slice(&r);
        let grad = jac.tr_mul(&rv);
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                !((x[i] <= lower[i] && grad[i] > 0.0) || (x[i] >= upper[i] && grad[i] < 0.0))
            })
            .collect();
        let pg = free.iter().map(|&i| grad[i].abs()).fold(0.0, f64::max);
        if free.is_empty() || pg < settings.gtol {
            return LmReport {
                iterations,
                cost,
                stalled: false,
            };
        }
        let jtj = jac.tr_mul(&jac);
        let k = free.len();
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = DMatrix::<f64>::zeros(k, k);
            let mut b = DVector::<f64>::zeros(k);
            for (p, &i) in free.iter().enumerate() {
                b[p] = -grad[i];
                for (q, &j) in free.iter().enumerate() {
                    a[(p, q)] = jtj[(i, j)];
                }
                a[(p, p)] += mu * (jtj[(i, i)] + 1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&b)) else {
                mu *= 10.0;
                continue;
            };
            trial.copy_from_slice(x);
            for (p, &i) in free.iter().enumerate() {
                trial[i] = (x[i] + step[p]).clamp(lower[i], upper[i]);
            }
            residuals(&trial, &mut r_trial);
            let c = half_sq(&r_trial);
            if c < cost {
                let gain = (cost - c) / cost.max(f64::MIN_POSITIVE);
                x.copy_from_slice(&trial);
                std::mem::swap(&mut r, &mut r_trial);
                cost = c;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if gain < settings.ftol {
                    return LmReport {
                        iterations,
                        cost,
                        stalled: false,
                    };
                }
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            return LmReport {
                iterations,
                cost,
                stalled: true,
            };
        }
    }
    LmReport {
        iterations,
        cost,
        stalled: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_unconstrained_minimum() {
        let mut x = [-1.2, 1.0];
        let rep = least_squares_box(
            |x, r| {
                r.clear();
                r.push(10.0 * (x[1] - x[0] * x[0]));
                r.push(1.0 - x[0]);
            },
            &mut x,
            &[-5.0, -5.0],
            &[5.0, 5.0],
            &LmSettings::default(),
        );
        assert!(rep.cost < 1e-20, "{rep:?}");
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn active_bound_is_respected() {
        // minimum of (x-2)^2 + (y+1)^2 on [0,1]x[0,1] is (1, 0)
        let mut x = [0.5, 0.5];
        least_squares_box(
            |x, r| {
                r.clear();
                r.push(x[0] - 2.0);
                r.push(x[1] + 1.0);
            },
            &mut x,
            &[0.0, 0.0],
            &[1.0, 1.0],
            &LmSettings::default(),
        );
        assert_eq!(x, [1.0, 0.0]);
    }

    #[test]
    fn start_outside_box_is_projected() {
        let mut x = [7.0];
        least_squares_box(
            |x, r| {
                r.clear();
                r.push(x[0] - 0.25);
            },
            &mut x,
            &[0.0],
            &[1.0],
            &LmSettings::default(),
        );
        assert!((x[0] - 0.25).abs() < 1e-10);
    }
}
