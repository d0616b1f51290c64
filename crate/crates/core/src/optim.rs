//! Multistart Nelder–Mead over rate allocations with a convex feasibility
//! constraint.
//!
//! The search runs in `t_i = 1 - e^{-2 r_i}` so that very small and very
//! large rates are both reachable inside the unit box. Points outside the
//! feasible set are pulled back by bisection along the ray towards the
//! all-`t_max` anchor and charged the distance moved.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::gauss_model::{fraction_to_rate, rate_to_fraction};

/// Settings for the multistart searches.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Number of low-discrepancy starts (fixed extra starts are always added).
    pub starts: usize,
    /// Upper end of the rate box.
    pub r_max: f64,
    /// A restart that improves the objective by less than this ends a local run.
    pub tol: f64,
    /// Evaluation budget of one simplex run.
    pub max_evals: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            starts: 16,
            r_max: 0.5 * 1e6f64.ln(),
            tol: 1e-8,
            max_evals: 4000,
        }
    }
}

impl SearchConfig {
    pub(crate) fn t_max(&self) -> f64 {
        rate_to_fraction(self.r_max)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub t: Vec<f64>,
    pub value: f64,
}

impl Outcome {
    pub fn rates(&self) -> Vec<f64> {
        self.t.iter().map(|&t| fraction_to_rate(t)).collect()
    }
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
const PROJECTION_ITERS: usize = 60;
const MAX_RESTARTS: usize = 12;

fn radical_inverse(mut i: u32, base: u32) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut x) = (inv, 0.0);
    while i > 0 {
        x += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    x
}

/// Point `index` of the Halton sequence in `[0, 1)^dim`.
pub(crate) fn halton(index: usize, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|j| radical_inverse(index as u32 + 1, PRIMES[j % PRIMES.len()]))
        .collect()
}

struct Problem<'a, F, G> {
    objective: &'a F,
    feasible: &'a G,
    t_max: f64,
    anchor: Vec<f64>,
}

impl<F, G> Problem<'_, F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> bool + Sync,
{
    fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v.clamp(0.0, self.t_max)).collect()
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        let x = self.clamp(x);
        if (self.feasible)(&x) {
            return x;
        }
        let at = |s: f64| -> Vec<f64> { self.anchor.iter().zip(&x).map(|(a, v)| a + s * (v - a)).collect() };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..PROJECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if (self.feasible)(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(lo)
    }

    /// Objective at the projection plus the L1 distance to it.
    fn penalized(&self, x: &[f64]) -> f64 {
        let p = self.project(x);
        let dist: f64 = x.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        let value = (self.objective)(&p);
        if value.is_nan() {
            f64::INFINITY
        } else {
            value + dist
        }
    }

    fn nelder_mead(&self, x0: &[f64], steps: &[f64], max_evals: usize) -> (Vec<f64>, f64) {
        let n = x0.len();
        let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
        for i in 0..n {
            let mut v = x0.to_vec();
            v[i] = if v[i] + steps[i] <= self.t_max {
                v[i] + steps[i]
            } else {
                v[i] - steps[i]
            };
            simplex.push(self.clamp(&v));
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| self.penalized(v)).collect();
        let mut evals = n + 1;
        while evals < max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = values[n] - values[0];
            let diameter = simplex[1..]
                .iter()
                .map(|v| {
                    v.iter()
                        .zip(&simplex[0])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if spread <= 1e-13 * (1.0 + values[0].abs()) && diameter <= 1e-12 {
                break;
            }
            if diameter <= 1e-15 {
                break;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |c: f64| -> Vec<f64> {
                let p: Vec<f64> = centroid.iter().zip(&simplex[n]).map(|(m, w)| m + c * (m - w)).collect();
                self.clamp(&p)
            };

            let xr = along(1.0);
            let fr = self.penalized(&xr);
            evals += 1;
            if fr < values[0] {
                let xe = along(2.0);
                let fe = self.penalized(&xe);
                evals += 1;
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
            } else {
                let (xc, fc) = if fr < values[n] {
                    let xc = along(0.5);
                    let fc = self.penalized(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-0.5);
                    let fc = self.penalized(&xc);
                    (xc, fc)
                };
                evals += 1;
                if fc < values[n].min(fr) {
                    simplex[n] = xc;
                    values[n] = fc;
                } else {
                    for i in 1..=n {
                        let shrunk: Vec<f64> = simplex[0]
                            .iter()
                            .zip(&simplex[i])
                            .map(|(b, v)| b + 0.5 * (v - b))
                            .collect();
                        values[i] = self.penalized(&shrunk);
                        simplex[i] = shrunk;
                    }
                    evals += n;
                }
            }
        }
        let best = (0..=n)
            .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal))
            .unwrap_or(0);
        (simplex[best].clone(), values[best])
    }

    fn local(&self, start: &[f64], cfg: &SearchConfig) -> Outcome {
        let mut x = self.project(start);
        let mut fx = self.penalized(&x);
        for restart in 0..MAX_RESTARTS {
            let steps: Vec<f64> = if restart == 0 {
                x.iter().map(|&v| 0.1 * v.max(0.01 * self.t_max)).collect()
            } else {
                x.iter().map(|&v| 0.05 * v.max(1e-9)).collect()
            };
            let (y, fy) = self.nelder_mead(&x, &steps, cfg.max_evals);
            let improvement = fx - fy;
            if fy <= fx {
                x = y;
                fx = fy;
            }
            if restart > 0 && !(improvement > cfg.tol * 1e-3) {
                break;
            }
        }
        let t = self.project(&x);
        let value = (self.objective)(&t);
        Outcome { t, value }
    }
}

/// Minimises `objective(t)` over `{t ∈ [0, t_max]^dim : feasible(t)}`.
///
/// `feasible` must describe a convex set containing the all-`t_max` corner;
/// returns `None` when that corner is infeasible. Extra starts are tried in
/// addition to the Halton points, zero, the corner and a geometric ladder of
/// small uniform starts.
pub(crate) fn minimize<F, G>(
    dim: usize,
    feasible: &G,
    objective: &F,
    cfg: &SearchConfig,
    extra_starts: &[Vec<f64>],
) -> Option<Outcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> bool + Sync,
{
    let t_max = cfg.t_max();
    let anchor = vec![t_max; dim];
    if !feasible(&anchor) {
        return None;
    }
    let problem = Problem {
        objective,
        feasible,
        t_max,
        anchor: anchor.clone(),
    };
    let mut starts: Vec<Vec<f64>> = (0..cfg.starts)
        .map(|i| halton(i, dim).into_iter().map(|h| h * t_max).collect())
        .collect();
    starts.push(vec![0.0; dim]);
    starts.push(anchor);
    for k in 1..=6 {
        starts.push(vec![10f64.powi(-k); dim]);
    }
    starts.extend(extra_starts.iter().filter(|s| s.len() == dim).cloned());

    let outcomes: Vec<Outcome> = starts.par_iter().map(|s| problem.local(s, cfg)).collect();
    outcomes
        .into_iter()
        .reduce(|best, o| match o.value.partial_cmp(&best.value) {
            Some(Ordering::Less) => o,
            Some(Ordering::Equal) if lexicographic_less(&o.t, &best.t) => o,
            _ if best.value.is_nan() => o,
            _ => best,
        })
}

fn lexicographic_less(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y)
}
