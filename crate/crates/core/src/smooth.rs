// Penalized cubic B-spline logistic regression (P-spline GLM with a
// second-difference penalty), smoothing parameter picked by AICc.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

const MAX_IRLS: usize = 100;
const MU_FLOOR: f64 = 1e-10;

pub(crate) struct PSplineFit {
    coef: Vec<f64>,
    domain: f64,
}

impl PSplineFit {
    pub(crate) fn predict(&self, t: f64) -> f64 {
        logistic(linear_predictor(&self.coef, self.domain, t))
    }
}

/// Uniform cubic B-spline basis: index of the first nonzero function and the
/// four nonzero values at `t` (clamped to `[0, domain]`).
fn basis(n_basis: usize, domain: f64, t: f64) -> (usize, [f64; 4]) {
    let segments = n_basis - 3;
    let h = domain / segments as f64;
    let pos = (t / h).clamp(0.0, segments as f64);
    let seg = (math::floor(pos) as usize).min(segments - 1);
    let u = pos - seg as f64;
    let u2 = u * u;
    let u3 = u2 * u;
    let one_m = 1.0 - u;
    (
        seg,
        [
            one_m * one_m * one_m / 6.0,
            (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
            (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
            u3 / 6.0,
        ],
    )
}

fn linear_predictor(coef: &[f64], domain: f64, t: f64) -> f64 {
    let (first, b) = basis(coef.len(), domain, t);
    (0..4).map(|k| b[k] * coef[first + k]).sum()
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + math::exp(-eta))
    } else {
        let e = math::exp(eta);
        e / (1.0 + e)
    }
}

fn second_difference_penalty(n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n * n];
    for k in 0..n - 2 {
        let d = [(k, 1.0), (k + 1, -2.0), (k + 2, 1.0)];
        for &(i, a) in &d {
            for &(j, b) in &d {
                p[i * n + j] += a * b;
            }
        }
    }
    p
}

struct Design {
    first: Vec<usize>,
    values: Vec<[f64; 4]>,
}

struct Solution {
    coef: Vec<f64>,
    deviance: f64,
    edf: f64,
}

fn deviance(eta: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let mut dev = 0.0;
    for i in 0..y.len() {
        let mu = logistic(eta[i]).clamp(MU_FLOOR, 1.0 - MU_FLOOR);
        dev -= 2.0 * w[i] * (y[i] * math::ln(mu) + (1.0 - y[i]) * math::ln(1.0 - mu));
    }
    dev
}

fn predictors(design: &Design, coef: &[f64]) -> Vec<f64> {
    design
        .first
        .iter()
        .zip(&design.values)
        .map(|(&f, b)| (0..4).map(|k| b[k] * coef[f + k]).sum())
        .collect()
}

fn penalty_value(p: &[f64], coef: &[f64]) -> f64 {
    let n = coef.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += coef[i] * p[i * n + j] * coef[j];
        }
    }
    s
}

fn irls(
    design: &Design,
    y: &[f64],
    w: &[f64],
    penalty: &[f64],
    lambda: f64,
    start: &[f64],
) -> Result<Solution> {
    let nb = start.len();
    let mut coef = start.to_vec();
    let mut eta = predictors(design, &coef);
    let mut pdev = deviance(&eta, y, w) + lambda * penalty_value(penalty, &coef);
    let mut xtwx = vec![0.0; nb * nb];
    for _ in 0..MAX_IRLS {
        xtwx.iter_mut().for_each(|v| *v = 0.0);
        let mut xtwz = vec![0.0; nb];
        for i in 0..y.len() {
            let mu = logistic(eta[i]).clamp(MU_FLOOR, 1.0 - MU_FLOOR);
            let var = mu * (1.0 - mu);
            let wi = w[i] * var;
            let z = eta[i] + (y[i] - mu) / var;
            let (f, b) = (design.first[i], &design.values[i]);
            for a in 0..4 {
                xtwz[f + a] += wi * b[a] * z;
                for c in 0..4 {
                    xtwx[(f + a) * nb + f + c] += wi * b[a] * b[c];
                }
            }
        }
        let mut system: Vec<f64> = xtwx.iter().zip(penalty).map(|(a, p)| a + lambda * p).collect();
        for j in 0..nb {
            system[j * nb + j] += 1e-10;
        }
        let proposal = math::cholesky_solve(&system, &xtwz, nb)
            .ok_or_else(|| Error::InternalConsistency("penalized normal equations are singular".into()))?;
        // step halving keeps the penalized deviance from increasing
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = coef.iter().zip(&proposal).map(|(c, p)| c + step * (p - c)).collect();
            let trial_eta = predictors(design, &trial);
            let trial_pdev = deviance(&trial_eta, y, w) + lambda * penalty_value(penalty, &trial);
            if trial_pdev <= pdev + 1e-12 * pdev.abs() {
                accepted = Some((trial, trial_eta, trial_pdev));
                break;
            }
            step *= 0.5;
        }
        let Some((new_coef, new_eta, new_pdev)) = accepted else { break };
        let change = (pdev - new_pdev).abs();
        coef = new_coef;
        eta = new_eta;
        let done = change < 1e-10 * (new_pdev.abs() + 0.1);
        pdev = new_pdev;
        if done {
            break;
        }
    }
    // effective degrees of freedom: tr((X'WX + λP)⁻¹ X'WX) at the solution
    xtwx.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..y.len() {
        let mu = logistic(eta[i]).clamp(MU_FLOOR, 1.0 - MU_FLOOR);
        let wi = w[i] * mu * (1.0 - mu);
        let (f, b) = (design.first[i], &design.values[i]);
        for a in 0..4 {
            for c in 0..4 {
                xtwx[(f + a) * nb + f + c] += wi * b[a] * b[c];
            }
        }
    }
    let mut system: Vec<f64> = xtwx.iter().zip(penalty).map(|(a, p)| a + lambda * p).collect();
    for j in 0..nb {
        system[j * nb + j] += 1e-10;
    }
    let l = math::cholesky(&system, nb)
        .ok_or_else(|| Error::InternalConsistency("penalized normal equations are singular".into()))?;
    let mut edf = 0.0;
    let mut column = vec![0.0; nb];
    for j in 0..nb {
        for i in 0..nb {
            column[i] = xtwx[i * nb + j];
        }
        edf += math::cholesky_apply(&l, &column, nb)[j];
    }
    Ok(Solution { coef, deviance: deviance(&eta, y, w), edf })
}

fn aicc(deviance: f64, edf: f64, n: f64) -> f64 {
    let denom = n - edf - 1.0;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    deviance + 2.0 * edf + 2.0 * edf * (edf + 1.0) / denom
}

/// Inputs must be sorted, weights positive, outcomes in {0, 1}, at least two
/// distinct times and both outcomes present.
pub(crate) fn fit_logistic_pspline(
    times: &[f64],
    outcomes: &[f64],
    weights: &[f64],
    domain: f64,
    n_basis: usize,
    lambdas: &[f64],
) -> Result<PSplineFit> {
    let (first, values) = times.iter().map(|&t| basis(n_basis, domain, t)).unzip();
    let design = Design { first, values };
    let penalty = second_difference_penalty(n_basis);
    let total_w: f64 = weights.iter().sum();
    let mean = outcomes.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / total_w;
    let start_eta = math::ln(mean / (1.0 - mean));
    let mut start = vec![start_eta; n_basis];

    let mut order: Vec<f64> = lambdas.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for &lambda in &order {
        let sol = irls(&design, outcomes, weights, &penalty, lambda, &start)?;
        let score = aicc(sol.deviance, sol.edf, total_w);
        if best.as_ref().map_or(true, |(s, _)| score < *s) {
            best = Some((score, sol.coef.clone()));
        }
        start = sol.coef;
    }
    let (_, coef) = best.expect("at least one candidate");
    Ok(PSplineFit { coef, domain })
}
