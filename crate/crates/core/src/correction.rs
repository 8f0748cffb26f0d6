//! Corrective directions that let iterates leave the step subspace.
//!
//! The window approximation `H = S L S^T` has rank at most `m`, so a search
//! direction `-H g` can never escape the span of the stored steps. The
//! correction augments it to `p = -H g - alpha v` with a unit vector `v` and
//! a step length `alpha` chosen from curvature information along `v`. Two
//! rules are provided:
//!
//! * [`ver_a`] builds `v` from both residual directions `u1` and `u2` (their
//!   normalized orthogonal complements, summed), which guarantees
//!   `alpha * v^T g >= 0` so the augmented direction stays a descent
//!   direction;
//! * [`ver_b`] simply takes `v` along the gradient and accepts that the sign
//!   guarantee is lost, getting by on two probes per iteration instead of
//!   four.
//!
//! All second-order information comes from [`hvp`], a one-sided
//! finite-difference Hessian-vector product costing exactly one gradient
//! evaluation; no Hessian is ever formed.

use nalgebra::DVector;
use thiserror::Error;

use crate::optimizers::{BudgetExhausted, Evaluator};

/// Correction terms for one iteration: direction `v` (unit length or zero)
/// and magnitude `alpha`, plus the number of gradient evaluations spent.
#[derive(Debug, Clone)]
pub struct Correction {
    pub v: DVector<f64>,
    pub alpha: f64,
    pub hvp_evals: usize,
}

impl Correction {
    fn zero(n: usize, hvp_evals: usize) -> Self {
        Correction { v: DVector::zeros(n), alpha: 0.0, hvp_evals }
    }
}

#[derive(Debug, Error)]
pub enum CorrectionError {
    #[error("hessian-vector probe direction is zero")]
    ZeroDirection,
    #[error(transparent)]
    Budget(#[from] BudgetExhausted),
}

/// Forward-difference Hessian-vector product `H(x) d` from two gradients.
///
/// Uses the probe step `eps = 1e-6 / ||d||`, so the evaluation point is
/// always a fixed `1e-6` away from `x` regardless of the scale of `d`.
/// `g0` must be the gradient at `x` (already paid for by the caller);
/// the probe itself consumes exactly one evaluation from `eval`.
pub fn hvp(
    eval: &Evaluator<'_>,
    x: &DVector<f64>,
    d: &DVector<f64>,
    g0: &DVector<f64>,
) -> Result<DVector<f64>, CorrectionError> {
    let dnorm = d.norm();
    if dnorm == 0.0 {
        return Err(CorrectionError::ZeroDirection);
    }
    let eps = 1e-6 / dnorm;
    let g1 = eval.grad_at(&(x + d * eps))?;
    Ok((g1 - g0) / eps)
}

fn probe(
    eval: &Evaluator<'_>,
    x: &DVector<f64>,
    d: &DVector<f64>,
    g0: &DVector<f64>,
) -> Result<DVector<f64>, BudgetExhausted> {
    match hvp(eval, x, d, g0) {
        Ok(v) => Ok(v),
        Err(CorrectionError::Budget(b)) => Err(b),
        Err(CorrectionError::ZeroDirection) => {
            unreachable!("internal hvp callers guard against zero directions")
        }
    }
}

/// The two residual directions feeding the correction:
/// `u1 = H(x) g - H(x) H(x) hg` and `u2 = g`, where `hg` is the current
/// window approximation applied to the gradient.
///
/// Costs up to three gradient evaluations: one for `H g`, and two for the
/// nested product `H (H hg)`; both nested probes are skipped outright when
/// `hg` (or the intermediate product) vanishes, because the term is exactly
/// zero in that case.
pub fn build_u1_u2(
    eval: &Evaluator<'_>,
    x: &DVector<f64>,
    g: &DVector<f64>,
    hg: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>, usize), BudgetExhausted> {
    let mut evals = 0usize;
    let ag = if g.norm() > 0.0 {
        evals += 1;
        probe(eval, x, g, g)?
    } else {
        DVector::zeros(x.len())
    };
    let z = hessian_squared(eval, x, g, hg, &mut evals)?;
    Ok((ag - z, g.clone(), evals))
}

/// `H(x) H(x) hg` via two chained probes, or zero when the chain collapses.
fn hessian_squared(
    eval: &Evaluator<'_>,
    x: &DVector<f64>,
    g0: &DVector<f64>,
    hg: &DVector<f64>,
    evals: &mut usize,
) -> Result<DVector<f64>, BudgetExhausted> {
    if hg.norm() == 0.0 {
        return Ok(DVector::zeros(x.len()));
    }
    *evals += 1;
    let w = probe(eval, x, hg, g0)?;
    if w.norm() == 0.0 {
        return Ok(DVector::zeros(x.len()));
    }
    *evals += 1;
    probe(eval, x, &w, g0)
}

/// `alpha = (v^T u1) / ||H v||^2` with the denominator estimate supplied by
/// the caller; collapses to zero on non-finite or vanishing curvature.
fn alpha_from(num: f64, den: f64) -> f64 {
    if num.is_finite() && den.is_finite() && den >= 1e-300 {
        num / den
    } else {
        0.0
    }
}

/// Cosine width treating `u1` and `u2` as (anti-)parallel.
///
/// The anti-parallel side is the one that matters: when `u1` points almost
/// exactly against the gradient, no direction in their span can give the
/// correction a guaranteed descent sign, and the mixed vector below keeps a
/// useful component only of order the leftover angle while `alpha` keeps the
/// full magnitude of `u1`. Left unguarded that produces enormous corrections
/// almost orthogonal to the gradient and the line search crawls, so anything
/// this close to opposed is handled as the exactly-opposed case: no
/// correction at all.
const PARALLEL_TOL: f64 = 1e-4;

/// Two-sided correction rule.
///
/// `v` combines the mutually orthogonalized unit components of `u1` and `u2`,
/// which makes both `v^T g` and the `alpha` numerator non-negative by
/// construction: the augmented direction can only add descent. Consumes at
/// most four gradient evaluations. Degenerate geometry (either residual
/// vanishing, or the two nearly opposed) yields a zero correction.
pub fn ver_a(
    eval: &Evaluator<'_>,
    x: &DVector<f64>,
    g: &DVector<f64>,
    hg: &DVector<f64>,
) -> Result<Correction, BudgetExhausted> {
    let n = x.len();
    if g.norm() == 0.0 {
        return Ok(Correction::zero(n, 0));
    }
    let (u1, u2, mut evals) = build_u1_u2(eval, x, g, hg)?;
    let n1 = u1.norm();
    let n2 = u2.norm();
    if n1 < 1e-300 || n2 < 1e-300 {
        return Ok(Correction::zero(n, evals));
    }
    let cos = (u1.dot(&u2) / (n1 * n2)).clamp(-1.0, 1.0);
    let v = if cos <= -1.0 + PARALLEL_TOL {
        return Ok(Correction::zero(n, evals));
    } else if cos >= 1.0 - PARALLEL_TOL {
        let sum = &u1 + &u2;
        let norm = sum.norm();
        sum / norm
    } else {
        let c = u1.dot(&u2);
        let u1p = &u1 - &u2 * (c / (n2 * n2));
        let u2p = &u2 - &u1 * (c / (n1 * n1));
        let mixed = u1p.normalize() + u2p.normalize();
        mixed.normalize()
    };
    evals += 1;
    let av = probe(eval, x, &v, g)?;
    let alpha = alpha_from(v.dot(&u1), av.norm_squared());
    Ok(Correction { v, alpha, hvp_evals: evals })
}

/// Gradient-aligned correction rule.
///
/// `v = g / ||g||`, and `alpha` comes from the same curvature quotient as
/// [`ver_a`], but the quotient never needs `u1` as a vector: folding the
/// second-order term through the symmetry of the Hessian turns
/// `g^T H (H hg)` into `(H g)^T (H hg)`, so two probes cover numerator and
/// denominator and the chained probe-of-a-probe drops out entirely. No sign
/// guarantee: `alpha` may turn the augmented direction uphill, in which
/// case the driver falls back to steepest descent for that iteration.
pub fn ver_b(
    eval: &Evaluator<'_>,
    x: &DVector<f64>,
    g: &DVector<f64>,
    hg: &DVector<f64>,
) -> Result<Correction, BudgetExhausted> {
    let n = x.len();
    let gnorm = g.norm();
    if gnorm == 0.0 {
        return Ok(Correction::zero(n, 0));
    }
    let mut evals = 1usize;
    let ag = probe(eval, x, g, g)?;
    let ahg = if hg.norm() > 0.0 {
        evals += 1;
        probe(eval, x, hg, g)?
    } else {
        DVector::zeros(n)
    };
    let v = g / gnorm;
    let den = ag.norm_squared() / (gnorm * gnorm);
    let num = (g.dot(&ag) - ag.dot(&ahg)) / gnorm;
    Ok(Correction { v, alpha: alpha_from(num, den), hvp_evals: evals })
}
