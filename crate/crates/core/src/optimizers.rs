//! Line-search drivers: steepest descent, dense BFGS, two-loop L-BFGS, and
//! the windowed subspace method in its two corrected variants.
//!
//! All drivers share one loop: evaluate, test convergence, pick a direction,
//! run a strong Wolfe search along it, absorb the accepted step, repeat. They
//! differ only in how the direction is produced, so each method is a small
//! strategy behind the [`run`] entry point.
//!
//! Work is accounted the way benchmark tables for these methods convention-
//! ally do it: `nfg` counts joint objective/gradient evaluations at iterates
//! and line-search trial points, and `max_nfg` caps that number exactly. The
//! curvature probes behind the corrected variants read only a gradient; they
//! are tallied separately (see [`Trace::probes`]) and stop being issued once
//! the `nfg` budget is spent. Each iteration takes at most four probes, so
//! the separate tally is bounded by four times the budget.

use std::cell::Cell;
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correction::{self, Correction};
use crate::linesearch::{strong_wolfe, LineSearchStatus};
use crate::problems::Problem;
use crate::subspace::{rescale_pair, SubspaceState};

/// Dense BFGS keeps an explicit `n x n` matrix; refuse dimensions where that
/// stops being a reasonable amount of memory (4096^2 doubles = 128 MiB).
pub const DENSE_BFGS_MAX_N: usize = 4096;

/// Signalled when a gradient evaluation would exceed `max_nfg`. The run that
/// hits it finishes with [`RunStatus::BudgetExhausted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("evaluation budget exhausted")]
pub struct BudgetExhausted;

/// Counts objective/gradient evaluations against a hard cap.
///
/// The counter only moves on evaluations that actually happen: a call that
/// would overdraw the budget returns [`BudgetExhausted`] without touching
/// the problem. Gradient-only probes are tallied on their own counter and
/// are refused, rather than charged, once the paired budget is gone.
pub struct Evaluator<'a> {
    problem: &'a Problem,
    used: Cell<usize>,
    probed: Cell<usize>,
    budget: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a Problem, budget: usize) -> Self {
        Evaluator { problem, used: Cell::new(0), probed: Cell::new(0), budget }
    }

    /// Paired evaluations consumed so far.
    pub fn nfg(&self) -> usize {
        self.used.get()
    }

    /// Gradient-only probes consumed so far.
    pub fn probes(&self) -> usize {
        self.probed.get()
    }

    /// Paired evaluations still available.
    pub fn remaining(&self) -> usize {
        self.budget - self.used.get()
    }

    /// Objective value and gradient at `x`; one budget unit.
    pub fn fg(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>), BudgetExhausted> {
        if self.used.get() >= self.budget {
            return Err(BudgetExhausted);
        }
        self.used.set(self.used.get() + 1);
        Ok((self.problem.f(x), self.problem.grad(x)))
    }

    /// Gradient only, for curvature probes. Off the `nfg` budget, but a run
    /// whose budget is already spent gets no further probes either.
    pub fn grad_at(&self, x: &DVector<f64>) -> Result<DVector<f64>, BudgetExhausted> {
        if self.used.get() >= self.budget {
            return Err(BudgetExhausted);
        }
        self.probed.set(self.probed.get() + 1);
        Ok(self.problem.grad(x))
    }
}

/// Which method a run uses. The string forms (`gd`, `bfgs`, `lbfgs`,
/// `fast-a`, `fast-b`) are what the benchmark CLI accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Gd,
    Bfgs,
    Lbfgs,
    FastA,
    FastB,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::Gd, Variant::Bfgs, Variant::Lbfgs, Variant::FastA, Variant::FastB];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Gd => "gd",
            Variant::Bfgs => "bfgs",
            Variant::Lbfgs => "lbfgs",
            Variant::FastA => "fast-a",
            Variant::FastB => "fast-b",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = OptimizerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gd" => Ok(Variant::Gd),
            "bfgs" => Ok(Variant::Bfgs),
            "lbfgs" => Ok(Variant::Lbfgs),
            "fast-a" => Ok(Variant::FastA),
            "fast-b" => Ok(Variant::FastB),
            other => Err(OptimizerError::Config(format!(
                "unknown variant {other:?} (expected gd, bfgs, lbfgs, fast-a or fast-b)"
            ))),
        }
    }
}

/// Settings shared by every driver. `m` only matters for the windowed
/// methods and L-BFGS; `constrained` only for the windowed methods, where it
/// switches the correction off so iterates stay inside the step subspace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub variant: Variant,
    pub m: usize,
    pub tol: f64,
    pub max_nfg: usize,
    pub c1: f64,
    pub c2: f64,
    pub ls_max_evals: usize,
    pub constrained: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            variant: Variant::FastB,
            m: 8,
            tol: 1e-5,
            max_nfg: 1000,
            c1: 1e-4,
            c2: 0.99,
            ls_max_evals: 60,
            constrained: false,
        }
    }
}

impl OptimizerConfig {
    pub(crate) fn validate(&self) -> Result<(), OptimizerError> {
        if self.m == 0 {
            return Err(OptimizerError::Config("window size m must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(OptimizerError::Config(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_nfg == 0 {
            return Err(OptimizerError::Config("max_nfg must be at least 1".into()));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(OptimizerError::Config(format!(
                "Wolfe constants must satisfy 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if self.ls_max_evals == 0 {
            return Err(OptimizerError::Config("ls_max_evals must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("dense BFGS is limited to n <= {max}, problem has n = {n}")]
    Capacity { n: usize, max: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// `||g|| < tol` reached.
    Converged,
    /// The `max_nfg` cap was hit first.
    BudgetExhausted,
    /// The Wolfe search failed along the method direction and along steepest
    /// descent, with budget still available.
    LineSearchFailure,
}

impl RunStatus {
    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::BudgetExhausted => "budget-exhausted",
            RunStatus::LineSearchFailure => "line-search-failure",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-iteration record: state at the start of the step, the accepted step
/// length, the correction magnitude, and the cumulative evaluation count
/// once the step completed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub f: f64,
    pub gnorm: f64,
    pub tau: f64,
    pub alpha: f64,
    pub nfg: usize,
}

/// Full account of a run.
#[derive(Debug, Clone)]
pub struct Trace {
    pub iterations: Vec<IterationRecord>,
    pub final_x: DVector<f64>,
    pub final_f: f64,
    pub final_gnorm: f64,
    pub nfg: usize,
    /// Gradient-only curvature probes, zero for the uncorrected methods.
    pub probes: usize,
    pub status: RunStatus,
}

/// A method is a rule for turning the current gradient into a search
/// direction, plus a hook that digests the accepted step.
trait Direction {
    /// Returns the search direction and the correction magnitude that went
    /// into it (zero for methods without a correction term).
    fn compute(
        &mut self,
        x: &DVector<f64>,
        g: &DVector<f64>,
        eval: &Evaluator<'_>,
    ) -> Result<(DVector<f64>, f64), BudgetExhausted>;

    fn absorb(&mut self, s: &DVector<f64>, y: &DVector<f64>);
}

struct SteepestDescent;

impl Direction for SteepestDescent {
    fn compute(
        &mut self,
        _x: &DVector<f64>,
        g: &DVector<f64>,
        _eval: &Evaluator<'_>,
    ) -> Result<(DVector<f64>, f64), BudgetExhausted> {
        Ok((-g, 0.0))
    }

    fn absorb(&mut self, _s: &DVector<f64>, _y: &DVector<f64>) {}
}

/// In-place BFGS update of an inverse-Hessian approximation. Pairs with
/// non-positive or negligible curvature are skipped, which keeps `h`
/// positive definite.
pub(crate) fn bfgs_update(h: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) {
    let sty = s.dot(y);
    if sty <= 1e-12 * s.norm() * y.norm() {
        return;
    }
    let rho = 1.0 / sty;
    let hy = &*h * y;
    let coef = rho * rho * y.dot(&hy) + rho;
    // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded into
    // two rank-1 corrections and a scaled outer product.
    h.ger(-rho, s, &hy, 1.0);
    h.ger(-rho, &hy, s, 1.0);
    h.ger(coef, s, s, 1.0);
}

/// Classic dense BFGS on the inverse Hessian, started from the identity.
struct DenseBfgs {
    h: DMatrix<f64>,
}

impl DenseBfgs {
    fn new(n: usize) -> Self {
        DenseBfgs { h: DMatrix::identity(n, n) }
    }
}

impl Direction for DenseBfgs {
    fn compute(
        &mut self,
        _x: &DVector<f64>,
        g: &DVector<f64>,
        _eval: &Evaluator<'_>,
    ) -> Result<(DVector<f64>, f64), BudgetExhausted> {
        Ok((-(&self.h * g), 0.0))
    }

    fn absorb(&mut self, s: &DVector<f64>, y: &DVector<f64>) {
        bfgs_update(&mut self.h, s, y);
    }
}

/// Two-loop recursion L-BFGS with the standard `s^T y / y^T y` scaling of
/// the initial matrix.
struct Lbfgs {
    pairs: VecDeque<(DVector<f64>, DVector<f64>, f64)>,
    m: usize,
}

impl Lbfgs {
    fn new(m: usize) -> Self {
        Lbfgs { pairs: VecDeque::with_capacity(m), m }
    }

    fn direction(&self, g: &DVector<f64>) -> DVector<f64> {
        let mut q = g.clone();
        let mut coeffs = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * s.dot(&q);
            q.axpy(-a, y, 1.0);
            coeffs.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            q *= s.dot(y) / y.dot(y);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(coeffs.into_iter().rev()) {
            let b = rho * y.dot(&q);
            q.axpy(a - b, s, 1.0);
        }
        -q
    }
}

impl Direction for Lbfgs {
    fn compute(
        &mut self,
        _x: &DVector<f64>,
        g: &DVector<f64>,
        _eval: &Evaluator<'_>,
    ) -> Result<(DVector<f64>, f64), BudgetExhausted> {
        Ok((self.direction(g), 0.0))
    }

    fn absorb(&mut self, s: &DVector<f64>, y: &DVector<f64>) {
        let sty = s.dot(y);
        if sty <= 1e-12 * s.norm() * y.norm() {
            return;
        }
        if self.pairs.len() == self.m {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s.clone(), y.clone(), 1.0 / sty));
    }
}

/// Which correction rule a windowed run applies on top of `-H g`.
#[derive(Clone, Copy)]
enum CorrectionRule {
    VerA,
    VerB,
}

/// The windowed subspace method: direction `-H g - alpha v` with `H` the
/// window approximation and `(v, alpha)` from one of the correction rules.
/// In constrained mode the correction is dropped and iterates never leave
/// the span of the stored steps.
struct Windowed {
    state: SubspaceState,
    rule: Option<CorrectionRule>,
}

impl Windowed {
    fn new(m: usize, rule: Option<CorrectionRule>) -> Self {
        Windowed { state: SubspaceState::new(m), rule }
    }
}

impl Direction for Windowed {
    fn compute(
        &mut self,
        x: &DVector<f64>,
        g: &DVector<f64>,
        eval: &Evaluator<'_>,
    ) -> Result<(DVector<f64>, f64), BudgetExhausted> {
        if self.state.is_empty() {
            return Ok((-g, 0.0));
        }
        let hg = self
            .state
            .apply(g)
            .expect("state is non-empty and g has the problem dimension");
        let corr = match self.rule {
            None => Correction { v: DVector::zeros(x.len()), alpha: 0.0, hvp_evals: 0 },
            Some(CorrectionRule::VerA) => correction::ver_a(eval, x, g, &hg)?,
            Some(CorrectionRule::VerB) => correction::ver_b(eval, x, g, &hg)?,
        };
        let mut p = -hg;
        if corr.alpha != 0.0 {
            p.axpy(-corr.alpha, &corr.v, 1.0);
        }
        Ok((p, corr.alpha))
    }

    fn absorb(&mut self, s: &DVector<f64>, y: &DVector<f64>) {
        if let Some(pair) = rescale_pair(s, y) {
            self.state.absorb(pair);
        }
    }
}

/// Outcome of one Wolfe search: the accepted point, or the reason there is
/// none.
enum SearchOutcome {
    Accepted { tau: f64, x: DVector<f64>, f: f64, g: DVector<f64> },
    Failed,
}

/// Relative weight of the objective-noise allowance handed to the Wolfe
/// search: the absolute slack is this times the largest objective magnitude
/// seen on the trajectory. Objectives that sum hundreds of near-cancelling
/// terms wobble by a few hundred ulps of that scale near a flat minimum.
const F_NOISE_REL: f64 = 32.0 * f64::EPSILON;

fn search_along(
    eval: &Evaluator<'_>,
    x: &DVector<f64>,
    p: &DVector<f64>,
    fx: f64,
    gx: &DVector<f64>,
    f_scale: f64,
    config: &OptimizerConfig,
) -> SearchOutcome {
    let dphi0 = gx.dot(p);
    let mut last_probe: Option<(f64, f64, DVector<f64>)> = None;
    let result = strong_wolfe(
        |tau| {
            if tau == 0.0 {
                return (fx, dphi0);
            }
            let xt = x + p * tau;
            match eval.fg(&xt) {
                Ok((f, g)) => {
                    let slope = g.dot(p);
                    last_probe = Some((tau, f, g));
                    (f, slope)
                }
                Err(BudgetExhausted) => (f64::INFINITY, f64::INFINITY),
            }
        },
        1.0,
        config.c1,
        config.c2,
        F_NOISE_REL * f_scale,
        config.ls_max_evals.min(eval.remaining()),
    );
    if result.status == LineSearchStatus::Converged {
        let (tau, f, g) = last_probe.expect("a converged search accepted its most recent probe");
        debug_assert_eq!(tau, result.tau);
        let xt = x + p * tau;
        SearchOutcome::Accepted { tau, x: xt, f, g }
    } else {
        SearchOutcome::Failed
    }
}

fn drive(problem: &Problem, config: &OptimizerConfig, mut method: impl Direction) -> Trace {
    let eval = Evaluator::new(problem, config.max_nfg);
    let mut iterations = Vec::new();
    let mut x = problem.x0().clone();

    let (mut fx, mut gx) = match eval.fg(&x) {
        Ok(pair) => pair,
        Err(BudgetExhausted) => unreachable!("max_nfg is validated to be at least 1"),
    };
    let mut f_scale = fx.abs();

    let status = loop {
        let gnorm = gx.norm();
        if gnorm < config.tol {
            break RunStatus::Converged;
        }
        if eval.remaining() == 0 {
            break RunStatus::BudgetExhausted;
        }

        let k = iterations.len();
        let (p, alpha) = match method.compute(&x, &gx, &eval) {
            Ok(pair) => pair,
            Err(BudgetExhausted) => break RunStatus::BudgetExhausted,
        };

        let is_steepest = alpha == 0.0 && (&p + &gx).norm() == 0.0;
        let mut outcome = search_along(&eval, &x, &p, fx, &gx, f_scale, config);
        let mut used_alpha = alpha;
        if !matches!(outcome, SearchOutcome::Accepted { .. })
            && !is_steepest
            && eval.remaining() > 0
        {
            // One retry along steepest descent before giving up on the
            // iteration.
            let fallback = -&gx;
            outcome = search_along(&eval, &x, &fallback, fx, &gx, f_scale, config);
            used_alpha = 0.0;
        }

        match outcome {
            SearchOutcome::Accepted { tau, x: x_new, f: f_new, g: g_new } => {
                let s = &x_new - &x;
                let y = &g_new - &gx;
                method.absorb(&s, &y);
                iterations.push(IterationRecord {
                    k,
                    f: fx,
                    gnorm,
                    tau,
                    alpha: used_alpha,
                    nfg: eval.nfg(),
                });
                x = x_new;
                fx = f_new;
                gx = g_new;
                f_scale = f_scale.max(fx.abs());
            }
            SearchOutcome::Failed => {
                break if eval.remaining() == 0 {
                    RunStatus::BudgetExhausted
                } else {
                    RunStatus::LineSearchFailure
                };
            }
        }
    };

    Trace {
        iterations,
        final_f: fx,
        final_gnorm: gx.norm(),
        final_x: x,
        nfg: eval.nfg(),
        probes: eval.probes(),
        status,
    }
}

/// Runs the method selected by `config.variant` on `problem`.
pub fn run(problem: &Problem, config: &OptimizerConfig) -> Result<Trace, OptimizerError> {
    config.validate()?;
    match config.variant {
        Variant::Gd => Ok(drive(problem, config, SteepestDescent)),
        Variant::Bfgs => {
            let n = problem.dim();
            if n > DENSE_BFGS_MAX_N {
                return Err(OptimizerError::Capacity { n, max: DENSE_BFGS_MAX_N });
            }
            Ok(drive(problem, config, DenseBfgs::new(n)))
        }
        Variant::Lbfgs => Ok(drive(problem, config, Lbfgs::new(config.m))),
        Variant::FastA | Variant::FastB => {
            let rule = if config.constrained {
                None
            } else if config.variant == Variant::FastA {
                Some(CorrectionRule::VerA)
            } else {
                Some(CorrectionRule::VerB)
            };
            Ok(drive(problem, config, Windowed::new(config.m, rule)))
        }
    }
}

/// Steepest descent with the shared Wolfe search.
pub fn gd(problem: &Problem, config: &OptimizerConfig) -> Result<Trace, OptimizerError> {
    run(problem, &OptimizerConfig { variant: Variant::Gd, ..config.clone() })
}

/// Dense BFGS; errors on problems past [`DENSE_BFGS_MAX_N`].
pub fn bfgs(problem: &Problem, config: &OptimizerConfig) -> Result<Trace, OptimizerError> {
    run(problem, &OptimizerConfig { variant: Variant::Bfgs, ..config.clone() })
}

/// Limited-memory BFGS with window `config.m`.
pub fn lbfgs(problem: &Problem, config: &OptimizerConfig) -> Result<Trace, OptimizerError> {
    run(problem, &OptimizerConfig { variant: Variant::Lbfgs, ..config.clone() })
}

/// The windowed subspace method; `config.variant` must be `fast-a` or
/// `fast-b`.
pub fn fast_bfgs(problem: &Problem, config: &OptimizerConfig) -> Result<Trace, OptimizerError> {
    match config.variant {
        Variant::FastA | Variant::FastB => run(problem, config),
        other => Err(OptimizerError::Config(format!(
            "fast_bfgs expects variant fast-a or fast-b, got {other}"
        ))),
    }
}
