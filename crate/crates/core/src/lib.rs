//! Limited-memory quasi-Newton optimization on a dynamic subspace.
//!
//! The central idea: instead of storing a dense inverse-Hessian approximation,
//! keep the last `m` rescaled steps as columns of a tall matrix `S` and a small
//! `m x m` core `L`, so that the implicit approximation is `H = S * L * S^T`.
//! Updating `L` costs `O(m^2)` plus a least-squares solve against the step
//! window, and applying `H` to a gradient costs `O(m n)`. A small corrective
//! direction built from finite-difference Hessian-vector products lets iterates
//! leave the current subspace, which is what makes the method converge on
//! general smooth problems rather than only inside the initial span.
//!
//! The crate ships:
//!
//! * [`subspace`]: the rescaled-pair window, the core-matrix recursions and
//!   the matrix-free application of `H`;
//! * [`correction`]: the two corrective-direction rules (`ver-A`, `ver-B`)
//!   and the finite-difference Hessian-vector product they share;
//! * [`optimizers`]: drivers for gradient descent, dense BFGS, two-loop
//!   L-BFGS and the subspace method itself, all under one strong-Wolfe
//!   line search and one evaluation budget;
//! * [`problems`]: a registry of classic unconstrained test problems
//!   (ARWHEAD, SROSENBR, ...) with analytic gradients;
//! * [`oracle`]: a verification harness that replays the subspace method
//!   against an equivalent full BFGS run in reduced coordinates;
//! * [`bench`]: benchmark-suite plumbing used by the `subspace-bench` CLI.
//!
//! ```
//! use fastbfgs::optimizers::{run, OptimizerConfig, Variant};
//! use fastbfgs::problems::get_problem;
//!
//! let problem = get_problem("SROSENBR", 100).unwrap();
//! let config = OptimizerConfig { variant: Variant::FastB, ..Default::default() };
//! let trace = run(&problem, &config).unwrap();
//! println!("{:?} after {} evaluations", trace.status, trace.nfg);
//! ```

pub mod bench;
pub mod correction;
pub mod linesearch;
pub mod optimizers;
pub mod oracle;
pub mod problems;
pub mod subspace;
