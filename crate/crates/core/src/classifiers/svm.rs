//! Soft-margin kernel SVM trained by sequential minimal optimization.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Label, PairFeatureRow};
use crate::scalar::Real;

use super::{sigmoid, signed_labels, FeatureScaler, ModelKind, ModelParams, TrainedModel};

/// Kernel menu: inhomogeneous polynomials of degree 2 and 3, and the
/// Gaussian RBF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvmKernel {
    Quadratic,
    Cubic,
    Rbf,
}

impl SvmKernel {
    pub fn model_kind(self) -> ModelKind {
        match self {
            SvmKernel::Quadratic => ModelKind::SvmQuadratic,
            SvmKernel::Cubic => ModelKind::SvmCubic,
            SvmKernel::Rbf => ModelKind::SvmRbf,
        }
    }
}

/// Solver settings. `gamma` only matters for the RBF kernel and defaults to
/// `1 / num_features`.
#[derive(Debug, Clone, Copy)]
pub struct SvmConfig<T> {
    pub c: T,
    pub gamma: Option<T>,
    /// KKT tolerance at convergence.
    pub tolerance: T,
    /// Cap on optimization sweeps before giving up.
    pub max_sweeps: usize,
    pub seed: u64,
}

impl<T: Real> Default for SvmConfig<T> {
    fn default() -> Self {
        Self {
            c: T::one(),
            gamma: None,
            tolerance: T::of(1e-3),
            max_sweeps: 2000,
            seed: 0,
        }
    }
}

/// Trained SVM parameters: the support vectors with their signed dual
/// coefficients `alpha_i * y_i` and the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams<T> {
    pub kernel: SvmKernel,
    pub gamma: T,
    pub c: T,
    pub bias: T,
    pub support_vectors: Vec<Vec<T>>,
    pub coefficients: Vec<T>,
}

pub fn kernel_eval<T: Real>(kernel: SvmKernel, gamma: T, x: &[T], z: &[T]) -> T {
    match kernel {
        SvmKernel::Quadratic | SvmKernel::Cubic => {
            let dot = x
                .iter()
                .zip(z)
                .map(|(&a, &b)| a * b)
                .fold(T::zero(), |acc, v| acc + v);
            let base = dot + T::one();
            if kernel == SvmKernel::Quadratic {
                base * base
            } else {
                base * base * base
            }
        }
        SvmKernel::Rbf => {
            let sq = x
                .iter()
                .zip(z)
                .map(|(&a, &b)| (a - b) * (a - b))
                .fold(T::zero(), |acc, v| acc + v);
            (-gamma * sq).exp()
        }
    }
}

/// Raw SMO output over the (scaled) training set.
#[derive(Debug, Clone)]
pub struct SmoSolution<T> {
    pub alphas: Vec<T>,
    pub bias: T,
    pub sweeps: usize,
}

struct Smo<'a, T> {
    xs: &'a [Vec<T>],
    ys: &'a [T],
    kernel: SvmKernel,
    gamma: T,
    c: T,
    tol: T,
    alphas: Vec<T>,
    errors: Vec<T>,
    bias: T,
    rng: ChaCha8Rng,
}

impl<'a, T: Real> Smo<'a, T> {
    fn new(xs: &'a [Vec<T>], ys: &'a [T], kernel: SvmKernel, gamma: T, c: T, tol: T, seed: u64) -> Self {
        let n = xs.len();
        Self {
            xs,
            ys,
            kernel,
            gamma,
            c,
            tol,
            alphas: vec![T::zero(); n],
            // With all alphas at zero the decision value is zero everywhere,
            // so the initial error is just -y.
            errors: ys.iter().map(|&y| -y).collect(),
            bias: T::zero(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn kernel_row(&self, i: usize) -> Vec<T> {
        (0..self.xs.len())
            .map(|j| kernel_eval(self.kernel, self.gamma, &self.xs[i], &self.xs[j]))
            .collect()
    }

    fn non_bound(&self, i: usize) -> bool {
        self.alphas[i] > T::zero() && self.alphas[i] < self.c
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (self.alphas[i1], self.alphas[i2]);
        let (y1, y2) = (self.ys[i1], self.ys[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;

        let (lo, hi) = if s < T::zero() {
            let d = a2_old - a1_old;
            (d.max(T::zero()), (self.c + d).min(self.c))
        } else {
            let sum = a1_old + a2_old;
            ((sum - self.c).max(T::zero()), sum.min(self.c))
        };
        if lo >= hi {
            return false;
        }

        let k1 = self.kernel_row(i1);
        let k2 = self.kernel_row(i2);
        let eta = k1[i1] + k2[i2] - T::of(2.0) * k1[i2];
        if eta <= T::zero() {
            // Degenerate direction (coincident points under a PD kernel);
            // skip rather than walk the objective boundary.
            return false;
        }

        let mut a2 = a2_old + y2 * (e1 - e2) / eta;
        a2 = a2.max(lo).min(hi);
        // Snap to the box edges; bound dust otherwise lingers as phantom
        // support vectors that examine() keeps flagging but no step can clean.
        let snap = T::of(1e-10) * self.c;
        if a2 < snap {
            a2 = T::zero();
        } else if a2 > self.c - snap {
            a2 = self.c;
        }
        let eps = T::of(1e-8);
        if (a2 - a2_old).abs() < eps * (a2 + a2_old + eps) {
            return false;
        }
        let mut a1 = a1_old + s * (a2_old - a2);
        if a1 < snap {
            a1 = T::zero();
        } else if a1 > self.c - snap {
            a1 = self.c;
        }

        let b1 = self.bias - e1 - y1 * (a1 - a1_old) * k1[i1] - y2 * (a2 - a2_old) * k1[i2];
        let b2 = self.bias - e2 - y1 * (a1 - a1_old) * k1[i2] - y2 * (a2 - a2_old) * k2[i2];
        let new_bias = if a1 > T::zero() && a1 < self.c {
            b1
        } else if a2 > T::zero() && a2 < self.c {
            b2
        } else {
            (b1 + b2) / T::of(2.0)
        };

        let db = new_bias - self.bias;
        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        for j in 0..self.xs.len() {
            self.errors[j] += d1 * k1[j] + d2 * k2[j] + db;
        }
        self.alphas[i1] = a1;
        self.alphas[i2] = a2;
        self.bias = new_bias;
        self.errors[i1] = self.decision_exact(i1) - y1;
        self.errors[i2] = self.decision_exact(i2) - y2;
        true
    }

    fn decision_exact(&self, i: usize) -> T {
        let mut acc = self.bias;
        for j in 0..self.xs.len() {
            if self.alphas[j] > T::zero() {
                acc += self.alphas[j]
                    * self.ys[j]
                    * kernel_eval(self.kernel, self.gamma, &self.xs[j], &self.xs[i]);
            }
        }
        acc
    }

    /// Replaces the incremental error cache with exact values; drift in the
    /// cache must not be allowed to fake convergence.
    fn recompute_errors(&mut self) {
        for i in 0..self.xs.len() {
            self.errors[i] = self.decision_exact(i) - self.ys[i];
        }
    }

    fn examine(&mut self, i2: usize) -> bool {
        let y2 = self.ys[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        let violates = (r2 < -self.tol && self.alphas[i2] < self.c)
            || (r2 > self.tol && self.alphas[i2] > T::zero());
        if !violates {
            return false;
        }
        let n = self.xs.len();

        // Second-choice heuristic: maximize |E1 - E2| over non-bound points.
        let mut best: Option<(T, usize)> = None;
        for i in 0..n {
            if self.non_bound(i) {
                let gap = (self.errors[i] - e2).abs();
                if best.map(|(g, _)| gap > g).unwrap_or(true) {
                    best = Some((gap, i));
                }
            }
        }
        if let Some((_, i1)) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        // Fall back to scanning non-bound points, then everything, from a
        // seeded random start.
        let start = self.rng.random_range(0..n);
        for k in 0..n {
            let i1 = (start + k) % n;
            if self.non_bound(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        let start = self.rng.random_range(0..n);
        for k in 0..n {
            let i1 = (start + k) % n;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn solve(mut self, max_sweeps: usize) -> Result<SmoSolution<T>> {
        let n = self.xs.len();
        let mut examine_all = true;
        let mut sweeps = 0usize;
        loop {
            sweeps += 1;
            if sweeps > max_sweeps {
                let worst = self.worst_violation();
                return Err(Error::NonConvergence(format!(
                    "SMO exceeded {max_sweeps} sweeps (n={n}, worst KKT violation {worst})"
                )));
            }
            let mut changed = 0usize;
            if examine_all {
                for i in 0..n {
                    changed += usize::from(self.examine(i));
                }
            } else {
                for i in 0..n {
                    if self.non_bound(i) {
                        changed += usize::from(self.examine(i));
                    }
                }
            }
            if examine_all {
                if changed == 0 {
                    self.recompute_errors();
                    if self.worst_violation() <= self.tol {
                        break;
                    }
                    // The stale cache faked convergence; continue with exact
                    // errors in place.
                    continue;
                }
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
        }
        Ok(SmoSolution {
            alphas: self.alphas,
            bias: self.bias,
            sweeps,
        })
    }

    fn worst_violation(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.xs.len() {
            let r = self.errors[i] * self.ys[i];
            let v = if self.alphas[i] < self.c && r < T::zero() {
                -r
            } else if self.alphas[i] > T::zero() && r > T::zero() {
                r
            } else {
                T::zero()
            };
            worst = worst.max(v);
        }
        worst
    }
}

/// Solves the dual on pre-scaled inputs. Exposed so tests can inspect the
/// multipliers directly.
pub fn solve_dual<T: Real>(
    xs: &[Vec<T>],
    ys: &[T],
    kernel: SvmKernel,
    cfg: &SvmConfig<T>,
) -> Result<SmoSolution<T>> {
    if xs.is_empty() {
        return Err(Error::InsufficientData {
            found: 0,
            required: 2,
        });
    }
    if cfg.c <= T::zero() {
        return Err(Error::InvalidConfig("C must be positive".into()));
    }
    let gamma = effective_gamma(kernel, cfg, xs[0].len())?;
    let pos = ys.iter().filter(|&&y| y > T::zero()).count();
    if pos == 0 || pos == ys.len() {
        return Err(Error::SingleClass(
            "SVM training needs both classes".into(),
        ));
    }
    Smo::new(xs, ys, kernel, gamma, cfg.c, cfg.tolerance, cfg.seed).solve(cfg.max_sweeps)
}

fn effective_gamma<T: Real>(kernel: SvmKernel, cfg: &SvmConfig<T>, n_features: usize) -> Result<T> {
    match (kernel, cfg.gamma) {
        (SvmKernel::Rbf, Some(g)) if g <= T::zero() => {
            Err(Error::InvalidConfig("gamma must be positive".into()))
        }
        (_, Some(g)) => Ok(g),
        (_, None) => Ok(T::one() / T::from_usize(n_features).expect("feature count")),
    }
}

/// Decision value of a fitted SVM on a scaled input.
pub fn decision<T: Real>(params: &SvmParams<T>, x: &[T]) -> T {
    let mut acc = params.bias;
    for (sv, &coef) in params.support_vectors.iter().zip(&params.coefficients) {
        acc += coef * kernel_eval(params.kernel, params.gamma, sv, x);
    }
    acc
}

pub fn predict<T: Real>(params: &SvmParams<T>, x: &[T]) -> Result<(Label, T)> {
    if params
        .support_vectors
        .first()
        .map(|sv| sv.len() != x.len())
        .unwrap_or(false)
    {
        return Err(Error::ShapeMismatch {
            expected: params.support_vectors[0].len(),
            got: x.len(),
        });
    }
    let d = decision(params, x);
    Ok((Label::from_bool(d >= T::zero()), sigmoid(d)))
}

/// Trains a kernel SVM on labeled rows.
pub fn train_svm<T: Real>(
    rows: &[PairFeatureRow<T>],
    kernel: SvmKernel,
    cfg: &SvmConfig<T>,
) -> Result<TrainedModel<T>> {
    let scaler = FeatureScaler::fit(rows)?;
    let xs = scaler.transform_rows(rows);
    let ys = signed_labels(rows)?;
    let gamma = effective_gamma(kernel, cfg, xs[0].len())?;
    let solution = solve_dual(&xs, &ys, kernel, cfg)?;

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (i, &alpha) in solution.alphas.iter().enumerate() {
        if alpha > T::zero() {
            support_vectors.push(xs[i].clone());
            coefficients.push(alpha * ys[i]);
        }
    }
    let params = SvmParams {
        kernel,
        gamma,
        c: cfg.c,
        bias: solution.bias,
        support_vectors,
        coefficients,
    };
    Ok(TrainedModel::assemble(
        kernel.model_kind(),
        scaler,
        ModelParams::Svm(params),
        Vec::new(),
    ))
}

/// Largest KKT violation of a dual solution, for convergence checks.
pub fn max_kkt_violation<T: Real>(
    solution: &SmoSolution<T>,
    xs: &[Vec<T>],
    ys: &[T],
    kernel: SvmKernel,
    gamma: T,
    c: T,
) -> T {
    let mut worst = T::zero();
    for i in 0..xs.len() {
        let mut f = solution.bias;
        for j in 0..xs.len() {
            if solution.alphas[j] > T::zero() {
                f += solution.alphas[j] * ys[j] * kernel_eval(kernel, gamma, &xs[j], &xs[i]);
            }
        }
        let margin = ys[i] * f;
        let a = solution.alphas[i];
        let v = if a <= T::zero() {
            (T::one() - margin).max(T::zero())
        } else if a >= c {
            (margin - T::one()).max(T::zero())
        } else {
            (margin - T::one()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Dual objective `sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`.
pub fn dual_objective<T: Real>(
    alphas: &[T],
    xs: &[Vec<T>],
    ys: &[T],
    kernel: SvmKernel,
    gamma: T,
) -> T {
    let obj = alphas.iter().copied().fold(T::zero(), |acc, a| acc + a);
    let mut quad = T::zero();
    for i in 0..xs.len() {
        if alphas[i] == T::zero() {
            continue;
        }
        for j in 0..xs.len() {
            if alphas[j] == T::zero() {
                continue;
            }
            quad += alphas[i] * alphas[j] * ys[i] * ys[j]
                * kernel_eval(kernel, gamma, &xs[i], &xs[j]);
        }
    }
    obj - quad / T::of(2.0)
}
