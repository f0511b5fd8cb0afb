//! Complex support vector regression over pilot subcarriers: RBF kernel,
//! epsilon-Huber robust cost, and the box-constrained dual program solved by
//! projected coordinate ascent.
//!
//! The dual objective over the complex weights psi (one per pilot) is
//!
//! ```text
//! max  -1/2 psi^H (G + gamma I) psi + Re(psi^H y) - eps * sum(alpha terms)
//! s.t. 0 <= alpha <= C for each of the four multiplier vectors
//! ```
//!
//! with `psi_m = (a_R,m - a*_R,m) + j (a_I,m - a*_I,m)`. Because the Gram
//! matrix is real, the problem separates into identical real and imaginary
//! subproblems; each coordinate update is an exact 1-D maximization
//! (soft-threshold by eps, clipped to the box), so the objective never
//! decreases and exact zeros fall out naturally for pilots inside the
//! insensitivity tube.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hyperparameters of the epsilon-Huber SVR and its solver.
///
/// The derived corner `e_c = epsilon + gamma * c` separates the quadratic
/// cost zone from the linear one.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrHyperparams {
    /// Insensitivity tube half-width (applied to real and imaginary parts).
    pub epsilon: f64,
    /// Quadratic-zone scale; also the ridge term on the Gram matrix.
    pub gamma: f64,
    /// Linear-zone slope and box bound on every dual multiplier.
    pub c: f64,
    /// RBF width in subcarrier-index units.
    pub kernel_sigma: f64,
    /// Convergence threshold on the KKT residual.
    pub solver_tolerance: f64,
    /// Budget of coordinate updates; 0 means automatic (10^4 per pilot).
    pub max_iterations: usize,
    pub bias_mode: BiasMode,
}

/// How the interpolation bias term is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BiasMode {
    /// The dual carries no equality constraint, so the default bias is zero.
    #[default]
    Zero,
    /// Estimate the bias after solving as the mean residual over pilots whose
    /// residuals stayed out of the linear (outlier) zone.
    MeanResidual,
}

impl Default for SvrHyperparams {
    fn default() -> Self {
        // gamma = 5e-3 keeps the ridge shrinkage at comb-edge subcarriers
        // below 1e-2 on a flat channel while still regularizing the dual.
        SvrHyperparams {
            epsilon: 1e-3,
            gamma: 5e-3,
            c: 1e2,
            kernel_sigma: 12.0,
            solver_tolerance: 1e-8,
            max_iterations: 0,
            bias_mode: BiasMode::Zero,
        }
    }
}

impl SvrHyperparams {
    /// Defaults with the kernel width tied to the comb spacing (2 * spacing).
    pub fn for_pilot_spacing(pilot_spacing: usize) -> Self {
        SvrHyperparams {
            kernel_sigma: 2.0 * pilot_spacing as f64,
            ..SvrHyperparams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.epsilon >= 0.0) {
            return fail(format!("epsilon {} must be >= 0", self.epsilon));
        }
        if !(self.gamma > 0.0) {
            return fail(format!("gamma {} must be > 0", self.gamma));
        }
        if !(self.c > 0.0) {
            return fail(format!("C {} must be > 0", self.c));
        }
        if !(self.kernel_sigma > 0.0) {
            return fail(format!("kernel_sigma {} must be > 0", self.kernel_sigma));
        }
        if !(self.solver_tolerance > 0.0) {
            return fail(format!(
                "solver_tolerance {} must be > 0",
                self.solver_tolerance
            ));
        }
        Ok(())
    }

    /// Corner between the quadratic and linear cost zones.
    pub fn e_c(&self) -> f64 {
        self.epsilon + self.gamma * self.c
    }

    fn iteration_budget(&self, n_pilots: usize) -> usize {
        if self.max_iterations == 0 {
            10_000 * n_pilots
        } else {
            self.max_iterations
        }
    }
}

/// Pilot-position observations for one OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservations {
    positions: Vec<usize>,
    values: Vec<Complex64>,
}

impl PilotObservations {
    /// Positions must be strictly increasing and non-empty.
    pub fn new(positions: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        if positions.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: positions.len(),
                right: values.len(),
            });
        }
        if positions.is_empty() {
            return Err(Error::InvalidConfig("no pilot observations".into()));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "pilot positions must be strictly increasing".into(),
            ));
        }
        Ok(PilotObservations { positions, values })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Gaussian RBF kernel on subcarrier indices: exp(-(u-v)^2 / (2 sigma^2)).
///
/// Panics if `sigma <= 0`.
pub fn rbf_kernel(u: f64, v: f64, sigma: f64) -> f64 {
    assert!(sigma > 0.0, "kernel sigma must be positive, got {sigma}");
    let d = u - v;
    (-(d * d) / (2.0 * sigma * sigma)).exp()
}

/// Symmetric positive semidefinite kernel matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.n..(u + 1) * self.n]
    }
}

/// Build the Gram matrix over pilot positions. Duplicate positions are
/// rejected: they would make the matrix singular in the noiseless limit.
pub fn gram_matrix(positions: &[usize], sigma: f64) -> Result<GramMatrix> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "kernel sigma {sigma} must be > 0"
        )));
    }
    let n = positions.len();
    for i in 0..n {
        for j in i + 1..n {
            if positions[i] == positions[j] {
                return Err(Error::DuplicatePositions);
            }
        }
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = rbf_kernel(positions[i] as f64, positions[j] as f64, sigma);
            data[i * n + j] = k;
            data[j * n + i] = k;
        }
    }
    Ok(GramMatrix { n, data })
}

/// Three-zone robust cost on one scalar residual magnitude.
fn huber_branch(e_abs: f64, params: &SvrHyperparams) -> f64 {
    let eps = params.epsilon;
    let e_c = params.e_c();
    if e_abs <= eps {
        0.0
    } else if e_abs <= e_c {
        (e_abs - eps).powi(2) / (2.0 * params.gamma)
    } else {
        params.c * (e_abs - eps) - 0.5 * params.gamma * params.c * params.c
    }
}

/// Epsilon-Huber cost of a complex residual, applied to the real and
/// imaginary parts independently and summed.
pub fn epsilon_huber_cost(residual: Complex64, params: &SvrHyperparams) -> f64 {
    huber_branch(residual.re.abs(), params) + huber_branch(residual.im.abs(), params)
}

/// Solved dual variables for one OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Complex weights, one per pilot: psi = (a_R - a*_R) + j (a_I - a*_I).
    pub psi: Vec<Complex64>,
    pub bias: Complex64,
    pub alpha_re: Vec<f64>,
    pub alpha_re_star: Vec<f64>,
    pub alpha_im: Vec<f64>,
    pub alpha_im_star: Vec<f64>,
    /// Coordinate updates performed.
    pub iterations_used: usize,
    pub final_objective: f64,
    /// Dual objective after each full sweep (non-decreasing).
    pub sweep_objectives: Vec<f64>,
}

impl DualSolution {
    /// Pilots with at least one nonzero multiplier.
    pub fn support_vector_count(&self) -> usize {
        (0..self.psi.len())
            .filter(|&m| {
                self.alpha_re[m] > 0.0
                    || self.alpha_re_star[m] > 0.0
                    || self.alpha_im[m] > 0.0
                    || self.alpha_im_star[m] > 0.0
            })
            .count()
    }
}

/// Cholesky factor of A = G + gamma I (always SPD for gamma > 0). One
/// factorization warm-starts both real subproblems of a solve.
struct CholeskyFactor {
    n: usize,
    l: Vec<f64>,
}

impl CholeskyFactor {
    fn factor(gram: &GramMatrix, gamma: f64) -> Option<Self> {
        let n = gram.n();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = gram.get(i, j) + if i == j { gamma } else { 0.0 };
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return None;
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Some(CholeskyFactor { n, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self.l[i * n + k] * y[k];
            }
            y[i] = sum / self.l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in i + 1..n {
                sum -= self.l[k * n + i] * x[k];
            }
            x[i] = sum / self.l[i * n + i];
        }
        x
    }
}

/// One of the two identical real subproblems:
/// max -1/2 x^T A x + b^T x - eps ||x||_1 over the box |x_m| <= C,
/// where A = G + gamma I.
struct Subproblem {
    x: Vec<f64>,
    /// Maintained product A x.
    ax: Vec<f64>,
    b: Vec<f64>,
}

impl Subproblem {
    fn new(b: Vec<f64>) -> Self {
        let n = b.len();
        Subproblem {
            x: vec![0.0; n],
            ax: vec![0.0; n],
            b,
        }
    }

    /// Warm start from the ridge solution with the eps subgradient folded in
    /// by sign refinement, projected into the box. Any feasible point is a
    /// valid start; coordinate ascent still owns convergence.
    fn warm_start(
        &mut self,
        chol: &CholeskyFactor,
        gram: &GramMatrix,
        gamma: f64,
        eps: f64,
        c: f64,
    ) {
        let n = self.b.len();
        let sign = |v: f64| {
            if v > 1e-12 {
                1.0
            } else if v < -1e-12 {
                -1.0
            } else {
                0.0
            }
        };
        let mut s = vec![0.0; n];
        let mut x = chol.solve(&self.b);
        if eps > 0.0 {
            for _ in 0..2 {
                for (sm, xm) in s.iter_mut().zip(&x) {
                    *sm = sign(*xm);
                }
                let shifted: Vec<f64> = self
                    .b
                    .iter()
                    .zip(&s)
                    .map(|(&bm, &sm)| bm - eps * sm)
                    .collect();
                x = chol.solve(&shifted);
            }
        }
        for xm in x.iter_mut() {
            *xm = xm.clamp(-c, c);
        }
        self.x = x;
        self.refresh(gram, gamma);
    }

    /// Exact coordinate maximization at index m. Returns true if x_m moved.
    #[inline]
    fn update(&mut self, m: usize, gram: &GramMatrix, gamma: f64, eps: f64, c: f64) -> bool {
        let a_mm = 1.0 + gamma; // unit kernel diagonal
        let g = self.b[m] - (self.ax[m] - a_mm * self.x[m]);
        let mag = (g.abs() - eps).max(0.0) / a_mm;
        let new = (mag.min(c)) * g.signum();
        let delta = new - self.x[m];
        if delta == 0.0 {
            return false;
        }
        self.x[m] = new;
        let row = gram.row(m);
        for (axj, &gmj) in self.ax.iter_mut().zip(row) {
            *axj += delta * gmj;
        }
        self.ax[m] += delta * gamma;
        true
    }

    /// Exact maximization over the currently free coordinates (bound and
    /// zero coordinates held fixed), accepted only when it does not lower
    /// the objective, so ascent stays monotone even if the active-set guess
    /// is wrong. Cuts through the slow coupled tail that plain coordinate
    /// ascent crawls along once outliers sit on the box.
    fn refine_active_set(&mut self, gram: &GramMatrix, gamma: f64, eps: f64, c: f64) {
        let n = self.b.len();
        let free: Vec<usize> = (0..n)
            .filter(|&m| self.x[m] != 0.0 && self.x[m].abs() < c)
            .collect();
        if free.len() < 2 {
            return;
        }
        let f = free.len();
        let sub = GramMatrix {
            n: f,
            data: {
                let mut d = vec![0.0; f * f];
                for (i, &mi) in free.iter().enumerate() {
                    for (j, &mj) in free.iter().enumerate() {
                        d[i * f + j] = gram.get(mi, mj);
                    }
                }
                d
            },
        };
        let Some(chol) = CholeskyFactor::factor(&sub, gamma) else {
            return;
        };
        let rhs: Vec<f64> = free
            .iter()
            .map(|&m| {
                let mut fixed = 0.0;
                for j in 0..n {
                    if self.x[j] != 0.0 && self.x[j].abs() >= c {
                        fixed += gram.get(m, j) * self.x[j];
                    }
                }
                self.b[m] - eps * self.x[m].signum() - fixed
            })
            .collect();
        let solved = chol.solve(&rhs);
        let before = self.objective(eps);
        let saved_x = self.x.clone();
        let saved_ax = self.ax.clone();
        for (i, &m) in free.iter().enumerate() {
            self.x[m] = solved[i].clamp(-c, c);
        }
        self.refresh(gram, gamma);
        if self.objective(eps) < before {
            self.x = saved_x;
            self.ax = saved_ax;
        }
    }

    /// Recompute A x from scratch to flush accumulated rounding.
    fn refresh(&mut self, gram: &GramMatrix, gamma: f64) {
        let n = self.b.len();
        for i in 0..n {
            let mut s = gamma * self.x[i];
            let row = gram.row(i);
            for (xj, &gij) in self.x.iter().zip(row) {
                s += gij * xj;
            }
            self.ax[i] = s;
        }
    }

    /// Worst KKT violation over the box, using the maintained gradient.
    fn kkt_residual(&self, eps: f64, c: f64) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.b.len() {
            let d = self.b[m] - self.ax[m];
            // alpha coordinate (x > 0 side): gradient d - eps
            // alpha* coordinate (x < 0 side): gradient -d - eps
            let (alpha, alpha_star) = (self.x[m].max(0.0), (-self.x[m]).max(0.0));
            worst = worst.max(violation(alpha, d - eps, c));
            worst = worst.max(violation(alpha_star, -d - eps, c));
        }
        worst
    }

    /// -1/2 x^T A x + b^T x - eps ||x||_1
    fn objective(&self, eps: f64) -> f64 {
        let mut quad = 0.0;
        let mut lin = 0.0;
        let mut l1 = 0.0;
        for m in 0..self.b.len() {
            quad += self.x[m] * self.ax[m];
            lin += self.x[m] * self.b[m];
            l1 += self.x[m].abs();
        }
        -0.5 * quad + lin - eps * l1
    }
}

/// KKT violation of one box-constrained multiplier given its gradient.
#[inline]
fn violation(alpha: f64, grad: f64, c: f64) -> f64 {
    if alpha <= 0.0 {
        grad.max(0.0)
    } else if alpha >= c {
        (-grad).max(0.0)
    } else {
        grad.abs()
    }
}

/// Maximize the dual by projected coordinate ascent until the KKT residual
/// drops below `solver_tolerance`.
///
/// Exceeding the iteration budget is an explicit error carrying the last
/// iterate and its residual.
pub fn solve_dual(
    gram: &GramMatrix,
    observations: &PilotObservations,
    params: &SvrHyperparams,
) -> Result<DualSolution> {
    params.validate()?;
    let n = observations.len();
    if gram.n() != n {
        return Err(Error::LengthMismatch {
            left: gram.n(),
            right: n,
        });
    }
    let b_re: Vec<f64> = observations.values().iter().map(|y| y.re).collect();
    let b_im: Vec<f64> = observations.values().iter().map(|y| y.im).collect();
    let mut re = Subproblem::new(b_re);
    let mut im = Subproblem::new(b_im);
    let (eps, gamma, c) = (params.epsilon, params.gamma, params.c);
    let budget = params.iteration_budget(n);
    if n >= 4 {
        if let Some(chol) = CholeskyFactor::factor(gram, gamma) {
            re.warm_start(&chol, gram, gamma, eps, c);
            im.warm_start(&chol, gram, gamma, eps, c);
        }
    }

    let mut iterations = 0usize;
    let mut sweep_objectives = Vec::new();
    let mut sweeps = 0usize;
    let residual = loop {
        for m in 0..n {
            re.update(m, gram, gamma, eps, c);
            im.update(m, gram, gamma, eps, c);
            iterations += 2;
        }
        sweeps += 1;
        if n >= 4 && (sweeps <= 2 || sweeps.is_multiple_of(8)) {
            re.refine_active_set(gram, gamma, eps, c);
            im.refine_active_set(gram, gamma, eps, c);
        }
        if sweeps.is_multiple_of(64) {
            re.refresh(gram, gamma);
            im.refresh(gram, gamma);
        }
        sweep_objectives.push(re.objective(eps) + im.objective(eps));
        let residual = re.kkt_residual(eps, c).max(im.kkt_residual(eps, c));
        if residual <= params.solver_tolerance {
            break residual;
        }
        if iterations >= budget {
            let last = build_solution(re, im, iterations, sweep_objectives, Complex64::default());
            return Err(Error::SolverDidNotConverge {
                iterations,
                kkt_residual: residual,
                last: Box::new(last),
            });
        }
    };
    debug_assert!(residual <= params.solver_tolerance);

    let mut solution = build_solution(re, im, iterations, sweep_objectives, Complex64::default());
    if params.bias_mode == BiasMode::MeanResidual {
        solution.bias = mean_residual_bias(gram, observations, &solution.psi, params);
    }
    Ok(solution)
}

fn build_solution(
    re: Subproblem,
    im: Subproblem,
    iterations: usize,
    sweep_objectives: Vec<f64>,
    bias: Complex64,
) -> DualSolution {
    let n = re.x.len();
    let psi: Vec<Complex64> = (0..n).map(|m| Complex64::new(re.x[m], im.x[m])).collect();
    DualSolution {
        psi,
        bias,
        alpha_re: re.x.iter().map(|&x| x.max(0.0)).collect(),
        alpha_re_star: re.x.iter().map(|&x| (-x).max(0.0)).collect(),
        alpha_im: im.x.iter().map(|&x| x.max(0.0)).collect(),
        alpha_im_star: im.x.iter().map(|&x| (-x).max(0.0)).collect(),
        iterations_used: iterations,
        final_objective: sweep_objectives.last().copied().unwrap_or(0.0),
        sweep_objectives,
    }
}

/// Mean residual over pilots whose residuals stayed inside the quadratic
/// zone on both axes (outlier pilots are excluded from the bias estimate).
fn mean_residual_bias(
    gram: &GramMatrix,
    observations: &PilotObservations,
    psi: &[Complex64],
    params: &SvrHyperparams,
) -> Complex64 {
    let e_c = params.e_c();
    let mut sum = Complex64::default();
    let mut count = 0usize;
    for m in 0..observations.len() {
        let mut pred = Complex64::default();
        for (j, &w) in psi.iter().enumerate() {
            pred += w * gram.get(m, j);
        }
        let e = observations.values()[m] - pred;
        if e.re.abs() <= e_c && e.im.abs() <= e_c {
            sum += e;
            count += 1;
        }
    }
    if count == 0 {
        Complex64::default()
    } else {
        sum / count as f64
    }
}

/// Kernel interpolation at an arbitrary subcarrier index:
/// H(k) = sum_m psi_m K(P_m, k) + b.
pub fn predict(solution: &DualSolution, positions: &[usize], query: f64, sigma: f64) -> Complex64 {
    debug_assert_eq!(solution.psi.len(), positions.len());
    let mut acc = solution.bias;
    for (&p, &w) in positions.iter().zip(&solution.psi) {
        acc += w * rbf_kernel(p as f64, query, sigma);
    }
    acc
}

/// Dual objective of Eq-form max problem at the given weights, assuming the
/// minimal multiplier split (complementary pairs), so the eps term equals
/// eps * sum(|Re psi| + |Im psi|).
pub fn dual_objective(
    gram: &GramMatrix,
    observations: &PilotObservations,
    params: &SvrHyperparams,
    psi: &[Complex64],
) -> f64 {
    let n = observations.len();
    let mut quad = 0.0;
    let mut lin = 0.0;
    let mut l1 = 0.0;
    for m in 0..n {
        let mut a_psi = psi[m] * params.gamma;
        for j in 0..n {
            a_psi += psi[j] * gram.get(m, j);
        }
        quad += (psi[m].conj() * a_psi).re;
        lin += (psi[m].conj() * observations.values()[m]).re;
        l1 += psi[m].re.abs() + psi[m].im.abs();
    }
    -0.5 * quad + lin - params.epsilon * l1
}

/// Primal regularized cost at the given weights with zero bias:
/// 1/2 ||w||^2 + sum_m L_eps(e_m), where ||w||^2 = psi^H G psi and the
/// residuals are e_m = y_m - (G psi)_m.
pub fn primal_objective(
    gram: &GramMatrix,
    observations: &PilotObservations,
    params: &SvrHyperparams,
    psi: &[Complex64],
) -> f64 {
    let n = observations.len();
    let mut norm = 0.0;
    let mut cost = 0.0;
    for m in 0..n {
        let mut g_psi = Complex64::default();
        for j in 0..n {
            g_psi += psi[j] * gram.get(m, j);
        }
        norm += (psi[m].conj() * g_psi).re;
        cost += epsilon_huber_cost(observations.values()[m] - g_psi, params);
    }
    0.5 * norm + cost
}

/// Leave-every-`holdout_stride`-th-pilot-out cross validation over candidate
/// hyperparameter sets. Returns the index of the best candidate and its mean
/// squared held-out error.
pub fn grid_search_hyperparams(
    observations: &PilotObservations,
    candidates: &[SvrHyperparams],
    holdout_stride: usize,
) -> Result<(usize, f64)> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no hyperparameter candidates".into()));
    }
    if holdout_stride < 2 {
        return Err(Error::InvalidConfig(
            "holdout_stride must be at least 2".into(),
        ));
    }
    let mut train_pos = Vec::new();
    let mut train_val = Vec::new();
    let mut held = Vec::new();
    for m in 0..observations.len() {
        if m % holdout_stride == holdout_stride / 2 {
            held.push((observations.positions()[m], observations.values()[m]));
        } else {
            train_pos.push(observations.positions()[m]);
            train_val.push(observations.values()[m]);
        }
    }
    if held.is_empty() || train_pos.len() < 2 {
        return Err(Error::InvalidConfig(
            "not enough pilots to hold out a validation subset".into(),
        ));
    }
    let train = PilotObservations::new(train_pos, train_val)?;
    let mut best = (0usize, f64::INFINITY);
    for (i, params) in candidates.iter().enumerate() {
        let gram = gram_matrix(train.positions(), params.kernel_sigma)?;
        let solution = solve_dual(&gram, &train, params)?;
        let mse = held
            .iter()
            .map(|&(pos, y)| {
                (predict(
                    &solution,
                    train.positions(),
                    pos as f64,
                    params.kernel_sigma,
                ) - y)
                    .norm_sqr()
            })
            .sum::<f64>()
            / held.len() as f64;
        if mse < best.1 {
            best = (i, mse);
        }
    }
    Ok(best)
}
