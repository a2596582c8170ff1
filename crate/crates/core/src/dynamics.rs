//! Mean-field time evolution `d rho/dt = L(alpha) rho` with
//! `alpha = Tr[a rho]` re-evaluated at every right-hand-side call, which
//! makes the flow nonlinear in `rho`.
//!
//! Three integrators share one driver: the adaptive Dormand-Prince 5(4)
//! pair, fixed-step classical RK4 (lockstep runs for symmetry checks), and
//! the L-stable two-stage Rosenbrock W-method ROS2 for long stiff runs.
//! Records between accepted steps are taken from the cubic Hermite
//! interpolant, so step sizes are never clipped to the record grid.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fock::FockDim;
use crate::linalg::eigen::hermitian_eigenvalues;
use crate::linalg::{BandLu, CMatrix, SparseMatrix};
use crate::lindblad::{DensityMatrix, Generator, ModelParams};
use crate::observables::{occupation, purity};
use crate::steadystate::trace_a;

/// Records at which `min eig(rho)` may dip before the run is rejected.
pub const POSITIVITY_FLOOR: f64 = -1e-4;
/// Trace drift above which the state is renormalized after a step.
pub const TRACE_RENORM_TOL: f64 = 1e-12;
/// Consecutive quiet records that end a run early.
pub const EARLY_STOP_RECORDS: usize = 10;
pub const DEFAULT_ENDPOINT_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    Dopri5,
    /// Classical RK4 with a fixed step; the last step is shortened to land on `t_max`.
    Rk4 { dt: f64 },
    Rosenbrock2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_max: f64,
    pub record_interval: f64,
    /// Early stop once `||d rho/dt||_max` stays below this for
    /// `EARLY_STOP_RECORDS` consecutive records.
    pub fixed_point_tol: f64,
    pub method: Integrator,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 0.1,
            t_max: 200.0,
            record_interval: 0.1,
            fixed_point_tol: 1e-8,
            method: Integrator::Dopri5,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !(pos(self.rel_tol) && pos(self.abs_tol) && pos(self.fixed_point_tol)) {
            return Err(Error::InvalidParams("integrator tolerances must be positive".into()));
        }
        if !(pos(self.max_step) && pos(self.t_max) && pos(self.record_interval)) {
            return Err(Error::InvalidParams("max_step, t_max and record_interval must be positive".into()));
        }
        if let Integrator::Rk4 { dt } = self.method {
            if !pos(dt) {
                return Err(Error::InvalidParams("RK4 step must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub alphas: Vec<C64>,
    pub occupations: Vec<f64>,
    pub purities: Vec<f64>,
    /// State at the last record.
    pub final_rho: DensityMatrix,
    pub early_stopped: bool,
    /// `||d rho/dt||_max` at the end of the step that produced the last record.
    pub final_derivative: f64,
    pub steps: usize,
    pub rejected: usize,
    /// Largest `|Tr rho - 1|` seen after a step, before renormalization.
    pub max_trace_drift: f64,
    pub renormalizations: usize,
    /// Largest `||rho - rho^†||_max` over the records.
    pub max_hermiticity_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Symmetric,
    Broken,
    Undecided,
}

pub fn classify_endpoint(traj: &Trajectory, threshold: f64) -> Endpoint {
    if !traj.early_stopped {
        return Endpoint::Undecided;
    }
    match traj.alphas.last() {
        Some(a) if a.norm() < threshold => Endpoint::Symmetric,
        Some(_) => Endpoint::Broken,
        None => Endpoint::Undecided,
    }
}

struct Rhs<'a> {
    params: &'a ModelParams,
    dim: FockDim,
}

impl Rhs<'_> {
    fn eval(&self, y: &[C64], out: &mut [C64]) {
        let alpha = trace_a(self.dim.n(), y);
        Generator::new(self.params, alpha, self.dim).apply_into(y, out);
    }
}

fn axpy_into(out: &mut [C64], y: &[C64], terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = y[i];
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = acc;
    }
}

fn error_norm(err: &[C64], y0: &[C64], y1: &[C64], opts: &IntegratorOptions) -> f64 {
    let mut s = 0.0;
    for ((e, a), b) in err.iter().zip(y0).zip(y1) {
        let sc = opts.abs_tol + opts.rel_tol * a.norm_sqr().max(b.norm_sqr()).sqrt();
        s += e.norm_sqr() / (sc * sc);
    }
    (s / err.len() as f64).sqrt()
}

/// One attempted step: new state, its derivative, and the scaled error
/// (zero for fixed-step methods).
struct StepOut {
    y: Vec<C64>,
    f: Vec<C64>,
    err: f64,
}

trait Stepper {
    /// Exponent `q` of the controller `h_new = h * (1/err)^(1/q)`.
    fn order(&self) -> f64;
    fn step(&mut self, rhs: &Rhs, y: &[C64], f: &[C64], h: f64, opts: &IntegratorOptions) -> Result<StepOut>;
}

struct Dopri5 {
    k: [Vec<C64>; 6],
    tmp: Vec<C64>,
}

impl Dopri5 {
    fn new(len: usize) -> Self {
        Self { k: core::array::from_fn(|_| vec![C64::zero(); len]), tmp: vec![C64::zero(); len] }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus the embedded fourth-order ones
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Stepper for Dopri5 {
    fn order(&self) -> f64 {
        5.0
    }

    fn step(&mut self, rhs: &Rhs, y: &[C64], f: &[C64], h: f64, opts: &IntegratorOptions) -> Result<StepOut> {
        let [k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        axpy_into(tmp, y, &[(h * A21, f)]);
        rhs.eval(tmp, k2);
        axpy_into(tmp, y, &[(h * A31, f), (h * A32, k2)]);
        rhs.eval(tmp, k3);
        axpy_into(tmp, y, &[(h * A41, f), (h * A42, k2), (h * A43, k3)]);
        rhs.eval(tmp, k4);
        axpy_into(tmp, y, &[(h * A51, f), (h * A52, k2), (h * A53, k3), (h * A54, k4)]);
        rhs.eval(tmp, k5);
        axpy_into(tmp, y, &[(h * A61, f), (h * A62, k2), (h * A63, k3), (h * A64, k4), (h * A65, k5)]);
        rhs.eval(tmp, k6);
        let mut y1 = vec![C64::zero(); y.len()];
        axpy_into(&mut y1, y, &[(h * B1, f), (h * B3, k3), (h * B4, k4), (h * B5, k5), (h * B6, k6)]);
        rhs.eval(&y1, k7);
        let mut err = vec![C64::zero(); y.len()];
        for i in 0..y.len() {
            err[i] = (f[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let e = error_norm(&err, y, &y1, opts);
        Ok(StepOut { f: k7.clone(), y: y1, err: e })
    }
}

struct Rk4 {
    k: [Vec<C64>; 3],
    tmp: Vec<C64>,
}

impl Stepper for Rk4 {
    fn order(&self) -> f64 {
        4.0
    }

    fn step(&mut self, rhs: &Rhs, y: &[C64], f: &[C64], h: f64, _: &IntegratorOptions) -> Result<StepOut> {
        let [k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        axpy_into(tmp, y, &[(0.5 * h, f)]);
        rhs.eval(tmp, k2);
        axpy_into(tmp, y, &[(0.5 * h, k2)]);
        rhs.eval(tmp, k3);
        axpy_into(tmp, y, &[(h, k3)]);
        rhs.eval(tmp, k4);
        let mut y1 = vec![C64::zero(); y.len()];
        axpy_into(&mut y1, y, &[(h / 6.0, f), (h / 3.0, k2), (h / 3.0, k3), (h / 6.0, k4)]);
        let mut f1 = vec![C64::zero(); y.len()];
        rhs.eval(&y1, &mut f1);
        Ok(StepOut { y: y1, f: f1, err: 0.0 })
    }
}

/// ROS2 with `gamma = 1 + 1/sqrt(2)`:
///
/// ```text
/// W k1 = f(y)
/// W k2 = f(y + h k1) - 2 k1
/// y+   = y + h (3 k1 + k2) / 2,     W = I - gamma h L(alpha)
/// ```
///
/// `W` uses the linear part `L(alpha)` only; ROS2 keeps order two for any
/// `W`, so the rank-2 dependence of `alpha` on `rho` is left out, and the
/// factorization is reused while `h` stays put. The embedded first-order
/// solution is `y + h k1`.
struct Rosenbrock2 {
    gamma: f64,
    lu: Option<(f64, BandLu)>,
    refactor_alpha: C64,
}

impl Rosenbrock2 {
    fn new() -> Self {
        Self { gamma: 1.0 + core::f64::consts::FRAC_1_SQRT_2, lu: None, refactor_alpha: C64::zero() }
    }

    fn factor(&mut self, rhs: &Rhs, y: &[C64], h: f64) -> Result<()> {
        let alpha = trace_a(rhs.dim.n(), y);
        if let Some((hf, _)) = &self.lu {
            // the alpha dependence is a weak drive term; refresh only on large drift
            if *hf == h && (alpha - self.refactor_alpha).norm() < 0.1 * (1.0 + alpha.norm()) {
                return Ok(());
            }
        }
        let l = Generator::new(rhs.params, alpha, rhs.dim).to_sparse();
        let s = -self.gamma * h;
        let trip: Vec<(usize, usize, C64)> = l.entries().map(|(r, c, v)| (r, c, v * s)).collect();
        let w = SparseMatrix::from_triplets(l.rows(), l.cols(), trip).shifted(C64::new(1.0, 0.0));
        self.lu = Some((h, BandLu::factor(&w)?));
        self.refactor_alpha = alpha;
        Ok(())
    }
}

impl Stepper for Rosenbrock2 {
    fn order(&self) -> f64 {
        2.0
    }

    fn step(&mut self, rhs: &Rhs, y: &[C64], f: &[C64], h: f64, opts: &IntegratorOptions) -> Result<StepOut> {
        self.factor(rhs, y, h)?;
        let lu = &self.lu.as_ref().expect("factored above").1;
        let mut k1 = f.to_vec();
        lu.solve_in_place(&mut k1);
        let mut tmp = vec![C64::zero(); y.len()];
        axpy_into(&mut tmp, y, &[(h, &k1)]);
        let mut k2 = vec![C64::zero(); y.len()];
        rhs.eval(&tmp, &mut k2);
        k2.iter_mut().zip(&k1).for_each(|(a, b)| *a -= b * 2.0);
        lu.solve_in_place(&mut k2);
        let mut y1 = vec![C64::zero(); y.len()];
        axpy_into(&mut y1, y, &[(1.5 * h, &k1), (0.5 * h, &k2)]);
        let err: Vec<C64> = k1.iter().zip(&k2).map(|(a, b)| (a + b) * (0.5 * h)).collect();
        let e = error_norm(&err, y, &y1, opts);
        let mut f1 = vec![C64::zero(); y.len()];
        rhs.eval(&y1, &mut f1);
        Ok(StepOut { y: y1, f: f1, err: e })
    }
}

fn hermite(y0: &[C64], f0: &[C64], y1: &[C64], f1: &[C64], h: f64, s: f64) -> Vec<C64> {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = (s3 - 2.0 * s2 + s) * h;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = (s3 - s2) * h;
    (0..y0.len()).map(|i| y0[i] * h00 + f0[i] * h10 + y1[i] * h01 + f1[i] * h11).collect()
}

fn max_abs(x: &[C64]) -> f64 {
    x.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

struct Recorder<'a> {
    rhs: &'a Rhs<'a>,
    traj_times: Vec<f64>,
    alphas: Vec<C64>,
    occupations: Vec<f64>,
    purities: Vec<f64>,
    last: Vec<C64>,
    last_derivative: f64,
    quiet: usize,
    max_herm: f64,
}

impl Recorder<'_> {
    /// Stores one record; returns true once the early-stop criterion holds.
    /// `derivative` is taken at the end of the accepted step, not at the
    /// interpolated record, whose interpolation error `L` would amplify.
    fn record(&mut self, t: f64, y: Vec<C64>, derivative: f64, opts: &IntegratorOptions) -> Result<bool> {
        let n = self.rhs.dim.n();
        let m = CMatrix::from_row_major(n, n, y);
        self.max_herm = self.max_herm.max(m.hermiticity_defect());
        let min_eig = hermitian_eigenvalues(&m)?.first().copied().unwrap_or(0.0);
        if min_eig < POSITIVITY_FLOOR {
            return Err(Error::PositivityLost { t, min_eigenvalue: min_eig });
        }
        let rho = DensityMatrix::from_trusted(m.hermitian_part());
        self.traj_times.push(t);
        self.alphas.push(trace_a(n, m.as_slice()));
        self.occupations.push(occupation(&rho));
        self.purities.push(purity(&rho));
        self.last_derivative = derivative;
        self.last = m.into_vec();
        if self.last_derivative < opts.fixed_point_tol {
            self.quiet += 1;
        } else {
            self.quiet = 0;
        }
        Ok(self.quiet >= EARLY_STOP_RECORDS)
    }
}

/// Integrates from `rho0` at `t = 0` up to `opts.t_max` or an early stop.
pub fn evolve(params: &ModelParams, rho0: &DensityMatrix, opts: &IntegratorOptions, dim: FockDim) -> Result<Trajectory> {
    params.validate()?;
    opts.validate()?;
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim.n(), found: rho0.dim().n() });
    }
    let len = dim.liouville();
    let rhs = Rhs { params, dim };
    let mut stepper: alloc::boxed::Box<dyn Stepper> = match opts.method {
        Integrator::Dopri5 => alloc::boxed::Box::new(Dopri5::new(len)),
        Integrator::Rk4 { .. } => alloc::boxed::Box::new(Rk4 {
            k: core::array::from_fn(|_| vec![C64::zero(); len]),
            tmp: vec![C64::zero(); len],
        }),
        Integrator::Rosenbrock2 => alloc::boxed::Box::new(Rosenbrock2::new()),
    };
    let fixed = match opts.method {
        Integrator::Rk4 { dt } => Some(dt),
        _ => None,
    };

    let mut y = rho0.as_vec().to_vec();
    let mut f = vec![C64::zero(); len];
    rhs.eval(&y, &mut f);
    let mut rec = Recorder {
        rhs: &rhs,
        traj_times: Vec::new(),
        alphas: Vec::new(),
        occupations: Vec::new(),
        purities: Vec::new(),
        last: Vec::new(),
        last_derivative: 0.0,
        quiet: 0,
        max_herm: 0.0,
    };
    let mut stopped = rec.record(0.0, y.clone(), max_abs(&f), opts)?;
    let mut next_rec = 1usize;
    let mut t = 0.0;
    let mut h = fixed.unwrap_or(1e-3).min(opts.max_step);
    let (mut steps, mut rejected, mut renorms) = (0usize, 0usize, 0usize);
    let mut max_drift = 0.0f64;
    // time grid slack so that t_max and record times are hit despite rounding
    let slack = 1e-9 * opts.record_interval.min(opts.t_max);

    while !stopped && t < opts.t_max - slack {
        let h_try = h.min(opts.max_step).min(opts.t_max - t);
        if h_try <= 1e-12 * t.max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h: h_try });
        }
        let out = stepper.step(&rhs, &y, &f, h_try, opts)?;
        if fixed.is_none() && !(out.err <= 1.0) {
            rejected += 1;
            let fac = if out.err.is_finite() { (0.9 * out.err.powf(-1.0 / stepper.order())).max(0.2) } else { 0.2 };
            h = h_try * fac.min(0.9);
            continue;
        }
        steps += 1;
        let t1 = t + h_try;
        let end_derivative = max_abs(&out.f);
        loop {
            let tr = next_rec as f64 * opts.record_interval;
            if tr > t1 + slack || tr > opts.t_max + slack {
                break;
            }
            let s = ((tr - t) / h_try).clamp(0.0, 1.0);
            let yr = hermite(&y, &f, &out.y, &out.f, h_try, s);
            next_rec += 1;
            if rec.record(tr, yr, end_derivative, opts)? {
                stopped = true;
                break;
            }
        }
        let StepOut { y: mut y1, f: mut f1, err } = out;
        let n = dim.n();
        let trace: f64 = (0..n).map(|i| y1[i * n + i].re).sum();
        let drift = (trace - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > TRACE_RENORM_TOL {
            renorms += 1;
            log::debug!("t = {t1}: renormalizing trace drift {drift:e}");
            y1.iter_mut().for_each(|z| *z /= trace);
            rhs.eval(&y1, &mut f1);
        }
        t = t1;
        y = y1;
        f = f1;
        if fixed.is_none() {
            let fac = if err > 0.0 { 0.9 * err.powf(-1.0 / stepper.order()) } else { 5.0 };
            let fac = fac.clamp(0.2, 5.0);
            // hold the step (and a Rosenbrock factorization) on small increases
            if !(1.0..1.5).contains(&fac) {
                h = h_try * fac;
            } else {
                h = h.max(h_try);
            }
        }
    }
    if !stopped && rec.traj_times.last().map_or(true, |&tl| tl < t - slack) {
        rec.record(t, y.clone(), max_abs(&f), opts)?;
    }
    if renorms > 0 {
        log::info!("trace renormalized {renorms} times (max drift {max_drift:e})");
    }
    let n = dim.n();
    let mut fin = CMatrix::from_row_major(n, n, core::mem::take(&mut rec.last)).hermitian_part();
    let tr = fin.trace().re;
    fin.scale_mut(C64::new(1.0 / tr, 0.0));
    Ok(Trajectory {
        times: rec.traj_times,
        alphas: rec.alphas,
        occupations: rec.occupations,
        purities: rec.purities,
        final_rho: DensityMatrix::from_trusted(fin),
        early_stopped: stopped,
        final_derivative: rec.last_derivative,
        steps,
        rejected,
        max_trace_drift: max_drift,
        renormalizations: renorms,
        max_hermiticity_defect: rec.max_herm,
    })
}
