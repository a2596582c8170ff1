//! Phase-diagram scans over the `(J, G)` plane, location of the onset of the
//! broken branch, power-law fits of the order parameter near the onset and
//! bistability checks.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fock::FockDim;
use crate::lindblad::ModelParams;
use crate::observables::{occupation, purity};
use crate::stability::{excitation_spectrum, MomentumGrid, SpectrumMethod};
use crate::steadystate::{find_branches_from, Branch, FixedPoint, SolverOptions};

/// Offset of the first fit point above `j_c`.
pub const FIT_WINDOW_START: f64 = 1e-3;
pub const DEFAULT_WINDOW_DECADES: f64 = 1.5;
pub const DEFAULT_FIT_POINTS: usize = 25;
/// Relative half-width of the `j_c` search in `fit_beta`.
pub const JC_SEARCH: f64 = 0.05;
/// Ratio between the order parameter at onset and the square-root law that
/// marks a jump.
pub const JUMP_FACTOR: f64 = 10.0;
/// Onset probe offset, relative to `FIT_WINDOW_START`.
const PROBE_FRACTION: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellFlag {
    Converged,
    Degenerate,
    Undecided,
}

impl CellFlag {
    pub fn token(self) -> &'static str {
        match self {
            CellFlag::Converged => "converged",
            CellFlag::Degenerate => "degenerate",
            CellFlag::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CellFlags(u8);

impl CellFlags {
    const ALL: [CellFlag; 3] = [CellFlag::Converged, CellFlag::Degenerate, CellFlag::Undecided];

    fn bit(f: CellFlag) -> u8 {
        1 << f as u8
    }

    pub fn insert(&mut self, f: CellFlag) {
        self.0 |= Self::bit(f);
    }

    pub fn contains(&self, f: CellFlag) -> bool {
        self.0 & Self::bit(f) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = CellFlag> + '_ {
        Self::ALL.into_iter().filter(|f| self.contains(*f))
    }

    /// Semicolon-joined tokens, empty when no flag is set.
    pub fn joined(&self) -> String {
        let mut s = String::new();
        for f in self.iter() {
            if !s.is_empty() {
                s.push(';');
            }
            s.push_str(f.token());
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCell {
    pub j: f64,
    pub g: f64,
    /// `|<a>|` of the broken branch when present, else 0.
    pub order_parameter: f64,
    pub occupation: f64,
    pub purity: f64,
    pub max_im_omega: f64,
    pub argmax_k: f64,
    pub n_branches: usize,
    pub flags: CellFlags,
    /// Broken-branch amplitude, used to warm-start the next cell of a row.
    pub alpha: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub solver: SolverOptions,
    pub grid: MomentumGrid,
    pub method: SpectrumMethod,
    pub warm_start: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            grid: MomentumGrid::default(),
            method: SpectrumMethod::default(),
            warm_start: true,
        }
    }
}

fn check_grid(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidParams(format!("{name} grid is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(format!("{name} grid must be finite and ascending")));
    }
    Ok(())
}

/// Steady-state branches and stability at one point. Failures are recorded
/// in the flags.
pub fn compute_cell(params: &ModelParams, opts: &ScanOptions, dim: FockDim, hint: Option<C64>) -> PhaseCell {
    let mut flags = CellFlags::default();
    let mut cell = PhaseCell {
        j: params.j,
        g: params.g.re,
        order_parameter: 0.0,
        occupation: f64::NAN,
        purity: f64::NAN,
        max_im_omega: f64::NAN,
        argmax_k: f64::NAN,
        n_branches: 1,
        flags,
        alpha: C64::new(0.0, 0.0),
    };
    let mut ok = true;
    match excitation_spectrum(params, &opts.grid, dim, opts.method) {
        Ok(s) => {
            cell.max_im_omega = s.max_im;
            cell.argmax_k = s.argmax_k;
        }
        Err(e) => {
            log::warn!("spectrum failed at J={} G={}: {e}", params.j, params.g.re);
            flag_error(&mut flags, &e);
            ok = false;
        }
    }
    match find_branches_from(params, &opts.solver, dim, hint) {
        Ok(branches) => {
            let pick = branches.iter().find(|b| b.branch == Branch::Broken).unwrap_or(&branches[0]);
            cell.n_branches = branches.len();
            if pick.branch == Branch::Broken {
                cell.order_parameter = pick.alpha.norm();
                cell.alpha = pick.alpha;
            }
            cell.occupation = occupation(&pick.rho);
            cell.purity = purity(&pick.rho);
            ok &= branches.iter().all(|b| b.converged);
        }
        Err(e) => {
            log::warn!("branch search failed at J={} G={}: {e}", params.j, params.g.re);
            flag_error(&mut flags, &e);
            ok = false;
        }
    }
    if ok {
        flags.insert(CellFlag::Converged);
    } else if !flags.contains(CellFlag::Degenerate) {
        flags.insert(CellFlag::Undecided);
    }
    cell.flags = flags;
    cell
}

fn flag_error(flags: &mut CellFlags, e: &Error) {
    match e {
        Error::DegenerateSteadyState { .. } | Error::Singular { .. } => flags.insert(CellFlag::Degenerate),
        _ => flags.insert(CellFlag::Undecided),
    }
}

/// One row of constant `G`, traversed in ascending `J` so that warm starts
/// are reproducible.
pub fn scan_row(base: &ModelParams, g: f64, j_grid: &[f64], opts: &ScanOptions, dim: FockDim) -> Vec<PhaseCell> {
    let mut out: Vec<PhaseCell> = Vec::with_capacity(j_grid.len());
    let mut hint = None;
    for &j in j_grid {
        let p = base.with_g(C64::new(g, 0.0)).with_j(j);
        let cell = compute_cell(&p, opts, dim, if opts.warm_start { hint } else { None });
        hint = (cell.n_branches == 2).then_some(cell.alpha);
        out.push(cell);
    }
    out
}

/// Sequential scan; rows (`g` outer) are the unit of parallelism for callers
/// that distribute `scan_row` themselves.
pub fn scan_phase_diagram(base: &ModelParams, j_grid: &[f64], g_grid: &[f64], opts: &ScanOptions, dim: FockDim) -> Result<Vec<PhaseCell>> {
    check_grid("J", j_grid)?;
    check_grid("G", g_grid)?;
    base.validate()?;
    opts.solver.validate()?;
    let mut out = Vec::with_capacity(j_grid.len() * g_grid.len());
    for &g in g_grid {
        out.extend(scan_row(base, g, j_grid, opts, dim));
    }
    Ok(out)
}

fn broken(params: &ModelParams, opts: &SolverOptions, dim: FockDim, hint: Option<C64>) -> Result<Option<FixedPoint>> {
    let b = find_branches_from(params, opts, dim, hint)?;
    Ok(b.into_iter().find(|f| f.branch == Branch::Broken))
}

/// Bisection in `J` on the existence of a broken branch. Returns the midpoint
/// of the final bracket, of width at most `tol`.
pub fn detect_jc(params: &ModelParams, j_bracket: (f64, f64), tol: f64, opts: &SolverOptions, dim: FockDim) -> Result<f64> {
    let (mut lo, mut hi) = j_bracket;
    if !(lo < hi && tol > 0.0) {
        return Err(Error::InvalidParams("bracket must be ascending and tol positive".into()));
    }
    if broken(&params.with_j(lo), opts, dim, None)?.is_some() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut hint = match broken(&params.with_j(hi), opts, dim, None)? {
        Some(fp) => fp.alpha,
        None => return Err(Error::NoSignChange { lo, hi }),
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match broken(&params.with_j(mid), opts, dim, Some(hint))? {
            Some(fp) => {
                hi = mid;
                hint = fp.alpha;
            }
            None => lo = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalFit {
    pub g: f64,
    pub j_c: f64,
    /// `None` when the onset is a jump (first-order transition).
    pub beta: Option<f64>,
    pub amplitude: f64,
    /// RMS of the log-log residuals.
    pub residual: f64,
    pub window: (f64, f64),
    /// Sampled `(J, |alpha|)`.
    pub samples: Vec<(f64, f64)>,
}

impl CriticalFit {
    pub fn first_order(&self) -> bool {
        self.beta.is_none()
    }
}

/// Least squares `y = c + b x`; returns `(c, b, rms)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    let c = my - b * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, v)| (v - c - b * a).powi(2)).sum();
    (c, b, (ss / n).sqrt())
}

fn log_log(samples: &[(f64, f64)], j_c: f64) -> (Vec<f64>, Vec<f64>) {
    samples.iter().map(|&(j, a)| ((j - j_c).ln(), a.ln())).unzip()
}

/// Power-law fit `|alpha| = A (J - j_c)^beta` above `j_c_init`.
///
/// `n_points` values of `J` are log-spaced over `window_decades` starting at
/// `J - j_c_init = 1e-3`. The onset is classified first, comparing `|alpha|`
/// just above `j_c_init` with the square-root law fitted over the window; a
/// jump larger than `JUMP_FACTOR` reports no exponent. Otherwise `j_c` is
/// refined by golden section within 5% of `j_c_init`, with `(ln A, beta)`
/// from linear least squares at each trial.
pub fn fit_beta(
    params: &ModelParams,
    j_c_init: f64,
    window_decades: f64,
    n_points: usize,
    opts: &SolverOptions,
    dim: FockDim,
) -> Result<CriticalFit> {
    if n_points < 3 || !(window_decades > 0.0) || !(j_c_init > 0.0) {
        return Err(Error::InvalidParams("fit needs n_points >= 3, window_decades > 0, j_c_init > 0".into()));
    }
    let offsets: Vec<f64> = (0..n_points)
        .map(|i| FIT_WINDOW_START * 10f64.powf(window_decades * i as f64 / (n_points - 1) as f64))
        .collect();
    // far end first: the branch is well separated there and hints the rest
    let mut samples = vec![(0.0, 0.0); n_points];
    let mut hint = None;
    for (i, dj) in offsets.iter().enumerate().rev() {
        let j = j_c_init + dj;
        let fp = broken(&params.with_j(j), opts, dim, hint)?
            .ok_or_else(|| Error::FitDiverged(format!("no broken branch at J = {j}")))?;
        hint = Some(fp.alpha);
        samples[i] = (j, fp.alpha.norm());
    }
    let window = (samples[0].0, samples[n_points - 1].0);

    // square-root law with j_c pinned, ln A = mean(ln|alpha| - ln(dJ)/2)
    let (x0, y0) = log_log(&samples, j_c_init);
    let ln_a_half = y0.iter().zip(&x0).map(|(y, x)| y - 0.5 * x).sum::<f64>() / n_points as f64;
    let probe = FIT_WINDOW_START * PROBE_FRACTION;
    let onset = broken(&params.with_j(j_c_init + probe), opts, dim, hint)?.map_or(0.0, |fp| fp.alpha.norm());
    let expected = ln_a_half.exp() * probe.sqrt();
    if onset > JUMP_FACTOR * expected {
        log::info!("first-order onset at G={}: |alpha| = {onset:.4} vs {expected:.4e} expected", params.g.re);
        let rms = (y0.iter().zip(&x0).map(|(y, x)| (y - ln_a_half - 0.5 * x).powi(2)).sum::<f64>() / n_points as f64).sqrt();
        return Ok(CriticalFit {
            g: params.g.re,
            j_c: j_c_init,
            beta: None,
            amplitude: ln_a_half.exp(),
            residual: rms,
            window,
            samples,
        });
    }

    let rms_at = |jc: f64| {
        let (x, y) = log_log(&samples, jc);
        line_fit(&x, &y).2
    };
    let lo = j_c_init * (1.0 - JC_SEARCH);
    let hi = (j_c_init * (1.0 + JC_SEARCH)).min(window.0 - 1e-12 * window.0.max(1.0));
    let j_c = golden_section(rms_at, lo, hi, 1e-12);
    let span = hi - lo;
    if !j_c.is_finite() || j_c - lo < 1e-6 * span || hi - j_c < 1e-6 * span {
        return Err(Error::FitDiverged(format!("residual minimum not bracketed in [{lo}, {hi}] (at {j_c})")));
    }
    let (x, y) = log_log(&samples, j_c);
    let (c, beta, residual) = line_fit(&x, &y);
    if !(beta > 0.0 && residual.is_finite()) {
        return Err(Error::FitDiverged(format!("beta = {beta}, residual = {residual}")));
    }
    Ok(CriticalFit { g: params.g.re, j_c, beta: Some(beta), amplitude: c.exp(), residual, window, samples })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BistabilityReport {
    pub n_branches: usize,
    /// `max Im omega` of the symmetric branch.
    pub max_im: f64,
    pub broken_alpha: Option<C64>,
    pub bistable: bool,
}

/// Both branches present and the symmetric one dynamically stable.
pub fn detect_bistability(params: &ModelParams, opts: &ScanOptions, dim: FockDim) -> Result<BistabilityReport> {
    params.validate()?;
    let branches = find_branches_from(params, &opts.solver, dim, None)?;
    let spectrum = excitation_spectrum(params, &opts.grid, dim, opts.method)?;
    let broken_alpha = branches.iter().find(|b| b.branch == Branch::Broken).map(|b| b.alpha);
    Ok(BistabilityReport {
        n_branches: branches.len(),
        max_im: spectrum.max_im,
        broken_alpha,
        bistable: branches.len() == 2 && spectrum.max_im < 0.0,
    })
}
