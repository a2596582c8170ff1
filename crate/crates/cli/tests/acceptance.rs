//! Acceptance run. Prints one PASS/FAIL line per criterion (INFO lines add
//! context) and exits nonzero if any selected criterion fails. Criteria can be
//! selected by number: `cargo test --release -p z2lattice --test acceptance -- 1 7`.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;
use z2lattice::config::{DeltaRule, Grid, RunConfig};
use z2lattice_core::dynamics::{classify_endpoint, evolve, Endpoint, Integrator, IntegratorOptions, Trajectory, DEFAULT_ENDPOINT_THRESHOLD};
use z2lattice_core::fock::{annihilation, coherent_state, creation, parity_operator, FockDim, StateVector};
use z2lattice_core::linalg::CMatrix;
use z2lattice_core::lindblad::{DeltaMode, DensityMatrix, Generator, ModelParams};
use z2lattice_core::observables::{occupation, parity_expectation, purity, wigner_point};
use z2lattice_core::stability::{excitation_spectrum, MomentumGrid, SpectrumMethod};
use z2lattice_core::steadystate::{find_branches, mean_field_map, steady_state_at_fixed_alpha, Branch, SolverOptions};
use z2lattice_core::sweep::{detect_bistability, detect_jc, fit_beta, CriticalFit, PhaseCell, ScanOptions, DEFAULT_FIT_POINTS, DEFAULT_WINDOW_DECADES};
use z2lattice_core::C64;

const N_REF: usize = 40;
const N_REFINED: usize = 50;

const JC_EXPECTED: f64 = 0.3305;
const JC_TOL: f64 = 0.01;
const BISECTION_TOL: f64 = 1e-5;

const BETA_EXPECTED: f64 = 0.5;
const BETA_TOL: f64 = 0.05;
const MAX_FIT_RESIDUAL: f64 = 0.05;

const GRID_J: (f64, f64, usize) = (0.05, 1.0, 30);
const GRID_G: (f64, f64, usize) = (0.5, 8.0, 30);
const ORDER_THRESHOLD: f64 = 1e-6;

const BISTABLE_G: f64 = 3.7;
const BISTABLE_J: f64 = 1.0;
const BROKEN_MIN_PURITY: f64 = 0.55;
const SYMMETRIC_PURITY: (f64, f64) = (0.45, 0.55);
const TRANSIENT_HORIZON: f64 = 500.0;
/// `(alpha0, t_max)` of the three bistability runs.
const BISTABLE_RUNS: [(f64, f64); 3] = [(2.0, 2000.0), (0.05, 6e4), (0.25, TRANSIENT_HORIZON)];

const WAVEVECTOR_G: f64 = 4.0;

const INCOMPRESSIBLE_G: f64 = 3.0;
const INCOMPRESSIBLE_J: [f64; 6] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
const INCOMPRESSIBILITY_TOL: f64 = 1e-6;

const PROPERTY_BUDGET_S: f64 = 60.0;
const TRACE_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-8;
const COVARIANCE_TOL: f64 = 1e-6;
const COMMUTATOR_TOL: f64 = 1e-12;
const WIGNER_TOL: f64 = 1e-6;
const ORACLE_T: f64 = 200.0;
const ORACLE_TOL: f64 = 1e-6;

const MAX_DRIFT: f64 = 0.01;

fn dim(n: usize) -> FockDim {
    FockDim::new(n).expect("valid truncation")
}

/// One critical-point case of the exponent criterion.
#[derive(Clone, Copy)]
struct Case {
    label: &'static str,
    g: f64,
    resonant: bool,
    bracket: (f64, f64),
}

impl Case {
    fn params(&self) -> ModelParams {
        let mode = if self.resonant { DeltaMode::Fixed(0.0) } else { DeltaMode::BandBottom };
        ModelParams::new(self.g, 0.5, mode)
    }
}

const CASES: [Case; 4] = [
    Case { label: "Delta=-J G=3", g: 3.0, resonant: false, bracket: (0.05, 0.5) },
    Case { label: "Delta=-J G=5", g: 5.0, resonant: false, bracket: (0.05, 0.5) },
    Case { label: "Delta=-J G=7", g: 7.0, resonant: false, bracket: (0.05, 0.5) },
    Case { label: "Delta=0 G=8", g: 8.0, resonant: true, bracket: (0.05, 1.0) },
];

#[derive(Clone)]
struct Critical {
    j_c: Result<f64, String>,
    fit: Result<CriticalFit, String>,
    seconds: f64,
}

fn critical(case: &Case, n: usize, fit: bool) -> Critical {
    let start = Instant::now();
    let p = case.params();
    let opts = SolverOptions::default();
    let d = dim(n);
    let j_c = detect_jc(&p, case.bracket, BISECTION_TOL, &opts, d).map_err(|e| e.to_string());
    let fit = match (&j_c, fit) {
        (Ok(jc), true) => fit_beta(&p, *jc, DEFAULT_WINDOW_DECADES, DEFAULT_FIT_POINTS, &opts, d).map_err(|e| e.to_string()),
        (Err(e), true) => Err(e.clone()),
        (_, false) => Err("not requested".into()),
    };
    Critical { j_c, fit, seconds: start.elapsed().as_secs_f64() }
}

struct Suite {
    failed: Vec<u8>,
    critical: BTreeMap<(usize, usize), Critical>,
    grid: Option<Result<Vec<PhaseCell>, String>>,
}

impl Suite {
    fn verdict(&mut self, id: u8, name: &str, pass: bool, detail: impl AsRef<str>) {
        println!("{} [{id}] {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
        if !pass {
            self.failed.push(id);
        }
    }

    fn info(&self, id: u8, detail: impl AsRef<str>) {
        println!("INFO [{id}] {}", detail.as_ref());
    }

    /// Critical-point results per case, computed once per truncation.
    fn critical(&mut self, cases: &[usize], n: usize, fit: bool) -> Vec<Critical> {
        let missing: Vec<usize> = cases
            .iter()
            .copied()
            .filter(|&c| match self.critical.get(&(c, n)) {
                None => true,
                Some(r) => fit && matches!(&r.fit, Err(e) if e == "not requested"),
            })
            .collect();
        let fresh: Vec<(usize, Critical)> = missing.par_iter().map(|&c| (c, critical(&CASES[c], n, fit))).collect();
        self.critical.extend(fresh.into_iter().map(|(c, r)| ((c, n), r)));
        cases.iter().map(|c| self.critical[&(*c, n)].clone()).collect()
    }

    fn grid(&mut self) -> Result<Vec<PhaseCell>, String> {
        if self.grid.is_none() {
            let mut cfg = RunConfig::default();
            cfg.numerics.n_levels = N_REF;
            cfg.model.delta_mode = DeltaRule::BandBottom;
            cfg.sweep.j = Grid::Range { start: GRID_J.0, stop: GRID_J.1, num: GRID_J.2 };
            cfg.sweep.g = Grid::Range { start: GRID_G.0, stop: GRID_G.1, num: GRID_G.2 };
            let start = Instant::now();
            let cells = z2lattice::commands::scan(&cfg, dim(N_REF), &cfg.sweep.j.values(), &cfg.sweep.g.values()).map_err(|e| e.to_string());
            self.info(3, format!("{}x{} grid at N={N_REF} in {:.0} s", GRID_J.2, GRID_G.2, start.elapsed().as_secs_f64()));
            self.grid = Some(cells);
        }
        self.grid.clone().expect("grid computed above")
    }
}

fn criterion_1(s: &mut Suite) {
    let r = s.critical(&[0], N_REF, false).remove(0);
    s.info(1, format!("bisection took {:.0} s", r.seconds));
    match r.j_c {
        Ok(jc) => s.verdict(1, "critical point", (jc - JC_EXPECTED).abs() <= JC_TOL, format!("J_c = {jc:.5} (expected {JC_EXPECTED} +- {JC_TOL})")),
        Err(e) => s.verdict(1, "critical point", false, e),
    }
}

fn criterion_2(s: &mut Suite) {
    let all: Vec<usize> = (0..CASES.len()).collect();
    let results = s.critical(&all, N_REF, true);
    let mut ok = true;
    let mut parts = Vec::new();
    for (case, r) in CASES.iter().zip(&results) {
        match &r.fit {
            Ok(f) => {
                let beta = f.beta;
                let good = beta.is_some_and(|b| (b - BETA_EXPECTED).abs() <= BETA_TOL) && f.residual < MAX_FIT_RESIDUAL;
                ok &= good;
                let b = beta.map_or("none (first order)".to_string(), |b| format!("{b:.4}"));
                parts.push(format!("{} beta {b} rms {:.1e}{}", case.label, f.residual, if good { "" } else { " [out]" }));
                s.info(2, format!("{}: j_c(bisection) {:.6}, j_c(fit) {:.6}, window {:.2e}..{:.2e}, {:.0} s", case.label, r.j_c.clone().unwrap_or(f64::NAN), f.j_c, f.window.0, f.window.1, r.seconds));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{}: {e}", case.label));
            }
        }
    }
    s.verdict(2, "critical exponent", ok, format!("{} (expected {BETA_EXPECTED} +- {BETA_TOL}, rms < {MAX_FIT_RESIDUAL})", parts.join("; ")));
}

fn criterion_3(s: &mut Suite) {
    let cells = match s.grid() {
        Ok(c) => c,
        Err(e) => return s.verdict(3, "boundary coincidence", false, e),
    };
    let unstable = cells.iter().filter(|c| c.max_im_omega > 0.0).count();
    let ordered = cells.iter().filter(|c| c.order_parameter > ORDER_THRESHOLD).count();
    let unconverged = cells.iter().filter(|c| !c.flags.contains(z2lattice_core::sweep::CellFlag::Converged)).count();
    let mismatched: Vec<&PhaseCell> = cells.iter().filter(|c| (c.max_im_omega > 0.0) != (c.order_parameter > ORDER_THRESHOLD)).collect();
    for c in mismatched.iter().take(10) {
        s.info(3, format!("mismatch at J={:.4} G={:.4}: max_im {:.3e}, |alpha| {:.3e}", c.j, c.g, c.max_im_omega, c.order_parameter));
    }
    s.verdict(
        3,
        "boundary coincidence",
        mismatched.is_empty(),
        format!("{} cells, {unstable} unstable, {ordered} ordered, {} mismatched, {unconverged} not converged", cells.len(), mismatched.len()),
    );
}

fn long_run(t_max: f64) -> IntegratorOptions {
    IntegratorOptions {
        rel_tol: 1e-6,
        abs_tol: 1e-8,
        max_step: 50.0,
        t_max,
        record_interval: 1.0,
        method: Integrator::Rosenbrock2,
        ..Default::default()
    }
}

fn monotone(xs: &[f64]) -> bool {
    let up = xs.windows(2).any(|w| w[1] > w[0]);
    let down = xs.windows(2).any(|w| w[1] < w[0]);
    !(up && down)
}

fn criterion_4(s: &mut Suite) {
    let d = dim(N_REF);
    let p = ModelParams::new(BISTABLE_G, BISTABLE_J, DeltaMode::Fixed(0.0));
    let start = Instant::now();
    let report = detect_bistability(&p, &ScanOptions::default(), d);
    let runs: Vec<Result<Trajectory, String>> = BISTABLE_RUNS
        .par_iter()
        .map(|&(a0, t_max)| {
            let psi = coherent_state(C64::new(a0, 0.0), d).map_err(|e| e.to_string())?;
            evolve(&p, &DensityMatrix::pure(&psi), &long_run(t_max), d).map_err(|e| e.to_string())
        })
        .collect();
    s.info(4, format!("bistability check and three runs in {:.0} s", start.elapsed().as_secs_f64()));
    let mut ok = true;
    let mut parts = Vec::new();
    match report {
        Ok(r) => {
            ok &= r.bistable;
            parts.push(format!("bistable {} (branches {}, max Im omega {:.2e})", r.bistable, r.n_branches, r.max_im));
        }
        Err(e) => {
            ok = false;
            parts.push(format!("bistability: {e}"));
        }
    }
    for (&(a0, t_max), run) in BISTABLE_RUNS.iter().zip(&runs) {
        let tr = match run {
            Ok(tr) => tr,
            Err(e) => {
                ok = false;
                parts.push(format!("alpha0={a0}: {e}"));
                continue;
            }
        };
        let end = classify_endpoint(tr, DEFAULT_ENDPOINT_THRESHOLD);
        let p_end = *tr.purities.last().expect("records");
        let t_end = *tr.times.last().expect("records");
        s.info(4, format!("alpha0={a0}: t_end {t_end:.0} (t_max {t_max:.0}), |alpha| {:.3e}, P {p_end:.4}, endpoint {end:?}, steps {}", tr.alphas.last().expect("records").norm(), tr.steps));
        let good = match a0 {
            x if x == BISTABLE_RUNS[0].0 => end == Endpoint::Broken && p_end > BROKEN_MIN_PURITY,
            x if x == BISTABLE_RUNS[1].0 => end == Endpoint::Symmetric && (SYMMETRIC_PURITY.0..=SYMMETRIC_PURITY.1).contains(&p_end),
            _ => {
                let mags: Vec<f64> = tr.times.iter().zip(&tr.alphas).filter(|(t, _)| **t <= TRANSIENT_HORIZON).map(|(_, a)| a.norm()).collect();
                let converged = tr.early_stopped || tr.final_derivative < long_run(t_max).fixed_point_tol;
                !converged && !monotone(&mags)
            }
        };
        ok &= good;
        let what = match a0 {
            x if x == BISTABLE_RUNS[2].0 => "transient",
            _ => "endpoint",
        };
        parts.push(format!("alpha0={a0} {what} {}", if good { "ok" } else { "wrong" }));
    }
    s.verdict(4, "bistability", ok, parts.join("; "));
}

fn criterion_5(s: &mut Suite) {
    let d = dim(N_REF);
    let grid = MomentumGrid::uniform(z2lattice_core::stability::DEFAULT_N_K).expect("default grid");
    let mut ok = true;
    let mut parts = Vec::new();
    for (j, want_zero) in [(0.5, true), (2.0, false)] {
        let p = ModelParams::new(WAVEVECTOR_G, j, DeltaMode::Fixed(0.0));
        match excitation_spectrum(&p, &grid, d, SpectrumMethod::default()) {
            Ok(sp) => {
                let good = (sp.argmax_k == 0.0) == want_zero;
                ok &= good;
                parts.push(format!("Delta=0 G={WAVEVECTOR_G} J={j}: argmax_k {:.4} (max Im {:.2e})", sp.argmax_k, sp.max_im));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("J={j}: {e}"));
            }
        }
    }
    match s.grid() {
        Ok(cells) => {
            let unstable: Vec<&PhaseCell> = cells.iter().filter(|c| c.max_im_omega > 0.0).collect();
            let off = unstable.iter().filter(|c| c.argmax_k != 0.0).count();
            ok &= off == 0 && !unstable.is_empty();
            parts.push(format!("Delta=-J grid: {off} of {} unstable cells peak away from k=0", unstable.len()));
        }
        Err(e) => {
            ok = false;
            parts.push(e);
        }
    }
    s.verdict(5, "instability wavevector", ok, parts.join("; "));
}

fn symmetric_occupation(p: &ModelParams, d: FockDim) -> Result<f64, String> {
    let b = find_branches(p, &SolverOptions::default(), d).map_err(|e| e.to_string())?;
    let sym = b.iter().find(|b| b.branch == Branch::Symmetric).ok_or("no symmetric branch")?;
    Ok(occupation(&sym.rho))
}

fn criterion_6(s: &mut Suite) {
    let d = dim(N_REF);
    let base = ModelParams::new(INCOMPRESSIBLE_G, 0.0, DeltaMode::BandBottom);
    let run = || -> Result<(f64, Vec<f64>, f64), String> {
        let n0 = symmetric_occupation(&base, d)?;
        let ns: Vec<f64> = INCOMPRESSIBLE_J.iter().map(|&j| symmetric_occupation(&base.with_j(j), d)).collect::<Result<_, _>>()?;
        // the same site without hopping, at the detuning Delta = -J
        let mut single = 0.0f64;
        for (&j, &n) in INCOMPRESSIBLE_J.iter().zip(&ns) {
            let p = ModelParams::new(INCOMPRESSIBLE_G, 0.0, DeltaMode::Fixed(-j));
            let rho = steady_state_at_fixed_alpha(&p, C64::new(0.0, 0.0), d).map_err(|e| e.to_string())?;
            single = single.max((occupation(&rho) - n).abs());
        }
        Ok((n0, ns, single))
    };
    match run() {
        Ok((n0, ns, single)) => {
            let spread = ns.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ns.iter().cloned().fold(f64::INFINITY, f64::min);
            let off = ns.iter().map(|n| (n - n0).abs()).fold(0.0, f64::max);
            let listed: Vec<String> = INCOMPRESSIBLE_J.iter().zip(&ns).map(|(j, n)| format!("{j}:{n:.6}")).collect();
            s.info(6, format!("n_s(J) = {} ; J=0 value {n0:.6}", listed.join(" ")));
            s.info(6, format!("n_s(J) vs uncoupled site at the same detuning: max difference {single:.1e}"));
            s.verdict(
                6,
                "incompressibility",
                spread <= INCOMPRESSIBILITY_TOL && off <= INCOMPRESSIBILITY_TOL,
                format!("spread over J {spread:.3e}, max |n_s(J) - n_s(0)| {off:.3e} (tolerance {INCOMPRESSIBILITY_TOL:.0e})"),
            );
        }
        Err(e) => s.verdict(6, "incompressibility", false, e),
    }
}

fn random_params(rng: &mut StdRng) -> (ModelParams, C64) {
    let mut p = ModelParams::new(rng.random_range(0.0..6.0), rng.random_range(0.0..2.0), DeltaMode::Fixed(rng.random_range(-2.0..2.0)));
    p.u = rng.random_range(0.0..2.0);
    (p, C64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)))
}

fn property_suite() -> Vec<(&'static str, bool, String)> {
    let mut out: Vec<(&'static str, bool, String)> = Vec::new();
    let clock = Instant::now();
    let lap = |out: &mut Vec<(&'static str, bool, String)>| { if let Some(l) = out.last_mut() { l.2 += &format!(" [{:.1} s]", clock.elapsed().as_secs_f64()); } };
    let mut rng = StdRng::seed_from_u64(7);

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(3..16);
        let (p, alpha) = random_params(&mut rng);
        let x: Vec<C64> = (0..n * n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let mut y = vec![C64::new(0.0, 0.0); n * n];
        Generator::new(&p, alpha, dim(n)).apply_into(&x, &mut y);
        let tr: C64 = (0..n).map(|i| y[i * n + i]).sum();
        worst = worst.max(tr.norm());
    }
    out.push(("trace preservation", worst < TRACE_TOL, format!("max |Tr L(X)| {worst:.1e} over 200 random X")));
    lap(&mut out);

    let d = dim(N_REF);
    let points = [
        ModelParams::new(3.0, 0.25, DeltaMode::BandBottom),
        ModelParams::new(3.0, 0.5, DeltaMode::BandBottom),
        ModelParams::new(BISTABLE_G, BISTABLE_J, DeltaMode::Fixed(0.0)),
        ModelParams::new(1.0, 0.6, DeltaMode::Fixed(0.5)),
    ];
    let par = parity_operator(d);
    let (mut herm, mut neg, mut cov, mut count) = (0.0f64, 0.0f64, 0.0f64, 0);
    let mut errors = Vec::new();
    for p in &points {
        match find_branches(p, &SolverOptions::default(), d) {
            Ok(bs) => {
                for b in &bs {
                    count += 1;
                    herm = herm.max(b.rho.matrix().hermiticity_defect());
                    neg = neg.max(-b.rho.min_eigenvalue().unwrap_or(f64::NEG_INFINITY));
                    if b.branch == Branch::Broken {
                        let mirrored = par.matmul(b.rho.matrix()).matmul(&par);
                        match (steady_state_at_fixed_alpha(p, -b.alpha, d), mean_field_map(p, -b.alpha, d)) {
                            (Ok(r), Ok(back)) => cov = cov.max(mirrored.max_abs_diff(r.matrix())).max((back + b.alpha).norm()),
                            _ => errors.push("mirror solve failed".to_string()),
                        }
                    }
                }
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    out.push((
        "steady states hermitian and positive",
        errors.is_empty() && herm <= STATE_TOL && neg <= STATE_TOL,
        format!("{count} states, hermiticity defect {herm:.1e}, most negative eigenvalue {:.1e} {}", -neg, errors.join(" ")),
    ));
    lap(&mut out);

    let dt = dim(20);
    let p = ModelParams::new(3.0, 0.5, DeltaMode::BandBottom);
    let rho0 = DensityMatrix::pure(&coherent_state(C64::new(0.5, 0.3), dt).expect("coherent"));
    let pt = parity_operator(dt);
    let mirrored = DensityMatrix::from_hermitized(&pt.matmul(rho0.matrix()).matmul(&pt)).expect("mirror");
    let opts = IntegratorOptions { t_max: 5.0, record_interval: 0.25, method: Integrator::Rk4 { dt: 0.005 }, ..Default::default() };
    let traj = match (evolve(&p, &rho0, &opts, dt), evolve(&p, &mirrored, &opts, dt)) {
        (Ok(a), Ok(b)) if a.times == b.times => a.alphas.iter().zip(&b.alphas).map(|(x, y)| (x + y).norm()).fold(0.0, f64::max),
        _ => f64::INFINITY,
    };
    out.push((
        "Z2 covariance",
        cov <= COVARIANCE_TOL && traj <= COVARIANCE_TOL,
        format!("fixed points {cov:.1e}, fixed-step trajectories {traj:.1e}"),
    ));
    lap(&mut out);

    let a = annihilation(d);
    let c = a.matmul(&creation(d)).sub(&creation(d).matmul(&a));
    let mut want = vec![C64::new(1.0, 0.0); N_REF];
    want[N_REF - 1] = C64::new(-((N_REF - 1) as f64), 0.0);
    let comm = c.max_abs_diff(&CMatrix::from_diagonal(&want));
    out.push(("commutator truncation identity", comm <= COMMUTATOR_TOL, format!("deviation {comm:.1e} at N={N_REF}")));
    lap(&mut out);

    let w0 = wigner_point(&DensityMatrix::pure(&StateVector::vacuum(d)), C64::new(0.0, 0.0)).re;
    let wdev = (w0 - 2.0 / std::f64::consts::PI).abs();
    out.push(("vacuum Wigner peak", wdev <= WIGNER_TOL, format!("W(0) = {w0:.12} (2/pi off by {wdev:.1e})")));
    lap(&mut out);

    let p = ModelParams::new(3.0, 0.0, DeltaMode::Fixed(0.0));
    let oracle = steady_state_at_fixed_alpha(&p, C64::new(0.0, 0.0), d);
    // run the full horizon: no early stop
    let opts = IntegratorOptions { t_max: ORACLE_T, fixed_point_tol: 1e-300, ..Default::default() };
    let run = evolve(&p, &DensityMatrix::pure(&StateVector::vacuum(d)), &opts, d);
    let (ok, detail) = match (oracle, run) {
        (Ok(ss), Ok(tr)) => {
            let r = &tr.final_rho;
            let dn = (occupation(r) - occupation(&ss)).abs();
            let dp = (purity(r) - purity(&ss)).abs();
            let dpar = (parity_expectation(r) - parity_expectation(&ss)).abs();
            let t_end = *tr.times.last().expect("records");
            (
                dn.max(dp).max(dpar) <= ORACLE_TOL && (t_end - ORACLE_T).abs() < 1e-9,
                format!("t = {t_end}: |dn| {dn:.1e}, |dP| {dp:.1e}, |d<parity>| {dpar:.1e}"),
            )
        }
        (Err(e), _) | (_, Err(e)) => (false, e.to_string()),
    };
    out.push(("null space vs time integration", ok, detail));
    lap(&mut out);
    out
}

fn criterion_7(s: &mut Suite) {
    let start = Instant::now();
    let results = property_suite();
    let secs = start.elapsed().as_secs_f64();
    let mut ok = secs < PROPERTY_BUDGET_S;
    for (name, good, detail) in &results {
        ok &= *good;
        s.info(7, format!("{} {name}: {detail}", if *good { "ok" } else { "FAILED" }));
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    let detail = if failed.is_empty() { format!("{} checks in {secs:.1} s", results.len()) } else { format!("failed: {} ({secs:.1} s)", failed.join(", ")) };
    s.verdict(7, "property suite", ok, detail);
}

fn metrics(results: &[Critical]) -> Vec<(String, f64)> {
    let mut m = Vec::new();
    for (case, r) in CASES.iter().zip(results) {
        m.push((format!("{} j_c", case.label), r.j_c.clone().unwrap_or(f64::NAN)));
        let beta = r.fit.as_ref().ok().and_then(|f| f.beta).unwrap_or(f64::NAN);
        m.push((format!("{} beta", case.label), beta));
    }
    m
}

fn criterion_8(s: &mut Suite) {
    let all: Vec<usize> = (0..CASES.len()).collect();
    let base = metrics(&s.critical(&all, N_REF, true));
    let refined = metrics(&s.critical(&all, N_REFINED, true));
    let report = z2lattice::drift_report(N_REF, &base, &refined);
    for e in &report.entries {
        s.info(8, format!("{}: N={N_REF} {:.6}, N={N_REFINED} {:.6}, drift {:.2e}", e.name, e.value, e.value_refined, e.rel_drift));
    }
    let finite = base.iter().chain(&refined).all(|(_, v)| v.is_finite());
    s.verdict(
        8,
        "truncation robustness",
        finite && report.max_rel_drift < MAX_DRIFT,
        format!("max relative drift {:.2e} ({}) for N {N_REF} -> {N_REFINED} (limit {MAX_DRIFT})", report.max_rel_drift, report.worst.as_deref().unwrap_or("-")),
    );
}

fn main() -> ExitCode {
    let mut selected: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).filter(|n| (1..=8).contains(n)).collect();
    if selected.is_empty() {
        selected = (1..=8).collect();
    }
    let mut suite = Suite { failed: Vec::new(), critical: BTreeMap::new(), grid: None };
    let start = Instant::now();
    for id in &selected {
        match id {
            1 => criterion_1(&mut suite),
            2 => criterion_2(&mut suite),
            3 => criterion_3(&mut suite),
            4 => criterion_4(&mut suite),
            5 => criterion_5(&mut suite),
            6 => criterion_6(&mut suite),
            7 => criterion_7(&mut suite),
            _ => criterion_8(&mut suite),
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.0} s{}",
        selected.len() - suite.failed.len(),
        selected.len(),
        start.elapsed().as_secs_f64(),
        if suite.failed.is_empty() { String::new() } else { format!(", failed {:?}", suite.failed) }
    );
    if suite.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
