//! The six subcommands. Each produces tables plus a list of scalar metrics
//! used by the truncation check; independent items run on the rayon pool and
//! are collected in input order.

use rayon::prelude::*;
use z2lattice_core::dynamics::{classify_endpoint, evolve, Endpoint};
use z2lattice_core::fock::{coherent_state_with_tol, FockDim};
use z2lattice_core::lindblad::DensityMatrix;
use z2lattice_core::observables::{default_window, linspace, occupation, purity, wigner};
use z2lattice_core::stability::excitation_spectrum;
use z2lattice_core::steadystate::{find_branches, Branch};
use z2lattice_core::sweep::{detect_jc, fit_beta, scan_row, PhaseCell};
use z2lattice_core::C64;

use crate::config::{BranchChoice, RunConfig};
use crate::output::{Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Steady,
    Stability,
    Dynamics,
    Sweep,
    Wigner,
    Fit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Stability => "stability",
            Command::Dynamics => "dynamics",
            Command::Sweep => "sweep",
            Command::Wigner => "wigner",
            Command::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    /// Scalars compared between `N` and `N + 10`.
    pub metrics: Vec<(String, f64)>,
    /// Per-item failures; the run still writes everything else.
    pub failures: Vec<String>,
}

pub fn execute(cmd: Command, cfg: &RunConfig, dim: FockDim, fixed_step: bool) -> Result<Report, CliError> {
    match cmd {
        Command::Steady => steady(cfg, dim),
        Command::Stability => stability(cfg, dim),
        Command::Dynamics => dynamics(cfg, dim, fixed_step),
        Command::Sweep => sweep(cfg, dim),
        Command::Wigner => wigner_map(cfg, dim),
        Command::Fit => fit(cfg, dim),
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Symmetric => "symmetric",
        Branch::Broken => "broken",
    }
}

pub fn steady(cfg: &RunConfig, dim: FockDim) -> Result<Report, CliError> {
    let base = cfg.model.params();
    let opts = cfg.numerics.solver.options();
    let js = cfg.steady.j.values();
    let results: Vec<_> = js.par_iter().map(|&j| (j, find_branches(&base.with_j(j), &opts, dim))).collect();
    let mut t = Table::new(
        "steady",
        &["j", "g", "branch", "re_alpha", "im_alpha", "abs_alpha", "n", "purity", "residual", "iterations", "converged", "status"],
    );
    let mut rep = Report::default();
    for (j, r) in results {
        match r {
            Ok(branches) => {
                for b in &branches {
                    t.push(vec![
                        j.into(),
                        cfg.model.g.into(),
                        branch_name(b.branch).into(),
                        b.alpha.re.into(),
                        b.alpha.im.into(),
                        b.alpha.norm().into(),
                        occupation(&b.rho).into(),
                        purity(&b.rho).into(),
                        b.residual.into(),
                        b.iterations.into(),
                        b.converged.into(),
                        "ok".into(),
                    ]);
                }
                let pick = branches.last().expect("symmetric branch always present");
                rep.metrics.push((format!("j={j}/abs_alpha"), pick.alpha.norm()));
                rep.metrics.push((format!("j={j}/n"), occupation(&pick.rho)));
            }
            Err(e) => {
                let nan = f64::NAN;
                t.push(vec![
                    j.into(),
                    cfg.model.g.into(),
                    "none".into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    0usize.into(),
                    false.into(),
                    format!("error: {e}").into(),
                ]);
                rep.failures.push(format!("J={j}: {e}"));
            }
        }
    }
    rep.tables.push(t);
    Ok(rep)
}

pub fn stability(cfg: &RunConfig, dim: FockDim) -> Result<Report, CliError> {
    let base = cfg.model.params();
    let grid = cfg.numerics.grid()?;
    let method = cfg.numerics.method();
    let js = cfg.stability.j.values();
    let results: Vec<_> = js.par_iter().map(|&j| (j, excitation_spectrum(&base.with_j(j), &grid, dim, method))).collect();
    let mut disp = Table::new("dispersion", &["j", "g", "k", "max_im_at_k"]);
    let mut summ = Table::new("summary", &["j", "g", "max_im", "argmax_k", "status"]);
    let mut rep = Report::default();
    let g = cfg.model.g;
    for (j, r) in results {
        match r {
            Ok(s) => {
                for (k, m) in s.k_values.iter().zip(&s.max_im_per_k) {
                    disp.push(vec![j.into(), g.into(), (*k).into(), (*m).into()]);
                }
                summ.push(vec![j.into(), g.into(), s.max_im.into(), s.argmax_k.into(), "ok".into()]);
                rep.metrics.push((format!("j={j}/max_im"), s.max_im));
            }
            Err(e) => {
                summ.push(vec![j.into(), g.into(), f64::NAN.into(), f64::NAN.into(), format!("error: {e}").into()]);
                rep.failures.push(format!("J={j}: {e}"));
            }
        }
    }
    rep.tables.extend([disp, summ]);
    Ok(rep)
}

fn endpoint_name(e: Endpoint) -> &'static str {
    match e {
        Endpoint::Symmetric => "symmetric",
        Endpoint::Broken => "broken",
        Endpoint::Undecided => "undecided",
    }
}

pub fn dynamics(cfg: &RunConfig, dim: FockDim, fixed_step: bool) -> Result<Report, CliError> {
    let params = cfg.model.params();
    let opts = cfg.numerics.integrator.options(fixed_step);
    let tol = cfg.numerics.truncation_tol;
    let seeds: Vec<C64> = cfg.dynamics.alpha0.iter().map(|a| a.value()).collect();
    let results: Vec<_> = seeds
        .par_iter()
        .map(|&a0| {
            let psi = coherent_state_with_tol(a0, dim, tol)?;
            evolve(&params, &DensityMatrix::pure(&psi), &opts, dim)
        })
        .collect();
    let mut summ = Table::new(
        "summary",
        &["index", "re_alpha0", "im_alpha0", "endpoint", "t_end", "re_alpha_end", "im_alpha_end", "purity_end", "early_stopped", "steps", "status"],
    );
    let mut rep = Report::default();
    for (idx, (a0, r)) in seeds.iter().zip(results).enumerate() {
        match r {
            Ok(tr) => {
                let mut t = Table::new(format!("traj_{idx}"), &["t", "re_alpha", "im_alpha", "n", "purity"]);
                for i in 0..tr.times.len() {
                    t.push(vec![tr.times[i].into(), tr.alphas[i].re.into(), tr.alphas[i].im.into(), tr.occupations[i].into(), tr.purities[i].into()]);
                }
                let end = *tr.alphas.last().expect("trajectory has records");
                let p_end = *tr.purities.last().expect("trajectory has records");
                let class = classify_endpoint(&tr, cfg.dynamics.endpoint_threshold);
                summ.push(vec![
                    idx.into(),
                    a0.re.into(),
                    a0.im.into(),
                    endpoint_name(class).into(),
                    (*tr.times.last().expect("trajectory has records")).into(),
                    end.re.into(),
                    end.im.into(),
                    p_end.into(),
                    tr.early_stopped.into(),
                    tr.steps.into(),
                    "ok".into(),
                ]);
                rep.metrics.push((format!("traj_{idx}/abs_alpha_end"), end.norm()));
                rep.metrics.push((format!("traj_{idx}/purity_end"), p_end));
                rep.tables.push(t);
            }
            Err(e) => {
                let nan = f64::NAN;
                summ.push(vec![
                    idx.into(),
                    a0.re.into(),
                    a0.im.into(),
                    "undecided".into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    false.into(),
                    0usize.into(),
                    format!("error: {e}").into(),
                ]);
                rep.failures.push(format!("alpha0={a0}: {e}"));
            }
        }
    }
    rep.tables.push(summ);
    Ok(rep)
}

pub const PHASE_COLUMNS: [&str; 9] = ["j", "g", "order_parameter", "occupation", "purity", "max_im_omega", "argmax_k", "n_branches", "flags"];

pub fn phase_table(cells: &[PhaseCell]) -> Table {
    let mut t = Table::new("phase", &PHASE_COLUMNS);
    for c in cells {
        t.push(vec![
            c.j.into(),
            c.g.into(),
            c.order_parameter.into(),
            c.occupation.into(),
            c.purity.into(),
            c.max_im_omega.into(),
            c.argmax_k.into(),
            c.n_branches.into(),
            c.flags.joined().into(),
        ]);
    }
    t
}

/// Rows of the phase diagram in parallel, reassembled `g` outer, `j` inner.
pub fn scan(cfg: &RunConfig, dim: FockDim, js: &[f64], gs: &[f64]) -> Result<Vec<PhaseCell>, CliError> {
    let base = cfg.model.params();
    let opts = cfg.numerics.scan_options()?;
    let rows: Vec<Vec<PhaseCell>> = gs.par_iter().map(|&g| scan_row(&base, g, js, &opts, dim)).collect();
    Ok(rows.into_iter().flatten().collect())
}

pub fn sweep(cfg: &RunConfig, dim: FockDim) -> Result<Report, CliError> {
    let js = cfg.sweep.j.values();
    let gs = cfg.sweep.g.values();
    let cells = scan(cfg, dim, &js, &gs)?;
    let mut rep = Report::default();
    for c in &cells {
        if !c.flags.contains(z2lattice_core::sweep::CellFlag::Converged) {
            rep.failures.push(format!("cell J={} G={}: {}", c.j, c.g, c.flags.joined()));
        }
        rep.metrics.push((format!("g={},j={}/order_parameter", c.g, c.j), c.order_parameter));
    }
    rep.tables.push(phase_table(&cells));
    if cfg.sweep.boundary {
        let base = cfg.model.params();
        let opts = cfg.numerics.solver.options();
        let tol = cfg.sweep.boundary_tol;
        let brackets: Vec<(f64, Option<(f64, f64)>)> = gs
            .iter()
            .enumerate()
            .map(|(r, &g)| {
                let row = &cells[r * js.len()..(r + 1) * js.len()];
                let i = row.windows(2).position(|w| w[0].n_branches == 1 && w[1].n_branches == 2);
                (g, i.map(|i| (row[i].j, row[i + 1].j)))
            })
            .collect();
        let found: Vec<_> = brackets
            .par_iter()
            .map(|&(g, br)| (g, br.map(|b| detect_jc(&base.with_g(C64::new(g, 0.0)), b, tol, &opts, dim))))
            .collect();
        let mut t = Table::new("boundary", &["g", "j_c", "status"]);
        for (g, r) in found {
            match r {
                Some(Ok(jc)) => {
                    t.push(vec![g.into(), jc.into(), "ok".into()]);
                    rep.metrics.push((format!("g={g}/j_c"), jc));
                }
                Some(Err(e)) => {
                    t.push(vec![g.into(), f64::NAN.into(), format!("error: {e}").into()]);
                    rep.failures.push(format!("boundary G={g}: {e}"));
                }
                None => t.push(vec![g.into(), f64::NAN.into(), "no transition on grid".into()]),
            }
        }
        rep.tables.push(t);
    }
    Ok(rep)
}

pub fn wigner_map(cfg: &RunConfig, dim: FockDim) -> Result<Report, CliError> {
    let params = cfg.model.params();
    let branches = find_branches(&params, &cfg.numerics.solver.options(), dim).map_err(CliError::Numerical)?;
    let want = match cfg.wigner.branch {
        BranchChoice::Symmetric => Branch::Symmetric,
        BranchChoice::Broken => Branch::Broken,
    };
    let fp = branches.iter().find(|b| b.branch == want).ok_or(CliError::BranchUnavailable)?;
    let extent = cfg.wigner.extent.unwrap_or_else(|| default_window(occupation(&fp.rho)));
    let axis = linspace(-extent, extent, cfg.wigner.points);
    let map = wigner(&fp.rho, &axis, &axis);
    let mut t = Table::new("wigner", &["re_z", "im_z", "w"]);
    t.header = vec![
        ("branch".into(), branch_name(fp.branch).into()),
        ("j".into(), params.j.to_string()),
        ("g".into(), cfg.model.g.to_string()),
        ("re_alpha".into(), crate::output::fmt_num(fp.alpha.re)),
        ("im_alpha".into(), crate::output::fmt_num(fp.alpha.im)),
        ("normalization_defect".into(), crate::output::fmt_num(map.normalization_defect)),
        ("imag_residue".into(), crate::output::fmt_num(map.imag_residue)),
    ];
    for (iy, &y) in axis.iter().enumerate() {
        for (ix, &x) in axis.iter().enumerate() {
            t.push(vec![Cell::Num(x), Cell::Num(y), Cell::Num(map.at(ix, iy))]);
        }
    }
    let peak = map.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let arg = map.argmax();
    let mut rep = Report::default();
    rep.metrics.extend([("w_max".into(), peak), ("argmax_re".into(), arg.re), ("argmax_im".into(), arg.im)]);
    rep.tables.push(t);
    Ok(rep)
}

pub fn fit(cfg: &RunConfig, dim: FockDim) -> Result<Report, CliError> {
    let base = cfg.model.params();
    let opts = cfg.numerics.solver.options();
    let f = &cfg.fit;
    let results: Vec<_> = f
        .g
        .par_iter()
        .map(|&g| {
            let p = base.with_g(C64::new(g, 0.0));
            let jc = detect_jc(&p, (f.j_bracket[0], f.j_bracket[1]), f.jc_tol, &opts, dim)?;
            fit_beta(&p, jc, f.window_decades, f.n_points, &opts, dim)
        })
        .collect();
    let mut t = Table::new("fit", &["g", "j_c", "beta", "amplitude", "residual", "window_min", "window_max", "first_order", "status"]);
    let mut pts = Table::new("fit_points", &["g", "j", "j_minus_jc", "abs_alpha"]);
    let mut rep = Report::default();
    for (&g, r) in f.g.iter().zip(results) {
        match r {
            Ok(fit) => {
                t.push(vec![
                    g.into(),
                    fit.j_c.into(),
                    fit.beta.unwrap_or(f64::NAN).into(),
                    fit.amplitude.into(),
                    fit.residual.into(),
                    fit.window.0.into(),
                    fit.window.1.into(),
                    fit.first_order().into(),
                    "ok".into(),
                ]);
                for &(j, a) in &fit.samples {
                    pts.push(vec![g.into(), j.into(), (j - fit.j_c).into(), a.into()]);
                }
                rep.metrics.push((format!("g={g}/j_c"), fit.j_c));
                if let Some(b) = fit.beta {
                    rep.metrics.push((format!("g={g}/beta"), b));
                }
            }
            Err(e) => {
                let nan = f64::NAN;
                t.push(vec![g.into(), nan.into(), nan.into(), nan.into(), nan.into(), nan.into(), nan.into(), false.into(), format!("error: {e}").into()]);
                rep.failures.push(format!("G={g}: {e}"));
            }
        }
    }
    rep.tables.extend([t, pts]);
    Ok(rep)
}
