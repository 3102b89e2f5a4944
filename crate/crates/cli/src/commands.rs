use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use triwell::critical::{self, solve_critical_oracle, solve_critical_with};
use triwell::secular::{oval_t, secular_f};
use triwell::spectrum::{assemble_state, classify_reality_with, find_roots, sample_wavefunction, scan_branch, SpectrumError};
use triwell::verifier::{build_hamiltonian, build_parity_ops, identity_residuals, VerifierError};
use triwell::{CouplingParams, Sigma};

use crate::config::{CommandKind, RunConfig};
use crate::output::{Cell, Report, Table};
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.command {
        CommandKind::Spectrum => cmd_spectrum(cfg),
        CommandKind::Critical => cmd_critical(cfg),
        CommandKind::Domain => cmd_domain(cfg),
        CommandKind::Curves => cmd_curves(cfg),
        CommandKind::Verify => cmd_verify(cfg),
        CommandKind::Wavefunction => cmd_wavefunction(cfg),
    }
}

fn z_crit(cfg: &RunConfig) -> f64 {
    cfg.z_crit.unwrap_or_else(critical::z_crit)
}

/// Which inequality of the reality triangle a complex branch breaks.
fn violated_edge(sigma: Sigma, z_eff: f64) -> &'static str {
    match (sigma, z_eff > 0.0) {
        (Sigma::One, true) => "Z <= Z_crit - 2Y",
        (Sigma::One, false) => "Z >= -Z_crit - 2Y",
        (_, false) => "Z >= Y - Z_crit",
        (_, true) => "Z <= Y + Z_crit",
    }
}

fn max_update(report: &mut Report, key: &str, v: f64) {
    let e = report.residuals.entry(key.to_string()).or_insert(0.0);
    *e = e.max(v);
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let params = cfg.params()?;
    let mut table = Table::new(vec![
        "n",
        "sigma",
        "s",
        "t",
        "energy",
        "epsilon_n",
        "degeneracy",
        "eigvec_a",
        "eigvec_b",
        "eigvec_c",
        "confluent",
        "secular_residual",
        "hyperbola_residual",
    ]);
    let mut states = Vec::new();
    let mut complex = Vec::new();
    for sigma in Sigma::ALL {
        let scan = scan_branch(&params, sigma, cfg.n_max);
        for pair in &scan.complex_pairs {
            complex.push(format!(
                "branch {sigma}: levels {} and {} are complex (z_eff = {}), violating {}",
                pair.lower,
                pair.upper,
                scan.z_eff,
                violated_edge(sigma, scan.z_eff)
            ));
        }
        for root in scan.roots {
            let state = assemble_state(&params, root).map_err(|e| CliError::NoConvergence(e.to_string()))?;
            states.push(state);
        }
    }
    states.sort_by_key(|s| (s.root.n, s.root.sigma));
    let mut report = Report::new(Table::new(vec![]));
    for st in &states {
        let r = st.root;
        let scale = r.energy.abs().max(1.0);
        let degeneracy = states
            .iter()
            .filter(|o| (o.root.energy - r.energy).abs() <= params.tol() * scale)
            .count();
        let hyperbola = 2.0 * r.s * r.t - r.sigma.z_eff(&params);
        table.push(vec![
            r.n.into(),
            Cell::Int(r.sigma.index() as i64),
            r.s.into(),
            r.t.into(),
            r.energy.into(),
            r.epsilon_n.into(),
            degeneracy.into(),
            st.eigvec[0].into(),
            st.eigvec[1].into(),
            st.eigvec[2].into(),
            r.confluent.into(),
            r.secular_residual().into(),
            hyperbola.into(),
        ]);
        max_update(&mut report, "max_secular", r.secular_residual().abs());
        max_update(&mut report, "max_hyperbola", hyperbola.abs());
        max_update(&mut report, "max_determinant", st.determinant.norm());
        max_update(&mut report, "max_matching", st.matching_residual);
    }
    report.table = table;
    if let (_, triwell::model::Orientation::Mirrored) = params.canonical() {
        report.notes.push("Y < 0: equivalent to (-Y, -Z) with every t reversed".into());
    }
    if !complex.is_empty() {
        report.notes.push(format!("Z_crit = {}", z_crit(cfg)));
        report.problem = Some(CliError::ComplexSpectrum(complex.join("; ")));
    }
    Ok(report)
}

pub fn cmd_critical(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut table = Table::new(vec![
        "kind", "n", "sweeps", "z_lower", "z_upper", "t_lower", "t_upper", "s_lower", "s_upper", "e_lower", "e_upper",
    ]);
    let conv = |e: triwell::critical::CriticalError| CliError::NoConvergence(e.to_string());
    let rows: Vec<_> = (0..=cfg.iterations)
        .step_by(2)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| solve_critical_with(cfg.recipe.into(), n, cfg.tol))
        .collect::<Result<_, _>>()
        .map_err(conv)?;
    for p in &rows {
        table.push(vec![
            "table".into(),
            p.n.into(),
            p.sweeps.into(),
            p.z_crit_lower.into(),
            p.z_crit_upper.into(),
            p.t_crit_lower.into(),
            p.t_crit_upper.into(),
            p.s_crit_lower.into(),
            p.s_crit_upper.into(),
            p.e_crit_lower.into(),
            p.e_crit_upper.into(),
        ]);
    }
    let o = solve_critical_oracle(cfg.tol).map_err(conv)?;
    table.push(vec![
        "oracle".into(),
        Cell::Empty,
        Cell::Empty,
        o.z_crit.into(),
        o.z_crit.into(),
        o.t_crit.into(),
        o.t_crit.into(),
        o.s_crit.into(),
        o.s_crit.into(),
        o.e_crit.into(),
        o.e_crit.into(),
    ]);
    let mut report = Report::new(table);
    report.residuals.insert("oracle_g".into(), o.g_residual);
    report.residuals.insert("oracle_dg".into(), o.dg_residual);
    if let Some(last) = rows.last() {
        report.residuals.insert("last_bracket_width".into(), last.width());
    }
    Ok(report)
}

pub fn triangle_vertices(z_crit: f64) -> [(f64, f64); 3] {
    [(0.0, z_crit), (0.0, -z_crit), (2.0 * z_crit / 3.0, -z_crit / 3.0)]
}

pub fn cmd_domain(cfg: &RunConfig) -> Result<Report, CliError> {
    let zc = z_crit(cfg);
    let r = cfg.ranges;
    let mut table = Table::new(vec!["kind", "y", "z", "real", "binding_branch"]);
    for (y, z) in triangle_vertices(zc) {
        table.push(vec!["vertex".into(), y.into(), z.into(), Cell::Empty, Cell::Empty]);
    }
    let cells: Vec<_> = (0..r.resolution * r.resolution)
        .into_par_iter()
        .map(|k| {
            let (y, z) = (r.y_at(k / r.resolution), r.z_at(k % r.resolution));
            let c = CouplingParams::new(y, z).map(|p| classify_reality_with(&p, zc));
            (y, z, c)
        })
        .collect();
    for (y, z, c) in cells {
        let c = c.map_err(|e| CliError::Usage(e.to_string()))?;
        table.push(vec![
            "grid".into(),
            y.into(),
            z.into(),
            c.all_real.into(),
            Cell::Int(c.binding.index() as i64),
        ]);
    }
    let mut report = Report::new(table);
    report.residuals.insert("z_crit".into(), zc);
    Ok(report)
}

pub fn cmd_curves(cfg: &RunConfig) -> Result<Report, CliError> {
    let params = cfg.params()?;
    let mut table = Table::new(vec!["curve", "sigma", "s", "t", "residual"]);
    let mut s_grid: Vec<f64> = (1..=cfg.samples)
        .map(|i| cfg.s_max * i as f64 / cfg.samples as f64)
        .collect();
    // The ovals close on the axis at multiples of π/2.
    let mut k = 1;
    while k as f64 * FRAC_PI_2 <= cfg.s_max {
        s_grid.push(k as f64 * FRAC_PI_2);
        k += 1;
    }
    s_grid.sort_by(f64::total_cmp);
    s_grid.dedup();
    let mut worst: f64 = 0.0;
    for &s in &s_grid {
        if let Some(t) = oval_t(s) {
            let ts: &[f64] = if t == 0.0 { &[0.0] } else { &[t, -t] };
            for &t in ts {
                let f = secular_f(s, t);
                worst = worst.max(f.abs());
                table.push(vec!["oval".into(), Cell::Empty, s.into(), t.into(), f.into()]);
            }
        }
    }
    for sigma in Sigma::ALL {
        let z_eff = sigma.z_eff(&params);
        for &s in &s_grid {
            let t = z_eff / (2.0 * s);
            table.push(vec![
                "hyperbola".into(),
                Cell::Int(sigma.index() as i64),
                s.into(),
                t.into(),
                (2.0 * s * t - z_eff).into(),
            ]);
        }
    }
    let mut report = Report::new(table);
    report.residuals.insert("max_oval_secular".into(), worst);
    Ok(report)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Report, CliError> {
    let params = cfg.params()?;
    let usage = |e: VerifierError| CliError::Usage(e.to_string());
    let h = build_hamiltonian(&params, cfg.grid_n).map_err(usage)?;
    let ops = build_parity_ops(cfg.grid_n).map_err(usage)?;
    let r = identity_residuals(&h, &ops);
    let mut table = Table::new(vec!["identity", "value", "requirement", "pass"]);
    let mut failures = Vec::new();
    let mut check = |name: &str, value: f64, requirement: &str, pass: bool| {
        if !pass {
            failures.push(format!("{name} = {value:e}"));
        }
        table.push(vec![name.into(), value.into(), requirement.into(), pass.into()]);
    };
    let tol = cfg.tol;
    let le = format!("<= {tol:e}");
    for (name, value) in r.residuals() {
        check(name, value, &le, value <= tol);
    }
    check("parity_asymmetry", r.parity_asymmetry, ">= 1", r.parity_asymmetry >= 1.0);
    check("involution_distance", r.involution_distance, ">= 1", r.involution_distance >= 1.0);
    check("cube_is_block_parity", r.cube_is_block_parity as u8 as f64, "exact", r.cube_is_block_parity);
    check("adjoint_inverse_is_p", r.adjoint_inverse_is_p as u8 as f64, "exact", r.adjoint_inverse_is_p);
    check("s_is_channel_rotation", r.s_is_channel_rotation as u8 as f64, "exact", r.s_is_channel_rotation);
    check(
        "max_parity_eigen_imag",
        r.max_parity_eigen_imag,
        ">= 0.5",
        r.max_parity_eigen_imag >= 0.5,
    );
    let mut report = Report::new(table);
    for (name, value) in r.residuals() {
        report.residuals.insert(name.into(), value);
    }
    report.notes.push(format!(
        "|P - P^-2| = {} (not an identity: the two differ by the reflection)",
        r.p_minus_inverse_square
    ));
    if !failures.is_empty() {
        report.problem = Some(CliError::IdentityViolation(failures.join(", ")));
    }
    Ok(report)
}

pub fn cmd_wavefunction(cfg: &RunConfig) -> Result<Report, CliError> {
    let params = cfg.params()?;
    let sigma = cfg.sigma();
    let roots = find_roots(&params, sigma, cfg.n).map_err(|e| match e {
        SpectrumError::ComplexPair { sigma, .. } => CliError::ComplexSpectrum(format!(
            "{e}, violating {}",
            violated_edge(sigma, sigma.z_eff(&params))
        )),
        other => CliError::NoConvergence(other.to_string()),
    })?;
    let root = roots
        .into_iter()
        .find(|r| r.n == cfg.n)
        .ok_or_else(|| CliError::NoConvergence(format!("level {} not found", cfg.n)))?;
    let state = assemble_state(&params, root).map_err(|e| CliError::NoConvergence(e.to_string()))?;
    let samples = sample_wavefunction(&state, cfg.samples).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut table = Table::new(vec!["x", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c"]);
    for p in &samples {
        let mut row = vec![Cell::Float(p.x)];
        for c in p.phi {
            row.push(c.re.into());
            row.push(c.im.into());
        }
        table.push(row);
    }
    let mut report = Report::new(table);
    report.residuals.insert("matching".into(), state.matching_residual);
    report.residuals.insert("determinant".into(), state.determinant.norm());
    report.notes.push(format!(
        "n = {}, sigma = {}, s = {}, t = {}, E = {}",
        root.n, sigma, root.s, root.t, root.energy
    ));
    Ok(report)
}
