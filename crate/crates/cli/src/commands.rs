use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use opo_core::classical::{
    bifurcation_diagram, classify_branch, injection_for_intensity, locate_hopf, newton_fixed_point,
    special_points, steady_intensities, symmetric_fixed_point, symmetric_steady_states, BranchLabel,
    DiagramOptions, SteadyState,
};
use opo_core::oracle::{
    estimate_covariance, estimate_quadrature_spectrum, moment_check, simulate_ensemble, OracleOptions,
};
use opo_core::quantum::{
    entanglement_at_fixed_point, projected_symmetric_spectrum, spectrum_at_special_point,
    symmetric_quadrature_spectrum, Quadrature, SpecialPoint, SpectrumValue, SymmetricMode,
};
use opo_core::validate::{run_all, ValidationConfig};
use opo_core::{Error, PhaseSpaceState, SystemParams, C64};

use crate::args::{
    linspace, BifurcationArgs, Engine, EntanglementArgs, OracleArgs, PointArg, SpectraArgs, ValidateArgs,
};
use crate::error::CliError;
use crate::output::{emit, write_bytes, RunContext, Table};
use crate::rows::{BifurcationRow, EntanglementRow, OracleRow, SpectraRow};

fn tag(label: &BranchLabel) -> &'static str {
    match (label.p1_unstable, label.p2_unstable) {
        (false, false) => "none",
        (true, false) => "P1",
        (false, true) => "P2",
        (true, true) => "P1+P2",
    }
}

fn symmetric_delta(d: &crate::args::DetuningArgs) -> Result<f64, CliError> {
    match d.pair() {
        None => Ok(0.0),
        Some((s, i)) if (s + i).abs() <= 1e-12 * s.abs().max(1.0) => Ok(s),
        Some((s, i)) => Err(CliError::Usage(format!(
            "bifurcation needs the symmetric configuration delta_i = -delta_s (got {s}, {i})"
        ))),
    }
}

pub fn bifurcation(ctx: &RunContext, a: &BifurcationArgs) -> Result<(), CliError> {
    let delta = symmetric_delta(&a.detuning)?;
    SystemParams::symmetric(a.sigma, delta, 0.0)?;
    if !(a.i_max > 0.0) || a.points < 2 {
        return Err(CliError::Usage("need --i-max > 0 and --points >= 2".into()));
    }
    let grid = linspace(0.0, a.i_max, a.points);
    let opts = DiagramOptions {
        orbit_samples: a.orbits,
        asymmetric_samples: a.asymmetric_samples,
        ..DiagramOptions::default()
    };
    let d = bifurcation_diagram(a.sigma, delta, &grid, &opts)?;
    let (sigma, delta) = (d.sigma, d.delta);
    let special_row = |kind: &str, i: f64, omega: Option<f64>| {
        let label = classify_branch(i, sigma, delta);
        BifurcationRow {
            kind: kind.into(),
            injection: injection_for_intensity(i, sigma, delta),
            intensity: i,
            idler_intensity: None,
            stability: label.stability.label().into(),
            branch_tag: tag(&label).into(),
            omega,
        }
    };
    let mut rows: Vec<BifurcationRow> = d
        .branch
        .iter()
        .map(|b| BifurcationRow {
            kind: "branch".into(),
            injection: b.injection,
            intensity: b.intensity,
            idler_intensity: None,
            stability: b.label.stability.label().into(),
            branch_tag: tag(&b.label).into(),
            omega: None,
        })
        .collect();
    if let Some((lo, hi)) = d.special.turning {
        rows.push(special_row("fold-", lo, None));
        rows.push(special_row("fold+", hi, None));
    }
    rows.push(special_row("pb", d.special.pitchfork, None));
    if let Some((i, w)) = d.special.hopf {
        rows.push(special_row("hb", i, Some(w)));
    }
    rows.extend(d.orbits.iter().map(|o| BifurcationRow {
        kind: "orbit".into(),
        injection: o.injection,
        intensity: o.mean_intensity,
        idler_intensity: None,
        stability: "stable".into(),
        branch_tag: "orbit".into(),
        omega: Some(std::f64::consts::TAU / o.period),
    }));
    rows.extend(d.asymmetric.iter().map(|r| BifurcationRow {
        kind: "asymmetric".into(),
        injection: r.injection,
        intensity: r.signal_intensity,
        idler_intensity: Some(r.idler_intensity),
        stability: "stable".into(),
        branch_tag: "asymmetric".into(),
        omega: None,
    }));
    let extra = json!({
        "special_points": d.special,
        "locking_injection": d.locking_injection,
    });
    emit(
        ctx,
        a,
        a.output.out.as_deref(),
        a.output.format,
        Table {
            rows,
            provenance: "closed-form symmetric branch; orbits and asymmetric states by long-time integration".into(),
            seed: None,
            extra,
        },
    )
}

fn parse_modes(raw: &[String]) -> Result<Vec<SymmetricMode>, CliError> {
    raw.iter()
        .map(|m| {
            SymmetricMode::parse(m).ok_or_else(|| {
                CliError::Usage(format!("unknown mode {m}; use phi+pi/4, phi-pi/4, phi-psi+ or phi-psi-"))
            })
        })
        .collect()
}

fn parse_quadratures(raw: &[String]) -> Result<Vec<Quadrature>, CliError> {
    if raw.is_empty() {
        return Ok(vec![Quadrature::X, Quadrature::Y]);
    }
    raw.iter()
        .map(|q| Quadrature::parse(q).ok_or_else(|| CliError::Usage(format!("unknown quadrature {q}; use X or Y"))))
        .collect()
}

fn default_modes(intensity: f64, delta: f64) -> Vec<SymmetricMode> {
    SymmetricMode::ALL
        .into_iter()
        .filter(|m| !m.needs_upper_branch() || intensity > delta)
        .collect()
}

pub fn spectra(ctx: &RunContext, a: &SpectraArgs) -> Result<(), CliError> {
    let (sigma, delta) = (a.sigma, a.delta);
    SystemParams::symmetric(sigma, delta, 0.0)?;
    if delta < 0.0 {
        return Err(CliError::Usage("--delta must be non-negative".into()));
    }
    let omegas = a.omega.grid();
    if omegas.is_empty() {
        return Err(CliError::Usage("--omega-points must be at least 1".into()));
    }
    let quads = parse_quadratures(&a.quadrature)?;
    let user_modes = parse_modes(&a.mode)?;

    // (label, intensity, modes, closed-form overrides at zero frequency)
    let mut points: Vec<(String, f64, Vec<SymmetricMode>, Vec<(SymmetricMode, Quadrature, SpectrumValue)>)> = Vec::new();
    if let Some(p) = a.at {
        let sp = match p {
            PointArg::Hb => SpecialPoint::Hopf,
            PointArg::Pb => SpecialPoint::Pitchfork,
            PointArg::FoldPlus => SpecialPoint::FoldUpper,
        };
        let (i, list) = spectrum_at_special_point(sp, sigma, delta)?;
        let mut modes: Vec<SymmetricMode> = Vec::new();
        for l in &list {
            if !modes.contains(&l.mode) {
                modes.push(l.mode);
            }
        }
        let overrides = list.iter().map(|l| (l.mode, l.quadrature, l.value)).collect();
        points.push((sp.label().into(), i, modes, overrides));
    } else if let Some(i) = a.intensity {
        points.push(("intensity".into(), i, default_modes(i, delta), Vec::new()));
    } else if let Some(inj) = a.injection {
        let stable: Vec<f64> = steady_intensities(sigma, delta, inj)
            .into_iter()
            .filter(|&i| classify_branch(i, sigma, delta).stability.is_stable())
            .collect();
        if stable.is_empty() {
            return Err(Error::PointAbsent(format!("no stable locked state at injection {inj}")).into());
        }
        for i in stable {
            points.push(("injection".into(), i, default_modes(i, delta), Vec::new()));
        }
    } else {
        return Err(CliError::Usage("give one of --at, --injection or --intensity".into()));
    }

    let mut rows = Vec::new();
    for (label, i, modes, overrides) in &points {
        let modes = if user_modes.is_empty() { modes.clone() } else { user_modes.clone() };
        for &omega in &omegas {
            for &mode in &modes {
                for &quad in &quads {
                    let forced = overrides
                        .iter()
                        .find(|(m, q, _)| *m == mode && *q == quad)
                        .map(|o| o.2)
                        .filter(|_| omega == 0.0);
                    let v = match (forced, a.engine) {
                        (Some(v), Engine::ClosedForm) => v,
                        (Some(SpectrumValue::Infinite), Engine::Projection) => SpectrumValue::Infinite,
                        (_, Engine::ClosedForm) => symmetric_quadrature_spectrum(sigma, delta, *i, mode, quad, omega)?,
                        (_, Engine::Projection) => SpectrumValue::Finite(projected_symmetric_spectrum(
                            sigma,
                            delta,
                            *i,
                            mode,
                            quad,
                            omega,
                            SystemParams::DEFAULT_G,
                        )?),
                    };
                    rows.push(SpectraRow {
                        sigma,
                        delta,
                        point: label.clone(),
                        intensity: *i,
                        mode: mode.label().into(),
                        quadrature: quad.label().into(),
                        omega,
                        v,
                    });
                }
            }
        }
    }
    let provenance = match a.engine {
        Engine::ClosedForm => "closed-form symmetric spectra",
        Engine::Projection => "eigenvector projection of the linearized fluctuations",
    };
    emit(
        ctx,
        a,
        a.output.out.as_deref(),
        a.output.format,
        Table {
            rows,
            provenance: provenance.into(),
            seed: None,
            extra: json!({}),
        },
    )
}

fn sigma_list(a: &EntanglementArgs) -> Result<Vec<f64>, CliError> {
    match (a.sigma.is_empty(), a.sigma_min, a.sigma_max) {
        (false, None, None) => Ok(a.sigma.clone()),
        (true, Some(lo), Some(hi)) if a.sigma_points >= 1 => Ok(linspace(lo, hi, a.sigma_points)),
        _ => Err(CliError::Usage(
            "give --sigma values or --sigma-min and --sigma-max (with --sigma-points >= 1)".into(),
        )),
    }
}

fn entanglement_row(sigma: f64, a: &EntanglementArgs) -> Result<EntanglementRow, Error> {
    let (ds, di) = if a.asymmetric {
        (1.5 * a.delta, -0.5 * a.delta)
    } else {
        (a.delta, -a.delta)
    };
    let base = SystemParams::new(sigma, ds, di, 0.0)?;
    let (params, fp): (SystemParams, SteadyState) = if a.asymmetric {
        let h = locate_hopf(&base, None)?;
        (base.with_injection(h.injection)?, h.fixed_point)
    } else {
        let (i, _) = special_points(sigma, a.delta)
            .hopf
            .ok_or_else(|| Error::PointAbsent(format!("no Hopf point at sigma = {sigma}, delta = {}", a.delta)))?;
        let inj = injection_for_intensity(i, sigma, a.delta);
        (base.with_injection(inj)?, symmetric_fixed_point(i, sigma, a.delta))
    };
    let r = entanglement_at_fixed_point(&params, fp.signal, fp.idler, a.omega)?;
    Ok(EntanglementRow {
        sigma,
        delta_s: ds,
        delta_i: di,
        injection_at_hopf: params.injection,
        intensity_signal: fp.signal.norm_sqr(),
        intensity_idler: fp.idler.norm_sqr(),
        omega: a.omega,
        nu_minus: r.nu_minus,
        log_negativity: r.log_negativity,
        duan_sum: r.duan_sum.unwrap_or(f64::NAN),
    })
}

pub fn entanglement(ctx: &RunContext, a: &EntanglementArgs) -> Result<(), CliError> {
    if !(a.delta >= 0.0) {
        return Err(CliError::Usage("--delta must be non-negative".into()));
    }
    let sigmas = sigma_list(a)?;
    let results: Vec<Result<EntanglementRow, Error>> = sigmas.par_iter().map(|&s| entanglement_row(s, a)).collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (s, r) in sigmas.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e @ (Error::PointAbsent(_) | Error::NoHopfInBracket(_))) => {
                eprintln!("sigma = {s}: skipped ({e})");
                skipped.push(json!({"sigma": s, "reason": e.to_string()}));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if rows.is_empty() {
        return Err(Error::PointAbsent("no Hopf point for any requested sigma".into()).into());
    }
    let provenance = if a.asymmetric {
        "numerically located Hopf point; covariance from the eigenvector projection"
    } else {
        "closed-form Hopf point; covariance from the eigenvector projection"
    };
    emit(
        ctx,
        a,
        a.output.out.as_deref(),
        a.output.format,
        Table {
            rows,
            provenance: provenance.into(),
            seed: None,
            extra: json!({ "skipped": skipped }),
        },
    )
}

/// Stable start point for the oracle, at `theta0 = 0`.
fn oracle_start(params: &SystemParams) -> Result<PhaseSpaceState, Error> {
    let vacuum = PhaseSpaceState::classical(C64::default(), C64::default());
    if params.injection == 0.0 && params.sigma < 1.0 {
        return Ok(vacuum);
    }
    let fp = if params.is_symmetric() {
        symmetric_steady_states(params)?
            .into_iter()
            .find(|s| s.stability.is_stable())
    } else {
        let delta = params.mean_detuning().abs();
        steady_intensities(params.sigma, delta, params.injection)
            .into_iter()
            .filter_map(|i| {
                let proxy = symmetric_fixed_point(i, params.sigma, delta);
                newton_fixed_point(params, (proxy.signal, proxy.idler)).ok()
            })
            .find(|s| s.stability.is_stable())
    };
    let fp = fp.ok_or_else(|| {
        Error::PointAbsent(format!(
            "no stable steady state at sigma = {}, injection = {}",
            params.sigma, params.injection
        ))
    })?;
    Ok(if params.adiabatic {
        PhaseSpaceState::classical(fp.signal, fp.idler)
    } else {
        PhaseSpaceState::classical_with_pump(fp.pump, fp.signal, fp.idler)
    })
}

pub fn oracle(ctx: &RunContext, a: &OracleArgs) -> Result<(), CliError> {
    let (ds, di) = a.detuning.pair().unwrap_or((0.0, 0.0));
    let mut params = SystemParams::new(a.sigma, ds, di, a.injection)?
        .with_g(a.g)?
        .with_polarization(FRAC_PI_4, a.theta0)?;
    if let Some(k) = a.kappa {
        params = params.with_kappa(k)?.with_adiabatic(false);
    }
    let start = oracle_start(&params)?;
    let phi = if start.signal.norm() > 0.0 { start.signal.arg() } else { 0.0 };
    let theta = match a.theta {
        Some(t) => t,
        None => {
            let offset = match SymmetricMode::parse(&a.mode) {
                Some(SymmetricMode::PlusQuarter) => FRAC_PI_4,
                Some(SymmetricMode::MinusQuarter) => -FRAC_PI_4,
                _ => return Err(CliError::Usage(format!("--mode must be phi+pi/4 or phi-pi/4 (got {})", a.mode))),
            };
            phi + offset + a.theta0
        }
    };
    let psi = match a.psi {
        Some(p) => p,
        None => Quadrature::parse(&a.quadrature)
            .ok_or_else(|| CliError::Usage(format!("unknown quadrature {}; use X or Y", a.quadrature)))?
            .psi(),
    };
    let omegas = a.omega.grid();
    if omegas.is_empty() {
        return Err(CliError::Usage("--omega-points must be at least 1".into()));
    }
    let opts = OracleOptions {
        dt: a.dt,
        horizon: a.t_max,
        transient: a.transient,
        trajectories: a.trajectories as usize,
        seed: a.seed,
        segment_len: a.segment_len,
        sample_every: a.sample_every,
        omegas: omegas.clone(),
        ..OracleOptions::default()
    };
    let run = simulate_ensemble(&params, &start, &opts)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    let est = estimate_quadrature_spectrum(&run, theta, psi, &omegas)?;
    let moments = moment_check(&run)?;
    if !moments.passed {
        eprintln!("warning: moment check flags a bias of the ensemble means (see manifest)");
    }
    let cov = estimate_covariance(&run, omegas[0])?;
    let rows: Vec<OracleRow> = (0..est.values.len())
        .map(|k| OracleRow {
            theta,
            psi,
            omega: est.omegas[k],
            v: est.values[k],
            std_error: est.std_errors[k],
            n_trajectories: est.n_trajectories,
            n_segments: est.n_segments,
        })
        .collect();
    let extra = json!({
        "params": params,
        "start": start,
        "transient": run.transient,
        "diverged": run.diverged(),
        "divergence_fraction": run.divergence_fraction(),
        "warnings": run.warnings,
        "moment_check": moments,
        "covariance": cov,
    });
    emit(
        ctx,
        a,
        a.output.out.as_deref(),
        a.output.format,
        Table {
            rows,
            provenance: "positive-P Euler-Maruyama ensemble, Welch periodogram".into(),
            seed: Some(a.seed),
            extra,
        },
    )
}

fn parse_perturbation(s: &str) -> Result<(usize, usize, f64), CliError> {
    let bad = || CliError::Usage(format!("--perturb-jacobian expects ROW,COL,EPS (got {s})"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [r, c, e] = parts.as_slice() else {
        return Err(bad());
    };
    let (r, c) = (r.parse::<usize>().map_err(|_| bad())?, c.parse::<usize>().map_err(|_| bad())?);
    if r > 3 || c > 3 {
        return Err(bad());
    }
    Ok((r, c, e.parse().map_err(|_| bad())?))
}

pub fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let config = ValidationConfig {
        seed: a.seed,
        jacobian_perturbation: a.perturb_jacobian.as_deref().map(parse_perturbation).transpose()?,
        physicality_points: a.physicality_points,
        ..ValidationConfig::default()
    };
    let report = run_all(&config);
    for s in &report.suites {
        eprintln!(
            "{:<26} {:<4} checks={:<5} failures={:<4} worst={:.3e} tol={:.1e}",
            s.name,
            if s.passed { "PASS" } else { "FAIL" },
            s.checks,
            s.failures,
            s.worst,
            s.tolerance
        );
    }
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    write_bytes(a.out.as_deref().map(Path::new), &bytes)?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.suites.iter().filter(|s| !s.passed).map(|s| s.name.as_str()).collect();
        Err(CliError::ValidationFailed(failed.join(", ")))
    }
}
