use crate::output::{nearest_fraction, Artifact, Format, Value};
use crate::{
    Cli, Command, CommonArgs, FormatArg, KernelArg, MomentRuleArg, PotentialArg, RuleArg, Units,
};
use phasespace::density::{
    cohen_kernel_factorized, cohen_transform, default_kernel_grids, density_factorized,
    density_wigner, CohenKernel, PhaseSpaceDensity,
};
use phasespace::dynamics::{run_trajectory, TrajectoryRecord};
use phasespace::moments::{
    moment_phase_space, moment_rule_a, table1, table1_reference, MomentResult,
};
use phasespace::states::{
    default_momentum_grid, default_position_grid, gaussian_packet, ho_eigenstate,
    momentum_transform, MomentumWaveFunction, OscillatorParams, WaveFunction,
};
use phasespace::verify::run_checks;
use phasespace::{Error, Grid1D, Potential};
use std::fs::File;
use std::io::{self, BufWriter, Write};

#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Numerical(String),
    Io(io::Error),
}

impl From<Error> for CmdError {
    fn from(err: Error) -> Self {
        match err {
            Error::Parameter(msg) => CmdError::Usage(msg),
            other => CmdError::Numerical(other.to_string()),
        }
    }
}

impl From<io::Error> for CmdError {
    fn from(err: io::Error) -> Self {
        CmdError::Io(err)
    }
}

type CmdResult = Result<(), CmdError>;

pub fn run(cli: Cli) -> CmdResult {
    let params = resolve_params(&cli.common)?;
    match &cli.command {
        Command::Table1 { nmax } => cmd_table1(*nmax, &params, &cli.common),
        Command::Grid { rule, n, nx, np, lx, lp, kernel } => {
            cmd_grid(*rule, *n, *nx, *np, *lx, *lp, *kernel, &params, &cli.common)
        }
        Command::Moments { n, x0, p0, sigma, nx, mp, rule } => {
            let state = state_spec(*n, *x0, *p0, *sigma, &params);
            cmd_moments(state, *nx, *mp, *rule, &params, &cli.common)
        }
        Command::Ehrenfest {
            potential,
            lambda,
            x0,
            p0,
            sigma,
            dt,
            tmax,
            steps,
            lx,
            npoints,
        } => cmd_ehrenfest(
            *potential, *lambda, *x0, *p0, *sigma, *dt, *tmax, *steps, *lx, *npoints, &params,
            &cli.common,
        ),
        Command::Cohen {
            n,
            x0,
            p0,
            sigma,
            kernel,
            epsilon,
            coverage_min,
            ntheta,
            ntau,
        } => {
            let state = state_spec(*n, *x0, *p0, *sigma, &params);
            cmd_cohen(
                state, *kernel, *epsilon, *coverage_min, *ntheta, *ntau, &params, &cli.common,
            )
        }
        Command::Verify { only } => cmd_verify(only.as_deref(), &cli.common),
    }
}

fn resolve_params(common: &CommonArgs) -> Result<OscillatorParams, CmdError> {
    match common.units {
        Units::Natural => {
            for (flag, value) in [("--m", common.m), ("--omega", common.omega), ("--hbar", common.hbar)] {
                if value.is_some() {
                    return Err(CmdError::Usage(format!(
                        "{flag} requires --units explicit"
                    )));
                }
            }
            Ok(OscillatorParams::natural())
        }
        Units::Explicit => {
            let mut missing = Vec::new();
            if common.m.is_none() {
                missing.push("--m");
            }
            if common.omega.is_none() {
                missing.push("--omega");
            }
            if common.hbar.is_none() {
                missing.push("--hbar");
            }
            if !missing.is_empty() {
                return Err(CmdError::Usage(format!(
                    "--units explicit requires {}",
                    missing.join(", ")
                )));
            }
            OscillatorParams::new(
                common.m.unwrap(),
                common.omega.unwrap(),
                common.hbar.unwrap(),
            )
            .map_err(CmdError::from)
        }
    }
}

fn push_unit_meta(artifact: &mut Artifact, params: &OscillatorParams, common: &CommonArgs) {
    artifact.push_meta(
        "units",
        match common.units {
            Units::Natural => "natural",
            Units::Explicit => "explicit",
        },
    );
    artifact.push_meta_float("m", params.mass());
    artifact.push_meta_float("omega", params.omega());
    artifact.push_meta_float("hbar", params.hbar());
}

fn write_artifact(artifact: &Artifact, common: &CommonArgs) -> CmdResult {
    let format = match common.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    match &common.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            artifact.write(format, &mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut handle = stdout.lock();
            artifact.write(format, &mut handle)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// table1

fn cmd_table1(nmax: u32, params: &OscillatorParams, common: &CommonArgs) -> CmdResult {
    if nmax > 10 {
        return Err(CmdError::Usage(format!("--nmax must be <= 10, got {nmax}")));
    }
    let tol = common.tol.unwrap_or(1e-8);
    if !(tol > 0.0) {
        return Err(CmdError::Usage(format!("--tol must be positive, got {tol}")));
    }
    let rows = table1(nmax, params)?;

    let mut artifact = Artifact::new("table1");
    push_unit_meta(&mut artifact, params, common);
    artifact.push_meta("nmax", nmax);
    artifact.push_meta_float("tol", tol);

    let natural = common.units == Units::Natural;
    let mut max_dev = 0.0f64;
    if natural {
        for row in &rows {
            let want = table1_reference(row.n);
            for (got, expect) in [
                (row.ebar, want.ebar),
                (row.x2bar, want.x2bar),
                (row.dxdp, want.dxdp),
                (row.x4bar, want.x4bar),
                (row.x2p2_a, want.x2p2_a),
                (row.x2p2_b, want.x2p2_b),
                (row.de2_a, want.de2_a),
                (row.de2_b, want.de2_b),
            ] {
                max_dev = max_dev.max((got - expect).abs());
            }
        }
        artifact.push_meta("reference", "exact-fractions");
        artifact.push_meta_float("max_abs_deviation", max_dev);
    } else {
        artifact.push_meta("reference", "skipped (fractions presume natural units)");
    }

    let names = ["Ebar", "x2bar", "dxdp", "x4bar", "x2p2_A", "x2p2_B", "dE2_A", "dE2_B"];
    let mut columns = vec!["n".to_string()];
    for name in names {
        columns.push(name.to_string());
        columns.push(format!("{name}_frac"));
    }
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    artifact.set_columns(&column_refs);
    for row in &rows {
        let values = [
            row.ebar, row.x2bar, row.dxdp, row.x4bar, row.x2p2_a, row.x2p2_b, row.de2_a,
            row.de2_b,
        ];
        let mut out = vec![Value::Int(row.n as i64)];
        for v in values {
            out.push(Value::Float(v));
            out.push(Value::Text(nearest_fraction(v, 8).0));
        }
        artifact.push_row(out);
    }
    write_artifact(&artifact, common)?;
    if natural && max_dev > tol {
        return Err(CmdError::Numerical(format!(
            "max deviation {max_dev:.3e} from the exact fractions exceeds tol {tol:.3e}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// grid

#[allow(clippy::too_many_arguments)]
fn cmd_grid(
    rule: RuleArg,
    n: u32,
    nx: usize,
    np: usize,
    lx: Option<f64>,
    lp: Option<f64>,
    kernel: KernelArg,
    params: &OscillatorParams,
    common: &CommonArgs,
) -> CmdResult {
    if n > 20 {
        return Err(CmdError::Usage(format!("--n must be <= 20, got {n}")));
    }
    if nx < 16 || np < 16 {
        return Err(CmdError::Usage(
            "--nx and --np must be at least 16".to_string(),
        ));
    }
    if rule == RuleArg::Cohen && n > 4 {
        return Err(CmdError::Usage(format!(
            "--rule cohen supports --n <= 4 (kernel window limitation), got {n}"
        )));
    }
    let lx = lx.unwrap_or_else(|| default_position_grid(n, params).max());
    let lp = lp.unwrap_or_else(|| default_momentum_grid(n, params).max());
    if !(lx > 0.0) || !(lp > 0.0) {
        return Err(CmdError::Usage("--lx and --lp must be positive".to_string()));
    }
    let xgrid = Grid1D::symmetric(lx, nx)?;
    let pgrid = Grid1D::symmetric(lp, np)?;
    let psi = ho_eigenstate(n, params, &xgrid, 0.0)?;

    let density: PhaseSpaceDensity = match rule {
        RuleArg::A => {
            let phi = momentum_transform(&psi, &pgrid)?;
            density_factorized(&psi, &phi)?
        }
        RuleArg::B => density_wigner(&psi, &pgrid)?,
        RuleArg::Cohen => {
            // the kernel and ambiguity integrals need a well-resolved state;
            // the requested (nx, np) only set the emitted window
            let fine = ho_eigenstate(n, params, &default_position_grid(n, params), 0.0)?;
            let (tg, ug) = default_kernel_grids(params);
            let kernel = match kernel {
                KernelArg::A2 => cohen_kernel_factorized(&fine, &tg, &ug, 1e-8)?,
                KernelArg::Unity => CohenKernel::unity(tg, ug),
            };
            phasespace::density::cohen_distribution(&fine, &kernel, &xgrid, &pgrid)?
        }
    };

    let mut artifact = Artifact::new("grid");
    push_unit_meta(&mut artifact, params, common);
    artifact.push_meta("rule", density.rule());
    artifact.push_meta("n", n);
    artifact.push_meta("nx", nx);
    artifact.push_meta("np", np);
    artifact.push_meta_float("lx", lx);
    artifact.push_meta_float("lp", lp);
    artifact.push_meta_float("normalization", density.normalization());
    artifact.push_meta_float("min", density.min_value());
    artifact.push_meta_float("max", density.max_value());
    artifact.set_columns(&["x", "p", "F"]);
    for i in 0..nx {
        for j in 0..np {
            artifact.push_row(vec![
                Value::Float(xgrid.point(i)),
                Value::Float(pgrid.point(j)),
                Value::Float(density.values()[[i, j]]),
            ]);
        }
    }
    write_artifact(&artifact, common)
}

// ---------------------------------------------------------------------------
// moments

enum StateSpec {
    Eigen(u32),
    Packet { x0: f64, p0: f64, sigma: f64 },
}

fn state_spec(
    n: u32,
    x0: Option<f64>,
    p0: Option<f64>,
    sigma: Option<f64>,
    params: &OscillatorParams,
) -> StateSpec {
    if x0.is_none() && p0.is_none() && sigma.is_none() {
        StateSpec::Eigen(n)
    } else {
        let coherent = (params.hbar() / (2.0 * params.mass() * params.omega())).sqrt();
        StateSpec::Packet {
            x0: x0.unwrap_or(0.0),
            p0: p0.unwrap_or(0.0),
            sigma: sigma.unwrap_or(coherent),
        }
    }
}

fn build_state(
    spec: &StateSpec,
    params: &OscillatorParams,
) -> Result<(WaveFunction, MomentumWaveFunction), CmdError> {
    match spec {
        StateSpec::Eigen(n) => {
            if *n > 20 {
                return Err(CmdError::Usage(format!("--n must be <= 20, got {n}")));
            }
            let grid = default_position_grid(*n, params);
            let psi = ho_eigenstate(*n, params, &grid, 0.0)?;
            let phi = momentum_transform(&psi, &default_momentum_grid(*n, params))?;
            Ok((psi, phi))
        }
        StateSpec::Packet { x0, p0, sigma } => {
            if !(*sigma > 0.0) {
                return Err(CmdError::Usage(format!(
                    "--sigma must be positive, got {sigma}"
                )));
            }
            let alpha = params.alpha();
            let half = (x0.abs() + 10.0 * sigma).max(6.9 / alpha);
            let grid = Grid1D::symmetric(half, 1025)?;
            let psi = gaussian_packet(*x0, *p0, *sigma, params, &grid)?;
            let phalf = p0.abs() + 6.0 * params.hbar() / sigma;
            let pgrid = Grid1D::symmetric(phalf, 1025)?;
            let phi = momentum_transform(&psi, &pgrid)?;
            Ok((psi, phi))
        }
    }
}

fn describe_state(spec: &StateSpec, artifact: &mut Artifact) {
    match spec {
        StateSpec::Eigen(n) => {
            artifact.push_meta("state", format!("eigenstate n={n}"));
        }
        StateSpec::Packet { x0, p0, sigma } => {
            artifact.push_meta(
                "state",
                format!("gaussian packet x0={x0} p0={p0} sigma={sigma}"),
            );
        }
    }
}

fn moment_row(result: &MomentResult) -> Vec<Value> {
    let rule = match result.rule {
        phasespace::moments::MomentRule::A => "A",
        phasespace::moments::MomentRule::B => "B",
        phasespace::moments::MomentRule::Lateral => "lateral",
    };
    let method = match result.method {
        phasespace::moments::MomentMethod::Quadrature2D => "quadrature-2d",
        phasespace::moments::MomentMethod::Factorized1D => "factorized-1d",
        phasespace::moments::MomentMethod::ClosedForm => "closed-form",
        phasespace::moments::MomentMethod::FiniteDifference => "finite-difference",
    };
    vec![
        Value::Text(rule.to_string()),
        Value::Int(result.n_x as i64),
        Value::Int(result.m_p as i64),
        Value::Float(result.value),
        Value::Float(result.est_error),
        Value::Text(method.to_string()),
    ]
}

fn cmd_moments(
    spec: StateSpec,
    nx: u32,
    mp: u32,
    rule: MomentRuleArg,
    params: &OscillatorParams,
    common: &CommonArgs,
) -> CmdResult {
    if nx + mp > 8 {
        return Err(CmdError::Usage(format!(
            "--nx + --mp must be <= 8 (grid accuracy bound), got {nx}+{mp}"
        )));
    }
    let (psi, phi) = build_state(&spec, params)?;
    let mut artifact = Artifact::new("moments");
    push_unit_meta(&mut artifact, params, common);
    describe_state(&spec, &mut artifact);
    artifact.push_meta("nx", nx);
    artifact.push_meta("mp", mp);
    artifact.set_columns(&["rule", "n_x", "m_p", "value", "est_error", "method"]);
    if matches!(rule, MomentRuleArg::A | MomentRuleArg::Both) {
        artifact.push_row(moment_row(&moment_rule_a(&psi, &phi, nx, mp)));
    }
    if matches!(rule, MomentRuleArg::B | MomentRuleArg::Both) {
        let pgrid = Grid1D::symmetric(phi.grid().max(), 241)?;
        let density = density_wigner(&psi, &pgrid)?;
        artifact.push_row(moment_row(&moment_phase_space(&density, nx, mp)?));
    }
    write_artifact(&artifact, common)
}

// ---------------------------------------------------------------------------
// ehrenfest

#[allow(clippy::too_many_arguments)]
fn cmd_ehrenfest(
    potential: PotentialArg,
    lambda: f64,
    x0: f64,
    p0: f64,
    sigma: Option<f64>,
    dt: f64,
    tmax: Option<f64>,
    steps: Option<usize>,
    lx: Option<f64>,
    npoints: usize,
    params: &OscillatorParams,
    common: &CommonArgs,
) -> CmdResult {
    if !(dt > 0.0) {
        return Err(CmdError::Usage(format!("--dt must be positive, got {dt}")));
    }
    let steps = match (steps, tmax) {
        (Some(s), _) => s,
        (None, Some(t)) => {
            if !(t > 0.0) {
                return Err(CmdError::Usage(format!("--tmax must be positive, got {t}")));
            }
            (t / dt).round() as usize
        }
        (None, None) => {
            return Err(CmdError::Usage("give --tmax or --steps".to_string()));
        }
    };
    if steps < 5 {
        return Err(CmdError::Usage(format!(
            "need at least 5 steps for the residual stencils, got {steps}"
        )));
    }
    if npoints < 64 {
        return Err(CmdError::Usage(format!(
            "--npoints must be at least 64, got {npoints}"
        )));
    }
    let coherent = (params.hbar() / (2.0 * params.mass() * params.omega())).sqrt();
    let sigma = sigma.unwrap_or(coherent);
    if !(sigma > 0.0) {
        return Err(CmdError::Usage(format!("--sigma must be positive, got {sigma}")));
    }
    let pot = match potential {
        PotentialArg::Harmonic => Potential::Harmonic {
            mass: params.mass(),
            omega: params.omega(),
        },
        PotentialArg::Quartic => {
            if !(lambda > 0.0) {
                return Err(CmdError::Usage(format!(
                    "--lambda must be positive, got {lambda}"
                )));
            }
            Potential::Quartic { lambda }
        }
    };
    let alpha = params.alpha();
    let default_half = match potential {
        PotentialArg::Harmonic => 10.235 / alpha,
        PotentialArg::Quartic => 8.0 / alpha,
    };
    let half = lx.unwrap_or(default_half);
    if !(half > 0.0) {
        return Err(CmdError::Usage(format!("--lx must be positive, got {half}")));
    }
    let grid = Grid1D::symmetric(half, npoints)?;
    let packet = gaussian_packet(x0, p0, sigma, params, &grid)?;
    let record = run_trajectory(&packet, &pot, dt, steps)?;

    // the assertable regimes: stationary ground state, coherent packet in
    // harmonic, and the momentum relation under any polynomial potential
    let is_coherent = (sigma - coherent).abs() <= 1e-9 * coherent;
    let is_stationary =
        matches!(potential, PotentialArg::Harmonic) && x0 == 0.0 && p0 == 0.0 && is_coherent;
    let contract: &str;
    let mut violations: Vec<String> = Vec::new();
    let max_of = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let maxima = [
        ("residual_ehrenfest_x", max_of(&record.residual_ehrenfest_x)),
        ("residual_ehrenfest_p", max_of(&record.residual_ehrenfest_p)),
        ("residual_continuity", max_of(&record.residual_continuity)),
        ("residual_transport", max_of(&record.residual_transport)),
    ];
    if is_stationary {
        contract = "stationary";
        let bound = common.tol.unwrap_or(1e-6);
        for (name, value) in maxima {
            if value > bound {
                violations.push(format!("{name} = {value:.3e} > {bound:.1e}"));
            }
        }
    } else if matches!(potential, PotentialArg::Harmonic) && is_coherent {
        contract = "coherent-harmonic";
        for (name, value) in maxima {
            let bound = common.tol.unwrap_or(match name {
                "residual_ehrenfest_x" | "residual_ehrenfest_p" => 1e-5,
                _ => 1e-3,
            });
            if value > bound {
                violations.push(format!("{name} = {value:.3e} > {bound:.1e}"));
            }
        }
    } else if matches!(potential, PotentialArg::Quartic) {
        contract = "quartic-momentum-relation";
        let bound = common.tol.unwrap_or(1e-5);
        let value = max_of(&record.residual_ehrenfest_p);
        if value > bound {
            violations.push(format!("residual_ehrenfest_p = {value:.3e} > {bound:.1e}"));
        }
    } else {
        contract = "none (residuals reported unasserted)";
    }

    let mut artifact = Artifact::new("ehrenfest");
    push_unit_meta(&mut artifact, params, common);
    artifact.push_meta(
        "potential",
        match potential {
            PotentialArg::Harmonic => "harmonic".to_string(),
            PotentialArg::Quartic => format!("quartic lambda={lambda}"),
        },
    );
    artifact.push_meta_float("x0", x0);
    artifact.push_meta_float("p0", p0);
    artifact.push_meta_float("sigma", sigma);
    artifact.push_meta_float("dt", dt);
    artifact.push_meta("steps", steps);
    artifact.push_meta_float("lx", half);
    artifact.push_meta("npoints", npoints);
    artifact.push_meta("contract", contract);
    for (name, value) in maxima {
        artifact.push_meta_float(&format!("max_{name}"), value);
    }
    push_trajectory_rows(&mut artifact, &record);
    write_artifact(&artifact, common)?;
    if !violations.is_empty() {
        return Err(CmdError::Numerical(format!(
            "contract '{contract}' violated: {}",
            violations.join("; ")
        )));
    }
    Ok(())
}

fn push_trajectory_rows(artifact: &mut Artifact, record: &TrajectoryRecord) {
    artifact.set_columns(&[
        "t",
        "xbar",
        "pbar",
        "dp2",
        "norm",
        "residual_ehrenfest_x",
        "residual_ehrenfest_p",
        "residual_continuity",
        "residual_transport",
    ]);
    for k in 0..record.len() {
        artifact.push_row(vec![
            Value::Float(record.times[k]),
            Value::Float(record.xbar[k]),
            Value::Float(record.pbar[k]),
            Value::Float(record.dp2[k]),
            Value::Float(record.norm[k]),
            Value::Float(record.residual_ehrenfest_x[k]),
            Value::Float(record.residual_ehrenfest_p[k]),
            Value::Float(record.residual_continuity[k]),
            Value::Float(record.residual_transport[k]),
        ]);
    }
}

// ---------------------------------------------------------------------------
// cohen

#[allow(clippy::too_many_arguments)]
fn cmd_cohen(
    spec: StateSpec,
    kernel_kind: KernelArg,
    epsilon: f64,
    coverage_min: f64,
    ntheta: usize,
    ntau: usize,
    params: &OscillatorParams,
    common: &CommonArgs,
) -> CmdResult {
    if !(epsilon > 0.0) {
        return Err(CmdError::Usage(format!(
            "--epsilon must be positive, got {epsilon}"
        )));
    }
    if !(0.0 < coverage_min && coverage_min <= 1.0) {
        return Err(CmdError::Usage(format!(
            "--coverage-min must be in (0, 1], got {coverage_min}"
        )));
    }
    if ntheta % 2 == 0 || ntau % 2 == 0 || ntheta < 17 || ntau < 17 {
        return Err(CmdError::Usage(
            "--ntheta and --ntau must be odd (the origin must be sampled) and >= 17".to_string(),
        ));
    }
    if let StateSpec::Eigen(n) = spec {
        if n > 4 {
            return Err(CmdError::Usage(format!(
                "cohen supports eigenstates n <= 4 (kernel window limitation), got {n}"
            )));
        }
    }
    let (psi, phi) = build_state(&spec, params)?;
    let alpha = params.alpha();
    let tg = Grid1D::symmetric(12.0 * alpha, ntheta)?;
    let ug = Grid1D::symmetric(12.0 / (params.hbar() * alpha), ntau)?;
    let kernel = match kernel_kind {
        KernelArg::A2 => cohen_kernel_factorized(&psi, &tg, &ug, epsilon)?,
        KernelArg::Unity => CohenKernel::unity(tg, ug),
    };

    // round-trip comparison on a compact window around the state, against
    // the closed-form reference density of the matching rule
    let cx = Grid1D::symmetric(0.55 * psi.grid().max(), 101)?;
    let cp = Grid1D::symmetric(0.55 * phi.grid().max(), 101)?;
    let (reconstructed, ambiguity_coverage) = cohen_transform(&psi, &kernel, &cx, &cp);
    let reference_rule = match kernel_kind {
        KernelArg::A2 => "A",
        KernelArg::Unity => "B",
    };
    let mut roundtrip_dev = 0.0f64;
    for i in 0..cx.count() {
        for j in 0..cp.count() {
            let want = reference_density(
                &spec,
                params,
                kernel_kind,
                cx.point(i),
                cp.point(j),
            );
            roundtrip_dev = roundtrip_dev.max((reconstructed[[i, j]] - want).abs());
        }
    }

    let mut artifact = Artifact::new("cohen");
    push_unit_meta(&mut artifact, params, common);
    describe_state(&spec, &mut artifact);
    artifact.push_meta("kernel", kernel.id());
    artifact.push_meta_float("epsilon", epsilon);
    artifact.push_meta_float("coverage", kernel.coverage());
    artifact.push_meta_float("ambiguity_coverage", ambiguity_coverage);
    artifact.push_meta_float("coverage_min", coverage_min);
    artifact.push_meta("roundtrip_reference_rule", reference_rule);
    artifact.push_meta_float("roundtrip_max_deviation", roundtrip_dev);
    let masked = kernel.mask().iter().filter(|&&m| !m).count();
    artifact.push_meta("masked_points", masked);
    artifact.set_columns(&["theta", "tau", "re_f", "im_f", "mask"]);
    for i in 0..ntheta {
        for j in 0..ntau {
            let v = kernel.values()[[i, j]];
            artifact.push_row(vec![
                Value::Float(kernel.theta_grid().point(i)),
                Value::Float(kernel.tau_grid().point(j)),
                Value::Float(v.re),
                Value::Float(v.im),
                Value::Int(kernel.mask()[[i, j]] as i64),
            ]);
        }
    }
    write_artifact(&artifact, common)?;
    if kernel.coverage() < coverage_min {
        return Err(CmdError::Numerical(format!(
            "kernel coverage {:.4} below --coverage-min {coverage_min} \
             (round trip measured on the masked support only)",
            kernel.coverage()
        )));
    }
    Ok(())
}

/// Closed-form density value at (x, p) for the round-trip reference:
/// the factorized product for the ratio kernel, the point-split closed form
/// for the unity kernel. Both are exact for eigenstates and Gaussian
/// packets.
fn reference_density(
    spec: &StateSpec,
    params: &OscillatorParams,
    kernel: KernelArg,
    x: f64,
    p: f64,
) -> f64 {
    use phasespace::specfun::{hermite_scaled, laguerre};
    use std::f64::consts::PI;
    let hbar = params.hbar();
    let alpha = params.alpha();
    match (spec, kernel) {
        (StateSpec::Eigen(n), KernelArg::A2) => {
            let hx = hermite_scaled(*n, alpha * x);
            let hp = hermite_scaled(*n, p / (hbar * alpha));
            (alpha * hx * hx) * (hp * hp / (hbar * alpha))
        }
        (StateSpec::Eigen(n), KernelArg::Unity) => {
            let mass = params.mass();
            let omega = params.omega();
            let energy = p * p / (2.0 * mass) + 0.5 * mass * omega * omega * x * x;
            let scaled = energy / (hbar * omega);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sign / (PI * hbar) * (-2.0 * scaled).exp() * laguerre(*n, 4.0 * scaled)
        }
        // for a Gaussian packet the two constructions coincide in the same
        // separable Gaussian
        (StateSpec::Packet { x0, p0, sigma }, _) => {
            let dx2 = (x - x0) * (x - x0) / (2.0 * sigma * sigma);
            let dp2 = 2.0 * sigma * sigma * (p - p0) * (p - p0) / (hbar * hbar);
            (-dx2 - dp2).exp() / (PI * hbar)
        }
    }
}

// ---------------------------------------------------------------------------
// verify

fn cmd_verify(only: Option<&str>, common: &CommonArgs) -> CmdResult {
    let results = run_checks(only, common.seed);
    if results.is_empty() {
        return Err(CmdError::Usage(format!(
            "no invariant check matches filter {:?}",
            only.unwrap_or("")
        )));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let mut artifact = Artifact::new("verify");
    artifact.push_meta("seed", common.seed);
    artifact.push_meta("filter", only.unwrap_or("(all)"));
    artifact.push_meta("checks", results.len());
    artifact.push_meta("failed", failed);
    // no wall-clock columns: identical config + seed must give identical bytes
    artifact.set_columns(&["check", "status", "detail"]);
    for r in &results {
        artifact.push_row(vec![
            Value::Text(r.name.to_string()),
            Value::Text(if r.passed { "pass" } else { "fail" }.to_string()),
            Value::Text(r.detail.replace(',', ";")),
        ]);
    }
    write_artifact(&artifact, common)?;
    if failed > 0 {
        return Err(CmdError::Numerical(format!(
            "{failed} of {} invariant checks failed",
            results.len()
        )));
    }
    Ok(())
}
