//! The four subcommands: verification battery, reconstruction pipeline,
//! flag profiles, and the registry listing.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use liesys::geometry::{derived_flag_profile, frame_determinant};
use liesys::liealg::{close_under_brackets, structure_constants, verify_table, Closure};
use liesys::models::{
    trailer_generators, ClosureExpectation, Fault, ModelBundle, ModelError, ModelId,
};
use liesys::principal::verify_connection;
use liesys::reconstruct::{reconstruct, ReconstructError};
use liesys::symexpr::Expr;

use crate::config::{parse_config, parse_model, resolve, ResolvedConfig, ResolvedRun, RunConfig};
use crate::output::{group_csv, json_bytes, trajectory_csv, write_atomic};
use crate::CliError;

const PAIRING_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-9;
const DET_MIN: f64 = 1e-6;
const FLAG_POINTS: usize = 10;

#[derive(Debug, Serialize)]
struct CheckResult {
    name: String,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, pass: bool, residual: Option<f64>, detail: String) -> Self {
        CheckResult {
            name: name.into(),
            pass,
            residual,
            detail,
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    config: ResolvedConfig,
    checks: Vec<CheckResult>,
    pass: bool,
    failed: Vec<String>,
}

fn load_bundle(id: ModelId, faults: &[Fault]) -> Result<ModelBundle, CliError> {
    ModelBundle::load_with_faults(id, faults).map_err(|e| match e {
        ModelError::SelfCheck { .. } => CliError::CheckFailed(e.to_string()),
        ModelError::UnknownModel(_) | ModelError::NotLoadable(_) | ModelError::BadParameter => {
            CliError::Config(e.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    })
}

fn parse_fault(spec: &str) -> Result<Fault, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["negate", field, component] => Ok(Fault {
            field: field.to_string(),
            component: component.to_string(),
        }),
        _ => Err(CliError::Config(format!(
            "fault spec must look like negate:<field>:<coordinate>, got `{spec}`"
        ))),
    }
}

fn run_setup(config_path: &Path) -> Result<(RunConfig, ModelId), CliError> {
    let config = parse_config(config_path)?;
    let id = parse_model(&config.model)?;
    Ok((config, id))
}

pub fn cmd_verify(config_path: &Path, fault_specs: &[String]) -> Result<i32, CliError> {
    let (config, id) = run_setup(config_path)?;
    let faults = fault_specs
        .iter()
        .map(|s| parse_fault(s))
        .collect::<Result<Vec<_>, _>>()?;
    let bundle = load_bundle(id, &faults)?;
    let run = resolve(&config, bundle)?;
    let report = verify_battery(&run)?;

    let bytes = json_bytes(&report)?;
    write_atomic(&run.output_dir.join("report.json"), &bytes)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(if report.pass { 0 } else { 2 })
}

fn verify_battery(run: &ResolvedRun) -> Result<VerifyReport, CliError> {
    let bundle = &run.bundle;
    let sampler = bundle.sampler(run.seed);
    let mut checks: Vec<CheckResult> = Vec::new();

    // Projectability of every system field under the registered action.
    for term in &bundle.system_terms {
        let field = bundle.field(term.field).map_err(runtime)?;
        let ok = bundle
            .action
            .is_projectable(field, &sampler)
            .map_err(runtime)?;
        checks.push(CheckResult::new(
            format!("projectable {}", term.field),
            ok,
            None,
            format!(
                "non-fiber components of {} are independent of `{}`",
                term.field,
                bundle.action.fiber_name()
            ),
        ));
    }

    // Connection invariants.
    let conn = verify_connection(&bundle.connection, &bundle.action, &sampler).map_err(runtime)?;
    checks.push(CheckResult::new(
        "connection",
        conn.pass(RESIDUAL_TOL),
        Some(conn.pairing_residual.max(conn.invariance_residual)),
        format!(
            "pairing residual {:.3e}, invariance residual {:.3e}",
            conn.pairing_residual, conn.invariance_residual
        ),
    ));

    // Dual-frame delta pairings.
    let mut worst = 0.0f64;
    for (i, form_name) in bundle.dual_frame.iter().enumerate() {
        let form = bundle.form(form_name).map_err(runtime)?;
        for (j, dual_name) in bundle.frame_duals.iter().enumerate() {
            let dual = bundle.field(dual_name).map_err(runtime)?;
            let delta = if i == j { 1.0 } else { 0.0 };
            let defect = form.pair(dual).map_err(runtime)? - Expr::constant(delta);
            worst = worst.max(defect.sup_on_samples(&sampler).map_err(runtime)?);
        }
    }
    checks.push(CheckResult::new(
        "dual frame",
        worst <= PAIRING_TOL,
        Some(worst),
        format!("max |pairing - delta| = {worst:.3e}"),
    ));

    // Symmetry commutations.
    for (sym_name, targets) in &bundle.symmetry_checks {
        let sym = bundle.field(sym_name).map_err(runtime)?;
        let mut worst = 0.0f64;
        for target_name in targets {
            let target = bundle.field(target_name).map_err(runtime)?;
            let r = sym
                .lie_derivative(target)
                .map_err(runtime)?
                .sup_on_samples(&sampler)
                .map_err(runtime)?;
            worst = worst.max(r);
        }
        checks.push(CheckResult::new(
            format!("symmetry {sym_name}"),
            worst <= RESIDUAL_TOL,
            Some(worst),
            format!("max commutator residual over {} fields", targets.len()),
        ));
    }

    // Invariant forms.
    for (form_name, field_names) in &bundle.invariant_form_checks {
        let form = bundle.form(form_name).map_err(runtime)?;
        let mut worst = 0.0f64;
        for field_name in field_names {
            let field = bundle.field(field_name).map_err(runtime)?;
            let r = form
                .lie_derivative(field)
                .map_err(runtime)?
                .sup_on_samples(&sampler)
                .map_err(runtime)?;
            worst = worst.max(r);
        }
        checks.push(CheckResult::new(
            format!("invariant form {form_name}"),
            worst <= RESIDUAL_TOL,
            Some(worst),
            format!(
                "max Lie-derivative residual over {} fields",
                field_names.len()
            ),
        ));
    }

    // Contact forms (odd-dimensional models only).
    for form_name in &bundle.contact_forms {
        let alpha = bundle.form(form_name).map_err(runtime)?;
        let top = alpha
            .wedge(&alpha.exterior_derivative().map_err(runtime)?)
            .map_err(runtime)?;
        let vanishes = top.is_zero(&sampler, RESIDUAL_TOL).map_err(runtime)?;
        checks.push(CheckResult::new(
            format!("contact {form_name}"),
            !vanishes,
            None,
            "alpha ∧ d(alpha) is nonvanishing on samples".to_string(),
        ));
    }

    // Frame determinant.
    if let Some(frame_names) = &bundle.automorphic_frame {
        let frame = bundle.fields_by_names(frame_names).map_err(runtime)?;
        let det = frame_determinant(&frame).map_err(runtime)?;
        let coords: Vec<&str> = bundle.chart.names().collect();
        let mut min_abs = f64::MAX;
        for p in sampler.clone().samples(10).points(coords.iter().copied()) {
            min_abs = min_abs.min(det.evaluate(&p).map_err(runtime)?.abs());
        }
        checks.push(CheckResult::new(
            "frame determinant",
            min_abs >= DET_MIN,
            Some(min_abs),
            format!("min |det| over 10 generic points = {min_abs:.3e}"),
        ));
    }

    // Bracket closure of the system's constituent fields.
    let probe_fields = bundle
        .fields_by_names(&bundle.closure_probe.fields)
        .map_err(runtime)?;
    let closure = close_under_brackets(
        &probe_fields,
        bundle.closure_probe.max_depth,
        bundle.closure_probe.max_dim,
        &sampler,
    )
    .map_err(runtime)?;
    match (&closure, bundle.closure_probe.expected) {
        (Closure::Closed(basis), ClosureExpectation::Dimension(want)) => {
            checks.push(CheckResult::new(
                "closure",
                basis.dim() == want,
                None,
                format!("closed at dimension {} (want {want})", basis.dim()),
            ));
        }
        (Closure::Closed(basis), ClosureExpectation::NonClosure) => {
            checks.push(CheckResult::new(
                "closure",
                false,
                None,
                format!(
                    "expected growth evidence under caps (depth {}, dim {}), \
                     but the fields closed at dimension {}",
                    bundle.closure_probe.max_depth,
                    bundle.closure_probe.max_dim,
                    basis.dim()
                ),
            ));
        }
        (Closure::Evidence(e), ClosureExpectation::NonClosure) => {
            checks.push(CheckResult::new(
                "closure",
                e.strictly_increasing(),
                None,
                format!(
                    "cap reached with dimensions per depth {:?}",
                    e.dimension_per_depth
                ),
            ));
        }
        (Closure::Evidence(e), ClosureExpectation::Dimension(want)) => {
            checks.push(CheckResult::new(
                "closure",
                false,
                None,
                format!(
                    "expected a closed algebra of dimension {want}, got growth {:?}",
                    e.dimension_per_depth
                ),
            ));
        }
    }

    // Structure constants against the registered table, named per bracket.
    if let Some((basis_names, expected)) = &bundle.vg_basis {
        let fields = bundle.fields_by_names(basis_names).map_err(runtime)?;
        match structure_constants(&fields, &sampler) {
            Ok(extracted) => checks.push(CheckResult::new(
                "structure constants",
                extracted == *expected,
                None,
                format!(
                    "{} nonzero extracted entries",
                    extracted.nonzero_entries().len()
                ),
            )),
            Err(e) => checks.push(CheckResult::new(
                "structure constants",
                false,
                None,
                e.to_string(),
            )),
        }
        let table = verify_table(
            &fields,
            basis_names,
            expected,
            &sampler.clone().samples(25),
            RESIDUAL_TOL,
        )
        .map_err(runtime)?;
        for pair in &table.pairs {
            if !pair.pass {
                checks.push(CheckResult::new(
                    format!("bracket {}", pair.label),
                    false,
                    Some(pair.residual),
                    format!(
                        "residual {:.3e} against the registered table",
                        pair.residual
                    ),
                ));
            }
        }
        checks.push(CheckResult::new(
            "bracket table",
            table.pass,
            Some(table.max_residual),
            format!("max residual {:.3e} over all pairs", table.max_residual),
        ));
    }

    // Named subtables.
    for sub in &bundle.subtables {
        let fields = bundle.fields_by_names(&sub.fields).map_err(runtime)?;
        let table = verify_table(
            &fields,
            &sub.fields,
            &sub.table,
            &sampler.clone().samples(25),
            RESIDUAL_TOL,
        )
        .map_err(runtime)?;
        checks.push(CheckResult::new(
            format!("subtable {}", sub.label),
            table.pass,
            Some(table.max_residual),
            format!("max residual {:.3e}", table.max_residual),
        ));
    }

    // Flag ranks.
    if let Some(want) = &bundle.flag_expected {
        let generators = bundle
            .fields_by_names(&bundle.closure_probe.fields)
            .map_err(runtime)?;
        let profile =
            derived_flag_profile(&generators, bundle.chart.dim() + 1, &sampler, FLAG_POINTS)
                .map_err(runtime)?;
        checks.push(CheckResult::new(
            "flag ranks",
            profile.ranks == *want && profile.unanimous,
            None,
            format!(
                "ranks {:?} (want {:?}), unanimous = {}",
                profile.ranks, want, profile.unanimous
            ),
        ));
    }

    // Closure of the reduced system, where an expectation is registered.
    if let Some(want) = bundle.reduced_closure_dim {
        let mut reduced = Vec::new();
        for term in &bundle.system_terms {
            let field = bundle.field(term.field).map_err(runtime)?;
            let pushed = bundle
                .action
                .pushforward(field, &sampler)
                .map_err(runtime)?;
            if !pushed.is_zero(&sampler, RESIDUAL_TOL).map_err(runtime)? {
                reduced.push(pushed);
            }
        }
        let quotient_sampler = bundle.action.quotient_chart().sample_spec(run.seed);
        match close_under_brackets(&reduced, 6, 8, &quotient_sampler).map_err(runtime)? {
            Closure::Closed(basis) => checks.push(CheckResult::new(
                "reduced closure",
                basis.dim() == want,
                None,
                format!(
                    "reduced fields closed at dimension {} (want {want})",
                    basis.dim()
                ),
            )),
            Closure::Evidence(e) => checks.push(CheckResult::new(
                "reduced closure",
                false,
                None,
                format!(
                    "reduced fields did not close: growth {:?}",
                    e.dimension_per_depth
                ),
            )),
        }
    }

    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.clone())
        .collect();
    let pass = failed.is_empty();
    Ok(VerifyReport {
        config: run.echo.clone(),
        checks,
        pass,
        failed,
    })
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Serialize)]
struct ReconstructReportJson {
    config: ResolvedConfig,
    grid_points: usize,
    sup_deviation: f64,
    ode_residual: f64,
    projection_gap: f64,
    tolerances_pass: bool,
    files: Vec<String>,
}

pub fn cmd_reconstruct(config_path: &Path) -> Result<i32, CliError> {
    let (config, id) = run_setup(config_path)?;
    let bundle = load_bundle(id, &[])?;
    let run = resolve(&config, bundle)?;

    let given_controls: BTreeMap<String, liesys::ode::ControlSignal> = run
        .controls
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let system = run.bundle.system(&given_controls).map_err(runtime)?;
    let sampler = run.bundle.sampler(run.seed);

    let report = reconstruct(
        &system,
        &run.bundle.action,
        &run.bundle.connection,
        &run.initial_state,
        run.group_offset_additive,
        run.t0,
        run.t1,
        run.method,
        &sampler,
    )
    .map_err(|e| match e {
        ReconstructError::NotProjectable { .. } | ReconstructError::BadConnection { .. } => {
            CliError::CheckFailed(e.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    })?;

    let total_columns = run.bundle.output_columns.clone();
    let reduced_columns = run.bundle.reduced_output_columns();
    let files = [
        (
            "gamma.csv",
            trajectory_csv(&report.reduced, &reduced_columns, run.wrapped_columns),
        ),
        (
            "lift.csv",
            trajectory_csv(&report.lift, &total_columns, run.wrapped_columns),
        ),
        (
            "group.csv",
            group_csv(&report.group, run.bundle.action.kind()),
        ),
        (
            "reconstructed.csv",
            trajectory_csv(&report.reconstructed, &total_columns, run.wrapped_columns),
        ),
        (
            "reference.csv",
            trajectory_csv(&report.reference, &total_columns, run.wrapped_columns),
        ),
    ];
    for (name, text) in &files {
        write_atomic(&run.output_dir.join(name), text.as_bytes())?;
    }

    let pass = report.sup_deviation <= run.tolerances.max_deviation
        && report.ode_residual <= run.tolerances.max_residual;
    let json = ReconstructReportJson {
        config: run.echo.clone(),
        grid_points: report.reconstructed.len(),
        sup_deviation: report.sup_deviation,
        ode_residual: report.ode_residual,
        projection_gap: report.projection_gap,
        tolerances_pass: pass,
        files: files.iter().map(|(n, _)| n.to_string()).collect(),
    };
    let bytes = json_bytes(&json)?;
    write_atomic(&run.output_dir.join("report.json"), &bytes)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(if pass { 0 } else { 2 })
}

#[derive(Serialize)]
struct FlagReportJson {
    config: ResolvedConfig,
    ranks: Vec<usize>,
    per_point: Vec<Vec<usize>>,
    unanimous: bool,
}

pub fn cmd_flag(config_path: &Path) -> Result<i32, CliError> {
    let config = parse_config(config_path)?;
    let id = parse_model(&config.model)?;
    let ModelId::Trailer(n) = id else {
        return Err(CliError::Config(format!(
            "flag profiles are defined for trailer models, got `{}`",
            config.model
        )));
    };
    let (chart, x1, x2) = trailer_generators(n);
    let seed = config.seed.unwrap_or(42);
    let flag = config.flag.unwrap_or_default();
    let output_dir = config
        .output_dir
        .clone()
        .unwrap_or_else(crate::config::default_output_dir);
    let sampler = chart.sample_spec(seed);
    let max_level = flag.max_level.unwrap_or(chart.dim() + 1);
    let profile = derived_flag_profile(&[x1, x2], max_level, &sampler, flag.points)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let echo = ResolvedConfig {
        model: id.to_string(),
        seed,
        controls: BTreeMap::new(),
        initial: BTreeMap::new(),
        group_offset: 0.0,
        t0: config.t0.unwrap_or(0.0),
        t1: config.t1.unwrap_or(5.0),
        method: config
            .method
            .unwrap_or(crate::config::MethodSpec::Rk4 { h: 1e-3 }),
        output_dir: output_dir.display().to_string(),
        tolerances: config.tolerances.unwrap_or_default(),
        flag: crate::config::FlagSpec {
            points: flag.points,
            max_level: Some(max_level),
        },
        wrapped_columns: config.wrapped_columns.unwrap_or(false),
    };
    let json = FlagReportJson {
        config: echo,
        ranks: profile.ranks.clone(),
        per_point: profile.per_point.clone(),
        unanimous: profile.unanimous,
    };
    let bytes = json_bytes(&json)?;
    write_atomic(&output_dir.join("report.json"), &bytes)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(0)
}

#[derive(Serialize)]
struct ModelEntry {
    id: String,
    coordinates: Vec<String>,
    columns: Vec<String>,
    control_slots: Vec<String>,
    fiber: String,
    group: String,
    singular_notes: String,
}

pub fn cmd_models() -> Result<i32, CliError> {
    let mut entries = Vec::new();
    for id in ModelBundle::loadable_ids() {
        let bundle = load_bundle(id, &[])?;
        entries.push(ModelEntry {
            id: id.to_string(),
            coordinates: bundle.chart.names().map(str::to_owned).collect(),
            columns: bundle
                .output_columns
                .iter()
                .map(|c| c.column.to_string())
                .collect(),
            control_slots: bundle.control_slots.iter().map(|s| s.to_string()).collect(),
            fiber: bundle.action.fiber_name().to_string(),
            group: format!("{:?}", bundle.action.kind()),
            singular_notes: bundle.singular_notes.to_string(),
        });
    }
    let bytes = json_bytes(&entries)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(0)
}
