//! Dispatch from a scenario to the solvers, producing in-memory outputs.

use bottleneck_core::abm::run_abm;
use bottleneck_core::compare::{cdf, compare_runs};
use bottleneck_core::fluid::{classify, solve_case, thresholds, verify_fluid, FluidCase};
use bottleneck_core::signal::{posterior_views, signal_marginals};
use bottleneck_core::solver::{face_value_game, iterated_best_response, solve_fr, Equilibrium};
use bottleneck_core::workload::ArrivalStrategy;
use bottleneck_core::Belief;
use toml::{Table, Value};

use crate::output::{cdf_table, OutputFile};
use crate::scenario::{Mode, Scenario};
use crate::CliError;

/// Grid used to verify a fluid solution.
pub const FLUID_VERIFY_GRID: usize = 10_000;
/// Largest fluid violation still reported as verified.
pub const FLUID_VERIFY_TOL: f64 = 1e-9;

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Files to write, summary last.
    pub files: Vec<OutputFile>,
    /// False when some iteration hit its cap.
    pub converged: bool,
    /// The summary text (also the last file).
    pub summary: String,
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

fn ints(v: &[usize]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Integer(x as i64)).collect())
}

fn slot_times(slots: usize, slot_len: usize) -> Vec<f64> {
    (0..slots).map(|t| (t * slot_len) as f64).collect()
}

fn strategy_csv(pa: &ArrivalStrategy, pb: &ArrivalStrategy, slot_len: usize) -> String {
    cdf_table(&slot_times(pa.len(), slot_len), &pa.cdf(), &pb.cdf())
}

fn equilibrium_summary(eq: &Equilibrium) -> Table {
    let r = &eq.report;
    let mut t = Table::new();
    t.insert("wbar_a".into(), Value::Float(r.mean_waits[0]));
    t.insert("wbar_b".into(), Value::Float(r.mean_waits[1]));
    t.insert("converged".into(), Value::Boolean(r.converged));
    t.insert("iterations".into(), Value::Integer(r.iterations as i64));
    t.insert("last_step".into(), Value::Float(r.last_step));
    t.insert("max_support_spread".into(), Value::Float(r.max_support_spread));
    t.insert("max_offsupport_violation".into(), Value::Float(r.max_offsupport_violation));
    t.insert("verify_tol".into(), Value::Float(r.tol));
    t.insert("verified".into(), Value::Boolean(r.passed()));
    t.insert("support_a".into(), ints(&r.supports[0]));
    t.insert("support_b".into(), ints(&r.supports[1]));
    t.insert("monotonicity_violations".into(), Value::Integer(r.monotonicity_violations as i64));
    t
}

fn finish(mode: Mode, mut files: Vec<OutputFile>, mut summary: Table, converged: bool) -> Result<RunOutput, CliError> {
    summary.insert("mode".into(), Value::String(mode.name().into()));
    let text = toml::to_string(&summary).map_err(|e| CliError::Solver(format!("summary serialization: {e}")))?;
    files.push(OutputFile {
        name: "summary.txt".into(),
        contents: text.clone(),
    });
    Ok(RunOutput {
        files,
        converged,
        summary: text,
    })
}

/// Runs a parsed scenario.
pub fn run(scenario: &Scenario) -> Result<RunOutput, CliError> {
    match scenario.mode {
        Mode::Fluid => run_fluid(scenario),
        Mode::DiscreteBr => run_br(scenario),
        Mode::DiscreteFr => run_fr(scenario),
        Mode::Abm => run_learning(scenario),
        Mode::Compare => run_compare(scenario),
        Mode::Signal => run_signal(scenario),
    }
}

fn missing(block: &str) -> CliError {
    CliError::Parse(format!("missing [{block}] block"))
}

fn run_fluid(s: &Scenario) -> Result<RunOutput, CliError> {
    let spec = s.fluid.as_ref().ok_or_else(|| missing("fluid"))?;
    if spec.points < 2 {
        return Err(CliError::Invalid(format!("fluid.points must be at least 2, got {}", spec.points)));
    }
    let params = spec.params()?;
    let applicable = classify(&params);
    let case = match &spec.case {
        Some(label) => label.parse::<FluidCase>()?,
        None => *applicable
            .first()
            .ok_or_else(|| CliError::Invalid("no fluid case applies to these parameters".into()))?,
    };
    let eq = solve_case(&params, case)?;
    let report = verify_fluid(&params, &eq, FLUID_VERIFY_GRID)?;

    let horizon = params.horizon();
    let n = spec.points;
    let times: Vec<f64> = (0..n)
        .map(|k| if k + 1 == n { horizon } else { horizon * k as f64 / (n - 1) as f64 })
        .collect();
    let fa = times.iter().map(|&t| eq.cdf(Belief::A, t)).collect::<Result<Vec<_>, _>>()?;
    let fb = times.iter().map(|&t| eq.cdf(Belief::B, t)).collect::<Result<Vec<_>, _>>()?;

    let mut summary = Table::new();
    summary.insert("case".into(), Value::String(case.label().into()));
    summary.insert(
        "applicable_cases".into(),
        Value::Array(applicable.iter().map(|c| Value::String(c.label().into())).collect()),
    );
    summary.insert("thresholds".into(), floats(&thresholds(&params)));
    summary.insert("horizon".into(), Value::Float(horizon));
    summary.insert("atom_a".into(), Value::Float(eq.atoms[0]));
    summary.insert("atom_b".into(), Value::Float(eq.atoms[1]));
    summary.insert("opening_queue".into(), Value::Float(eq.opening_queue));
    summary.insert("non_unique".into(), Value::Boolean(eq.non_unique));
    summary.insert("max_violation".into(), Value::Float(report.max_violation));
    summary.insert("verified".into(), Value::Boolean(report.max_violation <= FLUID_VERIFY_TOL));
    let files = vec![OutputFile {
        name: "cdf.csv".into(),
        contents: cdf_table(&times, &fa, &fb),
    }];
    finish(Mode::Fluid, files, summary, true)
}

fn run_br(s: &Scenario) -> Result<RunOutput, CliError> {
    let game = s.game.as_ref().ok_or_else(|| missing("game"))?.game()?;
    let cfg = s.solver.config()?;
    let eq = iterated_best_response(&game, &cfg)?;
    let files = vec![OutputFile {
        name: "cdf.csv".into(),
        contents: strategy_csv(&eq.pa, &eq.pb, game.slot_len()),
    }];
    let converged = eq.report.converged;
    finish(Mode::DiscreteBr, files, equilibrium_summary(&eq), converged)
}

fn posterior_summary(s: &Scenario) -> Result<Table, CliError> {
    let signal = s.signal.as_ref().ok_or_else(|| missing("signal"))?.params()?;
    let (ya, yb) = signal_marginals(signal.slow_prob(), signal.accuracy());
    let [va, vb] = posterior_views(&signal)?;
    let mut t = Table::new();
    t.insert("signal_marginals".into(), floats(&[ya, yb]));
    t.insert("nu_a".into(), floats(&va.populations));
    t.insert("nu_b".into(), floats(&vb.populations));
    t.insert("eta_a".into(), floats(&va.mode_weights));
    t.insert("eta_b".into(), floats(&vb.mode_weights));
    t.insert("zeta".into(), floats(&[va.mean_service, vb.mean_service]));
    t.insert("posterior_cv".into(), floats(&[va.service.cv(), vb.service.cv()]));
    Ok(t)
}

fn run_signal(s: &Scenario) -> Result<RunOutput, CliError> {
    finish(Mode::Signal, Vec::new(), posterior_summary(s)?, true)
}

fn run_fr(s: &Scenario) -> Result<RunOutput, CliError> {
    let signal = s.signal.as_ref().ok_or_else(|| missing("signal"))?.params()?;
    let slots = s.slots.ok_or_else(|| missing("slots"))?;
    let cfg = s.solver.config()?;
    let fr = solve_fr(&signal, slots.slot_len, slots.last_slot, &cfg)?;
    let mut summary = Table::new();
    summary.insert("posterior".into(), Value::Table(posterior_summary(s)?));
    summary.insert("wbar_a".into(), Value::Float(fr.views[0].report.mean_waits[0]));
    summary.insert("wbar_b".into(), Value::Float(fr.views[1].report.mean_waits[1]));
    summary.insert("view_a".into(), Value::Table(equilibrium_summary(&fr.views[0])));
    summary.insert("view_b".into(), Value::Table(equilibrium_summary(&fr.views[1])));
    let converged = fr.views.iter().all(|v| v.report.converged);
    summary.insert("converged".into(), Value::Boolean(converged));
    let files = vec![OutputFile {
        name: "cdf.csv".into(),
        contents: strategy_csv(&fr.pa, &fr.pb, slots.slot_len),
    }];
    finish(Mode::DiscreteFr, files, summary, converged)
}

fn run_learning(s: &Scenario) -> Result<RunOutput, CliError> {
    let cfg = s.abm_config()?;
    let r = run_abm(&cfg)?;
    let times = slot_times(cfg.slots(), cfg.slot_len);
    let mut summary = Table::new();
    summary.insert("seed".into(), Value::Integer(cfg.seed as i64));
    summary.insert("wbar_a".into(), Value::Float(r.wbar_pop[0]));
    summary.insert("wbar_b".into(), Value::Float(r.wbar_pop[1]));
    summary.insert("slot_waits_a".into(), floats(&r.slot_waits[0]));
    summary.insert("slot_waits_b".into(), floats(&r.slot_waits[1]));
    summary.insert("agents_counted".into(), ints(&r.agents_counted));
    summary.insert("mean_joiners".into(), Value::Float(r.mean_joiners));
    summary.insert("slow_days".into(), Value::Integer(r.slow_days as i64));
    summary.insert("exploration".into(), floats(&r.exploration));
    let files = vec![OutputFile {
        name: "cdf.csv".into(),
        contents: cdf_table(&times, &cdf(&r.pbar[0]), &cdf(&r.pbar[1])),
    }];
    finish(Mode::Abm, files, summary, true)
}

fn run_compare(s: &Scenario) -> Result<RunOutput, CliError> {
    let signal = s.signal.as_ref().ok_or_else(|| missing("signal"))?.params()?;
    let slots = s.slots.ok_or_else(|| missing("slots"))?;
    let solver = s.solver.config()?;
    let abm_cfg = s.abm_config()?;

    let br = iterated_best_response(&face_value_game(&signal, slots.slot_len, slots.last_slot)?, &solver)?;
    let fr = solve_fr(&signal, slots.slot_len, slots.last_slot, &solver)?;
    let abm = run_abm(&abm_cfg)?;
    let rows = compare_runs(&abm, &br, &fr, solver.mass_floor)?;

    let times = slot_times(abm_cfg.slots(), slots.slot_len);
    let files = vec![
        OutputFile {
            name: "cdf_abm.csv".into(),
            contents: cdf_table(&times, &cdf(&abm.pbar[0]), &cdf(&abm.pbar[1])),
        },
        OutputFile {
            name: "cdf_br.csv".into(),
            contents: strategy_csv(&br.pa, &br.pb, slots.slot_len),
        },
        OutputFile {
            name: "cdf_fr.csv".into(),
            contents: strategy_csv(&fr.pa, &fr.pb, slots.slot_len),
        },
    ];

    let mut summary = Table::new();
    summary.insert("seed".into(), Value::Integer(abm_cfg.seed as i64));
    for row in &rows {
        let mut t = Table::new();
        t.insert("support_abm".into(), Value::Integer(row.support[0] as i64));
        t.insert("support_br".into(), Value::Integer(row.support[1] as i64));
        t.insert("support_fr".into(), Value::Integer(row.support[2] as i64));
        t.insert("wait_abm".into(), Value::Float(row.mean_wait[0]));
        t.insert("wait_br".into(), Value::Float(row.mean_wait[1]));
        t.insert("wait_fr".into(), Value::Float(row.mean_wait[2]));
        t.insert("cdf_distance_br".into(), Value::Float(row.distance_br));
        t.insert("cdf_distance_fr".into(), Value::Float(row.distance_fr));
        summary.insert(format!("belief_{}", row.belief), Value::Table(t));
    }
    summary.insert("br".into(), Value::Table(equilibrium_summary(&br)));
    summary.insert("fr_view_a".into(), Value::Table(equilibrium_summary(&fr.views[0])));
    summary.insert("fr_view_b".into(), Value::Table(equilibrium_summary(&fr.views[1])));
    summary.insert("exploration".into(), floats(&abm.exploration));
    let converged = br.report.converged && fr.views.iter().all(|v| v.report.converged);
    summary.insert("converged".into(), Value::Boolean(converged));
    finish(Mode::Compare, files, summary, converged)
}
