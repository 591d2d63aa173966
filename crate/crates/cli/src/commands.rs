use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use belief::bitalgebra::log2_len;
use belief::estimator::covariance_from_counts;
use belief::glm_bridge::probability_scale;
use belief::inference::nonzero_masks;
use belief::{
    aggregate, belief_to_glm, check_bounds, classify_degeneracy, detect_separation, fit_lse,
    fit_mp, fit_ridge, glm_to_belief, hidden_interaction_report, independence_report,
    run_comparison, significant_slopes, BeliefError, BeliefFit, BeliefModel, BitLabel,
    BitWeighting, CondIndepStatement, Correction, DegeneracyCase, DegeneracyReport, Expander,
    ExpansionConfig, HiddenInteractionMode, InteractionMask, Link, Scenario, SlopeTest,
};
use serde::Serialize;

use crate::args::{
    CorrectionArg, EstimatorArg, ExpandArgs, FitArgs, GlmCompareArgs, InferArgs, LinkArg, ModeArg,
    PredictArgs, ScaleArg, SimulateArgs, WeightsArg,
};
use crate::config::{check_response_not_predictor, code_response, expansion_config};
use crate::error::{CliError, CliResult};
use crate::table::{write_csv, write_text, Frame};

const SEPARATION_TOL: f64 = 1e-9;

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn response_column<'a>(frame: &'a Frame, name: &str) -> CliResult<&'a [String]> {
    frame.column(name).ok_or_else(|| {
        CliError::Usage(format!(
            "response column `{name}` not found in {}",
            frame.path.display()
        ))
    })
}

fn legend(cfg: &ExpansionConfig) -> String {
    let mut s = String::new();
    for (j, v) in cfg.variables.iter().enumerate() {
        let kind = match &v.kind {
            belief::expansion::VariableKind::ContinuousEcdf => "empirical CDF".to_string(),
            belief::expansion::VariableKind::ContinuousKnownRange { lo, hi } => {
                format!("range [{lo}, {hi}]")
            }
            belief::expansion::VariableKind::Binary { positive_level } => {
                format!("binary, +1 = `{positive_level}`")
            }
        };
        let _ = writeln!(
            s,
            "  A_{{{},.}} = {} ({kind}, depth {})",
            j + 1,
            v.name,
            v.depth
        );
    }
    s
}

fn cell_signs(cell: usize, labels: &[BitLabel]) -> String {
    labels
        .iter()
        .enumerate()
        .map(|(k, l)| format!("{l}={}", if cell >> k & 1 == 1 { "-1" } else { "+1" }))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Describes a set of cells, as a single bit condition when one suffices.
fn describe_event(cells: &[usize], labels: &[BitLabel]) -> String {
    let total = 1usize << labels.len();
    if cells.is_empty() {
        return "the empty event".into();
    }
    if cells.len() == total {
        return "every cell".into();
    }
    for (k, l) in labels.iter().enumerate() {
        for sign in [0usize, 1] {
            let matching = (0..total).filter(|t| t >> k & 1 == sign);
            if matching.clone().count() == cells.len() && matching.eq(cells.iter().copied()) {
                return format!("{l} = {}", if sign == 1 { "-1" } else { "+1" });
            }
        }
    }
    cells
        .iter()
        .map(|&t| format!("({})", cell_signs(t, labels)))
        .collect::<Vec<_>>()
        .join(" or ")
}

fn cells_list(cells: &[usize]) -> String {
    if cells.is_empty() {
        "none".into()
    } else {
        cells
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

pub fn expand(args: &ExpandArgs) -> CliResult<()> {
    let cfg = expansion_config(&args.expansion)?;
    if let Some(r) = &args.response {
        check_response_not_predictor(&cfg, r)?;
    } else if args.positive_level.is_some() {
        return Err(CliError::Usage(
            "--positive-level requires --response".into(),
        ));
    }
    let frame = Frame::read(&args.input)?;
    let response = match &args.response {
        Some(r) => Some(code_response(
            r,
            response_column(&frame, r)?,
            args.positive_level.as_deref(),
        )?),
        None => None,
    };
    let columns = frame.raw_columns();
    let panel = Expander::fit(&columns, &cfg)?.panel(&columns)?;

    let mut headers: Vec<String> = panel
        .labels
        .iter()
        .map(|l| format!("{}_{}", cfg.variables[l.variable].name, l.depth))
        .collect();
    headers.push("cell".into());
    if let Some(r) = &args.response {
        headers.push(r.clone());
    }
    let rows: Vec<Vec<String>> = (0..panel.n)
        .map(|i| {
            let mut row: Vec<String> = panel.row_bits(i).iter().map(|b| b.to_string()).collect();
            row.push(panel.cells[i].to_string());
            if let Some(b) = &response {
                row.push(b[i].to_string());
            }
            row
        })
        .collect();
    write_csv(args.output.as_deref(), &headers, &rows)
}

fn fit_report(
    args: &FitArgs,
    cfg: &ExpansionConfig,
    fit: &BeliefFit,
    degeneracy: &DegeneracyReport,
    labels: &[BitLabel],
    bounds: &belief::estimator::BoundsReport,
    clamped: &[usize],
) -> CliResult<String> {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "fit: n = {}, P = {} bits, {} cells, estimator {}{}",
        fit.n,
        fit.bits,
        fit.num_cells(),
        fit.kind,
        if fit.kind == belief::EstimatorKind::Ridge {
            format!(" (lambda = {})", fit.lambda)
        } else {
            String::new()
        }
    );
    let _ = match &args.positive_level {
        Some(level) => writeln!(s, "response: {}, B = +1 when `{level}`", args.response),
        None => writeln!(s, "response: {}, B = +1 when 1", args.response),
    };
    let _ = writeln!(s, "variables:");
    s.push_str(&legend(cfg));
    for (v, &c) in cfg.variables.iter().zip(clamped) {
        if c > 0 {
            let _ = writeln!(s, "  note: {c} value(s) of {} clamped to the range", v.name);
        }
    }

    let _ = writeln!(
        s,
        "degeneracy: case {} ({})",
        degeneracy.case.number(),
        match degeneracy.case {
            DegeneracyCase::Regular => "all cells observed, none deterministic",
            DegeneracyCase::DeterministicCells => "all cells observed, some deterministic",
            DegeneracyCase::EmptyCells => "some cells unobserved",
        }
    );
    let _ = writeln!(s, "empty cells: {}", cells_list(&degeneracy.empty_cells));
    let _ = writeln!(
        s,
        "deterministic cells: {}",
        cells_list(&degeneracy.separated_cells)
    );
    if let Some(note) = &degeneracy.note {
        let _ = writeln!(s, "note: {note}");
    }

    let sep = detect_separation(fit, SEPARATION_TOL)?;
    if sep.separated {
        let _ = writeln!(
            s,
            "separation: perfect separation, ||beta||_2 = {:.6}; B = +1 exactly on the event {}",
            sep.l2_norm,
            describe_event(&sep.event_cells, labels)
        );
    } else {
        let _ = writeln!(s, "separation: none, ||beta||_2 = {:.6}", sep.l2_norm);
    }
    let _ = writeln!(
        s,
        "bounds: max cell |E| = {:.6}, max row |E| = {:.6}, ||beta||_2 = {:.6} ({})",
        bounds.cell_max,
        bounds.row_max,
        bounds.l2_norm,
        if bounds.all_hold() { "ok" } else { "VIOLATED" }
    );

    let _ = writeln!(s, "\n{:>6}  {:<40} {:>14}", "mask", "interaction", "beta");
    for (m, b) in fit.beta.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:>6}  {:<40} {:>14.8}",
            m,
            InteractionMask(m as u32).label(labels),
            b
        );
    }
    Ok(s)
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let cfg = expansion_config(&args.expansion)?;
    check_response_not_predictor(&cfg, &args.response)?;
    match (args.estimator, args.lambda) {
        (EstimatorArg::Ridge, None) => {
            return Err(CliError::Usage(
                "--estimator ridge requires --lambda".into(),
            ))
        }
        (EstimatorArg::Ridge, Some(l)) if !(l > 0.0 && l.is_finite()) => {
            return Err(CliError::Usage(format!(
                "--lambda must be positive, got {l}"
            )))
        }
        (EstimatorArg::Lse | EstimatorArg::Mp, Some(_)) => {
            return Err(CliError::Usage(
                "--lambda applies only to --estimator ridge".into(),
            ))
        }
        _ => {}
    }

    let frame = Frame::read(&args.input)?;
    let response = code_response(
        &args.response,
        response_column(&frame, &args.response)?,
        args.positive_level.as_deref(),
    )?;
    let columns = frame.raw_columns();
    let expander = Expander::fit(&columns, &cfg)?;
    let panel = expander.panel(&columns)?;
    let table = aggregate(&panel, &response)?;
    let fitted = match args.estimator {
        EstimatorArg::Lse => fit_lse(&table).map_err(|e| match e {
            BeliefError::SingularDesign { cells } => CliError::Degenerate(format!(
                "least squares is singular: {} empty cell(s) [{}]; rerun with --estimator mp or ridge",
                cells.len(),
                cells_list(&cells)
            )),
            other => other.into(),
        })?,
        EstimatorArg::Mp => fit_mp(&table)?,
        EstimatorArg::Ridge => fit_ridge(&table, args.lambda.unwrap_or_default())?,
    };
    let bounds = check_bounds(&fitted, &panel)?;
    let degeneracy = classify_degeneracy(&table);
    let labels = cfg.labels();

    let model = BeliefModel::new(&fitted, &table, &labels, Some(expander));
    fs::write(&args.output, model.to_json() + "\n").map_err(|e| CliError::io(&args.output, e))?;
    let report = fit_report(
        args,
        &cfg,
        &fitted,
        &degeneracy,
        &labels,
        &bounds,
        &panel.clamped,
    )?;
    write_text(args.report.as_deref(), &report)
}

fn read_model(path: &Path) -> CliResult<BeliefModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    BeliefModel::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn predict(args: &PredictArgs) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let expander = model.expansion.as_ref().ok_or_else(|| {
        CliError::Usage(format!(
            "{} has no stored expansion and cannot score raw data",
            args.model.display()
        ))
    })?;
    let fit = model.fit()?;
    let frame = Frame::read(&args.input)?;
    let panel = expander.panel(&frame.raw_columns())?;
    let headers: Vec<String> = ["row", "cell", "expectation", "prob_plus", "train_count"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = panel
        .cells
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let p = belief::predict(&fit, c as usize)?;
            Ok(vec![
                i.to_string(),
                c.to_string(),
                p.expectation.to_string(),
                p.prob_plus.to_string(),
                model.counts[c as usize].to_string(),
            ])
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_csv(args.output.as_deref(), &headers, &rows)
}

#[derive(Serialize)]
struct Estimate {
    mask: u32,
    label: String,
    beta: f64,
}

#[derive(Serialize)]
struct InferReport {
    status: &'static str,
    explanation: Option<String>,
    degeneracy: DegeneracyReport,
    alpha: f64,
    correction: &'static str,
    estimates: Vec<Estimate>,
    tests: Vec<SlopeTest>,
    significant: Vec<String>,
    independence: Option<CondIndepStatement>,
}

pub fn infer(args: &InferArgs) -> CliResult<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "--alpha must lie in (0, 1), got {}",
            args.alpha
        )));
    }
    let model = read_model(&args.model)?;
    let table = model
        .cell_table()
        .map_err(|e| CliError::Data(format!("{}: {e}", args.model.display())))?;
    let labels = model.bit_labels();
    let fit = model.fit()?;
    let (correction, correction_name) = match args.correction {
        CorrectionArg::Bonferroni => (Correction::Bonferroni, "bonferroni"),
        CorrectionArg::None => (Correction::None, "none"),
    };
    let degeneracy = classify_degeneracy(&table);
    let tests = if degeneracy.case == DegeneracyCase::EmptyCells {
        Vec::new()
    } else {
        let cov = covariance_from_counts(&fit, &model.counts)?;
        significant_slopes(
            &fit.clone().with_covariance(cov),
            &table,
            args.alpha,
            correction,
            &labels,
        )?
    };
    let significant: Vec<InteractionMask> = nonzero_masks(&tests);

    let (status, explanation, independence) = match degeneracy.case {
        DegeneracyCase::Regular => (
            "complete",
            None,
            Some(independence_report(&significant, &labels)?),
        ),
        DegeneracyCase::DeterministicCells => (
            "partial",
            Some(format!(
                "cells [{}] have a deterministic response, so their plug-in variance is zero and \
                 the intervals understate the uncertainty; no independence statement is drawn",
                cells_list(&degeneracy.separated_cells)
            )),
            None,
        ),
        DegeneracyCase::EmptyCells => (
            "partial",
            Some(format!(
                "cells [{}] are unobserved, so the slopes are identified only by convention and \
                 their sampling variance is unbounded; no tests or independence statement are drawn",
                cells_list(&degeneracy.empty_cells)
            )),
            None,
        ),
    };

    let report = InferReport {
        status,
        explanation,
        degeneracy,
        alpha: args.alpha,
        correction: correction_name,
        estimates: fit
            .beta
            .iter()
            .enumerate()
            .map(|(m, &beta)| Estimate {
                mask: m as u32,
                label: InteractionMask(m as u32).label(&labels),
                beta,
            })
            .collect(),
        significant: significant.iter().map(|m| m.label(&labels)).collect(),
        tests,
        independence,
    };
    if let Some(path) = &args.output {
        write_text(Some(path), &to_json(&report))?;
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        "inference: {}, {} slopes, alpha = {} ({})",
        report.status,
        report.estimates.len(),
        report.alpha,
        report.correction,
    );
    if let Some(t) = report.tests.first() {
        let _ = writeln!(s, "per-slope level: {:.3e}", t.adjusted_alpha);
    }
    if let Some(e) = &report.explanation {
        let _ = writeln!(s, "note: {e}");
    }
    if report.tests.is_empty() {
        let _ = writeln!(s, "\n{:>6}  {:<32} {:>12}", "mask", "interaction", "beta");
        for e in &report.estimates {
            let _ = writeln!(s, "{:>6}  {:<32} {:>12.6}", e.mask, e.label, e.beta);
        }
    } else {
        let _ = writeln!(
            s,
            "\n{:>6}  {:<32} {:>12} {:>12} {:>10}  {:<27} sig",
            "mask", "interaction", "beta", "se", "z", "interval"
        );
        for t in &report.tests {
            let _ = writeln!(
                s,
                "{:>6}  {:<32} {:>12.6} {:>12.6} {:>10}  [{:>11.6}, {:>11.6}] {}",
                t.mask.0,
                t.label,
                t.estimate,
                t.std_error,
                t.z.map_or("-".into(), |z| format!("{z:.3}")),
                t.ci_low,
                t.ci_high,
                if t.significant { "*" } else { "" }
            );
        }
    }
    if let Some(ci) = &report.independence {
        let _ = writeln!(s, "\nindependence: {}", ci.statement);
    }
    write_text(None, &s)
}

#[derive(Serialize)]
struct GlmReport {
    scale: &'static str,
    link: String,
    masks: Vec<u32>,
    labels: Vec<String>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interactions: Option<Vec<belief::glm_bridge::HiddenInteraction>>,
}

fn one_per_bit(bits: usize) -> Vec<BitLabel> {
    (0..bits)
        .map(|k| BitLabel {
            variable: k,
            depth: 1,
        })
        .collect()
}

fn mask_vector_bits(v: &[f64], flag: &str) -> CliResult<usize> {
    log2_len(v.len()).map_err(|_| {
        CliError::Usage(format!(
            "--{flag} needs 2^P values indexed by mask, got {}",
            v.len()
        ))
    })
}

pub fn glm_compare(args: &GlmCompareArgs) -> CliResult<()> {
    let coef_mode = !args.coef.is_empty() || args.intercept.is_some();
    let modes = [coef_mode, !args.gamma.is_empty(), !args.beta.is_empty()];
    if modes.iter().filter(|&&m| m).count() != 1 {
        return Err(CliError::Usage(
            "give exactly one of --intercept/--coef, --gamma or --beta".into(),
        ));
    }
    let link = match args.link {
        LinkArg::Logit => Link::Logit,
        LinkArg::Probit => Link::Probit,
        LinkArg::Linear => Link::Linear { scale: 1.0 },
    };
    let probability = args.scale == ScaleArg::Probability;
    let on_scale = |beta: Vec<f64>| {
        if probability {
            probability_scale(&beta)
        } else {
            beta
        }
    };

    let (labels, beta, gamma, interactions) = if coef_mode {
        if args.coef.is_empty() {
            return Err(CliError::Usage("--intercept needs --coef".into()));
        }
        let weighting = match args.weights {
            WeightsArg::Dyadic => BitWeighting::Dyadic,
            WeightsArg::Unit => BitWeighting::Unit,
        };
        let mode = match args.mode {
            ModeArg::Truncated => HiddenInteractionMode::Truncated,
            ModeArg::Conditional => HiddenInteractionMode::Conditional,
        };
        let r = hidden_interaction_report(
            args.intercept.unwrap_or(0.0),
            &args.coef,
            &link,
            args.depth,
            weighting,
            mode,
        )?;
        let beta = if probability {
            r.beta_probability
        } else {
            r.beta
        };
        (r.bit_labels, beta, r.gamma, Some(r.interactions))
    } else if !args.gamma.is_empty() {
        let bits = mask_vector_bits(&args.gamma, "gamma")?;
        let beta = glm_to_belief(&args.gamma, &link)?;
        (one_per_bit(bits), on_scale(beta), args.gamma.clone(), None)
    } else {
        let bits = mask_vector_bits(&args.beta, "beta")?;
        let expectation: Vec<f64> = if probability {
            args.beta
                .iter()
                .enumerate()
                .map(|(m, &b)| if m == 0 { 2.0 * b - 1.0 } else { 2.0 * b })
                .collect()
        } else {
            args.beta.clone()
        };
        let gamma = belief_to_glm(&expectation, &link)?;
        (one_per_bit(bits), args.beta.clone(), gamma, None)
    };

    let masks: Vec<u32> = (0..beta.len() as u32).collect();
    let report = GlmReport {
        scale: if probability {
            "probability"
        } else {
            "expectation"
        },
        link: link.to_string(),
        labels: masks
            .iter()
            .map(|&m| InteractionMask(m).label(&labels))
            .collect(),
        masks,
        beta,
        gamma,
        interactions,
    };
    write_text(args.output.as_deref(), &to_json(&report))
}

#[derive(Serialize)]
struct SimulateReport {
    scenario: u8,
    seed: u64,
    n_train: usize,
    n_test: usize,
    depths: Vec<usize>,
    logistic_converged: bool,
    auc: Vec<MethodAuc>,
}

#[derive(Serialize)]
struct MethodAuc {
    method: String,
    auc: f64,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let scenario = Scenario::from_id(args.scenario).map_err(|e| CliError::Usage(e.to_string()))?;
    if args.depths.is_empty() {
        return Err(CliError::Usage("--depths is empty".into()));
    }
    if args.n_train == 0 || args.n_test == 0 {
        return Err(CliError::Usage(
            "--n-train and --n-test must be positive".into(),
        ));
    }
    let c = run_comparison(scenario, &args.depths, args.n_train, args.n_test, args.seed)?;
    let report = SimulateReport {
        scenario: scenario.id(),
        seed: c.seed,
        n_train: c.n_train,
        n_test: c.n_test,
        depths: args.depths.clone(),
        logistic_converged: c.logistic_converged,
        auc: c
            .methods
            .iter()
            .map(|m| MethodAuc {
                method: m.method.clone(),
                auc: m.auc,
            })
            .collect(),
    };
    write_text(args.output.as_deref(), &to_json(&report))?;
    if let Some(path) = &args.roc {
        let headers: Vec<String> = ["method", "fpr", "tpr"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<String>> = c
            .methods
            .iter()
            .flat_map(|m| {
                m.roc
                    .points
                    .iter()
                    .map(|(x, y)| vec![m.method.clone(), x.to_string(), y.to_string()])
            })
            .collect();
        write_csv(Some(path), &headers, &rows)?;
    }
    Ok(())
}
