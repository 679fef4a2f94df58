//! Subcommand implementations.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use spectral_dp_core::bounds::{
    baseline_bounds, check_gaps, cor_rank_k_bound, cor_subspace_bounds, markov_tail, theorem_bound, theorem_bound_core,
};
use spectral_dp_core::dbm::{
    compare_sde_vs_matrix_with, eigen_trajectories, gap_margins, gap_tail_from_margins, integrate_eigen_sde,
    integrate_vector_flow, mc_frobenius_integral_check, sample_bm_path, spectral_sups, spectral_tail_from_sups,
    SdeOptions, Trajectories,
};
use spectral_dp_core::experiments::{
    mc_rank_k_utility, mc_subspace_utility, mc_utility, synthetic_spectrum, wishart_min_gap_experiment,
    SpectrumProfile, UtilityEstimate,
};
use spectral_dp_core::ingest::{covariance, dataset_gap_analysis, preprocess};
use spectral_dp_core::linalg::eigvals_desc;
use spectral_dp_core::mechanism::{gaussian_perturb, rank_k_truncate, replace_spectrum, subspace_projector};
use spectral_dp_core::rng::derive_seed;
use spectral_dp_core::{PrivacyParams, SymMatrix, TargetSpectrum};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::exec::Parallel;
use crate::io::{self, CsvOptions};
use crate::report::{CsvTable, Report};

/// Stream family used to draw the basis of `--synthetic` matrices.
const SYNTHETIC_TAG: u64 = 0x5359_4e54;

/// Rendered output and where it should go.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub bytes: Vec<u8>,
    pub out: Option<PathBuf>,
}

pub fn execute(command: &Command) -> CliResult<Rendered> {
    let common = command.common();
    if common.threads == Some(0) {
        return Err(CliError::input("--threads must be at least 1"));
    }
    let (report, default) = match command {
        Command::Perturb(a) => (perturb(a)?, Format::Csv),
        Command::Approx(a) => (approx(a)?, Format::Csv),
        Command::RankK(a) => (release(a, "rank-k")?, Format::Csv),
        Command::Subspace(a) => (release(a, "subspace")?, Format::Csv),
        Command::CheckGaps(a) => (check_gaps_cmd(a)?, Format::Json),
        Command::Bound(a) => (bound(a)?, Format::Json),
        Command::McUtility(a) => (mc_utility_cmd(a)?, Format::Json),
        Command::McRankK(a) => (mc_rank(a, "mc-rank-k")?, Format::Json),
        Command::McSubspace(a) => (mc_rank(a, "mc-subspace")?, Format::Json),
        Command::SimulateDbm(a) => (simulate(a)?, Format::Csv),
        Command::ValidateGapLemma(a) => (gap_lemma(a)?, Format::Json),
        Command::ValidateSpectralLemma(a) => (spectral_lemma(a)?, Format::Json),
        Command::ValidateIntegralLemma(a) => (integral_lemma(a)?, Format::Json),
        Command::SdeVsMatrix(a) => (sde_vs_matrix(a)?, Format::Json),
        Command::WishartGaps(a) => (wishart(a)?, Format::Csv),
        Command::DatasetGaps(a) => (dataset(a)?, Format::Json),
    };
    Ok(Rendered { bytes: report.render(common.format.unwrap_or(default))?, out: common.out.clone() })
}

fn privacy(p: &PrivacyArgs) -> CliResult<PrivacyParams> {
    Ok(PrivacyParams::new(p.epsilon, p.delta)?)
}

fn executor(common: &Common) -> CliResult<Parallel> {
    Parallel::new(common.threads)
}

fn load_matrix(src: &MatrixSource, seed: u64) -> CliResult<SymMatrix> {
    match (&src.input, &src.sigma, &src.synthetic) {
        (Some(path), None, None) => io::read_matrix(path),
        (None, Some(sigma), None) => {
            if sigma.is_empty() || sigma.iter().any(|x| !x.is_finite()) {
                return Err(CliError::input("--sigma needs finite values"));
            }
            Ok(SymMatrix::from_diag(sigma))
        }
        (None, None, Some(spec)) => {
            let (profile, d) = parse_profile(spec, src.dim)?;
            Ok(synthetic_spectrum(d, &profile, derive_seed(seed, SYNTHETIC_TAG))?)
        }
        (None, None, None) => Err(CliError::input("one of --in, --sigma or --synthetic is required")),
        _ => Err(CliError::input("--in, --sigma and --synthetic are mutually exclusive")),
    }
}

fn parse_number(s: &str) -> CliResult<f64> {
    s.trim().parse().map_err(|_| CliError::input(format!("cannot parse '{s}' as a number")))
}

/// `uniform:GAP`, `geometric:TOP:RATIO` or `custom:S1,S2,...`.
pub fn parse_profile(spec: &str, dim: Option<usize>) -> CliResult<(SpectrumProfile, usize)> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| CliError::input(format!("bad profile '{spec}'")))?;
    let need_dim = || dim.ok_or_else(|| CliError::input(format!("--d is required for '{kind}' profiles")));
    match kind {
        "uniform" => Ok((SpectrumProfile::UniformGap { gap: parse_number(rest)? }, need_dim()?)),
        "geometric" => {
            let (top, ratio) =
                rest.split_once(':').ok_or_else(|| CliError::input("geometric profile is geometric:TOP:RATIO"))?;
            Ok((SpectrumProfile::Geometric { top: parse_number(top)?, ratio: parse_number(ratio)? }, need_dim()?))
        }
        "custom" => {
            let values = rest.split(',').map(parse_number).collect::<CliResult<Vec<_>>>()?;
            if dim.is_some_and(|d| d != values.len()) {
                return Err(CliError::input("--d disagrees with the custom profile length"));
            }
            let d = values.len();
            Ok((SpectrumProfile::Custom(values), d))
        }
        _ => Err(CliError::input(format!("unknown profile kind '{kind}'"))),
    }
}

fn resolve_target(t: &TargetArgs, sigma: &[f64]) -> CliResult<TargetSpectrum> {
    let d = sigma.len();
    if let Some(path) = &t.lambda {
        return io::read_target(path, d, t.k);
    }
    let k = t.k.ok_or_else(|| CliError::input("--k is required with a built-in target"))?;
    Ok(match t.target.unwrap_or(TargetKind::Projector) {
        TargetKind::Projector => TargetSpectrum::projector(d, k)?,
        TargetKind::Truncated => TargetSpectrum::truncated(sigma, k)?,
    })
}

fn resolve_horizon(h: &HorizonArgs) -> CliResult<f64> {
    match (h.horizon, h.epsilon, h.delta) {
        (Some(t), _, _) => {
            if !(t > 0.0) || !t.is_finite() {
                return Err(CliError::input(format!("--horizon must be positive, got {t}")));
            }
            Ok(t)
        }
        (None, Some(e), Some(d)) => Ok(PrivacyParams::new(e, d)?.horizon()),
        _ => Err(CliError::input("give --horizon, or both --epsilon and --delta")),
    }
}

fn matrix_table(m: &SymMatrix) -> CsvTable {
    let mut table = CsvTable::default();
    for row in m.rows() {
        table.push(row.iter().copied());
    }
    table
}

fn matrix_json(m: &SymMatrix) -> serde_json::Value {
    json!({ "dim": m.dim(), "matrix": m.rows().map(<[f64]>::to_vec).collect::<Vec<_>>() })
}

fn released<C: Serialize>(name: &'static str, seed: u64, config: &C, m: &SymMatrix) -> CliResult<Report> {
    Report::new(name, seed, config, &matrix_json(m), matrix_table(m))
}

fn perturb(a: &PerturbArgs) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let p = privacy(&a.privacy)?;
    let out = gaussian_perturb(&m, &p, a.common.seed);
    released("perturb", a.common.seed, a, &out)
}

fn approx(a: &ApproxArgs) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let p = privacy(&a.privacy)?;
    let target = io::read_target(&a.lambda, m.dim(), a.k)?;
    let out = replace_spectrum(&gaussian_perturb(&m, &p, a.common.seed), &target)?;
    released("approx", a.common.seed, a, &out)
}

fn release(a: &RankArgs, name: &'static str) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let p = privacy(&a.privacy)?;
    let noisy = gaussian_perturb(&m, &p, a.common.seed);
    let out = if name == "rank-k" { rank_k_truncate(&noisy, a.k)? } else { subspace_projector(&noisy, a.k)? };
    released(name, a.common.seed, a, &out)
}

fn check_gaps_cmd(a: &CheckGapsArgs) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let p = privacy(&a.privacy)?;
    let sigma = eigvals_desc(&m)?;
    let lambda1 = a.lambda1.unwrap_or(sigma[0]);
    let report = check_gaps(&sigma, a.k, lambda1, &p)?;
    let mut table = CsvTable::with_header(&["k", "gap", "threshold", "pass"]);
    for k in 1..sigma.len() {
        table.push([
            k.to_string(),
            report.gaps[k - 1].to_string(),
            report.threshold_per_k[k - 1].to_string(),
            report.per_k_pass[k - 1].to_string(),
        ]);
    }
    let result = json!({ "eigenvalues": sigma, "lambda1": lambda1, "report": report });
    Report::new("check-gaps", a.common.seed, a, &result, table)
}

fn bound(a: &BoundArgs) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let p = privacy(&a.privacy)?;
    let sigma = eigvals_desc(&m)?;
    let target = resolve_target(&a.target, &sigma)?;
    let k = target.k();
    let core = theorem_bound_core(&sigma, &target)?;
    let theorem = theorem_bound(&sigma, &target, &p, a.constant)?;
    let rank_k = cor_rank_k_bound(&sigma, k, &p).ok();
    let subspace = cor_subspace_bounds(&sigma, k, &p).ok();
    let baseline = baseline_bounds(&sigma, k, &p).ok();
    let gaps = if k < sigma.len() && target.lambdas()[0] > 0.0 {
        Some(check_gaps(&sigma, k, target.lambdas()[0], &p)?)
    } else {
        None
    };
    let markov = a.markov_s.map(|s| markov_tail(theorem, s));
    let mut table = CsvTable::with_header(&["quantity", "value"]);
    let rows: [(&str, Option<f64>); 9] = [
        ("theorem_core", Some(core)),
        ("theorem_bound", Some(theorem)),
        ("rank_k_bound", rank_k),
        ("subspace_general", subspace.map(|s| s.general)),
        ("subspace_uniform_gap", subspace.map(|s| s.uniform_gap)),
        ("rank_k_prior", baseline.map(|b| b.rank_k_prior)),
        ("subspace_prior", baseline.map(|b| b.subspace_prior)),
        ("gap_threshold", gaps.as_ref().map(|g| g.threshold)),
        ("markov_tail", markov),
    ];
    for (name, value) in rows {
        table.push([name.to_owned(), value.map_or_else(String::new, |v| v.to_string())]);
    }
    let result = json!({
        "eigenvalues": sigma,
        "target": target.lambdas(),
        "k": k,
        "theorem_core": core,
        "theorem_bound": theorem,
        "rank_k_bound": rank_k,
        "subspace_bounds": subspace,
        "baseline_bounds": baseline,
        "gap_report": gaps,
        "markov_tail": markov,
    });
    Report::new("bound", a.common.seed, a, &result, table)
}

fn utility_table(est: &UtilityEstimate) -> CsvTable {
    let mut table = CsvTable::with_header(&[
        "trials",
        "mean_frob",
        "mean_sq_frob",
        "stderr_frob",
        "stderr_sq",
        "q1",
        "median",
        "q3",
        "max_frob",
    ]);
    table.push([
        est.trials as f64,
        est.mean_frob,
        est.mean_sq_frob,
        est.stderr_frob,
        est.stderr_sq,
        est.quartiles.q1,
        est.quartiles.median,
        est.quartiles.q3,
        est.max_frob,
    ]);
    table
}

fn mc_utility_cmd(a: &McUtilityArgs) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let p = privacy(&a.privacy)?;
    let sigma = eigvals_desc(&m)?;
    let target = resolve_target(&a.target, &sigma)?;
    let est = mc_utility(&executor(&a.common)?, &m, &target, &p, a.trials, a.common.seed)?;
    let theorem = theorem_bound(&sigma, &target, &p, 128.0).ok();
    let result = json!({ "estimate": est, "theorem_bound": theorem, "target": target.lambdas() });
    Report::new("mc-utility", a.common.seed, a, &result, utility_table(&est))
}

fn mc_rank(a: &McRankArgs, name: &'static str) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let p = privacy(&a.privacy)?;
    let sigma = eigvals_desc(&m)?;
    let exec = executor(&a.common)?;
    let (est, bound) = if name == "mc-rank-k" {
        (mc_rank_k_utility(&exec, &m, a.k, &p, a.trials, a.common.seed)?, json!(cor_rank_k_bound(&sigma, a.k, &p).ok()))
    } else {
        (
            mc_subspace_utility(&exec, &m, a.k, &p, a.trials, a.common.seed)?,
            json!(cor_subspace_bounds(&sigma, a.k, &p).ok()),
        )
    };
    let result = json!({ "estimate": est, "corollary_bound": bound });
    Report::new(name, a.common.seed, a, &result, utility_table(&est))
}

fn trajectory_table(tr: &Trajectories) -> CsvTable {
    let mut header = vec!["t".to_owned()];
    header.extend((1..=tr.dim()).map(|i| format!("gamma_{i}")));
    let mut table = CsvTable::with_header(&header);
    for (t, g) in tr.times.iter().zip(&tr.gamma) {
        table.push(std::iter::once(*t).chain(g.iter().copied()));
    }
    table
}

fn simulate(a: &SimulateArgs) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let horizon = resolve_horizon(&a.horizon)?;
    let seed = a.common.seed;
    let (tr, extra) = match a.method {
        Method::Matrix => {
            let path = sample_bm_path(m.dim(), horizon, a.steps, seed)?;
            (eigen_trajectories(&m, &path)?, json!(null))
        }
        Method::Sde => (integrate_eigen_sde(&eigvals_desc(&m)?, horizon, a.steps, seed)?, json!(null)),
        Method::Flow => {
            let flow = integrate_vector_flow(&m, horizon, a.steps, seed)?;
            let e = &flow.eigenvectors;
            let columns: Vec<Vec<f64>> = (0..e.cols()).map(|j| e.column(j)).collect();
            let extra = json!({
                "final_eigenvectors": columns,
                "max_orthonormality_defect": flow.max_orthonormality_defect,
            });
            (flow.trajectories, extra)
        }
    };
    let table = trajectory_table(&tr);
    let result = json!({ "horizon": horizon, "trajectories": tr, "flow": extra });
    Ok(Report::new("simulate-dbm", seed, a, &result, table)?.note("horizon", horizon).note("repairs", tr.repairs))
}

fn tail_table(rows: &[(f64, spectral_dp_core::dbm::TailEstimate)]) -> CsvTable {
    let mut table = CsvTable::with_header(&[
        "alpha",
        "empirical",
        "analytic",
        "analytic_clamped",
        "trials",
        "exceedances",
        "stderr",
        "within_2se",
    ]);
    for (alpha, t) in rows {
        table.push([
            alpha.to_string(),
            t.empirical.to_string(),
            t.analytic.to_string(),
            t.analytic_clamped.to_string(),
            t.trials.to_string(),
            t.exceedances.to_string(),
            t.stderr.to_string(),
            t.within(2.0).to_string(),
        ]);
    }
    table
}

fn tail_json(rows: &[(f64, spectral_dp_core::dbm::TailEstimate)]) -> serde_json::Value {
    rows.iter().map(|(alpha, t)| json!({ "alpha": alpha, "estimate": t, "within_2se": t.within(2.0) })).collect()
}

fn gap_lemma(a: &GapLemmaArgs) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let horizon = resolve_horizon(&a.horizon)?;
    let d = m.dim();
    let pairs: Vec<usize> = match &a.pairs {
        Some(p) => p
            .iter()
            .map(|&i| {
                if i == 0 || i >= d {
                    Err(CliError::input(format!("gap index {i} outside [1, {}]", d.saturating_sub(1))))
                } else {
                    Ok(i - 1)
                }
            })
            .collect::<CliResult<_>>()?,
        None => (0..d.saturating_sub(1)).collect(),
    };
    let margins = gap_margins(&executor(&a.common)?, &m, &pairs, horizon, a.steps, a.trials, a.common.seed)?;
    let rows: Vec<_> = a.alpha.iter().map(|&alpha| (alpha, gap_tail_from_margins(&margins, alpha))).collect();
    let result = json!({ "horizon": horizon, "pairs": pairs.iter().map(|i| i + 1).collect::<Vec<_>>(), "tails": tail_json(&rows) });
    Report::new("validate-gap-lemma", a.common.seed, a, &result, tail_table(&rows))
}

fn spectral_lemma(a: &SpectralLemmaArgs) -> CliResult<Report> {
    let horizon = resolve_horizon(&a.horizon)?;
    if a.dim == 0 {
        return Err(CliError::input("--d must be positive"));
    }
    let sups = spectral_sups(&executor(&a.common)?, a.dim, horizon, a.steps, a.trials, a.common.seed)?;
    let rows: Vec<_> =
        a.alpha.iter().map(|&alpha| (alpha, spectral_tail_from_sups(&sups, a.dim, horizon, alpha))).collect();
    let result = json!({ "horizon": horizon, "tails": tail_json(&rows) });
    Report::new("validate-spectral-lemma", a.common.seed, a, &result, tail_table(&rows))
}

fn integral_lemma(a: &IntegralLemmaArgs) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let horizon = resolve_horizon(&a.horizon)?;
    let target = resolve_target(&a.target, &eigvals_desc(&m)?)?;
    let check =
        mc_frobenius_integral_check(&executor(&a.common)?, &m, &target, horizon, a.steps, a.trials, a.common.seed)?;
    let mut table = CsvTable::with_header(&[
        "lhs",
        "lhs_stderr",
        "rhs",
        "rhs_stderr",
        "martingale_term",
        "drift_term",
        "combined_stderr",
        "dominated_3se",
    ]);
    table.push([
        check.lhs.mean.to_string(),
        check.lhs.stderr.to_string(),
        check.rhs.mean.to_string(),
        check.rhs.stderr.to_string(),
        check.martingale_term.mean.to_string(),
        check.drift_term.mean.to_string(),
        check.combined_stderr.to_string(),
        check.dominated(3.0).to_string(),
    ]);
    let result = json!({ "horizon": horizon, "check": check, "dominated_3se": check.dominated(3.0) });
    Report::new("validate-integral-lemma", a.common.seed, a, &result, table)
}

fn sde_vs_matrix(a: &SdeArgs) -> CliResult<Report> {
    let m = load_matrix(&a.source, a.common.seed)?;
    let horizon = resolve_horizon(&a.horizon)?;
    let sigma = eigvals_desc(&m)?;
    let opts = SdeOptions { repulsion: a.repulsion, ..SdeOptions::default() };
    let cmp =
        compare_sde_vs_matrix_with(&executor(&a.common)?, &sigma, horizon, a.steps, a.trials, a.common.seed, &opts)?;
    let mut table = CsvTable::with_header(&[
        "i",
        "sde_mean",
        "sde_stderr",
        "matrix_mean",
        "matrix_stderr",
        "mean_diff",
        "combined_stderr",
        "variance_ratio_minus_one",
    ]);
    for (i, c) in cmp.per_eigenvalue.iter().enumerate() {
        table.push([
            (i + 1) as f64,
            c.sde.mean,
            c.sde.stderr,
            c.matrix.mean,
            c.matrix.stderr,
            c.mean_diff,
            c.combined_stderr,
            c.variance_ratio_minus_one,
        ]);
    }
    let result = json!({ "horizon": horizon, "comparison": cmp });
    Ok(Report::new("sde-vs-matrix", a.common.seed, a, &result, table)?
        .note("discrepancy", cmp.discrepancy)
        .note("repairs", cmp.repairs))
}

fn wishart(a: &WishartArgs) -> CliResult<Report> {
    if a.m.contains(&0) {
        return Err(CliError::input("every m must be at least 1"));
    }
    let table = wishart_min_gap_experiment(&executor(&a.common)?, a.dim, &a.m, a.trials, a.common.seed)?;
    let slope = table.loglog_slope();
    let mut csv = CsvTable::with_header(&spectral_dp_core::experiments::GapTable::COLUMNS);
    for r in &table.rows {
        csv.push([r.d as f64, r.m as f64, r.trials as f64, r.mean_min_gap, r.q1, r.q3]);
    }
    let result = json!({ "rows": table.rows, "loglog_slope": slope });
    let report = Report::new("wishart-gaps", a.common.seed, a, &result, csv)?;
    Ok(match slope {
        Some(s) => report.note("loglog_slope", s),
        None => report,
    })
}

fn dataset(a: &DatasetArgs) -> CliResult<Report> {
    if !a.delimiter.is_ascii() {
        return Err(CliError::input("--delimiter must be a single ASCII character"));
    }
    let options = CsvOptions {
        delimiter: a.delimiter as u8,
        has_header: !a.no_header,
        policy: a.drop,
        drop_columns: a.drop_columns.clone(),
    };
    let (table, rejections) = io::read_csv(&a.input, &options)?;
    let p = privacy(&a.privacy)?;
    let prepared = preprocess(&table)?;
    let m = covariance(&prepared)?;
    let report = dataset_gap_analysis(&m, &p)?;
    let mut csv = CsvTable::with_header(&["k", "gap", "threshold", "pass", "energy"]);
    for r in &report.rows {
        csv.push([
            r.k.to_string(),
            r.gap.map_or_else(String::new, |g| g.to_string()),
            r.threshold.map_or_else(String::new, |t| t.to_string()),
            r.pass.map_or_else(String::new, |p| p.to_string()),
            r.energy.to_string(),
        ]);
    }
    let result = json!({
        "columns": table.columns,
        "rejections": rejections,
        "preprocessing": prepared,
        "report": report,
    });
    let mut out =
        Report::new("dataset-gaps", a.common.seed, a, &result, csv)?.note("satisfied_up_to", report.satisfied_up_to);
    for w in prepared.warnings.iter().chain(&report.warnings) {
        out = out.note("warning", w);
    }
    Ok(out)
}
