//! Subcommand pipelines. Each fills an [`Outputs`] buffer and returns;
//! the caller writes it only when the whole run succeeded.

use serde::Serialize;
use serde_json::json;
use te_spect::assembly::{assemble_system_with, build_basis, whiten, GalerkinSystem, WhitenedSystem};
use te_spect::companion::{
    build_companion, conjugate_pairing_defect, extract_spectrum, jordan_chains, recover_state_with_floor, resolvent_block_check,
    CompanionSystem, Spectrum,
};
use te_spect::counting::{count_row, fredholm_det, growth_profile, nudge_radius, winding_count, CountRow};
use te_spect::densela::Mat;
use te_spect::diagnostics::{numerical_range, potential_scan, trace_identity_check, trace_power, trace_report, ScanOptions};
use te_spect::model::{validate_problem, PotentialSpec, ProblemSpec};
use te_spect::oracles::{oracle_1d, oracle_disk, OracleRoot};
use te_spect::{synthetic, Error, Result};

use crate::config::RunConfig;
use crate::output::{num, Outputs};

pub fn problem(cfg: &RunConfig) -> Result<ProblemSpec> {
    let p = &cfg.problem;
    let spec = validate_problem(&p.operator_spec()?, &p.domain()?, &p.potential_spec()?)?;
    for w in &spec.warnings {
        log::warn!("{w:?}");
    }
    Ok(spec)
}

fn galerkin(cfg: &RunConfig, spec: &ProblemSpec) -> Result<GalerkinSystem> {
    let basis = build_basis(spec, cfg.basis.n, cfg.basis.family)?;
    assemble_system_with(spec, &basis, cfg.basis.policy())
}

fn whitened_at(cfg: &RunConfig, spec: &ProblemSpec, n: usize) -> Result<WhitenedSystem> {
    let basis = build_basis(spec, n, cfg.basis.family)?;
    whiten(assemble_system_with(spec, &basis, cfg.basis.policy())?)
}

fn companion(cfg: &RunConfig) -> Result<(ProblemSpec, CompanionSystem)> {
    let spec = problem(cfg)?;
    let w = whitened_at(cfg, &spec, cfg.basis.n)?;
    Ok((spec, build_companion(w)?))
}

fn matrix_rows(m: &Mat) -> Vec<Vec<String>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| num(m[(i, j)])).collect()).collect()
}

pub fn assemble(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let spec = problem(cfg)?;
    let sys = galerkin(cfg, &spec)?;
    let n = sys.size();
    let columns: Vec<String> = (0..n).map(|j| format!("c{j}")).collect();
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    for (name, m) in [("G.csv", &sys.g), ("A.csv", &sys.a), ("B.csv", &sys.b), ("C.csv", &sys.c)] {
        out.csv(name, &columns, matrix_rows(m));
    }
    let disc = sys.disc.as_ref();
    out.json(
        "assemble.json",
        &json!({
            "problem": spec,
            "basis_family": cfg.basis.family,
            "per_dim": cfg.basis.n,
            "size": n,
            "quad_nodes": disc.map(|d| d.quad_nodes),
            "asymmetry": disc.map(|d| d.asymmetry),
            "weak_strong_gap": disc.map(|d| d.weak_strong_gap),
            "matrices": ["G.csv", "A.csv", "B.csv", "C.csv"],
        }),
    );
    Ok(())
}

fn eigenvalue_rows(sp: &Spectrum) -> Vec<Vec<String>> {
    sp.eigenvalues
        .iter()
        .map(|e| {
            vec![
                e.index.to_string(),
                num(e.lambda.re),
                num(e.lambda.im),
                num(e.mu.re),
                num(e.mu.im),
                num(e.qep_residual),
                e.cluster_id.to_string(),
                e.multiplicity.to_string(),
            ]
        })
        .collect()
}

pub fn solve(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let (_, c) = companion(cfg)?;
    let sp = extract_spectrum(&c, &cfg.solve.options())?;
    out.csv(
        "eigenvalues.csv",
        &["index", "re_lambda", "im_lambda", "re_mu", "im_mu", "qep_residual", "cluster_id", "multiplicity"],
        eigenvalue_rows(&sp),
    );
    if cfg.solve.want_states {
        let mut rows = Vec::new();
        for (e, y) in sp.eigenvalues.iter().zip(&sp.vectors) {
            let st = recover_state_with_floor(&c, e.mu, y, cfg.solve.mu_floor)?;
            let u = c.whitened.to_basis(&st.u);
            let parts = [("u", Some(u)), ("v", st.v), ("w", st.w)];
            for (name, coeffs) in parts {
                for (j, z) in coeffs.iter().flatten().enumerate() {
                    rows.push(vec![e.index.to_string(), name.to_string(), j.to_string(), num(z.re), num(z.im)]);
                }
            }
        }
        out.csv("states.csv", &["index", "field", "j", "re", "im"], rows);
    }
    let lambdas = sp.lambdas();
    out.json(
        "solve.json",
        &json!({
            "size": c.size(),
            "eigenvalue_count": sp.eigenvalues.len(),
            "discarded": sp.discarded,
            "cluster_count": sp.clusters.len(),
            "first_real": sp.first_real(),
            "trace_defect": sp.trace_defect,
            "conjugate_pairing_defect": conjugate_pairing_defect(&lambdas),
            "max_qep_residual": sp.eigenvalues.iter().map(|e| e.qep_residual).fold(0.0, f64::max),
        }),
    );
    Ok(())
}

pub fn trace(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let (_, c) = companion(cfg)?;
    let sp = extract_spectrum(&c, &cfg.solve.options())?;
    let reports = cfg.trace.p.iter().map(|&p| trace_report(&c, p, Some(&sp))).collect::<Result<Vec<_>>>()?;
    out.json("trace.json", &json!({ "reports": reports }));
    Ok(())
}

pub fn range(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let (spec, c) = companion(cfg)?;
    let rep = numerical_range(&c, cfg.trace.samples, cfg.trace.seed, spec.p_min)?;
    let path = "range_samples.csv";
    out.csv(path, &["re_z", "im_z"], rep.samples.iter().map(|z| vec![num(z.re), num(z.im)]));
    let mut body = serde_json::to_value(&rep).expect("report serializes");
    body["samples_csv_path"] = json!(path);
    out.json("range.json", &body);
    Ok(())
}

#[derive(Serialize)]
struct Nudge {
    requested: f64,
    used: f64,
}

pub fn count(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let (_, c) = companion(cfg)?;
    let sp = extract_spectrum(&c, &cfg.solve.options())?;
    let lambdas = sp.lambdas();
    let mut radii = Vec::new();
    let mut nudges = Vec::new();
    for &r in &cfg.count.radii {
        let (used, moved) = nudge_radius(r, &lambdas);
        if moved {
            log::warn!("radius {r} sits near the spectrum; using {used}");
            nudges.push(Nudge { requested: r, used });
        }
        radii.push(used);
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("radii must stay strictly ascending after nudging".into()));
    }
    let (rows, fit) = match growth_profile(&c, &radii, cfg.count.points, Some(&lambdas)) {
        Ok(rep) => {
            let fit = json!({
                "fit_radii": rep.fit_radii,
                "slope": rep.slope,
                "ceiling": rep.ceiling,
                "growth_constant": rep.growth_constant,
            });
            (rep.rows, Some(fit))
        }
        Err(Error::InsufficientResolvedRange(k)) => {
            log::warn!("only {k} radii in the resolved window; growth fit skipped");
            let rows = radii.iter().map(|&r| count_row(&c, r, cfg.count.points, Some(&lambdas))).collect::<Result<Vec<CountRow>>>()?;
            (rows, None)
        }
        Err(e) => return Err(e),
    };
    out.csv(
        "count.csv",
        &["R", "winding", "jensen_bound", "max_log_f"],
        rows.iter().map(|r| vec![num(r.radius), r.winding.to_string(), num(r.jensen_bound), num(r.max_log_f)]),
    );
    out.json(
        "count.json",
        &json!({
            "points": cfg.count.points,
            "nudges": nudges,
            "rows": rows,
            "growth_fit": fit,
        }),
    );
    Ok(())
}

pub fn scan(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let spec = problem(cfg)?;
    let s = &cfg.scan;
    let opts = ScanOptions { per_dim: cfg.basis.n, family: cfg.basis.family, zero_tol: s.zero_tol, refine: s.refine };
    let rep = potential_scan(&spec, &PotentialSpec::Constant(s.base), &s.direction_spec(spec.dim())?, &s.grid(), &opts)?;
    out.csv(
        "scan.csv",
        &["s", "t", "dt", "d2t"],
        (0..rep.s_values.len()).map(|k| vec![num(rep.s_values[k]), num(rep.t_values[k]), num(rep.first_derivative[k]), num(rep.second_derivative[k])]),
    );
    out.json("scan.json", &rep);
    Ok(())
}

fn oracle_rows(roots: &[OracleRoot]) -> Vec<Vec<String>> {
    roots.iter().map(|r| vec![r.l.map(|l| l.to_string()).unwrap_or_default(), num(r.k), num(r.lambda), num(r.residual)]).collect()
}

pub fn oracle1d(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let o = &cfg.oracle;
    let roots = oracle_1d(o.v, o.k_min, o.k_max, o.points_per_unit)?;
    out.csv("oracle1d.csv", &["l", "k", "lambda", "residual"], oracle_rows(&roots));
    out.json("oracle1d.json", &json!({ "v": o.v, "roots": roots }));
    Ok(())
}

pub fn oracle_disk_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let o = &cfg.oracle;
    let roots = oracle_disk(o.v, o.l_max, o.k_min, o.k_max, o.points_per_unit)?;
    out.csv("oracle_disk.csv", &["l", "k", "lambda", "residual"], oracle_rows(&roots));
    out.json("oracle_disk.json", &json!({ "v": o.v, "l_max": o.l_max, "roots": roots }));
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub n: Vec<usize>,
    pub first_real: Vec<f64>,
    /// `|λ_k − λ_{k−1}| / |λ_k|`, one shorter than `n`.
    pub rel_change: Vec<f64>,
    pub cauchy_tol: f64,
    pub cauchy: bool,
}

pub fn convergence_table(cfg: &RunConfig) -> Result<ConvergenceTable> {
    let ns = &cfg.convergence.n_list;
    if ns.is_empty() || ns.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(format!("N list {ns:?} must be nonempty and ascending")));
    }
    let spec = problem(cfg)?;
    let mut first_real = Vec::with_capacity(ns.len());
    for &n in ns {
        let c = build_companion(whitened_at(cfg, &spec, n)?)?;
        let sp = extract_spectrum(&c, &cfg.solve.options())?;
        let lam = sp.first_real().ok_or_else(|| Error::InvalidArgument(format!("no real transmission eigenvalue at N = {n}")))?;
        log::info!("N = {n}: first real eigenvalue {lam}");
        first_real.push(lam);
    }
    let rel_change: Vec<f64> = first_real.windows(2).map(|w| (w[1] - w[0]).abs() / w[1].abs()).collect();
    let cauchy = rel_change.last().is_some_and(|&d| d < cfg.convergence.cauchy_tol);
    Ok(ConvergenceTable { n: ns.clone(), first_real, rel_change, cauchy_tol: cfg.convergence.cauchy_tol, cauchy })
}

pub fn convergence(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let t = convergence_table(cfg)?;
    out.csv(
        "convergence.csv",
        &["n", "first_real", "rel_change"],
        (0..t.n.len()).map(|k| vec![t.n[k].to_string(), num(t.first_real[k]), if k == 0 { String::new() } else { num(t.rel_change[k - 1]) }]),
    );
    out.json("convergence.json", &t);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub pass: bool,
}

fn check(name: &'static str, value: f64, expected: f64) -> Check {
    Check { name, value, expected, pass: (value - expected).abs() <= 1e-12 * expected.abs().max(1.0) }
}

/// The scalar pencil `Ã = [4]`, `B̃ = [5]` against its closed forms.
pub fn selftest_checks() -> Result<Vec<Check>> {
    let c = build_companion(synthetic::toy())?;
    let sp = extract_spectrum(&c, &Default::default())?;
    let mut mus: Vec<f64> = sp.all_mu.iter().map(|m| m.re).collect();
    mus.sort_by(f64::total_cmp);
    let lambdas = sp.lambdas();
    let mut checks = vec![
        check("eigenvalue_count", lambdas.len() as f64, 2.0),
        check("mu_min", mus[0], 0.25),
        check("mu_max", mus[1], 1.0),
        check("lambda_1", lambdas[0].re, 1.0),
        check("lambda_2", lambdas[1].re, 4.0),
        check("trace_d", trace_power(&c, 1)?.re, 1.25),
        check("trace_d2", trace_power(&c, 2)?.re, 17.0 / 16.0),
    ];
    let ids = trace_identity_check(&c.whitened, &c)?;
    checks.push(check("identity_residual_1", ids[0], 0.0));
    checks.push(check("identity_residual_2", ids[1], 0.0));
    for x in [0.5, 2.0, -3.0] {
        let f = fredholm_det(&c, x.into()).value().re;
        checks.push(check("fredholm_factorization", f, (1.0 - x) * (1.0 - x / 4.0)));
    }
    checks.push(check("winding_r2", winding_count(&c, 2.0, 512)?.count as f64, 1.0));
    let longest = (0..sp.clusters.len())
        .map(|id| jordan_chains(&c, &sp, id).map(|ch| ch.iter().map(|x| x.len()).max().unwrap_or(0)))
        .collect::<Result<Vec<_>>>()?;
    checks.push(check("longest_chain", longest.into_iter().max().unwrap_or(0) as f64, 1.0));
    let res = resolvent_block_check(&c, 2.5.into(), &lambdas)?;
    checks.push(Check { name: "resolvent_block", value: res, expected: 0.0, pass: res < 1e-12 });
    Ok(checks)
}

pub fn selftest(out: &mut Outputs) -> Result<bool> {
    let checks = selftest_checks()?;
    for ch in &checks {
        println!("{} {} value={} expected={}", if ch.pass { "PASS" } else { "FAIL" }, ch.name, ch.value, ch.expected);
    }
    let ok = checks.iter().all(|c| c.pass);
    out.json("selftest.json", &json!({ "checks": checks, "pass": ok }));
    Ok(ok)
}
