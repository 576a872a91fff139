//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances are pinned here and never loosened.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use te_spect::assembly::{whitened_problem, BasisFamily};
use te_spect::companion::{
    build_companion, conjugate_pairing_defect, extract_spectrum, jordan_chain_residual, jordan_chains, match_multisets,
    pencil_linearization_roots, resolvent_block_check, CompanionSystem, SolveOptions, Spectrum,
};
use te_spect::counting::{fredholm_det, jensen_bound, nudge_radius, winding_count};
use te_spect::diagnostics::{
    numerical_range, potential_scan, schatten_profile, trace_functional, trace_identity_check, trace_power, ScanOptions,
};
use te_spect::model::{validate_problem, DomainSpec, OperatorSpec, PotentialSpec, ProblemSpec};
use te_spect::oracles::{bessel_j, bessel_zeros, disk_det, oracle_1d, oracle_disk, DEFAULT_POINTS_PER_UNIT};
use te_spect::{synthetic, Error};

type Outcome = Result<String, String>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn problem(dim: usize, bilaplacian: bool, v: f64) -> ProblemSpec {
    let op = if bilaplacian { OperatorSpec::bilaplacian(dim) } else { OperatorSpec::laplacian(dim) }.unwrap();
    validate_problem(&op, &DomainSpec::for_dim(dim).unwrap(), &PotentialSpec::Constant(v)).unwrap()
}

fn system(dim: usize, bilaplacian: bool, v: f64, n: usize, family: BasisFamily) -> CompanionSystem {
    build_companion(whitened_problem(&problem(dim, bilaplacian, v), n, family).unwrap()).unwrap()
}

fn helmholtz(n: usize) -> CompanionSystem {
    system(1, false, 3.0, n, BasisFamily::ClampedPolynomial)
}

fn bilaplacian(n: usize) -> CompanionSystem {
    system(1, true, 3.0, n, BasisFamily::ClampedPolynomial)
}

fn solve(cs: &CompanionSystem) -> Spectrum {
    extract_spectrum(cs, &SolveOptions::default()).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(label: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, format!("{label}: {got} vs {want} (tol {tol:e})"))
}

fn within(limit_s: f64, start: Instant) -> Result<f64, String> {
    let t = start.elapsed().as_secs_f64();
    ensure(t < limit_s, format!("runtime {t:.2}s over {limit_s}s"))?;
    Ok(t)
}

fn toy_scalar() -> Outcome {
    let start = Instant::now();
    let cs = build_companion(synthetic::toy()).map_err(|e| e.to_string())?;
    let sp = solve(&cs);
    let mut mus: Vec<f64> = sp.all_mu.iter().map(|m| m.re).collect();
    mus.sort_by(f64::total_cmp);
    ensure(mus.len() == 2 && sp.all_mu.iter().all(|m| m.im.abs() <= 1e-12), format!("mu = {:?}", sp.all_mu))?;
    close("mu_1", mus[0], 0.25, 1e-12)?;
    close("mu_2", mus[1], 1.0, 1e-12)?;
    let l = sp.lambdas();
    ensure(l.len() == 2, format!("lambda = {l:?}"))?;
    close("lambda_1", l[0].re, 1.0, 1e-12)?;
    close("lambda_2", l[1].re, 4.0, 1e-12)?;
    let t1 = trace_power(&cs, 1).unwrap();
    let t2 = trace_power(&cs, 2).unwrap();
    close("tr D", t1.re, 1.25, 1e-12)?;
    close("tr D^2", t2.re, 1.0625, 1e-12)?;
    // tr D² = tr((B̃Ã⁻¹B̃ − 2)Ã⁻¹) with Ã = 4, B̃ = 5.
    let remark = (25.0 / 4.0 - 2.0) / 4.0;
    close("remark value", remark, 17.0 / 16.0, 1e-15)?;
    close("tr D^2 vs remark", t2.re, remark, 1e-12)?;
    for x in [-3.0, -0.5, 0.5, 2.0, 3.0, 7.5] {
        let f = fredholm_det(&cs, c(x)).value();
        let want = (1.0 - x) * (1.0 - x / 4.0);
        ensure((f - c(want)).norm() <= 1e-12, format!("f({x}) = {f}, want {want}"))?;
    }
    let w = winding_count(&cs, 2.0, 512).unwrap();
    ensure(w.count == 1, format!("winding at R=2 is {}", w.count))?;
    let t = within(1.0, start)?;
    Ok(format!("spectrum {{1, 0.25}}, traces 1.25 / 1.0625, winding 1 ({t:.3}s)"))
}

fn helmholtz_mode() -> Outcome {
    let start = Instant::now();
    let target = 4.0 * PI * PI;
    let roots = oracle_1d(3.0, 0.5, 10.0, DEFAULT_POINTS_PER_UNIT).map_err(|e| e.to_string())?;
    let k = roots.iter().map(|r| r.k).find(|k| (k - 2.0 * PI).abs() < 1e-3).ok_or("oracle misses k = 2π")?;
    close("oracle k", k, 2.0 * PI, 1e-8)?;
    let cs = helmholtz(48);
    let sp = solve(&cs);
    let best = sp
        .eigenvalues
        .iter()
        .min_by(|a, b| (a.lambda - target).norm().total_cmp(&(b.lambda - target).norm()))
        .ok_or("empty spectrum")?;
    let rel = (best.lambda - target).norm() / target;
    ensure(rel < 1e-4, format!("closest λ = {} (rel {rel:e})", best.lambda))?;
    ensure(best.qep_residual < 1e-8, format!("qep_residual {:e}", best.qep_residual))?;
    let t = within(10.0, start)?;
    Ok(format!("λ = {:.10} rel {rel:.2e}, qep_residual {:.2e} ({t:.2}s)", best.lambda.re, best.qep_residual))
}

fn reciprocal_correspondence() -> Outcome {
    let start = Instant::now();
    let mut report = Vec::new();
    for (name, cs) in [("helmholtz N=32", helmholtz(32)), ("bilaplacian N=24", bilaplacian(24))] {
        let sp = solve(&cs);
        let inv: Vec<Complex64> = sp.all_mu.iter().filter(|m| m.norm() > 1e-12).map(|m| m.inv()).collect();
        let direct = pencil_linearization_roots(&cs.whitened).map_err(|e| e.to_string())?;
        let gap = match_multisets(&inv, &direct, 1e-4).ok_or(format!("{name}: multisets have different cluster structure"))?;
        ensure(gap < 1e-7, format!("{name}: relative gap {gap:e}"))?;
        report.push(format!("{name} {gap:.1e}"));
    }
    let t = within(30.0, start)?;
    Ok(format!("{} ({t:.2}s)", report.join(", ")))
}

fn suite() -> Vec<(String, CompanionSystem)> {
    let mut s = vec![
        ("toy".to_string(), build_companion(synthetic::toy()).unwrap()),
        ("helmholtz N=32".into(), helmholtz(32)),
        ("helmholtz N=48".into(), helmholtz(48)),
        ("bilaplacian N=24".into(), bilaplacian(24)),
        ("helmholtz V=1 N=32".into(), system(1, false, 1.0, 32, BasisFamily::ClampedPolynomial)),
        ("bilaplacian V=1 N=24".into(), system(1, true, 1.0, 24, BasisFamily::ClampedPolynomial)),
        ("square N=12".into(), system(2, false, 3.0, 12, BasisFamily::ClampedPolynomial)),
        ("defective".into(), build_companion(synthetic::defective(2)).unwrap()),
    ];
    for seed in 0..5 {
        s.push((format!("random seed {seed}"), build_companion(synthetic::random(16, seed).unwrap()).unwrap()));
    }
    s
}

fn lidskii_and_conjugates() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let systems = suite();
    for (name, cs) in &systems {
        let sp = solve(cs);
        let tr = trace_power(cs, 1).unwrap();
        let lidskii = (sp.mu_sum() - tr).norm() / tr.norm().max(1.0);
        ensure(lidskii < 1e-8, format!("{name}: |Σμ − tr D| relative {lidskii:e}"))?;
        let pairing = conjugate_pairing_defect(&sp.all_mu);
        ensure(pairing < 1e-8, format!("{name}: conjugate pairing defect {pairing:e}"))?;
        worst = (worst.0.max(lidskii), worst.1.max(pairing));
    }
    Ok(format!("{} systems, max Lidskii {:.1e}, max pairing {:.1e}", systems.len(), worst.0, worst.1))
}

fn trace_identities() -> Outcome {
    let mut systems: Vec<(String, CompanionSystem)> = vec![
        ("toy".into(), build_companion(synthetic::toy()).unwrap()),
        ("helmholtz N=32".into(), helmholtz(32)),
        ("bilaplacian N=24".into(), bilaplacian(24)),
    ];
    for seed in 0..20 {
        let w = if seed % 2 == 0 { synthetic::random(12 + seed as usize, seed) } else { synthetic::random_psd(12 + seed as usize, seed) };
        systems.push((format!("random seed {seed}"), build_companion(w.unwrap()).unwrap()));
    }
    let mut worst = 0.0f64;
    for (name, cs) in &systems {
        let r = trace_identity_check(&cs.whitened, cs).map_err(|e| e.to_string())?;
        ensure(r[0] < 1e-10 && r[1] < 1e-10, format!("{name}: residuals {r:?}"))?;
        worst = worst.max(r[0]).max(r[1]);
    }
    Ok(format!("{} systems, max residual {worst:.1e}", systems.len()))
}

fn resolvent_blocks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut systems: Vec<(String, CompanionSystem)> = vec![
        ("toy".into(), build_companion(synthetic::toy()).unwrap()),
        ("helmholtz N=32".into(), helmholtz(32)),
        ("bilaplacian N=24".into(), bilaplacian(24)),
    ];
    for seed in 0..3 {
        systems.push((format!("random seed {seed}"), build_companion(synthetic::random(10, seed).unwrap()).unwrap()));
    }
    let mut worst = 0.0f64;
    for (name, cs) in &systems {
        let sp = solve(cs);
        let lambdas = sp.lambdas();
        let scale = lambdas.iter().map(|l| l.norm()).fold(1.0, f64::max).min(200.0);
        let mut tested = 0;
        while tested < 5 {
            let lambda = Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
            match resolvent_block_check(cs, lambda, &lambdas) {
                Ok(d) => {
                    ensure(d < 1e-8, format!("{name}: λ = {lambda}: discrepancy {d:e}"))?;
                    worst = worst.max(d);
                    tested += 1;
                }
                Err(Error::NearSpectrum { .. }) => continue,
                Err(e) => return Err(format!("{name}: {e}")),
            }
        }
    }
    Ok(format!("{} systems x 5 points, max discrepancy {worst:.1e}", systems.len()))
}

fn schatten_decay() -> Outcome {
    let start = Instant::now();
    let mut report = Vec::new();
    let cases = [
        ("helmholtz 1D", system(1, false, 3.0, 48, BasisFamily::ClampedPolynomial), -2.0, 0.15),
        ("bilaplacian 1D", system(1, true, 3.0, 32, BasisFamily::ClampedPolynomial), -4.0, 0.15),
        ("helmholtz square N=20", system(2, false, 3.0, 20, BasisFamily::ClampedTrig), -1.0, 0.20),
    ];
    for (name, cs, want, rel) in cases {
        let prof = schatten_profile(&cs).map_err(|e| e.to_string())?;
        ensure(prof.decay_theory == Some(want), format!("{name}: theory {:?}", prof.decay_theory))?;
        let got = prof.decay_exponent;
        ensure((got - want).abs() <= rel * want.abs(), format!("{name}: exponent {got:.4} vs {want} ±{}%", rel * 100.0))?;
        report.push(format!("{name} {got:.3}"));
    }
    let t = within(120.0, start)?;
    Ok(format!("{} ({t:.1}s)", report.join(", ")))
}

fn counting() -> Outcome {
    let cs = helmholtz(48);
    let sp = solve(&cs);
    let lambdas = sp.lambdas();
    let mut checked = Vec::new();
    for r in [30.0, 100.0, 300.0, 1000.0, 3000.0] {
        let (r, _) = nudge_radius(r, &lambdas);
        let w = winding_count(&cs, r, 512).map_err(|e| e.to_string())?;
        let inside = lambdas.iter().filter(|l| l.norm() < r).count();
        ensure(w.count == inside, format!("R = {r}: winding {} vs {inside} computed", w.count))?;
        let (half, _) = nudge_radius(r / 2.0, &lambdas);
        let bound = jensen_bound(&cs, r, 512).map_err(|e| e.to_string())?;
        let wh = winding_count(&cs, half, 512).map_err(|e| e.to_string())?;
        ensure(bound >= wh.count as f64, format!("R = {r}: Jensen {bound} < N(R/2) = {}", wh.count))?;
        checked.push(w.count);
    }
    let radii: Vec<f64> = (0..12).map(|k| 20.0 * 1.5f64.powi(k)).map(|r| nudge_radius(r, &lambdas).0).collect();
    let rep = te_spect::counting::growth_profile(&cs, &radii, 512, Some(&lambdas)).map_err(|e| e.to_string())?;
    ensure((rep.slope - 0.5).abs() <= 0.15, format!("growth slope {:.4} outside 0.5 ± 0.15", rep.slope))?;
    Ok(format!("counts {checked:?} match, slope {:.3} over {} radii", rep.slope, rep.fit_radii.len()))
}

fn existence_positivity() -> Outcome {
    let mut report = Vec::new();
    for (name, bil, n) in [("helmholtz", false, 32), ("bilaplacian", true, 24)] {
        let p = problem(1, bil, 1.0);
        let t = trace_functional(&p, n, BasisFamily::ClampedPolynomial).map_err(|e| e.to_string())?.value();
        ensure(t > 0.0, format!("{name}: tr(B̃Ã⁻¹) = {t}"))?;
        let cs = build_companion(whitened_problem(&p, n, BasisFamily::ClampedPolynomial).unwrap()).unwrap();
        let range = numerical_range(&cs, 10_000, 7, p.p_min).map_err(|e| e.to_string())?;
        ensure(range.samples.len() >= 10_000, "too few range samples")?;
        ensure(range.min_re >= -1e-10, format!("{name}: min Re z = {:e}", range.min_re))?;
        let sp = solve(&cs);
        ensure(!sp.eigenvalues.is_empty(), format!("{name}: no eigenvalues"))?;
        report.push(format!("{name} t={t:.4} minRe={:.1e} #λ={}", range.min_re, sp.eigenvalues.len()));
    }
    Ok(report.join(", "))
}

fn generic_scan() -> Outcome {
    let p = problem(1, false, 1.0);
    let grid: Vec<f64> = (0..=20).map(|k| 0.1 * k as f64).collect();
    let opts = ScanOptions::new(24, BasisFamily::ClampedPolynomial);
    let rep = potential_scan(&p, &PotentialSpec::Constant(1.0), &PotentialSpec::Constant(1.0), &grid, &opts).map_err(|e| e.to_string())?;
    ensure(rep.t_values.iter().all(|&t| t > 0.0), "t(s) not strictly positive")?;
    ensure(rep.near_zeros.is_empty(), format!("near zeros at {:?}", rep.near_zeros))?;
    let ratio = rep.refinement_ratio.ok_or("no refinement")?;
    ensure((ratio - 0.5).abs() <= 0.2 * 0.5, format!("refinement ratio {ratio:.4} not within 20% of 1/2"))?;
    ensure(rep.max_cyclicity_residual < 1e-10, format!("cyclicity residual {:e}", rep.max_cyclicity_residual))?;
    Ok(format!("ratio {ratio:.4}, min t {:.4}, cyclicity {:.1e}", rep.t_values.iter().cloned().fold(f64::INFINITY, f64::min), rep.max_cyclicity_residual))
}

fn square_convergence() -> Outcome {
    let start = Instant::now();
    let p = problem(2, false, 3.0);
    let mut values = Vec::new();
    for n in [12, 16, 20, 24] {
        let cs = build_companion(whitened_problem(&p, n, BasisFamily::ClampedPolynomial).unwrap()).unwrap();
        let lam = solve(&cs).first_real().ok_or(format!("no real eigenvalue at N = {n}"))?;
        values.push(lam);
    }
    let rel: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs() / w[1].abs()).collect();
    let last = *rel.last().unwrap();
    ensure(last < 1e-3, format!("final relative change {last:e}; values {values:?}"))?;
    let t = within(300.0, start)?;
    Ok(format!("λ₁ = {:.10}, final rel change {last:.1e} ({t:.1}s)", values[3]))
}

fn bessel_disk() -> Outcome {
    let z = bessel_zeros(0, 3.0).map_err(|e| e.to_string())?;
    close("j_{0,1}", *z.first().ok_or("no zero")?, 2.404825558, 1e-8)?;
    for l in 1..=20 {
        for i in 0..=99 {
            let x = 0.5 + 0.5 * i as f64;
            let (a, b, m) = (bessel_j(l - 1, x).unwrap(), bessel_j(l + 1, x).unwrap(), bessel_j(l, x).unwrap());
            let scale = a.abs().max(b.abs()).max(1e-300);
            let d = (a + b - 2.0 * l as f64 / x * m).abs();
            ensure(d <= 1e-10 * scale, format!("recurrence l={l} x={x}: {d:e}"))?;
        }
    }
    let roots = oracle_disk(3.0, 6, 0.05, 15.0, 500).map_err(|e| e.to_string())?;
    ensure(!roots.is_empty(), "no disk roots")?;
    for r in &roots {
        let l = r.l.ok_or("untagged disk root")?;
        ensure(r.residual < 1e-10, format!("l={l} k={}: residual {:e}", r.k, r.residual))?;
        let (a, b) = (disk_det(l, 2.0, r.bracket[0]).unwrap(), disk_det(l, 2.0, r.bracket[1]).unwrap());
        ensure(a * b <= 0.0, format!("l={l} k={}: bracket has no sign change", r.k))?;
    }
    Ok(format!("j01 = {:.10}, {} disk roots verified", z[0], roots.len()))
}

fn jordan() -> Outcome {
    let cs = build_companion(synthetic::defective(2)).unwrap();
    let sp = solve(&cs);
    let id = sp.eigenvalues.iter().find(|e| (e.lambda - 1.0).norm() < 1e-4).ok_or("no eigenvalue at 1")?.cluster_id;
    let chains = jordan_chains(&cs, &sp, id).map_err(|e| e.to_string())?;
    let long = chains.iter().find(|ch| ch.len() >= 2).ok_or(format!("longest chain {:?}", chains.iter().map(|c| c.len()).max()))?;
    let res = jordan_chain_residual(&cs.whitened, c(1.0), &long.vectors).map_err(|e| e.to_string())?;
    let worst = res.iter().cloned().fold(0.0, f64::max);
    ensure(worst < 1e-10, format!("chain residual {worst:e}"))?;
    let toy = build_companion(synthetic::toy()).unwrap();
    let tsp = solve(&toy);
    for cl in &tsp.clusters {
        let ch = jordan_chains(&toy, &tsp, cl.id).map_err(|e| e.to_string())?;
        ensure(ch.iter().all(|c| c.len() < 2), format!("toy cluster {} reports a chain of length ≥ 2", cl.id))?;
    }
    Ok(format!("defective: chain length {} residual {worst:.1e}; toy: no long chains", long.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("toy scalar system", toy_scalar),
        ("1D Helmholtz mode at 4π²", helmholtz_mode),
        ("reciprocal correspondence", reciprocal_correspondence),
        ("Lidskii sum and conjugate symmetry", lidskii_and_conjugates),
        ("trace identities", trace_identities),
        ("resolvent block formula", resolvent_blocks),
        ("Schatten decay", schatten_decay),
        ("zero counting", counting),
        ("existence and positivity at V = 1", existence_positivity),
        ("generic-existence scan", generic_scan),
        ("square self-convergence", square_convergence),
        ("Bessel and disk oracle", bessel_disk),
        ("Jordan chains", jordan),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
