//! Acceptance suite: ten end-to-end criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the report is always printed;
//! the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use coupled_wave::modal_sim::init::Lcg64;
use coupled_wave::modal_sim::{
    choose_kappa, energy_dissipation_residual, fit_decay, integral_inequality_check, mode_block, simulate,
    uniform_times, FitOptions,
};
use coupled_wave::oracle::{fd_leapfrog, match_roots, poly_roots, rk4_trace, GridState, Quartic};
use coupled_wave::resolvent::{stability_via_resolvent, ResolventOptions, Verdict};
use coupled_wave::spectrum::{
    chain_residual, decay_prediction, eigenvalues_case_i, eigenvalues_case_ii, mode_structure, CaseTag,
};
use coupled_wave::{classify_stability, schur_canonicalize, CanonicalForm, CoeffMatrix, Complex64, FormKind, ModalState};

type Outcome = Result<String, String>;

fn random_matrix(rng: &mut Lcg64) -> CoeffMatrix {
    CoeffMatrix::new(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0))
        .unwrap()
}

fn spectrum_of(form: &CanonicalForm, n: usize) -> [Complex64; 4] {
    match form.kind {
        FormKind::Rotation => eigenvalues_case_i(form.a, form.b, n).unwrap(),
        FormKind::Triangular => eigenvalues_case_ii(form.a, form.c, n),
    }
}

fn stability_equivalence() -> Outcome {
    let mut rng = Lcg64::new(1001);
    let mut disagreements = 0;
    let mut stable = 0;
    for _ in 0..1000 {
        let b = random_matrix(&mut rng);
        let verdict = classify_stability(&b).unwrap();
        let form = schur_canonicalize(&b).unwrap();
        let max_re = (1..=64).flat_map(|n| spectrum_of(&form, n)).map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        if verdict.stable != (max_re < 0.0) {
            disagreements += 1;
        }
        stable += verdict.stable as usize;
    }
    let msg = format!("1000 matrices ({stable} stable), {disagreements} disagreements");
    if disagreements == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// `l^4 + tr l^3 + (2n^2 + det) l^2 + tr n^2 l + n^4`, written out per form.
fn quartic(form: &CanonicalForm, n: usize) -> [f64; 5] {
    let n2 = (n * n) as f64;
    let (a, b, c) = (form.a, form.b, form.c);
    match form.kind {
        FormKind::Rotation => [1.0, 2.0 * a, 2.0 * n2 + a * a + b * b, 2.0 * a * n2, n2 * n2],
        FormKind::Triangular => [1.0, a + c, 2.0 * n2 + a * c, (a + c) * n2, n2 * n2],
    }
}

fn characteristic_fidelity() -> Outcome {
    let mut rng = Lcg64::new(2002);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let form = if k % 2 == 0 {
            let b = rng.uniform(0.1, 5.0) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
            CanonicalForm::rotation(rng.uniform(-5.0, 5.0), b).unwrap()
        } else {
            CanonicalForm::triangular(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)).unwrap()
        };
        let n = 1 + (rng.next_u64() % 50) as usize;
        let roots = poly_roots(&Quartic::from_real(quartic(&form, n)).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max(match_roots(&spectrum_of(&form, n), &roots));
    }
    let msg = format!("200 random (form, n), max paired distance {worst:.2e} (tol 1e-8)");
    if worst <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn jordan_chains() -> Outcome {
    let tri = |a, b, c| CanonicalForm::triangular(a, b, c).unwrap();
    let points = [
        (CaseTag::I, CanonicalForm::rotation(1.0, 1.0).unwrap(), vec![1]),
        (CaseTag::II1, tri(1.0, 1.0, 3.0), vec![1]),
        (CaseTag::II21, tri(2.0, 1.0, 4.0), vec![1, 2]),
        (CaseTag::II22, tri(2.0, 1.0, 5.0), vec![1]),
        (CaseTag::II23, tri(1.0, 1.0, 2.0), vec![1]),
        (CaseTag::II31, tri(1.0, 0.0, 1.0), vec![1]),
        (CaseTag::II32, tri(1.0, 1.0, 1.0), vec![1]),
        (CaseTag::II41, tri(2.0, 0.0, 2.0), vec![1]),
        (CaseTag::II42, tri(2.0, 1.0, 2.0), vec![1]),
    ];
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (tag, form, modes) in &points {
        for &n in modes {
            let s = mode_structure(form, n).unwrap();
            if s.case_tag != *tag {
                return Err(format!("expected {tag}, classified as {}", s.case_tag));
            }
            if s.chains.iter().map(|c| c.len()).sum::<usize>() != 4 {
                return Err(format!("{tag}: chains do not hold four vectors"));
            }
            let r = chain_residual(&mode_block(&form.coeffs(), n).unwrap().matrix, &s);
            worst = worst.max(r);
            let lens: Vec<String> = s.chains.iter().map(|c| c.len().to_string()).collect();
            lines.push(format!("{tag}@{n}[{}]", lens.join(",")));
        }
    }
    let msg = format!("max residual {worst:.2e} over {}", lines.join(" "));
    if worst <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn decay_rates() -> Outcome {
    let cases = [
        ("I a=1 b=1", CanonicalForm::rotation(1.0, 1.0).unwrap(), 0.5141317282433546),
        ("II a=2 c=5 b=0", CanonicalForm::triangular(2.0, 0.0, 5.0).unwrap(), 5.0 - 21f64.sqrt()),
        ("II a=c=2 b=1", CanonicalForm::triangular(2.0, 1.0, 2.0).unwrap(), 2.0),
    ];
    let times = uniform_times(50.0, 2001).unwrap();
    let init = ModalState::random(64, 42).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, form, omega) in cases {
        let pred = decay_prediction(&form).map_err(|e| e.to_string())?;
        if (pred.omega - omega).abs() > 1e-12 * omega {
            return Err(format!("{name}: predicted omega {} != {omega}", pred.omega));
        }
        let trace = simulate(&form.coeffs(), &init, &times, None).unwrap();
        let fit = fit_decay(&trace, &pred, &FitOptions::default()).map_err(|e| e.to_string())?;
        ok &= fit.rel_err_omega <= 0.02;
        parts.push(format!(
            "{name}: omega_hat={:.5} vs {:.5} (err {:.2}%), p_hat={:.2} (p={}, 2(L-1)={})",
            fit.omega_hat,
            omega,
            100.0 * fit.rel_err_omega,
            fit.p_hat,
            pred.p,
            pred.energy_exponent()
        ));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn energy_identity() -> Outcome {
    let form = CanonicalForm::rotation(1.0, 1.0).unwrap();
    let init = ModalState::random(16, 42).unwrap();
    let coarse = energy_dissipation_residual(&form, &init, &uniform_times(1.0, 501).unwrap()).unwrap();
    let fine = energy_dissipation_residual(&form, &init, &uniform_times(1.0, 1001).unwrap()).unwrap();
    let ratio = coarse / fine;
    let msg = format!("residual {coarse:.3e} (dt=2e-3) -> {fine:.3e} (dt=1e-3), ratio {ratio:.3} (want [3.5, 4.5])");
    if (3.5..=4.5).contains(&ratio) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn random_triangular(rng: &mut Lcg64) -> CanonicalForm {
    let a = rng.uniform(0.5, 5.0);
    let c = rng.uniform(0.5, 5.0);
    let b = rng.uniform(0.5, 4.0) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
    CanonicalForm::triangular(a, b, c).unwrap()
}

fn weighted_traces() -> Vec<(CanonicalForm, coupled_wave::EnergyTrace)> {
    let mut rng = Lcg64::new(6006);
    let times = uniform_times(160.0, 1601).unwrap();
    let init = ModalState::random(64, 42).unwrap();
    (0..50)
        .map(|_| {
            let form = random_triangular(&mut rng);
            let kappa = choose_kappa(form.a, form.b, form.c).unwrap();
            let trace = simulate(&form.coeffs(), &init, &times, Some(kappa)).unwrap();
            (form, trace)
        })
        .collect()
}

fn weighted_monotonicity(traces: &[(CanonicalForm, coupled_wave::EnergyTrace)]) -> Outcome {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for (_, trace) in traces {
        let w = &trace.weighted.as_ref().unwrap().values;
        for pair in w.windows(2) {
            let rise = (pair[1] - pair[0]) / pair[0];
            worst = worst.max(rise);
            if rise > 1e-10 {
                violations += 1;
            }
        }
    }
    let msg = format!("50 systems, {violations} increasing steps, largest relative step {worst:.2e}");
    if violations == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn integral_inequality(traces: &[(CanonicalForm, coupled_wave::EnergyTrace)]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_ratio = 0.0f64;
    let mut worst_bound = 0.0f64;
    for (form, trace) in traces {
        match integral_inequality_check(trace) {
            Ok(r) => {
                worst_ratio = worst_ratio.max(r.c_hat / r.c_hat_half);
                worst_bound = worst_bound.max(r.bound_ratio);
                if !(r.holds && r.bound_holds) {
                    failures.push(format!("a={:.3} b={:.3} c={:.3}", form.a, form.b, form.c));
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    let msg = format!(
        "50 systems, max C(T)/C(T/2) = {worst_ratio:.5}, max E/bound = {worst_bound:.3e}, failures: {}",
        if failures.is_empty() { "none".to_string() } else { failures.join("; ") }
    );
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn frequency_domain() -> Outcome {
    let mut rng = Lcg64::new(8008);
    let opts = ResolventOptions { xi_max: 80.0, grid_step: 0.01, n_max: 176 };
    let (mut mismatch, mut inconclusive, mut stable) = (Vec::new(), 0, 0);
    for k in 0..200 {
        let b = random_matrix(&mut rng);
        let truth = classify_stability(&b).unwrap().stable;
        let form = schur_canonicalize(&b).unwrap();
        let v = stability_via_resolvent(&form, &opts).map_err(|e| e.to_string())?;
        stable += truth as usize;
        match v.verdict {
            Verdict::Inconclusive => inconclusive += 1,
            Verdict::Stable if !truth => mismatch.push(k),
            Verdict::Unstable if truth => mismatch.push(k),
            _ => {}
        }
    }
    let msg = format!("200 matrices ({stable} stable), {} mismatches, {inconclusive} inconclusive", mismatch.len());
    if mismatch.is_empty() && inconclusive == 0 {
        Ok(msg)
    } else {
        Err(format!("{msg}, mismatched indices {mismatch:?}"))
    }
}

fn max_rel_gap(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs() / b.abs()).fold(0.0, f64::max)
}

fn fd_run(b: &CoeffMatrix, m: usize, times: &[f64], per_sample: usize) -> Vec<f64> {
    let grid = GridState::from_fn(m, |x| [x.sin(), 0.0, 0.0, 0.0]).unwrap();
    let dt = (times[1] - times[0]) / per_sample as f64;
    fd_leapfrog(b, &grid, *times.last().unwrap(), dt, times).unwrap().trace.energy
}

fn oracle_triangle() -> Outcome {
    let b = CoeffMatrix::new(1.0, 1.0, -1.0, 1.0).unwrap();
    let times = uniform_times(10.0, 101).unwrap();
    let init = ModalState::single_mode(1, 1, [1.0, 0.0, 0.0, 0.0]).unwrap();
    let modal = simulate(&b, &init, &times, None).unwrap().energy;
    if (modal[0] - PI / 4.0).abs() > 1e-15 {
        return Err(format!("E(0) = {} != pi/4", modal[0]));
    }
    let rk = rk4_trace(&b, &init, &times, 1e-3).unwrap().energy;
    // dt = dx / 2 at M = 400; halved together with dx at M = 801.
    let fd400 = fd_run(&b, 400, &times, 26);
    let fd800 = fd_run(&b, 801, &times, 52);
    let pairs = [max_rel_gap(&rk, &modal), max_rel_gap(&fd400, &modal), max_rel_gap(&fd400, &rk)];
    let shrink = max_rel_gap(&fd400, &modal) / max_rel_gap(&fd800, &modal);
    let msg = format!(
        "modal/rk4 {:.2e}, fd/modal {:.2e}, fd/rk4 {:.2e} at M=400; refinement ratio {shrink:.3} (want [3.5, 4.5])",
        pairs[0], pairs[1], pairs[2]
    );
    if pairs.iter().all(|&p| p <= 0.01) && (3.5..=4.5).contains(&shrink) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn marginal_and_unstable() -> Outcome {
    let init = ModalState::random(64, 42).unwrap();
    let times = uniform_times(100.0, 1001).unwrap();
    let zero = CoeffMatrix::new(0.0, 0.0, 0.0, 0.0).unwrap();
    let e = simulate(&zero, &init, &times, None).unwrap().energy;
    let drift = e.iter().map(|x| (x - e[0]).abs() / e[0]).fold(0.0, f64::max);
    let unstable = CanonicalForm::triangular(-1.0, 0.0, 1.0).unwrap();
    let u = simulate(&unstable.coeffs(), &init, &[0.0, 50.0], None).unwrap().energy;
    let msg = format!("undamped drift {drift:.2e} over [0,100]; a=-1,c=1: E(50)/E(0) = {:.3e}", u[1] / u[0]);
    if drift <= 1e-12 && u[1] > u[0] {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {id:>2} {name} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name} ({secs:.1}s): {msg}");
            }
        }
    };
    report(1, "stability equivalence", &mut stability_equivalence);
    report(2, "characteristic equation", &mut characteristic_fidelity);
    report(3, "Jordan chains", &mut jordan_chains);
    report(4, "decay rates", &mut decay_rates);
    report(5, "energy identity", &mut energy_identity);
    let traces = weighted_traces();
    report(6, "weighted-energy monotonicity", &mut || weighted_monotonicity(&traces));
    report(7, "integral inequality", &mut || integral_inequality(&traces));
    report(8, "frequency domain", &mut frequency_domain);
    report(9, "oracle triangle", &mut oracle_triangle);
    report(10, "marginal and unstable", &mut marginal_and_unstable);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
