//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs the full 21×21 sweep, so expect a few minutes.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnn_iqc::cones::{DEFAULT_EIG_TOL, DEFAULT_ENTRY_TOL};
use rnn_iqc::sampling::{horn_matrix, mutate_certificate, random_cp, random_feasible_assignment, FamilyKind};
use rnn_iqc::sweep::{emit_outputs, Grid};
use rnn_iqc::{
    certificate_gain_bound, compare_regions, copositivity_verdict, empirical_gain_lower_bound, hinf_norm,
    inclusion_audit, is_entrywise_nonneg, is_psd, pointwise_iqc_value, psd_plus_nn_membership, run_sweep, run_test,
    verify_certificate, CertifyOptions, CopositivityStatus, RegionClass, RnnModel, Status, SweepConfig,
    SweepRecord, TestId,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

const TESTS: [TestId; 4] = [TestId::SSG, TestId::L2P_SSG, TestId::SSG_ZF_POL, TestId::SSG_ZF_POL_COP];

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_rnn-iqc"))
        .args(["norm", "--a", "0", "--b", "0"])
        .output();
    let el = t.elapsed();
    let out = match out {
        Ok(o) if o.status.success() => o,
        Ok(o) => return outcome(false, format!("norm exited with {}", o.status)),
        Err(e) => return outcome(false, format!("could not run binary: {e}")),
    };
    let text = String::from_utf8_lossy(&out.stdout).trim().to_string();
    match text.parse::<f64>() {
        Ok(v) => outcome(
            (v - 0.9605).abs() <= 1e-3 && el < Duration::from_secs(5),
            format!("printed {text}, |err| = {:.2e}, {}", (v - 0.9605).abs(), secs(el)),
        ),
        Err(_) => outcome(false, format!("unparseable output `{text}`")),
    }
}

fn criterion_2(mutations: &mut Vec<(RnnModel, TestId, rnn_iqc::Certificate)>) -> Outcome {
    let model = RnnModel::paper_example(1.0, 1.4);
    let t = Instant::now();
    let opts = CertifyOptions::default();
    let (r2, r3) = match (
        run_test(&model, TestId::L2P_SSG, &opts),
        run_test(&model, TestId::SSG_ZF_POL, &opts),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("error: {e}")),
    };
    let el = t.elapsed();
    if let Some(c) = &r2.certificate {
        if r2.outcome == Status::Feasible {
            mutations.push((model, TestId::L2P_SSG, c.clone()));
        }
    }
    outcome(
        r2.outcome == Status::Feasible && r2.verified && r3.outcome == Status::Infeasible && el < Duration::from_secs(30),
        format!(
            "II {} (verified {}, margin {:.2e}), III {}, {}",
            r2.outcome.name(),
            r2.verified,
            r2.margin.unwrap_or(f64::NAN),
            r3.outcome.name(),
            secs(el)
        ),
    )
}

fn grid_config() -> SweepConfig {
    let mut cfg = SweepConfig::paper(TESTS.to_vec());
    cfg.grid = Grid {
        a_min: -2.0,
        a_max: 2.0,
        a_steps: 21,
        b_min: -10.0,
        b_max: 10.0,
        b_steps: 21,
    };
    let out = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    cfg.output.records_path = Some(out.join("records.csv"));
    cfg.output.regions_path = Some(out.join("regions.csv"));
    cfg.output.image_path = Some(out.join("regions.svg"));
    cfg
}

fn criterion_3(records: &[SweepRecord], el: Duration) -> Outcome {
    let audits = inclusion_audit(records, &TESTS);
    let violations: usize = audits.iter().map(|a| a.violations.len()).sum();
    let parts: Vec<String> = audits
        .iter()
        .map(|a| {
            format!(
                "{}=>{}: {} violations, {} excluded",
                a.pair.0.short(),
                a.pair.1.short(),
                a.violations.len(),
                a.excluded.len()
            )
        })
        .collect();
    outcome(
        audits.len() == 3 && violations == 0 && el < Duration::from_secs(30 * 60),
        format!("{}; sweep {}", parts.join("; "), secs(el)),
    )
}

fn criterion_4(records: &[SweepRecord]) -> Outcome {
    let fig1 = compare_regions(records, TestId::SSG, TestId::L2P_SSG);
    let fig2 = compare_regions(records, TestId::SSG_ZF_POL, TestId::SSG_ZF_POL_COP);
    let (m, b) = (fig1.count(RegionClass::only_B), fig2.count(RegionClass::only_B));
    outcome(m > 0 && b > 0, format!("only II = {m}, only IV = {b}"))
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = f64::INFINITY;
    let mut evaluated = 0usize;
    for kind in FamilyKind::ALL {
        for m in [1, 2, 6] {
            for _ in 0..100 {
                let (fam, x) = match random_feasible_assignment(kind, m, &mut rng) {
                    Ok(v) => v,
                    Err(e) => return outcome(false, format!("{kind:?} m={m}: {e}")),
                };
                if fam.worst_violation(&x) > 1e-9 {
                    return outcome(false, format!("{kind:?} m={m}: generated assignment infeasible"));
                }
                let pi = fam.pi_value(&x);
                for _ in 0..1000 {
                    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
                    let xi = rnn_iqc::sampling::gaussian_vector(m, &mut rng) * scale;
                    let v = pointwise_iqc_value(&pi, &xi).expect("dimensions match");
                    worst = worst.min(v);
                    evaluated += 1;
                }
            }
        }
    }
    let el = t.elapsed();
    outcome(
        worst >= -1e-9 && el < Duration::from_secs(120),
        format!("{evaluated} evaluations, min value {worst:.3e}, {}", secs(el)),
    )
}

/// Re-solves every feasible sweep point, re-verifies independently, and
/// mutates one certificate per test.
fn criterion_6(records: &[SweepRecord], mutations: &mut Vec<(RnnModel, TestId, rnn_iqc::Certificate)>) -> Outcome {
    let opts = CertifyOptions::default();
    let mut checked = 0;
    let mut failures = Vec::new();
    for r in records.iter().filter(|r| r.status == Status::Feasible) {
        if !r.verified {
            failures.push(format!("record ({}, {}, {}) not verified", r.a, r.b, r.test));
            continue;
        }
        let model = RnnModel::paper_example(r.a, r.b);
        let res = match run_test(&model, r.test, &opts) {
            Ok(res) => res,
            Err(e) => {
                failures.push(format!("({}, {}, {}): {e}", r.a, r.b, r.test));
                continue;
            }
        };
        let Some(cert) = res.certificate.filter(|_| res.outcome == Status::Feasible) else {
            failures.push(format!("({}, {}, {}) not reproduced", r.a, r.b, r.test));
            continue;
        };
        let fam = r.test.family(6).expect("family");
        match verify_certificate(&model, &fam, &cert, 1e-8) {
            Ok(rep) if rep.verified && rep.lmi_max_eig <= -cert.eps / 2.0 && rep.worst_constraint_violation <= 1e-8 => {}
            Ok(rep) => failures.push(format!("({}, {}, {}): {rep:?}", r.a, r.b, r.test)),
            Err(e) => failures.push(format!("({}, {}, {}): {e}", r.a, r.b, r.test)),
        }
        if !mutations.iter().any(|m| m.1 == r.test) {
            mutations.push((model, r.test, cert));
        }
        checked += 1;
    }
    let mut flipped = 0;
    for (model, test, cert) in mutations.iter() {
        let fam = test.family(model.m()).expect("family");
        let (bad, entry, _) = mutate_certificate(model, &fam, cert, 10.0 * cert.margin);
        match verify_certificate(model, &fam, &bad, 1e-8) {
            Ok(rep) if !rep.verified => flipped += 1,
            _ => failures.push(format!("mutation of {entry:?} in a {test} certificate stayed verified")),
        }
    }
    let detail = format!(
        "{checked} feasible outcomes re-verified, {flipped}/{} mutations rejected{}",
        mutations.len(),
        failures.first().map(|f| format!("; first problem: {f}")).unwrap_or_default()
    );
    outcome(failures.is_empty() && checked > 0 && flipped == mutations.len(), detail)
}

fn spread(records: &[SweepRecord], test: TestId, k: usize) -> Vec<&SweepRecord> {
    let pts: Vec<_> = records
        .iter()
        .filter(|r| r.test == test && r.status == Status::Feasible && r.verified)
        .collect();
    if pts.len() <= k {
        return pts;
    }
    (0..k).map(|i| pts[i * (pts.len() - 1) / (k - 1)]).collect()
}

fn criterion_7(records: &[SweepRecord]) -> Outcome {
    let pts = spread(records, TestId::SSG, 10);
    let mut worst = 0.0_f64;
    for r in &pts {
        let model = RnnModel::paper_example(r.a, r.b);
        let res = match run_test(&model, TestId::SSG, &CertifyOptions::default()) {
            Ok(res) => res,
            Err(e) => return outcome(false, format!("({}, {}): {e}", r.a, r.b)),
        };
        let Some(cert) = res.certificate else {
            return outcome(false, format!("({}, {}): no certificate", r.a, r.b));
        };
        let d: Vec<f64> = cert.s.iter().map(|v| v.sqrt()).collect();
        let h = match model.diagonally_scaled(&d).and_then(|m| hinf_norm(&m, 1e-6)) {
            Ok(h) => h,
            Err(e) => return outcome(false, format!("({}, {}): {e}", r.a, r.b)),
        };
        worst = worst.max(h);
    }
    outcome(
        pts.len() == 10 && worst < 1.0,
        format!("{} points, max scaled norm {worst:.6}", pts.len()),
    )
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for k in 0..50 {
        let n = rng.gen_range(1..=4);
        let a = random_cp(n, &mut rng);
        let nn = psd_plus_nn_membership(&a).unwrap_or(false);
        let verdict = copositivity_verdict(&a, 6).status;
        if !is_psd(&a, DEFAULT_EIG_TOL) || !is_entrywise_nonneg(&a, DEFAULT_ENTRY_TOL) || !nn
            || verdict == CopositivityStatus::NotCopositive
        {
            return outcome(false, format!("CP matrix #{k} (n = {n}) left the chain: nn={nn}, verdict={verdict:?}"));
        }
    }
    let h = horn_matrix();
    let horn_nn = psd_plus_nn_membership(&h).unwrap_or(true);
    let refuted = (6..=8).any(|d| copositivity_verdict(&h, d).status == CopositivityStatus::NotCopositive);
    let el = t.elapsed();
    outcome(
        !horn_nn && !refuted && el < Duration::from_secs(60),
        format!("50 CP matrices on the chain; Horn in PSD+NN: {horn_nn}, refuted: {refuted}; {}", secs(el)),
    )
}

fn criterion_9(records: &[SweepRecord]) -> Outcome {
    let pts = spread(records, TestId::SSG_ZF_POL_COP, 10);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut summary = Vec::new();
    for r in &pts {
        let model = RnnModel::paper_example(r.a, r.b);
        let res = match run_test(&model, r.test, &CertifyOptions::default()) {
            Ok(res) => res,
            Err(e) => return outcome(false, format!("({}, {}): {e}", r.a, r.b)),
        };
        let Some(cert) = res.certificate else {
            return outcome(false, format!("({}, {}): no certificate", r.a, r.b));
        };
        let bound = match certificate_gain_bound(&cert, &model) {
            Ok(b) => b,
            Err(e) => return outcome(false, format!("({}, {}): {e}", r.a, r.b)),
        };
        let emp = match empirical_gain_lower_bound(&model, 200, 200, 9) {
            Ok(v) => v,
            Err(e) => return outcome(false, format!("({}, {}): {e}", r.a, r.b)),
        };
        worst_gap = worst_gap.max(emp - bound);
        summary.push(format!("{emp:.3}<={bound:.3}"));
    }
    outcome(
        pts.len() == 10 && worst_gap <= 1e-6,
        format!("{} points (empirical<=bound): {}", pts.len(), summary.join(", ")),
    )
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture or --quiet are accepted and ignored
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut mutations = Vec::new();

    results.push((1, "norm regression", criterion_1()));
    results.push((2, "point regression (1.0, 1.4)", criterion_2(&mut mutations)));

    let cfg = grid_config();
    let t = Instant::now();
    let sweep = run_sweep(&cfg);
    let el = t.elapsed();
    match sweep {
        Ok(records) => {
            let maps: Vec<_> = [(TestId::SSG, TestId::L2P_SSG), (TestId::SSG_ZF_POL, TestId::SSG_ZF_POL_COP)]
                .into_iter()
                .map(|(a, b)| compare_regions(&records, a, b))
                .collect();
            for m in &maps {
                println!("  {}", m.summary());
            }
            if let Err(e) = emit_outputs(&records, &maps, &cfg) {
                println!("  warning: could not write sweep outputs: {e}");
            }
            results.push((3, "inclusion audit, 21x21 grid", criterion_3(&records, el)));
            results.push((4, "region reproduction", criterion_4(&records)));
            results.push((5, "multiplier IQC property suite", criterion_5()));
            results.push((6, "certificate verification soundness", criterion_6(&records, &mut mutations)));
            results.push((7, "scaled small gain cross-check", criterion_7(&records)));
            results.push((8, "cone suite", criterion_8()));
            results.push((9, "simulation consistency", criterion_9(&records)));
        }
        Err(e) => {
            for (k, name) in [
                (3, "inclusion audit, 21x21 grid"),
                (4, "region reproduction"),
                (6, "certificate verification soundness"),
                (7, "scaled small gain cross-check"),
                (9, "simulation consistency"),
            ] {
                results.push((k, name, outcome(false, format!("sweep failed: {e}"))));
            }
            results.push((5, "multiplier IQC property suite", criterion_5()));
            results.push((8, "cone suite", criterion_8()));
        }
    }

    results.sort_by_key(|r| r.0);
    let mut all = true;
    for (k, name, o) in &results {
        all &= o.pass;
        println!("{} criterion {k}: {name} -- {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
