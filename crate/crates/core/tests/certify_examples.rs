use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rnn_iqc::certify::{lmi_value, Status};
use rnn_iqc::sampling::{mutate_certificate, random_model};
use rnn_iqc::{
    certificate_gain_bound, empirical_gain_lower_bound, hinf_norm, run_test, verify_certificate, CertifyOptions,
    MultiplierFamily, RnnModel, StoredCertificate, TestId,
};

fn scalar(l: f64, b: f64, c: f64) -> RnnModel {
    RnnModel::new(
        DMatrix::from_element(1, 1, l),
        DMatrix::from_element(1, 1, b),
        DMatrix::from_element(1, 1, c),
    )
    .unwrap()
}

#[test]
fn hand_computed_lmi() {
    // Λ = 0, W_in = 1, W_out = 0.5, P = 1, S = 1.5:
    // [[−1 + 0.375, 0], [0, −1.5 + 1]] = diag(−0.625, −0.5)
    let model = scalar(0.0, 1.0, 0.5);
    let l = lmi_value(
        &model,
        &DMatrix::from_element(1, 1, 1.0),
        &DMatrix::from_element(1, 1, 1.5),
        &DMatrix::zeros(2, 2),
    );
    assert!((l - DMatrix::from_row_slice(2, 2, &[-0.625, 0.0, 0.0, -0.5])).amax() < 1e-15);
}

#[test]
fn small_gain_above_one_is_infeasible_for_every_test() {
    // z = x, x⁺ = 2 relu(z + s): the loop gain of 2 makes it unstable
    let model = scalar(0.0, 2.0, 1.0);
    for t in [TestId::SG, TestId::SSG, TestId::L2P_SSG, TestId::SSG_ZF_POL, TestId::SSG_ZF_POL_COP] {
        let r = run_test(&model, t, &CertifyOptions::default()).unwrap();
        assert_eq!(r.outcome, Status::Infeasible, "{t}");
        assert!(r.margin.is_none());
    }
}

#[test]
fn scalar_small_gain_threshold() {
    // Λ = 0, W_out = 1: the linear part is b/z with norm |b|
    let opts = CertifyOptions::default();
    for (b, feasible) in [(0.9, true), (-0.9, true), (1.1, false), (-1.1, false)] {
        let r = run_test(&scalar(0.0, b, 1.0), TestId::SSG, &opts).unwrap();
        let want = if feasible { Status::Feasible } else { Status::Infeasible };
        assert_eq!(r.outcome, want, "b = {b}");
    }
}

#[test]
fn mutation_flips_verification() {
    let model = RnnModel::paper_example(1.0, 1.4);
    let opts = CertifyOptions::default();
    for test in [TestId::L2P_SSG, TestId::SSG_ZF_POL_COP] {
        let r = run_test(&model, test, &opts).unwrap();
        assert_eq!(r.outcome, Status::Feasible);
        let cert = r.certificate.unwrap();
        let fam = test.family(6).unwrap();
        assert!(verify_certificate(&model, &fam, &cert, 1e-8).unwrap().verified);
        let (bad, entry, slope) = mutate_certificate(&model, &fam, &cert, 10.0 * cert.margin);
        let rep = verify_certificate(&model, &fam, &bad, 1e-8).unwrap();
        assert!(!rep.verified, "{test}: mutation of {entry:?} (slope {slope}) kept λmax {}", rep.lmi_max_eig);
    }
}

#[test]
fn stored_certificates_round_trip() {
    let model = RnnModel::paper_example(1.0, 1.4);
    let r = run_test(&model, TestId::L2P_SSG, &CertifyOptions::default()).unwrap();
    let stored = StoredCertificate {
        test: TestId::L2P_SSG,
        model,
        certificate: r.certificate.unwrap(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    stored.save(&path).unwrap();
    let back = StoredCertificate::load(&path).unwrap();
    assert_eq!(back.certificate.p, stored.certificate.p);
    assert!(back.verify(1e-8).unwrap().verified);

    // the wrong test for this certificate fails verification or the shape check
    let wrong = StoredCertificate {
        test: TestId::SSG_ZF_POL,
        ..back
    };
    assert!(wrong.verify(1e-8).map(|r| !r.verified).unwrap_or(true));
}

#[test]
fn scaled_small_gain_matches_certificate_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for _ in 0..30 {
        let model = random_model(3, 2, 0.5, &mut rng);
        let r = run_test(&model, TestId::SSG, &CertifyOptions::default()).unwrap();
        if r.outcome != Status::Feasible {
            continue;
        }
        let cert = r.certificate.unwrap();
        let d: Vec<f64> = cert.s.iter().map(|v| v.sqrt()).collect();
        let scaled = model.diagonally_scaled(&d).unwrap();
        assert!(hinf_norm(&scaled, 1e-6).unwrap() < 1.0);
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} feasible draws");
}

#[test]
fn simulated_gain_stays_below_certified_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut checked = 0;
    for _ in 0..20 {
        let model = random_model(2, 2, 0.6, &mut rng);
        let r = run_test(&model, TestId::SSG_ZF_POL_COP, &CertifyOptions::default()).unwrap();
        if r.outcome != Status::Feasible {
            continue;
        }
        let bound = certificate_gain_bound(&r.certificate.unwrap(), &model).unwrap();
        let emp = empirical_gain_lower_bound(&model, 50, 100, 3).unwrap();
        assert!(emp <= bound + 1e-6, "empirical {emp} > bound {bound}");
        checked += 1;
    }
    assert!(checked >= 5);
}

#[test]
fn zero_family_verification_rejects_wrong_dimensions() {
    let model = scalar(0.0, 1.0, 0.5);
    let r = run_test(&model, TestId::SSG, &CertifyOptions::default()).unwrap();
    let cert = r.certificate.unwrap();
    assert!(verify_certificate(&model, &MultiplierFamily::zero(2), &cert, 1e-8).is_err());
}
