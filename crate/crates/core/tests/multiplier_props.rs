use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnn_iqc::multipliers::{polytopic_family_with, relu_cone_map};
use rnn_iqc::sampling::{
    gaussian_vector, random_dhd, random_feasible_assignment, random_nonneg_sym, random_psd, FamilyKind,
};
use rnn_iqc::{
    copositive_family, cop0_family, diag_sector_family, pointwise_iqc_value, polytopic_family, zames_falb_family,
};

fn random_xi(m: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
    let mut xi = gaussian_vector(m, rng) * scale;
    // exercise the kinks: exact zeros and all-sign patterns
    match rng.gen_range(0..4) {
        0 => xi.iter_mut().for_each(|v| *v = v.abs()),
        1 => xi.iter_mut().for_each(|v| *v = -v.abs()),
        2 => {
            let k = rng.gen_range(0..m);
            xi[k] = 0.0;
        }
        _ => {}
    }
    xi
}

#[test]
fn every_feasible_multiplier_satisfies_the_pointwise_iqc() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in FamilyKind::ALL {
        for m in [1, 2, 6] {
            for _ in 0..100 {
                let (fam, x) = random_feasible_assignment(kind, m, &mut rng).unwrap();
                assert!(fam.worst_violation(&x) <= 1e-9);
                let pi = fam.pi_value(&x);
                let scale = pi.amax().max(1.0);
                for _ in 0..1000 {
                    let xi = random_xi(m, &mut rng);
                    let v = pointwise_iqc_value(&pi, &xi).unwrap();
                    let rel = v / (scale * xi.norm_squared().max(1.0));
                    assert!(rel >= -1e-9, "{kind:?} m={m}: value {v} at {xi}");
                }
            }
        }
    }
}

fn block2(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(a);
    out.view_mut((0, m), (m, m)).copy_from(b);
    out.view_mut((m, 0), (m, m)).copy_from(c);
    out.view_mut((m, m), (m, m)).copy_from(d);
    out
}

#[test]
fn zames_falb_map_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for m in [1, 3] {
        let (mu, nu) = (-0.5, 2.0);
        let fam = zames_falb_family(m, mu, nu).unwrap();
        let mm = random_dhd(m, &mut rng);
        let x = fam.assignment(&[("M", mm.clone())]).unwrap();
        // expanded form of Tᵀ[[0, Mᵀ],[M, 0]]T
        let s = &mm + mm.transpose();
        let expect = block2(
            &(&s * (-mu * nu)),
            &(mm.transpose() * nu + &mm * mu),
            &(&mm * nu + mm.transpose() * mu),
            &(-&s),
        );
        assert!((fam.pi_value(&x) - expect).amax() < 1e-12);
    }
}

#[test]
fn copositive_map_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = 2;
    let fam = copositive_family(m).unwrap();
    let (q1, q2) = (random_psd(2 * m, &mut rng), random_nonneg_sym(2 * m, &mut rng));
    let x = fam.assignment(&[("Q1", q1.clone()), ("Q2", q2.clone())]).unwrap();
    let r = relu_cone_map(m);
    let expect = r.transpose() * (q1 + q2) * &r;
    assert!((fam.pi_value(&x) - expect).amax() < 1e-12);
    // R maps [ξ; relu(ξ)] to [relu(−ξ); relu(ξ)] which is entrywise nonnegative
    let xi = DVector::from_vec(vec![1.5, -2.0]);
    let mut v = DVector::zeros(4);
    v.rows_mut(0, 2).copy_from(&xi);
    v.rows_mut(2, 2).copy_from(&rnn_iqc::relu(&xi));
    assert!((r * v).iter().all(|&e| e >= 0.0));
}

#[test]
fn cop0_is_contained_in_copositive() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = 3;
    let small = cop0_family(m).unwrap();
    let big = copositive_family(m).unwrap();
    for _ in 0..20 {
        let (h1, h2) = (random_psd(m, &mut rng), random_nonneg_sym(m, &mut rng));
        let xs = small.assignment(&[("Qhat1", h1.clone()), ("Qhat2", h2.clone())]).unwrap();
        let lift = |q: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(2 * m, 2 * m);
            out.view_mut((m, m), (m, m)).copy_from(q);
            out
        };
        let xb = big.assignment(&[("Q1", lift(&h1)), ("Q2", lift(&h2))]).unwrap();
        assert!(big.worst_violation(&xb) <= 1e-12);
        assert!((small.pi_value(&xs) - big.pi_value(&xb)).amax() < 1e-12);
    }
}

#[test]
fn diag_sector_sits_on_the_polytopic_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = 3;
    let ds = diag_sector_family(m, 0.0, 1.0).unwrap();
    let pol = polytopic_family(m, 0.0, 1.0).unwrap();
    let strict = polytopic_family_with(m, 0.0, 1.0, 1e-3, 12).unwrap();
    for _ in 0..20 {
        let d = DMatrix::from_diagonal(&DVector::from_fn(m, |_, _| rng.gen_range(0.1..2.0)));
        let xd = ds.assignment(&[("D", d.clone())]).unwrap();
        let pi = ds.pi_value(&xd);
        let x = pi.view((0, 0), (m, m)).into_owned();
        let y = pi.view((0, m), (m, m)).into_owned();
        let z = pi.view((m, m), (m, m)).into_owned();
        let xp = pol.assignment(&[("X", x.clone()), ("Y", y.clone()), ("Z", z.clone())]).unwrap();
        assert!((pol.pi_value(&xp) - &pi).amax() < 1e-12);
        // members with margin 0, but never strictly inside
        assert!(pol.worst_violation(&xp) <= 1e-12);
        assert!(strict.worst_violation(&xp) >= 1e-3 - 1e-12);
    }
}
