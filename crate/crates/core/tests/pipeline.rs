use nalgebra::DMatrix;
use proptest::prelude::*;
use xorcert::certify::{certify, representation, theory_bound, CertifyOptions, Method, Solver};
use xorcert::oracle::{brute_force_max_excess, brute_force_max_sat_with};
use xorcert::repmatrix::{TypeSymOperator, DEFAULT_NNZ_BUDGET};
use xorcert::spectral::{spectral_norm_dense, spectral_norm_iterative, IterativeOptions};
use xorcert::{generate_random, load_instance, save_instance, Constraint, Error, Execution, Instance};

fn single_pair() -> Instance {
    Instance::new(2, 2, vec![Constraint::one_based(&[1, 2], 1).unwrap()]).unwrap()
}

#[test]
fn tight_two_variable_certificate() {
    let cert = certify(&single_pair(), 1, &CertifyOptions::default()).unwrap();
    assert!((cert.spectral_norm - 0.5).abs() < 1e-12);
    assert!((cert.hsat - 1.0).abs() < 1e-8);
    assert!(cert.hsat >= 1.0);
}

#[test]
fn iterative_matches_dense_on_random_representations() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 100 {
        seed += 1;
        let (n, k, d) = [(4, 2, 2), (5, 2, 2), (6, 4, 1), (4, 4, 2), (3, 4, 2), (6, 2, 2)][seed as usize % 6];
        let inst = generate_random(n, k, 0.2, seed).unwrap();
        if inst.m() == 0 {
            continue;
        }
        let r = representation(&inst, d, DEFAULT_NNZ_BUDGET).unwrap();
        let r = if seed.is_multiple_of(2) { r.rescale().unwrap() } else { r };
        assert!(r.side() <= 2048);
        let dense = spectral_norm_dense(&r.materialize_dense(2048).unwrap()).unwrap();
        let op = TypeSymOperator::new(&r, Execution::default()).unwrap();
        let it = spectral_norm_iterative(&op, &IterativeOptions { seed, ..Default::default() }).unwrap();
        let tol = 1e-8 * dense.norm_estimate.max(1e-12);
        assert!(
            (it.norm_estimate - dense.norm_estimate).abs() <= tol + it.residual_bound + dense.residual_bound,
            "seed {seed}: {} vs {}",
            it.norm_estimate,
            dense.norm_estimate
        );
        checked += 1;
    }
}

#[test]
fn norm_invariant_under_simultaneous_permutation() {
    let inst = generate_random(4, 4, 0.3, 5).unwrap();
    let m = representation(&inst, 2, DEFAULT_NNZ_BUDGET)
        .unwrap()
        .materialize_dense(4096)
        .unwrap();
    let base = spectral_norm_dense(&m).unwrap().norm_estimate;
    for shift in [1usize, 7, 101] {
        let side = m.nrows();
        let perm: Vec<usize> = (0..side).map(|i| (i * 37 + shift) % side).collect();
        let pm = DMatrix::from_fn(side, side, |i, j| m[(perm[i], perm[j])]);
        let got = spectral_norm_dense(&pm).unwrap().norm_estimate;
        assert!((got - base).abs() <= 1e-10 * base);
    }
}

#[test]
fn theory_bound_scales_with_p() {
    let a = theory_bound(100, 4, 2, 0.01, 1.0).unwrap();
    let b = theory_bound(100, 4, 2, 0.02, 1.0).unwrap();
    assert!((b / a - 0.5f64.sqrt()).abs() < 1e-12);
    let d3 = theory_bound(100, 4, 3, 0.01, 1.0).unwrap();
    assert!(d3 < a);
    assert!(matches!(theory_bound(10, 2, 1, 0.05, 1.0), Err(Error::NotApplicable(_))));
}

#[test]
fn execution_modes_agree() {
    let inst = generate_random(9, 4, 0.01, 3).unwrap();
    let seq = brute_force_max_sat_with(&inst, Execution::Sequential).unwrap();
    let par = brute_force_max_sat_with(&inst, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    for solver in [Solver::Quotient, Solver::Iterative] {
        let opts = |exec| CertifyOptions {
            solver,
            exec,
            ..Default::default()
        };
        let a = certify(&inst, 2, &opts(Execution::Sequential)).unwrap();
        let b = certify(&inst, 2, &opts(Execution::Parallel)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}

#[test]
fn file_round_trip_on_disk() {
    let dir = std::env::temp_dir().join(format!("xorcert-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let inst = generate_random(7, 4, 0.02, 17).unwrap();
    let path = dir.join("x.xor");
    std::fs::write(&path, save_instance(&inst)).unwrap();
    let back = load_instance(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, inst);
    std::fs::remove_dir_all(dir).unwrap();
}

fn small_instance() -> impl Strategy<Value = (Instance, usize)> {
    (prop_oneof![Just(2usize), Just(4usize)], 2usize..=7, 1usize..=2, any::<u64>(), 0.05f64..0.6).prop_filter_map(
        "nonempty and small",
        |(k, n, d, seed, p)| {
            if k == 4 && d == 2 && n > 5 {
                return None;
            }
            let inst = generate_random(n, k, p, seed).ok()?;
            (inst.m() > 0).then_some((inst, d))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn certificates_are_sound((inst, d) in small_instance()) {
        let exact = brute_force_max_excess(&inst).unwrap();
        for method in [Method::Rescaled, Method::Plain] {
            let cert = certify(&inst, d, &CertifyOptions { method, ..Default::default() }).unwrap();
            prop_assert!(cert.hsat >= 0.5);
            prop_assert!(exact <= cert.excess() + 1e-9);
        }
    }

    #[test]
    fn rescaled_never_exceeds_plain_norm((inst, d) in small_instance()) {
        let r = representation(&inst, d, DEFAULT_NNZ_BUDGET).unwrap();
        let opts = CertifyOptions::default();
        let plain = xorcert::certify::spectral_norm(&r, &opts).unwrap().0;
        let resc = xorcert::certify::spectral_norm(&r.rescale().unwrap(), &opts).unwrap().0;
        prop_assert!(resc <= plain * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn certify_is_deterministic((inst, d) in small_instance()) {
        let a = certify(&inst, d, &CertifyOptions::default()).unwrap();
        let b = certify(&inst, d, &CertifyOptions::default()).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
    }
}
