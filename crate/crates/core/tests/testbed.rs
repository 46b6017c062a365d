use bhtp_core::io::save_instance;
use bhtp_core::testbed::{
    build_instance, build_scene, gen_users, Distribution, Quantizer, TestbedSpec,
};
use bhtp_core::CycleConfig;

fn spec(trial: usize, beams: usize, seed: u64) -> TestbedSpec {
    TestbedSpec::for_trial(trial, beams, seed).unwrap()
}

#[test]
fn trial_one_users() {
    let users = gen_users(&spec(1, 49, 1));
    assert_eq!(users.len(), 800);
    assert!(users.iter().all(|u| (10.0..=15.0).contains(&u.demand_mbps)));
    assert!(users.iter().all(|u| u.x.abs() <= 50.0 && u.y.abs() <= 50.0));
}

#[test]
fn discrete_users_cluster() {
    let s = spec(4, 49, 3);
    let users = gen_users(&s);
    assert_eq!(users.len(), 200);
    // each user lies near one of few centres, so the occupied beams are a
    // small fraction of the lattice
    let scene = build_scene(&s).unwrap();
    let occupied = scene.per_beam_demand.iter().filter(|&&d| d > 0.0).count();
    let continuous = build_scene(&TestbedSpec {
        distribution: Distribution::Continuous,
        ..s
    })
    .unwrap();
    let spread = continuous
        .per_beam_demand
        .iter()
        .filter(|&&d| d > 0.0)
        .count();
    assert!(occupied < spread, "{occupied} vs {spread}");
}

#[test]
fn same_seed_same_bytes() {
    for trial in 1..=8 {
        let a = build_instance(
            &spec(trial, 49, 11),
            CycleConfig::default(),
            Quantizer::default(),
        )
        .unwrap();
        let b = build_instance(
            &spec(trial, 49, 11),
            CycleConfig::default(),
            Quantizer::default(),
        )
        .unwrap();
        assert_eq!(save_instance(&a), save_instance(&b));
    }
}

#[test]
fn different_seeds_differ() {
    for s in 0..20u64 {
        let a = build_instance(
            &spec(2, 49, 2 * s),
            CycleConfig::default(),
            Quantizer::default(),
        )
        .unwrap();
        let b = build_instance(
            &spec(2, 49, 2 * s + 1),
            CycleConfig::default(),
            Quantizer::default(),
        )
        .unwrap();
        assert_ne!(a.demands, b.demands);
    }
}

#[test]
fn flat_model_conserves_demand() {
    for trial in 1..=8 {
        let scene = build_scene(&spec(trial, 132, 5)).unwrap();
        let users: f64 = scene.users.iter().map(|u| u.demand_mbps).sum();
        let beams: f64 = scene.per_beam_demand.iter().sum();
        assert!((users - beams).abs() <= 1e-9 * users);
        assert_eq!(scene.assignment.len(), scene.users.len());
    }
}

#[test]
fn quantization_error_is_bounded() {
    let s = spec(1, 49, 7);
    let scene = build_scene(&s).unwrap();
    let inst = scene
        .to_instance(CycleConfig::default(), Quantizer::default())
        .unwrap();
    assert_eq!(inst.n_beams, 49);
    let raw: f64 = scene.per_beam_demand.iter().sum();
    let total = inst.total_demand() as f64;
    assert!((total - raw).abs() <= inst.n_beams as f64 / 2.0);

    let meta = inst.metadata.as_ref().unwrap();
    assert_eq!(meta["testbed"]["seed"], 7);
    assert!(meta["generator"].as_str().unwrap().contains("xoshiro256++"));
}

#[test]
fn scale_multiplies_demand() {
    let s = spec(7, 16, 1);
    let one = build_instance(&s, CycleConfig::default(), Quantizer::default()).unwrap();
    let ten = build_instance(&s, CycleConfig::default(), Quantizer { scale: 10.0 }).unwrap();
    assert!(ten.total_demand() > 9 * one.total_demand());
}

#[test]
fn all_zero_after_quantization_is_rejected() {
    let s = TestbedSpec::new(4, 1, (0.1, 0.2), Distribution::Continuous, 1);
    assert!(build_instance(&s, CycleConfig::default(), Quantizer::default()).is_err());
}
