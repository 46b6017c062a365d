use bhtp_core::bench::{emit_results, run_benchmark, BenchConfig, Solver};

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn standard_matrix_invariants() {
    let config = BenchConfig::standard();
    let out = run_benchmark(&config);
    assert_eq!(out.records.len(), 8 * 3 * 5 * 2);
    assert_eq!(out.summary.failed_cells, 0);
    for pair in out.records.chunks(2) {
        let (dp2, even) = (&pair[0], &pair[1]);
        assert_eq!((dp2.solver, even.solver), (Solver::Dp2, Solver::Even));
        assert_eq!(dp2.pre_scaling_error, 0.0);
        assert!(even.capacity_error >= dp2.pre_scaling_error);
        assert!(dp2.b_ratio <= 1.0);
        assert!((dp2.b_ratio - dp2.pattern_count as f64 / dp2.n_beams as f64).abs() < 1e-15);
        assert!((0.0..=2.0).contains(&dp2.capacity_error));
    }
    for trial in 1..=8 {
        let ratios: Vec<f64> = [16, 49, 132]
            .iter()
            .map(|&n| {
                out.summary
                    .groups
                    .iter()
                    .find(|g| g.trial == trial && g.n_beams == n && g.solver == Solver::Dp2)
                    .unwrap()
                    .mean_b_ratio
            })
            .collect();
        assert!(
            ratios[0] >= ratios[1] && ratios[1] >= ratios[2],
            "trial {trial}: {ratios:?}"
        );
    }
}

#[test]
fn emission_is_deterministic() {
    let config = BenchConfig {
        beam_counts: vec![16],
        seeds: vec![1],
        ..BenchConfig::standard()
    };
    let a = run_benchmark(&config);
    let b = run_benchmark(&config);
    // runtimes differ between runs, everything else must not
    let strip = |o: &bhtp_core::bench::BenchOutput| {
        let mut o = o.clone();
        o.records.iter_mut().for_each(|r| r.runtime_ms = 0.0);
        o.summary
            .groups
            .iter_mut()
            .for_each(|g| g.mean_runtime_ms = 0.0);
        o
    };
    let (a, b) = (strip(&a), strip(&b));
    assert_eq!(
        emit_results(&a, &config).unwrap(),
        emit_results(&b, &config).unwrap()
    );
}

#[test]
fn rounding_error_grows_with_beam_count() {
    let sizes = [49usize, 132, 300, 600, 1085];
    let config = BenchConfig {
        trials: vec![1, 8],
        beam_counts: sizes.to_vec(),
        seeds: vec![1, 2],
        solvers: vec![Solver::Dp2],
        ..BenchConfig::standard()
    };
    let out = run_benchmark(&config);
    assert_eq!(out.summary.failed_cells, 0);
    let xs: Vec<f64> = out.records.iter().map(|r| r.n_beams as f64).collect();
    let ys: Vec<f64> = out.records.iter().map(|r| r.capacity_error).collect();
    let rho = spearman(&xs, &ys);
    assert!(rho > 0.0, "rank correlation {rho}");
}

#[test]
fn exact_solver_cells() {
    let config = BenchConfig {
        trials: vec![5],
        beam_counts: vec![16],
        seeds: vec![1],
        solvers: vec![Solver::Dp2, Solver::Exact],
        exact_time_limit_ms: 200,
        ..BenchConfig::standard()
    };
    let out = run_benchmark(&config);
    let (dp2, exact) = (&out.records[0], &out.records[1]);
    assert!(exact.pattern_count <= dp2.pattern_count);
    assert!(
        ["optimal", "feasible"].contains(&exact.status.as_str()),
        "{}",
        exact.status
    );
}
