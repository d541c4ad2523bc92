mod common;

use cpmdd::solve::{
    direct_solve, gmres_solve, reconstruct_and_check, stationary_solve_observed, Method, Mode, Preconditioner,
    SolverConfig,
};
use cpmdd::sparse::norm2;
use cpmdd::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn dirichlet_decomposition_is_algebraic_ras() {
    let (pb, f) = common::circle_problem(1.0 / 40.0);
    let cfg = SolverConfig {
        method: Method::Ras,
        n_sub: 3,
        n_overlap: 3,
        ..Default::default()
    };
    let pmap = pb.partition(3, 0).unwrap();
    let dd = pb.decomposition(&pmap, &cfg).unwrap();
    let alg = common::AlgebraicRas::new(&pb.ops.helmholtz, &dd.subdomains);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r: Vec<f64> = (0..f.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (zd, za) = (dd.apply(&r).unwrap(), Preconditioner::apply(&alg, &r).unwrap());
    assert!(max_diff(&zd, &za) <= 1e-10 * norm2(&za));

    let a = &pb.ops.helmholtz;
    let mut iterates = Vec::new();
    stationary_solve_observed(a, &f, &dd, 0.0, 10, |_, u| iterates.push(u.to_vec())).unwrap();
    let mut k = 0;
    stationary_solve_observed(a, &f, &alg, 0.0, 10, |_, u| {
        assert!(max_diff(u, &iterates[k]) <= 1e-10 * norm2(u), "iterate {} differs", k + 1);
        k += 1;
    })
    .unwrap();
    assert_eq!(k, 10);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let (pb, f) = common::sphere_problem(0.1);
    for mode in [Mode::Stationary, Mode::Gmres] {
        let mut cfg = SolverConfig {
            method: Method::Oras,
            mode,
            n_sub: 4,
            n_overlap: 2,
            alpha: 2.0,
            alpha_cross: 20.0,
            workers: 1,
            ..Default::default()
        };
        let one = cpmdd::pipeline::run(&pb, &f, &cfg).unwrap();
        cfg.workers = 3;
        let three = cpmdd::pipeline::run(&pb, &f, &cfg).unwrap();
        assert_eq!(one.u, three.u);
        assert_eq!(one.log.residuals, three.log.residuals);
    }
}

#[test]
fn recovers_an_algebraic_solution() {
    let (pb, f) = common::circle_problem(1.0 / 40.0);
    let a = &pb.ops.helmholtz;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g: Vec<f64> = (0..f.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rhs = a.spmv(&g);
    for (method, mode) in [
        (Method::Ras, Mode::Gmres),
        (Method::Oras, Mode::Gmres),
        (Method::Oras, Mode::Stationary),
    ] {
        let cfg = SolverConfig {
            method,
            mode,
            rel_tol: 1e-12,
            n_sub: 4,
            n_overlap: 4,
            ..Default::default()
        };
        let out = cpmdd::pipeline::run(&pb, &rhs, &cfg).unwrap();
        assert!(out.log.converged, "{method:?}/{mode:?}");
        let err = max_diff(&out.u, &g) / g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err <= 1e-8, "{method:?}/{mode:?}: relative error {err:e}");
    }
    let ud = direct_solve(a, &rhs).unwrap();
    assert!(reconstruct_and_check(&ud, a, &rhs, None, Some(&g)).error_exact_inf.unwrap() <= 1e-10);
}

#[test]
fn logs_are_consistent() {
    let (pb, f) = common::sphere_problem(0.1);
    let r0 = norm2(&f);
    for mode in [Mode::Stationary, Mode::Gmres] {
        let cfg = SolverConfig {
            mode,
            n_sub: 4,
            n_overlap: 2,
            rel_tol: 1e-8,
            ..Default::default()
        };
        let out = cpmdd::pipeline::run(&pb, &f, &cfg).unwrap();
        let log = &out.log;
        assert!(log.converged);
        assert_eq!(log.residuals.len(), log.iterations + 1);
        assert_eq!(log.elapsed.len(), log.residuals.len());
        assert!(log.elapsed.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(log.residuals[0], r0);
        let last = *log.residuals.last().unwrap();
        assert!(last <= 1e-8 * r0);
        let true_res = reconstruct_and_check(&out.u, &pb.ops.helmholtz, &f, None, None).residual;
        assert!((true_res - last).abs() <= 1e-12 * r0);
        let phases: Vec<&str> = log.phases.iter().map(|(p, _)| p.as_str()).collect();
        let solve = if mode == Mode::Gmres { "preconditioned_solve" } else { "solver" };
        assert_eq!(phases, ["meshing", "global_matrix", "local_operators", solve]);
    }
}

#[test]
fn single_subdomain_is_a_direct_solve() {
    let (pb, f) = common::circle_problem(0.05);
    for mode in [Mode::Stationary, Mode::Gmres] {
        let cfg = SolverConfig {
            mode,
            n_sub: 1,
            ..Default::default()
        };
        let out = cpmdd::pipeline::run(&pb, &f, &cfg).unwrap();
        assert_eq!(out.log.iterations, 1);
        assert_eq!(out.log.residuals.len(), 2);
        assert!(out.log.converged);
    }
}

#[test]
fn restarted_gmres_still_converges() {
    let (pb, f) = common::sphere_problem(0.1);
    let cfg = SolverConfig {
        n_sub: 4,
        n_overlap: 2,
        ..Default::default()
    };
    let pmap = pb.partition(4, 0).unwrap();
    let dd = pb.decomposition(&pmap, &cfg).unwrap();
    let a = &pb.ops.helmholtz;
    let (u_full, full) = gmres_solve(a, &f, &dd, 1e-8, 500, None).unwrap();
    let (u_rs, rs) = gmres_solve(a, &f, &dd, 1e-8, 500, Some(3)).unwrap();
    assert!(full.converged && rs.converged);
    assert!(rs.iterations >= full.iterations);
    assert!(max_diff(&u_full, &u_rs) <= 1e-6 * norm2(&u_full));
}

#[test]
fn invalid_configurations_are_rejected() {
    let (pb, f) = common::circle_problem(0.1);
    let bad = [
        SolverConfig { alpha: 0.0, ..Default::default() },
        SolverConfig { alpha: 2.0, alpha_cross: 1.0, ..Default::default() },
        SolverConfig { n_overlap: 0, ..Default::default() },
        SolverConfig { n_sub: 0, ..Default::default() },
        SolverConfig { rel_tol: 0.0, ..Default::default() },
    ];
    for cfg in bad {
        assert!(matches!(cpmdd::pipeline::run(&pb, &f, &cfg), Err(Error::Config(_))), "{cfg:?}");
    }
    let too_many = SolverConfig { n_sub: f.len() + 1, ..Default::default() };
    assert!(cpmdd::pipeline::run(&pb, &f, &too_many).is_err());
}
