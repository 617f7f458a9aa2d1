use morozov_core::ntm::{ntm_solve, NtmConfig};
use morozov_core::pntm::{pntm_solve, PntmConfig};
use morozov_core::problems::random_uniform_problem;
use morozov_core::reference::{gbit_solve, GbitConfig};
use morozov_core::LinearOperator;

fn residual(op: &impl LinearOperator, x: &[f64], b: &[f64]) -> f64 {
    op.apply(x)
        .iter()
        .zip(b)
        .map(|(r, b)| (r - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn newton_solvers_agree_on_the_discrepancy_solution() {
    for seed in 0..3 {
        let p = random_uniform_problem(90, 60, 0.05, seed).unwrap();
        let target = p.discrepancy_target();
        let tight = 1e-10;

        let full = ntm_solve(
            &p.operator,
            &p.rhs,
            target,
            &NtmConfig {
                tol: tight,
                ..NtmConfig::default()
            },
        )
        .unwrap();
        let projected = pntm_solve(
            &p.operator,
            &p.rhs,
            target,
            &PntmConfig {
                tol: tight,
                ..PntmConfig::default()
            },
        )
        .unwrap();
        let gbit = gbit_solve(
            &p.operator,
            &p.rhs,
            target,
            &GbitConfig {
                tol: tight,
                ..GbitConfig::default()
            },
        )
        .unwrap();

        for out in [&full, &projected, &gbit] {
            assert!(out.converged, "seed {seed}");
            let r = residual(&p.operator, &out.x, &p.rhs);
            assert!(
                (r - target).abs() <= 1e-6 * target,
                "seed {seed}: {r} vs {target}"
            );
        }
        let a = full.alpha.unwrap();
        for other in [projected.alpha.unwrap(), gbit.alpha.unwrap()] {
            assert!((other - a).abs() <= 1e-5 * a, "seed {seed}: {other} vs {a}");
        }
    }
}
