use std::f64::consts::PI;

use dirac_reduction::geometry::PointR3;
use dirac_reduction::morse::PerturbationFunction;
use dirac_reduction::quadrature::QuadratureSpec;
use dirac_reduction::reduced_functional::{
    gamma, grad_gamma, hess_gamma, lambda_expansion, DEFAULT_LAMBDAS,
};
use rand::{Rng, SeedableRng};

const C0: f64 = 9.0 * PI * PI / 8.0;

fn bump() -> PerturbationFunction {
    PerturbationFunction::flat("2*y1/(1+y1^2+y2^2+y3^2)").unwrap()
}

#[test]
fn small_scale_limit_is_c0_h() {
    let h = bump();
    let q = QuadratureSpec::default();
    for xi in [[1.0, 0.0, 0.0], [0.3, -0.2, 0.4], [2.0, 0.0, 1.0]] {
        let g = gamma(&h, 0.01, PointR3(xi), &q).unwrap();
        let r2: f64 = xi.iter().map(|c| c * c).sum();
        let oracle = C0 * 2.0 * xi[0] / (1.0 + r2);
        assert!((g.value - oracle).abs() <= 5e-3 * C0, "{xi:?}: {} vs {oracle}", g.value);
    }
}

#[test]
fn expansion_constant_is_independent_of_xi() {
    let h = bump();
    let q = QuadratureSpec::default();
    let fits: Vec<f64> = [[1.0, 0.0, 0.0], [-0.7, 0.1, 0.2]]
        .iter()
        .map(|xi| {
            let e = lambda_expansion(&h, PointR3(*xi), &DEFAULT_LAMBDAS, &q).unwrap();
            assert!(e.defect_ratio < 2.0, "{xi:?}: {:?}", e.defects);
            e.fitted
        })
        .collect();
    for f in &fits {
        assert!((f - C0).abs() <= 0.01 * C0);
    }
    assert!((fits[0] - fits[1]).abs() <= 0.01 * C0);
}

#[test]
fn derivatives_match_central_differences() {
    let q = QuadratureSpec::default();
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let h = PerturbationFunction::sphere("x1*x2 + exp(0.5*x3) - x4").unwrap();
    for _ in 0..4 {
        let lambda = rng.gen_range(0.3..1.5);
        let p = [lambda, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let at = |p: [f64; 4]| (p[0], PointR3([p[1], p[2], p[3]]));
        let (l, xi) = at(p);
        let g = grad_gamma(&h, l, xi, &q).unwrap();
        let hs = hess_gamma(&h, l, xi, &q).unwrap();
        let step = 1e-4;
        for i in 0..4 {
            let (mut pp, mut pm) = (p, p);
            pp[i] += step;
            pm[i] -= step;
            let (lp, xp) = at(pp);
            let (lm, xm) = at(pm);
            let fd = (gamma(&h, lp, xp, &q).unwrap().value - gamma(&h, lm, xm, &q).unwrap().value) / (2.0 * step);
            let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!((fd - g[i]).abs() <= 1e-5 * scale, "grad {i}: {fd} vs {}", g[i]);
            let gp = grad_gamma(&h, lp, xp, &q).unwrap();
            let gm = grad_gamma(&h, lm, xm, &q).unwrap();
            let hscale = hs.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            for j in 0..4 {
                let fd = (gp[j] - gm[j]) / (2.0 * step);
                assert!((fd - hs[i][j]).abs() <= 1e-5 * hscale, "hess {i}{j}: {fd} vs {}", hs[i][j]);
            }
        }
    }
}
