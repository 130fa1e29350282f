use super::{ExpMode, IntegratorConfig, RiccatiProblem};
use crate::dense::{solve_sylvester, RealMatrix};
use crate::error::{Error, Result};
use crate::lowrank::{
    assemble_f, assemble_phi_sum, assemble_remainder_diff, concat_update, DenseExpActions,
    ExpActions, KrylovExpActions, LdlFactor,
};
use crate::phifun::{eval_forward, phi_action, PhiCombination, PhiRoute};
use crate::sylvop::{linearize, remainder, SylvesterOperator};

/// Exponential Rosenbrock–Euler step `e^{hSₙ}(Xₙ) + h·φ₁(hSₙ)(Q + XₙGXₙ)`
/// through the augmented matrix.
pub fn step_expeuler_general(p: &RiccatiProblem, xn: &RealMatrix, h: f64) -> Result<RealMatrix> {
    let lin = linearize(p, xn)?;
    lin.operator.phi1_action_augmented(h, &lin.remainder_at_x, xn)
}

/// The same step through one Sylvester solve: `W₁ = Sₙ⁻¹(F(Xₙ))`,
/// `Xₙ₊₁ = e^{hSₙ}(W₁) + Xₙ − W₁`.
pub fn step_expeuler_backward(p: &RiccatiProblem, xn: &RealMatrix, h: f64) -> Result<RealMatrix> {
    let lin = linearize(p, xn)?;
    let f = p.rhs(xn)?;
    let w1 = solve_sylvester(lin.a_n(), lin.d_n(), &f)?;
    Ok(lin.operator.exp_action(h, &w1)? + xn - w1)
}

/// Linearized `Aₙ = A − Xₙ·BBᵀ` of a symmetric problem, from the factor.
fn linearized_a(p: &RiccatiProblem, xn: &LdlFactor) -> Result<RealMatrix> {
    let data = p
        .lowrank()
        .ok_or_else(|| Error::Config("low-rank schemes need a symmetric problem with generators".into()))?;
    let pb = xn.d() * (xn.l().transpose() * &data.b);
    Ok(p.a() - xn.l() * pb * data.b.transpose())
}

fn provider(a_n: RealMatrix, cfg: &IntegratorConfig) -> Box<dyn ExpActions> {
    match cfg.exp_mode {
        ExpMode::Dense => Box::new(DenseExpActions::new(a_n)),
        ExpMode::Krylov => Box::new(KrylovExpActions::new(a_n, cfg.krylov_m)),
    }
}

/// Result of a low-rank step: the new factor and the columns dropped by
/// compression along the way.
#[derive(Debug, Clone)]
pub struct LowRankStep {
    pub x: LdlFactor,
    pub dropped: usize,
}

/// Low-rank ExpEuler: `Xₙ₊₁ = Xₙ + h·φ₁(hSₙ)(F(Xₙ))` with `F(Xₙ)` factored,
/// compressed, and the φ₁ action by quadrature.
pub fn step_expeuler_lowrank(
    p: &RiccatiProblem,
    xn: &LdlFactor,
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<LowRankStep> {
    let a_n = linearized_a(p, xn)?;
    expeuler_lowrank_with(p, xn, h, cfg, provider(a_n, cfg).as_ref())
}

fn expeuler_lowrank_with(
    p: &RiccatiProblem,
    xn: &LdlFactor,
    h: f64,
    cfg: &IntegratorConfig,
    exps: &dyn ExpActions,
) -> Result<LowRankStep> {
    let tol = cfg.compression_tol(xn.dim());
    let (f, dropped_f) = assemble_f(p, xn)?.compressed(tol)?;
    let y = assemble_phi_sum(exps, h, 1, &f, &cfg.rule, h)?;
    let (x, dropped) = concat_update(xn, &y, tol)?;
    Ok(LowRankStep {
        x,
        dropped: dropped + dropped_f,
    })
}

/// Dense Erow3: `Xₙ₂` is the ExpEuler step and
/// `Xₙ₊₁ = Xₙ₂ + 2h·φ₃(hSₙ)(Gₙ(Xₙ₂) − Gₙ(Xₙ))`.
pub fn step_erow3_dense(
    p: &RiccatiProblem,
    xn: &RealMatrix,
    h: f64,
    route: &PhiRoute,
) -> Result<RealMatrix> {
    let lin = linearize(p, xn)?;
    let x2 = lin.operator.phi1_action_augmented(h, &lin.remainder_at_x, xn)?;
    let dg = remainder(p, xn, &x2)? - &lin.remainder_at_x;
    let corr = phi_action(3, &lin.operator, h, &dg, route)?;
    Ok(x2 + corr * (2.0 * h))
}

/// Low-rank Erow3; both stages share the exponential actions of `Aₙ`.
pub fn step_erow3_lowrank(
    p: &RiccatiProblem,
    xn: &LdlFactor,
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<LowRankStep> {
    let a_n = linearized_a(p, xn)?;
    let exps = provider(a_n, cfg);
    let stage = expeuler_lowrank_with(p, xn, h, cfg, exps.as_ref())?;
    let tol = cfg.compression_tol(xn.dim());
    let (dg, dropped_g) = assemble_remainder_diff(p, xn, &stage.x)?.compressed(tol)?;
    let y = assemble_phi_sum(exps.as_ref(), h, 3, &dg, &cfg.rule, 2.0 * h)?;
    let (x, dropped) = concat_update(&stage.x, &y, tol)?;
    Ok(LowRankStep {
        x,
        dropped: stage.dropped + dropped_g + dropped,
    })
}

/// Exact solution at time `t` of `X' = S(X) + Σ_{j≥1} t^{j−1}/(j−1)!·Nⱼ`,
/// `X(0) = N₀`: `e^{tS}(N₀) + Σⱼ tʲ·φⱼ(tS)(Nⱼ)`.
pub fn step_msde_polynomial(
    s: &SylvesterOperator,
    coeffs: &[RealMatrix],
    t: f64,
) -> Result<RealMatrix> {
    let mut scale = 1.0;
    let operands: Vec<RealMatrix> = coeffs
        .iter()
        .enumerate()
        .map(|(j, n)| {
            if j > 0 {
                scale *= t;
            }
            n * scale
        })
        .collect();
    let c = PhiCombination::new(operands, s.clone(), t)?;
    eval_forward(&c, &PhiRoute::Augmented)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{asymmetry, from_row_major, rel_diff};
    use crate::integrators::Scheme;
    use crate::oracle::{kronecker_phi, unvec, vec_of};
    use crate::phifun::{phi_scalar, QuadratureRule};
    use crate::problems::ProblemSpec;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256StarStar;

    fn scalar(v: f64) -> RealMatrix {
        RealMatrix::from_element(1, 1, v)
    }

    fn random(rng: &mut Xoshiro256StarStar, r: usize, c: usize) -> RealMatrix {
        RealMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn tanh_problem() -> RiccatiProblem {
        ProblemSpec::ScalarTanh.build(0).unwrap()
    }

    fn random_problem(rng: &mut Xoshiro256StarStar, m: usize, n: usize) -> RiccatiProblem {
        RiccatiProblem::new(
            random(rng, m, m) - RealMatrix::identity(m, m) * 2.0,
            random(rng, n, n) - RealMatrix::identity(n, n) * 2.0,
            random(rng, m, n),
            random(rng, n, m) * 0.5,
            random(rng, m, n) * 0.5,
        )
        .unwrap()
    }

    fn symmetric_problem(rng: &mut Xoshiro256StarStar, n: usize) -> RiccatiProblem {
        let a = random(rng, n, n) - RealMatrix::identity(n, n) * 3.0;
        RiccatiProblem::symmetric_from_factors(
            a,
            random(rng, 2, n),
            random(rng, n, 2),
            random(rng, n, 2),
            RealMatrix::identity(2, 2),
        )
        .unwrap()
    }

    fn cfg(scheme: Scheme) -> IntegratorConfig {
        IntegratorConfig::new(scheme, 0.1, 1.0)
    }

    #[test]
    fn expeuler_scalar_examples() {
        let x1 = step_expeuler_general(&tanh_problem(), &scalar(0.0), 0.1).unwrap();
        assert!((x1[(0, 0)] - 0.1).abs() < 1e-15);
        assert!((x1[(0, 0)] - 0.1f64.tanh() - 3.32e-4).abs() < 1e-6);

        let msde = RiccatiProblem::new(scalar(-1.0), scalar(-1.0), scalar(1.0), scalar(0.0), scalar(0.0))
            .unwrap();
        let x = step_expeuler_general(&msde, &scalar(0.0), 1.0).unwrap()[(0, 0)];
        assert!((x - phi_scalar(1, -2.0)).abs() < 1e-15);
        assert!((x - 0.432332358).abs() < 1e-9);
        assert!((x - (1.0 - (-2f64).exp()) / 2.0).abs() < 1e-15);

        let b = step_expeuler_backward(&msde, &scalar(0.0), 1.0).unwrap()[(0, 0)];
        assert!((b - ((-2f64).exp() * -0.5 + 0.5)).abs() < 1e-15);
        assert!((b - 0.432332358).abs() < 1e-9);
    }

    #[test]
    fn homogeneous_step_is_exponential() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(80);
        let (a, d, x0) = (random(&mut rng, 3, 3), random(&mut rng, 2, 2), random(&mut rng, 3, 2));
        let p = RiccatiProblem::new(a.clone(), d.clone(), RealMatrix::zeros(3, 2), RealMatrix::zeros(2, 3), x0.clone())
            .unwrap();
        let got = step_expeuler_general(&p, &x0, 0.4).unwrap();
        let want = crate::dense::expm(&(&a * 0.4)).unwrap() * &x0 * crate::dense::expm(&(&d * 0.4)).unwrap();
        assert!(rel_diff(&got, &want) < 1e-13);
    }

    #[test]
    fn two_forms_of_expeuler_agree() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(81);
        for _ in 0..10 {
            let p = random_problem(&mut rng, 4, 3);
            let xn = random(&mut rng, 4, 3);
            let h = 0.35;
            let got = step_expeuler_general(&p, &xn, h).unwrap();
            // Xₙ + h·φ₁(hSₙ)(F(Xₙ)), evaluated in vectorized form.
            let lin = linearize(&p, &xn).unwrap();
            let phi1 = kronecker_phi(1, &lin.operator, h).unwrap();
            let f = p.rhs(&xn).unwrap();
            let want = &xn + unvec(&(phi1 * vec_of(&f)), 4, 3) * h;
            assert!(rel_diff(&got, &want) < 1e-11);
        }
    }

    #[test]
    fn backward_matches_general() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(82);
        for _ in 0..10 {
            let p = random_problem(&mut rng, 6, 6);
            let xn = random(&mut rng, 6, 6) * 0.3;
            let g = step_expeuler_general(&p, &xn, 0.2).unwrap();
            let b = step_expeuler_backward(&p, &xn, 0.2).unwrap();
            assert!(rel_diff(&b, &g) < 1e-10);
        }
        // At an equilibrium F(Xₙ) = 0, so W₁ = 0.
        let eq = RiccatiProblem::new(scalar(-1.0), scalar(-1.0), scalar(0.0), scalar(0.0), scalar(0.0)).unwrap();
        assert_eq!(step_expeuler_backward(&eq, &scalar(0.0), 0.5).unwrap(), scalar(0.0));
        let singular = RiccatiProblem::new(scalar(1.0), scalar(-1.0), scalar(1.0), scalar(0.0), scalar(0.0)).unwrap();
        assert!(matches!(
            step_expeuler_backward(&singular, &scalar(0.0), 0.5),
            Err(Error::Solvability { .. })
        ));
    }

    #[test]
    fn erow3_scalar_example() {
        let x1 = step_erow3_dense(&tanh_problem(), &scalar(0.0), 0.1, &PhiRoute::Augmented).unwrap()[(0, 0)];
        let want = 0.1 + 2.0 * 0.1 * (1.0 / 6.0) * -0.01;
        assert!((x1 - want).abs() < 1e-15);
        assert!((x1 - 0.09966667).abs() < 1e-8);
        assert!((x1 - 0.1f64.tanh()).abs() < 1.4e-6);
    }

    #[test]
    fn erow3_collapses_without_quadratic_term() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(83);
        let p = RiccatiProblem::new(
            random(&mut rng, 3, 3),
            random(&mut rng, 4, 4),
            random(&mut rng, 3, 4),
            RealMatrix::zeros(4, 3),
            random(&mut rng, 3, 4),
        )
        .unwrap();
        let x = p.x0().clone();
        let e = step_expeuler_general(&p, &x, 0.3).unwrap();
        let r = step_erow3_dense(&p, &x, 0.3, &PhiRoute::Augmented).unwrap();
        assert!(rel_diff(&r, &e) < 1e-15);
    }

    #[test]
    fn erow3_routes_agree() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(84);
        let p = random_problem(&mut rng, 5, 5);
        let x = p.x0().clone();
        let aug = step_erow3_dense(&p, &x, 0.2, &PhiRoute::Augmented).unwrap();
        let quad = step_erow3_dense(&p, &x, 0.2, &PhiRoute::Quadrature(QuadratureRule::gauss_legendre(12).unwrap()))
            .unwrap();
        assert!(rel_diff(&quad, &aug) < 1e-13);
    }

    #[test]
    fn lowrank_expeuler_matches_dense() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(85);
        let p = symmetric_problem(&mut rng, 20);
        let data = p.lowrank().unwrap().clone();
        let x0 = LdlFactor::new(data.l0.clone(), data.d0.clone()).unwrap();
        let h = 0.1;
        let dense = step_expeuler_general(&p, p.x0(), h).unwrap();
        for mode in [ExpMode::Dense, ExpMode::Krylov] {
            let mut c = cfg(Scheme::LrExpEuler);
            c.exp_mode = mode;
            let lr = step_expeuler_lowrank(&p, &x0, h, &c).unwrap();
            assert!(rel_diff(&lr.x.to_dense(), &dense) < 1e-8, "{mode:?}");
            assert!(asymmetry(&lr.x.to_dense()) < 1e-14);
        }
        let c = cfg(Scheme::LrExpEuler);
        let same = step_expeuler_lowrank(&p, &x0, 0.0, &c).unwrap();
        assert!(rel_diff(&same.x.to_dense(), p.x0()) < 1e-14);
    }

    #[test]
    fn lowrank_zero_data_stays_zero() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(86);
        let n = 8;
        let p = RiccatiProblem::symmetric_from_factors(
            random(&mut rng, n, n),
            RealMatrix::zeros(1, n),
            RealMatrix::zeros(n, 1),
            RealMatrix::zeros(n, 0),
            RealMatrix::zeros(0, 0),
        )
        .unwrap();
        let c = cfg(Scheme::LrExpEuler);
        let s = step_expeuler_lowrank(&p, &LdlFactor::zero(n), 0.1, &c).unwrap();
        assert_eq!(s.x.to_dense(), RealMatrix::zeros(n, n));
        let s = step_erow3_lowrank(&p, &LdlFactor::zero(n), 0.1, &c).unwrap();
        assert_eq!(s.x.to_dense(), RealMatrix::zeros(n, n));

        let general = random_problem(&mut rng, 3, 3);
        assert!(matches!(
            step_expeuler_lowrank(&general, &LdlFactor::zero(3), 0.1, &c),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn lowrank_erow3_matches_dense() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(87);
        let p = symmetric_problem(&mut rng, 16);
        let data = p.lowrank().unwrap().clone();
        let x0 = LdlFactor::new(data.l0.clone(), data.d0.clone()).unwrap();
        let h = 0.1;
        let dense = step_erow3_dense(&p, p.x0(), h, &PhiRoute::Augmented).unwrap();
        let lr = step_erow3_lowrank(&p, &x0, h, &cfg(Scheme::Erow3LowRank)).unwrap();
        assert!(rel_diff(&lr.x.to_dense(), &dense) < 1e-8);
    }

    #[test]
    fn msde_polynomial_examples() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(88);
        let s = SylvesterOperator::new(random(&mut rng, 4, 4), random(&mut rng, 4, 4)).unwrap();
        let n0 = random(&mut rng, 4, 4);
        let homog = step_msde_polynomial(&s, &[n0.clone(), RealMatrix::zeros(4, 4)], 0.6).unwrap();
        assert!(rel_diff(&homog, &s.exp_action(0.6, &n0).unwrap()) < 1e-13);

        let zero = SylvesterOperator::new(RealMatrix::zeros(2, 2), RealMatrix::zeros(2, 2)).unwrap();
        let ns: Vec<RealMatrix> = (0..4).map(|_| random(&mut rng, 2, 2)).collect();
        let t = 0.7;
        let want = &ns[0] + &ns[1] * t + &ns[2] * (t * t / 2.0) + &ns[3] * (t * t * t / 6.0);
        assert!(rel_diff(&step_msde_polynomial(&zero, &ns, t).unwrap(), &want) < 1e-14);
    }

    #[test]
    fn msde_polynomial_matches_refined_integration() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(89);
        let s = SylvesterOperator::new(
            random(&mut rng, 4, 4) - RealMatrix::identity(4, 4),
            random(&mut rng, 4, 4) - RealMatrix::identity(4, 4),
        )
        .unwrap();
        let ns: Vec<RealMatrix> = (0..3).map(|_| random(&mut rng, 4, 4)).collect();
        let q = |t: f64| &ns[1] + &ns[2] * t;
        let f = |t: f64, x: &RealMatrix| s.apply(x).unwrap() + q(t);
        let (t_end, steps) = (0.8, 2000);
        let dt = t_end / steps as f64;
        let mut x = ns[0].clone();
        for i in 0..steps {
            let t = i as f64 * dt;
            let k1 = f(t, &x);
            let k2 = f(t + dt / 2.0, &(&x + &k1 * (dt / 2.0)));
            let k3 = f(t + dt / 2.0, &(&x + &k2 * (dt / 2.0)));
            let k4 = f(t + dt, &(&x + &k3 * dt));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        let got = step_msde_polynomial(&s, &ns, t_end).unwrap();
        assert!(rel_diff(&got, &x) < 1e-8);
    }

    #[test]
    fn shapes_are_checked() {
        let p = tanh_problem();
        let bad = from_row_major(1, 2, &[0.0, 0.0]).unwrap();
        assert!(matches!(step_expeuler_general(&p, &bad, 0.1), Err(Error::Dimension(_))));
    }
}
