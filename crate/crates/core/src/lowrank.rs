//! `L·D·Lᵀ` factors and the factored assemblies of the low-rank integrators
//! for the symmetric problem `Q = CᵀC`, `G = BBᵀ`, `D = Aᵀ`.

use crate::dense::{asymmetry, block_diag, compress, ensure_finite, expm, hcat, RealMatrix};
use crate::error::{Error, Result};
use crate::integrators::{LowRankData, RiccatiProblem};
use crate::krylov::{build_basis, exp_actions_krylov};
use crate::phifun::QuadratureRule;

/// `X = L·D·Lᵀ` with `L` n×r and symmetric `D` r×r.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlFactor {
    l: RealMatrix,
    d: RealMatrix,
}

impl LdlFactor {
    pub fn new(l: RealMatrix, d: RealMatrix) -> Result<Self> {
        if d.shape() != (l.ncols(), l.ncols()) {
            return Err(Error::Dimension(format!(
                "core is {}x{}, factor has {} columns",
                d.nrows(),
                d.ncols(),
                l.ncols()
            )));
        }
        ensure_finite(&l, "LDLᵀ factor")?;
        ensure_finite(&d, "LDLᵀ core")?;
        if asymmetry(&d) > 1e-12 {
            return Err(Error::Domain(format!(
                "LDLᵀ core is not symmetric (relative asymmetry {:.3e})",
                asymmetry(&d)
            )));
        }
        Ok(Self { l, d })
    }

    /// The zero matrix of size n, as a zero-width factor.
    pub fn zero(n: usize) -> Self {
        Self {
            l: RealMatrix::zeros(n, 0),
            d: RealMatrix::zeros(0, 0),
        }
    }

    pub fn l(&self) -> &RealMatrix {
        &self.l
    }

    pub fn d(&self) -> &RealMatrix {
        &self.d
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Column count of `L`.
    pub fn width(&self) -> usize {
        self.l.ncols()
    }

    pub fn to_dense(&self) -> RealMatrix {
        &self.l * &self.d * self.l.transpose()
    }

    /// `‖L·D·Lᵀ‖_F` without forming the product.
    pub fn norm_fro(&self) -> f64 {
        let m = self.l.transpose() * &self.l * &self.d;
        (&m * &m).trace().max(0.0).sqrt()
    }

    /// Column compression; also returns the number of columns removed.
    pub fn compressed(&self, tol: f64) -> Result<(Self, usize)> {
        let (l, d) = compress(&self.l, &self.d, tol)?;
        let dropped = self.width() - l.ncols();
        Ok((Self { l, d }, dropped))
    }
}

fn generators(p: &RiccatiProblem) -> Result<&LowRankData> {
    p.lowrank()
        .ok_or_else(|| Error::Config("low-rank assembly needs a problem with generators C, B".into()))
}

fn check_dim(p: &RiccatiProblem, x: &LdlFactor) -> Result<()> {
    if x.dim() != p.shape().0 {
        return Err(Error::Dimension(format!(
            "factor has {} rows, problem has dimension {}",
            x.dim(),
            p.shape().0
        )));
    }
    Ok(())
}

/// `F(Xₙ) = CᵀC + A·Xₙ + Xₙ·Aᵀ − Xₙ·BBᵀ·Xₙ` as `L̃·D̃·L̃ᵀ` with
/// `L̃ = [Cᵀ, A·Lₙ, Lₙ]` and
/// `D̃ = [[I, 0, 0], [0, 0, Dₙ], [0, Dₙ, −P·Pᵀ]]`, `P = Dₙ·Lₙᵀ·B`.
pub fn assemble_f(p: &RiccatiProblem, xn: &LdlFactor) -> Result<LdlFactor> {
    let data = generators(p)?;
    check_dim(p, xn)?;
    let n = xn.dim();
    let (l, r) = (data.c.nrows(), xn.width());
    let lt = hcat(n, &[&data.c.transpose(), &(p.a() * xn.l()), xn.l()])?;
    let pp = xn.d() * xn.l().transpose() * &data.b;
    let mut dt = RealMatrix::zeros(l + 2 * r, l + 2 * r);
    dt.view_mut((0, 0), (l, l)).fill_with_identity();
    dt.view_mut((l, l + r), (r, r)).copy_from(xn.d());
    dt.view_mut((l + r, l), (r, r)).copy_from(xn.d());
    dt.view_mut((l + r, l + r), (r, r)).copy_from(&-(&pp * pp.transpose()));
    LdlFactor::new(lt, dt)
}

/// `Gₙ(Xₙ₂) − Gₙ(Xₙ) = −(Xₙ₂ − Xₙ)·BBᵀ·(Xₙ₂ − Xₙ)` as
/// `[Lₙ, Lₙ₂]·[[−P₁P₁ᵀ, P₁P₂ᵀ], [P₂P₁ᵀ, −P₂P₂ᵀ]]·[Lₙ, Lₙ₂]ᵀ` with
/// `P₁ = Dₙ·Lₙᵀ·B`, `P₂ = Dₙ₂·Lₙ₂ᵀ·B`.
pub fn assemble_remainder_diff(
    p: &RiccatiProblem,
    xn: &LdlFactor,
    xn2: &LdlFactor,
) -> Result<LdlFactor> {
    let data = generators(p)?;
    check_dim(p, xn)?;
    check_dim(p, xn2)?;
    let n = xn.dim();
    let p1 = xn.d() * xn.l().transpose() * &data.b;
    let p2 = xn2.d() * xn2.l().transpose() * &data.b;
    let (r1, r2) = (xn.width(), xn2.width());
    let mut core = RealMatrix::zeros(r1 + r2, r1 + r2);
    core.view_mut((0, 0), (r1, r1)).copy_from(&-(&p1 * p1.transpose()));
    core.view_mut((0, r1), (r1, r2)).copy_from(&(&p1 * p2.transpose()));
    core.view_mut((r1, 0), (r2, r1)).copy_from(&(&p2 * p1.transpose()));
    core.view_mut((r1, r1), (r2, r2)).copy_from(&-(&p2 * p2.transpose()));
    LdlFactor::new(hcat(n, &[xn.l(), xn2.l()])?, core)
}

/// Source of `e^{τA}·L` for a fixed matrix `A` and several times.
pub trait ExpActions {
    fn dim(&self) -> usize;
    fn actions(&self, taus: &[f64], l: &RealMatrix) -> Result<Vec<RealMatrix>>;
}

/// One dense matrix exponential per time.
#[derive(Debug, Clone)]
pub struct DenseExpActions {
    a: RealMatrix,
}

impl DenseExpActions {
    pub fn new(a: RealMatrix) -> Self {
        Self { a }
    }
}

impl ExpActions for DenseExpActions {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn actions(&self, taus: &[f64], l: &RealMatrix) -> Result<Vec<RealMatrix>> {
        taus.iter()
            .map(|&t| Ok(expm(&(&self.a * t))? * l))
            .collect()
    }
}

/// One block Krylov basis per call, shared by all times.
#[derive(Debug, Clone)]
pub struct KrylovExpActions {
    a: RealMatrix,
    steps: usize,
}

impl KrylovExpActions {
    pub fn new(a: RealMatrix, steps: usize) -> Self {
        Self { a, steps }
    }
}

impl ExpActions for KrylovExpActions {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn actions(&self, taus: &[f64], l: &RealMatrix) -> Result<Vec<RealMatrix>> {
        let basis = build_basis(&self.a, l, self.steps)?;
        Ok(exp_actions_krylov(&basis, taus, l)?
            .into_iter()
            .map(|r| r.value)
            .collect())
    }
}

/// Quadrature approximation of `coeff·φₖ(hS)(L̃D̃L̃ᵀ)` with `S(X) = AX + XAᵀ`:
/// `Y = [e^{(1−sⱼ)hA}·L̃]ⱼ`, `T = diag(γⱼ·D̃)`, `γⱼ = coeff·ωⱼ·sⱼ^{k−1}/(k−1)!`.
pub fn assemble_phi_sum(
    provider: &dyn ExpActions,
    h: f64,
    k: usize,
    factor: &LdlFactor,
    rule: &QuadratureRule,
    coeff: f64,
) -> Result<LdlFactor> {
    if k != 1 && k != 3 {
        return Err(Error::Domain(format!("φ-sum assembly supports k = 1 or 3, got {k}")));
    }
    if factor.dim() != provider.dim() {
        return Err(Error::Dimension(format!(
            "factor has {} rows, operator has dimension {}",
            factor.dim(),
            provider.dim()
        )));
    }
    let n = factor.dim();
    if h == 0.0 || coeff == 0.0 || factor.width() == 0 {
        return Ok(LdlFactor::zero(n));
    }
    let taus: Vec<f64> = rule.nodes().iter().map(|s| (1.0 - s) * h).collect();
    let ys = provider.actions(&taus, factor.l())?;
    let inv_fact = if k == 3 { 0.5 } else { 1.0 };
    let cores: Vec<RealMatrix> = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(s, w)| factor.d() * (coeff * w * s.powi(k as i32 - 1) * inv_fact))
        .collect();
    let y_refs: Vec<&RealMatrix> = ys.iter().collect();
    let core_refs: Vec<&RealMatrix> = cores.iter().collect();
    LdlFactor::new(hcat(n, &y_refs)?, block_diag(&core_refs))
}

/// `[X.L, Y.L]`, `diag(X.D, Y.D)` followed by compression at `tol`.
pub fn concat_update(x: &LdlFactor, y: &LdlFactor, tol: f64) -> Result<(LdlFactor, usize)> {
    if x.dim() != y.dim() {
        return Err(Error::Dimension(format!(
            "factors have {} and {} rows",
            x.dim(),
            y.dim()
        )));
    }
    let joined = LdlFactor::new(
        hcat(x.dim(), &[x.l(), y.l()])?,
        block_diag(&[x.d(), y.d()]),
    )?;
    joined.compressed(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::rel_diff;
    use crate::phifun::phi_action_quadrature;
    use crate::problems::{fdm2d_matrix, Fdm2dSpec};
    use crate::sylvop::{linearize, remainder, SylvesterOperator};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256StarStar;

    fn random(rng: &mut Xoshiro256StarStar, r: usize, c: usize) -> RealMatrix {
        RealMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn sym(rng: &mut Xoshiro256StarStar, r: usize) -> RealMatrix {
        let m = random(rng, r, r);
        (&m + m.transpose()) * 0.5
    }

    fn problem(rng: &mut Xoshiro256StarStar, n: usize, with_b: bool) -> RiccatiProblem {
        let a = random(rng, n, n) - RealMatrix::identity(n, n) * 2.0;
        let c = random(rng, 2, n);
        let b = if with_b { random(rng, n, 2) } else { RealMatrix::zeros(n, 2) };
        let l0 = random(rng, n, 2);
        RiccatiProblem::symmetric_from_factors(a, c, b, l0, RealMatrix::identity(2, 2)).unwrap()
    }

    fn factor(rng: &mut Xoshiro256StarStar, n: usize, r: usize) -> LdlFactor {
        LdlFactor::new(random(rng, n, r), sym(rng, r)).unwrap()
    }

    #[test]
    fn factor_validation() {
        assert!(matches!(
            LdlFactor::new(RealMatrix::zeros(3, 2), RealMatrix::zeros(3, 3)),
            Err(Error::Dimension(_))
        ));
        let mut d = RealMatrix::identity(2, 2);
        d[(0, 1)] = 1.0;
        assert!(matches!(LdlFactor::new(RealMatrix::zeros(3, 2), d), Err(Error::Domain(_))));
        let z = LdlFactor::zero(4);
        assert_eq!(z.to_dense(), RealMatrix::zeros(4, 4));
        assert_eq!(z.norm_fro(), 0.0);

        let mut rng = Xoshiro256StarStar::seed_from_u64(60);
        let f = factor(&mut rng, 10, 3);
        assert!((f.norm_fro() - f.to_dense().norm()).abs() < 1e-12 * f.to_dense().norm());
    }

    #[test]
    fn assemble_f_examples() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(61);
        let p = problem(&mut rng, 20, true);
        let xn = factor(&mut rng, 20, 3);
        let f = assemble_f(&p, &xn).unwrap();
        assert_eq!(f.width(), 2 + 6);
        assert!(rel_diff(&f.to_dense(), &p.rhs(&xn.to_dense()).unwrap()) < 1e-12);

        let zero = assemble_f(&p, &LdlFactor::zero(20)).unwrap();
        assert!(rel_diff(&zero.to_dense(), p.q()) < 1e-15);

        let lyap = problem(&mut rng, 12, false);
        let x = factor(&mut rng, 12, 2).to_dense();
        let xf = LdlFactor::new(RealMatrix::identity(12, 12), x.clone()).unwrap();
        let want = lyap.q() + lyap.a() * &x + &x * lyap.a().transpose();
        assert!(rel_diff(&assemble_f(&lyap, &xf).unwrap().to_dense(), &want) < 1e-13);

        let general = RiccatiProblem::new(
            RealMatrix::zeros(2, 2),
            RealMatrix::zeros(2, 2),
            RealMatrix::zeros(2, 2),
            RealMatrix::zeros(2, 2),
            RealMatrix::zeros(2, 2),
        )
        .unwrap();
        assert!(matches!(assemble_f(&general, &LdlFactor::zero(2)), Err(Error::Config(_))));
    }

    #[test]
    fn remainder_diff_examples() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(62);
        let p = problem(&mut rng, 20, true);
        let (x1, x2) = (factor(&mut rng, 20, 3), factor(&mut rng, 20, 4));
        let got = assemble_remainder_diff(&p, &x1, &x2).unwrap().to_dense();
        let (d1, d2) = (x1.to_dense(), x2.to_dense());
        let g = p.g();
        let want = &d1 * g * &d2 + &d2 * g * &d1 - &d2 * g * &d2 - &d1 * g * &d1;
        assert!(rel_diff(&got, &want) < 1e-12);
        let via_def = remainder(&p, &d1, &d2).unwrap() - remainder(&p, &d1, &d1).unwrap();
        assert!(rel_diff(&got, &via_def) < 1e-12);

        let same = assemble_remainder_diff(&p, &x1, &x1).unwrap().to_dense();
        assert!(same.norm() < 1e-12 * d1.norm().powi(2) * g.norm());

        let lyap = problem(&mut rng, 20, false);
        assert_eq!(assemble_remainder_diff(&lyap, &x1, &x2).unwrap().to_dense().norm(), 0.0);
        assert!(matches!(
            assemble_remainder_diff(&p, &x1, &factor(&mut rng, 5, 1)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn phi_sum_examples() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(63);
        let n = 10;
        let rule = QuadratureRule::default();
        let f = factor(&mut rng, n, 3);
        let zero_op = DenseExpActions::new(RealMatrix::zeros(n, n));
        // Aₙ = 0: k = 3, coeff = 2h gives 2h·(Σωⱼsⱼ²/2)·F = (h/3)·F.
        let h = 0.2;
        let got = assemble_phi_sum(&zero_op, h, 3, &f, &rule, 2.0 * h).unwrap();
        assert!(rel_diff(&got.to_dense(), &(f.to_dense() * (h / 3.0))) < 1e-14);
        // k = 1, coeff = h: γⱼ = h·ωⱼ.
        let got = assemble_phi_sum(&zero_op, h, 1, &f, &rule, h).unwrap();
        for (j, w) in rule.weights().iter().enumerate() {
            let blk = got.d().view((3 * j, 3 * j), (3, 3)).into_owned();
            assert!(rel_diff(&blk, &(f.d() * (h * w))) < 1e-15);
        }
        let z = assemble_phi_sum(&zero_op, 0.0, 3, &f, &rule, 1.0).unwrap();
        assert_eq!(z.width(), 0);
        assert!(matches!(assemble_phi_sum(&zero_op, h, 2, &f, &rule, h), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_sum_matches_dense_quadrature() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(64);
        let n = 15;
        let a = random(&mut rng, n, n) - RealMatrix::identity(n, n) * 3.0;
        let s = SylvesterOperator::new(a.clone(), a.transpose()).unwrap();
        let f = factor(&mut rng, n, 4);
        let rule = QuadratureRule::default();
        let h = 0.3;
        for (k, coeff) in [(1, h), (3, 2.0 * h)] {
            let want = phi_action_quadrature(k, &s, h, &f.to_dense(), &rule).unwrap() * coeff;
            for provider in [
                Box::new(DenseExpActions::new(a.clone())) as Box<dyn ExpActions>,
                Box::new(KrylovExpActions::new(a.clone(), 30)),
            ] {
                let got = assemble_phi_sum(provider.as_ref(), h, k, &f, &rule, coeff).unwrap();
                assert!(rel_diff(&got.to_dense(), &want) < 1e-12);
            }
        }
    }

    #[test]
    fn concat_examples() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(65);
        let x = factor(&mut rng, 12, 3);
        let y = factor(&mut rng, 12, 2);
        let tol = 12.0 * f64::EPSILON;
        let (same, dropped) = concat_update(&x, &LdlFactor::zero(12), tol).unwrap();
        assert_eq!(dropped, 0);
        assert!(rel_diff(&same.to_dense(), &x.to_dense()) < 1e-13);
        let (only_y, _) = concat_update(&LdlFactor::zero(12), &y, tol).unwrap();
        assert!(rel_diff(&only_y.to_dense(), &y.to_dense()) < 1e-13);
        let (sum, _) = concat_update(&x, &y, tol).unwrap();
        let want = x.to_dense() + y.to_dense();
        assert!((sum.to_dense() - &want).norm() <= 10.0 * tol * want.norm());
        assert!(matches!(concat_update(&x, &LdlFactor::zero(3), tol), Err(Error::Dimension(_))));
    }

    #[test]
    fn assemblies_on_fdm_problem() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(66);
        let a = fdm2d_matrix(&Fdm2dSpec::nonsymmetric(7)).unwrap();
        let n = 49;
        let p = RiccatiProblem::symmetric_from_factors(
            a,
            random(&mut rng, 2, n),
            random(&mut rng, n, 2),
            random(&mut rng, n, 2),
            RealMatrix::identity(2, 2),
        )
        .unwrap();
        let x = factor(&mut rng, n, 5);
        let lin = linearize(&p, &x.to_dense()).unwrap();
        assert!(rel_diff(lin.d_n(), &lin.a_n().transpose()) < 1e-14);
        let f = assemble_f(&p, &x).unwrap();
        assert!(rel_diff(&f.to_dense(), &p.rhs(&x.to_dense()).unwrap()) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn compression_never_widens(seed in 0u64..1000, r in 1usize..8) {
            let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
            let f = factor(&mut rng, 20, r);
            let (c, dropped) = f.compressed(20.0 * f64::EPSILON).unwrap();
            prop_assert!(c.width() <= f.width());
            prop_assert_eq!(c.width() + dropped, f.width());
            let want = f.to_dense();
            prop_assert!((c.to_dense() - &want).norm() <= 1e-12 * want.norm());
        }
    }
}
