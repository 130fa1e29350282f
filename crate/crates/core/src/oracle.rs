//! Reference solutions.
//!
//! The Riccati flow is computed exactly through the linear system
//! `[U; V]' = [[−D, G], [Q, A]]·[U; V]`, `U(0) = I`, `V(0) = X₀`, whose
//! solution gives `X(t) = V(t)·U(t)⁻¹` for as long as `U` stays invertible.
//! Small Sylvester-operator functions are also available in vectorized
//! (Kronecker) form for testing the operator-level code.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use nalgebra::DVector;

use crate::dense::{ensure_finite, expm, norm1, RealMatrix};
use crate::error::{Error, Result};
use crate::integrators::RiccatiProblem;
use crate::sylvop::SylvesterOperator;

/// Largest `M·N` handled by the vectorized oracles.
pub const KRONECKER_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadonOptions {
    /// Upper bound on `τ·‖H‖₁` for one substep.
    pub max_step_norm: f64,
    /// Largest accepted 1-norm condition number of `U` on a substep.
    pub cond_limit: f64,
    pub max_halvings: u32,
}

impl Default for RadonOptions {
    fn default() -> Self {
        Self {
            max_step_norm: 8.0,
            cond_limit: 1e12,
            max_halvings: 40,
        }
    }
}

/// Current state of the linearized flow, normalized so that `U = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadonState {
    pub u: RealMatrix,
    pub v: RealMatrix,
    pub t: f64,
}

impl RadonState {
    fn start(x0: &RealMatrix, t: f64) -> Self {
        Self {
            u: RealMatrix::identity(x0.ncols(), x0.ncols()),
            v: x0.clone(),
            t,
        }
    }

    /// `X = V·U⁻¹`, or `None` if `U` is singular.
    pub fn solution(&self) -> Option<RealMatrix> {
        let ut_inv = self.u.transpose().lu().solve(&self.v.transpose())?;
        Some(ut_inv.transpose())
    }
}

/// Exact solution `X(t)` with default options.
pub fn radon_solve(p: &RiccatiProblem, t: f64) -> Result<RealMatrix> {
    radon_solve_with(p, t, &RadonOptions::default())
}

pub fn radon_solve_with(p: &RiccatiProblem, t: f64, opts: &RadonOptions) -> Result<RealMatrix> {
    let mut out = radon_trajectory(p, &[t], opts)?;
    Ok(out.pop().expect("one time requested"))
}

/// `X(tᵢ)` for non-decreasing times `tᵢ ≥ 0`, each interval continuing from
/// the previous value.
pub fn radon_trajectory(
    p: &RiccatiProblem,
    times: &[f64],
    opts: &RadonOptions,
) -> Result<Vec<RealMatrix>> {
    if !(opts.max_step_norm > 0.0) || !(opts.cond_limit >= 1.0) {
        return Err(Error::Config(format!("invalid Radon options {opts:?}")));
    }
    let mut prev = 0.0;
    for &t in times {
        if !t.is_finite() || t < prev {
            return Err(Error::Domain(format!(
                "Radon times must be finite and non-decreasing from 0, got {t}"
            )));
        }
        prev = t;
    }

    let h = radon_matrix(p);
    let h_norm = norm1(&h);
    let mut cache: HashMap<u64, RealMatrix> = HashMap::new();
    let mut x = p.x0().clone();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let substeps = ((span * h_norm) / opts.max_step_norm).ceil().max(1.0) as usize;
            let tau = span / substeps as f64;
            for i in 0..substeps {
                x = advance(&h, &x, now + i as f64 * tau, tau, opts, &mut cache)?;
            }
        }
        now = t;
        out.push(x.clone());
    }
    Ok(out)
}

/// `[[−D, G], [Q, A]]`.
pub fn radon_matrix(p: &RiccatiProblem) -> RealMatrix {
    let (m, n) = p.shape();
    let mut h = RealMatrix::zeros(n + m, n + m);
    h.view_mut((0, 0), (n, n)).copy_from(&(-p.d()));
    h.view_mut((0, n), (n, m)).copy_from(p.g());
    h.view_mut((n, 0), (m, n)).copy_from(p.q());
    h.view_mut((n, n), (m, m)).copy_from(p.a());
    h
}

/// One substep of length `tau` from `X` at time `t`, halving on ill-conditioned `U`.
fn advance(
    h: &RealMatrix,
    x: &RealMatrix,
    t: f64,
    tau: f64,
    opts: &RadonOptions,
    cache: &mut HashMap<u64, RealMatrix>,
) -> Result<RealMatrix> {
    let mut x = x.clone();
    let mut done = 0.0;
    let mut piece = tau;
    let mut halvings = 0u32;
    while done < tau {
        piece = piece.min(tau - done);
        let key = piece.to_bits();
        if let Entry::Vacant(slot) = cache.entry(key) {
            slot.insert(expm(&(h * piece))?);
        }
        let e = &cache[&key];
        let state = propagate(e, &x, t + done + piece);
        match state.and_then(|s| accept(s, opts.cond_limit)) {
            Some(next) => {
                x = next;
                done += piece;
            }
            None => {
                halvings += 1;
                if halvings > opts.max_halvings {
                    return Err(Error::FiniteEscape {
                        t: t + done,
                        halvings: halvings - 1,
                    });
                }
                piece *= 0.5;
            }
        }
    }
    Ok(x)
}

fn propagate(e: &RealMatrix, x: &RealMatrix, t: f64) -> Option<RadonState> {
    let start = RadonState::start(x, t);
    let n = start.u.nrows();
    let m = start.v.nrows();
    let (e_top, e_bot) = (e.rows(0, n), e.rows(n, m));
    let u = e_top.columns(0, n) * &start.u + e_top.columns(n, m) * &start.v;
    let v = e_bot.columns(0, n) * &start.u + e_bot.columns(n, m) * &start.v;
    if u.iter().chain(v.iter()).all(|z| z.is_finite()) {
        Some(RadonState { u, v, t })
    } else {
        None
    }
}

/// Accepts a substep that started from `U = I` when `det U` stayed positive
/// (no pole was crossed) and `max(‖U‖₁, ‖V‖₁)·‖U⁻¹‖₁` is below the limit.
fn accept(s: RadonState, cond_limit: f64) -> Option<RealMatrix> {
    let n = s.u.nrows();
    if n == 0 {
        return Some(s.v);
    }
    let lu = s.u.clone().lu();
    if !(lu.determinant() > 0.0) {
        return None;
    }
    let inv = lu.try_inverse()?;
    let stacked = norm1(&s.u).max(norm1(&s.v));
    let cond = stacked * norm1(&inv);
    if !(cond <= cond_limit) {
        return None;
    }
    let x = &s.v * inv;
    ensure_finite(&x, "Radon solution").ok()?;
    Some(x)
}

/// `I⊗A + Dᵀ⊗I`, the matrix of `S` acting on column-major `vec(X)`.
pub fn kronecker_sum(s: &SylvesterOperator) -> RealMatrix {
    let (m, n) = s.shape();
    let (a, d) = (s.a(), s.d());
    let mut k = RealMatrix::zeros(m * n, m * n);
    for j in 0..n {
        k.view_mut((m * j, m * j), (m, m)).copy_from(a);
        for l in 0..n {
            let coeff = d[(l, j)];
            if coeff != 0.0 {
                for i in 0..m {
                    k[(i + m * j, i + m * l)] += coeff;
                }
            }
        }
    }
    k
}

/// Dense `φₖ(h·(I⊗A + Dᵀ⊗I))` from one exponential of size `MN·(k+1)`.
pub fn kronecker_phi(k: usize, s: &SylvesterOperator, h: f64) -> Result<RealMatrix> {
    let (m, n) = s.shape();
    let mn = m * n;
    if mn > KRONECKER_CAP {
        return Err(Error::SizeCap(format!(
            "vectorized φ needs M·N ≤ {KRONECKER_CAP}, got {mn}"
        )));
    }
    let kh = kronecker_sum(s) * h;
    if k == 0 {
        return expm(&kh);
    }
    let size = mn * (k + 1);
    let mut big = RealMatrix::zeros(size, size);
    big.view_mut((0, 0), (mn, mn)).copy_from(&kh);
    for blk in 0..k {
        big.view_mut((mn * blk, mn * (blk + 1)), (mn, mn))
            .fill_with_identity();
    }
    let e = expm(&big)?;
    Ok(e.view((0, mn * k), (mn, mn)).into_owned())
}

/// Column-major vectorization.
pub fn vec_of(x: &RealMatrix) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> RealMatrix {
    RealMatrix::from_column_slice(rows, cols, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{asymmetry, min_sym_eigenvalue, rel_diff};
    use crate::phifun::{phi_scalar, QuadratureRule};
    use crate::problems::{build_symmetric_problem, fdm2d_matrix, random_lowrank, Distribution, Fdm2dSpec};
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256StarStar;

    fn scalar(v: f64) -> RealMatrix {
        RealMatrix::from_element(1, 1, v)
    }

    fn random(rng: &mut Xoshiro256StarStar, r: usize, c: usize) -> RealMatrix {
        RealMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn tanh_problem() -> RiccatiProblem {
        RiccatiProblem::new(scalar(0.0), scalar(0.0), scalar(1.0), scalar(1.0), scalar(0.0)).unwrap()
    }

    fn random_problem(rng: &mut Xoshiro256StarStar, m: usize, n: usize) -> RiccatiProblem {
        let a = random(rng, m, m) - RealMatrix::identity(m, m);
        let d = random(rng, n, n) - RealMatrix::identity(n, n);
        let q = random(rng, m, n);
        let g = random(rng, n, m) * 0.3;
        let x0 = random(rng, m, n) * 0.3;
        RiccatiProblem::new(a, d, q, g, x0).unwrap()
    }

    fn fdm_problem(k: usize, seed: u64) -> RiccatiProblem {
        let a = fdm2d_matrix(&Fdm2dSpec::symmetric(k)).unwrap();
        let n = k * k;
        let c = random_lowrank(n, 2, seed, Distribution::Uniform01).unwrap().transpose();
        let b = random_lowrank(n, 2, seed + 1, Distribution::Uniform01).unwrap();
        let l0 = random_lowrank(n, 2, seed + 2, Distribution::Uniform01).unwrap();
        build_symmetric_problem(a, c, b, l0).unwrap()
    }

    #[test]
    fn scalar_tanh() {
        let x = radon_solve(&tanh_problem(), 1.0).unwrap();
        assert!((x[(0, 0)] - 1f64.tanh()).abs() < 1e-14);
        assert!((x[(0, 0)] - 0.76159416).abs() < 1e-8);
        let xs = radon_trajectory(&tanh_problem(), &[0.0, 0.5, 2.0], &RadonOptions::default()).unwrap();
        assert_eq!(xs[0], scalar(0.0));
        assert!((xs[1][(0, 0)] - 0.5f64.tanh()).abs() < 1e-14);
        assert!((xs[2][(0, 0)] - 2f64.tanh()).abs() < 1e-14);
    }

    #[test]
    fn homogeneous_consistency() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(40);
        let (m, n) = (4, 3);
        let a = random(&mut rng, m, m);
        let d = random(&mut rng, n, n);
        let x0 = random(&mut rng, m, n);
        let p = RiccatiProblem::new(a.clone(), d.clone(), RealMatrix::zeros(m, n), RealMatrix::zeros(n, m), x0.clone())
            .unwrap();
        let want = expm(&(&a * 0.8)).unwrap() * x0 * expm(&(&d * 0.8)).unwrap();
        assert!(rel_diff(&radon_solve(&p, 0.8).unwrap(), &want) < 1e-12);
    }

    #[test]
    fn finite_escape_is_reported() {
        // x' = 1 + x² from 0 blows up at π/2.
        let p = RiccatiProblem::new(scalar(0.0), scalar(0.0), scalar(1.0), scalar(-1.0), scalar(0.0))
            .unwrap();
        let x = radon_solve(&p, 1.0).unwrap();
        assert!((x[(0, 0)] - 1f64.tan()).abs() < 1e-12);
        assert!(matches!(radon_solve(&p, 2.0), Err(Error::FiniteEscape { .. })));
        assert!(matches!(radon_solve(&p, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn flow_property() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(41);
        for _ in 0..5 {
            let p = random_problem(&mut rng, 3, 4);
            let (s, t) = (0.3, 0.45);
            let mid = radon_solve(&p, s).unwrap();
            let restarted = radon_solve(&p.with_initial(mid).unwrap(), t).unwrap();
            let direct = radon_solve(&p, s + t).unwrap();
            assert!(rel_diff(&restarted, &direct) < 1e-9);
        }
    }

    #[test]
    fn integral_form_residual() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(42);
        let rule = QuadratureRule::gauss_legendre(64).unwrap();
        for (m, n) in [(2, 3), (5, 5), (8, 6)] {
            let p = random_problem(&mut rng, m, n);
            let t = 0.7;
            let s_op = SylvesterOperator::new(p.a().clone(), p.d().clone()).unwrap();
            let mut nodes: Vec<f64> = rule.nodes().iter().map(|s| s * t).collect();
            nodes.push(t);
            let xs = radon_trajectory(&p, &nodes, &RadonOptions::default()).unwrap();
            let mut rhs = s_op.exp_action(t, p.x0()).unwrap();
            for (i, w) in rule.weights().iter().enumerate() {
                let xs_i = &xs[i];
                let integrand = p.q() - xs_i * p.g() * xs_i;
                rhs += s_op.exp_action(t - nodes[i], &integrand).unwrap() * (w * t);
            }
            assert!(rel_diff(xs.last().unwrap(), &rhs) < 1e-6);
        }
    }

    #[test]
    fn fdm_residual_and_symmetry() {
        let p = fdm_problem(8, 7);
        let (t, delta) = (1.0, 1e-5);
        let xs = radon_trajectory(&p, &[t - delta, t, t + delta], &RadonOptions::default()).unwrap();
        let fd = (&xs[2] - &xs[0]) / (2.0 * delta);
        let f = p.rhs(&xs[1]).unwrap();
        assert!((fd - &f).norm() <= 1e-6 * f.norm().max(1e-300) || (&xs[2] - &xs[0]).norm() < 1e-12 * xs[1].norm());
        let x = &xs[1];
        assert!(asymmetry(x) < 1e-10);
        assert!(min_sym_eigenvalue(x) >= -1e-9 * x.norm());
    }

    #[test]
    fn symmetric_output_is_psd_early_on() {
        let p = fdm_problem(4, 3);
        for t in [0.01, 0.1, 0.5] {
            let x = radon_solve(&p, t).unwrap();
            assert!(asymmetry(&x) < 1e-10);
            assert!(min_sym_eigenvalue(&x) >= -1e-9 * x.norm());
        }
    }

    #[test]
    fn kronecker_examples() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(43);
        let s = SylvesterOperator::new(random(&mut rng, 2, 2), random(&mut rng, 3, 3)).unwrap();
        let k0 = kronecker_phi(0, &s, 0.5).unwrap();
        assert!(rel_diff(&k0, &expm(&(kronecker_sum(&s) * 0.5)).unwrap()) < 1e-15);

        let zero = SylvesterOperator::new(RealMatrix::zeros(2, 2), RealMatrix::zeros(2, 2)).unwrap();
        for k in 0..4 {
            let fact: f64 = (1..=k).map(|v| v as f64).product();
            let want = RealMatrix::identity(4, 4) / fact;
            assert!(rel_diff(&kronecker_phi(k, &zero, 1.3).unwrap(), &want) < 1e-15);
        }

        let big = SylvesterOperator::new(RealMatrix::zeros(65, 65), RealMatrix::zeros(64, 64)).unwrap();
        assert!(matches!(kronecker_phi(1, &big, 1.0), Err(Error::SizeCap(_))));
    }

    #[test]
    fn kronecker_phi_matches_eigen_oracle() {
        // Symmetric A and D: the Kronecker sum has eigenpairs (αᵢ + δⱼ, vⱼ⊗uᵢ).
        let mut rng = Xoshiro256StarStar::seed_from_u64(44);
        let sym = |rng: &mut Xoshiro256StarStar| {
            let r = random(rng, 3, 3);
            (&r + r.transpose()) * 0.5
        };
        let (a, d) = (sym(&mut rng), sym(&mut rng));
        let s = SylvesterOperator::new(a.clone(), d.clone()).unwrap();
        let (ea, ed) = (a.symmetric_eigen(), d.symmetric_eigen());
        let h = 0.9;
        for k in 1..=3 {
            let got = kronecker_phi(k, &s, h).unwrap();
            let mut want = RealMatrix::zeros(9, 9);
            for i in 0..3 {
                for j in 0..3 {
                    let u = ea.eigenvectors.column(i);
                    let v = ed.eigenvectors.column(j);
                    let w = DVector::from_fn(9, |r, _| u[r % 3] * v[r / 3]);
                    let lam = h * (ea.eigenvalues[i] + ed.eigenvalues[j]);
                    want += &w * w.transpose() * phi_scalar(k, lam);
                }
            }
            assert!(rel_diff(&got, &want) < 1e-13, "k={k}");
        }
    }
}
