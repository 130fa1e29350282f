//! φ-functions `φⱼ(z) = ∫₀¹ e^{(1−θ)z} θ^{j−1}/(j−1)! dθ`, `φ₀(z) = e^z`, and
//! their Sylvester-operator counterparts.

use crate::dense::RealMatrix;
use crate::error::{Error, Result};
use crate::sylvop::SylvesterOperator;

/// Below this `|z|` the scalar φ-functions are summed from their Taylor series.
const SERIES_RADIUS: f64 = 1.0;
const SERIES_TERMS: usize = 25;

/// Node count of the default Gauss–Legendre rule.
pub const DEFAULT_NODES: usize = 7;

/// Scalar `φⱼ(z)`.
pub fn phi_scalar(j: usize, z: f64) -> f64 {
    if j == 0 {
        return z.exp();
    }
    if z.abs() < SERIES_RADIUS {
        // Σ_m z^m / (m+j)!, summed from the smallest term up.
        let mut denom = (1..=j).map(|v| v as f64).product::<f64>();
        let mut terms = [0.0; SERIES_TERMS];
        let mut pow = 1.0;
        for (m, t) in terms.iter_mut().enumerate() {
            if m > 0 {
                pow *= z;
                denom *= (m + j) as f64;
            }
            *t = pow / denom;
        }
        return terms.iter().rev().sum();
    }
    let mut phi = z.exp();
    let mut fact = 1.0;
    for i in 0..j {
        if i > 0 {
            fact *= i as f64;
        }
        phi = (phi - 1.0 / fact) / z;
    }
    phi
}

/// Quadrature rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::Domain(format!(
                "quadrature needs matching non-empty nodes/weights, got {} and {}",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::Domain("quadrature nodes must lie in [0, 1]".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-14 {
            return Err(Error::Domain(format!("quadrature weights sum to {total}, not 1")));
        }
        Ok(Self { nodes, weights })
    }

    /// Gauss–Legendre rule with `count` nodes mapped to `[0, 1]`, nodes ascending.
    pub fn gauss_legendre(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("Gauss–Legendre rule needs at least one node".into()));
        }
        let n = count;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the usual cosine guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // x is the i-th largest root; map ±x to [0, 1].
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            nodes[i] = 0.5 * (1.0 - x);
            weights[n - 1 - i] = 0.5 * w;
            weights[i] = 0.5 * w;
        }
        Self::new(nodes, weights)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_legendre(DEFAULT_NODES).expect("default rule")
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// How a single `φₖ(hS)(N)` action is evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PhiRoute {
    /// One exponential of a block-triangular augmented matrix (exact).
    #[default]
    Augmented,
    /// The quadrature approximation with the given rule.
    Quadrature(QuadratureRule),
}

/// `Σ_{j=0}^{k} φⱼ(hS)(Nⱼ)` with operands `N₀, …, N_k`.
#[derive(Debug, Clone)]
pub struct PhiCombination {
    operands: Vec<RealMatrix>,
    operator: SylvesterOperator,
    h: f64,
}

impl PhiCombination {
    pub fn new(operands: Vec<RealMatrix>, operator: SylvesterOperator, h: f64) -> Result<Self> {
        if operands.is_empty() {
            return Err(Error::Dimension("φ-combination needs at least N₀".into()));
        }
        for op in &operands {
            operator.check_operand(op)?;
        }
        if !h.is_finite() {
            return Err(Error::Domain(format!("step {h} is not finite")));
        }
        Ok(Self {
            operands,
            operator,
            h,
        })
    }

    /// Highest φ index `k`.
    pub fn order(&self) -> usize {
        self.operands.len() - 1
    }

    pub fn operands(&self) -> &[RealMatrix] {
        &self.operands
    }

    pub fn operator(&self) -> &SylvesterOperator {
        &self.operator
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

/// `φₖ(hS)(N)` by the selected route. `k = 0` is the exponential action.
pub fn phi_action(
    k: usize,
    s: &SylvesterOperator,
    h: f64,
    n: &RealMatrix,
    route: &PhiRoute,
) -> Result<RealMatrix> {
    s.check_operand(n)?;
    if k == 0 {
        return s.exp_action(h, n);
    }
    match route {
        PhiRoute::Quadrature(rule) => phi_action_quadrature(k, s, h, n, rule),
        PhiRoute::Augmented => {
            let mut ops = vec![RealMatrix::zeros(n.nrows(), n.ncols()); k + 1];
            ops[k] = n.clone();
            s.phi_combination_augmented(h, &ops)
        }
    }
}

/// Forward recursion: `W₀ = N₀`, `Wⱼ = hS(Wⱼ₋₁) + Nⱼ`, then
/// `Σ φⱼ(hS)Nⱼ = φₖ(hS)(Wₖ) + Σ_{j<k} Wⱼ/j!`.
pub fn eval_forward(c: &PhiCombination, route: &PhiRoute) -> Result<RealMatrix> {
    let s_hat = c.operator.scaled(c.h);
    let k = c.order();
    let mut w = c.operands[0].clone();
    let mut acc = RealMatrix::zeros(w.nrows(), w.ncols());
    let mut fact = 1.0;
    for j in 1..=k {
        if j > 1 {
            fact *= (j - 1) as f64;
        }
        acc += &w / fact;
        w = s_hat.apply(&w)? + &c.operands[j];
    }
    Ok(phi_action(k, &c.operator, c.h, &w, route)? + acc)
}

/// Backward recursion: `Wₖ = (hS)⁻¹Nₖ`, `Wⱼ = (hS)⁻¹(Nⱼ + Wⱼ₊₁)`, then
/// `Σ φⱼ(hS)Nⱼ = e^{hS}(N₀ + W₁) − Σ_{j≥1} Wⱼ/(j−1)!`.
pub fn eval_backward(c: &PhiCombination) -> Result<RealMatrix> {
    let k = c.order();
    let n0 = &c.operands[0];
    if k == 0 {
        return c.operator.exp_action(c.h, n0);
    }
    let s_hat = c.operator.scaled(c.h);
    let solve = |rhs: &RealMatrix| crate::dense::solve_sylvester(s_hat.a(), s_hat.d(), rhs);

    // ws[j-1] holds W_j.
    let mut ws: Vec<RealMatrix> = Vec::with_capacity(k);
    ws.push(solve(&c.operands[k])?);
    for j in (1..k).rev() {
        let next = ws.last().expect("non-empty");
        ws.push(solve(&(&c.operands[j] + next))?);
    }
    ws.reverse();

    let mut out = c.operator.exp_action(c.h, &(n0 + &ws[0]))?;
    let mut fact = 1.0;
    for (idx, w) in ws.iter().enumerate() {
        if idx > 1 {
            fact *= (idx) as f64;
        }
        out -= w / fact;
    }
    Ok(out)
}

/// `φₖ(hS)(N) ≈ 1/(k−1)! Σⱼ ωⱼ sⱼ^{k−1} e^{(1−sⱼ)hS}(N)`, `k ≥ 1`.
pub fn phi_action_quadrature(
    k: usize,
    s: &SylvesterOperator,
    h: f64,
    n: &RealMatrix,
    rule: &QuadratureRule,
) -> Result<RealMatrix> {
    if k == 0 {
        return Err(Error::Domain(
            "quadrature is only used for k ≥ 1; use the exponential action for φ₀".into(),
        ));
    }
    s.check_operand(n)?;
    let inv_fact = 1.0 / (1..k).map(|v| v as f64).product::<f64>();
    let mut out = RealMatrix::zeros(n.nrows(), n.ncols());
    for (&node, &w) in rule.nodes().iter().zip(rule.weights()) {
        let coeff = w * node.powi(k as i32 - 1) * inv_fact;
        if coeff == 0.0 {
            continue;
        }
        out += s.exp_action((1.0 - node) * h, n)? * coeff;
    }
    Ok(out)
}
