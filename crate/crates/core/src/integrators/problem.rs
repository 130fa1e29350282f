use crate::dense::{asymmetry, ensure_finite, ensure_square, RealMatrix};
use crate::error::{Error, Result};

/// Generators of the symmetric problem: `Q = CᵀC`, `G = BBᵀ`, `X₀ = L₀D₀L₀ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankData {
    /// l×n
    pub c: RealMatrix,
    /// n×q
    pub b: RealMatrix,
    /// n×r
    pub l0: RealMatrix,
    /// r×r
    pub d0: RealMatrix,
}

/// `X' = A·X + X·D + Q − X·G·X`, `X(0) = X₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiProblem {
    a: RealMatrix,
    d: RealMatrix,
    q: RealMatrix,
    g: RealMatrix,
    x0: RealMatrix,
    lowrank: Option<LowRankData>,
}

impl RiccatiProblem {
    /// General problem: `A` M×M, `D` N×N, `Q` M×N, `G` N×M, `X₀` M×N.
    pub fn new(
        a: RealMatrix,
        d: RealMatrix,
        q: RealMatrix,
        g: RealMatrix,
        x0: RealMatrix,
    ) -> Result<Self> {
        ensure_square(&a, "A")?;
        ensure_square(&d, "D")?;
        let (m, n) = (a.nrows(), d.nrows());
        for (mat, name, shape) in [(&q, "Q", (m, n)), (&g, "G", (n, m)), (&x0, "X0", (m, n))] {
            if mat.shape() != shape {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {}x{}",
                    mat.nrows(),
                    mat.ncols(),
                    shape.0,
                    shape.1
                )));
            }
        }
        for (mat, name) in [(&a, "A"), (&d, "D"), (&q, "Q"), (&g, "G"), (&x0, "X0")] {
            ensure_finite(mat, name)?;
        }
        Ok(Self {
            a,
            d,
            q,
            g,
            x0,
            lowrank: None,
        })
    }

    /// Symmetric problem with `D = Aᵀ`, `Q = CᵀC`, `G = BBᵀ`, `X₀ = L₀D₀L₀ᵀ`.
    pub fn symmetric_from_factors(
        a: RealMatrix,
        c: RealMatrix,
        b: RealMatrix,
        l0: RealMatrix,
        d0: RealMatrix,
    ) -> Result<Self> {
        ensure_square(&a, "A")?;
        let n = a.nrows();
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} columns, expected {n}", c.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if l0.nrows() != n {
            return Err(Error::Dimension(format!("L0 has {} rows, expected {n}", l0.nrows())));
        }
        if d0.shape() != (l0.ncols(), l0.ncols()) {
            return Err(Error::Dimension(format!(
                "D0 is {}x{}, L0 has {} columns",
                d0.nrows(),
                d0.ncols(),
                l0.ncols()
            )));
        }
        if asymmetry(&d0) > 1e-12 {
            return Err(Error::Domain("D0 must be symmetric".into()));
        }
        let q = c.transpose() * &c;
        let g = &b * b.transpose();
        let x0 = &l0 * &d0 * l0.transpose();
        let mut p = Self::new(a.clone(), a.transpose(), q, g, x0)?;
        p.lowrank = Some(LowRankData { c, b, l0, d0 });
        Ok(p)
    }

    pub fn a(&self) -> &RealMatrix {
        &self.a
    }

    pub fn d(&self) -> &RealMatrix {
        &self.d
    }

    pub fn q(&self) -> &RealMatrix {
        &self.q
    }

    pub fn g(&self) -> &RealMatrix {
        &self.g
    }

    pub fn x0(&self) -> &RealMatrix {
        &self.x0
    }

    pub fn lowrank(&self) -> Option<&LowRankData> {
        self.lowrank.as_ref()
    }

    pub fn is_symmetric(&self) -> bool {
        self.lowrank.is_some()
    }

    /// `(M, N)`, the shape of the solution.
    pub fn shape(&self) -> (usize, usize) {
        (self.a.nrows(), self.d.nrows())
    }

    /// Same coefficients, new initial value. Low-rank generators are dropped
    /// unless `x0` is given as a factor through [`Self::with_initial_factor`].
    pub fn with_initial(&self, x0: RealMatrix) -> Result<Self> {
        self.check_state(&x0)?;
        Ok(Self {
            x0,
            lowrank: None,
            ..self.clone()
        })
    }

    pub fn with_initial_factor(&self, l0: RealMatrix, d0: RealMatrix) -> Result<Self> {
        let data = self.lowrank.as_ref().ok_or_else(|| {
            Error::Config("initial factor given for a problem without generators".into())
        })?;
        Self::symmetric_from_factors(self.a.clone(), data.c.clone(), data.b.clone(), l0, d0)
    }

    pub fn check_state(&self, x: &RealMatrix) -> Result<()> {
        if x.shape() != self.shape() {
            return Err(Error::Dimension(format!(
                "state is {}x{}, problem is {}x{}",
                x.nrows(),
                x.ncols(),
                self.a.nrows(),
                self.d.nrows()
            )));
        }
        Ok(())
    }

    /// `F(X) = A·X + X·D + Q − X·G·X`.
    pub fn rhs(&self, x: &RealMatrix) -> Result<RealMatrix> {
        self.check_state(x)?;
        Ok(&self.a * x + x * &self.d + &self.q - x * &self.g * x)
    }
}
