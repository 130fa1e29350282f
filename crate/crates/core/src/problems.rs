//! Benchmark problems: the 2-D convection–diffusion finite-difference
//! matrices, seeded random factors, and problem files on disk.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;

use crate::dense::io::{read_matrix_market, write_matrix_market};
use crate::dense::RealMatrix;
use crate::error::{Error, Result};
use crate::integrators::RiccatiProblem;

/// `Σ c·xⁱ·yʲ` over the stored terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly2 {
    terms: Vec<(f64, u32, u32)>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Adds the term `coeff·x^px·y^py`.
    pub fn term(mut self, coeff: f64, px: u32, py: u32) -> Self {
        self.terms.push((coeff, px, py));
        self
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, px, py)| c * x.powi(px as i32) * y.powi(py as i32))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.0 == 0.0)
    }
}

/// Discretization of `Δu − f₁·u_x − f₂·u_y − f₃·u` on the unit square with
/// homogeneous Dirichlet data and `k` interior points per side.
#[derive(Debug, Clone, PartialEq)]
pub struct Fdm2dSpec {
    pub k: usize,
    pub f1: Poly2,
    pub f2: Poly2,
    pub f3: Poly2,
}

impl Fdm2dSpec {
    /// `f₁ = f₂ = f₃ = 0`.
    pub fn symmetric(k: usize) -> Self {
        Self {
            k,
            f1: Poly2::zero(),
            f2: Poly2::zero(),
            f3: Poly2::zero(),
        }
    }

    /// `f₁ = 10x`, `f₂ = 100y`, `f₃ = 0`.
    pub fn nonsymmetric(k: usize) -> Self {
        Self {
            k,
            f1: Poly2::zero().term(10.0, 1, 0),
            f2: Poly2::zero().term(100.0, 0, 1),
            f3: Poly2::zero(),
        }
    }
}

/// Five-point Laplacian plus centred convection differences on the grid with
/// spacing `1/(k+1)`. Node `(ix, iy)` has index `iy·k + ix`.
pub fn fdm2d_matrix(spec: &Fdm2dSpec) -> Result<RealMatrix> {
    let k = spec.k;
    if k == 0 {
        return Err(Error::Domain("fdm2d needs at least one interior point per side".into()));
    }
    let n = k * k;
    let h = 1.0 / (k + 1) as f64;
    let inv_h2 = 1.0 / (h * h);
    let inv_2h = 1.0 / (2.0 * h);
    let mut a = RealMatrix::zeros(n, n);
    for iy in 0..k {
        for ix in 0..k {
            let row = iy * k + ix;
            let (x, y) = ((ix + 1) as f64 * h, (iy + 1) as f64 * h);
            let (f1, f2, f3) = (spec.f1.eval(x, y), spec.f2.eval(x, y), spec.f3.eval(x, y));
            a[(row, row)] = -4.0 * inv_h2 - f3;
            if ix > 0 {
                a[(row, row - 1)] = inv_h2 + f1 * inv_2h;
            }
            if ix + 1 < k {
                a[(row, row + 1)] = inv_h2 - f1 * inv_2h;
            }
            if iy > 0 {
                a[(row, row - k)] = inv_h2 + f2 * inv_2h;
            }
            if iy + 1 < k {
                a[(row, row + k)] = inv_h2 - f2 * inv_2h;
            }
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Uniform on `[0, 1)`.
    Uniform01,
    /// Standard normal.
    Normal01,
}

/// Seeded n×r random matrix. Xoshiro256** seeded through SplitMix64
/// (`seed_from_u64`), filled column by column.
pub fn random_lowrank(n: usize, r: usize, seed: u64, dist: Distribution) -> Result<RealMatrix> {
    if r > n {
        return Err(Error::Domain(format!("rank {r} exceeds dimension {n}")));
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut m = RealMatrix::zeros(n, r);
    for j in 0..r {
        for i in 0..n {
            m[(i, j)] = match dist {
                Distribution::Uniform01 => rng.random::<f64>(),
                Distribution::Normal01 => rng.sample(StandardNormal),
            };
        }
    }
    Ok(m)
}

/// Symmetric problem with `D = Aᵀ`, `Q = CᵀC` (`C` is l×n), `G = BBᵀ` and
/// `X₀ = L₀L₀ᵀ`.
pub fn build_symmetric_problem(
    a: RealMatrix,
    c: RealMatrix,
    b: RealMatrix,
    l0: RealMatrix,
) -> Result<RiccatiProblem> {
    let r = l0.ncols();
    RiccatiProblem::symmetric_from_factors(a, c, b, l0, RealMatrix::identity(r, r))
}

/// Reads `A.mtx`, `B.mtx`, `C.mtx` and the optional `L0.mtx`, `D0.mtx` from
/// `dir`. A missing `L0` means `X₀ = 0`; a missing `D0` means `D₀ = I`.
pub fn load_problem(dir: &Path) -> Result<RiccatiProblem> {
    let a = read_matrix_market(&dir.join("A.mtx"))?;
    let b = read_matrix_market(&dir.join("B.mtx"))?;
    let c = read_matrix_market(&dir.join("C.mtx"))?;
    let n = a.nrows();
    let l0_path = dir.join("L0.mtx");
    let l0 = if l0_path.exists() {
        read_matrix_market(&l0_path)?
    } else {
        RealMatrix::zeros(n, 0)
    };
    let d0_path = dir.join("D0.mtx");
    let d0 = if d0_path.exists() {
        read_matrix_market(&d0_path)?
    } else {
        RealMatrix::identity(l0.ncols(), l0.ncols())
    };
    RiccatiProblem::symmetric_from_factors(a, c, b, l0, d0)
}

/// Writes a symmetric problem in the layout read by [`load_problem`].
pub fn write_problem(dir: &Path, p: &RiccatiProblem) -> Result<()> {
    let data = p
        .lowrank()
        .ok_or_else(|| Error::Config("only problems with generators can be written".into()))?;
    std::fs::create_dir_all(dir)?;
    write_matrix_market(&dir.join("A.mtx"), p.a())?;
    write_matrix_market(&dir.join("B.mtx"), &data.b)?;
    write_matrix_market(&dir.join("C.mtx"), &data.c)?;
    write_matrix_market(&dir.join("L0.mtx"), &data.l0)?;
    write_matrix_market(&dir.join("D0.mtx"), &data.d0)?;
    Ok(())
}

/// A problem named by a short string, e.g. `fdm-sym:k=8`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    FdmSym { k: usize },
    FdmNonsym { k: usize },
    /// `x' = 1 − x²`, `x(0) = 0`, solution `tanh t`.
    ScalarTanh,
    Dir(PathBuf),
}

impl ProblemSpec {
    pub const NAMES: [&'static str; 4] = ["fdm-sym:k=<n>", "fdm-nonsym:k=<n>", "scalar-tanh", "dir:<path>"];

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let usage = || {
            Error::Config(format!(
                "unknown problem {s:?}; expected one of {}",
                Self::NAMES.join(", ")
            ))
        };
        match name {
            "scalar-tanh" if args.is_empty() => Ok(Self::ScalarTanh),
            "dir" if !args.is_empty() => Ok(Self::Dir(PathBuf::from(args))),
            "fdm-sym" | "fdm-nonsym" => {
                let k = args
                    .strip_prefix("k=")
                    .and_then(|v| v.parse::<usize>().ok())
                    .filter(|&k| k > 0)
                    .ok_or_else(usage)?;
                Ok(if name == "fdm-sym" {
                    Self::FdmSym { k }
                } else {
                    Self::FdmNonsym { k }
                })
            }
            _ => Err(usage()),
        }
    }

    /// Builds the problem. The fdm problems draw `C`, `B`, `L₀` (each with two
    /// columns before transposing `C`) uniformly from `[0, 1)` with seeds
    /// `seed`, `seed + 1`, `seed + 2`.
    pub fn build(&self, seed: u64) -> Result<RiccatiProblem> {
        match self {
            Self::ScalarTanh => {
                let s = |v| RealMatrix::from_element(1, 1, v);
                RiccatiProblem::new(s(0.0), s(0.0), s(1.0), s(1.0), s(0.0))
            }
            Self::Dir(path) => load_problem(path),
            Self::FdmSym { k } | Self::FdmNonsym { k } => {
                let spec = if matches!(self, Self::FdmSym { .. }) {
                    Fdm2dSpec::symmetric(*k)
                } else {
                    Fdm2dSpec::nonsymmetric(*k)
                };
                let a = fdm2d_matrix(&spec)?;
                let n = k * k;
                let width = 2.min(n);
                let c = random_lowrank(n, width, seed, Distribution::Uniform01)?.transpose();
                let b = random_lowrank(n, width, seed.wrapping_add(1), Distribution::Uniform01)?;
                let l0 = random_lowrank(n, width, seed.wrapping_add(2), Distribution::Uniform01)?;
                build_symmetric_problem(a, c, b, l0)
            }
        }
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FdmSym { k } => write!(f, "fdm-sym:k={k}"),
            Self::FdmNonsym { k } => write!(f, "fdm-nonsym:k={k}"),
            Self::ScalarTanh => write!(f, "scalar-tanh"),
            Self::Dir(p) => write!(f, "dir:{}", p.display()),
        }
    }
}
