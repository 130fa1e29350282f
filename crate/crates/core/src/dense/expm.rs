//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 and 13 (Higham 2005).

use super::{ensure_finite, ensure_square, norm1, RealMatrix};
use crate::error::Result;

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Computes `e^A` for a square matrix.
pub fn expm(a: &RealMatrix) -> Result<RealMatrix> {
    ensure_square(a, "expm argument")?;
    ensure_finite(a, "expm argument")?;
    let n = a.nrows();
    if n == 0 {
        return Ok(RealMatrix::zeros(0, 0));
    }
    if n == 1 {
        return Ok(RealMatrix::from_element(1, 1, a[(0, 0)].exp()));
    }

    let norm = norm1(a);
    let ident = RealMatrix::identity(n, n);
    let a2 = a * a;

    for &(m, theta) in &THETA {
        if norm <= theta {
            let (u, v) = match m {
                3 => odd_even(a, &a2, &ident, &B3),
                5 => odd_even(a, &a2, &ident, &B5),
                7 => odd_even(a, &a2, &ident, &B7),
                _ => odd_even(a, &a2, &ident, &B9),
            };
            return pade_quotient(&u, &v);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a = a * scale;
    let a2 = a2 * (scale * scale);
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let b = &B13;

    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    let mut r = pade_quotient(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Odd (`u`) and even (`v`) parts of the degree-`m` Padé numerator, `m ≤ 9`.
fn odd_even(
    a: &RealMatrix,
    a2: &RealMatrix,
    ident: &RealMatrix,
    b: &[f64],
) -> (RealMatrix, RealMatrix) {
    let m = b.len() - 1;
    let mut pow = ident.clone();
    let mut odd = ident * b[1];
    let mut even = ident * b[0];
    for k in 1..=m / 2 {
        pow = &pow * a2;
        odd += &pow * b[2 * k + 1];
        even += &pow * b[2 * k];
    }
    (a * odd, even)
}

fn pade_quotient(u: &RealMatrix, v: &RealMatrix) -> Result<RealMatrix> {
    let denom = v - u;
    let numer = v + u;
    let r = denom.lu().solve(&numer).ok_or_else(|| {
        crate::Error::Domain("singular Padé denominator in expm".into())
    })?;
    ensure_finite(&r, "expm result")?;
    Ok(r)
}
