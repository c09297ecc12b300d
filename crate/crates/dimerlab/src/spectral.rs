//! Closed-form matching counts through transverse-mode products.
//!
//! A dimer cover of an M x N grid factorizes over N transverse modes
//! x_q = cos(pi q / (N+1)); each mode contributes the weight
//! W_M(x) = |U_M(i x)| built from the Chebyshev polynomial of the second
//! kind at imaginary argument. Monomer-pair counts on the left and right
//! edge columns reduce to a signed sum over the same mode weights. Counts
//! come out as reals that must round to integers within a certified gap.

use num_bigint::BigUint;

use crate::hp::{HpReal, DEFAULT_PRECISION};
use crate::oracle::GridSpec;
use crate::{Error, Result};

/// Certified rounding threshold: a count is accepted when the computed real
/// sits within 2^-32 of an integer.
pub const ROUNDING_GAP_LOG2: i64 = -32;

/// One transverse mode of the strip.
#[derive(Clone, Debug)]
pub struct ModeWeight {
    pub q: u32,
    /// cos(pi q / (N+1))
    pub x_q: HpReal,
    /// W_M(x_q)
    pub weight: HpReal,
}

/// Edge-column monomer-pair count relative to the full partition sum.
#[derive(Clone, Debug)]
pub struct MonomerRatio {
    /// |Q_{n1,n2}| / Q_0, nonnegative.
    pub ratio: HpReal,
    /// The signed mode sum before the absolute value; kept for diagnostics.
    pub signed_bracket: HpReal,
}

/// Discrete hook-up data derived from edge-column monomer ratios.
#[derive(Clone, Debug)]
pub struct PartitionRatios {
    /// |Q_{1,1}| / Q_0
    pub r_11: HpReal,
    /// |Q_{1,N}| / Q_0
    pub r_1n: HpReal,
    /// r_11^2: relative weight of all path configurations
    pub z: HpReal,
    /// r_1n^2: relative weight of vertically inline path configurations
    pub z_i: HpReal,
    /// hook-up probability (z - z_i) / (z + z_i)
    pub p: HpReal,
}

/// Result of a certified product evaluation.
#[derive(Clone, Debug)]
pub struct Q0Eval {
    pub count: BigUint,
    pub rounding_gap: HpReal,
    pub precision: usize,
}

fn w_recurrence(m: u32, x: &HpReal) -> HpReal {
    // W_0 = 1, W_1 = 2x, W_{j+1} = 2x W_j + W_{j-1}
    let two_x = x.mul_u64(2);
    let mut prev = HpReal::one(x.prec());
    if m == 0 {
        return prev;
    }
    let mut cur = two_x.clone();
    for _ in 1..m {
        let next = two_x.mul(&cur).add(&prev);
        prev = cur;
        cur = next;
    }
    cur
}

fn w_closed(m: u32, x: &HpReal) -> HpReal {
    // With t = asinh(x): even m gives cosh((m+1)t)/cosh(t),
    // odd m gives sinh((m+1)t)/cosh(t).
    let t = x.asinh();
    let num = if m % 2 == 0 {
        t.mul_u64(m as u64 + 1).cosh()
    } else {
        t.mul_u64(m as u64 + 1).sinh()
    };
    num.div(&t.cosh())
}

/// |U_m(i x)| for x >= 0: the weight a length-m strip assigns to one
/// transverse mode. Uses the three-term recurrence for moderate arguments
/// and the hyperbolic closed form once (m+1)*asinh(x) grows large.
pub fn chebyshev_u_imag(m: u32, x: &HpReal) -> Result<HpReal> {
    if x.is_negative() {
        return Err(Error::Domain("mode argument must be nonnegative".into()));
    }
    let t_approx = x.to_f64().asinh();
    if (m as f64 + 1.0) * t_approx <= 300.0 {
        Ok(w_recurrence(m, x))
    } else {
        Ok(w_closed(m, x))
    }
}

/// Orients the grid so the even side runs horizontally (counts are
/// transpose-invariant).
fn oriented(grid: &GridSpec) -> Result<(u32, u32)> {
    if grid.width % 2 == 0 {
        Ok((grid.width, grid.height))
    } else if grid.height % 2 == 0 {
        Ok((grid.height, grid.width))
    } else {
        Err(Error::Domain(
            "mode product needs at least one even dimension".into(),
        ))
    }
}

/// The transverse modes of the oriented grid: q = 1 ..= floor(N/2).
pub fn strip_modes(grid: &GridSpec, prec: usize) -> Result<Vec<ModeWeight>> {
    let (m_len, n_len) = oriented(grid)?;
    let pi = HpReal::pi(prec);
    let mut modes = Vec::new();
    for q in 1..=(n_len / 2) {
        let x_q = pi.mul_u64(q as u64).div_u64(n_len as u64 + 1).cos();
        let weight = chebyshev_u_imag(m_len, &x_q)?;
        modes.push(ModeWeight { q, x_q, weight });
    }
    Ok(modes)
}

/// The full matching count as a real: product of all mode weights.
fn q0_real(grid: &GridSpec, prec: usize) -> Result<HpReal> {
    let mut acc = HpReal::one(prec);
    for mode in strip_modes(grid, prec)? {
        acc = acc.mul(&mode.weight);
    }
    Ok(acc)
}

fn certify_count(value: &HpReal, prec: usize) -> Result<(BigUint, HpReal)> {
    let (int, gap) = value.nearest_int();
    if !gap.abs_le_pow2(ROUNDING_GAP_LOG2) {
        return Err(Error::PrecisionInsufficient {
            gap_log2: gap.log2_magnitude().unwrap_or(i64::MIN),
            precision: prec,
        });
    }
    let mag = int
        .to_biguint()
        .ok_or_else(|| Error::Domain("count rounded to a negative integer".into()))?;
    Ok((mag, gap))
}

/// Evaluates the mode product at a fixed precision and rounds it to an
/// integer with a certified gap.
pub fn q0_partition_at(grid: &GridSpec, prec: usize) -> Result<Q0Eval> {
    let value = q0_real(grid, prec)?;
    let (count, rounding_gap) = certify_count(&value, prec)?;
    Ok(Q0Eval {
        count,
        rounding_gap,
        precision: prec,
    })
}

/// Doubles the working precision on certification failure, up to 4 retries.
fn escalate<T>(start: usize, f: impl Fn(usize) -> Result<T>) -> Result<T> {
    let mut prec = start.max(64);
    let mut attempt = 0;
    loop {
        match f(prec) {
            Err(Error::PrecisionInsufficient { gap_log2, precision }) if attempt < 4 => {
                let _ = (gap_log2, precision);
                attempt += 1;
                prec *= 2;
            }
            other => return other,
        }
    }
}

/// Total matching count by mode product, with automatic precision escalation.
pub fn q0_partition(grid: &GridSpec) -> Result<BigUint> {
    escalate(DEFAULT_PRECISION, |p| {
        q0_partition_at(grid, p).map(|e| e.count)
    })
}

/// Ratio |Q_{n1,n2}| / Q_0 for monomers at (1, n1) and (M, n2).
///
/// Requires even width, odd height, and n1 = n2 (mod 2); opposite parities
/// are unmatched by color balance and rejected.
pub fn monomer_ratio(grid: &GridSpec, n1: u32, n2: u32, prec: usize) -> Result<MonomerRatio> {
    let (w, h) = (grid.width, grid.height);
    if w % 2 != 0 || h % 2 != 1 {
        return Err(Error::Domain(format!(
            "edge-column monomer ratio needs even width and odd height, got {w}x{h}"
        )));
    }
    if !(1..=h).contains(&n1) || !(1..=h).contains(&n2) {
        return Err(Error::Domain(format!(
            "monomer rows ({n1},{n2}) outside 1..={h}"
        )));
    }
    if n1 % 2 != n2 % 2 {
        return Err(Error::ParityViolation(format!(
            "monomer rows ({n1},{n2}) have opposite parity"
        )));
    }
    let pi = HpReal::pi(prec);
    let n_plus_1 = h as u64 + 1;
    // sin(pi k / (N+1)) with k reduced mod 2(N+1) to keep arguments small
    let edge_sin = |row_product: u64| -> HpReal {
        let k = row_product % (2 * n_plus_1);
        pi.mul_u64(k).div_u64(n_plus_1).sin()
    };
    let mut sum = HpReal::zero(prec);
    for mode in strip_modes(grid, prec)? {
        let q = mode.q as u64;
        let term = edge_sin(q * n1 as u64)
            .mul(&edge_sin(q * n2 as u64))
            .mul_u64(2)
            .div(&mode.weight);
        sum = sum.add(&term);
    }
    let negate = (n1 + n2) / 2 % 2 == 1;
    let signed_sum = if negate { sum.neg() } else { sum };
    // The self-paired middle mode q = (N+1)/2 couples through
    // sin(pi n/2), so it contributes only when the rows are odd.
    let signed_bracket = if n1 % 2 == 1 {
        signed_sum.sub(&HpReal::one(prec))
    } else {
        signed_sum
    };
    let ratio = signed_bracket.abs().mul_u64(2).div_u64(n_plus_1);
    Ok(MonomerRatio {
        ratio,
        signed_bracket,
    })
}

/// Certified integer count of matchings with monomers at (1, n1) and (M, n2).
pub fn monomer_count(grid: &GridSpec, n1: u32, n2: u32) -> Result<BigUint> {
    escalate(DEFAULT_PRECISION, |p| {
        let q0 = q0_real(grid, p)?;
        let r = monomer_ratio(grid, n1, n2, p)?;
        let (count, _) = certify_count(&r.ratio.mul(&q0), p)?;
        Ok(count)
    })
}

/// Hook-up probability of the four-corner-monomer geometry from the two
/// edge-column ratios.
pub fn hookup_discrete(grid: &GridSpec, prec: usize) -> Result<PartitionRatios> {
    let (w, h) = (grid.width, grid.height);
    if w < 2 || w % 2 != 0 || h < 3 || h % 2 != 1 {
        return Err(Error::Domain(format!(
            "hook-up geometry needs even width >= 2 and odd height >= 3, got {w}x{h}"
        )));
    }
    let r_11 = monomer_ratio(grid, 1, 1, prec)?.ratio;
    let r_1n = monomer_ratio(grid, 1, h, prec)?.ratio;
    let z = r_11.square();
    let z_i = r_1n.square();
    let p = z.sub(&z_i).div(&z.add(&z_i));
    Ok(PartitionRatios { r_11, r_1n, z, z_i, p })
}
