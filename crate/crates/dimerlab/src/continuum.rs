//! Continuum limit of the hook-up probability.
//!
//! On a strip of aspect ratio L the scaled partition weights become rapidly
//! convergent hyperbolic series, and their ratios close in terms of complete
//! elliptic integrals through the modulus k attached to L by
//! K'(k)/K(k) = 2L. This module evaluates both routes plus a theta-style
//! ratio built from the reciprocal aspect ratio, together with the identity
//! suite (Poisson-type pair sums, a residue-pairing identity, Landen steps,
//! sinh moment sums) that certifies them against each other.
//!
//! Every series truncation is certified twice: the next term and a rigorous
//! geometric tail bound must both drop below the requested relative epsilon.

use crate::hp::HpReal;
use crate::{Error, Result};

/// Truncation control for all series in this module.
#[derive(Clone, Debug)]
pub struct TruncationPolicy {
    /// Relative tail tolerance: summation stops once the next term and the
    /// tail bound both fall below epsilon * |partial sum|.
    pub epsilon: HpReal,
    pub max_terms: usize,
}

impl TruncationPolicy {
    pub fn new(epsilon: HpReal, max_terms: usize) -> Self {
        TruncationPolicy { epsilon, max_terms }
    }

    /// 1e-30 relative, 100000 terms.
    pub fn default_at(prec: usize) -> Self {
        TruncationPolicy {
            epsilon: HpReal::pow10(-30, prec),
            max_terms: 100_000,
        }
    }
}

/// Arguments beyond this make every term underflow any representable scale;
/// the series is then exactly zero at working precision.
const EXP_ARG_CUTOFF: f64 = 1.0e8;

/// Sums `term(k)` for k = 1, 2, ... with certified stopping: the last term
/// and `tail(k)` (a rigorous upper bound on the remaining |tail|) must both
/// fall below epsilon times the partial sum.
fn sum_certified(
    prec: usize,
    policy: &TruncationPolicy,
    mut term: impl FnMut(u64) -> HpReal,
    mut tail: impl FnMut(u64) -> HpReal,
) -> Result<HpReal> {
    let mut partial = HpReal::zero(prec);
    for k in 1..=policy.max_terms as u64 {
        let t = term(k);
        partial = partial.add(&t);
        let bound = tail(k);
        if t.is_zero() && bound.is_zero() {
            return Ok(partial);
        }
        let scale = partial.abs();
        if scale.is_zero() {
            continue;
        }
        let thresh = policy.epsilon.mul(&scale);
        if t.abs().le(&thresh) && bound.le(&thresh) {
            return Ok(partial);
        }
    }
    Err(Error::ConvergenceFailure {
        terms: policy.max_terms,
    })
}

/// Running power p^k fed with consecutive k.
struct PowTrack {
    p: HpReal,
    cur: HpReal,
    next_k: u64,
}

impl PowTrack {
    fn new(p: HpReal, prec: usize) -> Self {
        PowTrack {
            p,
            cur: HpReal::one(prec),
            next_k: 0,
        }
    }

    fn at(&mut self, k: u64) -> HpReal {
        assert!(k >= self.next_k, "powers must be queried in order");
        while self.next_k < k {
            self.cur = self.cur.mul(&self.p);
            self.next_k += 1;
        }
        self.cur.clone()
    }
}

/// Shared precomputation for series in the variable c > 0: growth factor
/// e^c and decay factor r = e^-c with running powers.
struct HyperBasis {
    grow: PowTrack,
    decay: PowTrack,
    r: HpReal,
}

impl HyperBasis {
    fn new(c: &HpReal, prec: usize) -> Result<Self> {
        if c.sign() <= 0 {
            return Err(Error::Domain("series argument must be positive".into()));
        }
        if c.to_f64() > EXP_ARG_CUTOFF {
            // flag value: callers check `underflows` first
            return Ok(HyperBasis {
                grow: PowTrack::new(HpReal::one(prec), prec),
                decay: PowTrack::new(HpReal::zero(prec), prec),
                r: HpReal::zero(prec),
            });
        }
        let p = c.with_prec(prec).exp();
        let r = p.recip();
        Ok(HyperBasis {
            grow: PowTrack::new(p, prec),
            decay: PowTrack::new(r.clone(), prec),
            r,
        })
    }

    fn underflows(&self) -> bool {
        self.r.is_zero()
    }

    /// cosh(c k)
    fn cosh_k(&mut self, k: u64) -> HpReal {
        self.grow.at(k).add(&self.decay.at(k)).half()
    }

    /// sinh(c k)
    fn sinh_k(&mut self, k: u64) -> HpReal {
        self.grow.at(k).sub(&self.decay.at(k)).half()
    }
}

/// r^(k+1) / (1 - r): bounds sum_{j>k} r^j.
struct GeomTail {
    rp: PowTrack,
    inv_one_minus_r: HpReal,
}

impl GeomTail {
    fn new(r: &HpReal, prec: usize) -> Self {
        let one = HpReal::one(prec);
        let inv = if r.is_zero() {
            one.clone()
        } else {
            one.div(&one.sub(r))
        };
        GeomTail {
            rp: PowTrack::new(r.clone(), prec),
            inv_one_minus_r: inv,
        }
    }

    fn after(&mut self, k: u64) -> HpReal {
        self.rp.at(k + 1).mul(&self.inv_one_minus_r)
    }
}

/// r^(k+1) ((k+1) - k r) / (1-r)^2: the exact value of sum_{j>k} j r^j.
struct WeightedGeomTail {
    rp: PowTrack,
    r: HpReal,
    inv_sq: HpReal,
    prec: usize,
}

impl WeightedGeomTail {
    fn new(r: &HpReal, prec: usize) -> Self {
        let one = HpReal::one(prec);
        let inv = if r.is_zero() {
            one.clone()
        } else {
            let d = one.sub(r);
            one.div(&d).square()
        };
        WeightedGeomTail {
            rp: PowTrack::new(r.clone(), prec),
            r: r.clone(),
            inv_sq: inv,
            prec,
        }
    }

    fn after(&mut self, k: u64) -> HpReal {
        let kp1 = HpReal::from_u64(k + 1, self.prec);
        let kk = HpReal::from_u64(k, self.prec);
        self.rp
            .at(k + 1)
            .mul(&kp1.sub(&kk.mul(&self.r)))
            .mul(&self.inv_sq)
    }
}

/// sum_{k>=1} a_k / cosh(c k) with a_k = 2 (plain) or 2 (-1)^(k+1)
/// (alternating). Tail: 1/cosh(x) <= 2 e^-x.
fn sum_inv_cosh(
    c: &HpReal,
    alternating: bool,
    prec: usize,
    policy: &TruncationPolicy,
) -> Result<HpReal> {
    let mut basis = HyperBasis::new(c, prec)?;
    if basis.underflows() {
        return Ok(HpReal::zero(prec));
    }
    let mut tail = GeomTail::new(&basis.r.clone(), prec);
    sum_certified(
        prec,
        policy,
        |k| {
            let t = HpReal::from_u64(2, prec).div(&basis.cosh_k(k));
            if alternating && k % 2 == 0 {
                t.neg()
            } else {
                t
            }
        },
        |k| tail.after(k).mul_u64(4),
    )
}

/// sum_{k>=1} 4 / cosh(c (2k-1)). Tail over odd j > 2k-1.
fn sum_inv_cosh_odd(c: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    let mut basis = HyperBasis::new(c, prec)?;
    if basis.underflows() {
        return Ok(HpReal::zero(prec));
    }
    let r = basis.r.clone();
    let mut rp = PowTrack::new(r.clone(), prec);
    let one = HpReal::one(prec);
    let inv_one_minus_r2 = one.div(&one.sub(&r.square()));
    sum_certified(
        prec,
        policy,
        |k| HpReal::from_u64(4, prec).div(&basis.cosh_k(2 * k - 1)),
        // sum_{odd j >= 2k+1} 8 e^{-cj} = 8 r^{2k+1} / (1 - r^2)
        |k| rp.at(2 * k + 1).mul(&inv_one_minus_r2).mul_u64(8),
    )
}

/// sum_{k>=1} 4 / cosh(2 c k).
fn sum_inv_cosh_even(c: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    sum_inv_cosh(&c.mul_u64(2), false, prec, policy).map(|s| s.mul_u64(2))
}

/// sum_{k>=1} 4 (-1)^k k / sinh(c k).
/// Tail: 1/sinh(jc) <= 2 e^{-jc}/(1-e^{-2c}) for j >= 1.
fn sum_alt_k_inv_sinh(c: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    let mut basis = HyperBasis::new(c, prec)?;
    if basis.underflows() {
        return Ok(HpReal::zero(prec));
    }
    let r = basis.r.clone();
    let one = HpReal::one(prec);
    let coeff = HpReal::from_u64(8, prec).div(&one.sub(&r.square()));
    let mut wt = WeightedGeomTail::new(&r, prec);
    sum_certified(
        prec,
        policy,
        |k| {
            let t = HpReal::from_u64(4 * k, prec).div(&basis.sinh_k(k));
            if k % 2 == 1 {
                t.neg()
            } else {
                t
            }
        },
        |k| wt.after(k).mul(&coeff),
    )
}

/// sum_{k>=1} 4 / (1 + cosh(2 c k)). Tail: 1/(1+cosh x) <= 2 e^-x.
fn sum_inv_one_plus_cosh(c: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    let c2 = c.mul_u64(2);
    let mut basis = HyperBasis::new(&c2, prec)?;
    if basis.underflows() {
        return Ok(HpReal::zero(prec));
    }
    let one = HpReal::one(prec);
    let mut tail = GeomTail::new(&basis.r.clone(), prec);
    sum_certified(
        prec,
        policy,
        |k| HpReal::from_u64(4, prec).div(&one.add(&basis.cosh_k(k))),
        |k| tail.after(k).mul_u64(8),
    )
}

/// sum_{k>=1} 8 (2k-1) / sinh(c (2k-1)).
fn sum_odd_inv_sinh(c: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    let mut basis = HyperBasis::new(c, prec)?;
    if basis.underflows() {
        return Ok(HpReal::zero(prec));
    }
    let r = basis.r.clone();
    let one = HpReal::one(prec);
    let coeff = HpReal::from_u64(16, prec).div(&one.sub(&r.square()));
    let mut wt = WeightedGeomTail::new(&r, prec);
    sum_certified(
        prec,
        policy,
        |k| HpReal::from_u64(8 * (2 * k - 1), prec).div(&basis.sinh_k(2 * k - 1)),
        // crude but valid: extend the weighted tail over all j > 2k-1
        |k| wt.after(2 * k - 1).mul(&coeff),
    )
}

/// sum_{k>=1} k / sinh(c k), optionally alternating with sign (-1)^(k-1).
fn sum_k_inv_sinh(
    c: &HpReal,
    alternating: bool,
    prec: usize,
    policy: &TruncationPolicy,
) -> Result<HpReal> {
    let mut basis = HyperBasis::new(c, prec)?;
    if basis.underflows() {
        return Ok(HpReal::zero(prec));
    }
    let r = basis.r.clone();
    let one = HpReal::one(prec);
    let coeff = HpReal::from_u64(2, prec).div(&one.sub(&r.square()));
    let mut wt = WeightedGeomTail::new(&r, prec);
    sum_certified(
        prec,
        policy,
        |k| {
            let t = HpReal::from_u64(k, prec).div(&basis.sinh_k(k));
            if alternating && k % 2 == 0 {
                t.neg()
            } else {
                t
            }
        },
        |k| wt.after(k).mul(&coeff),
    )
}

fn pi_times(l: &HpReal, prec: usize) -> HpReal {
    HpReal::pi(prec).mul(&l.with_prec(prec))
}

/// Scaled symmetric partition weight:
/// Z(L) = 4L (sum_{k>=1} 2/cosh(pi L k) + 1)^2.
pub fn series_z(l: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    let c = pi_times(l, prec);
    let s = sum_inv_cosh(&c, false, prec, policy)?;
    let one = HpReal::one(prec);
    Ok(l.with_prec(prec).mul_u64(4).mul(&s.add(&one).square()))
}

/// Scaled vertically-inline weight:
/// Z_I(L) = 4L (sum_{k>=1} 2(-1)^(k+1)/cosh(pi L k) - 1)^2.
pub fn series_z_i(l: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    let c = pi_times(l, prec);
    let s = sum_inv_cosh(&c, true, prec, policy)?;
    let one = HpReal::one(prec);
    Ok(l.with_prec(prec).mul_u64(4).mul(&s.sub(&one).square()))
}

/// Alternate closed rearrangement of Z_I(L):
/// 4L (sum 4(-1)^k k/sinh(pi L k) + sum 4/(1+cosh(2 pi L k)) + 1).
pub fn series_z_i_alt(l: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    let c = pi_times(l, prec);
    let s1 = sum_alt_k_inv_sinh(&c, prec, policy)?;
    let s2 = sum_inv_one_plus_cosh(&c, prec, policy)?;
    let one = HpReal::one(prec);
    Ok(l.with_prec(prec).mul_u64(4).mul(&s1.add(&s2).add(&one)))
}

/// Hook-up excess Y(L) = Z(L) - Z_I(L) in product form:
/// 4L (sum 4/cosh(pi L (2k-1))) (sum 4/cosh(2 pi L k) + 2).
pub fn series_y(l: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    let c = pi_times(l, prec);
    let odd = sum_inv_cosh_odd(&c, prec, policy)?;
    let even = sum_inv_cosh_even(&c, prec, policy)?;
    let two = HpReal::from_u64(2, prec);
    Ok(l.with_prec(prec).mul_u64(4).mul(&odd).mul(&even.add(&two)))
}

/// Alternate single-sum form of Y(L): 4L sum 8(2k-1)/sinh(pi L (2k-1)).
pub fn series_y_alt(l: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    let c = pi_times(l, prec);
    let s = sum_odd_inv_sinh(&c, prec, policy)?;
    Ok(l.with_prec(prec).mul_u64(4).mul(&s))
}

/// AGM(1, b) for 0 < b <= 1.
fn agm_unit(b: &HpReal, prec: usize) -> Result<HpReal> {
    if b.sign() <= 0 {
        return Err(Error::Domain("AGM endpoint must be positive".into()));
    }
    let wp = prec + 64;
    let mut a = HpReal::one(wp);
    let mut bb = b.with_prec(wp);
    for _ in 0..256 {
        let d = a.sub(&bb);
        if d.is_zero() || d.div(&a).abs_le_pow2(-(prec as i64 + 16)) {
            return Ok(a.with_prec(prec));
        }
        let am = a.add(&bb).half();
        let gm = a.mul(&bb).sqrt();
        a = am;
        bb = gm;
    }
    Err(Error::ConvergenceFailure { terms: 256 })
}

/// Complete elliptic integral K(k) for 0 <= k < 1.
pub fn elliptic_k(k: &HpReal, prec: usize) -> Result<HpReal> {
    let one = HpReal::one(prec + 64);
    if k.is_negative() || k.ge(&one) {
        return Err(Error::Domain("modulus must lie in [0, 1)".into()));
    }
    // k^2 below the last representable bit: k' rounds to 1 exactly, and
    // squaring could leave the exponent range
    let kp = if k.abs_le_pow2(-(prec as i64 + 40)) {
        one.clone()
    } else {
        one.sub(&k.with_prec(prec + 64).square()).sqrt()
    };
    elliptic_k_from_complement(&kp, prec)
}

/// K(k) given the complementary modulus k' = sqrt(1 - k^2) directly; avoids
/// the cancellation in 1 - k^2 when k is close to 1 and k' is known exactly.
pub fn elliptic_k_from_complement(kp: &HpReal, prec: usize) -> Result<HpReal> {
    let agm = agm_unit(kp, prec + 32)?;
    Ok(HpReal::pi(prec).div(&agm).half().with_prec(prec))
}

/// Complete elliptic integral E(k) for 0 <= k < 1, by the AGM descent with
/// accumulated squared gaps.
pub fn elliptic_e(k: &HpReal, prec: usize) -> Result<HpReal> {
    let wp = prec + 64;
    let one = HpReal::one(wp);
    if k.is_negative() || k.ge(&one) {
        return Err(Error::Domain("modulus must lie in [0, 1)".into()));
    }
    let kk = k.with_prec(wp);
    let mut a = one.clone();
    let mut b = one.sub(&kk.square()).sqrt();
    let mut c = kk;
    let mut acc = HpReal::zero(wp);
    let mut pow2 = HpReal::one(wp).half(); // 2^(n-1) at n = 0
    for _ in 0..256 {
        acc = acc.add(&pow2.mul(&c.square()));
        let d = a.sub(&b);
        if d.is_zero() || (!a.is_zero() && d.div(&a).abs_le_pow2(-(prec as i64 + 16))) {
            let big_k = HpReal::pi(wp).div(&a).half();
            let e = big_k.mul(&HpReal::one(wp).sub(&acc));
            return Ok(e.with_prec(prec));
        }
        let am = a.add(&b).half();
        let gm = a.mul(&b).sqrt();
        c = d.half();
        pow2 = pow2.mul_u64(2);
        a = am;
        b = gm;
    }
    Err(Error::ConvergenceFailure { terms: 256 })
}

/// xi(k) = K'(k)/K(k).
pub fn modulus_ratio_xi(k: &HpReal, prec: usize) -> Result<HpReal> {
    let one = HpReal::one(prec + 64);
    let kp = one.sub(&k.with_prec(prec + 64).square()).sqrt();
    let big_k = elliptic_k_from_complement(&kp, prec + 32)?;
    let big_kp = elliptic_k_from_complement(&k.with_prec(prec + 64), prec + 32)?;
    Ok(big_kp.div(&big_k).with_prec(prec))
}

/// Aspect ratio reached by a modulus: L = K'(k) / (2 K(k)).
pub fn l_from_k(k: &HpReal, prec: usize) -> Result<HpReal> {
    Ok(modulus_ratio_xi(k, prec)?.half())
}

/// One ascending Landen step: 2 sqrt(k) / (1 + k). Halves xi.
pub fn landen_ascend(k: &HpReal) -> HpReal {
    let one = HpReal::one(k.prec());
    k.sqrt().mul_u64(2).div(&one.add(k))
}

/// One descending Landen step in cancellation-free form:
/// (1 - k')/(1 + k') = k^2 / (1 + k')^2. Doubles xi.
pub fn landen_descend(k: &HpReal) -> HpReal {
    let prec = k.prec();
    if k.is_zero() {
        return HpReal::zero(prec);
    }
    // squaring a modulus this small would leave the representable exponent
    // range; the true value is below any expressible scale
    if k.abs_le_pow2(-(1 << 29)) {
        return HpReal::zero(prec);
    }
    let one = HpReal::one(prec);
    let kp = one.sub(&k.square()).sqrt();
    k.square().div(&one.add(&kp).square())
}

/// Landen transformation consistency at one modulus: xi halves under the
/// ascending step and doubles under the descending step.
#[derive(Clone, Debug)]
pub struct LandenCheck {
    pub xi: HpReal,
    pub dev_ascend: HpReal,
    pub dev_descend: HpReal,
    pub max_rel_dev: HpReal,
}

pub fn landen_check(k: &HpReal, prec: usize) -> Result<LandenCheck> {
    let xi = modulus_ratio_xi(k, prec)?;
    let xi_up = modulus_ratio_xi(&landen_ascend(&k.with_prec(prec + 64)), prec)?;
    let xi_dn = modulus_ratio_xi(&landen_descend(&k.with_prec(prec + 64)), prec)?;
    let dev_ascend = xi_up.sub(&xi.half()).div(&xi).abs();
    let dev_descend = xi_dn.sub(&xi.mul_u64(2)).div(&xi).abs();
    let max_rel_dev = dev_ascend.max_val(&dev_descend);
    Ok(LandenCheck {
        xi,
        dev_ascend,
        dev_descend,
        max_rel_dev,
    })
}

/// Which closed elliptic form of the hook-up excess to evaluate.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum YForm {
    /// Y(L) from the ascended modulus k1 = 2 sqrt(k)/(1+k):
    /// 16 k1^2 K(k1) K'(k1) / pi^2.
    Ascended,
    /// Y(L) from the modulus itself: 32 k K(k) K'(k) / pi^2.
    Plain,
    /// Y(1/L) from the dual modulus k2 = (1-k)/(1+k):
    /// 16 k2^2 K(k2) K'(k2) / pi^2.
    Dual,
}

/// Closed elliptic form of the hook-up excess, given the respective modulus
/// value.
pub fn y_closed(v: &HpReal, form: YForm, prec: usize) -> Result<HpReal> {
    let big_k = elliptic_k(v, prec + 32)?;
    let big_kp = elliptic_k_from_complement(&v.with_prec(prec + 64), prec + 32)?;
    let pi_sq = HpReal::pi(prec + 32).square();
    let kkp = big_k.mul(&big_kp).div(&pi_sq);
    let out = match form {
        YForm::Ascended | YForm::Dual => v.with_prec(prec + 32).square().mul_u64(16).mul(&kkp),
        YForm::Plain => v.with_prec(prec + 32).mul_u64(32).mul(&kkp),
    };
    Ok(out.with_prec(prec))
}

/// Y(1/L) written directly in the base modulus: 8 (1-k)^2 K(k) K'(k) / pi^2.
/// Stable for small k, i.e. large L.
pub fn y_dual_from_base(k: &HpReal, prec: usize) -> Result<HpReal> {
    let one = HpReal::one(prec + 64);
    let big_k = elliptic_k(k, prec + 32)?;
    let big_kp = elliptic_k_from_complement(&k.with_prec(prec + 64), prec + 32)?;
    let pi_sq = HpReal::pi(prec + 32).square();
    Ok(one
        .sub(&k.with_prec(prec + 64))
        .square()
        .mul_u64(8)
        .mul(&big_k)
        .mul(&big_kp)
        .div(&pi_sq)
        .with_prec(prec))
}

/// The modulus family attached to one aspect ratio.
#[derive(Clone, Debug)]
pub struct Modulus {
    /// base modulus: K'(k)/K(k) = 2L
    pub k: HpReal,
    /// complementary modulus sqrt(1 - k^2)
    pub k_prime: HpReal,
    /// ascended modulus 2 sqrt(k)/(1+k)
    pub k1: HpReal,
    /// dual modulus (1-k)/(1+k), the base modulus of 1/L
    pub k2: HpReal,
    /// cross-ratio x = k2^2; satisfies x(L) + x(1/L) = 1
    pub x: HpReal,
}

fn bisect_k(target_l: &HpReal, lo0: f64, hi0: f64, prec: usize) -> Result<HpReal> {
    let wp = prec + 64;
    let mut lo = HpReal::parse_decimal(&format!("{lo0}"), wp)?;
    let mut hi = HpReal::parse_decimal(&format!("{hi0}"), wp)?;
    // absolute tolerance on k: ~0.84 of the working decimal digits
    let tol_exp = -(((28 * prec + 99) / 100) as i64);
    let tol = HpReal::pow10(tol_exp, wp);
    let target = target_l.with_prec(wp);
    let max_iter = 8 * prec;
    for _ in 0..max_iter {
        if hi.sub(&lo).le(&tol) {
            return Ok(lo.add(&hi).half().with_prec(prec));
        }
        let mid = lo.add(&hi).half();
        // L(k) decreases in k
        if l_from_k(&mid, wp)?.gt(&target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::ConvergenceFailure { terms: max_iter })
}

/// k(L) for L >= 1 (the small-modulus side), with descending Landen range
/// reduction so bisection never has to resolve sub-tolerance moduli.
fn k_small_side(l: &HpReal, prec: usize) -> Result<HpReal> {
    let twenty = HpReal::from_u64(20, prec);
    if l.le(&twenty) {
        return bisect_k(l, 0.0, 0.2, prec);
    }
    // halve L until it lands in (8, 16], then descend back
    let steps = (l.log2_magnitude().unwrap_or(5) - 4).max(1) as u32;
    let reduced = l.div(&HpReal::from_bigint(&(num_bigint::BigInt::from(1) << steps), prec));
    let mut k = bisect_k(&reduced, 0.0, 0.2, prec + 64)?.with_prec(prec + 64);
    for _ in 0..steps {
        k = landen_descend(&k);
    }
    Ok(k.with_prec(prec))
}

/// Base modulus of an aspect ratio: the k in (0,1) with K'(k)/K(k) = 2L.
pub fn k_from_l(l: &HpReal, prec: usize) -> Result<HpReal> {
    if l.sign() <= 0 {
        return Err(Error::Domain("aspect ratio must be positive".into()));
    }
    let one = HpReal::one(prec);
    let quarter = HpReal::parse_decimal("0.25", prec)?;
    if l.ge(&one) {
        k_small_side(l, prec)
    } else if l.le(&quarter) {
        // k'(L) = k(1/(4L))
        let recip4 = one.div(&l.with_prec(prec + 64)).div_u64(4);
        let kp = k_small_side(&recip4, prec + 64)?;
        Ok(HpReal::one(prec + 64)
            .sub(&kp.square())
            .sqrt()
            .with_prec(prec))
    } else {
        bisect_k(l, 0.05, 0.9999, prec)
    }
}

/// All moduli of an aspect ratio in numerically stable forms.
pub fn modulus_from_l(l: &HpReal, prec: usize) -> Result<Modulus> {
    let wp = prec + 64;
    let one = HpReal::one(wp);
    let quarter = HpReal::parse_decimal("0.25", wp)?;
    let complement_of = |v: &HpReal| -> HpReal {
        if v.abs_le_pow2(-(wp as i64 + 8)) {
            one.clone()
        } else {
            one.sub(&v.square()).sqrt()
        }
    };
    let (k, k_prime) = if l.with_prec(wp).le(&quarter) {
        let recip4 = one.div(&l.with_prec(wp)).div_u64(4);
        let kp = k_small_side(&recip4, wp)?;
        (complement_of(&kp), kp)
    } else {
        let k = k_from_l(&l.with_prec(wp), wp)?;
        let kp = complement_of(&k);
        (k, kp)
    };
    let k1 = landen_ascend(&k);
    // (1-k)/(1+k) written as k'^2/(1+k)^2: stable on both ends
    let k2 = k_prime.square().div(&one.add(&k).square());
    let x = k2.square();
    Ok(Modulus {
        k: k.with_prec(prec),
        k_prime: k_prime.with_prec(prec),
        k1: k1.with_prec(prec),
        k2: k2.with_prec(prec),
        x: x.with_prec(prec),
    })
}

/// Continuum hook-up data at one aspect ratio.
#[derive(Clone, Debug)]
pub struct ContinuumPoint {
    pub l: HpReal,
    pub modulus: Modulus,
    /// K(k)
    pub big_k: HpReal,
    /// K'(k)
    pub big_k_prime: HpReal,
    pub z: HpReal,
    pub z_i: HpReal,
    pub y: HpReal,
    /// canonical closed form 2k/(1+k^2)
    pub h: HpReal,
    /// series route (Z - Z_I)/(Z + Z_I)
    pub h_series: HpReal,
    /// theta-style route Y / (Y + 2 Y(1/L))
    pub h_theta: HpReal,
    /// max pairwise deviation of the three routes, relative to h when h > 0
    pub h_spread: HpReal,
    /// true when the point was assembled through the reciprocal ratio
    pub via_dual: bool,
}

/// Aspect ratios inside this window evaluate every route directly; outside
/// it the point is assembled through the reciprocal ratio or closed forms.
pub const DIRECT_WINDOW: (f64, f64) = (0.05, 20.0);

fn h_from_k(k: &HpReal, prec: usize) -> HpReal {
    let one = HpReal::one(prec);
    // 1 + k^2 rounds to 1 here, and squaring could leave the exponent range
    if k.abs_le_pow2(-(prec as i64 + 40)) {
        return k.mul_u64(2).with_prec(prec);
    }
    k.mul_u64(2).div(&one.add(&k.square()))
}

fn spread_of(h: &HpReal, routes: [&HpReal; 3]) -> HpReal {
    let mut worst = HpReal::zero(h.prec());
    for i in 0..3 {
        for j in (i + 1)..3 {
            worst = worst.max_val(&routes[i].sub(routes[j]).abs());
        }
    }
    if h.is_zero() {
        worst
    } else {
        worst.div(h)
    }
}

pub fn hookup_continuum(
    l: &HpReal,
    prec: usize,
    policy: &TruncationPolicy,
) -> Result<ContinuumPoint> {
    if l.sign() <= 0 {
        return Err(Error::Domain("aspect ratio must be positive".into()));
    }
    let wp = prec + 32;
    let lf = l.to_f64();
    if lf < DIRECT_WINDOW.0 {
        return hookup_via_dual(l, prec, policy);
    }

    let modulus = modulus_from_l(l, wp)?;
    let big_k = elliptic_k_from_complement(&modulus.k_prime, wp)?;
    let big_k_prime = if lf <= DIRECT_WINDOW.1 {
        elliptic_k_from_complement(&modulus.k, wp)?
    } else {
        // xi = 2L holds by construction; the direct AGM would be fine too,
        // but this stays exact arbitrarily far out
        l.with_prec(wp).mul_u64(2).mul(&big_k)
    };

    let z = series_z(l, wp, policy)?;
    let z_i = series_z_i(l, wp, policy)?;
    let y = series_y(l, wp, policy)?;
    let h = h_from_k(&modulus.k, wp);

    let (h_series, h_theta) = if lf <= DIRECT_WINDOW.1 {
        let hs = z.sub(&z_i).div(&z.add(&z_i));
        let recip = HpReal::one(wp).div(&l.with_prec(wp));
        let y_dual = series_y(&recip, wp, policy)?;
        (hs.clone(), y.div(&y.add(&y_dual.mul_u64(2))))
    } else {
        // far out the difference z - z_i cancels catastrophically; use the
        // product form of the same difference
        let hs = y.div(&z.add(&z_i));
        let y_dual = if lf <= 1000.0 {
            let recip = HpReal::one(wp).div(&l.with_prec(wp));
            series_y(&recip, wp, policy)?
        } else {
            // 8 (1-k)^2 K K' / pi^2 with K' taken from the xi = 2L relation,
            // which survives even after k underflows to zero
            HpReal::one(wp)
                .sub(&modulus.k)
                .square()
                .mul_u64(8)
                .mul(&big_k)
                .mul(&big_k_prime)
                .div(&HpReal::pi(wp).square())
        };
        (hs, y.div(&y.add(&y_dual.mul_u64(2))))
    };
    let h_spread = spread_of(&h, [&h, &h_series, &h_theta]);
    Ok(ContinuumPoint {
        l: l.with_prec(prec),
        modulus,
        big_k: big_k.with_prec(prec),
        big_k_prime: big_k_prime.with_prec(prec),
        z: z.with_prec(prec),
        z_i: z_i.with_prec(prec),
        y: y.with_prec(prec),
        h: h.with_prec(prec),
        h_series: h_series.with_prec(prec),
        h_theta: h_theta.with_prec(prec),
        h_spread: h_spread.with_prec(prec),
        via_dual: false,
    })
}

/// Assembles the point at small L from the point at 1/L: Z is self-dual,
/// Z_I(L) = Y(1/L), and the moduli map through Landen algebra.
fn hookup_via_dual(l: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<ContinuumPoint> {
    let wp = prec + 32;
    let recip = HpReal::one(wp).div(&l.with_prec(wp));
    let dual = hookup_continuum(&recip, wp, policy)?;

    let z = dual.z.clone();
    let z_i = dual.y.clone();
    let y = dual.z_i.clone();

    // kappa = k(1/L); u = ascend(kappa) has xi = 1/L, and one more duality
    // flip gives the base modulus of L
    let kappa = dual.modulus.k.with_prec(wp);
    let u = landen_ascend(&kappa);
    let one = HpReal::one(wp);
    let k = one.sub(&u).div(&one.add(&u));
    let k_prime = landen_ascend(&u);
    if k_prime.is_zero() {
        return Err(Error::PrecisionInsufficient {
            gap_log2: u.log2_magnitude().unwrap_or(i64::MIN),
            precision: prec,
        });
    }
    let k1 = landen_ascend(&k);
    let k2 = u.clone();
    let x = u.square();
    let modulus = Modulus {
        k: k.with_prec(prec),
        k_prime: k_prime.with_prec(prec),
        k1: k1.with_prec(prec),
        k2: k2.with_prec(prec),
        x: x.with_prec(prec),
    };

    let big_k = elliptic_k_from_complement(&k_prime, wp)?;
    let big_k_prime = l.with_prec(wp).mul_u64(2).mul(&big_k);

    let h = h_from_k(&k, wp);
    let h_series = y.div(&y.add(&z_i.mul_u64(2)));
    let h_theta = y.div(&y.add(&dual.y.mul_u64(2)));
    let h_spread = spread_of(&h, [&h, &h_series, &h_theta]);
    Ok(ContinuumPoint {
        l: l.with_prec(prec),
        modulus,
        big_k: big_k.with_prec(prec),
        big_k_prime: big_k_prime.with_prec(prec),
        z: z.with_prec(prec),
        z_i: z_i.with_prec(prec),
        y: y.with_prec(prec),
        h: h.with_prec(prec),
        h_series: h_series.with_prec(prec),
        h_theta: h_theta.with_prec(prec),
        h_spread: h_spread.with_prec(prec),
        via_dual: true,
    })
}

/// Named identity instance with both sides evaluated.
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: HpReal,
    pub rhs: HpReal,
    pub rel_dev: HpReal,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, lhs: HpReal, rhs: HpReal) -> Self {
        let scale = lhs.abs().max_val(&rhs.abs());
        let rel_dev = if scale.is_zero() {
            lhs.sub(&rhs).abs()
        } else {
            lhs.sub(&rhs).abs().div(&scale)
        };
        IdentityCheck {
            name: name.into(),
            lhs,
            rhs,
            rel_dev,
        }
    }
}

/// Residue-pairing identity between alternating sinh sums at reciprocal
/// scales: 1/alpha + 2 sum_{k>=1} (-1)^k k/sinh(alpha k)
///        = -(2 pi^2/alpha^2) sum_{k>=1} (-1)^k k/sinh(pi^2 k/alpha).
pub fn residue_pairing_check(
    alpha: &HpReal,
    prec: usize,
    policy: &TruncationPolicy,
) -> Result<IdentityCheck> {
    if alpha.sign() <= 0 {
        return Err(Error::Domain("scale must be positive".into()));
    }
    let wp = prec + 32;
    let a = alpha.with_prec(wp);
    let pi = HpReal::pi(wp);
    let beta = pi.square().div(&a);
    // sum_k_inv_sinh alternating starts with +1 at k=1 (sign (-1)^(k-1));
    // the identity wants (-1)^k, so negate
    let s1 = sum_k_inv_sinh(&a, true, wp, policy)?.neg();
    let s2 = sum_k_inv_sinh(&beta, true, wp, policy)?.neg();
    let lhs = a.recip().add(&s1.mul_u64(2));
    let rhs = pi
        .square()
        .mul_u64(2)
        .div(&a.square())
        .mul(&s2)
        .neg();
    Ok(IdentityCheck::new(
        "residue_pairing",
        lhs.with_prec(prec),
        rhs.with_prec(prec),
    ))
}

/// The four Poisson-type pair-sum identities at scale alpha and integer
/// offset m.
pub fn poisson_identity_suite(
    alpha: &HpReal,
    m: u32,
    prec: usize,
    policy: &TruncationPolicy,
) -> Result<Vec<IdentityCheck>> {
    if alpha.sign() <= 0 {
        return Err(Error::Domain("scale must be positive".into()));
    }
    if m == 0 {
        return Err(Error::Domain("offset must be a nonzero integer".into()));
    }
    let wp = prec + 32;
    let a = alpha.with_prec(wp);
    let am = a.mul_u64(m as u64);
    let cosh_am = am.cosh();
    let sinh_am = am.sinh();
    let one = HpReal::one(wp);
    let m_real = HpReal::from_u64(m as u64, wp);

    // generic sum over a progression j(k) of 1/(cosh(alpha j) + cosh(alpha m))
    let pair_sum = |stride: u64, offset: i64| -> Result<HpReal> {
        let mut basis = HyperBasis::new(&a, wp)?;
        if basis.underflows() {
            return Ok(HpReal::zero(wp));
        }
        let r = basis.r.clone();
        let mut rp = PowTrack::new(r.clone(), wp);
        let inv = one.div(&one.sub(&r.powi(stride)));
        let cosh_am = cosh_am.clone();
        sum_certified(
            wp,
            policy,
            |k| {
                let j = (stride * k) as i64 + offset;
                debug_assert!(j >= 1);
                one.div(&basis.cosh_k(j as u64).add(&cosh_am))
            },
            // 1/(cosh x + C) <= 2 e^-x; next argument is stride*(k+1)+offset
            |k| {
                let jn = (stride * (k + 1)) as i64 + offset;
                rp.at(jn as u64).mul(&inv).mul_u64(2)
            },
        )
    };

    let mut out = Vec::new();

    // sum over odd j of 1/(cosh(alpha j) + cosh(alpha m)), doubled for the
    // two signs, against m/sinh(alpha m)
    let odd = pair_sum(2, -1)?;
    out.push(IdentityCheck::new(
        "pair_sum_odd",
        odd.mul_u64(2).with_prec(prec),
        m_real.div(&sinh_am).with_prec(prec),
    ));

    // each odd j once (progression 4n-1 over all integers n), against
    // m/(2 sinh(alpha m))
    out.push(IdentityCheck::new(
        "pair_sum_quarter",
        odd.with_prec(prec),
        m_real.div(&sinh_am).half().with_prec(prec),
    ));

    // all integers j, with the j = 0 term, against 2m/sinh(alpha m)
    let all = pair_sum(1, 0)?;
    let lhs_all = one.div(&one.add(&cosh_am)).add(&all.mul_u64(2));
    out.push(IdentityCheck::new(
        "pair_sum_all",
        lhs_all.with_prec(prec),
        m_real.mul_u64(2).div(&sinh_am).with_prec(prec),
    ));

    // window self-duality: sum_Z 1/(1+cosh(alpha n)) against its image at
    // scale 2 pi^2/alpha (m-independent)
    let window = {
        let mut basis = HyperBasis::new(&a, wp)?;
        if basis.underflows() {
            HpReal::zero(wp)
        } else {
            let mut tail = GeomTail::new(&basis.r.clone(), wp);
            sum_certified(
                wp,
                policy,
                |k| one.div(&one.add(&basis.cosh_k(k))),
                |k| tail.after(k).mul_u64(2),
            )?
        }
    };
    let lhs_window = HpReal::one(wp).half().add(&window.mul_u64(2));
    let pi = HpReal::pi(wp);
    let beta = pi.square().mul_u64(2).div(&a);
    let dual_sum = sum_k_inv_sinh(&beta, false, wp, policy)?;
    let rhs_window = HpReal::from_u64(2, wp)
        .div(&a)
        .add(&pi.square().mul_u64(8).div(&a.square()).mul(&dual_sum));
    out.push(IdentityCheck::new(
        "window_self_dual",
        lhs_window.with_prec(prec),
        rhs_window.with_prec(prec),
    ));

    Ok(out)
}

/// sinh moment sums against their elliptic closed forms at modulus k:
/// with xi = K'/K,
///   sum n/sinh(pi n xi)            = K(K - E)/pi^2
///   sum (-1)^(n-1) n/sinh(pi n xi) = K(E - k'^2 K)/pi^2
///   sum (2n-1)/sinh(pi (2n-1) xi)  = k^2 K^2/(2 pi^2)
pub fn sinh_moment_checks(
    k: &HpReal,
    prec: usize,
    policy: &TruncationPolicy,
) -> Result<Vec<IdentityCheck>> {
    let wp = prec + 32;
    let one = HpReal::one(wp);
    let kk = k.with_prec(wp);
    if kk.sign() <= 0 || kk.ge(&one) {
        return Err(Error::Domain("modulus must lie in (0, 1)".into()));
    }
    let kp = one.sub(&kk.square()).sqrt();
    let big_k = elliptic_k_from_complement(&kp, wp)?;
    let big_e = elliptic_e(&kk, wp)?;
    let xi = elliptic_k_from_complement(&kk, wp)?.div(&big_k);
    let pi = HpReal::pi(wp);
    let pi_sq = pi.square();
    let c = pi.mul(&xi);

    let plain = sum_k_inv_sinh(&c, false, wp, policy)?;
    let alt = sum_k_inv_sinh(&c, true, wp, policy)?;
    let odd = sum_odd_inv_sinh(&c, wp, policy)?.div_u64(8);

    let rhs_plain = big_k.mul(&big_k.sub(&big_e)).div(&pi_sq);
    let rhs_alt = big_k
        .mul(&big_e.sub(&kp.square().mul(&big_k)))
        .div(&pi_sq);
    let rhs_odd = kk.square().mul(&big_k.square()).div(&pi_sq).half();

    Ok(vec![
        IdentityCheck::new("sinh_moment", plain.with_prec(prec), rhs_plain.with_prec(prec)),
        IdentityCheck::new(
            "sinh_moment_alternating",
            alt.with_prec(prec),
            rhs_alt.with_prec(prec),
        ),
        IdentityCheck::new("sinh_moment_odd", odd.with_prec(prec), rhs_odd.with_prec(prec)),
    ])
}

/// The two series forms of Z_I and Y, and the additive closure Z = Z_I + Y,
/// all at one aspect ratio.
pub fn dual_form_checks(
    l: &HpReal,
    prec: usize,
    policy: &TruncationPolicy,
) -> Result<Vec<IdentityCheck>> {
    let z = series_z(l, prec, policy)?;
    let z_i = series_z_i(l, prec, policy)?;
    let z_i_alt = series_z_i_alt(l, prec, policy)?;
    let y = series_y(l, prec, policy)?;
    let y_alt = series_y_alt(l, prec, policy)?;
    Ok(vec![
        IdentityCheck::new("inline_weight_forms", z_i.clone(), z_i_alt),
        IdentityCheck::new("excess_weight_forms", y.clone(), y_alt),
        IdentityCheck::new("additive_closure", z, z_i.add(&y)),
    ])
}

/// Cross-scale symmetry residual at one aspect ratio: the largest relative
/// deviation among
///   Z_I(L) vs Y(1/L),
///   the residue pairing at scale pi L,
///   the window self-duality at scale 2 pi L.
pub fn symmetry_check(l: &HpReal, prec: usize, policy: &TruncationPolicy) -> Result<HpReal> {
    let wp = prec + 32;
    let z_i = series_z_i(l, wp, policy)?;
    let recip = HpReal::one(wp).div(&l.with_prec(wp));
    let y_dual = series_y(&recip, wp, policy)?;
    let first = IdentityCheck::new("inline_vs_dual_excess", z_i, y_dual).rel_dev;

    let alpha = HpReal::pi(wp).mul(&l.with_prec(wp));
    let second = residue_pairing_check(&alpha, wp, policy)?.rel_dev;

    let two_alpha = alpha.mul_u64(2);
    let suite = poisson_identity_suite(&two_alpha, 1, wp, policy)?;
    let third = suite
        .iter()
        .find(|c| c.name == "window_self_dual")
        .expect("window identity present")
        .rel_dev
        .clone();

    Ok(first.max_val(&second).max_val(&third).with_prec(prec))
}
