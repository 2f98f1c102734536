//! Local densities ρ, ρ*, the transition modulus ψ, the sieve density ω, and
//! the sifted-set counts `|𝔄_d|` with their remainders.
//!
//! ρ(d) and ρ*(d) count residue pairs modulo `a = d₁⋯d_g`. Both conditions
//! are periodic modulo `L = lcm(d₁, …, d_g)`, so the count is taken over
//! `[0, L)²` and scaled by `(a/L)²`; the enumeration cap applies to `L`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::forms::{FormError, FormSystem, ReducedForm};
use crate::lattice;
use crate::numutil::{self, NumError};
use crate::region::{Region, RegionError};
use crate::Rational;

/// Default bound on the enumeration period `L`.
pub const DEFAULT_CAP: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("modulus vector has {got} entries but the system has {want} forms")]
    WrongLength { got: usize, want: usize },
    #[error("modulus entries must be positive")]
    ZeroEntry,
    #[error("enumeration modulus {modulus} exceeds the cap {cap}")]
    CapExceeded { modulus: u128, cap: u128 },
    #[error("{0} is not squarefree")]
    NotSquarefree(u128),
    #[error("{d} shares the prime {p} with D")]
    NotCoprimeToD { d: u128, p: u128 },
    #[error("{0} is not prime")]
    NotPrime(u128),
    #[error("arithmetic overflow")]
    Overflow,
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

pub type Result<T> = std::result::Result<T, DensityError>;

/// `d = (d₁, …, d_g)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModulusVector(Vec<u64>);

impl ModulusVector {
    pub fn new(d: Vec<u64>) -> Result<Self> {
        if d.contains(&0) {
            return Err(DensityError::ZeroEntry);
        }
        Ok(Self(d))
    }

    pub fn ones(g: usize) -> Self {
        Self(vec![1; g])
    }

    /// `p` in slot `i`, 1 elsewhere.
    pub fn unit(g: usize, i: usize, p: u64) -> Self {
        let mut d = vec![1; g];
        d[i] = p;
        Self(d)
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `a = d₁⋯d_g`.
    pub fn product(&self) -> Option<u128> {
        self.0
            .iter()
            .try_fold(1u128, |acc, &v| acc.checked_mul(v as u128))
    }

    pub fn lcm(&self) -> Option<u128> {
        self.0
            .iter()
            .try_fold(1u128, |acc, &v| numutil::lcm(acc, v as u128))
    }

    /// Componentwise product.
    pub fn compose(&self, other: &ModulusVector) -> Option<ModulusVector> {
        let v = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&x, &y)| x.checked_mul(y))
            .collect::<Option<Vec<_>>>()?;
        Some(Self(v))
    }

    fn check_len(&self, sys: &FormSystem) -> Result<()> {
        if self.0.len() != sys.g() {
            return Err(DensityError::WrongLength {
                got: self.0.len(),
                want: sys.g(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for ModulusVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// ρ and ρ* for one modulus vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityValue {
    pub rho: u128,
    pub rho_star: u128,
    pub modulus: u128,
}

/// Residue counter for one modulus vector; shared by ρ, ρ* and the class code.
pub(crate) struct ResidueTest {
    forms: Vec<ReducedForm>,
    period: u64,
    period_primes: Vec<u64>,
}

impl ResidueTest {
    pub(crate) fn new(sys: &FormSystem, d: &ModulusVector, period: u64) -> Result<Self> {
        let forms = sys
            .forms()
            .iter()
            .zip(d.entries())
            .map(|(q, &di)| q.reduced(di))
            .collect();
        let period_primes = numutil::factorize(period as u128)?
            .primes()
            .map(|p| p as u64)
            .collect();
        Ok(Self {
            forms,
            period,
            period_primes,
        })
    }

    /// `dᵢ | qᵢ(x)` for every i; coordinates are arbitrary nonnegative ints.
    #[inline]
    pub(crate) fn in_lambda(&self, x1: u64, x2: u64) -> bool {
        self.forms.iter().all(|q| {
            let m = q.modulus();
            q.eval(x1 % m, x2 % m) == 0
        })
    }

    /// gcd(x₁, x₂, L) = 1.
    #[inline]
    pub(crate) fn primitive(&self, x1: u64, x2: u64) -> bool {
        self.period_primes
            .iter()
            .all(|&p| x1 % p != 0 || x2 % p != 0)
    }

    fn count(&self) -> (u128, u128) {
        let l = self.period;
        (0..l)
            .into_par_iter()
            .map(|x1| {
                let mut all = 0u128;
                let mut prim = 0u128;
                for x2 in 0..l {
                    if self.in_lambda(x1, x2) {
                        all += 1;
                        if self.primitive(x1, x2) {
                            prim += 1;
                        }
                    }
                }
                (all, prim)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    }
}

fn period_within_cap(d: &ModulusVector, cap: u64) -> Result<u64> {
    let l = d.lcm().ok_or(DensityError::Overflow)?;
    if l > cap as u128 {
        return Err(DensityError::CapExceeded {
            modulus: l,
            cap: cap as u128,
        });
    }
    Ok(l as u64)
}

/// ρ(d) and ρ*(d) by enumeration, with the default cap.
pub fn density(sys: &FormSystem, d: &ModulusVector) -> Result<DensityValue> {
    density_capped(sys, d, DEFAULT_CAP)
}

pub fn density_capped(sys: &FormSystem, d: &ModulusVector, cap: u64) -> Result<DensityValue> {
    d.check_len(sys)?;
    let l = period_within_cap(d, cap)?;
    let a = d.product().ok_or(DensityError::Overflow)?;
    let (all, prim) = ResidueTest::new(sys, d, l)?.count();
    let scale = (a / l as u128).checked_pow(2).ok_or(DensityError::Overflow)?;
    Ok(DensityValue {
        rho: all.checked_mul(scale).ok_or(DensityError::Overflow)?,
        rho_star: prim.checked_mul(scale).ok_or(DensityError::Overflow)?,
        modulus: a,
    })
}

/// ρ and ρ* composed from prime-power blocks, so only each block's period
/// is subject to the cap.
pub fn density_multiplicative(sys: &FormSystem, d: &ModulusVector) -> Result<DensityValue> {
    d.check_len(sys)?;
    let a = d.product().ok_or(DensityError::Overflow)?;
    let mut rho = 1u128;
    let mut rho_star = 1u128;
    for p in numutil::factorize(a)?.primes() {
        let block = ModulusVector(
            d.entries()
                .iter()
                .map(|&di| p.pow(valuation(di as u128, p)) as u64)
                .collect(),
        );
        let v = density(sys, &block)?;
        rho = rho.checked_mul(v.rho).ok_or(DensityError::Overflow)?;
        rho_star = rho_star.checked_mul(v.rho_star).ok_or(DensityError::Overflow)?;
    }
    Ok(DensityValue {
        rho,
        rho_star,
        modulus: a,
    })
}

/// ρ(d) = #{x ∈ [0,a)² : dᵢ | qᵢ(x)}.
pub fn rho(sys: &FormSystem, d: &ModulusVector) -> Result<u128> {
    Ok(density(sys, d)?.rho)
}

/// ρ*(d): as ρ with gcd(x₁, x₂, a) = 1.
pub fn rho_star(sys: &FormSystem, d: &ModulusVector) -> Result<u128> {
    Ok(density(sys, d)?.rho_star)
}

/// ψ(d) = ∏_p p^⌈max_i αᵢ(p)/2⌉.
pub fn psi(d: &ModulusVector) -> Result<u128> {
    let a = d.product().ok_or(DensityError::Overflow)?;
    let mut out = 1u128;
    for p in numutil::factorize(a)?.primes() {
        let max_e = d
            .entries()
            .iter()
            .map(|&di| valuation(di as u128, p))
            .max()
            .unwrap_or(0);
        out *= p.pow(max_e.div_ceil(2));
    }
    Ok(out)
}

fn valuation(mut n: u128, p: u128) -> u32 {
    let mut e = 0;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    e
}

/// ρ(d) assembled from ρ* through the divisors `b | ψ(d)`:
/// `Σ_b ρ*(c) (∏(dᵢ; b²) / b)²` with `cᵢ = dᵢ / (dᵢ; b²)`.
pub fn rho_via_transition(sys: &FormSystem, d: &ModulusVector) -> Result<u128> {
    rho_via_transition_capped(sys, d, DEFAULT_CAP)
}

pub fn rho_via_transition_capped(sys: &FormSystem, d: &ModulusVector, cap: u64) -> Result<u128> {
    d.check_len(sys)?;
    period_within_cap(d, cap)?;
    let mut total = 0u128;
    for b in numutil::factorize(psi(d)?)?.divisors() {
        let b2 = b * b;
        let gs: Vec<u128> = d
            .entries()
            .iter()
            .map(|&di| numutil::gcd(di as u128, b2))
            .collect();
        let c = ModulusVector(
            d.entries()
                .iter()
                .zip(&gs)
                .map(|(&di, &g)| (di as u128 / g) as u64)
                .collect(),
        );
        let g_prod: u128 = gs.iter().product();
        debug_assert_eq!(g_prod % b, 0);
        let factor = (g_prod / b).checked_pow(2).ok_or(DensityError::Overflow)?;
        total += density_capped(sys, &c, cap)?.rho_star * factor;
    }
    Ok(total)
}

fn rat(n: i128) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

fn check_prime(p: u128) -> Result<()> {
    if !numutil::is_prime(p) {
        return Err(DensityError::NotPrime(p));
    }
    Ok(())
}

/// `ω(p) = g + Σχᵢ − (g − 1 + Σχᵢ)/p` with `χᵢ = (δᵢ/p)`, and 0 for `p | D`.
pub fn omega_closed(sys: &FormSystem, p: u128) -> Result<Rational> {
    check_prime(p)?;
    if !sys.is_sifting_prime(p) {
        return Ok(Rational::zero());
    }
    let g = sys.g() as i128;
    let chi_sum: i128 = sys
        .discriminants()
        .iter()
        .map(|&delta| numutil::jacobi(delta, p as i128).map(i128::from))
        .sum::<std::result::Result<i128, _>>()?;
    Ok(rat(g + chi_sum) - rat(g - 1 + chi_sum) / rat(p as i128))
}

/// ω(p) computed from ρ twice: the defining signed sum and the single-form
/// reformulation `(Σᵢ ρ(p·eᵢ) + 1 − g)/p`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaFromDefinition {
    pub defining_sum: Rational,
    pub single_form_sum: Rational,
}

pub fn omega_from_definition(sys: &FormSystem, p: u128) -> Result<OmegaFromDefinition> {
    omega_from_definition_capped(sys, p, DEFAULT_CAP)
}

pub fn omega_from_definition_capped(
    sys: &FormSystem,
    p: u128,
    cap: u64,
) -> Result<OmegaFromDefinition> {
    check_prime(p)?;
    if !sys.is_sifting_prime(p) {
        return Ok(OmegaFromDefinition {
            defining_sum: Rational::zero(),
            single_form_sum: Rational::zero(),
        });
    }
    let g = sys.g();
    let p64 = u64::try_from(p).map_err(|_| DensityError::Overflow)?;
    let pr = rat(p as i128);

    // Σ over c ∈ {1,p}^g \ {1}: μ(p)·(−1)^k ρ(c) / p^{2k}
    let mut sum = Rational::zero();
    for mask in 1u32..(1 << g) {
        let k = mask.count_ones() as i32;
        let c = ModulusVector(
            (0..g)
                .map(|i| if mask >> i & 1 == 1 { p64 } else { 1 })
                .collect(),
        );
        let r = density_capped(sys, &c, cap)?.rho;
        let sign = if k % 2 == 0 { -1 } else { 1 }; // μ(p)(−1)^k
        let term = BigRational::from_integer(BigInt::from(r)) / pr.pow(2 * k);
        sum += if sign > 0 { term } else { -term };
    }
    let defining_sum = pr.clone() * sum;

    let mut single = rat(1 - g as i128);
    for i in 0..g {
        single += BigRational::from_integer(BigInt::from(
            density_capped(sys, &ModulusVector::unit(g, i, p64), cap)?.rho,
        ));
    }
    Ok(OmegaFromDefinition {
        defining_sum,
        single_form_sum: single / pr,
    })
}

fn squarefree_coprime_factors(sys: &FormSystem, d: u128) -> Result<Vec<u128>> {
    let f = numutil::factorize(d)?;
    if !f.is_squarefree() {
        return Err(DensityError::NotSquarefree(d));
    }
    let primes: Vec<u128> = f.primes().collect();
    if let Some(&p) = primes.iter().find(|&&p| !sys.is_sifting_prime(p)) {
        return Err(DensityError::NotCoprimeToD { d, p });
    }
    Ok(primes)
}

/// `ω(d) = d ∏_{p|d} ω(p)/p` for squarefree `d` prime to `D`.
pub fn omega_squarefree(sys: &FormSystem, d: u128) -> Result<Rational> {
    let primes = squarefree_coprime_factors(sys, d)?;
    let mut out = rat(d as i128);
    for p in primes {
        out *= omega_closed(sys, p)? / rat(p as i128);
    }
    Ok(out)
}

/// Tuples `(c₁, …, c_g)` with `cᵢ | d` and `d | c₁⋯c_g`, paired with
/// `μ(d)μ(c₁)⋯μ(c_g)`, for squarefree `d`.
pub fn covering_tuples(d: u128, primes: &[u128], g: usize) -> Vec<(ModulusVector, i8)> {
    // each prime of d goes to a nonempty subset of the g slots
    let mu_d: i8 = if primes.len() % 2 == 0 { 1 } else { -1 };
    let mut out = vec![(vec![1u64; g], 0u32)];
    for &p in primes {
        let mut next = Vec::with_capacity(out.len() * ((1 << g) - 1));
        for (c, k) in &out {
            for mask in 1u32..(1 << g) {
                let mut c2 = c.clone();
                for (i, ci) in c2.iter_mut().enumerate() {
                    if mask >> i & 1 == 1 {
                        *ci *= p as u64;
                    }
                }
                next.push((c2, k + mask.count_ones()));
            }
        }
        out = next;
    }
    let _ = d;
    out.into_iter()
        .map(|(c, k)| {
            let mu_c: i8 = if k % 2 == 0 { 1 } else { -1 };
            (ModulusVector(c), mu_d * mu_c)
        })
        .collect()
}

/// `|𝔄_d|` counted directly and by inclusion–exclusion over lattice counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiftedCount {
    pub direct: u128,
    pub inclusion_exclusion: i128,
}

pub fn count_ad(sys: &FormSystem, d: u128, region: &Region) -> Result<SiftedCount> {
    count_ad_capped(sys, d, region, lattice::DEFAULT_REGION_CAP)
}

pub fn count_ad_capped(
    sys: &FormSystem,
    d: u128,
    region: &Region,
    cap: u128,
) -> Result<SiftedCount> {
    let f = numutil::factorize(d)?;
    if !f.is_squarefree() {
        return Err(DensityError::NotSquarefree(d));
    }
    let primes: Vec<u128> = f.primes().collect();
    let direct = count_divisible_products(sys, d, region, cap)?;
    let mut ie = 0i128;
    for (c, sign) in covering_tuples(d, &primes, sys.g()) {
        let n = lattice::count_lattice_region_capped(sys, &c, region, cap)? as i128;
        ie += sign as i128 * n;
    }
    Ok(SiftedCount {
        direct,
        inclusion_exclusion: ie,
    })
}

/// #{x ∈ ℤ² ∩ region ∩ Ψ : d | q₁(x)⋯q_g(x)}.
fn count_divisible_products(sys: &FormSystem, d: u128, region: &Region, cap: u128) -> Result<u128> {
    lattice::check_region_cap(region, cap)?;
    let d64 = u64::try_from(d).map_err(|_| DensityError::Overflow)?;
    let reduced: Vec<ReducedForm> = sys.forms().iter().map(|q| q.reduced(d64)).collect();
    let m = sys.abs_d();
    let rows = region.residue_rows(m, sys.z());
    let dm = d64 as i128;
    Ok(rows
        .par_iter()
        .map(|&(y, first, last)| {
            let y_r = y.rem_euclid(dm) as u64;
            let mut n = 0u128;
            let mut x = first;
            while x <= last {
                let x_r = x.rem_euclid(dm) as u64;
                let prod = reduced
                    .iter()
                    .fold(1u128 % d, |acc, q| acc * q.eval(x_r, y_r) as u128 % d);
                if prod == 0 {
                    n += 1;
                }
                x += m as i128;
            }
            n
        })
        .sum())
}

/// `R_d = |𝔄_d| − (ω(d)/d)·Y` with `Y = vol(X·R⁰)/D²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Remainder {
    pub count: u128,
    /// ω(d)/d
    pub density: Rational,
    pub y: f64,
    pub value: f64,
    /// Exact `R_d` when the region has a rational area.
    pub exact: Option<Rational>,
}

/// `Y = X² vol(R⁰) / D²`.
pub fn sifted_size(sys: &FormSystem, region: &Region) -> f64 {
    let d = sys.abs_d() as f64;
    region.volume() / (d * d)
}

pub fn remainder_rd(sys: &FormSystem, d: u128, region: &Region) -> Result<Remainder> {
    squarefree_coprime_factors(sys, d)?;
    let count = count_divisible_products(sys, d, region, lattice::DEFAULT_REGION_CAP)?;
    let density = omega_squarefree(sys, d)? / rat(d as i128);
    let y = sifted_size(sys, region);
    let value = count as f64 - density.to_f64().unwrap_or(f64::NAN) * y;
    let exact = region.unit_volume_exact().and_then(|vol| {
        let scale = BigRational::from_float(region.scale())?;
        let dd = rat(sys.abs_d() as i128);
        let y_exact = scale.pow(2) * vol / dd.pow(2);
        Some(BigRational::from_integer(BigInt::from(count)) - density.clone() * y_exact)
    });
    Ok(Remainder {
        count,
        density,
        y,
        value,
        exact,
    })
}

/// `Σ μ²(d) 4^{ν(d)} |R_d|` over `d < level` prime to `D`.
pub fn condition_r_sum(sys: &FormSystem, region: &Region, level: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut d = 1u128;
    while (d as f64) < level {
        let f = numutil::factorize(d)?;
        if f.is_squarefree() && f.primes().all(|p| sys.is_sifting_prime(p)) {
            let r = remainder_rd(sys, d, region)?;
            total += 4f64.powi(f.nu() as i32) * r.value.abs();
        }
        d += 1;
    }
    Ok(total)
}

/// ∏ (1 − ω(p)/p) for primes `p` in the given list, exactly.
pub fn sifting_product_exact(sys: &FormSystem, primes: &[u128]) -> Result<Rational> {
    let mut acc = Rational::one();
    for &p in primes {
        acc *= Rational::one() - omega_closed(sys, p)? / rat(p as i128);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{worked_system, QuadraticForm};

    fn sum_sq() -> FormSystem {
        FormSystem::build(vec![QuadraticForm::new(1, 0, 1)], true).unwrap()
    }

    fn mv(d: &[u64]) -> ModulusVector {
        ModulusVector::new(d.to_vec()).unwrap()
    }

    fn r(n: i128, d: i128) -> Rational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Plain enumeration over [0, a)², independent of the period reduction.
    fn brute(sys: &FormSystem, d: &[u64]) -> (u128, u128) {
        let a: u64 = d.iter().product();
        let mut all = 0;
        let mut prim = 0;
        for x in 0..a as i128 {
            for y in 0..a as i128 {
                let ok = sys
                    .forms()
                    .iter()
                    .zip(d)
                    .all(|(q, &di)| q.eval((x, y)).unwrap().rem_euclid(di as i128) == 0);
                if ok {
                    all += 1;
                    if numutil::gcd_many(&[x, y, a as i128]).unwrap() == 1 {
                        prim += 1;
                    }
                }
            }
        }
        (all, prim)
    }

    #[test]
    fn rho_examples() {
        let s = sum_sq();
        assert_eq!(rho(&s, &mv(&[5])).unwrap(), 9);
        assert_eq!(rho(&s, &mv(&[1])).unwrap(), 1);
        assert_eq!(rho(&s, &mv(&[3])).unwrap(), 1);
        assert_eq!(rho(&worked_system(), &mv(&[1, 1])).unwrap(), 1);
        assert_eq!(brute(&s, &[5]), (9, 8));
    }

    #[test]
    fn rho_star_examples() {
        let s = sum_sq();
        assert_eq!(rho_star(&s, &mv(&[5])).unwrap(), 8);
        assert_eq!(rho_star(&s, &mv(&[1])).unwrap(), 1);
        let w = worked_system();
        let joint = rho_star(&w, &mv(&[5, 7])).unwrap();
        assert_eq!(
            joint,
            rho_star(&w, &mv(&[5, 1])).unwrap() * rho_star(&w, &mv(&[1, 7])).unwrap()
        );
        assert_eq!(brute(&w, &[5, 7]).1, joint);
    }

    #[test]
    fn period_reduction_matches_plain_enumeration() {
        let w = worked_system();
        for d in [[2u64, 2], [4, 1], [3, 9], [6, 4], [12, 1], [5, 10], [9, 3]] {
            let v = density(&w, &mv(&d)).unwrap();
            assert_eq!((v.rho, v.rho_star), brute(&w, &d), "{d:?}");
        }
    }

    #[test]
    fn errors() {
        let s = sum_sq();
        assert!(matches!(
            rho(&s, &mv(&[10_007])),
            Err(DensityError::CapExceeded { .. })
        ));
        assert!(matches!(
            rho(&s, &mv(&[5, 5])),
            Err(DensityError::WrongLength { got: 2, want: 1 })
        ));
        assert_eq!(ModulusVector::new(vec![0]), Err(DensityError::ZeroEntry));
        // the cap is on lcm, so a large product of a repeated prime is fine
        let w = worked_system();
        assert_eq!(rho_star(&w, &mv(&[97, 97])).unwrap(), 0);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(&mv(&[7, 1, 1])).unwrap(), 7);
        assert_eq!(psi(&mv(&[25, 125])).unwrap(), 25);
        assert_eq!(psi(&mv(&[12, 18])).unwrap(), 6);
        assert_eq!(psi(&mv(&[1, 1])).unwrap(), 1);
    }

    #[test]
    fn transition_examples() {
        let s = sum_sq();
        assert_eq!(rho_via_transition(&s, &mv(&[4])).unwrap(), 4);
        assert_eq!(rho(&s, &mv(&[4])).unwrap(), 4);
        assert_eq!(rho_via_transition(&s, &mv(&[1])).unwrap(), 1);
        assert_eq!(rho_via_transition(&s, &mv(&[5])).unwrap(), 9);
    }

    #[test]
    fn omega_examples() {
        let w = worked_system();
        assert_eq!(omega_closed(&w, 7).unwrap(), r(13, 7));
        assert_eq!(omega_closed(&w, 2).unwrap(), Rational::zero());
        assert_eq!(omega_closed(&w, 3).unwrap(), Rational::zero());
        assert_eq!(omega_closed(&sum_sq(), 5).unwrap(), r(9, 5));
        assert!(matches!(omega_closed(&w, 9), Err(DensityError::NotPrime(9))));

        let def = omega_from_definition(&w, 7).unwrap();
        assert_eq!(def.defining_sum, r(13, 7));
        assert_eq!(def.single_form_sum, r(13, 7));
        assert_eq!(rho(&w, &mv(&[7, 1])).unwrap(), 1);
        assert_eq!(rho(&w, &mv(&[1, 7])).unwrap(), 13);

        let s1 = omega_from_definition(&sum_sq(), 3).unwrap();
        assert_eq!(s1.single_form_sum, r(1, 3));
        assert_eq!(s1.defining_sum, r(1, 3));
        assert_eq!(omega_from_definition(&w, 3).unwrap().defining_sum, Rational::zero());
    }

    #[test]
    fn omega_squarefree_examples() {
        let w = worked_system();
        assert_eq!(omega_squarefree(&w, 1).unwrap(), Rational::one());
        assert_eq!(omega_squarefree(&w, 7).unwrap(), omega_closed(&w, 7).unwrap());
        let w5 = omega_closed(&w, 5).unwrap();
        let expect = rat(35) * r(13, 49) * w5 / rat(5);
        assert_eq!(omega_squarefree(&w, 35).unwrap(), expect);
        assert!(matches!(omega_squarefree(&w, 49), Err(DensityError::NotSquarefree(49))));
        assert!(matches!(
            omega_squarefree(&w, 15),
            Err(DensityError::NotCoprimeToD { d: 15, p: 3 })
        ));
    }

    #[test]
    fn omega_squarefree_matches_signed_sum() {
        // ω(d)/d = Σ μ(d)μ(c₁)⋯μ(c_g) ρ(c)/(c₁⋯c_g)² over the covering tuples
        let w = worked_system();
        for d in [5u128, 7, 35, 77] {
            let primes: Vec<u128> = numutil::factorize(d).unwrap().primes().collect();
            let mut sum = Rational::zero();
            for (c, sign) in covering_tuples(d, &primes, 2) {
                let a = c.product().unwrap() as i128;
                let term = rat(rho(&w, &c).unwrap() as i128) / rat(a * a);
                sum += if sign > 0 { term } else { -term };
            }
            assert_eq!(sum * rat(d as i128), omega_squarefree(&w, d).unwrap(), "d = {d}");
        }
    }

    #[test]
    fn covering_tuples_enumerates_exactly() {
        // brute force over all c with cᵢ | d and d | ∏cᵢ
        let d = 30u128;
        let divs = numutil::factorize(d).unwrap().divisors();
        let mut expect = Vec::new();
        for &c1 in &divs {
            for &c2 in &divs {
                if (c1 * c2) % d == 0 {
                    let mu = numutil::mobius(d).unwrap()
                        * numutil::mobius(c1).unwrap()
                        * numutil::mobius(c2).unwrap();
                    expect.push((vec![c1 as u64, c2 as u64], mu));
                }
            }
        }
        let mut got: Vec<(Vec<u64>, i8)> = covering_tuples(d, &[2, 3, 5], 2)
            .into_iter()
            .map(|(c, s)| (c.entries().to_vec(), s))
            .collect();
        expect.sort();
        got.sort();
        assert_eq!(got, expect);
    }

    #[test]
    fn count_ad_examples() {
        let w = worked_system();
        let region = Region::square(50.0).unwrap();
        let full = count_ad(&w, 1, &region).unwrap();
        let rows = region.residue_rows(216, w.z());
        let n: i128 = rows.iter().map(|&(_, a, b)| (b - a) / 216 + 1).sum();
        assert_eq!(full.direct as i128, n);
        assert_eq!(full.inclusion_exclusion, n);
        for d in [7u128, 35] {
            let c = count_ad(&w, d, &region).unwrap();
            assert_eq!(c.direct as i128, c.inclusion_exclusion);
        }
        assert!(matches!(count_ad(&w, 12, &region), Err(DensityError::NotSquarefree(12))));
    }

    #[test]
    fn count_ad_on_dense_system() {
        // D = 2 for x² + y², so Ψ has a quarter of all points
        let s = sum_sq();
        assert_eq!(s.d(), -2);
        let region = Region::square(40.0).unwrap();
        for d in [1u128, 5, 13, 65, 3, 15, 21, 105] {
            let c = count_ad(&s, d, &region).unwrap();
            assert_eq!(c.direct as i128, c.inclusion_exclusion, "d = {d}");
        }
        assert!(count_ad(&s, 5, &region).unwrap().direct > 0);
    }

    #[test]
    fn remainder_examples() {
        let w = worked_system();
        let region = Region::square(100.0).unwrap();
        let r1 = remainder_rd(&w, 1, &region).unwrap();
        let total = count_ad(&w, 1, &region).unwrap().direct;
        assert_eq!(r1.count, total);
        let y = 40_000.0 / 46_656.0;
        assert!((r1.y - y).abs() < 1e-12);
        assert!((r1.value - (total as f64 - y)).abs() < 1e-12);
        assert_eq!(
            r1.exact.unwrap(),
            rat(total as i128) - r(40_000, 46_656)
        );
        assert!(matches!(remainder_rd(&w, 25, &region), Err(DensityError::NotSquarefree(25))));
        let s = condition_r_sum(&w, &region, r1.y.sqrt()).unwrap();
        assert!(s.is_finite());
    }

    #[test]
    fn sifting_product_matches_closed_form() {
        let w = worked_system();
        let prod = sifting_product_exact(&w, &[2, 3, 5, 7]).unwrap();
        let w5 = omega_closed(&w, 5).unwrap();
        let expect = (Rational::one() - w5 / rat(5)) * (Rational::one() - r(13, 49));
        assert_eq!(prod, expect);
        assert!(prod > Rational::zero());
    }
}
