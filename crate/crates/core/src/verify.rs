//! Exhaustive checks of the exact identities, usable from tests and the CLI.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::forms::FormSystem;
use crate::lattice;
use crate::localdensity::{self, ModulusVector, Result};
use crate::numutil;
use crate::region::Region;
use crate::Rational;

/// Result of one family of checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: u64,
    pub failures: Vec<String>,
    /// Observations that are reported without failing the check.
    pub flagged: Vec<String>,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: Vec::new(),
            flagged: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {} ({} cases", self.name, self.cases)?;
        if !self.failures.is_empty() {
            write!(f, ", {} failed; first: {}", self.failures.len(), self.failures[0])?;
        }
        if !self.flagged.is_empty() {
            write!(f, ", {} flagged", self.flagged.len())?;
        }
        write!(f, ")")
    }
}

/// Every `d ∈ ℤ_{>0}^g` with `d₁⋯d_g ≤ n`.
pub fn moduli_with_product_at_most(g: usize, n: u64) -> Vec<ModulusVector> {
    fn go(g: usize, n: u64, prefix: &mut Vec<u64>, out: &mut Vec<ModulusVector>) {
        if prefix.len() == g {
            out.push(ModulusVector::new(prefix.clone()).expect("positive entries"));
            return;
        }
        for d in 1..=n {
            prefix.push(d);
            go(g, n / d, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(g, n, &mut Vec::with_capacity(g), &mut out);
    out
}

/// ρ and ρ* memoized by modulus vector.
struct DensityCache<'a> {
    sys: &'a FormSystem,
    map: HashMap<ModulusVector, localdensity::DensityValue>,
}

impl<'a> DensityCache<'a> {
    fn new(sys: &'a FormSystem) -> Self {
        Self {
            sys,
            map: HashMap::new(),
        }
    }

    fn get(&mut self, d: &ModulusVector) -> Result<localdensity::DensityValue> {
        if let Some(v) = self.map.get(d) {
            return Ok(*v);
        }
        let v = localdensity::density(self.sys, d)?;
        self.map.insert(d.clone(), v);
        Ok(v)
    }
}

/// `ρ(d) = Σ_{b|ψ(d)} ρ*(c)(∏(dᵢ;b²)/b)²` for `d₁⋯d_g ≤ max_a`.
pub fn check_transition(sys: &FormSystem, max_a: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("transition formula");
    for d in moduli_with_product_at_most(sys.g(), max_a) {
        let direct = localdensity::rho(sys, &d)?;
        let via = localdensity::rho_via_transition(sys, &d)?;
        out.record(direct == via, || format!("d = {d}: rho {direct}, transition {via}"));
    }
    Ok(out)
}

/// `ρ(d∘e) = ρ(d)ρ(e)` and likewise for ρ*, over every coprime split of
/// every `f` with `f₁⋯f_g ≤ max_a`.
pub fn check_multiplicativity(sys: &FormSystem, max_a: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("CRT multiplicativity of rho, rho*");
    let mut cache = DensityCache::new(sys);
    for f in moduli_with_product_at_most(sys.g(), max_a) {
        let a = f.product().expect("small");
        let primes: Vec<u128> = numutil::factorize(a)?.primes().collect();
        let whole = cache.get(&f)?;
        // each subset of the primes of a gives one split f = d∘e
        for mask in 0u32..(1 << primes.len()) {
            let part = |take: bool| {
                let v = f
                    .entries()
                    .iter()
                    .map(|&fi| {
                        primes
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| (mask >> j & 1 == 1) == take)
                            .map(|(_, &p)| {
                                let mut x = 1u64;
                                let mut r = fi;
                                while r % p as u64 == 0 {
                                    r /= p as u64;
                                    x *= p as u64;
                                }
                                x
                            })
                            .product()
                    })
                    .collect();
                ModulusVector::new(v).expect("positive")
            };
            let (d, e) = (part(true), part(false));
            let (vd, ve) = (cache.get(&d)?, cache.get(&e)?);
            out.record(
                whole.rho == vd.rho * ve.rho && whole.rho_star == vd.rho_star * ve.rho_star,
                || format!("{d} ∘ {e}"),
            );
        }
    }
    Ok(out)
}

/// `ρ*(d) = #U′(d)·φ(a)` for `a ≤ max_a`.
pub fn check_classes(sys: &FormSystem, max_a: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("rho* from primitive classes");
    for d in moduli_with_product_at_most(sys.g(), max_a) {
        let direct = localdensity::rho_star(sys, &d)?;
        let via = lattice::rho_star_via_classes(sys, &d)?;
        out.record(direct == via, || format!("d = {d}: rho* {direct}, classes {via}"));
    }
    Ok(out)
}

/// `ρ(p,…,p) = ρ*(p,…,p) + p^{2(g−1)}` for primes `p ≤ max_p`.
pub fn check_rho_all_p(sys: &FormSystem, max_p: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("rho(p,...,p) = rho*(p,...,p) + p^(2(g-1))");
    let g = sys.g() as u32;
    for p in numutil::primes_below(max_p + 1) {
        let d = ModulusVector::new(vec![p; g as usize])?;
        let v = localdensity::density(sys, &d)?;
        let extra = (p as u128).pow(2 * (g - 1));
        out.record(v.rho == v.rho_star + extra, || {
            format!("p = {p}: rho {}, rho* {}", v.rho, v.rho_star)
        });
    }
    Ok(out)
}

/// ρ*(p^{e₁},…,p^{e_g}) = 0 when two exponents are positive, for `p ∤ D`.
pub fn check_vanishing(sys: &FormSystem, max_p: u64, max_e: u32) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("rho* vanishes on split prime powers");
    let g = sys.g();
    let base = max_e as usize + 1;
    for p in numutil::primes_below(max_p) {
        if !sys.is_sifting_prime(p as u128) {
            continue;
        }
        for code in 0..base.pow(g as u32) {
            let mut c = code;
            let exps: Vec<u32> = (0..g)
                .map(|_| {
                    let e = (c % base) as u32;
                    c /= base;
                    e
                })
                .collect();
            if exps.iter().filter(|&&e| e > 0).count() < 2 {
                continue;
            }
            if p.pow(*exps.iter().max().unwrap()) > localdensity::DEFAULT_CAP {
                continue;
            }
            let d = ModulusVector::new(exps.iter().map(|&e| p.pow(e)).collect())?;
            let v = localdensity::rho_star(sys, &d)?;
            out.record(v == 0, || format!("rho*{d} = {v}"));
        }
    }
    Ok(out)
}

/// `ρ(p·eᵢ) = 1 + (p − 1)(1 + (δᵢ/p))` for `p ∤ D`, `p < max_p`.
pub fn check_one_form(sys: &FormSystem, max_p: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("one-form root count");
    let g = sys.g();
    let deltas = sys.discriminants();
    for p in numutil::primes_below(max_p) {
        if !sys.is_sifting_prime(p as u128) {
            continue;
        }
        for (i, &delta) in deltas.iter().enumerate() {
            let chi = numutil::jacobi(delta, p as i128)? as i128;
            let want = 1 + (p as i128 - 1) * (1 + chi);
            let got = localdensity::rho(sys, &ModulusVector::unit(g, i, p))? as i128;
            out.record(got == want, || format!("p = {p}, form {i}: {got} vs {want}"));
        }
    }
    Ok(out)
}

/// Closed form of ω(p) against both sums from ρ, with `0 ≤ ω(p) < p` and
/// `ω(p) < 2g + 1/p`, for `p < max_p`, `p ∤ D`.
pub fn check_omega(sys: &FormSystem, max_p: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("omega closed form, definition, bounds");
    let two_g = Rational::from_integer(BigInt::from(2 * sys.g()));
    for p in numutil::primes_below(max_p) {
        let p128 = p as u128;
        if !sys.is_sifting_prime(p128) {
            continue;
        }
        let closed = localdensity::omega_closed(sys, p128)?;
        let def = localdensity::omega_from_definition(sys, p128)?;
        let pr = Rational::from_integer(BigInt::from(p));
        let bounds = closed >= Rational::zero()
            && closed < pr
            && closed < two_g.clone() + Rational::new(1.into(), BigInt::from(p));
        out.record(
            closed == def.defining_sum && closed == def.single_form_sum && bounds,
            || {
                format!(
                    "p = {p}: closed {closed}, defining {}, single-form {}",
                    def.defining_sum, def.single_form_sum
                )
            },
        );
    }
    Ok(out)
}

/// `|𝔄_d|` directly and by inclusion–exclusion, for squarefree `d ≤ max_d`
/// prime to `D`, on `X·region`.
pub fn check_count_ad(sys: &FormSystem, max_d: u64, region: &Region) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("sifted counts by inclusion-exclusion");
    for d in 1..=max_d as u128 {
        let f = numutil::factorize(d)?;
        if !f.is_squarefree() || !f.primes().all(|p| sys.is_sifting_prime(p)) {
            continue;
        }
        let c = localdensity::count_ad(sys, d, region)?;
        out.record(c.direct as i128 == c.inclusion_exclusion, || {
            format!("d = {d}: direct {}, inclusion-exclusion {}", c.direct, c.inclusion_exclusion)
        });
    }
    Ok(out)
}

/// Every class modulo `a ≤ max_a` has φ(a) members, the classes partition the
/// primitive pairs, and each minimal vector is shortest and within
/// `|v|² ≤ (2/√3)a`. Bound violations are flagged, not failed.
pub fn check_minimal_vectors(max_a: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("primitive classes and minimal vectors");
    for a in 1..=max_a {
        let cs = lattice::classes(a)?;
        let phi = numutil::euler_phi(a as u128)? as u64;
        let primitive = primitive_pairs(a);
        out.record(cs.len() as u64 * phi == primitive, || {
            format!("a = {a}: {} classes, {primitive} primitive pairs", cs.len())
        });
        for c in &cs {
            let l = lattice::minimal_vector(c);
            out.record(l.determinant == a as u128, || format!("{c:?}: det {}", l.determinant));
            if !l.within_hermite_bound() {
                out.flagged.push(format!("{c:?}: |v|² = {}", l.min_norm2()));
            }
        }
    }
    Ok(out)
}

/// #{(x, y) mod a : gcd(x, y, a) = 1} = a² ∏_{p|a}(1 − p⁻²).
fn primitive_pairs(a: u64) -> u64 {
    let f = numutil::factorize(a as u128).expect("small");
    let mut n = (a as u128) * (a as u128);
    for p in f.primes() {
        n = n / (p * p) * (p * p - 1);
    }
    n as u64
}

/// `gcd(qᵢ(z), D) = 1` for every form.
pub fn check_residue_point(sys: &FormSystem) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("residue point is admissible");
    let d = sys.abs_d() as i128;
    for q in sys.forms() {
        let v = q.eval(sys.z())?;
        let g = numutil::gcd_many(&[v, d])?;
        out.record(g == 1, || format!("gcd({q} at z, D) = {g}"));
    }
    Ok(out)
}

/// Bounds used by the `verify` subcommand.
#[derive(Debug, Clone, Copy)]
pub struct SuiteBounds {
    pub max_a: u64,
    pub max_p_pp: u64,
    pub max_p_vanish: u64,
    pub max_p_one_form: u64,
    pub max_p_omega: u64,
    pub max_d: u64,
    pub x: f64,
    pub max_a_classes: u64,
}

impl Default for SuiteBounds {
    fn default() -> Self {
        Self {
            max_a: 500,
            max_p_pp: 31,
            max_p_vanish: 50,
            max_p_one_form: 200,
            max_p_omega: 100,
            max_d: 105,
            x: 100.0,
            max_a_classes: 200,
        }
    }
}

/// The whole invariant suite on one system.
pub fn run_suite(sys: &FormSystem, b: &SuiteBounds) -> Result<Vec<CheckOutcome>> {
    let region = Region::square(b.x)?;
    Ok(vec![
        check_residue_point(sys)?,
        check_transition(sys, b.max_a)?,
        check_multiplicativity(sys, b.max_a)?,
        check_classes(sys, b.max_a)?,
        check_rho_all_p(sys, b.max_p_pp)?,
        check_vanishing(sys, b.max_p_vanish, 2)?,
        check_one_form(sys, b.max_p_one_form)?,
        check_omega(sys, b.max_p_omega)?,
        check_count_ad(sys, b.max_d, &region)?,
        check_minimal_vectors(b.max_a_classes)?,
    ])
}
