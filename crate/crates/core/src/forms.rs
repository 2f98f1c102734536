//! Binary quadratic forms `a x² + 2b xy + c y²` and systems of them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numutil::{self, NumError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error("a form system needs at least one form")]
    NoForms,
    #[error("form {index} ({form}) is reducible over the integers")]
    ReducibleForm { index: usize, form: QuadraticForm },
    #[error("form {index} has leading coefficient {a}, which is not 1 mod 4")]
    NonstandardLeadingCoefficient { index: usize, a: i64 },
    #[error("the system modulus D vanishes")]
    DZero,
    #[error("no residue pair mod {p} keeps every form value prime to {p}")]
    NoAdmissibleResidue { p: u128 },
    #[error("residue point ({0}, {1}) shares a factor with D")]
    InadmissiblePoint(i128, i128),
    #[error("arithmetic overflow")]
    Overflow,
    #[error(transparent)]
    Num(#[from] NumError),
}

/// `a x² + 2b xy + c y²`; note that `b` is half the middle coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadraticForm {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        Self { a, b, c }
    }

    /// δ = b² − ac.
    pub fn discriminant(&self) -> i128 {
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        b * b - a * c
    }

    /// Irreducible over ℤ iff δ is not a perfect square.
    pub fn is_irreducible(&self) -> bool {
        let d = self.discriminant();
        if d < 0 {
            return true;
        }
        let r = numutil::isqrt(d as u128);
        r * r != d as u128
    }

    pub fn eval(&self, x: (i128, i128)) -> Result<i128, FormError> {
        let (x1, x2) = x;
        let a = (self.a as i128).checked_mul(x1.checked_mul(x1).ok_or(FormError::Overflow)?);
        let b = (2 * self.b as i128)
            .checked_mul(x1)
            .and_then(|v| v.checked_mul(x2));
        let c = (self.c as i128).checked_mul(x2.checked_mul(x2).ok_or(FormError::Overflow)?);
        a.zip(b)
            .zip(c)
            .and_then(|((a, b), c)| a.checked_add(b)?.checked_add(c))
            .ok_or(FormError::Overflow)
    }

    /// Coefficients reduced into `[0, m)`, for repeated modular evaluation.
    pub fn reduced(&self, m: u64) -> ReducedForm {
        let m_i = m as i128;
        let r = |v: i128| v.rem_euclid(m_i) as u64;
        ReducedForm {
            a: r(self.a as i128),
            b2: r(2 * self.b as i128),
            c: r(self.c as i128),
            m,
        }
    }

    /// Value at `x` reduced into `[0, m)`.
    pub fn eval_mod(&self, x: (i128, i128), m: u64) -> u64 {
        let m_i = m as i128;
        self.reduced(m)
            .eval(x.0.rem_euclid(m_i) as u64, x.1.rem_euclid(m_i) as u64)
    }

    /// Form obtained by substituting `(x, y) -> (αx + βy, γx + δy)`.
    pub fn transform(&self, m: [[i64; 2]; 2]) -> Option<QuadraticForm> {
        let [[al, be], [ga, de]] = m.map(|r| r.map(|v| v as i128));
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        let na = a * al * al + 2 * b * al * ga + c * ga * ga;
        let nb = a * al * be + b * (al * de + be * ga) + c * ga * de;
        let nc = a * be * be + 2 * b * be * de + c * de * de;
        Some(QuadraticForm::new(
            na.try_into().ok()?,
            nb.try_into().ok()?,
            nc.try_into().ok()?,
        ))
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x^2 + {}xy + {}y^2", self.a, 2 * self.b as i128, self.c)
    }
}

/// A form with coefficients reduced modulo `m`.
#[derive(Debug, Clone, Copy)]
pub struct ReducedForm {
    a: u64,
    b2: u64,
    c: u64,
    m: u64,
}

impl ReducedForm {
    /// `x1, x2` must already lie in `[0, m)`.
    #[inline]
    pub fn eval(&self, x1: u64, x2: u64) -> u64 {
        let m = self.m;
        if m == 1 {
            return 0;
        }
        if m < (1 << 20) {
            // every term fits below 2^62
            let t = self.a * (x1 * x1 % m) + self.b2 * (x1 * x2 % m) + self.c * (x2 * x2 % m);
            return t % m;
        }
        let m = m as u128;
        let (x1, x2) = (x1 as u128, x2 as u128);
        let t1 = numutil::mul_mod(self.a as u128, x1 * x1 % m, m);
        let t2 = numutil::mul_mod(self.b2 as u128, x1 * x2 % m, m);
        let t3 = numutil::mul_mod(self.c as u128, x2 * x2 % m, m);
        ((t1 + t2 + t3) % m) as u64
    }

    pub fn modulus(&self) -> u64 {
        self.m
    }
}

/// `Res(Q₁, Q₂)` for `Qᵢ(Y) = qᵢ(Y, 1)`.
pub fn resultant(q1: &QuadraticForm, q2: &QuadraticForm) -> i128 {
    let (a1, b1, c1) = (q1.a as i128, q1.b as i128, q1.c as i128);
    let (a2, b2, c2) = (q2.a as i128, q2.b as i128, q2.c as i128);
    let t = a1 * c2 - a2 * c1;
    t * t - 4 * (a1 * b2 - a2 * b1) * (b1 * c2 - b2 * c1)
}

/// Forms `q₁..q_g`, the modulus `D` and a residue point `z` with every
/// `qᵢ(z)` prime to `D`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormSystem {
    forms: Vec<QuadraticForm>,
    d: i128,
    z: (i128, i128),
    strict_mode: bool,
    d_primes: Vec<u128>,
}

impl FormSystem {
    /// Validates the forms, computes `D` and searches for `z`.
    pub fn build(forms: Vec<QuadraticForm>, strict_mode: bool) -> Result<Self, FormError> {
        Self::build_inner(forms, strict_mode, None)
    }

    /// As [`FormSystem::build`] but with a caller-supplied residue point.
    pub fn build_with_z(
        forms: Vec<QuadraticForm>,
        strict_mode: bool,
        z: (i128, i128),
    ) -> Result<Self, FormError> {
        Self::build_inner(forms, strict_mode, Some(z))
    }

    fn build_inner(
        forms: Vec<QuadraticForm>,
        strict_mode: bool,
        z: Option<(i128, i128)>,
    ) -> Result<Self, FormError> {
        if forms.is_empty() {
            return Err(FormError::NoForms);
        }
        for (index, q) in forms.iter().enumerate() {
            if !q.is_irreducible() {
                return Err(FormError::ReducibleForm { index, form: *q });
            }
            if strict_mode && (q.a as i128).rem_euclid(4) != 1 {
                return Err(FormError::NonstandardLeadingCoefficient { index, a: q.a });
            }
        }
        let d = system_modulus(&forms)?;
        if d == 0 {
            return Err(FormError::DZero);
        }
        let d_primes: Vec<u128> = numutil::factorize(d.unsigned_abs())?.primes().collect();
        let mut sys = FormSystem {
            forms,
            d,
            z: (0, 0),
            strict_mode,
            d_primes,
        };
        sys.z = match z {
            Some(z) => {
                if !sys.is_admissible(z) {
                    return Err(FormError::InadmissiblePoint(z.0, z.1));
                }
                let m = sys.abs_d() as i128;
                (z.0.rem_euclid(m), z.1.rem_euclid(m))
            }
            None => sys.find_residue_point()?,
        };
        Ok(sys)
    }

    fn find_residue_point(&self) -> Result<(i128, i128), FormError> {
        let mut xs = Vec::with_capacity(self.d_primes.len());
        let mut ys = Vec::with_capacity(self.d_primes.len());
        for &p in &self.d_primes {
            let (x, y) = self
                .admissible_mod_prime(p)
                .ok_or(FormError::NoAdmissibleResidue { p })?;
            xs.push((x as i128, p));
            ys.push((y as i128, p));
        }
        let (x, _) = numutil::crt(&xs)?;
        let (y, _) = numutil::crt(&ys)?;
        let m = self.abs_d();
        Ok(((x % m) as i128, (y % m) as i128))
    }

    /// First pair in lexicographic order on `[0,p)²` where no form vanishes mod `p`.
    fn admissible_mod_prime(&self, p: u128) -> Option<(u128, u128)> {
        let p64 = u64::try_from(p).ok()?;
        let reduced: Vec<ReducedForm> = self.forms.iter().map(|q| q.reduced(p64)).collect();
        (0..p64)
            .flat_map(|x| (0..p64).map(move |y| (x, y)))
            .find(|&(x, y)| reduced.iter().all(|q| q.eval(x, y) != 0))
            .map(|(x, y)| (x as u128, y as u128))
    }

    /// gcd(qᵢ(z), |D|) = 1 for every form.
    pub fn is_admissible(&self, z: (i128, i128)) -> bool {
        self.d_primes.iter().all(|&p| {
            let p = p as u64;
            self.forms.iter().all(|q| q.eval_mod(z, p) != 0)
        })
    }

    pub fn forms(&self) -> &[QuadraticForm] {
        &self.forms
    }

    pub fn g(&self) -> usize {
        self.forms.len()
    }

    /// Signed modulus `D`.
    pub fn d(&self) -> i128 {
        self.d
    }

    pub fn abs_d(&self) -> u128 {
        self.d.unsigned_abs()
    }

    pub fn z(&self) -> (i128, i128) {
        self.z
    }

    pub fn strict_mode(&self) -> bool {
        self.strict_mode
    }

    /// Primes dividing `D`: the complement of the sifting range.
    pub fn excluded_primes(&self) -> &[u128] {
        &self.d_primes
    }

    /// True iff `p ∤ D`.
    pub fn is_sifting_prime(&self, p: u128) -> bool {
        self.abs_d() % p != 0
    }

    /// `x ≡ z (mod |D|)`.
    pub fn in_psi(&self, x: (i128, i128)) -> bool {
        let m = self.abs_d() as i128;
        x.0.rem_euclid(m) == self.z.0 && x.1.rem_euclid(m) == self.z.1
    }

    pub fn discriminants(&self) -> Vec<i128> {
        self.forms.iter().map(|q| q.discriminant()).collect()
    }
}

/// `D = ∏_{p ≤ 2g} p · ∏ aₖ cₖ δₖ · ∏_{i<j} Res(qᵢ, qⱼ)`.
pub fn system_modulus(forms: &[QuadraticForm]) -> Result<i128, FormError> {
    let g = forms.len() as u64;
    let mul = |acc: i128, v: i128| acc.checked_mul(v).ok_or(FormError::Overflow);
    let mut d: i128 = 1;
    for p in numutil::primes_below(2 * g + 1) {
        d = mul(d, p as i128)?;
    }
    for q in forms {
        d = mul(d, q.a as i128)?;
        d = mul(d, q.c as i128)?;
        d = mul(d, q.discriminant())?;
    }
    for (i, qi) in forms.iter().enumerate() {
        for qj in &forms[i + 1..] {
            d = mul(d, resultant(qi, qj))?;
        }
    }
    Ok(d)
}

/// The two-form system `{x² + y², x² − 2y²}` with `D = 216`.
pub fn worked_system() -> FormSystem {
    FormSystem::build(
        vec![QuadraticForm::new(1, 0, 1), QuadraticForm::new(1, 0, -2)],
        true,
    )
    .expect("worked system is valid")
}
