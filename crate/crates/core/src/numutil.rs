//! Exact integer arithmetic shared by the rest of the crate.
//!
//! Everything here is pure. Primality is deterministic Miller-Rabin below
//! 2^64 and BPSW (strong base-2 plus strong Lucas) above it; factorization is
//! trial division followed by Brent's variant of Pollard rho.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumError {
    #[error("empty input")]
    Empty,
    #[error("jacobi symbol needs an odd positive modulus, got {0}")]
    BadJacobiModulus(i128),
    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u128, u128),
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("cannot factor zero")]
    Zero,
    #[error("arithmetic overflow")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, NumError>;

pub fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// gcd of the absolute values. All zeros gives 0.
pub fn gcd_many(values: &[i128]) -> Result<u128> {
    if values.is_empty() {
        return Err(NumError::Empty);
    }
    Ok(values.iter().fold(0u128, |g, &v| gcd(g, v.unsigned_abs())))
}

pub fn lcm(a: u128, b: u128) -> Option<u128> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / gcd(a, b)).checked_mul(b)
}

/// Extended Euclid: `(g, x, y)` with `a*x + b*y = g >= 0`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: i128, m: u128) -> Option<u128> {
    if m == 0 || m > i128::MAX as u128 {
        return None;
    }
    let mi = m as i128;
    let (g, x, _) = ext_gcd(a.rem_euclid(mi), mi);
    (g == 1).then(|| x.rem_euclid(mi) as u128)
}

pub fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(m > 0);
    let (a, b) = (a % m, b % m);
    if let Some(p) = a.checked_mul(b) {
        return p % m;
    }
    // double-and-add; every intermediate stays below m
    let add = |x: u128, y: u128| if x >= m - y { x - (m - y) } else { x + y };
    let (mut acc, mut base, mut e) = (0u128, a, b);
    while e > 0 {
        if e & 1 == 1 {
            acc = add(acc, base);
        }
        base = add(base, base);
        e >>= 1;
    }
    acc
}

pub fn pow_mod(base: u128, mut exp: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u128;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    result
}

/// Jacobi symbol `(a/n)` for odd `n >= 1`.
pub fn jacobi(a: i128, n: i128) -> Result<i8> {
    if n <= 0 || n % 2 == 0 {
        return Err(NumError::BadJacobiModulus(n));
    }
    let mut n = n as u128;
    let mut a = a.rem_euclid(n as i128) as u128;
    let mut sign = 1i8;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            sign = -sign;
        }
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    Ok(if n == 1 { sign } else { 0 })
}

/// Chinese remaindering of `(residue, modulus)` pairs with pairwise coprime moduli.
pub fn crt(parts: &[(i128, u128)]) -> Result<(u128, u128)> {
    if parts.is_empty() {
        return Err(NumError::Empty);
    }
    let mut r = 0u128;
    let mut m = 1u128;
    for &(ri, mi) in parts {
        if mi == 0 {
            return Err(NumError::ZeroModulus);
        }
        if gcd(m, mi) != 1 {
            return Err(NumError::NotCoprime(m, mi));
        }
        let new_m = m.checked_mul(mi).ok_or(NumError::Overflow)?;
        if new_m > i128::MAX as u128 {
            return Err(NumError::Overflow);
        }
        let ri = ri.rem_euclid(mi as i128) as u128;
        // r + m*t ≡ ri (mod mi)
        let inv = inv_mod((m % mi) as i128, mi).expect("coprime moduli");
        let diff = (ri + mi - r % mi) % mi;
        let t = mul_mod(diff, inv, mi);
        r += mul_mod(m, t, new_m);
        r %= new_m;
        m = new_m;
    }
    Ok((r, m))
}

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn strong_probable_prime(n: u128, base: u128) -> bool {
    let mut d = n - 1;
    let s = d.trailing_zeros();
    d >>= s;
    let mut x = pow_mod(base, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

fn is_square(n: u128) -> bool {
    let r = isqrt(n);
    r * r == n
}

pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x.checked_mul(x).is_none_or(|v| v > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|v| v <= n) {
        x += 1;
    }
    x
}

/// Strong Lucas probable-prime test with Selfridge parameters.
fn strong_lucas(n: u128) -> bool {
    let mut d: i128 = 5;
    loop {
        match jacobi(d, n as i128).expect("odd n") {
            -1 => break,
            0 if d.unsigned_abs() != n => return false,
            _ => {}
        }
        d = if d > 0 { -(d + 2) } else { -(d - 2) };
        if d.unsigned_abs() > 1000 && is_square(n) {
            return false;
        }
    }
    let p: u128 = 1;
    let q: i128 = (1 - d) / 4;
    let qm = q.rem_euclid(n as i128) as u128;
    let dm = d.rem_euclid(n as i128) as u128;
    let inv2 = n.div_ceil(2);
    let sub = |a: u128, b: u128| if a >= b { a - b } else { n - (b - a) };
    let add = |a: u128, b: u128| if a >= n - b { a - (n - b) } else { a + b };

    let mut k = n + 1;
    let s = k.trailing_zeros();
    k >>= s;
    // binary ladder for U_k, V_k, Q^k
    let (mut u, mut v, mut qk) = (0u128, 2u128, 1u128);
    for bit in (0..128 - k.leading_zeros()).rev() {
        // double
        u = mul_mod(u, v, n);
        v = sub(mul_mod(v, v, n), add(qk, qk));
        qk = mul_mod(qk, qk, n);
        if (k >> bit) & 1 == 1 {
            // increment index by one
            let pu = mul_mod(p, u, n);
            let nu = mul_mod(add(pu, v), inv2, n);
            let du = mul_mod(dm, u, n);
            let nv = mul_mod(add(mul_mod(p, v, n), du), inv2, n);
            u = nu;
            v = nv;
            qk = mul_mod(qk, qm, n);
        }
    }
    if u == 0 || v == 0 {
        return true;
    }
    for _ in 1..s {
        v = sub(mul_mod(v, v, n), add(qk, qk));
        qk = mul_mod(qk, qk, n);
        if v == 0 {
            return true;
        }
    }
    false
}

/// Deterministic below 2^64; BPSW above.
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = p as u128;
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    if n <= u64::MAX as u128 {
        return SMALL_PRIMES
            .iter()
            .all(|&b| strong_probable_prime(n, b as u128));
    }
    strong_probable_prime(n, 2) && strong_lucas(n)
}

/// Brent's cycle-finding rho; returns a nontrivial factor of composite `n`.
fn pollard_brent(n: u128) -> u128 {
    if n % 2 == 0 {
        return 2;
    }
    for c in 1u128.. {
        let f = |x: u128| {
            let y = mul_mod(x, x, n);
            if y >= n - c {
                y - (n - c)
            } else {
                y + c
            }
        };
        let (mut x, mut y, mut ys) = (2u128, 2u128, 2u128);
        let mut q = 1u128;
        let mut g = 1u128;
        let mut r = 1u64;
        let m = 128u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += m;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        // cycle failure: retry with the next constant
    }
    unreachable!()
}

/// Prime factorization as `(prime, exponent)` pairs with increasing primes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrimeFactorization {
    factors: Vec<(u128, u32)>,
}

impl PrimeFactorization {
    pub fn factors(&self) -> &[(u128, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u128> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn value(&self) -> Option<u128> {
        self.factors.iter().try_fold(1u128, |acc, &(p, e)| {
            acc.checked_mul(p.checked_pow(e)?)
        })
    }

    /// Ω: prime factors with multiplicity.
    pub fn omega_big(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }

    /// ν (also written ω): distinct prime factors.
    pub fn nu(&self) -> u32 {
        self.factors.len() as u32
    }

    pub fn mobius(&self) -> i8 {
        if self.factors.iter().any(|&(_, e)| e > 1) {
            0
        } else if self.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn euler_phi(&self) -> u128 {
        self.factors
            .iter()
            .map(|&(p, e)| (p - 1) * p.pow(e - 1))
            .product()
    }

    pub fn num_divisors(&self) -> u128 {
        self.factors.iter().map(|&(_, e)| e as u128 + 1).product()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// All positive divisors, ascending.
    pub fn divisors(&self) -> Vec<u128> {
        let mut divs = vec![1u128];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1u128;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }

    fn push(&mut self, p: u128) {
        match self.factors.iter_mut().find(|(q, _)| *q == p) {
            Some((_, e)) => *e += 1,
            None => self.factors.push((p, 1)),
        }
    }
}

impl fmt::Display for PrimeFactorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") })
            .collect();
        write!(f, "{}", parts.join(" * "))
    }
}

const TRIAL_LIMIT: u128 = 10_000;

pub fn factorize(n: u128) -> Result<PrimeFactorization> {
    if n == 0 {
        return Err(NumError::Zero);
    }
    let mut out = PrimeFactorization::default();
    let mut n = n;
    for p in [2u128, 3, 5] {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
    }
    // wheel mod 30
    let mut p = 7u128;
    let steps = [4u128, 2, 4, 2, 4, 6, 2, 6];
    let mut i = 0;
    while p < TRIAL_LIMIT && p * p <= n {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
        p += steps[i];
        i = (i + 1) % 8;
    }
    if n > 1 {
        let mut stack = vec![n];
        let mut large = Vec::new();
        while let Some(m) = stack.pop() {
            if m == 1 {
                continue;
            }
            if is_prime(m) {
                large.push(m);
                continue;
            }
            if is_square(m) {
                let r = isqrt(m);
                stack.push(r);
                stack.push(r);
                continue;
            }
            let f = pollard_brent(m);
            stack.push(f);
            stack.push(m / f);
        }
        large.sort_unstable();
        for q in large {
            out.push(q);
        }
    }
    out.factors.sort_unstable();
    Ok(out)
}

pub fn omega_big(n: u128) -> Result<u32> {
    Ok(factorize(n)?.omega_big())
}

pub fn mobius(n: u128) -> Result<i8> {
    Ok(factorize(n)?.mobius())
}

pub fn euler_phi(n: u128) -> Result<u128> {
    Ok(factorize(n)?.euler_phi())
}

pub fn nu(n: u128) -> Result<u32> {
    Ok(factorize(n)?.nu())
}

pub fn num_divisors(n: u128) -> Result<u128> {
    Ok(factorize(n)?.num_divisors())
}

/// Primes `p < bound` in increasing order (sieve of Eratosthenes).
pub fn primes_below(bound: u64) -> Vec<u64> {
    if bound < 3 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut composite = vec![false; n];
    let mut i = 2;
    while i * i < n {
        if !composite[i] {
            (i * i..n).step_by(i).for_each(|j| composite[j] = true);
        }
        i += 1;
    }
    (2..n).filter(|&k| !composite[k]).map(|k| k as u64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd_many(&[12, 18]).unwrap(), 6);
        assert_eq!(gcd_many(&[0, 0]).unwrap(), 0);
        assert_eq!(gcd_many(&[-12, 18, 0]).unwrap(), 6);
        // q1(1,0) = 1 for x^2 + y^2, D = 216
        assert_eq!(gcd_many(&[1, 216]).unwrap(), 1);
        assert_eq!(gcd_many(&[]), Err(NumError::Empty));
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi(2, 7).unwrap(), 1);
        assert_eq!(jacobi(-1, 7).unwrap(), -1);
        assert_eq!(jacobi(0, 5).unwrap(), 0);
        assert_eq!(jacobi(5, 1).unwrap(), 1);
        assert!(jacobi(3, 8).is_err());
        assert!(jacobi(3, 0).is_err());
        assert!(jacobi(3, -7).is_err());
    }

    #[test]
    fn jacobi_matches_euler_criterion() {
        for p in primes_below(200).into_iter().filter(|&p| p > 2) {
            let p = p as u128;
            for a in 0..p {
                let e = pow_mod(a, (p - 1) / 2, p);
                let expect = if e == 0 { 0 } else if e == 1 { 1 } else { -1 };
                assert_eq!(jacobi(a as i128, p as i128).unwrap(), expect, "({a}/{p})");
            }
        }
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(91).unwrap().factors(), &[(7, 1), (13, 1)]);
        assert!(factorize(1).unwrap().factors().is_empty());
        assert_eq!(factorize(360).unwrap().factors(), &[(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factorize(0), Err(NumError::Zero));
    }

    #[test]
    fn factorize_large() {
        // product of two primes near 2^31 and 2^40
        let (p, q) = (2_147_483_647u128, 1_099_511_627_791u128);
        assert!(is_prime(p) && is_prime(q));
        assert_eq!(factorize(p * q).unwrap().factors(), &[(p, 1), (q, 1)]);
        // 2^61 - 1 and 2^89 - 1 are Mersenne primes
        let m61 = (1u128 << 61) - 1;
        let m89 = (1u128 << 89) - 1;
        assert!(is_prime(m61));
        assert!(is_prime(m89));
        assert!(!is_prime(m61 * 3));
        let f = factorize(m61 * 1_000_003).unwrap();
        assert_eq!(f.factors(), &[(1_000_003, 1), (m61, 1)]);
        let f = factorize(10_007u128.pow(2) * 1_000_000_007u128 * 998_244_353).unwrap();
        assert_eq!(f.value(), Some(10_007u128.pow(2) * 1_000_000_007u128 * 998_244_353));
        assert_eq!(f.omega_big(), 4);
    }

    #[test]
    fn carmichael_and_strong_pseudoprimes_are_rejected() {
        for n in [561u128, 1105, 1729, 2047, 3215031751, 3825123056546413051] {
            assert!(!is_prime(n), "{n}");
        }
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega_big(360).unwrap(), 6);
        assert_eq!(omega_big(1).unwrap(), 0);
        assert_eq!(omega_big(97).unwrap(), 1);
    }

    #[test]
    fn arithmetic_functions() {
        assert_eq!(euler_phi(1).unwrap(), 1);
        assert_eq!(euler_phi(36).unwrap(), 12);
        assert_eq!(mobius(30).unwrap(), -1);
        assert_eq!(mobius(12).unwrap(), 0);
        assert_eq!(mobius(1).unwrap(), 1);
        assert_eq!(nu(360).unwrap(), 3);
        assert_eq!(num_divisors(360).unwrap(), 24);
        assert_eq!(factorize(12).unwrap().divisors(), vec![1, 2, 3, 4, 6, 12]);
    }

    #[test]
    fn crt_examples() {
        assert_eq!(crt(&[(1, 2), (1, 3)]).unwrap(), (1, 6));
        assert_eq!(crt(&[(0, 5)]).unwrap(), (0, 5));
        assert_eq!(crt(&[(1, 8), (4, 27)]).unwrap(), (193, 216));
        assert!(matches!(crt(&[(1, 4), (1, 6)]), Err(NumError::NotCoprime(..))));
    }

    #[test]
    fn prime_list_agrees_with_primality_test() {
        let listed = primes_below(5000);
        let tested: Vec<u64> = (0..5000).filter(|&n| is_prime(n as u128)).collect();
        assert_eq!(listed, tested);
        assert!(primes_below(2).is_empty());
        assert_eq!(primes_below(3), vec![2]);
    }

    #[test]
    fn crt_against_exhaustive_scan() {
        let expect = (0..216u128).find(|x| x % 8 == 1 && x % 27 == 4).unwrap();
        assert_eq!(expect, 193);
    }

    #[test]
    fn trial_range_is_prime_consistent() {
        let by_trial = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n as u128), by_trial(n), "{n}");
        }
    }

    proptest! {
        #[test]
        fn factorization_multiplies_back(n in 1u128..1_000_000) {
            let f = factorize(n).unwrap();
            prop_assert_eq!(f.value(), Some(n));
            let ps: Vec<u128> = f.primes().collect();
            prop_assert!(ps.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(ps.iter().all(|&p| is_prime(p)));
        }

        #[test]
        fn omega_big_is_additive(m in 1u128..1_000_000, n in 1u128..1_000_000) {
            prop_assert_eq!(omega_big(m * n).unwrap(), omega_big(m).unwrap() + omega_big(n).unwrap());
        }

        #[test]
        fn crt_reduces_to_inputs(r1 in -1000i128..1000, r2 in -1000i128..1000, r3 in 0i128..100) {
            let parts = [(r1, 7u128), (r2, 16), (r3, 45)];
            let (r, m) = crt(&parts).unwrap();
            prop_assert_eq!(m, 7 * 16 * 45);
            for (ri, mi) in parts {
                prop_assert_eq!(r % mi, ri.rem_euclid(mi as i128) as u128);
            }
        }

        #[test]
        fn mul_mod_matches_wide(a in any::<u64>(), b in any::<u64>(), m in 1u64..) {
            let expect = (a as u128 * b as u128) % m as u128;
            prop_assert_eq!(mul_mod(a as u128, b as u128, m as u128), expect);
        }
    }
}
