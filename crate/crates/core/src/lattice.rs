//! Classes of primitive residue pairs under unit scaling, the lattices
//! `G(𝒜) = ℤy + aℤ²` with their shortest vectors, lattice-point counts over
//! convex regions, and a measured level-of-distribution diagnostic.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::forms::{FormSystem, ReducedForm};
use crate::localdensity::{self, DensityError, ModulusVector, Result};
use crate::numutil;
use crate::region::Region;

/// Default bound on the class modulus `a`.
pub const DEFAULT_CLASS_CAP: u64 = 10_000;
/// Default bound on the number of integer points in a region's bounding box.
pub const DEFAULT_REGION_CAP: u128 = 100_000_000;

/// The class of a primitive pair modulo `a` under multiplication by units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrimitiveClass {
    /// Lexicographically least member.
    pub representative: (u64, u64),
    pub modulus: u64,
}

impl PrimitiveClass {
    /// All `λy mod a` for units `λ`, sorted.
    pub fn members(&self) -> Vec<(u64, u64)> {
        let a = self.modulus;
        let (y1, y2) = self.representative;
        let mut out: Vec<(u64, u64)> = units(a)
            .into_iter()
            .map(|l| (mul(l, y1, a), mul(l, y2, a)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn lattice(&self) -> ReducedLattice {
        minimal_vector(self)
    }
}

fn mul(x: u64, y: u64, m: u64) -> u64 {
    ((x as u128 * y as u128) % m as u128) as u64
}

/// Units modulo `a`; `{0}` when `a = 1`.
fn units(a: u64) -> Vec<u64> {
    if a == 1 {
        return vec![0];
    }
    (1..a).filter(|&l| numutil::gcd(l as u128, a as u128) == 1).collect()
}

fn check_class_cap(a: u128, cap: u64) -> Result<u64> {
    if a > cap as u128 {
        return Err(DensityError::CapExceeded {
            modulus: a,
            cap: cap as u128,
        });
    }
    Ok(a as u64)
}

struct Bitmap(Vec<u64>);

impl Bitmap {
    fn new(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)])
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
}

/// Scan `[0,a)²` in lexicographic order; the first unvisited pair accepted by
/// `keep` opens a class, whose orbit is then marked.
fn scan_classes(a: u64, keep: impl Fn(u64, u64) -> bool) -> Vec<PrimitiveClass> {
    let primes: Vec<u64> = numutil::factorize(a as u128)
        .map(|f| f.primes().map(|p| p as u64).collect())
        .unwrap_or_default();
    let us = units(a);
    let n = a as usize;
    let mut seen = Bitmap::new(n * n);
    let mut out = Vec::new();
    for y1 in 0..a {
        for y2 in 0..a {
            let idx = y1 as usize * n + y2 as usize;
            if seen.get(idx) {
                continue;
            }
            if primes.iter().any(|&p| y1 % p == 0 && y2 % p == 0) || !keep(y1, y2) {
                continue;
            }
            for &l in &us {
                let (m1, m2) = (mul(l, y1, a), mul(l, y2, a));
                seen.set(m1 as usize * n + m2 as usize);
            }
            out.push(PrimitiveClass {
                representative: (y1, y2),
                modulus: a,
            });
        }
    }
    out
}

/// `U(a)`: every class of primitive pairs modulo `a`.
pub fn classes(a: u64) -> Result<Vec<PrimitiveClass>> {
    classes_capped(a, DEFAULT_CLASS_CAP)
}

pub fn classes_capped(a: u64, cap: u64) -> Result<Vec<PrimitiveClass>> {
    if a == 0 {
        return Err(DensityError::ZeroEntry);
    }
    check_class_cap(a as u128, cap)?;
    Ok(scan_classes(a, |_, _| true))
}

fn reduced_forms(sys: &FormSystem, d: &ModulusVector) -> Vec<ReducedForm> {
    sys.forms()
        .iter()
        .zip(d.entries())
        .map(|(q, &di)| q.reduced(di))
        .collect()
}

fn in_lambda(forms: &[ReducedForm], x: (i128, i128)) -> bool {
    forms.iter().all(|q| {
        let m = q.modulus() as i128;
        q.eval(x.0.rem_euclid(m) as u64, x.1.rem_euclid(m) as u64) == 0
    })
}

/// `U′(d)`: the classes modulo `a = d₁⋯d_g` contained in `Λ*_d`.
pub fn classes_in_lambda_star(sys: &FormSystem, d: &ModulusVector) -> Result<Vec<PrimitiveClass>> {
    classes_in_lambda_star_capped(sys, d, DEFAULT_CLASS_CAP)
}

pub fn classes_in_lambda_star_capped(
    sys: &FormSystem,
    d: &ModulusVector,
    cap: u64,
) -> Result<Vec<PrimitiveClass>> {
    if d.len() != sys.g() {
        return Err(DensityError::WrongLength {
            got: d.len(),
            want: sys.g(),
        });
    }
    let a = check_class_cap(d.product().ok_or(DensityError::Overflow)?, cap)?;
    let forms = reduced_forms(sys, d);
    Ok(scan_classes(a, |y1, y2| {
        in_lambda(&forms, (y1 as i128, y2 as i128))
    }))
}

/// `#U′(d)·φ(a)`.
pub fn rho_star_via_classes(sys: &FormSystem, d: &ModulusVector) -> Result<u128> {
    let n = classes_in_lambda_star(sys, d)?.len() as u128;
    let a = d.product().ok_or(DensityError::Overflow)?;
    Ok(n * numutil::euler_phi(a)?)
}

/// A reduced basis of `G(𝒜)` and its shortest vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducedLattice {
    pub basis: [(i128, i128); 2],
    pub determinant: u128,
    pub minimal_vector: (i128, i128),
}

impl ReducedLattice {
    pub fn min_norm2(&self) -> i128 {
        norm2(self.minimal_vector)
    }

    pub fn min_length(&self) -> f64 {
        (self.min_norm2() as f64).sqrt()
    }

    /// `|v|² ≤ (2/√3)·det`, the sharp planar bound.
    pub fn within_hermite_bound(&self) -> bool {
        // |v|⁴ · 3 ≤ 4 det²
        let n = self.min_norm2();
        let det = self.determinant as i128;
        3 * n * n <= 4 * det * det
    }
}

fn norm2(v: (i128, i128)) -> i128 {
    v.0 * v.0 + v.1 * v.1
}

fn dot(u: (i128, i128), v: (i128, i128)) -> i128 {
    u.0 * v.0 + u.1 * v.1
}

/// Flip so that the first nonzero coordinate is positive.
fn normalize_sign(v: (i128, i128)) -> (i128, i128) {
    if v.0 < 0 || (v.0 == 0 && v.1 < 0) {
        (-v.0, -v.1)
    } else {
        v
    }
}

fn tie_key(v: (i128, i128)) -> (i128, i128, i128, i128) {
    (v.0.abs(), v.1.abs(), v.0, v.1)
}

/// Hermite basis `{(g₁, s·y₂), (0, h)}` of `ℤy + aℤ²`.
fn hermite_basis(y: (i128, i128), a: i128) -> [(i128, i128); 2] {
    let (g1, s, _) = numutil::ext_gcd(y.0, a);
    let b1 = (g1, (s * y.1).rem_euclid(a));
    // vectors of the lattice with first coordinate 0
    let k = a / g1;
    let h = numutil::gcd(((k * y.1).rem_euclid(a)) as u128, a as u128) as i128;
    [b1, (0, h)]
}

/// Lagrange–Gauss reduction: `|b₁| ≤ |b₂|` and `2|⟨b₁,b₂⟩| ≤ |b₁|²`.
fn gauss_reduce(mut b1: (i128, i128), mut b2: (i128, i128)) -> [(i128, i128); 2] {
    if norm2(b1) > norm2(b2) {
        std::mem::swap(&mut b1, &mut b2);
    }
    loop {
        let n1 = norm2(b1);
        // nearest integer to ⟨b₁,b₂⟩/|b₁|²
        let t = dot(b1, b2);
        let mu = (2 * t + n1).div_euclid(2 * n1);
        b2 = (b2.0 - mu * b1.0, b2.1 - mu * b1.1);
        if norm2(b2) >= n1 {
            return [b1, b2];
        }
        std::mem::swap(&mut b1, &mut b2);
    }
}

/// The shortest nonzero vector of `G(𝒜) = ℤy + aℤ²`, sign-normalized, with
/// ties broken on `(|v₁|, |v₂|, v₁, v₂)`.
pub fn minimal_vector(cls: &PrimitiveClass) -> ReducedLattice {
    let a = cls.modulus as i128;
    let y = (cls.representative.0 as i128, cls.representative.1 as i128);
    let [h1, h2] = hermite_basis(y, a);
    let det = (h1.0 * h2.1 - h1.1 * h2.0).unsigned_abs();
    let [b1, b2] = gauss_reduce(h1, h2);
    // in a reduced basis every shortest vector is among these
    let candidates = [
        b1,
        b2,
        (b1.0 + b2.0, b1.1 + b2.1),
        (b1.0 - b2.0, b1.1 - b2.1),
    ];
    let best = norm2(b1);
    let minimal_vector = candidates
        .iter()
        .filter(|&&v| norm2(v) == best)
        .map(|&v| normalize_sign(v))
        .min_by_key(|&v| tie_key(v))
        .expect("b1 is always a candidate");
    ReducedLattice {
        basis: [b1, b2],
        determinant: det,
        minimal_vector,
    }
}

pub(crate) fn check_region_cap(region: &Region, cap: u128) -> Result<()> {
    let area = region.bounding_area();
    if area > cap {
        return Err(DensityError::CapExceeded {
            modulus: area,
            cap,
        });
    }
    Ok(())
}

/// `#(Λ_d ∩ R ∩ Ψ)`.
pub fn count_lattice_region(sys: &FormSystem, d: &ModulusVector, region: &Region) -> Result<u128> {
    count_lattice_region_capped(sys, d, region, DEFAULT_REGION_CAP)
}

pub fn count_lattice_region_capped(
    sys: &FormSystem,
    d: &ModulusVector,
    region: &Region,
    cap: u128,
) -> Result<u128> {
    if d.len() != sys.g() {
        return Err(DensityError::WrongLength {
            got: d.len(),
            want: sys.g(),
        });
    }
    check_region_cap(region, cap)?;
    let forms = reduced_forms(sys, d);
    let m = sys.abs_d() as i128;
    let rows = region.residue_rows(sys.abs_d(), sys.z());
    Ok(rows
        .par_iter()
        .map(|&(y, first, last)| {
            let mut n = 0u128;
            let mut x = first;
            while x <= last {
                if in_lambda(&forms, (x, y)) {
                    n += 1;
                }
                x += m;
            }
            n
        })
        .sum())
}

/// One row of the level-of-distribution table.
#[derive(Debug, Clone, PartialEq)]
pub struct LodRow {
    pub d: Vec<u64>,
    pub a: u128,
    pub rho: u128,
    /// max over the family of `|count − main|`
    pub max_error: f64,
    /// `vol(R)·ρ(d)/(aD)²` for the largest region of the family
    pub main_term: f64,
    /// shortest `|v(𝒜)|` over `U′(d)`; `None` when `U′(d)` is empty or `a`
    /// exceeds the class cap
    pub min_vec_len: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LodReport {
    pub q: Vec<u64>,
    pub rows: Vec<LodRow>,
    /// `T̂ = Σ_d max_error`
    pub total: f64,
}

impl LodReport {
    pub fn to_csv(&self) -> String {
        let g = self.q.len();
        let mut header: Vec<String> = (1..=g).map(|i| format!("d{i}")).collect();
        header.extend(["a", "max_error", "main_term", "min_vec_len"].map(String::from));
        let mut out = header.join(",");
        out.push('\n');
        for r in &self.rows {
            let mut cells: Vec<String> = r.d.iter().map(u64::to_string).collect();
            cells.push(r.a.to_string());
            cells.push(format!("{:.6}", r.max_error));
            cells.push(format!("{:.6}", r.main_term));
            cells.push(r.min_vec_len.map_or(String::new(), |v| format!("{v:.6}")));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// All `d` with `dᵢ ≤ Qᵢ` and `(dᵢ, D) = 1`, in lexicographic order.
pub fn moduli_up_to(sys: &FormSystem, q: &[u64]) -> Vec<ModulusVector> {
    let allowed: Vec<Vec<u64>> = q
        .iter()
        .map(|&qi| {
            (1..=qi)
                .filter(|&di| numutil::gcd(di as u128, sys.abs_d()) == 1)
                .collect()
        })
        .collect();
    let mut out: Vec<Vec<u64>> = vec![vec![]];
    for choices in &allowed {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |&c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|v| ModulusVector::new(v).expect("entries are positive"))
        .collect()
}

/// `T̂(M, Q)` with the supremum over regions replaced by a maximum over
/// `family`.
pub fn lod_diagnostic(sys: &FormSystem, q: &[u64], family: &[Region]) -> Result<LodReport> {
    if q.len() != sys.g() {
        return Err(DensityError::WrongLength {
            got: q.len(),
            want: sys.g(),
        });
    }
    for r in family {
        check_region_cap(r, DEFAULT_REGION_CAP)?;
    }
    let dd = sys.abs_d() as f64;
    let biggest = family
        .iter()
        .map(Region::volume)
        .fold(0.0f64, f64::max);
    let rows = moduli_up_to(sys, q)
        .into_par_iter()
        .map(|d| -> Result<LodRow> {
            let a = d.product().ok_or(DensityError::Overflow)?;
            let rho = localdensity::density_multiplicative(sys, &d)?.rho;
            let density = rho as f64 / (a as f64 * dd).powi(2);
            let mut max_error = 0.0f64;
            for r in family {
                let n = count_lattice_region(sys, &d, r)? as f64;
                max_error = max_error.max((n - r.volume() * density).abs());
            }
            let min_vec_len = if a <= DEFAULT_CLASS_CAP as u128 {
                classes_in_lambda_star(sys, &d)?
                    .iter()
                    .map(|c| minimal_vector(c).min_length())
                    .reduce(f64::min)
            } else {
                None
            };
            Ok(LodRow {
                d: d.entries().to_vec(),
                a,
                rho,
                max_error,
                main_term: biggest * density,
                min_vec_len,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = rows.iter().map(|r| r.max_error).sum();
    Ok(LodReport {
        q: q.to_vec(),
        rows,
        total,
    })
}

/// Disks of radius `M/2π·{1, ½, ¼}` and boxes of perimeter `M` (square and
/// 2:1) and `M/2` (square), around each center.
pub fn region_family(m: f64, centers: &[[f64; 2]]) -> Result<Vec<Region>> {
    let mut out = Vec::new();
    let r0 = m / (2.0 * PI);
    for &c in centers {
        for k in [1.0, 0.5, 0.25] {
            out.push(Region::disk(c, r0 * k)?);
        }
        for (w, h) in [(m / 4.0, m / 4.0), (m / 3.0, m / 6.0), (m / 8.0, m / 8.0)] {
            let min = [c[0] - w / 2.0, c[1] - h / 2.0];
            let max = [c[0] + w / 2.0, c[1] + h / 2.0];
            out.push(Region::rect(min, max)?);
        }
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_growth_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
