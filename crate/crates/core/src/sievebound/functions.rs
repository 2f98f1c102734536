//! σ_κ, F_κ and f_κ.
//!
//! Every right-hand side depends only on values at least one unit in the
//! past, so each function is obtained by quadrature of already-computed data.
//! The axis is cut at the integers and at `α_κ + n`, `β_κ + n`; all three
//! functions are smooth between consecutive cuts and the cut set is invariant
//! under a shift by one, so a delayed argument never straddles a cut.
//! Each piece carries uniform nodes; integrals use three-point Gauss rules
//! per subinterval, with delayed values from cubic interpolation inside one
//! piece.

use super::quadrature::GL3;
use super::{Result, SieveError, SieveParams, DEFAULT_STEP};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone)]
struct Piece {
    start: f64,
    end: f64,
    h: f64,
    values: Vec<f64>,
}

impl Piece {
    fn node(&self, j: usize) -> f64 {
        if j + 1 == self.values.len() {
            self.end
        } else {
            self.start + j as f64 * self.h
        }
    }

    /// Cubic Lagrange through four consecutive nodes of this piece.
    fn interp(&self, x: f64) -> f64 {
        let n = self.values.len() - 1;
        let t = (x - self.start) / self.h;
        let j = (t.floor() as isize).clamp(0, n as isize - 1) as usize;
        let s = j.saturating_sub(1).min(n - 3);
        let ts = t - s as f64;
        let y = &self.values[s..s + 4];
        let (t0, t1, t2, t3) = (ts, ts - 1.0, ts - 2.0, ts - 3.0);
        -y[0] * t1 * t2 * t3 / 6.0 + y[1] * t0 * t2 * t3 / 2.0 - y[2] * t0 * t1 * t3 / 2.0
            + y[3] * t0 * t1 * t2 / 6.0
    }
}

#[derive(Debug, Clone, Default)]
struct Piecewise {
    pieces: Vec<Piece>,
}

impl Piecewise {
    fn end(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.end)
    }

    fn eval(&self, x: f64) -> Option<f64> {
        if self.pieces.is_empty() || x < self.pieces[0].start || x > self.end() {
            return None;
        }
        let i = self.pieces.partition_point(|p| p.end < x);
        let p = &self.pieces[i.min(self.pieces.len() - 1)];
        Some(p.interp(x))
    }
}

/// All cut points in `[0, u_max]`.
fn breakpoints(alpha_k: f64, beta_k: f64, u_max: f64) -> Vec<f64> {
    let mut pts = vec![u_max];
    for base in [0.0, alpha_k, beta_k] {
        let first = base - base.floor();
        let mut n = 0.0;
        while first + n < u_max {
            let x = first + n;
            // keep the constants themselves exact
            let x = [alpha_k, beta_k]
                .into_iter()
                .find(|c| (x - c).abs() < 1e-9)
                .unwrap_or(x);
            pts.push(x);
            n += 1.0;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

fn sigma_initial(kappa: u32, u: f64) -> f64 {
    let fact: f64 = (1..=kappa).map(f64::from).product();
    ((-EULER_GAMMA).exp() * u / 2.0).powi(kappa as i32) / fact
}

/// Uniform samples of one function.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// σ_κ, F_κ and f_κ on `(0, u_max]`.
#[derive(Debug, Clone)]
pub struct SieveFunctionTable {
    pub kappa: u32,
    pub alpha_kappa: f64,
    pub beta_kappa: f64,
    pub step: f64,
    pub u_max: f64,
    sigma: Piecewise,
    big_f: Piecewise,
    small_f: Piecewise,
}

impl SieveFunctionTable {
    pub fn sigma(&self, u: f64) -> Option<f64> {
        if u <= 0.0 {
            return None;
        }
        if u <= 2.0 {
            return Some(sigma_initial(self.kappa, u));
        }
        self.sigma.eval(u)
    }

    /// F_κ(u).
    pub fn upper(&self, u: f64) -> Option<f64> {
        if u <= 0.0 {
            return None;
        }
        if u <= self.alpha_kappa {
            return self.sigma(u).map(|s| 1.0 / s);
        }
        self.big_f.eval(u)
    }

    /// f_κ(u).
    pub fn lower(&self, u: f64) -> Option<f64> {
        if u <= 0.0 || u > self.u_max {
            return None;
        }
        if u <= self.beta_kappa {
            return Some(0.0);
        }
        self.small_f.eval(u)
    }

    /// Every stored node `(u, σ, F, f)`, in increasing `u`.
    pub fn nodes(&self) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::new();
        for ((ps, pf), pl) in self
            .sigma
            .pieces
            .iter()
            .zip(&self.big_f.pieces)
            .zip(&self.small_f.pieces)
        {
            let skip = usize::from(!out.is_empty());
            for j in skip..ps.values.len() {
                out.push((ps.node(j), ps.values[j], pf.values[j], pl.values[j]));
            }
        }
        out
    }

    /// Samples on the uniform grid `step, 2·step, …, u_max`.
    pub fn sample(&self, step: f64) -> (SampledFunction, SampledFunction, SampledFunction) {
        let n = (self.u_max / step).floor() as usize;
        let grid: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
        let get = |f: &dyn Fn(f64) -> Option<f64>| SampledFunction {
            grid: grid.clone(),
            values: grid.iter().map(|&u| f(u).unwrap_or(f64::NAN)).collect(),
        };
        (
            get(&|u| self.sigma(u)),
            get(&|u| self.upper(u)),
            get(&|u| self.lower(u)),
        )
    }
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step <= DEFAULT_STEP) {
        return Err(SieveError::StepTooCoarse(step));
    }
    Ok(())
}

/// σ_κ on `(0, u_max]`; the returned table carries σ only.
pub fn solve_sigma(kappa: u32, u_max: f64, step: f64) -> Result<SampledFunction> {
    check_step(step)?;
    if kappa == 0 {
        return Err(SieveError::BadParams("kappa must be positive".into()));
    }
    // matching constants beyond u_max leave F and f untouched
    let t = integrate_system(kappa, u_max + 2.0, u_max + 1.0, u_max, step);
    let n = (u_max / step).floor() as usize;
    let grid: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
    let values = grid.iter().map(|&u| t.sigma(u).unwrap_or(f64::NAN)).collect();
    Ok(SampledFunction { grid, values })
}

/// σ_κ, F_κ, f_κ for the given constants, checked for consistency.
pub fn solve_ff(params: &SieveParams, u_max: f64, step: f64) -> Result<SieveFunctionTable> {
    check_step(step)?;
    params.validate()?;
    let need = params.alpha_kappa + 2.0;
    if u_max < need {
        return Err(SieveError::TableTooShort { u_max, need });
    }
    let t = integrate_system(params.kappa, params.alpha_kappa, params.beta_kappa, u_max, step);
    check_consistency(&t, 1e-2)?;
    Ok(t)
}

/// f must stay in `[0, 1]` and F above 1, up to `tol`.
fn check_consistency(t: &SieveFunctionTable, tol: f64) -> Result<()> {
    for (u, _, big, small) in t.nodes() {
        if u <= 0.0 {
            continue;
        }
        if !(small >= -tol && small <= 1.0 + tol) {
            return Err(SieveError::InconsistentParams { u, value: small });
        }
        if u > t.alpha_kappa && !(big >= 1.0 - tol) {
            return Err(SieveError::InconsistentParams { u, value: big });
        }
    }
    Ok(())
}

/// Integration without parameter checks; `step` may be coarse.
pub fn integrate_system(
    kappa: u32,
    alpha_k: f64,
    beta_k: f64,
    u_max: f64,
    step: f64,
) -> SieveFunctionTable {
    let k = kappa as i32;
    let kf = kappa as f64;
    let mut t = SieveFunctionTable {
        kappa,
        alpha_kappa: alpha_k,
        beta_kappa: beta_k,
        step,
        u_max,
        sigma: Piecewise::default(),
        big_f: Piecewise::default(),
        small_f: Piecewise::default(),
    };
    let cuts = breakpoints(alpha_k, beta_k, u_max);
    for w in cuts.windows(2) {
        let (x, y) = (w[0], w[1]);
        // 3·2^k subintervals, so that halving the step exactly doubles them
        let mut n = 3usize;
        while (y - x) / n as f64 > step {
            n *= 2;
        }
        let h = (y - x) / n as f64;
        let node = |j: usize| if j == n { y } else { x + j as f64 * h };

        // σ: (u^{-κ}σ)' = -κ u^{-κ-1} σ(u-2)
        let sigma: Vec<f64> = if y <= 2.0 {
            (0..=n).map(|j| sigma_initial(kappa, node(j))).collect()
        } else {
            let mut acc = t.sigma(x).expect("σ known at the left cut") / x.powi(k);
            let mut out = vec![acc * x.powi(k)];
            for j in 0..n {
                let (a, b) = (node(j), node(j + 1));
                acc += gauss(a, b, |s| {
                    -kf * s.powi(-k - 1) * t.sigma(s - 2.0).expect("delayed σ")
                });
                out.push(acc * b.powi(k));
            }
            out
        };
        let piece = |values: Vec<f64>| Piece {
            start: x,
            end: y,
            h,
            values,
        };
        t.sigma.pieces.push(piece(sigma.clone()));

        // F: 1/σ up to α_κ, then (u^κ F)' = κ u^{κ-1} f(u-1)
        let big: Vec<f64> = if y <= alpha_k {
            sigma.iter().map(|s| 1.0 / s).collect()
        } else {
            let mut acc = x.powi(k) * t.upper(x).expect("F known at the left cut");
            let mut out = vec![acc / x.powi(k)];
            for j in 0..n {
                let (a, b) = (node(j), node(j + 1));
                acc += gauss(a, b, |s| {
                    kf * s.powi(k - 1) * t.lower(s - 1.0).expect("delayed f")
                });
                out.push(acc / b.powi(k));
            }
            out
        };

        // f: 0 up to β_κ, then (u^κ f)' = κ u^{κ-1} F(u-1)
        let small: Vec<f64> = if y <= beta_k {
            vec![0.0; n + 1]
        } else {
            let mut acc = x.powi(k) * t.lower(x).expect("f known at the left cut");
            let mut out = vec![acc / x.powi(k)];
            for j in 0..n {
                let (a, b) = (node(j), node(j + 1));
                acc += gauss(a, b, |s| {
                    kf * s.powi(k - 1) * t.upper(s - 1.0).expect("delayed F")
                });
                out.push(acc / b.powi(k));
            }
            out
        };
        t.big_f.pieces.push(piece(big));
        t.small_f.pieces.push(piece(small));
    }
    t
}

fn gauss(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL3.iter().map(|&(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

/// Coefficients `c₀, …, c_{2κ−1}` of the polynomial `q` with
/// `u q′(u) = (κ − 1) q(u) + κ q(u + 1)`, normalized by `c_{2κ−1} = 1`.
pub fn adjoint_polynomial(kappa: u32) -> Vec<f64> {
    let k = kappa as i64;
    let deg = (2 * k - 1) as usize;
    let mut c = vec![0.0; deg + 1];
    c[deg] = 1.0;
    // (n − 2κ + 1) cₙ = κ Σ_{m>n} C(m, n) c_m
    for n in (0..deg).rev() {
        let mut sum = 0.0;
        let mut binom = 1.0; // C(m, n) for m = n
        for m in n + 1..=deg {
            binom = binom * m as f64 / (m - n) as f64;
            sum += binom * c[m];
        }
        c[n] = k as f64 * sum / (n as i64 - 2 * k + 1) as f64;
    }
    c
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &x| acc * u + x)
}

/// `u q(u) R(u) − κ ∫_{u−1}^{u} q(t+1) R(t) dt` for `R = F − f`, divided by
/// `u q(u)`. Independent of `u > α_κ`; zero exactly when `F − f` has no
/// `u^{−2κ}` component.
pub fn difference_invariant(table: &SieveFunctionTable, u: f64) -> Option<f64> {
    let q = adjoint_polynomial(table.kappa);
    let diff = |t: f64| Some(table.upper(t)? - table.lower(t)?);
    let scale = u * horner(&q, u);
    let mut missing = false;
    let integral = super::quadrature::integrate(
        |t| match diff(t) {
            Some(r) => horner(&q, t + 1.0) * r,
            None => {
                missing = true;
                0.0
            }
        },
        u - 1.0,
        u,
        1e-13,
        0.0,
        400,
    );
    if missing {
        return None;
    }
    Some((scale * diff(u)? - table.kappa as f64 * integral.value) / scale)
}

/// Constants adjusted so that `F` and `f` both tend to 1 and `F − f` has no
/// algebraic tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedConstants {
    pub kappa: u32,
    pub alpha_kappa: f64,
    pub beta_kappa: f64,
    /// `(F + f)/2 − 1` far out, and the normalized difference invariant,
    /// before and after refinement.
    pub initial_residual: (f64, f64),
    pub residual: (f64, f64),
    /// Whether the refined value begins with the digits it started from.
    pub alpha_digits_kept: bool,
    pub beta_digits_kept: bool,
    pub iterations: usize,
}

fn truncates_to(refined: f64, given: f64) -> bool {
    refined >= given - 1e-12 && refined < given + 1e-4
}

/// Newton iteration on `(α_κ, β_κ)`.
pub fn refine_constants(kappa: u32, alpha0: f64, beta0: f64) -> Result<RefinedConstants> {
    const STEP: f64 = 1e-3;
    const SPAN: f64 = 25.0;
    let residual = |a: f64, b: f64| -> Result<(f64, f64)> {
        let far = a + SPAN;
        let t = integrate_system(kappa, a, b, far, STEP);
        let limit = 0.5 * (t.upper(far).unwrap() + t.lower(far).unwrap()) - 1.0;
        let inv = difference_invariant(&t, a + 1.5).ok_or(SieveError::NoConvergence)?;
        Ok((limit, inv))
    };
    let size = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let (mut a, mut b) = (alpha0, beta0);
    let initial = residual(a, b)?;
    let mut r = initial;
    let mut iterations = 0;
    while iterations < 20 && size(r) > 1e-13 {
        iterations += 1;
        let e = 1e-6;
        let ra = residual(a + e, b)?;
        let rb = residual(a, b + e)?;
        let j = [
            [(ra.0 - r.0) / e, (rb.0 - r.0) / e],
            [(ra.1 - r.1) / e, (rb.1 - r.1) / e],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(SieveError::NoConvergence);
        }
        let da = (r.0 * j[1][1] - r.1 * j[0][1]) / det;
        let db = (j[0][0] * r.1 - j[1][0] * r.0) / det;
        if !(b - db > 2.0 && a - da > b - db) {
            return Err(SieveError::NoConvergence);
        }
        let next = residual(a - da, b - db)?;
        if size(next) >= size(r) {
            break;
        }
        a -= da;
        b -= db;
        r = next;
    }
    if size(r) > 1e-9 {
        return Err(SieveError::NoConvergence);
    }
    Ok(RefinedConstants {
        kappa,
        alpha_kappa: a,
        beta_kappa: b,
        initial_residual: initial,
        residual: r,
        alpha_digits_kept: truncates_to(a, alpha0),
        beta_digits_kept: truncates_to(b, beta0),
        iterations,
    })
}
