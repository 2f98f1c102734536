//! The almost-prime lower bound and its minimization over `(u, v)`.

use rayon::prelude::*;

use super::functions::{solve_ff, SieveFunctionTable};
use super::quadrature::integrate;
use super::{Result, SieveError, SieveParams, CONSTANTS, DEFAULT_STEP};

/// `αμu − 1 + κ/f(αv) ∫₁^{v/u} F(αv − s)(1 − us/v) ds/s`.
pub fn r_bound(params: &SieveParams, u: f64, v: f64, table: &SieveFunctionTable) -> Result<f64> {
    let a = params.alpha;
    if !(1.0 / a < u && u < v && params.beta_kappa < a * v) {
        return Err(SieveError::ConstraintViolated { u, v });
    }
    let av = a * v;
    if av > table.u_max {
        return Err(SieveError::FOutOfRange(av));
    }
    let f_av = table.lower(av).ok_or(SieveError::FOutOfRange(av))?;
    let upper = v / u;
    let mut missing = None;
    let integral = integrate(
        |s| match table.upper(av - s) {
            Some(big) => big * (1.0 - u * s / v) / s,
            None => {
                missing = Some(av - s);
                0.0
            }
        },
        1.0,
        upper,
        1e-8,
        1e-14,
        2000,
    );
    if let Some(x) = missing {
        return Err(SieveError::FOutOfRange(x));
    }
    let kappa = params.kappa as f64;
    Ok(a * params.mu * u - 1.0 + kappa / f_av * integral.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub grid_step: f64,
    pub grid_max: f64,
    pub tolerance: f64,
    pub starts: usize,
    pub integration_step: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grid_step: 0.25,
            grid_max: 60.0,
            tolerance: 1e-6,
            starts: 4,
            integration_step: DEFAULT_STEP,
        }
    }
}

/// The located infimum of the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveOptimum {
    pub r_m: u32,
    pub u: f64,
    pub v: f64,
    pub bound: f64,
    /// The bound lies within 10⁻⁴ of an integer.
    pub near_integer: bool,
}

pub fn minimize_r(params: &SieveParams) -> Result<SieveOptimum> {
    minimize_r_with(params, &MinimizeOptions::default())
}

pub fn minimize_r_with(params: &SieveParams, opts: &MinimizeOptions) -> Result<SieveOptimum> {
    params.validate()?;
    let table = solve_ff(
        params,
        (params.alpha * opts.grid_max + 1.0).max(params.alpha_kappa + 2.0),
        opts.integration_step,
    )?;
    minimize_on_table(params, opts, &table)
}

pub(crate) fn minimize_on_table(
    params: &SieveParams,
    opts: &MinimizeOptions,
    table: &SieveFunctionTable,
) -> Result<SieveOptimum> {
    let objective = |p: [f64; 2]| r_bound(params, p[0], p[1], table).unwrap_or(f64::INFINITY);

    let lo = 1.0 / params.alpha;
    let n = ((opts.grid_max - lo) / opts.grid_step).floor() as usize;
    let axis: Vec<f64> = (1..=n).map(|k| lo + k as f64 * opts.grid_step).collect();
    let pairs: Vec<[f64; 2]> = axis
        .iter()
        .flat_map(|&u| axis.iter().map(move |&v| [u, v]))
        .filter(|&[u, v]| u < v && params.beta_kappa < params.alpha * v)
        .collect();
    let mut scored: Vec<([f64; 2], f64)> = pairs
        .into_par_iter()
        .map(|p| (p, objective(p)))
        .filter(|(_, r)| r.is_finite())
        .collect();
    if scored.is_empty() {
        return Err(SieveError::NoFeasiblePoint);
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0[0].total_cmp(&b.0[0])));

    let best = scored
        .iter()
        .take(opts.starts.max(1))
        .map(|&(p, _)| nelder_mead(&objective, p, opts.grid_step, opts.tolerance))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");
    let ([u, v], bound) = best;
    let r_m = bound.floor() as u32 + 1;
    let near_integer = (bound - bound.round()).abs() < 1e-4;
    Ok(SieveOptimum {
        r_m,
        u,
        v,
        bound,
        near_integer,
    })
}

/// Nelder–Mead in two variables; infeasible points score `+∞`.
fn nelder_mead(
    f: &(impl Fn([f64; 2]) -> f64 + ?Sized),
    start: [f64; 2],
    size: f64,
    tol: f64,
) -> ([f64; 2], f64) {
    let mut simplex = [
        start,
        [start[0] + size, start[1]],
        [start[0], start[1] + size],
    ];
    let mut values = simplex.map(f);
    for _ in 0..2000 {
        let mut order = [0, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        let spread = (values[2] - values[0]).abs();
        let width = (1..3)
            .map(|i| (simplex[i][0] - simplex[0][0]).abs().max((simplex[i][1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        if width < tol && (spread < tol || !values[2].is_finite()) {
            break;
        }

        let c = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| [c[0] + t * (simplex[2][0] - c[0]), c[1] + t * (simplex[2][1] - c[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                values[2] = fe;
            } else {
                simplex[2] = xr;
                values[2] = fr;
            }
            continue;
        }
        if fr < values[1] {
            simplex[2] = xr;
            values[2] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[2] {
            let x = along(-0.5);
            (x, f(x))
        } else {
            let x = along(0.5);
            (x, f(x))
        };
        if fc < values[2].min(fr) {
            simplex[2] = xc;
            values[2] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..3 {
            simplex[i] = [
                simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
            ];
            values[i] = f(simplex[i]);
        }
    }
    let i = (0..3)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("three vertices");
    (simplex[i], values[i])
}

/// One line of the `r_M` table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveTableRow {
    pub kappa: u32,
    pub alpha_kappa: f64,
    pub beta_kappa: f64,
    pub optimum: SieveOptimum,
}

/// `minimize_r` for `κ = 2..10` with `α = 1`, `μ = κ`, in parallel.
pub fn sieve_table(constants: Option<&[(u32, f64, f64)]>) -> Result<Vec<SieveTableRow>> {
    let constants = constants.unwrap_or(&CONSTANTS);
    constants
        .par_iter()
        .map(|&(kappa, a, b)| {
            let params = SieveParams::new(kappa, a, b, 1.0, kappa as f64)?;
            Ok(SieveTableRow {
                kappa,
                alpha_kappa: a,
                beta_kappa: b,
                optimum: minimize_r(&params)?,
            })
        })
        .collect()
}
