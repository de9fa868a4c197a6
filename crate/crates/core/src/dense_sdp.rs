//! Dense primal-dual interior point method for small programs whose cones
//! are equalities, nonnegative orthants and PSD blocks.
//!
//! Clarabel stalls near relative accuracy 1e-8 (and up to 1e-7 on the
//! complex-embedded moment matrices); this solver reaches the 1e-11 range on
//! the same programs. It uses the HKM direction with a Mehrotra
//! predictor-corrector on the standard pair
//!
//! `(P) min ⟨C, X⟩  s.t. ⟨A_k, X⟩ = b_k, X ⪰ 0`
//! `(D) max bᵀy     s.t. Σ y_k A_k + Z = C, Z ⪰ 0`
//!
//! where `(D)` is the conic program after eliminating its equalities.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::conic::{Cone, ConicProgram, ConicSolution, ConicStatus};
use crate::error::{Error, Result};

/// Outcome above this (relative gap or infeasibility) is reported as failed.
const ALMOST_TOL: f64 = 1e-6;

/// Iterations without a new best residual before giving up.
const STALL_ITERS: u32 = 8;

type Blocks = Vec<DMatrix<f64>>;

struct Standard {
    /// `A_k` per block.
    a: Vec<Blocks>,
    b: DVector<f64>,
    c: Blocks,
    /// `x = x0 + N diag(1/scale) y`.
    x0: DVector<f64>,
    null: DMatrix<f64>,
    scale: Vec<f64>,
    /// Constraint rows behind each block.
    rows: Vec<BlockRows>,
    eq_rows: Vec<usize>,
}

enum BlockRows {
    Psd { start: usize, n: usize },
    Nonneg(usize),
}

fn inner(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn frob(a: &Blocks) -> f64 {
    inner(a, a).sqrt()
}

fn dense_a(prog: &ConicProgram) -> (DMatrix<f64>, DVector<f64>, DVector<f64>, f64) {
    let d = prog.to_dump();
    let mut a = DMatrix::zeros(d.num_rows, d.num_vars);
    for ((&i, &j), &v) in d.a.i.iter().zip(&d.a.j).zip(&d.a.v) {
        a[(i, j)] += v;
    }
    (a, DVector::from_vec(d.b), DVector::from_vec(d.c), d.c0)
}

/// Orthonormal basis of the null space of `e` and the least-norm solution of
/// `e x = f`.
fn null_space(e: &DMatrix<f64>, f: &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = e.ncols();
    if e.nrows() == 0 {
        return Ok((DMatrix::identity(n, n), DVector::zeros(n)));
    }
    let eig = SymmetricEigen::new(e.transpose() * e);
    let top = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cut = 1e-12 * top.max(1e-300);
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] <= cut).collect();
    let range: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > cut).collect();
    let null = DMatrix::from_fn(n, keep.len(), |i, k| eig.eigenvectors[(i, keep[k])]);
    let etf = e.transpose() * f;
    let mut x0 = DVector::zeros(n);
    for &k in &range {
        let v = eig.eigenvectors.column(k);
        x0 += v * (v.dot(&etf) / eig.eigenvalues[k]);
    }
    if (e * &x0 - f).amax() > 1e-9 * (1.0 + f.amax()) {
        return Err(Error::Infeasible("equality constraints are inconsistent".into()));
    }
    Ok((null, x0))
}

fn standard_form(prog: &ConicProgram) -> Result<Standard> {
    let (a, b, c, _) = dense_a(prog);
    let mut rows = Vec::new();
    let mut eq_rows = Vec::new();
    let mut r = 0;
    for cone in prog.cones() {
        match *cone {
            Cone::Zero(n) => eq_rows.extend(r..r + n),
            Cone::Nonneg(n) => rows.extend((r..r + n).map(BlockRows::Nonneg)),
            Cone::Psd(n) => rows.push(BlockRows::Psd { start: r, n }),
            Cone::Soc(_) => return Err(Error::Solver("dense solver handles zero, nonnegative and PSD cones only".into())),
        }
        r += cone.rows();
    }
    let e = DMatrix::from_fn(eq_rows.len(), a.ncols(), |i, j| a[(eq_rows[i], j)]);
    let f = DVector::from_fn(eq_rows.len(), |i, _| b[eq_rows[i]]);
    let (null, x0) = null_space(&e, &f)?;

    // block matrix of a row vector v (a column of A, or b)
    let block_of = |v: &dyn Fn(usize) -> f64| -> Blocks {
        rows.iter()
            .map(|br| match *br {
                BlockRows::Nonneg(row) => DMatrix::from_element(1, 1, v(row)),
                BlockRows::Psd { start, n } => {
                    let mut m = DMatrix::zeros(n, n);
                    let mut k = start;
                    for j in 0..n {
                        for i in 0..=j {
                            let x = if i == j { v(k) } else { v(k) / std::f64::consts::SQRT_2 };
                            m[(i, j)] = x;
                            m[(j, i)] = x;
                            k += 1;
                        }
                    }
                    m
                }
            })
            .collect()
    };
    // S(x) = B − Σ_j x_j A_j; with x = x0 + N u this is C − Σ_k u_k Ã_k
    let ax0 = &a * &x0;
    let cmat = block_of(&|row| b[row] - ax0[row]);
    let an = &a * &null;
    let mut amats = Vec::with_capacity(null.ncols());
    let mut scale = Vec::with_capacity(null.ncols());
    let mut bt = DVector::zeros(null.ncols());
    let nc = null.transpose() * &c;
    for k in 0..null.ncols() {
        let mut m = block_of(&|row| an[(row, k)]);
        let s = frob(&m);
        let s = if s > 0.0 { s } else { 1.0 };
        for blk in &mut m {
            *blk /= s;
        }
        amats.push(m);
        scale.push(s);
        bt[k] = -nc[k] / s;
    }
    Ok(Standard { a: amats, b: bt, c: cmat, x0, null, scale, rows, eq_rows })
}

fn op_a(a: &[Blocks], x: &Blocks) -> DVector<f64> {
    DVector::from_iterator(a.len(), a.iter().map(|ak| inner(ak, x)))
}

fn op_at(a: &[Blocks], y: &DVector<f64>, like: &Blocks) -> Blocks {
    let mut out: Blocks = like.iter().map(|m| DMatrix::zeros(m.nrows(), m.ncols())).collect();
    for (ak, &yk) in a.iter().zip(y.iter()) {
        if yk != 0.0 {
            for (o, m) in out.iter_mut().zip(ak) {
                *o += m * yk;
            }
        }
    }
    out
}

fn combine(a: &Blocks, s: f64, b: &Blocks) -> Blocks {
    a.iter().zip(b).map(|(x, y)| x + y * s).collect()
}

/// Largest step `α` with `x + α d ⪰ 0` (infinite if none binds).
fn max_step(x: &Blocks, d: &Blocks) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.iter().zip(d) {
        let lmin = match xb.clone().cholesky() {
            Some(ch) => {
                let l = ch.l();
                let li = l.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(l.nrows(), l.ncols()));
                let w = sym(&(&li * db * li.transpose()));
                SymmetricEigen::new(w).eigenvalues.min()
            }
            None => return 0.0,
        };
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}

fn inverse(x: &Blocks) -> Option<Blocks> {
    x.iter().map(|m| m.clone().cholesky().map(|c| c.inverse())).collect()
}

struct Measures {
    pobj: f64,
    dobj: f64,
    worst: f64,
}

/// Solves a program with zero, nonnegative and PSD cones to relative
/// accuracy `tol`.
pub fn solve_dense(prog: &ConicProgram, tol: f64, max_iter: u32) -> Result<ConicSolution> {
    let st = standard_form(prog)?;
    let m = st.a.len();
    let n_total: usize = st.c.iter().map(|b| b.nrows()).sum();
    let nf = n_total as f64;

    let norm_b = st.b.norm();
    let norm_c = frob(&st.c);
    let max_a = st.a.iter().map(frob).fold(0.0, f64::max);
    let xi = (0..m).map(|k| (1.0 + st.b[k].abs()) / (1.0 + frob(&st.a[k]))).fold(nf.sqrt().max(10.0), f64::max);
    let eta = nf.sqrt().max(10.0).max(max_a).max(norm_c);
    let ident = |s: f64| -> Blocks { st.c.iter().map(|b| DMatrix::identity(b.nrows(), b.ncols()) * s).collect() };
    let mut x = ident(xi);
    let mut z = ident(eta);
    let mut y = DVector::zeros(m);

    let measure = |x: &Blocks, y: &DVector<f64>, z: &Blocks| -> Measures {
        let rp = &st.b - op_a(&st.a, x);
        let rd = combine(&combine(&st.c, -1.0, &op_at(&st.a, y, &st.c)), -1.0, z);
        let pobj = inner(&st.c, x);
        let dobj = st.b.dot(y);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + norm_b);
        let dinf = frob(&rd) / (1.0 + norm_c);
        Measures { pobj, dobj, worst: gap.max(pinf).max(dinf) }
    };

    let mut best = (f64::INFINITY, y.clone(), x.clone(), 0u32);
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let cur = measure(&x, &y, &z);
        if cur.worst < best.0 {
            best = (cur.worst, y.clone(), x.clone(), it);
        }
        // stop at the target, on divergence, or once progress has stalled
        if cur.worst <= tol || !cur.pobj.is_finite() || !cur.dobj.is_finite() || it > best.3 + STALL_ITERS {
            break;
        }
        let Some(zinv) = inverse(&z) else { break };
        let rp = &st.b - op_a(&st.a, &x);
        let rd = combine(&combine(&st.c, -1.0, &op_at(&st.a, &y, &st.c)), -1.0, &z);
        let mu = inner(&x, &z) / nf;

        // Schur complement M_kl = ⟨A_k, X A_l Z⁻¹⟩
        let g: Vec<Blocks> =
            st.a.iter().map(|al| al.iter().zip(&x).zip(&zinv).map(|((a, xb), zi)| xb * a * zi).collect()).collect();
        let mut schur = DMatrix::from_fn(m, m, |k, l| inner(&st.a[k], &g[l]));
        schur = (&schur + schur.transpose()) * 0.5;
        let diag_max = schur.diagonal().amax();
        let chol = schur.clone().cholesky().or_else(|| {
            let mut reg = schur.clone();
            for k in 0..m {
                reg[(k, k)] += 1e-14 * diag_max.max(1.0);
            }
            reg.cholesky()
        });
        let Some(chol) = chol else { break };
        let xrdz: Blocks = x.iter().zip(&rd).zip(&zinv).map(|((xb, r), zi)| xb * r * zi).collect();
        let a_xrdz = op_a(&st.a, &xrdz);

        let direction = |rc: &Blocks| -> (DVector<f64>, Blocks, Blocks) {
            let h = &rp - op_a(&st.a, rc) + &a_xrdz;
            let dy = chol.solve(&h);
            let dz = combine(&rd, -1.0, &op_at(&st.a, &dy, &st.c));
            let dx: Blocks = rc.iter().zip(&x).zip(&dz).zip(&zinv).map(|(((r, xb), d), zi)| sym(&(r - xb * d * zi))).collect();
            (dy, dx, dz)
        };

        // predictor
        let rc0: Blocks = x.iter().map(|xb| -xb).collect();
        let (_, dxp, dzp) = direction(&rc0);
        let ap = max_step(&x, &dxp).min(1.0);
        let ad = max_step(&z, &dzp).min(1.0);
        let mu_aff = inner(&combine(&x, ap, &dxp), &combine(&z, ad, &dzp)) / nf;
        let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = (mu_aff / mu).max(0.0).powf(expon).min(1.0);

        // corrector
        let rc: Blocks = x
            .iter()
            .zip(&zinv)
            .zip(dxp.iter().zip(&dzp))
            .map(|((xb, zi), (dxb, dzb))| zi * (sigma * mu) - xb - dxb * dzb * zi)
            .collect();
        let (dy, dx, dz) = direction(&rc);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let sp = (gamma * max_step(&x, &dx)).min(1.0);
        let sd = (gamma * max_step(&z, &dz)).min(1.0);
        if sp < 1e-10 && sd < 1e-10 {
            break;
        }
        x = combine(&x, sp, &dx).iter().map(sym).collect();
        z = combine(&z, sd, &dz).iter().map(sym).collect();
        y += dy * sd;
    }
    let cur = measure(&x, &y, &z);
    if cur.worst < best.0 {
        best = (cur.worst, y.clone(), x.clone(), iterations);
    }
    let (worst, y, x, _) = best;

    let u = DVector::from_fn(m, |k, _| y[k] / st.scale[k]);
    let xs = &st.x0 + &st.null * u;
    let objective = prog_objective(prog, xs.as_slice());
    let z = dual_rows(prog, &st, &x)?;
    let status = if worst <= tol {
        ConicStatus::Optimal
    } else if worst <= ALMOST_TOL {
        ConicStatus::AlmostOptimal
    } else {
        ConicStatus::Failed
    };
    Ok(ConicSolution {
        status,
        x: xs.as_slice().to_vec(),
        z,
        objective,
        detail: format!("dense interior point: residual {worst:.2e} after {iterations} iterations"),
    })
}

fn prog_objective(prog: &ConicProgram, x: &[f64]) -> f64 {
    let d = prog.to_dump();
    d.c0 + d.c.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
}

/// Dual vector in the row convention of [`ConicSolution::z`]: cone rows from
/// `X`, equality rows by least squares on `c + Aᵀz = 0`.
fn dual_rows(prog: &ConicProgram, st: &Standard, x: &Blocks) -> Result<Vec<f64>> {
    let (a, _, c, _) = dense_a(prog);
    let mut z = DVector::zeros(a.nrows());
    for (br, xb) in st.rows.iter().zip(x) {
        match *br {
            BlockRows::Nonneg(row) => z[row] = xb[(0, 0)],
            BlockRows::Psd { start, n } => {
                let mut k = start;
                for j in 0..n {
                    for i in 0..=j {
                        z[k] = if i == j { xb[(i, j)] } else { xb[(i, j)] * std::f64::consts::SQRT_2 };
                        k += 1;
                    }
                }
            }
        }
    }
    if !st.eq_rows.is_empty() {
        let resid = -(&c + a.transpose() * &z);
        let et = DMatrix::from_fn(a.ncols(), st.eq_rows.len(), |j, i| a[(st.eq_rows[i], j)]);
        let w = et.svd(true, true).solve(&resid, 1e-12).map_err(|e| Error::Solver(e.to_string()))?;
        for (i, &row) in st.eq_rows.iter().enumerate() {
            z[row] = w[i];
        }
    }
    Ok(z.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{LinExpr, SolverSettings};

    #[test]
    fn small_sdp_matches_closed_form() {
        // min x s.t. [[x, 1], [1, 2]] ⪰ 0 → x = 1/2
        let mut p = ConicProgram::new();
        let x = p.add_var();
        p.minimize(LinExpr::var(x));
        p.add_psd(2, |i, j| match (i, j) {
            (0, 0) => LinExpr::var(x),
            (1, 1) => LinExpr::constant(2.0),
            _ => LinExpr::constant(1.0),
        });
        let s = solve_dense(&p, 1e-12, 100).unwrap();
        assert_eq!(s.status, ConicStatus::Optimal);
        assert!((s.objective - 0.5).abs() < 1e-10, "{}", s.objective);
    }

    #[test]
    fn equalities_and_orthant_agree_with_clarabel() {
        // max-eigenvalue style program with an equality and sign constraints
        let mut p = ConicProgram::new();
        let v = p.add_vars(3);
        p.minimize(LinExpr::var(v[0]) * 1.0 - LinExpr::var(v[1]) * 2.0 + LinExpr::var(v[2]) * 0.5);
        p.add_zero(vec![LinExpr::var(v[0]) + LinExpr::var(v[1]) + LinExpr::var(v[2]) - LinExpr::constant(1.0)]);
        p.add_nonneg(vec![LinExpr::var(v[2]) + LinExpr::constant(0.3)]);
        p.add_psd(3, |i, j| match (i, j) {
            (0, 0) => LinExpr::constant(1.0) + LinExpr::var(v[0]),
            (1, 1) => LinExpr::constant(1.0) - LinExpr::var(v[1]),
            (2, 2) => LinExpr::constant(1.0) + LinExpr::var(v[2]),
            (0, 1) => LinExpr::var(v[2]) * 0.5,
            (1, 2) => LinExpr::var(v[0]) * 0.25,
            _ => LinExpr::constant(0.1),
        });
        let d = solve_dense(&p, 1e-10, 100).unwrap();
        let c = p.solve(&SolverSettings::default()).unwrap();
        assert_eq!(d.status, ConicStatus::Optimal, "{}", d.detail);
        assert!((d.objective - c.objective).abs() < 1e-7, "{} vs {}", d.objective, c.objective);
        // stationarity c + Aᵀz = 0 holds for the recovered duals
        let dump = p.to_dump();
        let mut grad = dump.c.clone();
        for ((&i, &j), &a) in dump.a.i.iter().zip(&dump.a.j).zip(&dump.a.v) {
            grad[j] += a * d.z[i];
        }
        assert!(grad.iter().all(|g| g.abs() < 1e-8), "{grad:?}");
    }

    #[test]
    fn second_order_cones_are_rejected() {
        let mut p = ConicProgram::new();
        let t = p.add_var();
        p.minimize(LinExpr::var(t));
        p.add_soc(vec![LinExpr::var(t), LinExpr::constant(1.0)]);
        assert!(solve_dense(&p, 1e-10, 50).is_err());
    }
}
