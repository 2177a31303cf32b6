//! Modeling layer over the interior-point core.
//!
//! Problems are stated over real scalar variables. Complex vectors and
//! Hermitian matrices are registered as groups of real scalars, and complex
//! Hermitian LMIs are lowered to their real symmetric embedding.

mod ipm;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::linalg::{c64, from_real_embedding, real_embedding, CMat, CVec};

use ipm::{mat_axpy, Blk, Cone, ConeVec, GBlock, IpmStatus, StandardForm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    /// Residual and relative-gap level accepted when the iteration stalls.
    pub reduced_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            feas_tol: 1e-8,
            gap_tol: 1e-7,
            reduced_tol: 1e-6,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Stalled short of the full tolerances but within `reduced_tol`.
    OptimalInaccurate,
    Infeasible,
    Unbounded,
    MaxIter,
}

/// Affine expression `constant + Σ coef · x[var]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(v: usize) -> Self {
        LinExpr {
            constant: 0.0,
            terms: vec![(v, 1.0)],
        }
    }

    pub fn term(mut self, v: usize, coef: f64) -> Self {
        self.terms.push((v, coef));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * x[*v]).sum::<f64>()
    }
}

/// Handle to a complex vector variable stored as real and imaginary parts.
#[derive(Debug, Clone)]
pub struct ComplexVar {
    pub re: Vec<usize>,
    pub im: Vec<usize>,
}

impl ComplexVar {
    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    /// Real scalar indices in the order `re_0, im_0, re_1, im_1, ...`.
    pub fn scalars(&self) -> Vec<usize> {
        self.re.iter().zip(&self.im).flat_map(|(a, b)| [*a, *b]).collect()
    }

    pub fn value(&self, x: &[f64]) -> CVec {
        CVec::from_iterator(
            self.len(),
            self.re.iter().zip(&self.im).map(|(a, b)| c64::new(x[*a], x[*b])),
        )
    }
}

/// Handle to an `n x n` Hermitian matrix variable.
#[derive(Debug, Clone)]
pub struct HermVar {
    pub n: usize,
    diag: Vec<usize>,
    /// Strictly upper entries `(i, j, re, im)`.
    off: Vec<(usize, usize, usize, usize)>,
}

impl HermVar {
    /// Basis matrices with `X = Σ x[k] E_k`.
    pub fn basis(&self) -> Vec<(usize, CMat)> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for (i, v) in self.diag.iter().enumerate() {
            let mut e = CMat::zeros(n, n);
            e[(i, i)] = c64::new(1.0, 0.0);
            out.push((*v, e));
        }
        for &(i, j, re, im) in &self.off {
            let mut e = CMat::zeros(n, n);
            e[(i, j)] = c64::new(1.0, 0.0);
            e[(j, i)] = c64::new(1.0, 0.0);
            out.push((re, e));
            let mut e = CMat::zeros(n, n);
            e[(i, j)] = c64::new(0.0, 1.0);
            e[(j, i)] = c64::new(0.0, -1.0);
            out.push((im, e));
        }
        out
    }

    pub fn diag_var(&self, i: usize) -> usize {
        self.diag[i]
    }

    pub fn value(&self, x: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for (i, v) in self.diag.iter().enumerate() {
            m[(i, i)] = c64::new(x[*v], 0.0);
        }
        for &(i, j, re, im) in &self.off {
            let v = c64::new(x[re], x[im]);
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
        m
    }

    /// Real scalar `Re tr(C X)` for Hermitian `C`, as a linear expression.
    pub fn trace_with(&self, c: &CMat) -> LinExpr {
        let mut e = LinExpr::default();
        for (v, b) in self.basis() {
            let coef = (c * &b).trace().re;
            if coef != 0.0 {
                e.terms.push((v, coef));
            }
        }
        e
    }
}

#[derive(Debug, Clone)]
pub enum Constraint {
    /// `expr >= 0`.
    Nonneg(LinExpr),
    /// `‖x‖₂ <= t`.
    Soc { t: LinExpr, x: Vec<LinExpr> },
    /// `constant + Σ x[var] F ⪰ 0`, all matrices Hermitian.
    Lmi {
        constant: CMat,
        terms: Vec<(usize, CMat)>,
    },
    /// `Σ w_i² <= t`, lowered to a rotated cone.
    QuadLe { t: LinExpr, w: Vec<LinExpr> },
}

/// Minimization problem over real scalar variables.
#[derive(Debug, Clone, Default)]
pub struct ConicProblem {
    nvars: usize,
    names: Vec<String>,
    objective: LinExpr,
    maximize: bool,
    constraints: Vec<Constraint>,
    equalities: Vec<LinExpr>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.nvars
    }

    pub fn add_scalar(&mut self, name: &str) -> usize {
        self.names.push(name.to_string());
        self.nvars += 1;
        self.nvars - 1
    }

    pub fn add_complex_vector(&mut self, name: &str, n: usize) -> ComplexVar {
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for i in 0..n {
            re.push(self.add_scalar(&format!("re {name}[{i}]")));
            im.push(self.add_scalar(&format!("im {name}[{i}]")));
        }
        ComplexVar { re, im }
    }

    /// Registers a Hermitian matrix variable; `psd` also constrains it to the PSD cone.
    pub fn add_hermitian(&mut self, name: &str, n: usize, psd: bool) -> HermVar {
        let diag = (0..n)
            .map(|i| self.add_scalar(&format!("{name}[{i},{i}]")))
            .collect();
        let mut off = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let re = self.add_scalar(&format!("re {name}[{i},{j}]"));
                let im = self.add_scalar(&format!("im {name}[{i},{j}]"));
                off.push((i, j, re, im));
            }
        }
        let h = HermVar { n, diag, off };
        if psd {
            self.constraints.push(Constraint::Lmi {
                constant: CMat::zeros(n, n),
                terms: h.basis(),
            });
        }
        h
    }

    pub fn minimize(&mut self, objective: LinExpr) {
        self.objective = objective;
        self.maximize = false;
    }

    pub fn maximize(&mut self, objective: LinExpr) {
        self.objective = LinExpr {
            constant: -objective.constant,
            terms: objective.terms.iter().map(|(v, c)| (*v, -c)).collect(),
        };
        self.maximize = true;
    }

    /// Adds a constraint and returns its index for dual lookup.
    pub fn add(&mut self, c: Constraint) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn add_equality(&mut self, expr: LinExpr) {
        self.equalities.push(expr);
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn var_name(&self, v: usize) -> &str {
        &self.names[v]
    }
}

/// Dual multiplier of one constraint.
#[derive(Debug, Clone)]
pub enum Dual {
    Vector(DVector<f64>),
    /// Complex Hermitian multiplier `Z` with `Re tr(F Z)` pairing.
    Matrix(CMat),
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub relative_gap: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub duals: Vec<Dual>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    /// Fails with [`Error::Solver`] or [`Error::Infeasible`] unless optimal,
    /// possibly at reduced accuracy.
    pub fn require_optimal(self, what: &str) -> Result<Self> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::OptimalInaccurate => {
                log::debug!(
                    "{what}: accepted at reduced accuracy (relative gap {:.2e}, residual {:.2e})",
                    self.relative_gap,
                    self.kkt_residual
                );
                Ok(self)
            }
            SolveStatus::Infeasible => Err(Error::Infeasible(format!("{what}: no feasible point"))),
            SolveStatus::Unbounded => Err(Error::Solver(format!("{what}: unbounded"))),
            SolveStatus::MaxIter => Err(Error::Solver(format!(
                "{what}: iteration limit reached (relative gap {:.2e}, residual {:.2e})",
                self.relative_gap, self.kkt_residual
            ))),
        }
    }
}

fn dense_row(n: usize, e: &LinExpr) -> (DVector<f64>, f64) {
    let mut row = DVector::zeros(n);
    for (v, c) in &e.terms {
        row[*v] += c;
    }
    (row, e.constant)
}

/// Affine substitution `x = x0 + N y` eliminating equality constraints.
struct Reduction {
    x0: DVector<f64>,
    null: DMatrix<f64>,
}

fn reduce_equalities(n: usize, eqs: &[LinExpr]) -> Result<Option<Reduction>> {
    if eqs.is_empty() {
        return Ok(None);
    }
    let m = eqs.len();
    let mut a = DMatrix::zeros(m, n);
    let mut b = DVector::zeros(m);
    for (i, e) in eqs.iter().enumerate() {
        let (row, c) = dense_row(n, e);
        a.row_mut(i).copy_from(&row.transpose());
        b[i] = -c;
    }
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-12 * smax.max(1.0) * (m.max(n) as f64);
    let x0 = svd
        .solve(&b, tol)
        .map_err(|e| Error::Solver(format!("equality elimination: {e}")))?;
    if (&a * &x0 - &b).norm() > 1e-8 * b.norm().max(1.0) {
        return Err(Error::Infeasible("inconsistent equality constraints".into()));
    }
    let vt = svd.v_t.expect("requested V");
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    // rows of V' beyond the rank span the null space; complete with
    // Gram-Schmidt when the thin SVD did not return them
    let mut basis: Vec<DVector<f64>> = (0..rank).map(|i| vt.row(i).transpose()).collect();
    let mut null: Vec<DVector<f64>> = Vec::new();
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        for _ in 0..2 {
            for q in &basis {
                let p = q.dot(&v);
                v.axpy(-p, q, 1.0);
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            v /= nv;
            basis.push(v.clone());
            null.push(v);
        }
    }
    let null = if null.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&null)
    };
    Ok(Some(Reduction { x0, null }))
}

struct Lowered {
    form: StandardForm,
    /// `(block index, kind)` per user constraint.
    map: Vec<(usize, LoweredKind)>,
    objective_offset: f64,
}

#[derive(Clone, Copy)]
enum LoweredKind {
    Scalar(usize),
    Vector,
    Rotated,
    Lmi,
}

fn lower(prob: &ConicProblem, red: Option<&Reduction>) -> Lowered {
    let n = prob.nvars;
    let (c_full, c0) = dense_row(n, &prob.objective);
    let ny = red.map_or(n, |r| r.null.ncols());

    // row vector a'x + k  ->  in reduced variables: (N'a)'y + (a'x0 + k)
    let reduce_row = |row: &DVector<f64>, k: f64| -> (DVector<f64>, f64) {
        match red {
            None => (row.clone(), k),
            Some(r) => (r.null.transpose() * row, k + row.dot(&r.x0)),
        }
    };

    let (c, off) = reduce_row(&c_full, c0);
    let mut cones = Vec::new();
    let mut g = Vec::new();
    let mut h = Vec::new();
    let mut map = Vec::new();

    let make_rows = |rows: Vec<(DVector<f64>, f64)>| -> (GBlock, Blk) {
        let m = rows.len();
        let mut gm = DMatrix::zeros(m, ny);
        let mut hv = DVector::zeros(m);
        for (i, (row, k)) in rows.into_iter().enumerate() {
            let (r, k) = reduce_row(&row, k);
            gm.row_mut(i).copy_from(&(-r).transpose());
            hv[i] = k;
        }
        (GBlock::Dense(gm), Blk::V(hv))
    };
    fn push(
        blk: (GBlock, Blk),
        cone: Cone,
        cones: &mut Vec<Cone>,
        g: &mut Vec<GBlock>,
        h: &mut Vec<Blk>,
    ) {
        cones.push(cone);
        g.push(blk.0);
        h.push(blk.1);
    }

    // group all scalar inequalities into one orthant
    let nonneg: Vec<(DVector<f64>, f64)> = prob
        .constraints
        .iter()
        .filter_map(|c| match c {
            Constraint::Nonneg(e) => Some(dense_row(n, e)),
            _ => None,
        })
        .collect();
    let nonneg_block = if nonneg.is_empty() {
        None
    } else {
        let len = nonneg.len();
        push(make_rows(nonneg), Cone::Nonneg(len), &mut cones, &mut g, &mut h);
        Some(cones.len() - 1)
    };

    let mut nonneg_pos = 0;
    for con in &prob.constraints {
        match con {
            Constraint::Nonneg(_) => {
                map.push((nonneg_block.unwrap(), LoweredKind::Scalar(nonneg_pos)));
                nonneg_pos += 1;
            }
            Constraint::Soc { t, x } => {
                let mut rows = vec![dense_row(n, t)];
                rows.extend(x.iter().map(|e| dense_row(n, e)));
                let len = rows.len();
                push(make_rows(rows), Cone::Soc(len), &mut cones, &mut g, &mut h);
                map.push((cones.len() - 1, LoweredKind::Vector));
            }
            Constraint::QuadLe { t, w } => {
                // ‖w‖² <= t  <=>  ‖(2w, t - 1)‖ <= t + 1
                let (tr, tk) = dense_row(n, t);
                let mut rows = vec![(tr.clone(), tk + 1.0), (tr, tk - 1.0)];
                for e in w {
                    let (r, k) = dense_row(n, e);
                    rows.push((r * 2.0, 2.0 * k));
                }
                let len = rows.len();
                push(make_rows(rows), Cone::Soc(len), &mut cones, &mut g, &mut h);
                map.push((cones.len() - 1, LoweredKind::Rotated));
            }
            Constraint::Lmi { constant, terms } => {
                let k0 = real_embedding(constant);
                let dim = k0.nrows();
                let mut mats: Vec<(usize, DMatrix<f64>)> = Vec::new();
                let mut h0 = k0;
                match red {
                    None => {
                        for (v, f) in terms {
                            mats.push((*v, -real_embedding(f)));
                        }
                    }
                    Some(r) => {
                        let mut acc: Vec<DMatrix<f64>> =
                            (0..ny).map(|_| DMatrix::zeros(dim, dim)).collect();
                        for (v, f) in terms {
                            let fe = real_embedding(f);
                            mat_axpy(&mut h0, r.x0[*v], &fe);
                            for (j, a) in acc.iter_mut().enumerate() {
                                let coef = r.null[(*v, j)];
                                if coef != 0.0 {
                                    mat_axpy(a, -coef, &fe);
                                }
                            }
                        }
                        mats = acc
                            .into_iter()
                            .enumerate()
                            .filter(|(_, a)| a.amax() > 0.0)
                            .collect();
                    }
                }
                // merge duplicate columns
                mats.sort_by_key(|(j, _)| *j);
                let mut merged: Vec<(usize, DMatrix<f64>)> = Vec::new();
                for (j, m) in mats {
                    match merged.last_mut() {
                        Some((lj, lm)) if *lj == j => *lm += m,
                        _ => merged.push((j, m)),
                    }
                }
                cones.push(Cone::Psd(dim));
                g.push(GBlock::Psd(merged));
                h.push(Blk::M(h0));
                map.push((cones.len() - 1, LoweredKind::Lmi));
            }
        }
    }

    Lowered {
        form: StandardForm {
            c,
            cones,
            g,
            h: ConeVec(h),
        },
        map,
        objective_offset: off,
    }
}

/// Solves `prob` with the homogeneous self-dual interior-point method.
pub fn solve_conic(prob: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution> {
    for con in &prob.constraints {
        if let Constraint::Lmi { constant, terms } = con {
            let n = constant.nrows();
            if constant.ncols() != n {
                return Err(Error::Dimension {
                    what: "LMI constant",
                    expected: n,
                    got: constant.ncols(),
                });
            }
            for (v, f) in terms {
                if *v >= prob.nvars {
                    return Err(Error::domain(format!("LMI references unknown variable {v}")));
                }
                if f.shape() != (n, n) {
                    return Err(Error::Dimension {
                        what: "LMI coefficient",
                        expected: n,
                        got: f.nrows(),
                    });
                }
            }
        }
    }
    let red = match reduce_equalities(prob.nvars, &prob.equalities) {
        Ok(r) => r,
        Err(Error::Infeasible(msg)) => {
            log::debug!("{msg}");
            return Ok(infeasible_solution(prob));
        }
        Err(e) => return Err(e),
    };
    let lowered = lower(prob, red.as_ref());
    if lowered.form.cones.is_empty() {
        return Err(Error::domain("problem has no conic constraints"));
    }
    let out = ipm::solve(&lowered.form, settings);

    let status = match out.status {
        IpmStatus::Optimal => SolveStatus::Optimal,
        IpmStatus::PrimalInfeasible => SolveStatus::Infeasible,
        IpmStatus::DualInfeasible => SolveStatus::Unbounded,
        IpmStatus::Inaccurate => SolveStatus::OptimalInaccurate,
        IpmStatus::MaxIter => SolveStatus::MaxIter,
    };
    let x = match &red {
        None => out.x.clone(),
        Some(r) => &r.x0 + &r.null * &out.x,
    };
    let values: Vec<f64> = x.iter().copied().collect();

    let duals = lowered
        .map
        .iter()
        .map(|(blk, kind)| {
            let zb = &out.z.0[*blk];
            match kind {
                LoweredKind::Scalar(i) => Dual::Vector(DVector::from_element(1, zb.as_vec()[*i])),
                LoweredKind::Vector | LoweredKind::Rotated => Dual::Vector(zb.as_vec().clone()),
                LoweredKind::Lmi => Dual::Matrix(from_real_embedding(zb.as_mat()) * c64::new(2.0, 0.0)),
            }
        })
        .collect();

    let sign = if prob.maximize { -1.0 } else { 1.0 };
    let primal = sign * (out.primal_objective + lowered.objective_offset);
    let dual = sign * (out.dual_objective + lowered.objective_offset);
    Ok(ConicSolution {
        status,
        objective_value: sign * prob.objective.eval(&values),
        values,
        primal_objective: primal,
        dual_objective: dual,
        gap: out.gap,
        relative_gap: out.relative_gap,
        kkt_residual: out.primal_residual.max(out.dual_residual),
        iterations: out.iterations,
        duals,
    })
}

fn infeasible_solution(prob: &ConicProblem) -> ConicSolution {
    ConicSolution {
        status: SolveStatus::Infeasible,
        values: vec![f64::NAN; prob.nvars],
        objective_value: f64::NAN,
        primal_objective: f64::INFINITY,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        relative_gap: f64::NAN,
        kkt_residual: f64::NAN,
        iterations: 0,
        duals: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::eig::herm_eig;

    fn cm(n: usize, f: impl Fn(usize, usize) -> c64) -> CMat {
        CMat::from_fn(n, n, f)
    }

    #[test]
    fn scalar_lmi() {
        let mut p = ConicProblem::new();
        let x = p.add_scalar("x");
        p.add(Constraint::Lmi {
            constant: CMat::zeros(1, 1),
            terms: vec![(x, CMat::identity(1, 1))],
        });
        p.minimize(LinExpr::var(x));
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        assert!(sol.is_optimal());
        assert!(sol.value(x).abs() < 1e-7);
    }

    #[test]
    fn trace_minimization_with_equality() {
        // min tr X  s.t.  X(0,0) = 1, X ⪰ 0  ->  1
        let mut p = ConicProblem::new();
        let xv = p.add_hermitian("X", 3, true);
        p.add_equality(LinExpr::var(xv.diag_var(0)).plus(-1.0));
        p.minimize(xv.trace_with(&CMat::identity(3, 3)));
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        assert!(sol.is_optimal(), "{:?}", sol.status);
        assert!((sol.objective_value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lambda_max_matches_eigendecomposition() {
        // min μ s.t. μI - A ⪰ 0
        let a = cm(4, |i, j| {
            let re = 1.0 / (1.0 + i as f64 + j as f64);
            let im = if i == j { 0.0 } else { 0.3 * (i as f64 - j as f64) };
            c64::new(re, im)
        });
        let mut p = ConicProblem::new();
        let mu = p.add_scalar("mu");
        p.add(Constraint::Lmi {
            constant: -a.clone(),
            terms: vec![(mu, CMat::identity(4, 4))],
        });
        p.minimize(LinExpr::var(mu));
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        let lmax = herm_eig(&a).unwrap().max();
        assert!((sol.value(mu) - lmax).abs() < 1e-6, "{} vs {lmax}", sol.value(mu));
        // dual multiplier is a unit-trace projector on the top eigenvector
        let Dual::Matrix(z) = &sol.duals[0] else { panic!() };
        assert!((z.trace().re - 1.0).abs() < 1e-5);
    }

    #[test]
    fn complex_vector_norm_ball() {
        // min Re(x0) + Im(x1)  s.t. ‖x‖ <= 2  ->  -2√2
        let mut p = ConicProblem::new();
        let x = p.add_complex_vector("x", 2);
        p.add(Constraint::Soc {
            t: LinExpr::constant(2.0),
            x: x.scalars().into_iter().map(LinExpr::var).collect(),
        });
        p.minimize(LinExpr::var(x.re[0]).term(x.im[1], 1.0));
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        assert!((sol.objective_value + 2.0 * 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn quad_epigraph() {
        // min t s.t. (x-3)² <= t, x <= 1  ->  4
        let mut p = ConicProblem::new();
        let t = p.add_scalar("t");
        let x = p.add_scalar("x");
        p.add(Constraint::QuadLe {
            t: LinExpr::var(t),
            w: vec![LinExpr::var(x).plus(-3.0)],
        });
        p.add(Constraint::Nonneg(LinExpr::constant(1.0).term(x, -1.0)));
        p.minimize(LinExpr::var(t));
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        assert!((sol.objective_value - 4.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_lmi_reported() {
        // X ⪰ 0 with X(0,0) = -1
        let mut p = ConicProblem::new();
        let xv = p.add_hermitian("X", 2, true);
        p.add_equality(LinExpr::var(xv.diag_var(0)).plus(1.0));
        p.minimize(xv.trace_with(&CMat::identity(2, 2)));
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.require_optimal("test").is_err());
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let mut p = ConicProblem::new();
        let x = p.add_scalar("x");
        p.add_equality(LinExpr::var(x).plus(-1.0));
        p.add_equality(LinExpr::var(x).plus(-2.0));
        p.add(Constraint::Nonneg(LinExpr::var(x)));
        p.minimize(LinExpr::var(x));
        let sol = solve_conic(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }
}
