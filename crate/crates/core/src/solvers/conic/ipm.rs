//! Primal-dual interior-point method for
//!
//! ```text
//! minimize    c'x
//! subject to  G x + s = h,   s ∈ K
//! ```
//!
//! where `K` is a product of nonnegative orthants, second-order cones and
//! real symmetric PSD cones. The iteration works on the homogeneous
//! self-dual embedding with Nesterov-Todd scaling and a Mehrotra
//! predictor-corrector step, so infeasibility is detected from certificates
//! instead of iteration blow-up.

use nalgebra::{Cholesky, DMatrix, DVector, SVD};

use super::SolverSettings;

/// `y += alpha * x` for dense matrices.
pub(crate) fn mat_axpy(y: &mut DMatrix<f64>, alpha: f64, x: &DMatrix<f64>) {
    y.zip_apply(x, |a, b| *a += alpha * b);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cone {
    Nonneg(usize),
    Soc(usize),
    /// Real symmetric `n x n` block.
    Psd(usize),
}

impl Cone {
    fn degree(&self) -> usize {
        match *self {
            Cone::Nonneg(m) => m,
            Cone::Soc(_) => 1,
            Cone::Psd(n) => n,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Blk {
    V(DVector<f64>),
    M(DMatrix<f64>),
}

impl Blk {
    fn dot(&self, o: &Blk) -> f64 {
        match (self, o) {
            (Blk::V(a), Blk::V(b)) => a.dot(b),
            (Blk::M(a), Blk::M(b)) => a.dot(b),
            _ => unreachable!("block kind mismatch"),
        }
    }

    fn axpy(&mut self, alpha: f64, o: &Blk) {
        match (self, o) {
            (Blk::V(a), Blk::V(b)) => a.axpy(alpha, b, 1.0),
            (Blk::M(a), Blk::M(b)) => mat_axpy(a, alpha, b),
            _ => unreachable!("block kind mismatch"),
        }
    }

    fn scale(&mut self, alpha: f64) {
        match self {
            Blk::V(a) => a.scale_mut(alpha),
            Blk::M(a) => a.scale_mut(alpha),
        }
    }

    pub(crate) fn as_vec(&self) -> &DVector<f64> {
        match self {
            Blk::V(v) => v,
            Blk::M(_) => panic!("expected vector block"),
        }
    }

    pub(crate) fn as_mat(&self) -> &DMatrix<f64> {
        match self {
            Blk::M(m) => m,
            Blk::V(_) => panic!("expected matrix block"),
        }
    }
}

/// An element of the product cone's ambient space.
#[derive(Debug, Clone)]
pub(crate) struct ConeVec(pub Vec<Blk>);

impl ConeVec {
    pub(crate) fn zeros(cones: &[Cone]) -> Self {
        ConeVec(
            cones
                .iter()
                .map(|c| match *c {
                    Cone::Nonneg(m) | Cone::Soc(m) => Blk::V(DVector::zeros(m)),
                    Cone::Psd(n) => Blk::M(DMatrix::zeros(n, n)),
                })
                .collect(),
        )
    }

    fn identity(cones: &[Cone]) -> Self {
        ConeVec(
            cones
                .iter()
                .map(|c| match *c {
                    Cone::Nonneg(m) => Blk::V(DVector::from_element(m, 1.0)),
                    Cone::Soc(m) => {
                        let mut v = DVector::zeros(m);
                        v[0] = 1.0;
                        Blk::V(v)
                    }
                    Cone::Psd(n) => Blk::M(DMatrix::identity(n, n)),
                })
                .collect(),
        )
    }

    fn dot(&self, o: &ConeVec) -> f64 {
        self.0.iter().zip(&o.0).map(|(a, b)| a.dot(b)).sum()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, alpha: f64, o: &ConeVec) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            a.axpy(alpha, b);
        }
    }

    fn scaled(&self, alpha: f64) -> ConeVec {
        let mut out = self.clone();
        for b in &mut out.0 {
            b.scale(alpha);
        }
        out
    }
}

/// Linear map block from `x` into one cone.
#[derive(Debug, Clone)]
pub(crate) enum GBlock {
    /// `dim x n` dense matrix for orthant and SOC blocks.
    Dense(DMatrix<f64>),
    /// Sparse list of `(column, symmetric matrix)` for a PSD block.
    Psd(Vec<(usize, DMatrix<f64>)>),
}

#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub c: DVector<f64>,
    pub cones: Vec<Cone>,
    pub g: Vec<GBlock>,
    pub h: ConeVec,
}

impl StandardForm {
    fn n(&self) -> usize {
        self.c.len()
    }

    fn mul_g(&self, x: &DVector<f64>) -> ConeVec {
        ConeVec(
            self.g
                .iter()
                .zip(&self.cones)
                .map(|(gb, cone)| match (gb, cone) {
                    (GBlock::Dense(m), _) => Blk::V(m * x),
                    (GBlock::Psd(cols), Cone::Psd(nb)) => {
                        let mut acc = DMatrix::zeros(*nb, *nb);
                        for (j, f) in cols {
                            if x[*j] != 0.0 {
                                mat_axpy(&mut acc, x[*j], f);
                            }
                        }
                        Blk::M(acc)
                    }
                    _ => unreachable!(),
                })
                .collect(),
        )
    }

    fn mul_gt(&self, z: &ConeVec) -> DVector<f64> {
        let mut out = DVector::zeros(self.n());
        for (gb, zb) in self.g.iter().zip(&z.0) {
            match gb {
                GBlock::Dense(m) => out += m.transpose() * zb.as_vec(),
                GBlock::Psd(cols) => {
                    let zm = zb.as_mat();
                    for (j, f) in cols {
                        out[*j] += f.dot(zm);
                    }
                }
            }
        }
        out
    }

    fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }
}

/// Nesterov-Todd scaling of one cone block, `W s = W^{-T} z = λ`.
#[derive(Debug, Clone)]
enum Scale {
    Lp { w: DVector<f64> },
    Soc { w: DMatrix<f64>, winv: DMatrix<f64> },
    /// `W(u) = R^{-1} u R^{-T}`.
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64> },
}

impl Scale {
    fn w(&self, u: &Blk) -> Blk {
        match (self, u) {
            (Scale::Lp { w }, Blk::V(u)) => Blk::V(w.component_mul(u)),
            (Scale::Soc { w, .. }, Blk::V(u)) => Blk::V(w * u),
            (Scale::Psd { rinv, .. }, Blk::M(u)) => Blk::M(rinv * u * rinv.transpose()),
            _ => unreachable!(),
        }
    }

    fn w_t(&self, u: &Blk) -> Blk {
        match (self, u) {
            (Scale::Psd { rinv, .. }, Blk::M(u)) => Blk::M(rinv.transpose() * u * rinv),
            _ => self.w(u),
        }
    }

    fn w_inv(&self, u: &Blk) -> Blk {
        match (self, u) {
            (Scale::Lp { w }, Blk::V(u)) => Blk::V(u.component_div(w)),
            (Scale::Soc { winv, .. }, Blk::V(u)) => Blk::V(winv * u),
            (Scale::Psd { r, .. }, Blk::M(u)) => Blk::M(r * u * r.transpose()),
            _ => unreachable!(),
        }
    }

    fn w_inv_t(&self, u: &Blk) -> Blk {
        match (self, u) {
            (Scale::Lp { w }, Blk::V(u)) => Blk::V(u.component_div(w)),
            (Scale::Soc { winv, .. }, Blk::V(u)) => Blk::V(winv * u),
            (Scale::Psd { r, .. }, Blk::M(u)) => Blk::M(r.transpose() * u * r),
            _ => unreachable!(),
        }
    }
}

fn soc_jdot(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    x[0] * y[0] - x.rows(1, x.len() - 1).dot(&y.rows(1, y.len() - 1))
}

fn soc_scaling(s: &DVector<f64>, z: &DVector<f64>) -> Option<(Scale, DVector<f64>)> {
    let sjs = soc_jdot(s, s);
    let zjz = soc_jdot(z, z);
    if !(sjs > 0.0 && zjz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
        return None;
    }
    let sn = s / sjs.sqrt();
    let zn = z / zjz.sqrt();
    let gamma = ((1.0 + sn.dot(&zn)) / 2.0).sqrt();
    let m = s.len();
    let mut js = sn.clone();
    for i in 1..m {
        js[i] = -js[i];
    }
    let wbar = (&zn + &js) / (2.0 * gamma);
    // hyperbolic Householder vector of the scaling point
    let mut v = wbar.clone();
    v[0] += 1.0;
    v /= (2.0 * (wbar[0] + 1.0)).sqrt();
    let beta = (zjz / sjs).powf(0.25);
    let mut jmat = DMatrix::identity(m, m);
    for i in 1..m {
        jmat[(i, i)] = -1.0;
    }
    let h = &v * v.transpose() * 2.0 - &jmat;
    let jv = &jmat * &v;
    let hinv = &jv * jv.transpose() * 2.0 - &jmat;
    let w = &h * beta;
    let winv = &hinv / beta;
    let lam = &w * s;
    Some((Scale::Soc { w, winv }, lam))
}

fn psd_scaling_from(
    s: &DMatrix<f64>,
    z: &DMatrix<f64>,
) -> Option<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
    let ls = Cholesky::new(s.clone())?.l();
    let lz = Cholesky::new(z.clone())?.l();
    let prod = lz.transpose() * &ls;
    let svd = SVD::new(prod, true, true);
    let u = svd.u?;
    let vt = svd.v_t?;
    let lam = svd.singular_values;
    if lam.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    let n = lam.len();
    let isq = DVector::from_iterator(n, lam.iter().map(|l| 1.0 / l.sqrt()));
    // R = Ls V Λ^{-1/2},  R^{-1} = Λ^{-1/2} U' Lz'
    let mut r = ls * vt.transpose();
    for j in 0..n {
        r.column_mut(j).scale_mut(isq[j]);
    }
    let mut rinv = u.transpose() * lz.transpose();
    for i in 0..n {
        rinv.row_mut(i).scale_mut(isq[i]);
    }
    Some((r, rinv, lam))
}

/// Current scaling together with the scaled point λ.
struct Scaling {
    blocks: Vec<Scale>,
    lambda: ConeVec,
}

impl Scaling {
    fn from_pair(cones: &[Cone], s: &ConeVec, z: &ConeVec) -> Option<Scaling> {
        let mut blocks = Vec::with_capacity(cones.len());
        let mut lam = Vec::with_capacity(cones.len());
        for ((cone, sb), zb) in cones.iter().zip(&s.0).zip(&z.0) {
            match cone {
                Cone::Nonneg(_) => {
                    let (s, z) = (sb.as_vec(), zb.as_vec());
                    if s.iter().chain(z.iter()).any(|&v| !(v > 0.0)) {
                        return None;
                    }
                    let w = z.zip_map(s, |z, s| (z / s).sqrt());
                    lam.push(Blk::V(s.zip_map(z, |s, z| (s * z).sqrt())));
                    blocks.push(Scale::Lp { w });
                }
                Cone::Soc(_) => {
                    let (sc, l) = soc_scaling(sb.as_vec(), zb.as_vec())?;
                    blocks.push(sc);
                    lam.push(Blk::V(l));
                }
                Cone::Psd(_) => {
                    let (r, rinv, l) = psd_scaling_from(sb.as_mat(), zb.as_mat())?;
                    blocks.push(Scale::Psd { r, rinv });
                    lam.push(Blk::M(DMatrix::from_diagonal(&l)));
                }
            }
        }
        Some(Scaling {
            blocks,
            lambda: ConeVec(lam),
        })
    }

    fn w(&self, u: &ConeVec) -> ConeVec {
        ConeVec(self.blocks.iter().zip(&u.0).map(|(w, b)| w.w(b)).collect())
    }
    fn w_t(&self, u: &ConeVec) -> ConeVec {
        ConeVec(self.blocks.iter().zip(&u.0).map(|(w, b)| w.w_t(b)).collect())
    }
    fn w_inv(&self, u: &ConeVec) -> ConeVec {
        ConeVec(self.blocks.iter().zip(&u.0).map(|(w, b)| w.w_inv(b)).collect())
    }
    fn w_inv_t(&self, u: &ConeVec) -> ConeVec {
        ConeVec(self.blocks.iter().zip(&u.0).map(|(w, b)| w.w_inv_t(b)).collect())
    }
}

/// Jordan product `u ∘ v`.
fn jordan(cones: &[Cone], u: &ConeVec, v: &ConeVec) -> ConeVec {
    ConeVec(
        cones
            .iter()
            .zip(u.0.iter().zip(&v.0))
            .map(|(c, (a, b))| match c {
                Cone::Nonneg(_) => Blk::V(a.as_vec().component_mul(b.as_vec())),
                Cone::Soc(_) => {
                    let (a, b) = (a.as_vec(), b.as_vec());
                    let m = a.len();
                    let mut out = DVector::zeros(m);
                    out[0] = a.dot(b);
                    for i in 1..m {
                        out[i] = a[0] * b[i] + b[0] * a[i];
                    }
                    Blk::V(out)
                }
                Cone::Psd(_) => {
                    let (a, b) = (a.as_mat(), b.as_mat());
                    Blk::M((a * b + b * a) * 0.5)
                }
            })
            .collect(),
    )
}

/// Solves `λ ∘ x = r` for the scaled point λ (diagonal in PSD blocks).
fn jordan_div(cones: &[Cone], lam: &ConeVec, r: &ConeVec) -> ConeVec {
    ConeVec(
        cones
            .iter()
            .zip(lam.0.iter().zip(&r.0))
            .map(|(c, (l, r))| match c {
                Cone::Nonneg(_) => Blk::V(r.as_vec().component_div(l.as_vec())),
                Cone::Soc(_) => {
                    let (l, r) = (l.as_vec(), r.as_vec());
                    let m = l.len();
                    let l1 = l.rows(1, m - 1);
                    let r1 = r.rows(1, m - 1);
                    let det = l[0] * l[0] - l1.norm_squared();
                    let x0 = (l[0] * r[0] - l1.dot(&r1)) / det;
                    let mut out = DVector::zeros(m);
                    out[0] = x0;
                    for i in 1..m {
                        out[i] = (r[i] - x0 * l[i]) / l[0];
                    }
                    Blk::V(out)
                }
                Cone::Psd(n) => {
                    let (l, r) = (l.as_mat(), r.as_mat());
                    Blk::M(DMatrix::from_fn(*n, *n, |i, j| {
                        2.0 * r[(i, j)] / (l[(i, i)] + l[(j, j)])
                    }))
                }
            })
            .collect(),
    )
}

/// Largest `α` with `λ + α d` in the cone (infinite when unbounded).
fn max_step(cones: &[Cone], lam: &ConeVec, d: &ConeVec) -> f64 {
    let mut best = f64::INFINITY;
    for (c, (l, d)) in cones.iter().zip(lam.0.iter().zip(&d.0)) {
        let a = match c {
            Cone::Nonneg(_) => {
                let mut a = f64::INFINITY;
                for (li, di) in l.as_vec().iter().zip(d.as_vec().iter()) {
                    if *di < 0.0 {
                        a = a.min(-li / di);
                    }
                }
                a
            }
            Cone::Soc(_) => soc_max_step(l.as_vec(), d.as_vec()),
            Cone::Psd(n) => {
                let (l, d) = (l.as_mat(), d.as_mat());
                let isq: Vec<f64> = (0..*n).map(|i| 1.0 / l[(i, i)].sqrt()).collect();
                let m = DMatrix::from_fn(*n, *n, |i, j| d[(i, j)] * isq[i] * isq[j]);
                let m = (&m + m.transpose()) * 0.5;
                let lo = m.symmetric_eigenvalues().min();
                if lo < 0.0 {
                    -1.0 / lo
                } else {
                    f64::INFINITY
                }
            }
        };
        best = best.min(a);
    }
    best
}

fn soc_max_step(x: &DVector<f64>, d: &DVector<f64>) -> f64 {
    let a = soc_jdot(d, d);
    let b = soc_jdot(x, d);
    let c = soc_jdot(x, x);
    let disc = b * b - a * c;
    if a < 0.0 || (b < 0.0 && disc >= 0.0) {
        let den = -b + disc.max(0.0).sqrt();
        if den <= 0.0 {
            return 0.0;
        }
        let mut alpha = c / den;
        // the leading coordinate must stay positive as well
        if d[0] < 0.0 {
            alpha = alpha.min(-x[0] / d[0]);
        }
        alpha
    } else if d[0] < 0.0 {
        -x[0] / d[0]
    } else {
        f64::INFINITY
    }
}

/// Smallest `t` with `u + t e` in the cone.
fn boundary_offset(cones: &[Cone], u: &ConeVec) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (c, b) in cones.iter().zip(&u.0) {
        let v = match c {
            Cone::Nonneg(_) => -b.as_vec().min(),
            Cone::Soc(m) => {
                let v = b.as_vec();
                v.rows(1, m - 1).norm() - v[0]
            }
            Cone::Psd(_) => {
                let m = b.as_mat();
                -((m + m.transpose()) * 0.5).symmetric_eigenvalues().min()
            }
        };
        worst = worst.max(v);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    /// Stopped early but the best iterate meets the reduced tolerance.
    Inaccurate,
    MaxIter,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmOutput {
    pub status: IpmStatus,
    pub x: DVector<f64>,
    pub z: ConeVec,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

/// Reduced KKT solver.
///
/// With `Ḡ = W G` the system `G'v = a`, `G u - (W'W)^{-1} v = cz` becomes
/// `Ḡ'ṽ = a`, `Ḡu - ṽ = W cz` with `v = W'ṽ`. A thin QR of `Ḡ` solves it
/// without forming `Ḡ'Ḡ`, whose conditioning degrades quickly near
/// degenerate optima.
struct Kkt<'a> {
    prob: &'a StandardForm,
    scaling: &'a Scaling,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    /// Rows belonging to cones; any further rows are regularization.
    m: usize,
}

fn vec_blk(b: &Blk) -> Vec<f64> {
    match b {
        Blk::V(v) => v.iter().copied().collect(),
        Blk::M(m) => m.iter().copied().collect(),
    }
}

impl<'a> Kkt<'a> {
    fn new(prob: &'a StandardForm, scaling: &'a Scaling) -> Option<Self> {
        let n = prob.n();
        let m: usize = prob
            .cones
            .iter()
            .map(|c| match *c {
                Cone::Nonneg(k) | Cone::Soc(k) => k,
                Cone::Psd(k) => k * k,
            })
            .sum();
        let mut gbar = DMatrix::<f64>::zeros(m, n);
        let mut row = 0;
        for ((gb, sc), cone) in prob.g.iter().zip(&scaling.blocks).zip(&prob.cones) {
            match gb {
                GBlock::Dense(g) => {
                    let wg = match sc {
                        Scale::Lp { w } => {
                            let mut wg = g.clone();
                            for i in 0..wg.nrows() {
                                wg.row_mut(i).scale_mut(w[i]);
                            }
                            wg
                        }
                        Scale::Soc { w, .. } => w * g,
                        Scale::Psd { .. } => unreachable!(),
                    };
                    gbar.view_mut((row, 0), (wg.nrows(), n)).copy_from(&wg);
                    row += wg.nrows();
                }
                GBlock::Psd(cols) => {
                    let Scale::Psd { rinv, .. } = sc else {
                        unreachable!()
                    };
                    let Cone::Psd(k) = *cone else { unreachable!() };
                    for (j, f) in cols {
                        let wf = rinv * f * rinv.transpose();
                        for (i, v) in wf.iter().enumerate() {
                            gbar[(row + i, *j)] += v;
                        }
                    }
                    row += k * k;
                }
            }
        }
        if gbar.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let qr = gbar.clone().qr();
        let r = qr.r();
        let dmax = r.diagonal().amax();
        if !(dmax > 0.0) {
            return None;
        }
        if r.diagonal().iter().all(|d| d.abs() > 1e-13 * dmax) {
            return Some(Kkt {
                prob,
                scaling,
                q: qr.q(),
                r,
                m,
            });
        }
        // rank-deficient: Tikhonov rows keep the factor nonsingular
        let mut ext = gbar.resize_vertically(m + n, 0.0);
        for j in 0..n {
            ext[(m + j, j)] = 1e-8 * dmax;
        }
        let qr = ext.qr();
        Some(Kkt {
            prob,
            scaling,
            q: qr.q(),
            r: qr.r(),
            m,
        })
    }

    fn scaled_vec(&self, u: &ConeVec) -> DVector<f64> {
        let wu = self.scaling.w(u);
        let mut out = DVector::zeros(self.q.nrows());
        for (i, v) in wu.0.iter().flat_map(vec_blk).enumerate() {
            out[i] = v;
        }
        out
    }

    fn unvec(&self, y: &DVector<f64>) -> ConeVec {
        let mut off = 0;
        ConeVec(
            self.prob
                .cones
                .iter()
                .map(|c| match *c {
                    Cone::Nonneg(k) | Cone::Soc(k) => {
                        let b = Blk::V(y.rows(off, k).into_owned());
                        off += k;
                        b
                    }
                    Cone::Psd(k) => {
                        let m = DMatrix::from_column_slice(k, k, y.rows(off, k * k).as_slice());
                        off += k * k;
                        Blk::M((&m + m.transpose()) * 0.5)
                    }
                })
                .collect(),
        )
    }

    /// Solves `G'v = a`, `G u - (W'W)^{-1} v = cz`.
    fn solve(&self, a: &DVector<f64>, cz: &ConeVec) -> (DVector<f64>, ConeVec) {
        let wcz = self.scaled_vec(cz);
        // R'y = a, R u = y + Q'W cz, ṽ = Q y - (I - QQ') W cz
        let y = self
            .r
            .transpose()
            .solve_lower_triangular(a)
            .unwrap_or_else(|| DVector::zeros(a.len()));
        let qtw = self.q.transpose() * &wcz;
        let yq = &y + &qtw;
        let u = self
            .r
            .solve_upper_triangular(&yq)
            .unwrap_or_else(|| DVector::zeros(a.len()));
        let vt = (&self.q * &yq - &wcz).rows(0, self.m).into_owned();
        let v = self.scaling.w_t(&self.unvec(&vt));
        (u, v)
    }
}

struct Direction {
    dx: DVector<f64>,
    ds: ConeVec,
    dz: ConeVec,
    dtau: f64,
    dkappa: f64,
    ds_scaled: ConeVec,
    dz_scaled: ConeVec,
}

/// Iterations without merit improvement before giving up.
const STALL_ITERS: usize = 12;

pub(crate) fn solve(prob: &StandardForm, settings: &SolverSettings) -> IpmOutput {
    let n = prob.n();
    let cones = &prob.cones;
    let nu = prob.degree() as f64;
    let hnorm = prob.h.norm().max(1.0);
    let cnorm = prob.c.norm().max(1.0);

    // starting point: W = I least-squares solutions, shifted into the cone
    let e = ConeVec::identity(cones);
    let ident = Scaling {
        blocks: cones
            .iter()
            .map(|c| match *c {
                Cone::Nonneg(m) => Scale::Lp {
                    w: DVector::from_element(m, 1.0),
                },
                Cone::Soc(m) => Scale::Soc {
                    w: DMatrix::identity(m, m),
                    winv: DMatrix::identity(m, m),
                },
                Cone::Psd(m) => Scale::Psd {
                    r: DMatrix::identity(m, m),
                    rinv: DMatrix::identity(m, m),
                },
            })
            .collect(),
        lambda: e.clone(),
    };
    let (mut x, mut s, mut z) = {
        let kkt = Kkt::new(prob, &ident).expect("identity scaling");
        let (x, v) = kkt.solve(&DVector::zeros(n), &prob.h);
        let s = v.scaled(-1.0);
        let (_, z) = kkt.solve(&(-&prob.c), &ConeVec::zeros(cones));
        (x, s, z)
    };
    for u in [&mut s, &mut z] {
        let off = boundary_offset(cones, u);
        let unorm = u.norm().max(1.0);
        if off >= -1e-8 * unorm {
            u.axpy(1.0 + off, &e);
        }
    }
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut scaling = match Scaling::from_pair(cones, &s, &z) {
        Some(sc) => sc,
        None => {
            s = e.clone();
            z = e.clone();
            Scaling::from_pair(cones, &s, &z).expect("identity pair")
        }
    };

    let mut out = IpmOutput {
        status: IpmStatus::MaxIter,
        x: x.clone(),
        z: z.clone(),
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        relative_gap: f64::NAN,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        iterations: 0,
    };
    let mut best_merit = f64::INFINITY;
    let mut best_iter = 0;

    for iter in 0..=settings.max_iter {
        // residuals
        let gx = prob.mul_g(&x);
        let mut rz = gx.clone();
        rz.axpy(1.0, &s);
        rz.axpy(-tau, &prob.h);
        let rx = prob.mul_gt(&z) + &prob.c * tau;
        let cx = prob.c.dot(&x);
        let hz = prob.h.dot(&z);
        let rt = kappa + cx + hz;
        let sz = s.dot(&z);
        let mu = (sz + tau * kappa) / (nu + 1.0);

        let pcost = cx / tau;
        let dcost = -hz / tau;
        let gap = sz / (tau * tau);
        let pres = rz.norm() / tau / hnorm;
        let dres = rx.norm() / tau / cnorm;
        let relgap = gap / pcost.abs().max(dcost.abs()).max(1.0);

        let merit = pres.max(dres).max(relgap.abs());
        log::trace!(
            "{iter:3} pcost {pcost:.9e} dcost {dcost:.9e} gap {gap:.2e} pres {pres:.2e} dres {dres:.2e} tau {tau:.2e} kappa {kappa:.2e}"
        );
        if merit < best_merit && tau > 0.0 {
            best_merit = merit;
            best_iter = iter;
            out = IpmOutput {
                status: IpmStatus::MaxIter,
                x: &x / tau,
                z: z.scaled(1.0 / tau),
                primal_objective: pcost,
                dual_objective: dcost,
                gap,
                relative_gap: relgap,
                primal_residual: pres,
                dual_residual: dres,
                iterations: iter,
            };
        }

        if pres <= settings.feas_tol && dres <= settings.feas_tol && relgap <= settings.gap_tol {
            out.status = IpmStatus::Optimal;
            out.iterations = iter;
            return out;
        }
        // infeasibility certificates
        if hz < 0.0 {
            let pinf = prob.mul_gt(&z).norm() / cnorm / (-hz);
            if pinf <= settings.feas_tol {
                out.status = IpmStatus::PrimalInfeasible;
                out.z = z.scaled(1.0 / (-hz));
                out.iterations = iter;
                return out;
            }
        }
        if cx < 0.0 {
            let mut gxs = gx.clone();
            gxs.axpy(1.0, &s);
            let dinf = gxs.norm() / hnorm / (-cx);
            if dinf <= settings.feas_tol {
                out.status = IpmStatus::DualInfeasible;
                out.x = &x / (-cx);
                out.iterations = iter;
                return out;
            }
        }
        if iter == settings.max_iter || iter >= best_iter + STALL_ITERS {
            break;
        }

        let Some(kkt) = Kkt::new(prob, &scaling) else {
            break;
        };
        let (x1, z1) = kkt.solve(&(-&prob.c), &prob.h);
        let denom = prob.c.dot(&x1) + prob.h.dot(&z1) - kappa / tau;
        let lam = &scaling.lambda;
        let lam_sq = jordan(cones, lam, lam);

        let newton = |ds_rhs: &ConeVec, dk_rhs: f64, eta: f64| -> Direction {
            let rprime = jordan_div(cones, lam, ds_rhs);
            let ax = &rx * (-(1.0 - eta));
            let mut cz = rz.scaled(-(1.0 - eta));
            cz.axpy(-1.0, &scaling.w_inv(&rprime));
            let (x2, z2) = kkt.solve(&ax, &cz);
            let dtau = (-(1.0 - eta) * rt - dk_rhs / tau - prob.c.dot(&x2) - prob.h.dot(&z2))
                / denom;
            let dx = &x2 + &x1 * dtau;
            let mut dz = z2;
            dz.axpy(dtau, &z1);
            let mut ds = rz.scaled(-(1.0 - eta));
            ds.axpy(dtau, &prob.h);
            ds.axpy(-1.0, &prob.mul_g(&dx));
            let dkappa = (dk_rhs - kappa * dtau) / tau;
            let ds_scaled = scaling.w(&ds);
            let dz_scaled = scaling.w_inv_t(&dz);
            Direction {
                dx,
                ds,
                dz,
                dtau,
                dkappa,
                ds_scaled,
                dz_scaled,
            }
        };

        let step_len = |d: &Direction| -> f64 {
            let mut a = max_step(cones, lam, &d.ds_scaled).min(max_step(cones, lam, &d.dz_scaled));
            if d.dtau < 0.0 {
                a = a.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-kappa / d.dkappa);
            }
            a
        };

        // predictor
        let aff = newton(&lam_sq.scaled(-1.0), -tau * kappa, 0.0);
        let alpha_aff = step_len(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        // corrector
        let mut ds_rhs = lam_sq.scaled(-1.0);
        ds_rhs.axpy(-1.0, &jordan(cones, &aff.ds_scaled, &aff.dz_scaled));
        ds_rhs.axpy(sigma * mu, &e);
        let dk_rhs = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
        let dir = newton(&ds_rhs, dk_rhs, sigma);
        let alpha = (0.99 * step_len(&dir)).min(1.0);
        if !(alpha > 1e-14) || !alpha.is_finite() {
            log::debug!("interior-point step collapsed at iteration {iter}");
            break;
        }

        x.axpy(alpha, &dir.dx, 1.0);
        s.axpy(alpha, &dir.ds);
        z.axpy(alpha, &dir.dz);
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;

        // PSD blocks are rescaled in the scaled space, which keeps them
        // well conditioned as s and z approach complementarity.
        let mut new_blocks = Vec::with_capacity(cones.len());
        let mut new_lam = Vec::with_capacity(cones.len());
        let mut failed = false;
        for (k, cone) in cones.iter().enumerate() {
            match cone {
                Cone::Psd(_) => {
                    let mut st = lam.0[k].as_mat().clone();
                    mat_axpy(&mut st, alpha, dir.ds_scaled.0[k].as_mat());
                    let mut zt = lam.0[k].as_mat().clone();
                    mat_axpy(&mut zt, alpha, dir.dz_scaled.0[k].as_mat());
                    let st = (&st + st.transpose()) * 0.5;
                    let zt = (&zt + zt.transpose()) * 0.5;
                    let Some((rt_, rtinv, l)) = psd_scaling_from(&st, &zt) else {
                        failed = true;
                        break;
                    };
                    let Scale::Psd { r, rinv } = &scaling.blocks[k] else {
                        unreachable!()
                    };
                    let r_new = r * rt_;
                    let rinv_new = rtinv * rinv;
                    let ldiag = DMatrix::from_diagonal(&l);
                    new_blocks.push(Scale::Psd {
                        r: r_new,
                        rinv: rinv_new,
                    });
                    new_lam.push(Blk::M(ldiag));
                }
                Cone::Nonneg(_) => {
                    let (sb, zb) = (s.0[k].as_vec(), z.0[k].as_vec());
                    if sb.iter().chain(zb.iter()).any(|&v| !(v > 0.0)) {
                        failed = true;
                        break;
                    }
                    new_lam.push(Blk::V(sb.zip_map(zb, |a, b| (a * b).sqrt())));
                    new_blocks.push(Scale::Lp {
                        w: zb.zip_map(sb, |z, s| (z / s).sqrt()),
                    });
                }
                Cone::Soc(_) => {
                    let Some((sc, l)) = soc_scaling(s.0[k].as_vec(), z.0[k].as_vec()) else {
                        failed = true;
                        break;
                    };
                    new_blocks.push(sc);
                    new_lam.push(Blk::V(l));
                }
            }
        }
        if failed || !(tau > 0.0) || !(kappa > 0.0) {
            log::debug!("interior-point iterate left the cone at iteration {iter}");
            break;
        }
        scaling = Scaling {
            blocks: new_blocks,
            lambda: ConeVec(new_lam),
        };
    }
    let tol = settings.reduced_tol;
    if out.primal_residual <= tol && out.dual_residual <= tol && out.relative_gap.abs() <= tol {
        out.status = IpmStatus::Inaccurate;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn soc_scaling_maps_s_and_z_to_same_point() {
        let s = DVector::from_vec(vec![3.0, 1.0, -0.5]);
        let z = DVector::from_vec(vec![2.0, -0.3, 1.2]);
        let (sc, lam) = soc_scaling(&s, &z).unwrap();
        let Scale::Soc { w, winv } = sc else { panic!() };
        let lz = &winv * &z;
        assert!((&lam - &lz).norm() < 1e-12, "{lam} vs {lz}");
        assert!((&w * &winv - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn psd_scaling_maps_s_and_z_to_same_point() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 3.0]);
        let (r, rinv, l) = psd_scaling_from(&s, &z).unwrap();
        let ws = &rinv * &s * rinv.transpose();
        let wz = r.transpose() * &z * &r;
        let ld = DMatrix::from_diagonal(&l);
        assert!((ws - &ld).norm() < 1e-12);
        assert!((wz - &ld).norm() < 1e-12);
    }

    #[test]
    fn tiny_lp() {
        // min x1 + x2  s.t.  x1 >= 1, x2 >= 2
        let prob = StandardForm {
            c: DVector::from_vec(vec![1.0, 1.0]),
            cones: vec![Cone::Nonneg(2)],
            g: vec![GBlock::Dense(-DMatrix::identity(2, 2))],
            h: ConeVec(vec![Blk::V(DVector::from_vec(vec![-1.0, -2.0]))]),
        };
        let out = solve(&prob, &settings());
        assert_eq!(out.status, IpmStatus::Optimal);
        assert!((out.primal_objective - 3.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_lp_detected() {
        // x >= 1 and -x >= 0
        let prob = StandardForm {
            c: DVector::from_vec(vec![1.0]),
            cones: vec![Cone::Nonneg(2)],
            g: vec![GBlock::Dense(DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]))],
            h: ConeVec(vec![Blk::V(DVector::from_vec(vec![-1.0, 0.0]))]),
        };
        let out = solve(&prob, &settings());
        assert_eq!(out.status, IpmStatus::PrimalInfeasible);
    }

    #[test]
    fn soc_norm_minimization() {
        // min t s.t. ||(x - 1, x + 1)|| <= t  ->  optimum sqrt(2) at x = 0
        let g = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 0.0, -1.0]);
        let prob = StandardForm {
            c: DVector::from_vec(vec![1.0, 0.0]),
            cones: vec![Cone::Soc(3)],
            g: vec![GBlock::Dense(g)],
            h: ConeVec(vec![Blk::V(DVector::from_vec(vec![0.0, -1.0, 1.0]))]),
        };
        let out = solve(&prob, &settings());
        assert_eq!(out.status, IpmStatus::Optimal);
        assert!((out.primal_objective - 2f64.sqrt()).abs() < 1e-7);
        assert!(out.x[1].abs() < 1e-6);
    }

    #[test]
    fn scalar_psd() {
        // min x s.t. [[x]] ⪰ 0
        let prob = StandardForm {
            c: DVector::from_vec(vec![1.0]),
            cones: vec![Cone::Psd(1)],
            g: vec![GBlock::Psd(vec![(0, DMatrix::from_element(1, 1, -1.0))])],
            h: ConeVec(vec![Blk::M(DMatrix::zeros(1, 1))]),
        };
        let out = solve(&prob, &settings());
        assert_eq!(out.status, IpmStatus::Optimal);
        assert!(out.x[0].abs() < 1e-7);
    }
}
