use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;

use super::continuation::{GaussianValue, PathWalker};
use super::{anchor_offset, log_partition_function, CorrelationGrid2D};
use crate::error::{Error, Result};
use crate::model::DuschinskiiSystem;
use crate::numerics::{
    kernel_a, kernel_b, kernel_b_minus_a, ComplexMatrix, Congruence, KernelSet, LuFactor,
    PhasedDeterminant,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Which thermal off-diagonal block the `4n×4n` matrix `Σ` carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaForm {
    /// `−Sᵀa_g(−iβ)S`, as obtained when the thermal kernel is written in excited-state coordinates.
    #[default]
    Appendix,
    /// Bare `−a_g(−iβ)`; kept for comparison against exact traces.
    MainText,
}

/// The matrices entering the nonequilibrium correlation at one time pair.
#[derive(Debug, Clone)]
pub struct NeqKernelSet {
    pub sigma: ComplexMatrix,
    /// `b_g(t′−t″) − a_g(t′−t″)`
    pub g: ComplexMatrix,
    /// `b_g(−iβ) − a_g(−iβ)`
    pub g_beta: ComplexMatrix,
    pub times: (f64, f64),
}

fn real(t: f64) -> Complex64 {
    Complex64::new(t, 0.0)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ` exactly as laid out block by block, with the bare `b_g`, `a_g` kernels.
pub fn neq_kernels(sys: &DuschinskiiSystem, t1: f64, t2: f64, beta: f64) -> Result<NeqKernelSet> {
    neq_kernels_with_form(sys, t1, t2, beta, SigmaForm::Appendix)
}

pub fn neq_kernels_with_form(
    sys: &DuschinskiiSystem,
    t1: f64,
    t2: f64,
    beta: f64,
    form: SigmaForm,
) -> Result<NeqKernelSet> {
    let n = sys.dim();
    let cong = Congruence::new(&sys.s);
    let tb = Complex64::new(0.0, -beta);
    let tau = real(t1 - t2);
    let p = cong.apply(&kernel_b(&sys.omega_g, tb)?);
    let a_beta = kernel_a(&sys.omega_g, tb)?;
    let k = match form {
        SigmaForm::Appendix => cong.apply(&a_beta),
        SigmaForm::MainText => ComplexMatrix::from_diagonal(&a_beta),
    };
    let sbs = cong.apply(&kernel_b(&sys.omega_g, tau)?);
    let sas = cong.apply(&kernel_a(&sys.omega_g, tau)?);
    let ae1 = ComplexMatrix::from_diagonal(&kernel_a(&sys.omega_e, real(-t1))?);
    let be1 = kernel_b(&sys.omega_e, real(-t1))?;
    let ae2 = ComplexMatrix::from_diagonal(&kernel_a(&sys.omega_e, real(t2))?);
    let be2 = kernel_b(&sys.omega_e, real(t2))?;

    let mut sigma = ComplexMatrix::zeros(4 * n, 4 * n);
    let mut xx = p.clone();
    xx.add_diagonal(&be2);
    let mut yy = p;
    yy.add_diagonal(&be1);
    let mut zz = sbs.clone();
    zz.add_diagonal(&be1);
    let mut ww = sbs;
    ww.add_diagonal(&be2);
    let mk = k.scale((-1.0).into());
    let mae1 = ae1.scale((-1.0).into());
    let mae2 = ae2.scale((-1.0).into());
    let msas = sas.scale((-1.0).into());
    for (r, c, block) in [
        (0, 0, &xx),
        (0, 1, &mk),
        (0, 3, &mae2),
        (1, 0, &mk),
        (1, 1, &yy),
        (1, 2, &mae1),
        (2, 1, &mae1),
        (2, 2, &zz),
        (2, 3, &msas),
        (3, 0, &mae2),
        (3, 2, &msas),
        (3, 3, &ww),
    ] {
        sigma.set_block(r * n, c * n, block);
    }
    Ok(NeqKernelSet {
        sigma,
        g: ComplexMatrix::from_diagonal(&kernel_b_minus_a(&sys.omega_g, tau)?),
        g_beta: ComplexMatrix::from_diagonal(&kernel_b_minus_a(&sys.omega_g, tb)?),
        times: (t1, t2),
    })
}

/// Nonequilibrium correlation
/// `C(t′,t″) = Tr[e^{−βH_g} e^{iH_e t′} e^{−iWᵀx} e^{−iH_g(t′−t″)} e^{iWᵀx} e^{−iH_e t″}] / Z_g`.
#[derive(Debug, Clone)]
pub struct NeqCorrelator {
    sys: DuschinskiiSystem,
    beta: f64,
    form: SigmaForm,
    cong: Congruence,
    log_z: f64,
    /// `Sᵀb_g(−iβ)S`
    p: ComplexMatrix,
    /// thermal off-diagonal block (sign not included)
    k: ComplexMatrix,
    /// `Sᵀ(G_β d)`
    u_beta: Vec<Complex64>,
    /// `dᵀG_βd`
    dgd_beta: Complex64,
    det_a_beta: PhasedDeterminant,
    d: Vec<Complex64>,
    w: Vec<Complex64>,
    offset: f64,
}

/// Per-`τ` pieces shared by every point on one lag diagonal.
struct LagCache {
    sgs: ComplexMatrix,
    shs: ComplexMatrix,
    /// `Sᵀ(G d)`
    u: Vec<Complex64>,
    dgd: Complex64,
    det_a: PhasedDeterminant,
}

/// Per-`t″` pieces after eliminating the first thermal block.
struct ColumnCache {
    be: Vec<Complex64>,
    kmk: ComplexMatrix,
    /// `K M⁻¹ a_e(t″)`
    kma: ComplexMatrix,
    /// `a_e(t″) M⁻¹ a_e(t″)`
    ama: ComplexMatrix,
    km: Vec<Complex64>,
    am: Vec<Complex64>,
    c: Complex64,
    det_m: PhasedDeterminant,
    det_a: PhasedDeterminant,
}

/// Per-`t′` diagonal kernels.
struct RowCache {
    ae: Vec<Complex64>,
    be: Vec<Complex64>,
    det_a: PhasedDeterminant,
}

impl NeqCorrelator {
    pub fn new(sys: &DuschinskiiSystem, beta: f64) -> Result<Self> {
        Self::with_form(sys, beta, SigmaForm::Appendix)
    }

    pub fn with_form(sys: &DuschinskiiSystem, beta: f64, form: SigmaForm) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        let cong = Congruence::new(&sys.s);
        let tb = Complex64::new(0.0, -beta);
        let kb = KernelSet::new(&sys.omega_g, tb)?;
        let d: Vec<Complex64> = sys.d.iter().map(|&x| x.into()).collect();
        let gd: Vec<Complex64> = kb.g.iter().zip(&d).map(|(g, d)| g * d).collect();
        let k = match form {
            SigmaForm::Appendix => cong.apply(&kb.a),
            SigmaForm::MainText => ComplexMatrix::from_diagonal(&kb.a),
        };
        Ok(Self {
            p: cong.apply(&kb.b),
            k,
            u_beta: cong.mul_transpose(&gd),
            dgd_beta: dot(&gd, &d),
            det_a_beta: PhasedDeterminant::product(&kb.a),
            log_z: log_partition_function(&sys.omega_g, beta),
            w: sys.w.iter().map(|&x| x.into()).collect(),
            d,
            offset: anchor_offset(sys),
            sys: sys.clone(),
            beta,
            form,
            cong,
        })
    }

    pub fn form(&self) -> SigmaForm {
        self.form
    }

    fn finish(&self, numerator: PhasedDeterminant, det_sigma: PhasedDeterminant, linear: Complex64, quad: Complex64) -> GaussianValue {
        let q = numerator / det_sigma;
        GaussianValue {
            prefactor: PhasedDeterminant {
                log_magnitude: q.log_magnitude - 2.0 * self.log_z,
                ..q
            },
            exponent: Complex64::i() * (linear - 0.5 * quad),
        }
    }

    fn lag(&self, tau: f64) -> Result<LagCache> {
        let kg = KernelSet::new(&self.sys.omega_g, real(tau))?;
        let gd: Vec<Complex64> = kg.g.iter().zip(&self.d).map(|(g, d)| g * d).collect();
        Ok(LagCache {
            sgs: self.cong.apply(&kg.g),
            shs: self.cong.apply(&kg.h),
            u: self.cong.mul_transpose(&gd),
            dgd: dot(&gd, &self.d),
            det_a: PhasedDeterminant::product(&kg.a),
        })
    }

    fn row_cache(&self, t1: f64) -> Result<RowCache> {
        let ae = kernel_a(&self.sys.omega_e, real(-t1))?;
        Ok(RowCache {
            det_a: PhasedDeterminant::product(&ae),
            be: kernel_b(&self.sys.omega_e, real(-t1))?,
            ae,
        })
    }

    fn column(&self, t2: f64) -> Result<ColumnCache> {
        let n = self.sys.dim();
        let ae = kernel_a(&self.sys.omega_e, real(t2))?;
        let be = kernel_b(&self.sys.omega_e, real(t2))?;
        let mut m = self.p.clone();
        m.add_diagonal(&be);
        let lu = LuFactor::new(m)?;
        let minv = lu.inverse();
        let minv_k = minv.matmul(&self.k)?;
        let kmk = self.k.matmul(&minv_k)?;
        // K M⁻¹ diag(a) and diag(a) M⁻¹ diag(a)
        let kmk_t = minv_k.transpose();
        let kma = ComplexMatrix::from_fn(n, n, |i, j| kmk_t[(i, j)] * ae[j]);
        let ama = ComplexMatrix::from_fn(n, n, |i, j| ae[i] * minv[(i, j)] * ae[j]);
        let m_u = minv.matvec(&self.u_beta)?;
        Ok(ColumnCache {
            kmk,
            kma,
            ama,
            km: self.k.matvec(&m_u)?,
            am: ae.iter().zip(&m_u).map(|(a, m)| a * m).collect(),
            c: dot(&self.u_beta, &m_u),
            det_m: lu.phased_det(),
            det_a: PhasedDeterminant::product(&ae),
            be,
        })
    }

    /// Closed form for `t′ ≠ t″`, both nonzero, with the square-root branch left open.
    ///
    /// Uses the sum and difference of the two propagator variables so that
    /// nothing cancels as `t′ → t″`.
    pub fn raw(&self, t1: f64, t2: f64) -> Result<GaussianValue> {
        let n = self.sys.dim();
        let row = self.row_cache(t1)?;
        let lag = self.lag(t1 - t2)?;
        let ae2 = kernel_a(&self.sys.omega_e, real(t2))?;
        let be2 = kernel_b(&self.sys.omega_e, real(t2))?;

        let h = 1.0 / SQRT_2;
        let mut sigma = ComplexMatrix::zeros(4 * n, 4 * n);
        let mut xx = self.p.clone();
        xx.add_diagonal(&be2);
        let mut yy = self.p.clone();
        yy.add_diagonal(&row.be);
        let mean: Vec<Complex64> = row.be.iter().zip(&be2).map(|(a, b)| 0.5 * (a + b)).collect();
        let half_diff: Vec<Complex64> = row.be.iter().zip(&be2).map(|(a, b)| 0.5 * (a - b)).collect();
        let mut ss = lag.sgs.clone();
        ss.add_diagonal(&mean);
        let mut rr = lag.shs.clone();
        rr.add_diagonal(&mean);
        let mk = self.k.scale((-1.0).into());
        sigma.set_block(0, 0, &xx);
        sigma.set_block(0, n, &mk);
        sigma.set_block(n, 0, &mk);
        sigma.set_block(n, n, &yy);
        sigma.set_block(2 * n, 2 * n, &ss);
        sigma.set_block(3 * n, 3 * n, &rr);
        for i in 0..n {
            let (x, y, s, r) = (i, n + i, 2 * n + i, 3 * n + i);
            sigma[(x, s)] = -ae2[i] * h;
            sigma[(x, r)] = ae2[i] * h;
            sigma[(y, s)] = -row.ae[i] * h;
            sigma[(y, r)] = -row.ae[i] * h;
            sigma[(s, r)] = half_diff[i];
            sigma[(s, x)] = sigma[(x, s)];
            sigma[(r, x)] = sigma[(x, r)];
            sigma[(s, y)] = sigma[(y, s)];
            sigma[(r, y)] = sigma[(y, r)];
            sigma[(r, s)] = sigma[(s, r)];
        }
        let mut v = Vec::with_capacity(4 * n);
        v.extend_from_slice(&self.u_beta);
        v.extend_from_slice(&self.u_beta);
        v.extend(lag.u.iter().map(|u| u * SQRT_2));
        v.extend(self.w.iter().map(|w| -w * SQRT_2));

        let lu = LuFactor::new(sigma)?;
        let quad = dot(&v, &lu.solve(&v)?);
        let numerator = self
            .det_a_beta
            * row.det_a
            * lag.det_a
            * PhasedDeterminant::product(&ae2);
        Ok(self.finish(numerator, lu.phased_det(), self.dgd_beta + lag.dgd, quad))
    }

    /// Closed form on the edge `t″ = 0`, where the last propagator collapses.
    pub fn raw_edge(&self, t1: f64) -> Result<GaussianValue> {
        let n = self.sys.dim();
        let row = self.row_cache(t1)?;
        let kg = KernelSet::new(&self.sys.omega_g, real(t1))?;
        let sbs = self.cong.apply(&kg.b);
        let sas = self.cong.apply(&kg.a);
        let gd: Vec<Complex64> = kg.g.iter().zip(&self.d).map(|(g, d)| g * d).collect();
        let u = self.cong.mul_transpose(&gd);

        let mut sigma = ComplexMatrix::zeros(3 * n, 3 * n);
        sigma.set_block(0, 0, &self.p.add(&sbs)?);
        let mk = self.k.scale((-1.0).into());
        let msas = sas.scale((-1.0).into());
        sigma.set_block(0, n, &mk);
        sigma.set_block(n, 0, &mk);
        sigma.set_block(0, 2 * n, &msas);
        sigma.set_block(2 * n, 0, &msas);
        let mut yy = self.p.clone();
        yy.add_diagonal(&row.be);
        sigma.set_block(n, n, &yy);
        let mut zz = sbs;
        zz.add_diagonal(&row.be);
        sigma.set_block(2 * n, 2 * n, &zz);
        for i in 0..n {
            sigma[(n + i, 2 * n + i)] = -row.ae[i];
            sigma[(2 * n + i, n + i)] = -row.ae[i];
        }
        let mut v = Vec::with_capacity(3 * n);
        v.extend((0..n).map(|i| self.u_beta[i] + u[i] + self.w[i]));
        v.extend_from_slice(&self.u_beta);
        v.extend((0..n).map(|i| u[i] - self.w[i]));

        let lu = LuFactor::new(sigma)?;
        let quad = dot(&v, &lu.solve(&v)?);
        let numerator = self
            .det_a_beta
            * row.det_a
            * PhasedDeterminant::product(&kg.a);
        Ok(self.finish(numerator, lu.phased_det(), self.dgd_beta + dot(&gd, &self.d), quad))
    }

    /// The printed `Σ` assembled literally, for cross-checking [`raw`](Self::raw).
    pub fn raw_literal(&self, t1: f64, t2: f64) -> Result<GaussianValue> {
        let n = self.sys.dim();
        let kernels = neq_kernels_with_form(&self.sys, t1, t2, self.beta, self.form)?;
        let gd: Vec<Complex64> = (0..n).map(|i| kernels.g[(i, i)] * self.d[i]).collect();
        let u = self.cong.mul_transpose(&gd);
        let mut v = Vec::with_capacity(4 * n);
        v.extend_from_slice(&self.u_beta);
        v.extend_from_slice(&self.u_beta);
        v.extend((0..n).map(|i| u[i] - self.w[i]));
        v.extend((0..n).map(|i| u[i] + self.w[i]));
        let lu = LuFactor::new(kernels.sigma)?;
        let quad = dot(&v, &lu.solve(&v)?);
        let numerator = self
            .det_a_beta
            * PhasedDeterminant::product(&kernel_a(&self.sys.omega_e, real(-t1))?)
            * PhasedDeterminant::product(&kernel_a(&self.sys.omega_g, real(t1 - t2))?)
            * PhasedDeterminant::product(&kernel_a(&self.sys.omega_e, real(t2))?);
        Ok(self.finish(numerator, lu.phased_det(), self.dgd_beta + dot(&gd, &self.d), quad))
    }

    /// Structured evaluation on grid points: the first thermal block is
    /// eliminated per `t″` and only a `3n×3n` system is factorized per point.
    fn raw_cached(&self, row: &RowCache, col: &ColumnCache, lag: &LagCache) -> Result<GaussianValue> {
        let n = self.sys.dim();
        let h = 1.0 / SQRT_2;
        let mut sigma = ComplexMatrix::zeros(3 * n, 3 * n);
        {
            let data = sigma.as_mut_slice();
            let ld = 3 * n;
            for i in 0..n {
                for j in 0..n {
                    let kma = col.kma[(i, j)];
                    let kma_t = col.kma[(j, i)];
                    let ama = 0.5 * col.ama[(i, j)];
                    data[i * ld + j] = self.p[(i, j)] - col.kmk[(i, j)];
                    data[i * ld + n + j] = -h * kma;
                    data[i * ld + 2 * n + j] = h * kma;
                    data[(n + i) * ld + j] = -h * kma_t;
                    data[(2 * n + i) * ld + j] = h * kma_t;
                    data[(n + i) * ld + n + j] = lag.sgs[(i, j)] - ama;
                    data[(2 * n + i) * ld + 2 * n + j] = lag.shs[(i, j)] - ama;
                    data[(n + i) * ld + 2 * n + j] = ama;
                    data[(2 * n + i) * ld + n + j] = ama;
                }
                let ae = row.ae[i] * h;
                let (y, s, r) = (i, n + i, 2 * n + i);
                data[y * ld + y] += row.be[i];
                data[y * ld + s] -= ae;
                data[y * ld + r] -= ae;
                data[s * ld + y] -= ae;
                data[r * ld + y] -= ae;
                let mean = 0.5 * (row.be[i] + col.be[i]);
                data[s * ld + s] += mean;
                data[r * ld + r] += mean;
                let half_diff = 0.5 * (row.be[i] - col.be[i]);
                data[s * ld + r] += half_diff;
                data[r * ld + s] += half_diff;
            }
        }
        let mut v = vec![ZERO; 3 * n];
        for i in 0..n {
            v[i] = self.u_beta[i] + col.km[i];
            v[n + i] = SQRT_2 * lag.u[i] + h * col.am[i];
            v[2 * n + i] = -SQRT_2 * self.w[i] - h * col.am[i];
        }
        let lu = LuFactor::new(sigma)?;
        let quad = col.c + dot(&v, &lu.solve(&v)?);
        let numerator = self.det_a_beta * row.det_a * lag.det_a * col.det_a;
        Ok(self.finish(numerator, col.det_m * lu.phased_det(), self.dgd_beta + lag.dgd, quad))
    }

    fn raw_any(&self, t1: f64, t2: f64) -> Result<GaussianValue> {
        if t2 == 0.0 {
            self.raw_edge(t1)
        } else {
            self.raw(t1, t2)
        }
    }

    /// Single point, continued from the diagonal where `C(t,t) = 1`.
    pub fn at(&self, t1: f64, t2: f64) -> Result<Complex64> {
        if t1 < 0.0 || t2 < 0.0 {
            return Err(Error::InvalidParameter("times must be non-negative".into()));
        }
        if t1 == t2 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        if t1 == 0.0 {
            return Ok(self.at(t2, 0.0)?.conj());
        }
        let total = (t1 - t2).abs();
        let dir = (t2 - t1).signum();
        // far enough from t1 to be representable, close enough that C ≈ 1
        let first = (1e-9 * self.offset).max(1e-12 * t1).min(0.5 * total);
        let mut walker = PathWalker::anchored_near_unity(|s| self.raw_any(t1, s), t1 + dir * first)?;
        let step = 0.25 * self.offset;
        walker.ramp(t1, t1 + dir * step.min(total))?;
        let mut dist = step;
        while dist < total {
            walker.walk_to(t1 + dir * dist)?;
            dist += step;
        }
        walker.walk_to(t2)
    }

    /// `C` on the square `times × times` for a uniform grid starting at 0.
    pub fn grid(&self, times: &[f64]) -> Result<CorrelationGrid2D> {
        let len = times.len();
        if len < 2 || times[0] != 0.0 {
            return Err(Error::InvalidParameter("grid must start at 0 and have two points".into()));
        }
        let dt = times[1];
        if times.iter().enumerate().any(|(k, &t)| (t - k as f64 * dt).abs() > 1e-9 * dt.max(1.0)) {
            return Err(Error::InvalidParameter("grid must be uniform".into()));
        }
        let lags: Vec<Option<LagCache>> = (1..len)
            .into_par_iter()
            .map(|k| off_pole(self.lag(times[k])))
            .collect::<Result<_>>()?;
        let columns: Vec<Option<ColumnCache>> = (1..len)
            .into_par_iter()
            .map(|j| off_pole(self.column(times[j])))
            .collect::<Result<_>>()?;

        let rows: Vec<Vec<Complex64>> = (1..len)
            .into_par_iter()
            .map(|i| self.grid_row(times, i, &lags, &columns))
            .collect::<Result<_>>()?;

        let mut values = vec![ZERO; len * len];
        for i in 0..len {
            values[i * len + i] = Complex64::new(1.0, 0.0);
        }
        for (i, row) in (1..len).zip(rows) {
            for (j, c) in row.into_iter().enumerate() {
                values[i * len + j] = c;
                values[j * len + i] = c.conj();
            }
        }
        Ok(CorrelationGrid2D {
            times: times.to_vec(),
            values,
            branch_anchor: Complex64::new(1.0, 0.0),
        })
    }

    /// Row `i` of the lower triangle, `C(t_i, t_j)` for `j < i`.
    fn grid_row(
        &self,
        times: &[f64],
        i: usize,
        lags: &[Option<LagCache>],
        columns: &[Option<ColumnCache>],
    ) -> Result<Vec<Complex64>> {
        let t1 = times[i];
        let dt = times[1];
        let row = self.row_cache(t1)?;
        let on_grid = |s: f64| -> Option<usize> {
            let j = (s / dt).round();
            ((s - j * dt).abs() <= 1e-12 * dt && j >= 1.0 && (j as usize) < i).then_some(j as usize)
        };
        let eval = |s: f64| -> Result<GaussianValue> {
            let cached = on_grid(s).and_then(|j| columns[j - 1].as_ref().zip(lags[i - j - 1].as_ref()));
            match cached {
                Some((col, lag)) => self.raw_cached(&row, col, lag),
                None => self.raw_any(t1, s),
            }
        };
        let first = (0.01 * self.offset).min(0.25 * dt);
        let mut walker = PathWalker::anchored_near_unity(eval, t1 - first)?;
        walker.ramp(t1, times[i - 1])?;
        let mut out = vec![ZERO; i];
        for j in (0..i).rev() {
            out[j] = walker.walk_to(times[j])?;
        }
        Ok(out)
    }
}

/// Caches that hit a kernel pole are skipped; those points fall back to the
/// nudged dense evaluation.
fn off_pole<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::SingularKernel { .. } | Error::SingularMatrix { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn neq_correlation(sys: &DuschinskiiSystem, t1: f64, t2: f64, beta: f64) -> Result<Complex64> {
    NeqCorrelator::new(sys, beta)?.at(t1, t2)
}

pub fn neq_correlation_grid(sys: &DuschinskiiSystem, beta: f64, times: &[f64]) -> Result<CorrelationGrid2D> {
    NeqCorrelator::new(sys, beta)?.grid(times)
}
