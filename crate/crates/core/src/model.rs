//! Linear regression with the Group-R2 prior on an unconstrained space.
//!
//! The parameter vector is laid out as
//!
//! ```text
//! [ z (p) | ln τ² | φ sticks (G-1) | φ_1 sticks (p_1-1) ... φ_G sticks | ln σ | b0 ]
//! ```
//!
//! with `b_gl = z_gl σ sqrt(φ_gl φ_g τ²)`. Simplices use stick-breaking centered so
//! that the zero vector maps to the uniform simplex.

use crate::error::{ensure, Error, Result};
use crate::prior::{GroupStructure, Hyperparams, PriorDraw};
use crate::sampler::{sample, ChainDraws, SamplerConfig, Target};
use crate::specfun::{ln_beta, ln_gamma};
use nalgebra::{DMatrix, DVector};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Tolerance on the unit sample variance of each design column.
const STANDARDIZED_TOL: f64 = 1e-6;

/// Response, design matrix and group layout.
#[derive(Debug, Clone)]
pub struct RegressionData {
    y: Vec<f64>,
    x: DMatrix<f64>,
    structure: GroupStructure,
}

impl RegressionData {
    /// Columns of `x` must already have unit sample variance. `n = 0` is
    /// allowed and gives a prior-only target.
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, structure: GroupStructure) -> Result<Self> {
        ensure(x.nrows() == y.len(), "RegressionData", || {
            format!("y has {} rows but X has {}", y.len(), x.nrows())
        })?;
        ensure(x.ncols() == structure.p(), "RegressionData", || {
            format!("X has {} columns but the groups cover {}", x.ncols(), structure.p())
        })?;
        ensure(y.iter().chain(x.iter()).all(|v| v.is_finite()), "RegressionData", || {
            "y and X must be finite".into()
        })?;
        let n = y.len();
        if n >= 2 {
            for (j, col) in x.column_iter().enumerate() {
                let m = col.mean();
                let v = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
                ensure((v - 1.0).abs() < STANDARDIZED_TOL, "RegressionData", || {
                    format!("column {j} has sample variance {v}; standardize X before fitting")
                })?;
            }
        } else {
            ensure(n == 0, "RegressionData", || "a single observation cannot be standardized".into())?;
        }
        Ok(Self { y, x, structure })
    }

    /// No observations: the target is the prior.
    pub fn empty(structure: GroupStructure) -> Self {
        let p = structure.p();
        Self { y: Vec::new(), x: DMatrix::zeros(0, p), structure }
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }
    pub fn structure(&self) -> &GroupStructure {
        &self.structure
    }
    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Centers and scales each column to mean 0 and unit sample variance, returning
/// the column means and standard deviations. Constant columns are a domain error.
pub fn standardize(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    let n = x.nrows();
    ensure(n >= 2, "standardize", || format!("need at least two rows, got {n}"))?;
    let mut out = x.clone();
    let mut means = Vec::with_capacity(x.ncols());
    let mut sds = Vec::with_capacity(x.ncols());
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let m = col.mean();
        let s = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        ensure(s > 0.0 && s.is_finite(), "standardize", || format!("column {j} is constant"))?;
        col.apply(|v| *v = (*v - m) / s);
        means.push(m);
        sds.push(s);
    }
    Ok((out, means, sds))
}

/// Unconstrained parameters, see the module docs for the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct UnconstrainedParams {
    pub z: Vec<f64>,
    pub log_tau2: f64,
    pub phi_raw: Vec<f64>,
    pub varphi_raw: Vec<Vec<f64>>,
    pub log_sigma: f64,
    pub b0: f64,
}

impl UnconstrainedParams {
    pub fn zeros(structure: &GroupStructure) -> Self {
        Self {
            z: vec![0.0; structure.p()],
            log_tau2: 0.0,
            phi_raw: vec![0.0; structure.n_groups() - 1],
            varphi_raw: structure.sizes().iter().map(|&p| vec![0.0; p - 1]).collect(),
            log_sigma: 0.0,
            b0: 0.0,
        }
    }

    pub fn dim(structure: &GroupStructure) -> usize {
        2 * structure.p() + 2
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.z.clone();
        v.push(self.log_tau2);
        v.extend(&self.phi_raw);
        for s in &self.varphi_raw {
            v.extend(s);
        }
        v.push(self.log_sigma);
        v.push(self.b0);
        v
    }

    pub fn from_slice(theta: &[f64], structure: &GroupStructure) -> Result<Self> {
        let d = Self::dim(structure);
        ensure(theta.len() == d, "UnconstrainedParams", || {
            format!("expected {d} values, got {}", theta.len())
        })?;
        let p = structure.p();
        let g = structure.n_groups();
        let mut at = p + 1 + (g - 1);
        let varphi_raw = structure
            .sizes()
            .iter()
            .map(|&s| {
                let v = theta[at..at + s - 1].to_vec();
                at += s - 1;
                v
            })
            .collect();
        Ok(Self {
            z: theta[..p].to_vec(),
            log_tau2: theta[p],
            phi_raw: theta[p + 1..p + g].to_vec(),
            varphi_raw,
            log_sigma: theta[d - 2],
            b0: theta[d - 1],
        })
    }

    /// Inverse of [`constrain`].
    pub fn unconstrain(draw: &PriorDraw, structure: &GroupStructure) -> Result<Self> {
        ensure(draw.b.len() == structure.p() && draw.varphi.len() == structure.n_groups(), "unconstrain", || {
            "draw does not match the group structure".into()
        })?;
        ensure(draw.tau2 > 0.0 && draw.sigma2 > 0.0, "unconstrain", || {
            format!("tau2 = {} and sigma2 = {} must be positive", draw.tau2, draw.sigma2)
        })?;
        let sigma = draw.sigma();
        let z = draw
            .b
            .iter()
            .zip(&draw.lambda2)
            .map(|(b, l)| b / (sigma * l.sqrt()))
            .collect::<Vec<_>>();
        ensure(z.iter().all(|v| v.is_finite()), "unconstrain", || "lambda2 must be positive".into())?;
        Ok(Self {
            z,
            log_tau2: draw.tau2.ln(),
            phi_raw: stick_unbreak(&draw.phi)?,
            varphi_raw: draw.varphi.iter().map(|v| stick_unbreak(v)).collect::<Result<_>>()?,
            log_sigma: sigma.ln(),
            b0: draw.b0,
        })
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Stick proportions of one simplex: `u_k = y_k - ln(K-k-1)` for `k < K-1`.
struct Sticks {
    /// `ln x_k` for all `K` coordinates.
    ln_x: Vec<f64>,
    /// `z_k = sigmoid(u_k)`.
    z: Vec<f64>,
    ln_z: Vec<f64>,
    ln_1mz: Vec<f64>,
}

fn stick_break(raw: &[f64]) -> Sticks {
    let k = raw.len() + 1;
    let mut ln_x = Vec::with_capacity(k);
    let mut z = Vec::with_capacity(k - 1);
    let mut ln_z = Vec::with_capacity(k - 1);
    let mut ln_1mz = Vec::with_capacity(k - 1);
    let mut ln_rem = 0.0;
    for (i, &y) in raw.iter().enumerate() {
        let u = y - ((k - i - 1) as f64).ln();
        let lz = -softplus(-u);
        let l1 = -softplus(u);
        ln_x.push(ln_rem + lz);
        ln_rem += l1;
        z.push(sigmoid(u));
        ln_z.push(lz);
        ln_1mz.push(l1);
    }
    ln_x.push(ln_rem);
    Sticks { ln_x, z, ln_z, ln_1mz }
}

fn stick_unbreak(x: &[f64]) -> Result<Vec<f64>> {
    let k = x.len();
    ensure(x.iter().all(|&v| v > 0.0), "unconstrain", || format!("simplex {x:?} must be positive"))?;
    let mut rem = 1.0;
    let mut out = Vec::with_capacity(k - 1);
    for (i, &xi) in x[..k - 1].iter().enumerate() {
        let zk = (xi / rem).min(1.0);
        out.push((zk / (1.0 - zk)).ln() + ((k - i - 1) as f64).ln());
        rem -= xi;
    }
    Ok(out)
}

impl Sticks {
    /// `ln |∂(x_0..x_{K-2}) / ∂y|`.
    fn log_jacobian(&self) -> f64 {
        let mut ln_rem = 0.0;
        let mut total = 0.0;
        for (lz, l1) in self.ln_z.iter().zip(&self.ln_1mz) {
            total += ln_rem + lz + l1;
            ln_rem += l1;
        }
        total
    }

    /// Symmetric `Dir(α)` density of the simplex plus the log Jacobian, written
    /// as independent `Beta(α, α(K-k-1))` sticks.
    fn dirichlet_logdensity(&self, alpha: f64) -> Result<f64> {
        let k = self.ln_x.len();
        let mut total = 0.0;
        for (i, (lz, l1)) in self.ln_z.iter().zip(&self.ln_1mz).enumerate() {
            let beta = alpha * (k - i - 1) as f64;
            total += alpha * lz + beta * l1 - ln_beta(alpha, beta)?;
        }
        Ok(total)
    }

    /// Gradient of the Dirichlet term with respect to the raw values.
    fn dirichlet_grad(&self, alpha: f64, out: &mut [f64]) {
        let k = self.ln_x.len();
        for (i, &z) in self.z.iter().enumerate() {
            out[i] += alpha * (1.0 - z) - alpha * (k - i - 1) as f64 * z;
        }
    }

    /// Chain rule from `g_k = ∂L/∂ ln x_k` to the raw values.
    fn pullback(&self, g: &[f64], out: &mut [f64]) {
        let k = self.ln_x.len();
        let mut suffix = g[k - 1];
        for i in (0..k - 1).rev() {
            out[i] += g[i] * (1.0 - self.z[i]) - self.z[i] * suffix;
            suffix += g[i];
        }
    }
}

/// Maps unconstrained parameters to a prior draw, with the log Jacobian of the
/// map onto `(b, τ², φ_1..φ_{G-1}, φ_g1..φ_g(p_g-1), σ, b0)`.
pub fn constrain(params: &UnconstrainedParams, structure: &GroupStructure) -> Result<(PriorDraw, f64)> {
    let theta = params.to_vec();
    ensure(theta.len() == UnconstrainedParams::dim(structure) && params.z.len() == structure.p(), "constrain", || {
        "parameter shapes do not match the group structure".into()
    })?;
    ensure(theta.iter().all(|v| v.is_finite()), "constrain", || format!("non-finite input {theta:?}"))?;
    let st = State::new(&theta, structure);
    let draw = st.draw(structure);
    let mut log_jac = st.log_tau2 + st.log_sigma + st.phi.log_jacobian();
    for s in &st.varphi {
        log_jac += s.log_jacobian();
    }
    log_jac += st.half_ln_var.iter().sum::<f64>();
    Ok((draw, log_jac))
}

/// Intermediate quantities shared by the value, the gradient and the draw.
struct State<'a> {
    z: &'a [f64],
    log_tau2: f64,
    log_sigma: f64,
    b0: f64,
    phi: Sticks,
    varphi: Vec<Sticks>,
    /// `ln(σ sqrt(λ²_j))`
    half_ln_var: Vec<f64>,
    b: Vec<f64>,
}

impl<'a> State<'a> {
    fn new(theta: &'a [f64], structure: &GroupStructure) -> Self {
        let p = structure.p();
        let g = structure.n_groups();
        let d = theta.len();
        let log_tau2 = theta[p];
        let log_sigma = theta[d - 2];
        let phi = stick_break(&theta[p + 1..p + g]);
        let mut at = p + g;
        let varphi: Vec<Sticks> = structure
            .sizes()
            .iter()
            .map(|&s| {
                let st = stick_break(&theta[at..at + s - 1]);
                at += s - 1;
                st
            })
            .collect();
        let mut half_ln_var = Vec::with_capacity(p);
        let mut b = Vec::with_capacity(p);
        for j in 0..p {
            let (gi, l) = structure.position(j);
            let h = log_sigma + 0.5 * (log_tau2 + phi.ln_x[gi] + varphi[gi].ln_x[l]);
            half_ln_var.push(h);
            b.push(theta[j] * h.exp());
        }
        Self { z: &theta[..p], log_tau2, log_sigma, b0: theta[d - 1], phi, varphi, half_ln_var, b }
    }

    fn draw(&self, structure: &GroupStructure) -> PriorDraw {
        let tau2 = self.log_tau2.exp();
        let phi: Vec<f64> = self.phi.ln_x.iter().map(|v| v.exp()).collect();
        let varphi: Vec<Vec<f64>> = self.varphi.iter().map(|s| s.ln_x.iter().map(|v| v.exp()).collect()).collect();
        let lambda2 = (0..structure.p())
            .map(|j| {
                let (g, l) = structure.position(j);
                (self.log_tau2 + self.phi.ln_x[g] + self.varphi[g].ln_x[l]).exp()
            })
            .collect();
        PriorDraw {
            tau2,
            phi,
            varphi,
            sigma2: (2.0 * self.log_sigma).exp(),
            lambda2,
            b: self.b.clone(),
            b0: self.b0,
        }
    }
}

/// The posterior target for one data set and prior.
#[derive(Debug, Clone)]
pub struct GroupR2Model {
    data: RegressionData,
    hyper: Hyperparams,
    sigma_scale: f64,
    intercept: Option<(f64, f64)>,
    /// Constant part of the log density.
    constant: f64,
}

impl GroupR2Model {
    pub fn new(data: RegressionData, hyper: Hyperparams) -> Result<Self> {
        hyper.check_structure(data.structure())?;
        let sigma_scale = hyper.sigma().resolve_scale(data.y());
        let intercept = hyper.intercept().resolve(data.y());
        let nu = hyper.sigma().df;
        let n = data.n() as f64;
        let p = data.structure().p() as f64;
        let mut constant = -0.5 * n * LN_2PI - 0.5 * p * LN_2PI - ln_beta(hyper.a1(), hyper.a2())?;
        // half-t on σ
        constant += std::f64::consts::LN_2 + ln_gamma(0.5 * (nu + 1.0))? - ln_gamma(0.5 * nu)?
            - 0.5 * (nu * std::f64::consts::PI).ln()
            - sigma_scale.ln();
        if let Some((_, s)) = intercept {
            constant -= 0.5 * LN_2PI + s.ln();
        }
        Ok(Self { data, hyper, sigma_scale, intercept, constant })
    }

    pub fn data(&self) -> &RegressionData {
        &self.data
    }
    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }
    pub fn structure(&self) -> &GroupStructure {
        self.data.structure()
    }

    pub fn dim(&self) -> usize {
        UnconstrainedParams::dim(self.structure())
    }

    /// Log posterior density (up to the evidence) and its gradient, both on the
    /// unconstrained space.
    pub fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        let s = self.structure();
        let d = self.dim();
        ensure(theta.len() == d && grad.len() == d, "log_joint", || {
            format!("expected {d} parameters, got {} (gradient buffer {})", theta.len(), grad.len())
        })?;
        grad.iter_mut().for_each(|v| *v = 0.0);
        let st = State::new(theta, s);
        let p = s.p();
        let g = s.n_groups();
        let mut lp = self.constant;

        // likelihood
        let n = self.data.n();
        let sigma2 = (2.0 * st.log_sigma).exp();
        let mut gb = vec![0.0; p];
        if n > 0 {
            let b = DVector::from_column_slice(&st.b);
            let fitted = self.data.x() * &b;
            let r = DVector::from_iterator(n, self.data.y().iter().zip(fitted.iter()).map(|(y, f)| y - st.b0 - f));
            let rss = r.norm_squared();
            lp += -(n as f64) * st.log_sigma - 0.5 * rss / sigma2;
            let xtr = self.data.x().tr_mul(&r);
            for j in 0..p {
                gb[j] = xtr[j] / sigma2;
            }
            grad[d - 1] += r.sum() / sigma2;
            grad[d - 2] += -(n as f64) + rss / sigma2;
        }

        // innovations z ~ N(0, 1); b = z exp(h)
        let mut g_ln_phi = vec![0.0; g];
        let mut g_ln_varphi: Vec<Vec<f64>> = s.sizes().iter().map(|&k| vec![0.0; k]).collect();
        let mut g_h_total = 0.0;
        for j in 0..p {
            lp -= 0.5 * st.z[j] * st.z[j];
            grad[j] += gb[j] * st.half_ln_var[j].exp() - st.z[j];
            // ∂b_j/∂h_j = b_j, h_j = ln σ + (ln τ² + ln φ_g + ln φ_gl)/2
            let gh = gb[j] * st.b[j];
            let (gi, l) = s.position(j);
            g_h_total += gh;
            g_ln_phi[gi] += 0.5 * gh;
            g_ln_varphi[gi][l] += 0.5 * gh;
        }
        grad[p] += 0.5 * g_h_total;
        grad[d - 2] += g_h_total;

        // τ² ~ BetaPrime(a1, a2), plus the log Jacobian ln τ²
        let (a1, a2) = (self.hyper.a1(), self.hyper.a2());
        lp += a1 * st.log_tau2 - (a1 + a2) * softplus(st.log_tau2);
        grad[p] += a1 - (a1 + a2) * sigmoid(st.log_tau2);

        // simplices
        let a_g = self.hyper.a_g();
        lp += st.phi.dirichlet_logdensity(a_g)?;
        st.phi.dirichlet_grad(a_g, &mut grad[p + 1..p + g]);
        st.phi.pullback(&g_ln_phi, &mut grad[p + 1..p + g]);
        let mut at = p + g;
        for (gi, sticks) in st.varphi.iter().enumerate() {
            let k = s.size(gi) - 1;
            let c = self.hyper.c()[gi];
            lp += sticks.dirichlet_logdensity(c)?;
            sticks.dirichlet_grad(c, &mut grad[at..at + k]);
            sticks.pullback(&g_ln_varphi[gi], &mut grad[at..at + k]);
            at += k;
        }

        // σ ~ half-t(ν, scale), plus the log Jacobian ln σ
        let nu = self.hyper.sigma().df;
        let q = (2.0 * (st.log_sigma - self.sigma_scale.ln())).exp() / nu;
        lp += -0.5 * (nu + 1.0) * q.ln_1p() + st.log_sigma;
        grad[d - 2] += 1.0 - (nu + 1.0) * q / (1.0 + q);

        if let Some((m, sd)) = self.intercept {
            let u = (st.b0 - m) / sd;
            lp -= 0.5 * u * u;
            grad[d - 1] -= u / sd;
        }

        if !lp.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("log_joint", format!("non-finite log density {lp} at parameters {theta:?}")));
        }
        Ok(lp)
    }

    pub fn constrain(&self, theta: &[f64]) -> Result<PriorDraw> {
        let params = UnconstrainedParams::from_slice(theta, self.structure())?;
        Ok(constrain(&params, self.structure())?.0)
    }
}

impl Target for GroupR2Model {
    type Draw = PriorDraw;

    fn dim(&self) -> usize {
        GroupR2Model::dim(self)
    }

    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        GroupR2Model::log_density_grad(self, theta, grad)
    }

    fn transform(&self, theta: &[f64]) -> Result<PriorDraw> {
        self.constrain(theta)
    }
}

/// Samples the posterior of `hyper` given `data`.
pub fn fit(data: RegressionData, hyper: Hyperparams, config: &SamplerConfig) -> Result<ChainDraws<PriorDraw>> {
    let model = GroupR2Model::new(data, hyper)?;
    sample(&model, None, config)
}

/// Log posterior density and gradient at `params`.
pub fn log_joint(params: &UnconstrainedParams, data: &RegressionData, hyper: &Hyperparams) -> Result<(f64, Vec<f64>)> {
    let model = GroupR2Model::new(data.clone(), hyper.clone())?;
    let theta = params.to_vec();
    let mut grad = vec![0.0; theta.len()];
    let lp = model.log_density_grad(&theta, &mut grad)?;
    Ok((lp, grad))
}

/// `ln N(y_new; b0 + x_newᵀ b, σ²)` for one draw.
pub fn pointwise_predictive_logdens(y_new: f64, x_new: &[f64], draw: &PriorDraw) -> Result<f64> {
    ensure(x_new.len() == draw.b.len(), "pointwise_predictive_logdens", || {
        format!("x_new has {} entries but the draw has {} coefficients", x_new.len(), draw.b.len())
    })?;
    let mu = draw.b0 + x_new.iter().zip(&draw.b).map(|(x, b)| x * b).sum::<f64>();
    let r = y_new - mu;
    Ok(-0.5 * LN_2PI - 0.5 * draw.sigma2.ln() - 0.5 * r * r / draw.sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vector_gives_uniform_simplices() {
        let s = GroupStructure::new(vec![3, 1, 4]).unwrap();
        let (d, _) = constrain(&UnconstrainedParams::zeros(&s), &s).unwrap();
        for &v in &d.phi {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        for (g, v) in d.varphi.iter().enumerate() {
            for &x in v {
                assert!((x - 1.0 / s.size(g) as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn scalar_model_has_no_sticks() {
        let s = GroupStructure::new(vec![1]).unwrap();
        assert_eq!(UnconstrainedParams::dim(&s), 4);
        let p = UnconstrainedParams { z: vec![1.3], log_tau2: 0.4, phi_raw: vec![], varphi_raw: vec![vec![]], log_sigma: -0.2, b0: 0.0 };
        let (d, _) = constrain(&p, &s).unwrap();
        assert!((d.b[0] - 1.3 * (-0.2f64).exp() * 0.2f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn round_trip() {
        let s = GroupStructure::new(vec![3, 2]).unwrap();
        let theta: Vec<f64> = (0..UnconstrainedParams::dim(&s)).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.6).collect();
        let p = UnconstrainedParams::from_slice(&theta, &s).unwrap();
        let (d, _) = constrain(&p, &s).unwrap();
        let back = UnconstrainedParams::unconstrain(&d, &s).unwrap().to_vec();
        for (a, b) in theta.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10, "{theta:?} vs {back:?}");
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let s = GroupStructure::new(vec![2]).unwrap();
        let mut p = UnconstrainedParams::zeros(&s);
        p.log_tau2 = f64::NAN;
        assert!(constrain(&p, &s).unwrap_err().is_domain());
    }

    #[test]
    fn unstandardized_design_is_rejected() {
        let s = GroupStructure::new(vec![1]).unwrap();
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 4.0]);
        assert!(RegressionData::new(vec![0.0; 3], x.clone(), s.clone()).unwrap_err().is_domain());
        let (xs, _, _) = standardize(&x).unwrap();
        assert!(RegressionData::new(vec![0.0; 3], xs, s).is_ok());
    }
}
