use super::{GroupStructure, Hyperparams, PriorDraw};
use crate::error::{Error, Result};
use crate::rng::{dirichlet_symmetric, half_t, ln_betaprime_variate, std_normal};
use rand::Rng;

/// One draw from the full prior, with σ and intercept defaults resolved as if
/// no data were observed.
pub fn sample_prior<R: Rng + ?Sized>(
    hyper: &Hyperparams,
    structure: &GroupStructure,
    rng: &mut R,
) -> Result<PriorDraw> {
    sample_prior_with_data(hyper, structure, &[], rng)
}

/// One draw from the full prior, resolving data-dependent σ and intercept
/// defaults from `y`. A flat intercept prior yields `b0 = 0`.
pub fn sample_prior_with_data<R: Rng + ?Sized>(
    hyper: &Hyperparams,
    structure: &GroupStructure,
    y: &[f64],
    rng: &mut R,
) -> Result<PriorDraw> {
    hyper.check_structure(structure)?;
    let tau2 = ln_betaprime_variate(hyper.a1(), hyper.a2(), rng).exp();
    if !(tau2.is_finite() && tau2 > 0.0) {
        return Err(Error::numeric("sample_prior", format!("tau2 draw {tau2} is not a positive finite number")));
    }
    let phi = dirichlet_symmetric(hyper.a_g(), structure.n_groups(), rng)?;
    let varphi = structure
        .sizes()
        .iter()
        .zip(hyper.c())
        .map(|(&p, &c)| dirichlet_symmetric(c, p, rng))
        .collect::<Result<Vec<_>>>()?;
    let sigma = half_t(hyper.sigma().df, hyper.sigma().resolve_scale(y), rng);
    let sigma2 = sigma * sigma;
    let lambda2 = PriorDraw::lambda2_from_parts(tau2, &phi, &varphi);
    let b = lambda2.iter().map(|&l| std_normal(rng) * (l * sigma2).sqrt()).collect();
    let b0 = match hyper.intercept().resolve(y) {
        Some((m, s)) => m + s * std_normal(rng),
        None => 0.0,
    };
    Ok(PriorDraw { tau2, phi, varphi, sigma2, lambda2, b, b0 })
}
