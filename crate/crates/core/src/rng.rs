//! Random variate helpers shared by the prior, the sampler and the harness.
//!
//! Every stochastic routine in the crate takes an explicit `&mut impl Rng`;
//! [`seeded`] and [`stream`] build the ChaCha8 generators used throughout.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};

/// Concentrations below this are drawn in log space.
pub const LOG_SPACE_CONCENTRATION: f64 = 0.05;
/// Simplex coordinates below this count as underflow and trigger a redraw.
pub const SIMPLEX_FLOOR: f64 = 1e-300;
pub const MAX_SIMPLEX_ATTEMPTS: usize = 100;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `id` of the generator for `seed`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = seeded(seed);
    rng.set_stream(id);
    rng
}

/// Mixes `parts` into `base` (SplitMix64 finalizer), giving well-separated
/// seeds for nested units of work such as replications and fits.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base.wrapping_add(0x9e37_79b9_7f4a_7c15)), |acc, &p| {
        mix(acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15))
    })
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform on the open interval (0, 1).
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// `ln X` for `X ~ Gamma(shape, 1)`.
///
/// Small shapes use `X = Y U^{1/shape}` with `Y ~ Gamma(shape + 1)`, which keeps
/// the logarithm finite where `X` itself would underflow.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("shape checked by caller");
        return g.sample(rng).ln();
    }
    let g = Gamma::new(shape + 1.0, 1.0).expect("shape checked by caller");
    g.sample(rng).ln() + open_unit(rng).ln() / shape
}

/// `ln X` for `X ~ BetaPrime(s1, s2)`, via `ξ ~ Gamma(s2, 1)`, `X | ξ ~ Gamma(s1, rate ξ)`.
pub fn ln_betaprime_variate<R: Rng + ?Sized>(s1: f64, s2: f64, rng: &mut R) -> f64 {
    let ln_xi = ln_gamma_variate(s2, rng);
    ln_gamma_variate(s1, rng) - ln_xi
}

/// Symmetric Dirichlet draw of dimension `k` from normalized gamma variates.
pub fn dirichlet_symmetric<R: Rng + ?Sized>(alpha: f64, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha.is_finite()) || k == 0 {
        return Err(Error::domain("dirichlet", format!("need alpha > 0 and k >= 1, got ({alpha}, {k})")));
    }
    if k == 1 {
        return Ok(vec![1.0]);
    }
    for _ in 0..MAX_SIMPLEX_ATTEMPTS {
        let draw = if alpha < LOG_SPACE_CONCENTRATION {
            let logs: Vec<f64> = (0..k).map(|_| ln_gamma_variate(alpha, rng)).collect();
            let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
            logs.iter().map(|l| (l - lse).exp()).collect::<Vec<_>>()
        } else {
            let g = Gamma::new(alpha, 1.0).expect("alpha checked");
            let xs: Vec<f64> = (0..k).map(|_| g.sample(rng)).collect();
            let s: f64 = xs.iter().sum();
            xs.iter().map(|x| x / s).collect()
        };
        if draw.iter().all(|&x| x >= SIMPLEX_FLOOR && x.is_finite()) {
            return Ok(draw);
        }
    }
    Err(Error::numeric(
        "dirichlet",
        format!("Dirichlet({alpha}) in dimension {k} underflowed on {MAX_SIMPLEX_ATTEMPTS} attempts"),
    ))
}

/// `|T| * scale` with `T ~ Student-t(df)`.
pub fn half_t<R: Rng + ?Sized>(df: f64, scale: f64, rng: &mut R) -> f64 {
    let t = StudentT::new(df).expect("df checked by caller");
    scale * t.sample(rng).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_and_repeat() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, 0).random()).collect();
        let mut s0 = stream(7, 0);
        let mut s1 = stream(7, 1);
        assert_eq!(a[0], a[1]);
        assert_ne!(s0.random::<u64>(), s1.random::<u64>());
    }

    #[test]
    fn tiny_concentration_dirichlet_sums_to_one() {
        let mut rng = seeded(3);
        for _ in 0..200 {
            let d = dirichlet_symmetric(0.02, 10, &mut rng).unwrap();
            let s: f64 = d.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ln_gamma_small_shape_mean() {
        // E[X] = shape
        let mut rng = seeded(5);
        let n = 200_000;
        let m: f64 = (0..n).map(|_| ln_gamma_variate(0.3, &mut rng).exp()).sum::<f64>() / n as f64;
        assert!((m - 0.3).abs() < 0.01, "{m}");
    }
}
