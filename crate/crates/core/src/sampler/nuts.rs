use super::{SamplerConfig, Target, MAX_ENERGY_ERROR};
use crate::error::{Error, Result};
use crate::rng::std_normal;
use rand::Rng;

/// Position, momentum and the density evaluated at the position.
#[derive(Clone)]
struct Point {
    q: Vec<f64>,
    p: Vec<f64>,
    grad: Vec<f64>,
    lp: f64,
}

pub(super) struct Transition {
    pub divergent: bool,
    pub depth: u32,
    pub n_leapfrog: u32,
    pub accept_stat: f64,
    pub energy: f64,
}

pub(super) struct Nuts<'a, T: Target> {
    target: &'a T,
    pub theta: Vec<f64>,
    pub lp: f64,
    grad: Vec<f64>,
    pub step_size: f64,
    pub inv_metric: Vec<f64>,
    max_depth: u32,
}

/// Running totals of one trajectory.
struct Tally {
    h0: f64,
    n_leapfrog: u32,
    sum_metro: f64,
    divergent: bool,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

impl<'a, T: Target> Nuts<'a, T> {
    pub fn new(target: &'a T, theta: Vec<f64>, max_depth: u32) -> Result<Self> {
        let d = theta.len();
        let mut grad = vec![0.0; d];
        let lp = target.log_density_grad(&theta, &mut grad)?;
        Ok(Self { target, theta, lp, grad, step_size: 1.0, inv_metric: vec![1.0; d], max_depth })
    }

    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p.iter().zip(&self.inv_metric).map(|(p, m)| p * p * m).sum::<f64>()
    }

    fn hamiltonian(&self, pt: &Point) -> f64 {
        let h = -pt.lp + self.kinetic(&pt.p);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    fn p_sharp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.inv_metric).map(|(p, m)| p * m).collect()
    }

    fn draw_momentum<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.inv_metric.iter().map(|m| std_normal(rng) / m.sqrt()).collect()
    }

    /// One leapfrog step of size `eps`; a failed density evaluation leaves the
    /// point with `lp = -inf`.
    fn leapfrog(&self, pt: &mut Point, eps: f64) {
        for (p, g) in pt.p.iter_mut().zip(&pt.grad) {
            *p += 0.5 * eps * g;
        }
        for ((q, p), m) in pt.q.iter_mut().zip(&pt.p).zip(&self.inv_metric) {
            *q += eps * m * p;
        }
        pt.lp = match self.target.log_density_grad(&pt.q, &mut pt.grad) {
            Ok(lp) if lp.is_finite() && pt.grad.iter().all(|g| g.is_finite()) => lp,
            _ => {
                pt.lp = f64::NEG_INFINITY;
                return;
            }
        };
        for (p, g) in pt.p.iter_mut().zip(&pt.grad) {
            *p += 0.5 * eps * g;
        }
    }

    /// Builds a subtree of `2^depth` leapfrog steps from `z`, leaving `z` at its
    /// far edge. Returns `false` when the subtree diverged or turned back.
    #[allow(clippy::too_many_arguments)]
    fn build_tree<R: Rng>(
        &self,
        depth: u32,
        z: &mut Point,
        z_propose: &mut Point,
        p_sharp_beg: &mut Vec<f64>,
        p_sharp_end: &mut Vec<f64>,
        rho: &mut [f64],
        p_beg: &mut Vec<f64>,
        p_end: &mut Vec<f64>,
        eps: f64,
        log_sum_weight: &mut f64,
        tally: &mut Tally,
        rng: &mut R,
    ) -> bool {
        if depth == 0 {
            self.leapfrog(z, eps);
            tally.n_leapfrog += 1;
            let h = self.hamiltonian(z);
            if h - tally.h0 > MAX_ENERGY_ERROR {
                tally.divergent = true;
            }
            let w = tally.h0 - h;
            *log_sum_weight = log_add(*log_sum_weight, w);
            tally.sum_metro += if w > 0.0 { 1.0 } else { w.exp() };
            z_propose.clone_from(z);
            *p_sharp_beg = self.p_sharp(&z.p);
            p_sharp_end.clone_from(p_sharp_beg);
            for (r, p) in rho.iter_mut().zip(&z.p) {
                *r += p;
            }
            p_beg.clone_from(&z.p);
            p_end.clone_from(&z.p);
            return !tally.divergent;
        }
        let d = z.q.len();

        let mut lsw_init = f64::NEG_INFINITY;
        let mut p_init_end = vec![0.0; d];
        let mut p_sharp_init_end = vec![0.0; d];
        let mut rho_init = vec![0.0; d];
        if !self.build_tree(
            depth - 1,
            z,
            z_propose,
            p_sharp_beg,
            &mut p_sharp_init_end,
            &mut rho_init,
            p_beg,
            &mut p_init_end,
            eps,
            &mut lsw_init,
            tally,
            rng,
        ) {
            return false;
        }

        let mut z_propose_final = z.clone();
        let mut lsw_final = f64::NEG_INFINITY;
        let mut p_final_beg = vec![0.0; d];
        let mut p_sharp_final_beg = vec![0.0; d];
        let mut rho_final = vec![0.0; d];
        if !self.build_tree(
            depth - 1,
            z,
            &mut z_propose_final,
            &mut p_sharp_final_beg,
            p_sharp_end,
            &mut rho_final,
            &mut p_final_beg,
            p_end,
            eps,
            &mut lsw_final,
            tally,
            rng,
        ) {
            return false;
        }

        let lsw_subtree = log_add(lsw_init, lsw_final);
        *log_sum_weight = log_add(*log_sum_weight, lsw_subtree);
        if lsw_final > lsw_subtree || rng.random::<f64>() < (lsw_final - lsw_subtree).exp() {
            std::mem::swap(z_propose, &mut z_propose_final);
        }

        let rho_subtree = add(&rho_init, &rho_final);
        for (r, s) in rho.iter_mut().zip(&rho_subtree) {
            *r += s;
        }
        let mut persist = no_u_turn(p_sharp_beg, p_sharp_end, &rho_subtree);
        persist &= no_u_turn(p_sharp_beg, &p_sharp_final_beg, &add(&rho_init, &p_final_beg));
        persist &= no_u_turn(&p_sharp_init_end, p_sharp_end, &add(&rho_final, &p_init_end));
        persist
    }

    pub fn transition<R: Rng>(&mut self, rng: &mut R) -> Result<Transition> {
        let d = self.theta.len();
        let p0 = self.draw_momentum(rng);
        let start = Point { q: self.theta.clone(), p: p0, grad: self.grad.clone(), lp: self.lp };
        let h0 = self.hamiltonian(&start);
        let mut tally = Tally { h0, n_leapfrog: 0, sum_metro: 0.0, divergent: false };

        let mut z_fwd = start.clone();
        let mut z_bck = start.clone();
        let mut z_sample = start.clone();
        let mut z_propose = start.clone();

        let mut p_fwd_fwd = start.p.clone();
        let mut p_sharp_fwd_fwd = self.p_sharp(&start.p);
        let mut p_fwd_bck = start.p.clone();
        let mut p_sharp_fwd_bck = p_sharp_fwd_fwd.clone();
        let mut p_bck_fwd = start.p.clone();
        let mut p_sharp_bck_fwd = p_sharp_fwd_fwd.clone();
        let mut p_bck_bck = start.p.clone();
        let mut p_sharp_bck_bck = p_sharp_fwd_fwd.clone();
        let mut rho = start.p.clone();
        let mut log_sum_weight = 0.0;
        let mut depth = 0;

        while depth < self.max_depth {
            let mut rho_fwd = vec![0.0; d];
            let mut rho_bck = vec![0.0; d];
            let mut lsw_subtree = f64::NEG_INFINITY;
            let valid = if rng.random::<f64>() > 0.5 {
                rho_bck.clone_from(&rho);
                p_bck_fwd.clone_from(&p_fwd_bck);
                p_sharp_bck_fwd.clone_from(&p_sharp_fwd_bck);
                self.build_tree(
                    depth,
                    &mut z_fwd,
                    &mut z_propose,
                    &mut p_sharp_fwd_bck,
                    &mut p_sharp_fwd_fwd,
                    &mut rho_fwd,
                    &mut p_fwd_bck,
                    &mut p_fwd_fwd,
                    self.step_size,
                    &mut lsw_subtree,
                    &mut tally,
                    rng,
                )
            } else {
                rho_fwd.clone_from(&rho);
                p_fwd_bck.clone_from(&p_bck_fwd);
                p_sharp_fwd_bck.clone_from(&p_sharp_bck_fwd);
                self.build_tree(
                    depth,
                    &mut z_bck,
                    &mut z_propose,
                    &mut p_sharp_bck_fwd,
                    &mut p_sharp_bck_bck,
                    &mut rho_bck,
                    &mut p_bck_fwd,
                    &mut p_bck_bck,
                    -self.step_size,
                    &mut lsw_subtree,
                    &mut tally,
                    rng,
                )
            };
            if !valid {
                break;
            }
            depth += 1;
            if lsw_subtree > log_sum_weight || rng.random::<f64>() < (lsw_subtree - log_sum_weight).exp() {
                z_sample.clone_from(&z_propose);
            }
            log_sum_weight = log_add(log_sum_weight, lsw_subtree);
            rho = add(&rho_bck, &rho_fwd);
            let mut persist = no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_fwd, &rho);
            persist &= no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_bck, &add(&rho_bck, &p_fwd_bck));
            persist &= no_u_turn(&p_sharp_bck_fwd, &p_sharp_fwd_fwd, &add(&rho_fwd, &p_bck_fwd));
            if !persist {
                break;
            }
        }

        if !z_sample.lp.is_finite() {
            return Err(Error::Sampler("selected a point with non-finite density".into()));
        }
        let energy = self.hamiltonian(&z_sample);
        self.theta = z_sample.q;
        self.grad = z_sample.grad;
        self.lp = z_sample.lp;
        Ok(Transition {
            divergent: tally.divergent,
            depth,
            n_leapfrog: tally.n_leapfrog,
            accept_stat: if tally.n_leapfrog > 0 { tally.sum_metro / tally.n_leapfrog as f64 } else { 0.0 },
            energy,
        })
    }

    /// Doubles or halves the step size until a single leapfrog step crosses an
    /// acceptance probability of 0.8.
    fn init_step_size<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        let threshold = 0.8f64.ln();
        let mut direction = 0.0;
        for _ in 0..100 {
            let mut pt = Point { q: self.theta.clone(), p: self.draw_momentum(rng), grad: self.grad.clone(), lp: self.lp };
            let h0 = self.hamiltonian(&pt);
            self.leapfrog(&mut pt, self.step_size);
            let delta = h0 - self.hamiltonian(&pt);
            if direction == 0.0 {
                direction = if delta > threshold { 1.0 } else { -1.0 };
            } else if (direction > 0.0 && delta <= threshold) || (direction < 0.0 && delta >= threshold) {
                return Ok(());
            }
            self.step_size *= if direction > 0.0 { 2.0 } else { 0.5 };
            if !(self.step_size > 1e-12 && self.step_size < 1e7) {
                return Err(Error::Sampler(format!("step size search ran away to {}", self.step_size)));
            }
        }
        Ok(())
    }
}

/// Dual averaging of the log step size.
struct DualAveraging {
    mu: f64,
    s_bar: f64,
    x_bar: f64,
    counter: f64,
    delta: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(step_size: f64, delta: f64) -> Self {
        Self { mu: (10.0 * step_size).ln(), s_bar: 0.0, x_bar: 0.0, counter: 0.0, delta }
    }

    fn update(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let eta = 1.0 / (self.counter + Self::T0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - accept_stat.min(1.0));
        let x = self.mu - self.s_bar * self.counter.sqrt() / Self::GAMMA;
        let w = self.counter.powf(-Self::KAPPA);
        self.x_bar = (1.0 - w) * self.x_bar + w * x;
        x.exp()
    }

    fn final_step_size(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// End points (exclusive) of the slow metric windows: 15% initial fast phase,
/// doubling windows starting at 25 iterations, 10% final fast phase.
pub(super) fn metric_windows(n_warmup: usize) -> Vec<usize> {
    let init = (0.15 * n_warmup as f64).round() as usize;
    let term = (0.10 * n_warmup as f64).round() as usize;
    let slow_end = n_warmup - term;
    let mut ends = Vec::new();
    let mut start = init;
    let mut size = 25;
    while start < slow_end {
        let mut end = start + size;
        // a window that would leave less than the next one is stretched to the end
        if end + 2 * size > slow_end {
            end = slow_end;
        }
        ends.push(end);
        start = end;
        size *= 2;
    }
    ends
}

pub(super) fn warmup<T: Target, R: Rng>(nuts: &mut Nuts<'_, T>, config: &SamplerConfig, rng: &mut R) -> Result<()> {
    let n = config.n_warmup;
    nuts.init_step_size(rng)?;
    let mut da = DualAveraging::new(nuts.step_size, config.target_accept);
    let windows = metric_windows(n);
    let init = (0.15 * n as f64).round() as usize;
    let d = nuts.theta.len();
    let mut window = 0;
    // Welford accumulators for the current slow window
    let (mut count, mut mean, mut m2) = (0usize, vec![0.0; d], vec![0.0; d]);
    for it in 0..n {
        let t = nuts.transition(rng)?;
        nuts.step_size = da.update(t.accept_stat);
        if it >= init && window < windows.len() {
            count += 1;
            for i in 0..d {
                let delta = nuts.theta[i] - mean[i];
                mean[i] += delta / count as f64;
                m2[i] += delta * (nuts.theta[i] - mean[i]);
            }
            if it + 1 == windows[window] {
                let nf = count as f64;
                for i in 0..d {
                    let var = m2[i] / (nf - 1.0);
                    nuts.inv_metric[i] = (nf / (nf + 5.0)) * var + 1e-3 * (5.0 / (nf + 5.0));
                }
                count = 0;
                mean.iter_mut().for_each(|v| *v = 0.0);
                m2.iter_mut().for_each(|v| *v = 0.0);
                window += 1;
                nuts.init_step_size(rng)?;
                da = DualAveraging::new(nuts.step_size, config.target_accept);
            }
        }
    }
    nuts.step_size = da.final_step_size();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_cover_the_slow_phase() {
        assert_eq!(metric_windows(1000), vec![175, 225, 325, 900]);
        let w = metric_windows(150);
        assert_eq!(*w.last().unwrap(), 135);
        assert!(w[0] > 23);
    }

    #[test]
    fn dual_averaging_settles() {
        let mut da = DualAveraging::new(1.0, 0.8);
        // accept rate falls with the step size, crossing 0.8 at 0.5
        let mut eps = 1.0;
        for _ in 0..2000 {
            let a = (-(eps / 0.5f64).powi(2) * 0.2231).exp();
            eps = da.update(a);
        }
        assert!((da.final_step_size() - 0.5).abs() < 0.02, "{}", da.final_step_size());
    }
}
