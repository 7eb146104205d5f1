//! Test-only oracles, independent of the code paths they check.

#![allow(dead_code)]

use holo_restore::autoencoder::{forward, loss, AeParams, DropoutMask};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
/// Instances with any pre-activation closer than this to zero are redrawn.
pub const KINK_MARGIN: f64 = 1e-3;

pub struct GradInstance {
    pub params: AeParams,
    pub x: Vec<f64>,
    pub target: Vec<f64>,
    pub mask: Option<DropoutMask>,
}

fn sample_loss(p: &AeParams, inst: &GradInstance) -> f64 {
    let a = forward(p, &inst.x, inst.mask.as_ref()).unwrap();
    loss(&a.o, &inst.target).unwrap()
}

/// Central-difference gradient of the single-sample loss, one parameter at
/// a time.
pub fn numerical_gradient(inst: &GradInstance) -> Vec<f64> {
    let mut p = inst.params.clone();
    let n = p.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let orig = *p.iter().nth(i).unwrap();
        *p.iter_mut().nth(i).unwrap() = orig + FD_STEP;
        let up = sample_loss(&p, inst);
        *p.iter_mut().nth(i).unwrap() = orig - FD_STEP;
        let down = sample_loss(&p, inst);
        *p.iter_mut().nth(i).unwrap() = orig;
        out.push((up - down) / (2.0 * FD_STEP));
    }
    out
}

/// Random small instance, redrawn until every pre-activation is at least
/// `KINK_MARGIN` away from the ReLU kink and at least one output is live.
pub fn random_instance(rng: &mut ChaCha8Rng) -> GradInstance {
    loop {
        let n_in = rng.gen_range(1..=6);
        let n_hidden = rng.gen_range(1..=4);
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let params = AeParams::from_parts(
            n_in,
            n_hidden,
            draw(n_hidden * n_in),
            draw(n_hidden),
            draw(n_in * n_hidden),
            draw(n_in),
        )
        .unwrap();
        let x: Vec<f64> = (0..n_in).map(|_| rng.gen_range(0.0..1.0)).collect();
        let target: Vec<f64> = (0..n_in).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mask = if rng.gen_bool(0.5) {
            let rate = rng.gen_range(0.1..0.8);
            let keep = (0..n_hidden).map(|_| rng.gen_bool(0.6)).collect();
            Some(DropoutMask::new(keep, rate).unwrap())
        } else {
            None
        };
        let a = forward(&params, &x, mask.as_ref()).unwrap();
        let clear = a
            .hidden_pre
            .iter()
            .chain(&a.out_pre)
            .all(|v| v.abs() >= KINK_MARGIN);
        if clear && a.out_pre.iter().any(|&v| v > 0.0) {
            return GradInstance {
                params,
                x,
                target,
                mask,
            };
        }
    }
}

/// Worst componentwise relative error between analytic and numerical
/// gradients. Components where both are below 1e-8 in magnitude count as
/// agreeing exactly.
pub fn worst_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            let scale = a.abs().max(n.abs());
            if scale < 1e-8 {
                0.0
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
