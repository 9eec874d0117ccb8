//! Empirical vertical rotation intervals and the Lebesgue rotation number.
//!
//! The vertical rotation set of a cylinder lift is the asymptotic set of
//! displacement averages `(p2∘g^n(z) - p2(z))/n` over all cylinder points;
//! it is a closed interval. No finite computation certifies its endpoints,
//! so the estimate here is labeled empirical: a grid of seeds (displacement
//! is y-periodic, so the unit square suffices), Birkhoff averages at the
//! final step, and a min/max envelope over checkpoints as a convergence
//! diagnostic.

use rayon::prelude::*;

use crate::map::{CylinderPoint, MapSpec, PowerShiftLift};
use crate::{Error, Result};

/// Empirical vertical rotation interval.
#[derive(Clone, Debug)]
pub struct RotationEstimate {
    /// Interval endpoints: min/max over seeds of the final Birkhoff average.
    pub lower: f64,
    pub upper: f64,
    pub n_iter: u64,
    pub n_seeds: usize,
    /// Checkpoint steps (powers of ten up to and including `n_iter`).
    pub checkpoints: Vec<u64>,
    /// Per-checkpoint `[min, max]` envelope over seeds.
    pub envelope: Vec<(f64, f64)>,
    /// Per-seed Birkhoff averages at each checkpoint; `averages[c][s]`.
    pub averages: Vec<Vec<f64>>,
    /// Seed grid, row-major.
    pub seeds: Vec<CylinderPoint>,
}

impl RotationEstimate {
    /// Envelope at a given checkpoint step, if recorded.
    pub fn envelope_at(&self, step: u64) -> Option<(f64, f64)> {
        self.checkpoints.iter().position(|&c| c == step).map(|i| self.envelope[i])
    }

    /// CSV of per-seed final averages: `seed,x,y,average`.
    pub fn per_seed_csv(&self) -> String {
        let mut out = String::from("seed,x,y,average\n");
        let last = self.averages.last().expect("at least one checkpoint");
        for (i, (s, a)) in self.seeds.iter().zip(last).enumerate() {
            out.push_str(&format!("{},{},{},{}\n", i, s.x, s.y, a));
        }
        out
    }

    /// CSV of the checkpoint envelope: `step,lower,upper,width`.
    pub fn envelope_csv(&self) -> String {
        let mut out = String::from("step,lower,upper,width\n");
        for (c, (lo, hi)) in self.checkpoints.iter().zip(&self.envelope) {
            out.push_str(&format!("{},{},{},{}\n", c, lo, hi, hi - lo));
        }
        out
    }
}

/// First `n` points of the centered uniform grid on `[0,1)²`.
pub fn seed_grid(n: usize) -> Vec<CylinderPoint> {
    let side = (n as f64).sqrt().ceil() as usize;
    let mut seeds = Vec::with_capacity(n);
    'outer: for j in 0..side {
        for i in 0..side {
            if seeds.len() == n {
                break 'outer;
            }
            seeds.push(CylinderPoint::new(
                (i as f64 + 0.5) / side as f64,
                (j as f64 + 0.5) / side as f64,
            ));
        }
    }
    seeds
}

fn checkpoint_steps(n_iter: u64) -> Vec<u64> {
    let mut steps = Vec::new();
    let mut c = 100u64;
    while c < n_iter {
        steps.push(c);
        c = c.saturating_mul(10);
    }
    steps.push(n_iter);
    steps
}

/// Estimate the vertical rotation interval of the base lift.
pub fn estimate_rotation_interval(
    spec: &MapSpec,
    n_seeds: usize,
    n_iter: u64,
) -> Result<RotationEstimate> {
    estimate_rotation_interval_for(&PowerShiftLift::base(spec.clone()), n_seeds, n_iter)
}

/// Estimate the vertical rotation interval of `g = f^power - (0, shift)`.
///
/// One step of the estimate is one application of `g`, so the interval
/// transforms as `power·[lower, upper] - shift` relative to the base lift.
pub fn estimate_rotation_interval_for(
    lift: &PowerShiftLift,
    n_seeds: usize,
    n_iter: u64,
) -> Result<RotationEstimate> {
    if n_seeds == 0 || n_iter == 0 {
        return Err(Error::config("rotation estimate needs n_seeds >= 1 and n_iter >= 1"));
    }
    let seeds = seed_grid(n_seeds);
    let checkpoints = checkpoint_steps(n_iter);

    // Per-seed averages at every checkpoint; seeds are independent, the
    // collect keeps seed order so reductions are deterministic.
    let per_seed: Vec<Result<Vec<f64>>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut z = seed;
            let mut out = Vec::with_capacity(checkpoints.len());
            let mut next = 0usize;
            for step in 1..=n_iter {
                z = lift.cyl_step(z);
                if !z.x.is_finite() || !z.y.is_finite() {
                    return Err(Error::Numerical { step });
                }
                if checkpoints[next] == step {
                    out.push((z.y - seed.y) / step as f64);
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect();

    let mut averages = vec![vec![0.0f64; seeds.len()]; checkpoints.len()];
    for (s, row) in per_seed.into_iter().enumerate() {
        let row = row?;
        for (c, v) in row.into_iter().enumerate() {
            averages[c][s] = v;
        }
    }
    let envelope: Vec<(f64, f64)> = averages
        .iter()
        .map(|row| {
            row.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
        })
        .collect();
    let (lower, upper) = *envelope.last().expect("n_iter >= 1 gives a checkpoint");

    Ok(RotationEstimate {
        lower,
        upper,
        n_iter,
        n_seeds: seeds.len(),
        checkpoints,
        envelope,
        averages,
        seeds,
    })
}

/// Which estimator computed a measure rotation number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureMethod {
    Quadrature,
    MonteCarlo,
}

/// Vertical rotation number of Lebesgue measure.
#[derive(Clone, Debug)]
pub struct MeasureRotation {
    pub value: f64,
    /// Monte Carlo: standard error of the mean. Quadrature: an aliasing
    /// bound on the discretization error.
    pub std_error: f64,
    pub method: MeasureMethod,
    pub n_samples: usize,
}

/// Integrate the one-step vertical displacement over the torus.
///
/// Quadrature uses the midpoint rule on an `n×n` grid; for the shear family
/// this is exact (up to harmonics aliased onto multiples of `n`) and equals
/// `v_const`. Monte Carlo draws `n` points from the counter generator.
pub fn lebesgue_rotation_number(
    spec: &MapSpec,
    method: MeasureMethod,
    n: usize,
    rng_seed: u64,
) -> Result<MeasureRotation> {
    if n < 16 {
        return Err(Error::config("lebesgue rotation number needs n >= 16"));
    }
    let lift = PowerShiftLift::base(spec.clone());
    let phi = |x: f64, y: f64| lift.cyl_step(CylinderPoint::new(x, y)).y - y;
    match method {
        MeasureMethod::Quadrature => {
            let step = 1.0 / n as f64;
            // Row sums collected first, then reduced in index order.
            let rows: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let y = (j as f64 + 0.5) * step;
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += phi((i as f64 + 0.5) * step, y);
                    }
                    acc
                })
                .collect();
            let value = rows.iter().sum::<f64>() / (n * n) as f64;
            // Harmonics at frequencies divisible by n alias onto the mean.
            let alias: f64 = spec
                .v()
                .terms()
                .iter()
                .filter(|t| t.freq as usize % n == 0)
                .map(|t| t.sin_amp.hypot(t.cos_amp))
                .sum();
            let bound = alias + 1e-12 * (1.0 + spec.v_const().abs());
            Ok(MeasureRotation {
                value,
                std_error: bound,
                method,
                n_samples: n * n,
            })
        }
        MeasureMethod::MonteCarlo => {
            let rng = crate::rng::CounterRng::new(rng_seed);
            const CHUNK: usize = 8192;
            let n_chunks = n.div_ceil(CHUNK);
            let partial: Vec<(f64, f64)> = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let lo = c * CHUNK;
                    let hi = ((c + 1) * CHUNK).min(n);
                    let mut sum = 0.0;
                    let mut sumsq = 0.0;
                    for i in lo..hi {
                        let x = rng.uniform(0, 2 * i as u64);
                        let y = rng.uniform(0, 2 * i as u64 + 1);
                        let d = phi(x, y);
                        sum += d;
                        sumsq += d * d;
                    }
                    (sum, sumsq)
                })
                .collect();
            let (sum, sumsq) = partial
                .iter()
                .fold((0.0, 0.0), |(a, b), &(s, q)| (a + s, b + q));
            let mean = sum / n as f64;
            let var = (sumsq / n as f64 - mean * mean).max(0.0);
            Ok(MeasureRotation {
                value: mean,
                std_error: (var / n as f64).sqrt(),
                method,
                n_samples: n,
            })
        }
    }
}
