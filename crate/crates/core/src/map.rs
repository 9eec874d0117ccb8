//! The shear-composition map family, its lifts and orbit iteration.
//!
//! A [`MapSpec`] represents `f = V ∘ H ∘ T_k` with
//! `T_k(x,y) = (x + k·y, y)`, `H(x,y) = (x + h(y), y)` and
//! `V(x,y) = (x, y + v(x))`. The plane lift evaluates as
//!
//! ```text
//! x' = x + k·y + h(y)
//! y' = y + v(x')
//! ```
//!
//! Each factor is a unit-Jacobian shear, so `f` is an area-preserving
//! homeomorphism, exactly invertible, and satisfies the deck identities
//! `f(x+1, y) = f(x, y) + (1, 0)` and `f(x, y+1) = f(x, y) + (k, 1)`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::{Error, Result};

/// Reduce to `[0, 1)` by subtracting the floor.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        r - 1.0
    } else {
        r
    }
}

/// One harmonic of a 1-periodic trigonometric polynomial:
/// `sin_amp·sin(2π·freq·t) + cos_amp·cos(2π·freq·t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Harmonic {
    pub freq: u32,
    pub sin_amp: f64,
    pub cos_amp: f64,
}

/// A finite 1-periodic trigonometric polynomial with zero mean.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigPoly {
    /// Harmonics sorted by frequency, one entry per frequency.
    terms: Vec<Harmonic>,
}

impl TrigPoly {
    pub fn new(mut terms: Vec<Harmonic>) -> Self {
        terms.retain(|t| t.sin_amp != 0.0 || t.cos_amp != 0.0);
        terms.sort_by_key(|t| t.freq);
        TrigPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Harmonic] {
        &self.terms
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for h in &self.terms {
            let (s, c) = (TAU * h.freq as f64 * t).sin_cos();
            acc += h.sin_amp * s + h.cos_amp * c;
        }
        acc
    }

    /// Bound on `sup |p'|`: `Σ 2π·j·(|a_j| + |b_j|)`.
    pub fn derivative_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|h| TAU * h.freq as f64 * (h.sin_amp.abs() + h.cos_amp.abs()))
            .sum()
    }

    /// Certified upper bound on `sup |p|`.
    ///
    /// A single harmonic has the exact sup `hypot(a, b)`. Otherwise the
    /// polynomial is sampled on 4096 points per period of its fastest
    /// harmonic and padded by the Lipschitz slack `L·Δ/2`, which dominates
    /// the true sup.
    pub fn sup_abs_bound(&self) -> f64 {
        match self.terms.len() {
            0 => 0.0,
            1 => self.terms[0].sin_amp.hypot(self.terms[0].cos_amp),
            _ => {
                let max_freq = self.terms.last().map(|t| t.freq).unwrap_or(1).max(1);
                let n = 4096 * max_freq as usize;
                let mut best = 0.0f64;
                for i in 0..n {
                    best = best.max(self.eval(i as f64 / n as f64).abs());
                }
                best + self.derivative_bound() * 0.5 / n as f64
            }
        }
    }

    fn canonical_lines(&self, prefix: &str, out: &mut String) {
        for h in &self.terms {
            if h.sin_amp != 0.0 {
                let _ = writeln!(out, "{prefix}.sin.{} = {}", h.freq, h.sin_amp);
            }
            if h.cos_amp != 0.0 {
                let _ = writeln!(out, "{prefix}.cos.{} = {}", h.freq, h.cos_amp);
            }
        }
    }
}

/// Parametric member of the Dehn twist shear family.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSpec {
    k_dehn: i64,
    h: TrigPoly,
    v: TrigPoly,
    v_const: f64,
}

impl MapSpec {
    /// Build a spec from parts. `k_dehn` must be a positive integer.
    pub fn new(k_dehn: i64, h: TrigPoly, v: TrigPoly, v_const: f64) -> Result<Self> {
        if k_dehn <= 0 {
            return Err(Error::spec(0, format!("k_dehn must be positive, got {k_dehn}")));
        }
        if !v_const.is_finite() {
            return Err(Error::spec(0, "v.const must be finite"));
        }
        Ok(MapSpec { k_dehn, h, v, v_const })
    }

    /// The pure twist `(x, y) ↦ (x + k·y, y)`.
    pub fn pure_twist(k_dehn: i64) -> Self {
        MapSpec::new(k_dehn, TrigPoly::default(), TrigPoly::default(), 0.0).unwrap()
    }

    /// Standard-map member: `k = 1`, `v = (K/2π)·sin(2πx)` (Chirikov
    /// parameter `K`), `h = 0`.
    pub fn chirikov(k_param: f64) -> Self {
        MapSpec::new(
            1,
            TrigPoly::default(),
            TrigPoly::new(vec![Harmonic { freq: 1, sin_amp: k_param / TAU, cos_amp: 0.0 }]),
            0.0,
        )
        .unwrap()
    }

    pub fn k_dehn(&self) -> i64 {
        self.k_dehn
    }

    pub fn h(&self) -> &TrigPoly {
        &self.h
    }

    pub fn v(&self) -> &TrigPoly {
        &self.v
    }

    pub fn v_const(&self) -> f64 {
        self.v_const
    }

    /// Horizontal shear `h(y)` (1-periodic part only).
    #[inline]
    pub fn h_eval(&self, y: f64) -> f64 {
        self.h.eval(wrap_unit(y))
    }

    /// Vertical shear `v(x) = v_const + periodic part`.
    #[inline]
    pub fn v_eval(&self, x: f64) -> f64 {
        self.v_const + self.v.eval(wrap_unit(x))
    }

    /// Canonical `key = value` rendering; equal specs produce equal text.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "k_dehn = {}", self.k_dehn);
        self.h.canonical_lines("h", &mut out);
        self.v.canonical_lines("v", &mut out);
        if self.v_const != 0.0 {
            let _ = writeln!(out, "v.const = {}", self.v_const);
        }
        out
    }
}

/// Parse the flat `key = value` map-spec format.
///
/// Recognized keys: `k_dehn`, `h.sin.<j>`, `h.cos.<j>`, `v.sin.<j>`,
/// `v.cos.<j>` (harmonic frequencies `j ≥ 1`) and `v.const`. Lines starting
/// with `#` and blank lines are ignored; unknown keys are rejected.
pub fn parse_map_spec(text: &str) -> Result<MapSpec> {
    let mut k_dehn: Option<i64> = None;
    let mut h_terms: Vec<Harmonic> = Vec::new();
    let mut v_terms: Vec<Harmonic> = Vec::new();
    let mut v_const = 0.0f64;

    let push = |terms: &mut Vec<Harmonic>, freq: u32, amp: f64, is_sin: bool, line: usize| {
        if let Some(t) = terms.iter_mut().find(|t| t.freq == freq) {
            let slot = if is_sin { &mut t.sin_amp } else { &mut t.cos_amp };
            if *slot != 0.0 {
                return Err(Error::spec(line, format!("duplicate coefficient for frequency {freq}")));
            }
            *slot = amp;
        } else {
            terms.push(Harmonic {
                freq,
                sin_amp: if is_sin { amp } else { 0.0 },
                cos_amp: if is_sin { 0.0 } else { amp },
            });
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::spec(line_no, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();

        if key == "k_dehn" {
            if k_dehn.is_some() {
                return Err(Error::spec(line_no, "duplicate k_dehn"));
            }
            let k: i64 = value
                .parse()
                .map_err(|_| Error::spec(line_no, format!("k_dehn must be an integer, got `{value}`")))?;
            if k <= 0 {
                return Err(Error::spec(line_no, format!("k_dehn must be positive, got {k}")));
            }
            k_dehn = Some(k);
            continue;
        }

        let num: f64 = value
            .parse()
            .map_err(|_| Error::spec(line_no, format!("malformed number `{value}`")))?;
        if !num.is_finite() {
            return Err(Error::spec(line_no, format!("non-finite value `{value}`")));
        }

        if key == "v.const" {
            v_const = num;
            continue;
        }

        let mut parts = key.split('.');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(family @ ("h" | "v")), Some(kind @ ("sin" | "cos")), Some(freq), None) => {
                let freq: u32 = freq
                    .parse()
                    .map_err(|_| Error::spec(line_no, format!("bad frequency in key `{key}`")))?;
                if freq == 0 {
                    return Err(Error::spec(line_no, "harmonic frequency must be >= 1"));
                }
                let terms = if family == "h" { &mut h_terms } else { &mut v_terms };
                push(terms, freq, num, kind == "sin", line_no)?;
            }
            _ => return Err(Error::spec(line_no, format!("unknown key `{key}`"))),
        }
    }

    let k_dehn = k_dehn.ok_or_else(|| Error::spec(0, "missing required key k_dehn"))?;
    MapSpec::new(k_dehn, TrigPoly::new(h_terms), TrigPoly::new(v_terms), v_const)
}

/// Point in the universal cover.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

/// Point in the vertical cylinder: `x` lives in `[0, 1)`, `y` is unreduced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylinderPoint {
    pub x: f64,
    pub y: f64,
}

/// Point on the torus; both coordinates in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Self {
        PlanePoint { x, y }
    }

    pub fn to_cylinder(self) -> CylinderPoint {
        CylinderPoint { x: wrap_unit(self.x), y: self.y }
    }

    pub fn to_torus(self) -> TorusPoint {
        TorusPoint { x: wrap_unit(self.x), y: wrap_unit(self.y) }
    }
}

impl CylinderPoint {
    pub fn new(x: f64, y: f64) -> Self {
        CylinderPoint { x: wrap_unit(x), y }
    }

    pub fn to_torus(self) -> TorusPoint {
        TorusPoint { x: self.x, y: wrap_unit(self.y) }
    }
}

/// Which way to evaluate a lift.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Evaluate the plane lift of `spec` at `pt`.
///
/// Forward: `(x + k·y + h(y), y + v(x + k·y + h(y)))`. Inverse is the exact
/// composition inverse `T_k⁻¹ ∘ H⁻¹ ∘ V⁻¹`.
pub fn eval_lift(spec: &MapSpec, pt: PlanePoint, direction: Direction) -> PlanePoint {
    match direction {
        Direction::Forward => {
            let xp = pt.x + spec.k_dehn as f64 * pt.y + spec.h_eval(pt.y);
            PlanePoint { x: xp, y: pt.y + spec.v_eval(xp) }
        }
        Direction::Inverse => {
            let y = pt.y - spec.v_eval(pt.x);
            PlanePoint { x: pt.x - spec.h_eval(y) - spec.k_dehn as f64 * y, y }
        }
    }
}

/// The lift `g = f^power - (0, shift)` of an iterate of the map, shifted by
/// an integer deck translation. `power = 1, shift = 0` is the base lift.
///
/// As a torus homeomorphism `g` is again in the Dehn twist class, with
/// twist coefficient `power · k_dehn`.
#[derive(Clone, Debug)]
pub struct PowerShiftLift {
    spec: MapSpec,
    power: u32,
    shift: i64,
}

impl PowerShiftLift {
    pub fn new(spec: MapSpec, power: u32, shift: i64) -> Result<Self> {
        if power == 0 {
            return Err(Error::config("power of a lift must be >= 1"));
        }
        Ok(PowerShiftLift { spec, power, shift })
    }

    pub fn base(spec: MapSpec) -> Self {
        PowerShiftLift { spec, power: 1, shift: 0 }
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    /// Twist coefficient of `g` as a Dehn twist class map.
    pub fn k_effective(&self) -> i64 {
        self.spec.k_dehn() * self.power as i64
    }

    /// One application of `g` on the plane.
    pub fn plane_step(&self, mut pt: PlanePoint) -> PlanePoint {
        for _ in 0..self.power {
            pt = eval_lift(&self.spec, pt, Direction::Forward);
        }
        pt.y -= self.shift as f64;
        pt
    }

    /// One application of `g⁻¹` on the plane.
    pub fn plane_step_inv(&self, mut pt: PlanePoint) -> PlanePoint {
        pt.y += self.shift as f64;
        for _ in 0..self.power {
            pt = eval_lift(&self.spec, pt, Direction::Inverse);
        }
        pt
    }

    /// One application of `g` on the cylinder (`x` reduced mod 1 via floor).
    #[inline]
    pub fn cyl_step(&self, pt: CylinderPoint) -> CylinderPoint {
        let k = self.spec.k_dehn as f64;
        let mut x = pt.x;
        let mut y = pt.y;
        for _ in 0..self.power {
            x = wrap_unit(x + k * y + self.spec.h.eval(wrap_unit(y)));
            y += self.spec.v_const + self.spec.v.eval(x);
        }
        CylinderPoint { x, y: y - self.shift as f64 }
    }

    /// One application of `g⁻¹` on the cylinder.
    #[inline]
    pub fn cyl_step_inv(&self, pt: CylinderPoint) -> CylinderPoint {
        let k = self.spec.k_dehn as f64;
        let mut x = pt.x;
        let mut y = pt.y + self.shift as f64;
        for _ in 0..self.power {
            y -= self.spec.v_const + self.spec.v.eval(x);
            x = wrap_unit(x - self.spec.h.eval(wrap_unit(y)) - k * y);
        }
        CylinderPoint { x, y }
    }

    /// Vertical displacement after `n` applications of `g`.
    pub fn displacement_after(&self, seed: CylinderPoint, n: u64) -> f64 {
        let mut z = seed;
        for _ in 0..n {
            z = self.cyl_step(z);
        }
        z.y - seed.y
    }
}

/// A recorded forward orbit on the cylinder.
#[derive(Clone, Debug)]
pub struct Orbit {
    pub seed: CylinderPoint,
    pub n_steps: u64,
    /// `(step, x, y)` samples, every `record_every` steps, step 0 included.
    pub samples: Vec<(u64, f64, f64)>,
}

impl Orbit {
    /// Vertical displacement `y_step - y_0` per recorded sample.
    pub fn displacements(&self) -> Vec<(u64, f64)> {
        self.samples.iter().map(|&(n, _, y)| (n, y - self.seed.y)).collect()
    }
}

/// Iterate the cylinder lift of `spec` for `n` steps from `seed`, recording
/// every `record_every` steps.
pub fn iterate_orbit(
    spec: &MapSpec,
    seed: CylinderPoint,
    n: u64,
    record_every: u64,
) -> Result<Orbit> {
    if record_every == 0 {
        return Err(Error::config("record_every must be >= 1"));
    }
    let lift = PowerShiftLift::base(spec.clone());
    let mut samples = Vec::with_capacity((n / record_every + 1) as usize);
    let mut z = seed;
    samples.push((0, z.x, z.y));
    for step in 1..=n {
        z = lift.cyl_step(z);
        if !z.x.is_finite() || !z.y.is_finite() {
            return Err(Error::Numerical { step });
        }
        if step % record_every == 0 {
            samples.push((step, z.x, z.y));
        }
    }
    Ok(Orbit { seed, n_steps: n, samples })
}

/// Entrywise bound on the absolute Jacobian of one forward application.
///
/// Rows bound `|∂x'/∂(x,y)|` and `|∂y'/∂(x,y)|`; products of these matrices
/// bound iterated lifts entrywise.
pub fn jacobian_abs_bound(spec: &MapSpec) -> [[f64; 2]; 2] {
    let k = spec.k_dehn as f64;
    let lh = spec.h.derivative_bound();
    let lv = spec.v.derivative_bound();
    [[1.0, k + lh], [lv, 1.0 + lv * (k + lh)]]
}

/// Entrywise product bound for `power` applications.
pub fn jacobian_abs_bound_power(spec: &MapSpec, power: u32) -> [[f64; 2]; 2] {
    let m = jacobian_abs_bound(spec);
    let mut acc = [[1.0, 0.0], [0.0, 1.0]];
    for _ in 0..power {
        let mut next = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                next[i][j] = m[i][0] * acc[0][j] + m[i][1] * acc[1][j];
            }
        }
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn k2_spec() -> MapSpec {
        parse_map_spec("k_dehn=2\nh.sin.1=0.3\nv.sin.1=0.5").unwrap()
    }

    #[test]
    fn parse_pure_twist_default() {
        let spec = parse_map_spec("k_dehn=1").unwrap();
        assert_eq!(spec.k_dehn(), 1);
        assert!(spec.h().is_zero() && spec.v().is_zero());
        assert_eq!(spec.v_const(), 0.0);
    }

    #[test]
    fn parse_field_mapping() {
        let spec = k2_spec();
        assert_eq!(spec.k_dehn(), 2);
        assert_eq!(spec.h().terms(), &[Harmonic { freq: 1, sin_amp: 0.3, cos_amp: 0.0 }]);
        assert_eq!(spec.v().terms(), &[Harmonic { freq: 1, sin_amp: 0.5, cos_amp: 0.0 }]);
    }

    #[test]
    fn parse_rejects_nonpositive_k() {
        assert!(matches!(parse_map_spec("k_dehn=0"), Err(Error::Spec { .. })));
        assert!(matches!(parse_map_spec("k_dehn=-2"), Err(Error::Spec { .. })));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_map_spec("k_dehn=1\nv.sin.1=abc").unwrap_err();
        match err {
            Error::Spec { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_map_spec("k_dehn=1\n\nbogus.key=1").unwrap_err();
        match err {
            Error::Spec { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_comments_and_whitespace() {
        let spec = parse_map_spec("# a drift map\n k_dehn = 1 \nv.const = 0.25 # drift\n").unwrap();
        assert_eq!(spec.v_const(), 0.25);
    }

    #[test]
    fn eval_pure_twist() {
        let spec = MapSpec::pure_twist(1);
        let out = eval_lift(&spec, PlanePoint::new(0.25, 2.0), Direction::Forward);
        assert_eq!(out, PlanePoint::new(2.25, 2.0));
    }

    #[test]
    fn eval_composition_hand_value() {
        // x' = 0 + 2·0.25 + 0.3·sin(π/2) = 0.8
        // y' = 0.25 + 0.5·sin(1.6π) = -0.22552825814757677
        let out = eval_lift(&k2_spec(), PlanePoint::new(0.0, 0.25), Direction::Forward);
        assert!((out.x - 0.8).abs() < 1e-15, "{}", out.x);
        assert!((out.y - (-0.22552825814757677)).abs() < 1e-12, "{}", out.y);
    }

    #[test]
    fn deck_identities() {
        let rng = CounterRng::new(11);
        for (si, spec) in [MapSpec::pure_twist(1), k2_spec(), MapSpec::chirikov(5.0)]
            .iter()
            .enumerate()
        {
            let k = spec.k_dehn() as f64;
            for i in 0..10_000u64 {
                let x = rng.uniform_in(si as u64, 2 * i, -5.0, 5.0);
                let y = rng.uniform_in(si as u64 + 100, 2 * i + 1, -5.0, 5.0);
                let base = eval_lift(spec, PlanePoint::new(x, y), Direction::Forward);
                let right = eval_lift(spec, PlanePoint::new(x + 1.0, y), Direction::Forward);
                let up = eval_lift(spec, PlanePoint::new(x, y + 1.0), Direction::Forward);
                assert!((right.x - base.x - 1.0).abs() <= 1e-12);
                assert!((right.y - base.y).abs() <= 1e-12);
                assert!((up.x - base.x - k).abs() <= 1e-12);
                assert!((up.y - base.y - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn inverse_consistency() {
        let rng = CounterRng::new(23);
        for (si, spec) in [k2_spec(), MapSpec::chirikov(5.0)].iter().enumerate() {
            for i in 0..10_000u64 {
                let x = rng.uniform(si as u64 + 7, 2 * i);
                let y = rng.uniform_in(si as u64 + 19, 2 * i + 1, -10.0, 10.0);
                let p = PlanePoint::new(x, y);
                let fwd = eval_lift(spec, p, Direction::Forward);
                let back = eval_lift(spec, fwd, Direction::Inverse);
                assert!((back.x - p.x).abs() <= 1e-9 && (back.y - p.y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn jacobian_det_is_one() {
        // det J = 1 identically for the shear composition; check the closed
        // form of the partials at random points.
        let spec = k2_spec();
        let rng = CounterRng::new(5);
        for i in 0..1000u64 {
            let x = rng.uniform(0, 2 * i);
            let y = rng.uniform(1, 2 * i + 1);
            let xp = x + spec.k_dehn() as f64 * y + spec.h_eval(y);
            let dh = {
                // analytic h'(y), v'(x') for the single harmonics used here
                0.3 * TAU * (TAU * wrap_unit(y)).cos()
            };
            let dv = 0.5 * TAU * (TAU * wrap_unit(xp)).cos();
            let det = 1.0 * (1.0 + dv * (spec.k_dehn() as f64 + dh))
                - (spec.k_dehn() as f64 + dh) * dv;
            assert!((det - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn area_preservation_monte_carlo() {
        // Area of f(S) for S = [0.2,0.7]×[−0.3,0.2] via indicator sampling
        // of f⁻¹ over a bounding box of f(S).
        let spec = k2_spec();
        let rng = CounterRng::new(99);
        // bounding box of the image from corner/edge samples plus slack
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for i in 0..=40 {
            for j in 0..=40 {
                let p = PlanePoint::new(0.2 + 0.5 * i as f64 / 40.0, -0.3 + 0.5 * j as f64 / 40.0);
                let q = eval_lift(&spec, p, Direction::Forward);
                x0 = x0.min(q.x);
                x1 = x1.max(q.x);
                y0 = y0.min(q.y);
                y1 = y1.max(q.y);
            }
        }
        let (x0, x1, y0, y1) = (x0 - 0.2, x1 + 0.2, y0 - 0.2, y1 + 0.2);
        let n = 400_000u64;
        let mut hits = 0u64;
        for i in 0..n {
            let x = rng.uniform_in(0, 2 * i, x0, x1);
            let y = rng.uniform_in(1, 2 * i + 1, y0, y1);
            let p = eval_lift(&spec, PlanePoint::new(x, y), Direction::Inverse);
            if (0.2..=0.7).contains(&p.x) && (-0.3..=0.2).contains(&p.y) {
                hits += 1;
            }
        }
        let box_area = (x1 - x0) * (y1 - y0);
        let frac = hits as f64 / n as f64;
        let est = box_area * frac;
        let sigma = box_area * (frac * (1.0 - frac) / n as f64).sqrt();
        assert!(
            (est - 0.25).abs() <= 3.0 * sigma,
            "area {est} vs 0.25, sigma {sigma}"
        );
    }

    #[test]
    fn displacement_is_torus_function() {
        let spec = k2_spec();
        let lift = PowerShiftLift::base(spec);
        let rng = CounterRng::new(3);
        for i in 0..10_000u64 {
            let x = rng.uniform(0, 2 * i);
            let y = rng.uniform_in(1, 2 * i + 1, -4.0, 4.0);
            let d0 = lift.cyl_step(CylinderPoint::new(x, y)).y - y;
            let d1 = lift.cyl_step(CylinderPoint::new(x, y + 1.0)).y - (y + 1.0);
            assert!((d0 - d1).abs() <= 1e-12);
        }
    }

    #[test]
    fn orbit_pure_twist_period_two() {
        let spec = MapSpec::pure_twist(1);
        let orbit = iterate_orbit(&spec, CylinderPoint::new(0.1, 0.5), 4, 1).unwrap();
        let expected_x = [0.1, 0.6, 0.1, 0.6, 0.1];
        for (idx, &(step, x, y)) in orbit.samples.iter().enumerate() {
            assert_eq!(step, idx as u64);
            assert!((x - expected_x[idx]).abs() <= 1e-9);
            assert_eq!(y, 0.5);
        }
    }

    #[test]
    fn orbit_rigid_drift_displacement() {
        let spec = parse_map_spec("k_dehn=1\nv.const=0.25").unwrap();
        let orbit = iterate_orbit(&spec, CylinderPoint::new(0.0, 0.0), 8, 1).unwrap();
        for (n, d) in orbit.displacements() {
            assert_eq!(d, 0.25 * n as f64);
        }
    }

    #[test]
    fn orbit_diffusive_variance_grows() {
        // Chirikov K=5: ensemble displacement variance grows roughly
        // linearly; record the slope rather than assert a ground truth.
        let spec = MapSpec::chirikov(5.0);
        let lift = PowerShiftLift::base(spec);
        let g = 32;
        let mut seeds = Vec::new();
        for i in 0..g {
            for j in 0..g {
                seeds.push(CylinderPoint::new(
                    (i as f64 + 0.5) / g as f64,
                    (j as f64 + 0.5) / g as f64,
                ));
            }
        }
        let var_at = |n: u64| {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for &s in &seeds {
                let d = lift.displacement_after(s, n);
                sum += d;
                sumsq += d * d;
            }
            let m = sum / seeds.len() as f64;
            sumsq / seeds.len() as f64 - m * m
        };
        let v1 = var_at(1000);
        let v4 = var_at(4000);
        let ratio = v4 / v1;
        assert!(v1 > 0.0 && (2.0..8.0).contains(&ratio), "v1={v1} ratio={ratio}");
    }

    #[test]
    fn power_shift_lift_round_trip() {
        let spec = k2_spec();
        let g = PowerShiftLift::new(spec, 3, 2).unwrap();
        assert_eq!(g.k_effective(), 6);
        let z = CylinderPoint::new(0.37, 1.21);
        let w = g.cyl_step_inv(g.cyl_step(z));
        assert!((w.x - z.x).abs() < 1e-9 && (w.y - z.y).abs() < 1e-9);
        let p = PlanePoint::new(0.37, 1.21);
        let q = g.plane_step_inv(g.plane_step(p));
        assert!((q.x - p.x).abs() < 1e-9 && (q.y - p.y).abs() < 1e-9);
    }
}
