//! Finite-horizon approximations of the half-plane-confined sets.
//!
//! `B⁻` is the set of cylinder points whose entire forward orbit stays in
//! the closed lower half `{y <= 0}`; `B⁺` the mirror. A mask samples cell
//! centers of a window and keeps those confined for `0..=horizon` steps;
//! two-sided masks also confine the backward orbit, which approximates the
//! fully-orbit-confined set `ω(B⁻) = ⋂ₙ f̂ⁿ(B⁻)`. Masks are diagnostics
//! computed by cell-center sampling, not rigorous enclosures; certificates
//! never rely on them.

use rayon::prelude::*;

use crate::constants::ConstantsReport;
use crate::map::{CylinderPoint, MapSpec, PowerShiftLift};
use crate::{Error, Result};

/// Which half-cylinder confines the orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasinSign {
    /// Forward orbit stays in `{y <= 0}`.
    Lower,
    /// Forward orbit stays in `{y >= 0}`.
    Upper,
}

/// Rectangular window `[0,1) × [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(y_min: f64, y_max: f64) -> Result<Self> {
        if !(y_min < y_max) {
            return Err(Error::config("window requires y_min < y_max"));
        }
        Ok(Window { y_min, y_max })
    }
}

/// Escape-time mask over a window grid.
///
/// For each cell the first step at which the orbit of its center violates
/// the half-plane constraint is recorded (`horizon + 1` when confined for
/// the whole horizon), so the mask at any horizon `h <= horizon` is
/// recoverable. Backward escape times are tracked when `two_sided`.
#[derive(Clone, Debug)]
pub struct BasinMask {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub horizon: u32,
    pub sign: BasinSign,
    pub two_sided: bool,
    /// Step of first forward violation, row-major by (iy, ix).
    fwd_escape: Vec<u32>,
    /// Step of first backward violation, when two-sided.
    bwd_escape: Option<Vec<u32>>,
    /// True when cells were filtered to components touching the unbounded
    /// edge of the window (heuristic stand-in for the unbounded component).
    pub unbounded_filter: bool,
    /// Cells removed by the unbounded-component filter.
    removed: Vec<bool>,
}

impl BasinMask {
    #[inline]
    fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Center of cell `(ix, iy)`.
    pub fn cell_center(&self, ix: usize, iy: usize) -> CylinderPoint {
        let dy = (self.window.y_max - self.window.y_min) / self.ny as f64;
        CylinderPoint::new(
            (ix as f64 + 0.5) / self.nx as f64,
            self.window.y_min + (iy as f64 + 0.5) * dy,
        )
    }

    pub fn cell_height(&self) -> f64 {
        (self.window.y_max - self.window.y_min) / self.ny as f64
    }

    /// Is the cell confined through `0..=h` (both directions if two-sided)?
    pub fn is_true_at(&self, ix: usize, iy: usize, h: u32) -> bool {
        let i = self.idx(ix, iy);
        if self.removed[i] {
            return false;
        }
        if self.fwd_escape[i] <= h {
            return false;
        }
        match &self.bwd_escape {
            Some(b) => b[i] > h,
            None => true,
        }
    }

    /// Is the cell true at the mask's own horizon?
    pub fn is_true(&self, ix: usize, iy: usize) -> bool {
        self.is_true_at(ix, iy, self.horizon)
    }

    pub fn count_true(&self) -> usize {
        let mut n = 0;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if self.is_true(ix, iy) {
                    n += 1;
                }
            }
        }
        n
    }

    /// Keep only true components (4-connected, x wraps) that touch the
    /// window edge pointing to the unbounded end: bottom row for lower
    /// masks, top row for upper ones. Heuristic approximation of the
    /// unbounded connected components.
    pub fn keep_unbounded_components(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        let mut keep = vec![false; nx * ny];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let seed_row = match self.sign {
            BasinSign::Lower => 0,
            BasinSign::Upper => ny - 1,
        };
        for ix in 0..nx {
            if self.is_true(ix, seed_row) {
                stack.push((ix, seed_row));
                keep[self.idx(ix, seed_row)] = true;
            }
        }
        while let Some((ix, iy)) = stack.pop() {
            let neighbors = [
                ((ix + 1) % nx, iy),
                ((ix + nx - 1) % nx, iy),
                (ix, iy.wrapping_add(1)),
                (ix, iy.wrapping_sub(1)),
            ];
            for (jx, jy) in neighbors {
                if jy < ny && self.is_true(jx, jy) && !keep[self.idx(jx, jy)] {
                    keep[self.idx(jx, jy)] = true;
                    stack.push((jx, jy));
                }
            }
        }
        for iy in 0..ny {
            for ix in 0..nx {
                let i = self.idx(ix, iy);
                if self.is_true(ix, iy) && !keep[i] {
                    self.removed[i] = true;
                }
            }
        }
        self.unbounded_filter = true;
    }

    /// Binary PGM (P5) rendering, 255 = true cell, top row = y_max.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.nx * self.ny);
        out.extend_from_slice(format!("P5\n{} {}\n255\n", self.nx, self.ny).as_bytes());
        for iy in (0..self.ny).rev() {
            for ix in 0..self.nx {
                out.push(if self.is_true(ix, iy) { 255 } else { 0 });
            }
        }
        out
    }
}

/// Compute the confinement mask of `spec` over a window.
pub fn compute_basin_mask(
    spec: &MapSpec,
    sign: BasinSign,
    horizon: u32,
    window: Window,
    resolution: (usize, usize),
    two_sided: bool,
) -> Result<BasinMask> {
    let (nx, ny) = resolution;
    if nx < 1 || ny < 1 {
        return Err(Error::config("mask resolution must be at least 1x1"));
    }
    if window.y_max < 0.0 || window.y_min > 0.0 {
        return Err(Error::config(
            "window too small: it must contain the y = 0 circle",
        ));
    }
    let lift = PowerShiftLift::base(spec.clone());
    let confined = |y: f64| match sign {
        BasinSign::Lower => y <= 0.0,
        BasinSign::Upper => y >= 0.0,
    };

    let escape = |center: CylinderPoint, backward: bool| -> u32 {
        let mut z = center;
        if !confined(z.y) {
            return 0;
        }
        for step in 1..=horizon {
            z = if backward { lift.cyl_step_inv(z) } else { lift.cyl_step(z) };
            if !confined(z.y) {
                return step;
            }
        }
        horizon + 1
    };

    let mask_template = BasinMask {
        window,
        nx,
        ny,
        horizon,
        sign,
        two_sided,
        fwd_escape: Vec::new(),
        bwd_escape: None,
        unbounded_filter: false,
        removed: vec![false; nx * ny],
    };

    let fwd_escape: Vec<u32> = (0..nx * ny)
        .into_par_iter()
        .map(|i| escape(mask_template.cell_center(i % nx, i / nx), false))
        .collect();
    let bwd_escape = if two_sided {
        Some(
            (0..nx * ny)
                .into_par_iter()
                .map(|i| escape(mask_template.cell_center(i % nx, i / nx), true))
                .collect(),
        )
    } else {
        None
    };

    Ok(BasinMask { fwd_escape, bwd_escape, ..mask_template })
}

/// Per-column extremum of the true cells.
#[derive(Clone, Debug)]
pub struct HeightProfile {
    pub sign: BasinSign,
    /// For lower masks the per-column max `y`; for upper ones the min.
    /// `None` where a column has no true cell.
    pub values: Vec<Option<f64>>,
    pub oscillation: f64,
    pub defined_everywhere: bool,
    pub cell_height: f64,
}

impl HeightProfile {
    /// CSV rows `column,x,value`; undefined columns emit `nan`.
    pub fn csv(&self) -> String {
        let n = self.values.len();
        let mut out = String::from("column,x,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let x = (i as f64 + 0.5) / n as f64;
            match v {
                Some(v) => out.push_str(&format!("{i},{x},{v}\n")),
                None => out.push_str(&format!("{i},{x},nan\n")),
            }
        }
        out
    }
}

/// Extract the column height profile of a mask.
pub fn compute_height_profile(mask: &BasinMask) -> Result<HeightProfile> {
    let mut values = vec![None; mask.nx];
    for ix in 0..mask.nx {
        for iy in 0..mask.ny {
            if mask.is_true(ix, iy) {
                let y = mask.cell_center(ix, iy).y;
                let v = values[ix].get_or_insert(y);
                match mask.sign {
                    BasinSign::Lower => *v = v.max(y),
                    BasinSign::Upper => *v = v.min(y),
                }
            }
        }
    }
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::EmptyMask);
    }
    let lo = defined.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = defined.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(HeightProfile {
        sign: mask.sign,
        defined_everywhere: defined.len() == mask.nx,
        oscillation: hi - lo,
        values,
        cell_height: mask.cell_height(),
    })
}

/// Vertical translation that lifts the profile's set strictly above
/// `M_Dehn`: `floor(-max + M_f + M_Dehn) + 1` for lower profiles.
pub fn translation_offset(profile: &HeightProfile, constants: &ConstantsReport) -> Result<i64> {
    let defined: Vec<f64> = profile.values.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::EmptyMask);
    }
    let extreme = match profile.sign {
        BasinSign::Lower => defined.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        BasinSign::Upper => defined.iter().cloned().fold(f64::INFINITY, f64::min),
    };
    Ok(((-extreme + constants.m_f + constants.m_dehn).floor() as i64) + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{compute_constants, BoundMode};
    use crate::map::parse_map_spec;

    fn window() -> Window {
        Window::new(-2.0, 0.5).unwrap()
    }

    #[test]
    fn pure_twist_lower_mask_is_half_plane() {
        let spec = MapSpec::pure_twist(1);
        let mask =
            compute_basin_mask(&spec, BasinSign::Lower, 200, window(), (32, 40), false).unwrap();
        for iy in 0..40 {
            for ix in 0..32 {
                let y = mask.cell_center(ix, iy).y;
                assert_eq!(mask.is_true(ix, iy), y <= 0.0, "cell ({ix},{iy}) y={y}");
            }
        }
    }

    #[test]
    fn pure_twist_profiles_are_zero() {
        let spec = MapSpec::pure_twist(1);
        let consts = compute_constants(&spec, BoundMode::ClosedForm).unwrap();
        for (sign, win) in [
            (BasinSign::Lower, Window::new(-2.0, 0.5).unwrap()),
            (BasinSign::Upper, Window::new(-0.5, 2.0).unwrap()),
        ] {
            let mask = compute_basin_mask(&spec, sign, 100, win, (64, 100), false).unwrap();
            let profile = compute_height_profile(&mask).unwrap();
            assert!(profile.defined_everywhere);
            // extremal row of cell centers hugging y = 0
            for v in profile.values.iter().flatten() {
                assert!(v.abs() <= mask.cell_height());
            }
            assert!(profile.oscillation <= consts.m_f + 2.0 * mask.cell_height());
        }
    }

    #[test]
    fn rigid_drift_escapes_everything() {
        let spec = parse_map_spec("k_dehn=1\nv.const=0.25").unwrap();
        let mask =
            compute_basin_mask(&spec, BasinSign::Lower, 100, window(), (16, 16), false).unwrap();
        assert_eq!(mask.count_true(), 0);
        assert!(matches!(compute_height_profile(&mask), Err(Error::EmptyMask)));
    }

    #[test]
    fn subcritical_chirikov_mask_spans_columns() {
        let spec = MapSpec::chirikov(0.5);
        let mask =
            compute_basin_mask(&spec, BasinSign::Lower, 2000, window(), (64, 64), false).unwrap();
        let profile = compute_height_profile(&mask).unwrap();
        assert!(profile.defined_everywhere, "mask should span every column");
        assert!(mask.count_true() > 0);
    }

    #[test]
    fn horizon_monotone_and_two_sided_subset() {
        let spec = MapSpec::chirikov(0.5);
        let two =
            compute_basin_mask(&spec, BasinSign::Lower, 500, window(), (48, 48), true).unwrap();
        for h in [0u32, 10, 100, 499] {
            for iy in 0..48 {
                for ix in 0..48 {
                    if two.is_true_at(ix, iy, h + 1) {
                        assert!(two.is_true_at(ix, iy, h), "monotonicity at ({ix},{iy},{h})");
                    }
                    // two-sided true => one-sided (forward only) true
                    if two.is_true_at(ix, iy, h) {
                        assert!(two.fwd_escape[iy * 48 + ix] > h);
                    }
                }
            }
        }
    }

    #[test]
    fn positive_invariance_proxy() {
        let spec = MapSpec::chirikov(0.5);
        let mask =
            compute_basin_mask(&spec, BasinSign::Lower, 400, window(), (64, 64), false).unwrap();
        let lift = PowerShiftLift::base(spec);
        let dy = mask.cell_height();
        for iy in 0..64 {
            for ix in 0..64 {
                if !mask.is_true(ix, iy) {
                    continue;
                }
                let img = lift.cyl_step(mask.cell_center(ix, iy));
                let jx = (img.x * 64.0).floor() as i64;
                let jy = ((img.y - mask.window.y_min) / dy).floor() as i64;
                if jy < 0 || jy >= 64 {
                    continue; // image left the window; nothing to check
                }
                let ok = (-1..=1).any(|ox| {
                    (-1..=1).any(|oy| {
                        let cx = (jx + ox).rem_euclid(64) as usize;
                        let cy = jy + oy;
                        cy >= 0 && cy < 64 && mask.is_true_at(cx, cy as usize, mask.horizon - 1)
                    })
                });
                assert!(ok, "image of true cell ({ix},{iy}) not near mask at h-1");
            }
        }
    }

    #[test]
    fn unbounded_component_filter_keeps_bottom() {
        let spec = MapSpec::chirikov(0.5);
        let mut mask =
            compute_basin_mask(&spec, BasinSign::Lower, 500, window(), (48, 48), false).unwrap();
        let before = mask.count_true();
        mask.keep_unbounded_components();
        assert!(mask.unbounded_filter);
        assert!(mask.count_true() <= before);
        // bottom row survivors remain
        assert!((0..48).any(|ix| mask.is_true(ix, 0)));
    }

    #[test]
    fn window_must_contain_zero_circle() {
        let spec = MapSpec::pure_twist(1);
        let bad = Window::new(-3.0, -1.0).unwrap();
        assert!(matches!(
            compute_basin_mask(&spec, BasinSign::Lower, 10, bad, (8, 8), false),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn translation_offset_pure_twist() {
        let spec = MapSpec::pure_twist(1);
        let consts = compute_constants(&spec, BoundMode::ClosedForm).unwrap();
        let mask =
            compute_basin_mask(&spec, BasinSign::Lower, 50, window(), (32, 50), false).unwrap();
        let profile = compute_height_profile(&mask).unwrap();
        // max μ ≈ 0 (one cell below), M_f + M_Dehn = 5 ⇒ offset 5 or 6
        let n = translation_offset(&profile, &consts).unwrap();
        assert!((5..=6).contains(&n), "offset {n}");
    }

    #[test]
    fn pgm_shape() {
        let spec = MapSpec::pure_twist(1);
        let mask =
            compute_basin_mask(&spec, BasinSign::Lower, 5, window(), (8, 4), false).unwrap();
        let pgm = mask.to_pgm();
        assert!(pgm.starts_with(b"P5\n8 4\n255\n"));
        assert_eq!(pgm.len(), "P5\n8 4\n255\n".len() + 32);
    }
}
