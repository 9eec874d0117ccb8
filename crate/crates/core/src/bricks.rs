//! Free brick decompositions, shift-labeled transition graphs and the
//! closed-chain search for lifts `g = f^{n0} - (0, m0)`.
//!
//! The plane is covered by three families, all invariant under the integer
//! horizontal translation `(x, y) ↦ (x + 1, y)`:
//!
//! * fine rectangular bricks tiling the band `[0,1) × [-Y, Y]` with
//!   `Y = M' + 2`, subdivided until each brick is certified free
//!   (`g(D) ∩ D = ∅`);
//! * lower half strips `F_n⁻ = [n/N, (n+1)/N] × (-∞, -Y]`;
//! * upper half strips `F_n⁺ = [n/N, (n+1)/N] × [Y, +∞)`.
//!
//! Strip freeness is certified on a truncated depth window; below the
//! working depth every intermediate iterate stays beyond `±M_Dehn`, where
//! one application moves `x` by more than 2 in a fixed direction, so the
//! tail cannot return to its strip.
//!
//! All freeness and edge labels use honest three-valued logic: floating
//! evaluation with a conservative margin `ε = 1e-9·(1 + |coords|)` and
//! enclosure inflation by an entrywise Jacobian bound. A closed chain of
//! certified-free bricks over certified-present edges with zero total
//! deck shift certifies a fixed point of `g`, hence membership of `m0/n0`
//! in the vertical rotation interval of the base map.

use std::collections::HashMap;

use petgraph::graph::DiGraph;
use rayon::prelude::*;

use crate::constants::{compute_constants, BoundMode, ConstantsReport};
use crate::map::{jacobian_abs_bound_power, MapSpec, PlanePoint, PowerShiftLift};
use crate::{Error, Result};

/// Closed axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    /// Axis diameter (max side length).
    pub fn diameter(&self) -> f64 {
        self.width().max(self.height())
    }

    pub fn center(&self) -> PlanePoint {
        PlanePoint::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn translated(&self, s: i64) -> Rect {
        Rect::new(self.x0 + s as f64, self.y0, self.x1 + s as f64, self.y1)
    }

    fn intersects(&self, other: &Rect) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }

    fn contains_with_margin(&self, p: PlanePoint, margin: f64) -> bool {
        p.x >= self.x0 + margin
            && p.x <= self.x1 - margin
            && p.y >= self.y0 + margin
            && p.y <= self.y1 - margin
    }

    fn split(&self) -> (Rect, Rect) {
        if self.width() >= self.height() {
            let xm = 0.5 * (self.x0 + self.x1);
            (Rect::new(self.x0, self.y0, xm, self.y1), Rect::new(xm, self.y0, self.x1, self.y1))
        } else {
            let ym = 0.5 * (self.y0 + self.y1);
            (Rect::new(self.x0, self.y0, self.x1, ym), Rect::new(self.x0, ym, self.x1, self.y1))
        }
    }
}

/// Freeness status of a brick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Freeness {
    /// Inflated image enclosure proven disjoint from the brick.
    CertifiedFree,
    /// Only point samples support freeness (no certificate).
    FreeSampled,
    /// Either a witness maps into the brick, or subdivision bottomed out
    /// without a certificate.
    NotFree,
}

/// Location where subdivision bottomed out without certifying freeness.
#[derive(Clone, Copy, Debug)]
pub struct FixedPointSuspect {
    pub rect: Rect,
    /// A witness with `g(z)` inside the brick, when one was found.
    pub witness: Option<PlanePoint>,
}

/// Conservative evaluation slack at the given coordinate scale.
#[inline]
fn eps_eval(scale: f64) -> f64 {
    1e-9 * (1.0 + scale.abs())
}

/// Inflated axis-aligned enclosure of `g(rect)`.
///
/// Samples a 3×3 grid and inflates by the directional Jacobian bound times
/// the per-axis sample gap, plus the evaluation slack.
fn enclose(lift: &PowerShiftLift, rect: &Rect, jac: &[[f64; 2]; 2]) -> Rect {
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y0 = f64::INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    let mut scale = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let p = PlanePoint::new(
                rect.x0 + rect.width() * i as f64 / 2.0,
                rect.y0 + rect.height() * j as f64 / 2.0,
            );
            let q = lift.plane_step(p);
            x0 = x0.min(q.x);
            x1 = x1.max(q.x);
            y0 = y0.min(q.y);
            y1 = y1.max(q.y);
            scale = scale.max(q.x.abs()).max(q.y.abs());
        }
    }
    let dx = rect.width() / 4.0;
    let dy = rect.height() / 4.0;
    let pad_x = jac[0][0] * dx + jac[0][1] * dy + eps_eval(scale);
    let pad_y = jac[1][0] * dx + jac[1][1] * dy + eps_eval(scale);
    Rect::new(x0 - pad_x, y0 - pad_y, x1 + pad_x, y1 + pad_y)
}

/// Deterministic interior sample points of a rectangle (inset grid + center).
fn interior_samples(rect: &Rect, per_axis: usize) -> Vec<PlanePoint> {
    let mut pts = Vec::with_capacity(per_axis * per_axis + 1);
    pts.push(rect.center());
    for i in 0..per_axis {
        for j in 0..per_axis {
            pts.push(PlanePoint::new(
                rect.x0 + rect.width() * (i as f64 + 0.5) / per_axis as f64,
                rect.y0 + rect.height() * (j as f64 + 0.5) / per_axis as f64,
            ));
        }
    }
    pts
}

/// A translation-invariant decomposition: fine band bricks plus half strips.
#[derive(Clone, Debug)]
pub struct BrickDecomposition {
    lift: PowerShiftLift,
    constants: ConstantsReport,
    /// Band half-height `Y = M' + 2`.
    pub band_halfheight: f64,
    /// Strip subdivision count; strips have width `1/N`.
    pub n_strips: usize,
    /// Depth at which strips are truncated for numeric certification.
    pub strip_depth: f64,
    /// Quotient fine bricks tiling `[0,1) × [-Y, Y]`.
    pub bricks: Vec<Rect>,
    pub statuses: Vec<Freeness>,
    /// Per lower/upper strip certification outcome.
    pub lower_strip_free: Vec<bool>,
    pub upper_strip_free: Vec<bool>,
    pub warnings: Vec<FixedPointSuspect>,
    pub target_diameter: f64,
    pub min_diameter: f64,
    jac: [[f64; 2]; 2],
    // coarse bucket grid for point/rect -> brick lookup
    coarse_cols: usize,
    coarse_rows: usize,
    buckets: Vec<Vec<usize>>,
}

/// Node index space: fine bricks, then lower strips, then upper strips.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Fine(usize),
    LowerStrip(usize),
    UpperStrip(usize),
}

impl BrickDecomposition {
    pub fn lift(&self) -> &PowerShiftLift {
        &self.lift
    }

    pub fn constants(&self) -> &ConstantsReport {
        &self.constants
    }

    pub fn n_nodes(&self) -> usize {
        self.bricks.len() + 2 * self.n_strips
    }

    pub fn node_kind(&self, id: usize) -> NodeKind {
        if id < self.bricks.len() {
            NodeKind::Fine(id)
        } else if id < self.bricks.len() + self.n_strips {
            NodeKind::LowerStrip(id - self.bricks.len())
        } else {
            NodeKind::UpperStrip(id - self.bricks.len() - self.n_strips)
        }
    }

    pub fn node_id(&self, kind: NodeKind) -> usize {
        match kind {
            NodeKind::Fine(i) => i,
            NodeKind::LowerStrip(n) => self.bricks.len() + n,
            NodeKind::UpperStrip(n) => self.bricks.len() + self.n_strips + n,
        }
    }

    /// Representative rectangle of a node (strips truncated at depth).
    pub fn node_rect(&self, id: usize) -> Rect {
        match self.node_kind(id) {
            NodeKind::Fine(i) => self.bricks[i],
            NodeKind::LowerStrip(n) => Rect::new(
                n as f64 / self.n_strips as f64,
                -self.strip_depth,
                (n + 1) as f64 / self.n_strips as f64,
                -self.band_halfheight,
            ),
            NodeKind::UpperStrip(n) => Rect::new(
                n as f64 / self.n_strips as f64,
                self.band_halfheight,
                (n + 1) as f64 / self.n_strips as f64,
                self.strip_depth,
            ),
        }
    }

    pub fn node_free(&self, id: usize) -> bool {
        match self.node_kind(id) {
            NodeKind::Fine(i) => self.statuses[i] == Freeness::CertifiedFree,
            NodeKind::LowerStrip(n) => self.lower_strip_free[n],
            NodeKind::UpperStrip(n) => self.upper_strip_free[n],
        }
    }

    /// All fine bricks and all strips carry a freeness certificate.
    pub fn fully_certified(&self) -> bool {
        self.statuses.iter().all(|s| *s == Freeness::CertifiedFree)
            && self.lower_strip_free.iter().all(|&b| b)
            && self.upper_strip_free.iter().all(|&b| b)
    }

    pub fn has_not_free(&self) -> bool {
        self.statuses.iter().any(|s| *s == Freeness::NotFree)
    }

    fn bucket_of(&self, x: f64, y: f64) -> Option<usize> {
        if !(0.0..1.0).contains(&x) {
            return None;
        }
        let cx = ((x * self.coarse_cols as f64) as usize).min(self.coarse_cols - 1);
        let fy = (y + self.band_halfheight) / (2.0 * self.band_halfheight) * self.coarse_rows as f64;
        if fy < 0.0 || fy >= self.coarse_rows as f64 {
            return None;
        }
        Some(fy as usize * self.coarse_cols + cx)
    }

    /// Fine brick containing a point of the fundamental band, if any.
    pub fn fine_brick_at(&self, x: f64, y: f64) -> Option<usize> {
        let b = self.bucket_of(x, y)?;
        self.buckets[b]
            .iter()
            .copied()
            .find(|&i| {
                let r = &self.bricks[i];
                x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1
            })
    }

    /// Fine bricks whose rectangle meets the query rectangle (no wrap).
    fn fine_bricks_meeting(&self, query: &Rect) -> Vec<usize> {
        let mut out = Vec::new();
        if query.x1 < 0.0 || query.x0 > 1.0 {
            return out;
        }
        let cx0 = ((query.x0.max(0.0) * self.coarse_cols as f64) as usize).min(self.coarse_cols - 1);
        let cx1 = ((query.x1.min(1.0) * self.coarse_cols as f64) as usize).min(self.coarse_cols - 1);
        let to_row = |y: f64| {
            let fy = (y + self.band_halfheight) / (2.0 * self.band_halfheight)
                * self.coarse_rows as f64;
            (fy.max(0.0) as usize).min(self.coarse_rows - 1)
        };
        if query.y1 < -self.band_halfheight || query.y0 > self.band_halfheight {
            return out;
        }
        let (r0, r1) = (to_row(query.y0), to_row(query.y1));
        for row in r0..=r1 {
            for col in cx0..=cx1 {
                for &i in &self.buckets[row * self.coarse_cols + col] {
                    if self.bricks[i].intersects(query) && !out.contains(&i) {
                        out.push(i);
                    }
                }
            }
        }
        out
    }

    /// CSV dump: `id,kind,x0,y0,x1,y1,status` (strips use truncated rects).
    pub fn csv(&self) -> String {
        let mut out = String::from("id,kind,x0,y0,x1,y1,status\n");
        for id in 0..self.n_nodes() {
            let r = self.node_rect(id);
            let (kind, status) = match self.node_kind(id) {
                NodeKind::Fine(i) => (
                    "fine",
                    match self.statuses[i] {
                        Freeness::CertifiedFree => "certified_free",
                        Freeness::FreeSampled => "free_sampled",
                        Freeness::NotFree => "not_free",
                    },
                ),
                NodeKind::LowerStrip(n) => (
                    "lower_strip",
                    if self.lower_strip_free[n] { "certified_free" } else { "not_free" },
                ),
                NodeKind::UpperStrip(n) => (
                    "upper_strip",
                    if self.upper_strip_free[n] { "certified_free" } else { "not_free" },
                ),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                id, kind, r.x0, r.y0, r.x1, r.y1, status
            ));
        }
        out
    }
}

fn certify_strip_cells(
    lift: &PowerShiftLift,
    jac: &[[f64; 2]; 2],
    strip_x0: f64,
    strip_x1: f64,
    y_near: f64,
    y_far: f64,
    upper: bool,
    min_diameter: f64,
) -> bool {
    // The strip region is the full half strip; an enclosure hits it when it
    // overlaps in x and reaches past the near boundary.
    let hits_strip = |e: &Rect| {
        e.x1 >= strip_x0 && e.x0 <= strip_x1 && if upper { e.y1 >= y_near } else { e.y0 <= y_near }
    };
    let (lo, hi) = if upper { (y_near, y_far) } else { (y_far, y_near) };
    let mut queue = vec![Rect::new(strip_x0, lo, strip_x1, hi)];
    while let Some(cell) = queue.pop() {
        let e = enclose(lift, &cell, jac);
        if !hits_strip(&e) {
            continue;
        }
        if cell.diameter() < min_diameter {
            return false;
        }
        let (a, b) = cell.split();
        queue.push(a);
        queue.push(b);
    }
    true
}

/// Build a translation-invariant decomposition whose bricks are free under
/// `g = f^{n0} - (0, m0)`.
///
/// Fine bricks are halved until certified free or their diameter drops
/// below `target_diameter / 1024`; bricks that bottom out are reported
/// `NotFree` together with a [`FixedPointSuspect`] location. The strip
/// count `N` starts at `ceil(1/target_diameter)` and doubles until every
/// truncated strip window certifies; the unbounded tails are free because
/// beyond the working depth every application moves `x` monotonically by
/// more than 2.
pub fn build_free_decomposition(
    spec: &MapSpec,
    n0: u32,
    m0: i64,
    target_diameter: f64,
) -> Result<BrickDecomposition> {
    if n0 == 0 {
        return Err(Error::config("n0 must be >= 1"));
    }
    if !(target_diameter > 0.0) {
        return Err(Error::config("target_diameter must be positive"));
    }
    let constants = compute_constants(spec, BoundMode::ClosedForm)?;
    let band_halfheight = constants.m_prime + 2.0;
    let lift = PowerShiftLift::new(spec.clone(), n0, m0)?;
    let jac = jacobian_abs_bound_power(spec, n0);
    let min_diameter = target_diameter / 1024.0;

    // Working depth: deep enough that tail iterates stay beyond M_Dehn.
    let a_f = constants.a_f;
    let strip_depth = band_halfheight + 10.0 * (a_f * n0 as f64 + m0.unsigned_abs() as f64 + 1.0);
    debug_assert!(strip_depth - n0 as f64 * a_f > constants.m_dehn + 1.0);

    // Fine tiling of the band.
    let cols = (1.0 / target_diameter).ceil() as usize;
    let rows = (2.0 * band_halfheight / target_diameter).ceil() as usize;
    let cell_w = 1.0 / cols as f64;
    let cell_h = 2.0 * band_halfheight / rows as f64;

    let initial: Vec<Rect> = (0..cols * rows)
        .map(|i| {
            let (cx, cy) = (i % cols, i / cols);
            Rect::new(
                cx as f64 * cell_w,
                -band_halfheight + cy as f64 * cell_h,
                (cx + 1) as f64 * cell_w,
                -band_halfheight + (cy + 1) as f64 * cell_h,
            )
        })
        .collect();

    // Subdivide each initial cell independently (parallel, ordered output).
    type CellOut = (Vec<(Rect, Freeness)>, Vec<FixedPointSuspect>);
    let processed: Vec<CellOut> = initial
        .par_iter()
        .map(|cell| {
            let mut out: Vec<(Rect, Freeness)> = Vec::new();
            let mut warn: Vec<FixedPointSuspect> = Vec::new();
            let mut queue = vec![*cell];
            while let Some(rect) = queue.pop() {
                let e = enclose(&lift, &rect, &jac);
                if !e.intersects(&rect) {
                    out.push((rect, Freeness::CertifiedFree));
                    continue;
                }
                if rect.diameter() >= min_diameter {
                    let (a, b) = rect.split();
                    queue.push(a);
                    queue.push(b);
                    continue;
                }
                // Bottomed out: no certificate at the smallest scale.
                let witness = interior_samples(&rect, 3)
                    .into_iter()
                    .find(|&p| {
                        let q = lift.plane_step(p);
                        q.x >= rect.x0 && q.x <= rect.x1 && q.y >= rect.y0 && q.y <= rect.y1
                    });
                warn.push(FixedPointSuspect { rect, witness });
                out.push((rect, Freeness::NotFree));
            }
            (out, warn)
        })
        .collect();

    let mut bricks = Vec::new();
    let mut statuses = Vec::new();
    let mut warnings = Vec::new();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cols * rows];
    for (cell_idx, (list, warn)) in processed.into_iter().enumerate() {
        for (rect, status) in list {
            buckets[cell_idx].push(bricks.len());
            bricks.push(rect);
            statuses.push(status);
        }
        warnings.extend(warn);
    }

    // Strips: double N until all 2N truncated windows certify.
    let mut n_strips = cols.max(1);
    let mut lower_free = Vec::new();
    let mut upper_free = Vec::new();
    for _attempt in 0..8 {
        let certify = |n: usize, upper: bool| {
            let x0 = n as f64 / n_strips as f64;
            let x1 = (n + 1) as f64 / n_strips as f64;
            let (near, far) = if upper {
                (band_halfheight, strip_depth)
            } else {
                (-band_halfheight, -strip_depth)
            };
            certify_strip_cells(&lift, &jac, x0, x1, near, far, upper, min_diameter)
        };
        lower_free = (0..n_strips).into_par_iter().map(|n| certify(n, false)).collect();
        upper_free = (0..n_strips).into_par_iter().map(|n| certify(n, true)).collect();
        if lower_free.iter().all(|&b| b) && upper_free.iter().all(|&b| b) {
            break;
        }
        n_strips *= 2;
    }

    Ok(BrickDecomposition {
        lift,
        constants,
        band_halfheight,
        n_strips,
        strip_depth,
        bricks,
        statuses,
        lower_strip_free: lower_free,
        upper_strip_free: upper_free,
        warnings,
        target_diameter,
        min_diameter,
        jac,
        coarse_cols: cols,
        coarse_rows: rows,
        buckets,
    })
}

/// Label of a transition edge `g(D_src) ∩ (D_dst + (shift, 0)) ≠ ∅`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeLabel {
    /// An interior witness maps strictly inside the target with margin.
    CertifiedPresent,
    /// Only point-cloud evidence.
    SampledPresent,
}

#[derive(Clone, Copy, Debug)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub shift: i64,
    pub label: EdgeLabel,
    /// Point in the source (quotient) brick whose image witnesses the edge.
    pub witness: Option<PlanePoint>,
}

/// Label assignment mode for graph construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphMode {
    Certified,
    Sampled,
}

/// Quotient transition graph with integer deck-shift labels.
#[derive(Clone, Debug)]
pub struct TransitionGraph {
    pub mode: GraphMode,
    pub n_fine: usize,
    pub n_strips: usize,
    pub node_free: Vec<bool>,
    pub node_rects: Vec<Rect>,
    pub edges: Vec<Edge>,
    /// Pairs proven absent by separated enclosures.
    pub absent: Vec<(usize, usize, i64)>,
    /// Candidate pairs that could not be decided either way.
    pub undetermined: usize,
    /// Smallest K with certified strip edges for every jump `>= K` within
    /// the examined window, in both monotone directions.
    pub k_crit_estimate: Option<u32>,
    /// All bricks and strips of the underlying decomposition certified free.
    pub all_free: bool,
    /// Largest strip jump examined by the sweep.
    strip_scan_cap: i64,
    edge_index: HashMap<(usize, usize, i64), usize>,
}

impl TransitionGraph {
    fn push_edge(&mut self, e: Edge) {
        match self.edge_index.get(&(e.src, e.dst, e.shift)) {
            Some(&i) => {
                // upgrade sampled -> certified
                if self.edges[i].label == EdgeLabel::SampledPresent
                    && e.label == EdgeLabel::CertifiedPresent
                {
                    self.edges[i] = e;
                }
            }
            None => {
                self.edge_index.insert((e.src, e.dst, e.shift), self.edges.len());
                self.edges.push(e);
            }
        }
    }

    pub fn edge(&self, src: usize, dst: usize, shift: i64) -> Option<&Edge> {
        self.edge_index.get(&(src, dst, shift)).map(|&i| &self.edges[i])
    }

    /// Hand-built graph for fixtures and experiments: every node is treated
    /// as certified free and every edge as certified present.
    pub fn fixture(node_rects: Vec<Rect>, edges: Vec<(usize, usize, i64)>) -> Self {
        let n = node_rects.len();
        let mut g = TransitionGraph {
            mode: GraphMode::Certified,
            n_fine: n,
            n_strips: 0,
            node_free: vec![true; n],
            node_rects: node_rects.clone(),
            edges: Vec::new(),
            absent: Vec::new(),
            undetermined: 0,
            k_crit_estimate: None,
            all_free: true,
            strip_scan_cap: 0,
            edge_index: HashMap::new(),
        };
        for (src, dst, shift) in edges {
            let witness = Some(node_rects[src].center());
            g.push_edge(Edge { src, dst, shift, label: EdgeLabel::CertifiedPresent, witness });
        }
        g
    }

    /// CSV dump `src,dst,shift,label`, absent pairs included.
    pub fn csv(&self) -> String {
        let mut out = String::from("src,dst,shift,label\n");
        for e in &self.edges {
            let label = match e.label {
                EdgeLabel::CertifiedPresent => "certified_present",
                EdgeLabel::SampledPresent => "sampled_present",
            };
            out.push_str(&format!("{},{},{},{}\n", e.src, e.dst, e.shift, label));
        }
        for &(s, d, sh) in &self.absent {
            out.push_str(&format!("{s},{d},{sh},certified_absent\n"));
        }
        out
    }
}

/// Build the transition graph of a decomposition.
pub fn build_transition_graph(dec: &BrickDecomposition, mode: GraphMode) -> TransitionGraph {
    let lift = &dec.lift;
    let n_fine = dec.bricks.len();
    let n = dec.n_strips;
    let y_band = dec.band_halfheight;

    let k_eff_abs = lift.k_effective().unsigned_abs().max(1) as f64;
    let mut graph = TransitionGraph {
        mode,
        n_fine,
        n_strips: n,
        node_free: (0..dec.n_nodes()).map(|id| dec.node_free(id)).collect(),
        node_rects: (0..dec.n_nodes()).map(|id| dec.node_rect(id)).collect(),
        edges: Vec::new(),
        absent: Vec::new(),
        undetermined: 0,
        k_crit_estimate: None,
        all_free: dec.fully_certified(),
        strip_scan_cap: (2.0 * k_eff_abs * (dec.strip_depth + 2.0) * n as f64) as i64 + 16,
        edge_index: HashMap::new(),
    };

    // --- fine bricks as sources ------------------------------------------
    struct SourceOut {
        edges: Vec<Edge>,
        absent: Vec<(usize, usize, i64)>,
        undetermined: usize,
    }

    let fine_outputs: Vec<SourceOut> = (0..n_fine)
        .into_par_iter()
        .map(|i| {
            let rect = dec.bricks[i];
            let mut out =
                SourceOut { edges: Vec::new(), absent: Vec::new(), undetermined: 0 };
            let samples: Vec<(PlanePoint, PlanePoint)> = interior_samples(&rect, 4)
                .into_iter()
                .map(|p| (p, lift.plane_step(p)))
                .collect();
            let margin = 2.0 * eps_eval(y_band + dec.strip_depth);

            let mut handle_target = |dst: usize, target: Rect, shift: i64| {
                let witness = samples
                    .iter()
                    .find(|(_, q)| target.contains_with_margin(*q, margin))
                    .map(|(p, _)| *p);
                match witness {
                    Some(w) => out.edges.push(Edge {
                        src: i,
                        dst,
                        shift,
                        label: match mode {
                            GraphMode::Certified => EdgeLabel::CertifiedPresent,
                            GraphMode::Sampled => EdgeLabel::SampledPresent,
                        },
                        witness: Some(w),
                    }),
                    None => {
                        let hit = samples.iter().any(|(_, q)| {
                            q.x >= target.x0
                                && q.x <= target.x1
                                && q.y >= target.y0
                                && q.y <= target.y1
                        });
                        if hit {
                            out.edges.push(Edge {
                                src: i,
                                dst,
                                shift,
                                label: EdgeLabel::SampledPresent,
                                witness: None,
                            });
                        } else {
                            out.undetermined += 1;
                        }
                    }
                }
            };

            if mode == GraphMode::Certified {
                let e = enclose(lift, &rect, &dec.jac);
                // fine targets across candidate integer translates; probe a
                // slightly larger area so separated neighbors are recorded
                // as certified absent
                let pad = 2.0 * dec.target_diameter;
                let s_lo = (e.x0 - pad - 1.0).floor() as i64;
                let s_hi = (e.x1 + pad).ceil() as i64;
                for s in s_lo..=s_hi {
                    let probe = Rect::new(
                        e.x0 - s as f64 - pad,
                        e.y0 - pad,
                        e.x1 - s as f64 + pad,
                        e.y1 + pad,
                    );
                    for j in dec.fine_bricks_meeting(&probe) {
                        let target = dec.bricks[j].translated(s);
                        if !e.intersects(&target) {
                            out.absent.push((i, j, s));
                        } else {
                            handle_target(j, target, s);
                        }
                    }
                }
                // strip targets
                if e.y0 <= -y_band || e.y1 >= y_band {
                    let p_lo = (e.x0 * n as f64).floor() as i64;
                    let p_hi = (e.x1 * n as f64).floor() as i64;
                    for p in p_lo..=p_hi {
                        let q = p.rem_euclid(n as i64) as usize;
                        let s = p.div_euclid(n as i64);
                        if e.y0 <= -y_band {
                            let dst = n_fine + q;
                            let target = Rect::new(
                                p as f64 / n as f64,
                                -f64::INFINITY,
                                (p + 1) as f64 / n as f64,
                                -y_band,
                            );
                            handle_target(dst, target, s);
                        }
                        if e.y1 >= y_band {
                            let dst = n_fine + n + q;
                            let target = Rect::new(
                                p as f64 / n as f64,
                                y_band,
                                (p + 1) as f64 / n as f64,
                                f64::INFINITY,
                            );
                            handle_target(dst, target, s);
                        }
                    }
                }
            } else {
                // sampled mode: classify each sample image directly
                for (p, q) in &samples {
                    let s = q.x.floor() as i64;
                    let local_x = q.x - s as f64;
                    if q.y.abs() <= y_band {
                        if let Some(j) = dec.fine_brick_at(local_x, q.y) {
                            out.edges.push(Edge {
                                src: i,
                                dst: j,
                                shift: s,
                                label: EdgeLabel::SampledPresent,
                                witness: Some(*p),
                            });
                        }
                    } else {
                        let pidx = (q.x * n as f64).floor() as i64;
                        let quot = pidx.rem_euclid(n as i64) as usize;
                        let shift = pidx.div_euclid(n as i64);
                        let dst =
                            if q.y < 0.0 { n_fine + quot } else { n_fine + n + quot };
                        out.edges.push(Edge {
                            src: i,
                            dst,
                            shift,
                            label: EdgeLabel::SampledPresent,
                            witness: Some(*p),
                        });
                    }
                }
            }
            out
        })
        .collect();

    for o in fine_outputs {
        for e in o.edges {
            graph.push_edge(e);
        }
        graph.absent.extend(o.absent);
        graph.undetermined += o.undetermined;
    }

    // --- strips as sources: forward-imaging sweep -------------------------
    let k_eff = lift.k_effective().unsigned_abs().max(1) as f64;
    let dy = 1.0 / (8.0 * n as f64 * k_eff);
    let margin = 2.0 * eps_eval(dec.strip_depth * (1.0 + k_eff));
    let sweep_span = dec.strip_depth - y_band;
    let steps = (sweep_span / dy).ceil() as usize;

    struct StripOut {
        edges: Vec<Edge>,
    }

    let strip_outputs: Vec<StripOut> = (0..2 * n)
        .into_par_iter()
        .map(|sidx| {
            let upper = sidx >= n;
            let sn = sidx % n;
            let src_id = if upper { n_fine + n + sn } else { n_fine + sn };
            let x0 = sn as f64 / n as f64;
            let width = 1.0 / n as f64;
            let mut edges = Vec::new();
            for xi in 0..5 {
                let x = x0 + width * (xi as f64 + 0.5) / 5.0;
                for step in 0..steps {
                    let y_mag = y_band + dy * (step as f64 + 0.5);
                    let y = if upper { y_mag } else { -y_mag };
                    let p = PlanePoint::new(x, y);
                    let q = lift.plane_step(p);
                    // target strip?
                    if q.y >= y_band + margin || q.y <= -y_band - margin {
                        let pidx = (q.x * n as f64).floor() as i64;
                        let inner_lo = pidx as f64 / n as f64 + margin;
                        let inner_hi = (pidx + 1) as f64 / n as f64 - margin;
                        if q.x > inner_lo && q.x < inner_hi {
                            let quot = pidx.rem_euclid(n as i64) as usize;
                            let shift = pidx.div_euclid(n as i64);
                            let dst = if q.y < 0.0 { n_fine + quot } else { n_fine + n + quot };
                            edges.push(Edge {
                                src: src_id,
                                dst,
                                shift,
                                label: match mode {
                                    GraphMode::Certified => EdgeLabel::CertifiedPresent,
                                    GraphMode::Sampled => EdgeLabel::SampledPresent,
                                },
                                witness: Some(p),
                            });
                        }
                    } else if q.y.abs() < y_band - margin {
                        // image lands in the band: find the brick
                        let s = q.x.floor() as i64;
                        let local_x = q.x - s as f64;
                        if let Some(j) = dec.fine_brick_at(local_x, q.y) {
                            let r = dec.bricks[j].translated(s);
                            if r.contains_with_margin(q, margin) {
                                edges.push(Edge {
                                    src: src_id,
                                    dst: j,
                                    shift: s,
                                    label: match mode {
                                        GraphMode::Certified => EdgeLabel::CertifiedPresent,
                                        GraphMode::Sampled => EdgeLabel::SampledPresent,
                                    },
                                    witness: Some(p),
                                });
                            }
                        }
                    }
                }
            }
            StripOut { edges }
        })
        .collect();

    for o in strip_outputs {
        for e in o.edges {
            graph.push_edge(e);
        }
    }

    graph.k_crit_estimate = estimate_k_crit(&graph);
    graph
}

/// Smallest jump size from which every larger strip-to-strip jump within the
/// examined window is a certified edge, in the two monotone directions
/// (upper strips jump right, lower strips jump left).
fn estimate_k_crit(graph: &TransitionGraph) -> Option<u32> {
    let n = graph.n_strips;
    if n == 0 {
        return None;
    }
    let certified = |src: usize, dst: usize, shift: i64| {
        graph
            .edge(src, dst, shift)
            .map(|e| e.label == EdgeLabel::CertifiedPresent)
            .unwrap_or(false)
    };
    let mut worst: u32 = 0;
    for sn in 0..n {
        for upper in [false, true] {
            let base = graph.n_fine + if upper { n + sn } else { sn };
            // presence of the jump by `delta` in the monotone direction
            let present = |delta: i64| {
                let target_plane = sn as i64 + if upper { delta } else { -delta };
                let quot = target_plane.rem_euclid(n as i64) as usize;
                let shift = target_plane.div_euclid(n as i64);
                let dst = graph.n_fine + if upper { n + quot } else { quot };
                certified(base, dst, shift)
            };
            // furthest certified jump inside the sweep window
            let reach = (1..=graph.strip_scan_cap).rev().find(|&d| present(d))?;
            // start of the contiguous certified run ending at `reach`
            let mut start = reach;
            while start > 1 && present(start - 1) {
                start -= 1;
            }
            worst = worst.max(start as u32);
        }
    }
    Some(worst)
}

/// A closed chain of certified-free bricks with zero total deck shift.
#[derive(Clone, Debug)]
pub struct ChainCertificate {
    /// Node ids along the cycle (first node repeats implicitly).
    pub cycle: Vec<usize>,
    /// Deck shift of each edge; sums to zero.
    pub shifts: Vec<i64>,
    /// Cumulative plane translation of each cycle brick.
    pub plane_offsets: Vec<i64>,
    /// Witness point (quotient coordinates) of each edge.
    pub witnesses: Vec<Option<PlanePoint>>,
    pub conclusion: String,
}

impl ChainCertificate {
    pub fn total_shift(&self) -> i64 {
        self.shifts.iter().sum()
    }

    pub fn text(&self, graph: &TransitionGraph) -> String {
        let mut out = String::from("closed chain certificate\n");
        for (i, &node) in self.cycle.iter().enumerate() {
            let r = graph.node_rects[node].translated(self.plane_offsets[i]);
            out.push_str(&format!(
                "  brick {} at [{}, {}] x [{}, {}] --(shift {})-->\n",
                node, r.x0, r.x1, r.y0, r.y1, self.shifts[i]
            ));
            if let Some(w) = self.witnesses[i] {
                out.push_str(&format!(
                    "    witness ({}, {})\n",
                    w.x + self.plane_offsets[i] as f64,
                    w.y
                ));
            }
        }
        out.push_str(&format!("  total shift {}\n{}\n", self.total_shift(), self.conclusion));
        out
    }
}

/// Outcome of the chain search.
#[derive(Clone, Debug)]
pub enum ChainSearch {
    /// A zero-total-shift cycle over certified edges and free bricks.
    Certificate(ChainCertificate),
    /// No closed chain exists among the certified edges.
    NoneFound,
    /// No certificate can be issued: sampled-mode graph or an uncertified
    /// decomposition.
    NoneUncertified(&'static str),
}

/// Search for a closed chain: a cycle of certified-present edges between
/// certified-free bricks whose deck shifts sum to zero.
///
/// The search works per strongly connected component of the quotient graph.
/// Components whose edges all shift the same way cannot close up; the rest
/// are explored in the product graph `(node, accumulated shift)` with the
/// accumulator bounded. Exceeding the bound without finding a cycle is
/// reported as inconclusive rather than silently dropped.
pub fn find_closed_chain(graph: &TransitionGraph) -> Result<ChainSearch> {
    if graph.mode == GraphMode::Sampled {
        return Ok(ChainSearch::NoneUncertified(
            "sampled-mode graph: certificates require certified mode",
        ));
    }
    if !graph.all_free {
        return Ok(ChainSearch::NoneUncertified(
            "decomposition has uncertified bricks; chain conclusions suppressed",
        ));
    }

    let n_nodes = graph.node_rects.len();
    let edges: Vec<&Edge> = graph
        .edges
        .iter()
        .filter(|e| {
            e.label == EdgeLabel::CertifiedPresent
                && graph.node_free[e.src]
                && graph.node_free[e.dst]
        })
        .collect();

    // SCCs of the quotient digraph.
    let mut pg = DiGraph::<(), ()>::new();
    let idx: Vec<_> = (0..n_nodes).map(|_| pg.add_node(())).collect();
    for e in &edges {
        pg.add_edge(idx[e.src], idx[e.dst], ());
    }
    let sccs = petgraph::algo::tarjan_scc(&pg);

    let mut truncated = false;
    for scc in sccs {
        let members: Vec<usize> = scc.iter().map(|ni| ni.index()).collect();
        let in_scc = |v: usize| members.contains(&v);
        let scc_edges: Vec<&&Edge> =
            edges.iter().filter(|e| in_scc(e.src) && in_scc(e.dst)).collect();
        if scc_edges.is_empty() {
            continue;
        }
        let any_pos = scc_edges.iter().any(|e| e.shift > 0);
        let any_neg = scc_edges.iter().any(|e| e.shift < 0);
        let any_zero = scc_edges.iter().any(|e| e.shift == 0);
        if !(any_zero || (any_pos && any_neg)) {
            continue; // all shifts strictly one-signed: sums cannot vanish
        }

        // Product graph over (member, accumulator).
        let max_shift = scc_edges.iter().map(|e| e.shift.unsigned_abs()).max().unwrap_or(1);
        let bound = (max_shift.max(1) as i64) * (members.len() as i64 + 2);
        let bound = bound.min(4096);
        let width = (2 * bound + 1) as usize;
        let local: HashMap<usize, usize> =
            members.iter().enumerate().map(|(li, &v)| (v, li)).collect();
        let size = members.len() * width;
        let state_of = |node_li: usize, acc: i64| node_li * width + (acc + bound) as usize;

        // adjacency in the product graph
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); size];
        let mut edge_of: HashMap<(usize, usize), (usize, usize, i64)> = HashMap::new();
        for e in &scc_edges {
            let (sl, dl) = (local[&e.src], local[&e.dst]);
            for acc in -bound..=bound {
                let next = acc + e.shift;
                if next.abs() > bound {
                    truncated = true;
                    continue;
                }
                let from = state_of(sl, acc);
                let to = state_of(dl, next);
                adj[from].push(to);
                edge_of.insert((from, to), (e.src, e.dst, e.shift));
            }
        }

        // Iterative DFS cycle detection (0 = white, 1 = gray, 2 = black).
        let mut state = vec![0u8; size];
        for start in (0..members.len()).map(|li| state_of(li, 0)) {
            if state[start] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            state[start] = 1;
            while let Some(&(v, next_i)) = stack.last() {
                if next_i < adj[v].len() {
                    stack.last_mut().expect("nonempty").1 += 1;
                    let w = adj[v][next_i];
                    if state[w] == 1 {
                        // found a cycle: unwind the stack back to w
                        let mut cyc_states = vec![w];
                        for &(sv, _) in stack.iter().rev() {
                            if sv == w {
                                break;
                            }
                            cyc_states.push(sv);
                        }
                        cyc_states.reverse(); // w, ..., v
                        return Ok(ChainSearch::Certificate(build_certificate(
                            graph,
                            &cyc_states,
                            &edge_of,
                        )));
                    }
                    if state[w] == 0 {
                        state[w] = 1;
                        stack.push((w, 0));
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                }
            }
        }
    }

    if truncated {
        return Err(Error::Inconclusive(
            "shift accumulator bound exceeded during chain search".into(),
        ));
    }
    Ok(ChainSearch::NoneFound)
}

fn build_certificate(
    graph: &TransitionGraph,
    cyc_states: &[usize],
    edge_of: &HashMap<(usize, usize), (usize, usize, i64)>,
) -> ChainCertificate {
    let len = cyc_states.len();
    let mut cycle = Vec::with_capacity(len);
    let mut shifts = Vec::with_capacity(len);
    let mut witnesses = Vec::with_capacity(len);
    for i in 0..len {
        let from = cyc_states[i];
        let to = cyc_states[(i + 1) % len];
        let &(src, _dst, shift) = edge_of
            .get(&(from, to))
            .expect("cycle edges exist in the product graph");
        cycle.push(src);
        shifts.push(shift);
        witnesses.push(graph.edge(src, _dst, shift).and_then(|e| e.witness));
    }
    let mut plane_offsets = Vec::with_capacity(len);
    let mut acc = 0i64;
    for s in &shifts {
        plane_offsets.push(acc);
        acc += s;
    }
    ChainCertificate {
        cycle,
        shifts,
        plane_offsets,
        witnesses,
        conclusion:
            "g has a fixed point (closed free chain), so m0/n0 lies in the vertical rotation \
             interval of the base lift"
                .to_string(),
    }
}
