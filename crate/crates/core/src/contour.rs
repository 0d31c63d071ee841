//! Per-slice cross-section boundaries: marching-squares extraction with
//! linear edge interpolation, oriented loop assembly, polygon area and
//! length, and CSV export.
//!
//! Segments are emitted so that the negative region lies to the left of the
//! travel direction. Loops around the tube cross-section therefore run
//! counterclockwise (positive shoelace area) and holes run clockwise, and the
//! right-hand normal of every segment points toward positive values.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::levelset::LevelSetState;

/// One polyline of a slice contour. `vertices` does not repeat the first
/// vertex; `closed` marks whether the last vertex connects back to the first.
#[derive(Debug, Clone)]
pub struct ContourLoop {
    pub vertices: Vec<[f64; 2]>,
    pub closed: bool,
}

impl ContourLoop {
    /// Signed shoelace area (positive for counterclockwise loops).
    /// Open polylines enclose nothing.
    pub fn signed_area(&self) -> f64 {
        if !self.closed || self.vertices.len() < 3 {
            return 0.0;
        }
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * acc
    }

    /// Total polyline length (including the closing segment for loops).
    pub fn length(&self) -> f64 {
        let n = self.vertices.len();
        if n < 2 {
            return 0.0;
        }
        let pairs = if self.closed { n } else { n - 1 };
        let mut acc = 0.0;
        for i in 0..pairs {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        }
        acc
    }

    /// Per-vertex quadrature weight: half the sum of the adjacent segment
    /// lengths. Summing the weights recovers the polyline length.
    pub fn vertex_weights(&self) -> Vec<f64> {
        let n = self.vertices.len();
        let mut w = vec![0.0; n];
        if n < 2 {
            return w;
        }
        let pairs = if self.closed { n } else { n - 1 };
        for i in 0..pairs {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            w[i] += 0.5 * len;
            w[(i + 1) % n] += 0.5 * len;
        }
        w
    }
}

/// Oriented boundary curves of one cross-section.
#[derive(Debug, Clone)]
pub struct SliceContour {
    pub x3: f64,
    pub t: f64,
    pub loops: Vec<ContourLoop>,
}

impl SliceContour {
    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    /// Area of the negative region: sum of signed loop areas. Errors when
    /// any polyline is open (no enclosed region exists).
    pub fn area(&self) -> Result<f64> {
        for lp in &self.loops {
            if !lp.closed {
                return Err(Error::Precondition(
                    "open contour polylines enclose no area".into(),
                ));
            }
        }
        Ok(self.loops.iter().map(ContourLoop::signed_area).sum())
    }

    /// Total boundary length over all polylines.
    pub fn boundary_length(&self) -> f64 {
        self.loops.iter().map(ContourLoop::length).sum()
    }

    /// Write vertices as CSV with columns `loop_id,vertex_id,x1,x2`.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "loop_id,vertex_id,x1,x2")?;
        for (li, lp) in self.loops.iter().enumerate() {
            for (vi, v) in lp.vertices.iter().enumerate() {
                writeln!(out, "{li},{vi},{:.16e},{:.16e}", v[0], v[1])?;
            }
        }
        Ok(())
    }
}

/// Sum the signed areas of a contour (zero when empty).
pub fn slice_area(contour: &SliceContour) -> Result<f64> {
    contour.area()
}

/// Total boundary length of a contour.
pub fn boundary_length(contour: &SliceContour) -> f64 {
    contour.boundary_length()
}

// Edge identifiers for segment chaining. Horizontal edges join node (i, j)
// to (i+1, j); vertical edges join (i, j) to (i, j+1). Crossing positions are
// computed once per edge in a canonical orientation, so shared endpoints are
// bitwise identical across neighboring cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

struct Slab<'a> {
    values: &'a [f64],
    n1: usize,
    x0: f64,
    y0: f64,
    h1: f64,
    h2: f64,
}

impl Slab<'_> {
    #[inline]
    fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.n1 * j]
    }

    #[inline]
    fn inside(&self, i: usize, j: usize) -> bool {
        self.value(i, j) < 0.0
    }

    /// Zero crossing on an edge, linearly interpolated between its nodes.
    fn crossing(&self, key: EdgeKey) -> [f64; 2] {
        match key {
            EdgeKey::H(i, j) => {
                let a = self.value(i, j);
                let b = self.value(i + 1, j);
                let s = a / (a - b);
                [
                    self.x0 + self.h1 * (i as f64 + s),
                    self.y0 + self.h2 * j as f64,
                ]
            }
            EdgeKey::V(i, j) => {
                let a = self.value(i, j);
                let b = self.value(i, j + 1);
                let s = a / (a - b);
                [
                    self.x0 + self.h1 * i as f64,
                    self.y0 + self.h2 * (j as f64 + s),
                ]
            }
        }
    }
}

/// Directed segments per marching-squares case, negative region on the left.
/// Saddle cells are disambiguated by the sign of the cell-center sample.
fn cell_segments(slab: &Slab, i: usize, j: usize, out: &mut Vec<(EdgeKey, EdgeKey)>) {
    let s = EdgeKey::H(i, j);
    let e = EdgeKey::V(i + 1, j);
    let n = EdgeKey::H(i, j + 1);
    let w = EdgeKey::V(i, j);

    let mut case = 0usize;
    if slab.inside(i, j) {
        case |= 1;
    }
    if slab.inside(i + 1, j) {
        case |= 2;
    }
    if slab.inside(i + 1, j + 1) {
        case |= 4;
    }
    if slab.inside(i, j + 1) {
        case |= 8;
    }

    match case {
        0 | 15 => {}
        1 => out.push((s, w)),
        2 => out.push((e, s)),
        3 => out.push((e, w)),
        4 => out.push((n, e)),
        6 => out.push((n, s)),
        7 => out.push((n, w)),
        8 => out.push((w, n)),
        9 => out.push((s, n)),
        11 => out.push((e, n)),
        12 => out.push((w, e)),
        13 => out.push((s, e)),
        14 => out.push((w, s)),
        5 => {
            let center = 0.25
                * (slab.value(i, j)
                    + slab.value(i + 1, j)
                    + slab.value(i + 1, j + 1)
                    + slab.value(i, j + 1));
            if center < 0.0 {
                out.push((s, e));
                out.push((n, w));
            } else {
                out.push((s, w));
                out.push((n, e));
            }
        }
        10 => {
            let center = 0.25
                * (slab.value(i, j)
                    + slab.value(i + 1, j)
                    + slab.value(i + 1, j + 1)
                    + slab.value(i, j + 1));
            if center < 0.0 {
                out.push((w, s));
                out.push((e, n));
            } else {
                out.push((e, s));
                out.push((w, n));
            }
        }
        _ => unreachable!(),
    }
}

/// Assemble directed segments into polylines. Consistent orientation means a
/// crossed edge hosts exactly one incoming and one outgoing segment, so each
/// chain is unambiguous. Chains that return to their starting edge close into
/// loops; chains that dead-end (only possible at the slab boundary) come back
/// as open polylines.
fn assemble(slab: &Slab, segments: Vec<(EdgeKey, EdgeKey)>) -> Vec<ContourLoop> {
    let mut by_start: HashMap<EdgeKey, EdgeKey> = HashMap::with_capacity(segments.len());
    let mut by_end: HashMap<EdgeKey, EdgeKey> = HashMap::with_capacity(segments.len());
    for &(a, b) in &segments {
        by_start.insert(a, b);
        by_end.insert(b, a);
    }

    let mut consumed: std::collections::HashSet<EdgeKey> = Default::default();
    let mut loops = Vec::new();

    for &(seed, _) in &segments {
        if consumed.contains(&seed) {
            continue;
        }
        // Rewind to the chain head; a cycle comes back around to the seed.
        let mut head = seed;
        while let Some(&prev) = by_end.get(&head) {
            if prev == seed {
                break;
            }
            head = prev;
        }
        let closed = by_end.contains_key(&head);

        let mut keys = vec![head];
        consumed.insert(head);
        let mut cur = head;
        while let Some(&next) = by_start.get(&cur) {
            if next == head || consumed.contains(&next) {
                break;
            }
            keys.push(next);
            consumed.insert(next);
            if !by_start.contains_key(&next) {
                break; // dangling endpoint of an open chain
            }
            cur = next;
        }

        let vertices: Vec<[f64; 2]> = keys.iter().map(|&k| slab.crossing(k)).collect();
        loops.push(ContourLoop { vertices, closed });
    }
    loops
}

/// Extract the oriented zero contour of an `n1 x n2` slab of values with the
/// given origin and spacings. Open chains are returned as such; callers
/// decide whether they are an error.
pub(crate) fn march_slab(
    values: &[f64],
    n1: usize,
    n2: usize,
    x0: f64,
    y0: f64,
    h1: f64,
    h2: f64,
) -> Vec<ContourLoop> {
    let slab = Slab {
        values,
        n1,
        x0,
        y0,
        h1,
        h2,
    };
    let mut segments = Vec::new();
    for j in 0..n2 - 1 {
        for i in 0..n1 - 1 {
            cell_segments(&slab, i, j, &mut segments);
        }
    }
    assemble(&slab, segments)
}

/// Cross-section contour of a level-set state at height `x3` (the state is
/// first interpolated onto that plane). Errors when any polyline fails to
/// close, which signals boundary contact or degeneracy.
pub fn slice_contour(state: &LevelSetState, x3: f64) -> Result<SliceContour> {
    let values = state.slice_values(x3)?;
    let g = &state.grid;
    let h = g.spacing(&state.bx);
    let loops = march_slab(
        &values,
        g.n1,
        g.n2,
        state.bx.i1.lo,
        state.bx.i2.lo,
        h[0],
        h[1],
    );
    if loops.iter().any(|lp| !lp.closed) {
        return Err(Error::OpenContour { x3 });
    }
    Ok(SliceContour {
        x3,
        t: state.time,
        loops,
    })
}
