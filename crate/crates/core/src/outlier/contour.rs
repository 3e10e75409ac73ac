//! Closed contours and the argument principle.

use std::f64::consts::{FRAC_PI_3, TAU};

use crate::error::{Error, Result};
use crate::linalg::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Line { from: C64, to: C64 },
    /// Arc of the circle `center + radius e^{i theta}` for `theta` from `start` to `end`
    /// (clockwise when `end < start`).
    Arc { center: C64, radius: f64, start: f64, end: f64 },
}

impl Segment {
    /// Point at parameter `t` in `[0, 1]`.
    pub fn point(&self, t: f64) -> C64 {
        match *self {
            Segment::Line { from, to } => from + (to - from) * t,
            Segment::Arc { center, radius, start, end } => center + C64::from_polar(radius, start + (end - start) * t),
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { from, to } => (to - from).norm(),
            Segment::Arc { radius, start, end, .. } => radius * (end - start).abs(),
        }
    }
}

/// An ordered list of segments forming one or more closed, positively
/// oriented curves.
#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    pub segments: Vec<Segment>,
}

impl Contour {
    pub fn circle(center: C64, radius: f64) -> Self {
        // start away from the real axis, where zeros of real problems live
        let start = 0.3;
        Self { segments: vec![Segment::Arc { center, radius, start, end: start + TAU }] }
    }

    /// Counter-clockwise boundary of the box with corners `lo` and `hi`.
    pub fn rectangle(lo: C64, hi: C64) -> Self {
        let c = [lo, C64::new(hi.re, lo.im), hi, C64::new(lo.re, hi.im)];
        let segments = (0..4).map(|i| Segment::Line { from: c[i], to: c[(i + 1) % 4] }).collect();
        Self { segments }
    }

    /// Boundary of `{r0 <= |z| <= r1, t0 <= arg z <= t1}` (with `t0 < t1`).
    pub fn annular_sector(r0: f64, r1: f64, t0: f64, t1: f64) -> Self {
        let o = C64::new(0.0, 0.0);
        Self {
            segments: vec![
                Segment::Line { from: C64::from_polar(r0, t0), to: C64::from_polar(r1, t0) },
                Segment::Arc { center: o, radius: r1, start: t0, end: t1 },
                Segment::Line { from: C64::from_polar(r1, t1), to: C64::from_polar(r0, t1) },
                Segment::Arc { center: o, radius: r0, start: t1, end: t0 },
            ],
        }
    }

    /// Outer circle counter-clockwise and inner circle clockwise.
    pub fn annulus(r0: f64, r1: f64) -> Self {
        let o = C64::new(0.0, 0.0);
        let s = 0.3;
        Self {
            segments: vec![
                Segment::Arc { center: o, radius: r1, start: s, end: s + TAU },
                Segment::Arc { center: o, radius: r0, start: s + TAU, end: s },
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindingOptions {
    /// Uniform samples per segment before adaptive refinement.
    pub initial_samples: usize,
    /// Minimum uniform samples per full turn of an arc.
    pub samples_per_turn: usize,
    /// Maximum bisection depth below an initial interval.
    pub max_refine: usize,
    /// `|f|` below this anywhere on the contour is treated as a zero on it.
    pub min_modulus: f64,
}

impl Default for WindingOptions {
    fn default() -> Self {
        Self { initial_samples: 16, samples_per_turn: 64, max_refine: 40, min_modulus: 1e-12 }
    }
}

impl WindingOptions {
    /// The same options with twice the initial sampling density.
    pub fn doubled(&self) -> Self {
        Self { initial_samples: 2 * self.initial_samples, samples_per_turn: 2 * self.samples_per_turn, ..*self }
    }
}

/// Winding number of `f` around the origin along `contour`: the number of zeros
/// minus poles enclosed. Each segment is refined until consecutive samples
/// differ in phase by less than a sixth of a turn and in modulus by less than
/// a factor of 4.
pub fn winding_number<F>(f: &F, contour: &Contour, opts: &WindingOptions) -> Result<i64>
where
    F: Fn(C64) -> Result<C64> + ?Sized,
{
    let eval = |z: C64| -> Result<C64> {
        let v = f(z)?;
        let m = v.norm();
        if !(m >= opts.min_modulus) {
            return Err(Error::ContourThroughZero { z, modulus: m });
        }
        Ok(v)
    };
    let mut total = 0.0;
    for seg in &contour.segments {
        let ts = sample_parameters(seg, opts);
        let mut t0 = ts[0];
        let mut f0 = eval(seg.point(t0))?;
        for &t1 in &ts[1..] {
            let f1 = eval(seg.point(t1))?;
            total += refine(&eval, seg, (t0, f0), (t1, f1), opts.max_refine)?;
            t0 = t1;
            f0 = f1;
        }
    }
    let turns = total / TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.25 {
        return Err(Error::RefinementExhausted { z: contour.segments[0].point(0.0) });
    }
    Ok(rounded as i64)
}

/// Initial sample parameters in `[0, 1]`. Arcs get `samples_per_turn` per full
/// turn. Radial lines are sampled uniformly in `log |z|` at the same density,
/// since a turn of angle and a unit of log-radius are conformally alike.
fn sample_parameters(seg: &Segment, opts: &WindingOptions) -> Vec<f64> {
    let per_radian = opts.samples_per_turn as f64 / TAU;
    match *seg {
        Segment::Arc { start, end, .. } => {
            let steps = opts.initial_samples.max((per_radian * (end - start).abs()).ceil() as usize).max(1);
            (0..=steps).map(|k| k as f64 / steps as f64).collect()
        }
        Segment::Line { from, to } => {
            let (r0, r1) = (from.norm(), to.norm());
            let radial = r0 > 0.0 && r1 > 0.0 && (from * to.conj()).im.abs() <= 1e-12 * r0 * r1 && (from * to.conj()).re > 0.0;
            if radial && r0 != r1 {
                let span = (r1 / r0).ln();
                let steps = opts.initial_samples.max((per_radian * span.abs()).ceil() as usize);
                (0..=steps)
                    .map(|k| if k == steps { 1.0 } else { (r0 * (span * k as f64 / steps as f64).exp() - r0) / (r1 - r0) })
                    .collect()
            } else {
                let steps = opts.initial_samples.max(1);
                (0..=steps).map(|k| k as f64 / steps as f64).collect()
            }
        }
    }
}

fn refine<E>(eval: &E, seg: &Segment, a: (f64, C64), b: (f64, C64), depth: usize) -> Result<f64>
where
    E: Fn(C64) -> Result<C64>,
{
    let q = b.1 / a.1;
    let dphi = q.arg();
    if dphi.abs() < FRAC_PI_3 && (0.25..=4.0).contains(&q.norm()) {
        return Ok(dphi);
    }
    if depth == 0 {
        return Err(Error::RefinementExhausted { z: seg.point(0.5 * (a.0 + b.0)) });
    }
    let tm = 0.5 * (a.0 + b.0);
    let fm = eval(seg.point(tm))?;
    Ok(refine(eval, seg, a, (tm, fm), depth - 1)? + refine(eval, seg, (tm, fm), b, depth - 1)?)
}
