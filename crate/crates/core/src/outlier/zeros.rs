//! Zeros of analytic functions in annuli and boxes by recursive subdivision
//! with winding numbers, followed by Newton polishing.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::contour::{winding_number, Contour, WindingOptions};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// `{r_min <= |z| <= r_max}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRegion {
    pub r_min: f64,
    pub r_max: f64,
}

impl AnnulusRegion {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self> {
        if !(1.0 < r_min && r_min < r_max && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("annulus needs 1 < r_min < r_max, got ({r_min}, {r_max})")));
        }
        Ok(Self { r_min, r_max })
    }

    pub fn contains(&self, z: C64) -> bool {
        let r = z.norm();
        self.r_min <= r && r <= self.r_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Annulus(AnnulusRegion),
    Rect { lo: C64, hi: C64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocatedZero {
    pub position: C64,
    pub multiplicity: usize,
    /// `|f(position)|`.
    pub residual: f64,
    pub newton_iterations: usize,
    /// False when Newton failed and `position` is the center of the enclosing cell.
    pub polished: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroOptions {
    /// Newton stops once `|f| < tol`.
    pub tol: f64,
    /// Cells holding one zero are split down to this diameter unless Newton
    /// converges inside them earlier.
    pub split_diameter: f64,
    /// Cells holding several zeros are split down to this diameter.
    pub cluster_diameter: f64,
    pub multiplicity_radius: f64,
    pub max_retries: usize,
    pub max_newton: usize,
    /// Diameter below which Newton is tried before splitting further.
    pub newton_diameter: f64,
    pub winding: WindingOptions,
    pub parallel: bool,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            split_diameter: 1e-2,
            cluster_diameter: 1e-4,
            multiplicity_radius: 1e-4,
            max_retries: 8,
            max_newton: 60,
            newton_diameter: 0.5,
            winding: WindingOptions::default(),
            parallel: true,
        }
    }
}

/// Zeros found in a region together with the winding number of its boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSearch {
    pub zeros: Vec<LocatedZero>,
    pub total_winding: i64,
}

/// Angular origin of annulus subdivision, away from the real axis where the
/// zeros of real problems tend to sit.
const ANGLE_OFFSET: f64 = 0.1234;
const SPLIT_RATIOS: [f64; 9] = [0.5, 0.46, 0.54, 0.42, 0.58, 0.38, 0.62, 0.35, 0.65];
/// Cells smaller than this are reported as they are.
const MIN_DIAMETER: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Cell {
    Annulus { r0: f64, r1: f64 },
    Sector { r0: f64, r1: f64, t0: f64, t1: f64 },
    Rect { lo: C64, hi: C64 },
}

impl Cell {
    fn contour(&self) -> Contour {
        match *self {
            Cell::Annulus { r0, r1 } => Contour::annulus(r0, r1),
            Cell::Sector { r0, r1, t0, t1 } => Contour::annular_sector(r0, r1, t0, t1),
            Cell::Rect { lo, hi } => Contour::rectangle(lo, hi),
        }
    }

    fn diameter(&self) -> f64 {
        match *self {
            Cell::Annulus { r1, .. } => 2.0 * r1,
            Cell::Sector { r0, r1, t0, t1 } => {
                let dt = t1 - t0;
                let chord = if dt >= PI { 2.0 * r1 } else { 2.0 * r1 * (dt / 2.0).sin() };
                ((r1 - r0).powi(2) + chord.powi(2)).sqrt()
            }
            Cell::Rect { lo, hi } => (hi - lo).norm(),
        }
    }

    fn center(&self) -> C64 {
        match *self {
            Cell::Annulus { r0, r1 } => C64::from_polar(0.5 * (r0 + r1), ANGLE_OFFSET),
            Cell::Sector { r0, r1, t0, t1 } => C64::from_polar(0.5 * (r0 + r1), 0.5 * (t0 + t1)),
            Cell::Rect { lo, hi } => 0.5 * (lo + hi),
        }
    }

    fn contains(&self, z: C64) -> bool {
        match *self {
            Cell::Annulus { r0, r1 } => (r0..=r1).contains(&z.norm()),
            Cell::Sector { r0, r1, t0, t1 } => {
                let r = z.norm();
                let t = t0 + (z.arg() - t0).rem_euclid(TAU);
                (r0..=r1).contains(&r) && t <= t1
            }
            Cell::Rect { lo, hi } => (lo.re..=hi.re).contains(&z.re) && (lo.im..=hi.im).contains(&z.im),
        }
    }

    fn split(&self, ratio: f64) -> (Cell, Cell) {
        match *self {
            Cell::Annulus { r0, r1 } => {
                let cut = ANGLE_OFFSET + ratio * TAU;
                (
                    Cell::Sector { r0, r1, t0: ANGLE_OFFSET, t1: cut },
                    Cell::Sector { r0, r1, t0: cut, t1: ANGLE_OFFSET + TAU },
                )
            }
            Cell::Sector { r0, r1, t0, t1 } => {
                if r1 * (t1 - t0) >= r1 - r0 {
                    let cut = t0 + ratio * (t1 - t0);
                    (Cell::Sector { r0, r1, t0, t1: cut }, Cell::Sector { r0, r1, t0: cut, t1 })
                } else {
                    let cut = r0 + ratio * (r1 - r0);
                    (Cell::Sector { r0, r1: cut, t0, t1 }, Cell::Sector { r0: cut, r1, t0, t1 })
                }
            }
            Cell::Rect { lo, hi } => {
                if hi.re - lo.re >= hi.im - lo.im {
                    let cut = lo.re + ratio * (hi.re - lo.re);
                    (Cell::Rect { lo, hi: C64::new(cut, hi.im) }, Cell::Rect { lo: C64::new(cut, lo.im), hi })
                } else {
                    let cut = lo.im + ratio * (hi.im - lo.im);
                    (Cell::Rect { lo, hi: C64::new(hi.re, cut) }, Cell::Rect { lo: C64::new(lo.re, cut), hi })
                }
            }
        }
    }

    /// Same region grown or shrunk slightly, used when the boundary meets a zero.
    fn nudged(&self, attempt: usize) -> Cell {
        let s = 1e-4 * 3f64.powi(attempt as i32);
        match *self {
            Cell::Annulus { r0, r1 } => Cell::Annulus { r0: r0 + s * (r1 - r0), r1: r1 * (1.0 + s) },
            Cell::Sector { .. } => *self,
            Cell::Rect { lo, hi } => {
                let d = (hi - lo) * s;
                Cell::Rect { lo: lo - d, hi: hi + d }
            }
        }
    }
}

/// Contour failures that a small change of geometry can cure.
fn is_geometric(e: &Error) -> bool {
    matches!(
        e,
        Error::ContourThroughZero { .. } | Error::RefinementExhausted { .. } | Error::ResolventSingular { .. }
    )
}

/// Zeros of `f` in `region`, with multiplicities.
pub fn locate_zeros<F>(f: &F, region: &Region, opts: &ZeroOptions) -> Result<Vec<LocatedZero>>
where
    F: Fn(C64) -> Result<C64> + Sync + ?Sized,
{
    search_zeros(f, region, opts).map(|s| s.zeros)
}

/// As [`locate_zeros`], also returning the boundary winding number. The
/// multiplicities of the returned zeros always sum to it.
pub fn search_zeros<F>(f: &F, region: &Region, opts: &ZeroOptions) -> Result<ZeroSearch>
where
    F: Fn(C64) -> Result<C64> + Sync + ?Sized,
{
    let base = match *region {
        Region::Annulus(a) => Cell::Annulus { r0: a.r_min, r1: a.r_max },
        Region::Rect { lo, hi } => {
            if !(lo.re < hi.re && lo.im < hi.im) {
                return Err(Error::InvalidParameter(format!("box corners {lo} and {hi} are not ordered")));
            }
            Cell::Rect { lo, hi }
        }
    };
    let mut attempt = 0;
    let (cell, total) = loop {
        let cell = if attempt == 0 { base } else { base.nudged(attempt) };
        match confirmed_winding(f, &cell.contour(), &opts.winding) {
            Ok(w) => break (cell, w),
            Err(e) if is_geometric(&e) && attempt < opts.max_retries => attempt += 1,
            Err(e) if is_geometric(&e) => return Err(Error::UnresolvableContour { retries: attempt }),
            Err(e) => return Err(e),
        }
    };
    if total < 0 {
        return Err(Error::Precondition(format!("boundary winding {total} is negative: the function has poles inside")));
    }
    let mut zeros = Vec::new();
    if total > 0 {
        resolve(f, cell, total, opts, &mut zeros)?;
    }
    Ok(ZeroSearch { zeros, total_winding: total })
}

/// Winding number that must agree with a recount at twice the sampling
/// density. Up to three doublings are tried before giving up.
fn confirmed_winding<F>(f: &F, contour: &Contour, opts: &WindingOptions) -> Result<i64>
where
    F: Fn(C64) -> Result<C64> + ?Sized,
{
    let mut o = *opts;
    let mut w = winding_number(f, contour, &o)?;
    for _ in 0..3 {
        o = o.doubled();
        let again = winding_number(f, contour, &o)?;
        if again == w {
            return Ok(w);
        }
        w = again;
    }
    Err(Error::RefinementExhausted { z: contour.segments[0].point(0.0) })
}

fn resolve<F>(f: &F, cell: Cell, w: i64, opts: &ZeroOptions, out: &mut Vec<LocatedZero>) -> Result<()>
where
    F: Fn(C64) -> Result<C64> + Sync + ?Sized,
{
    if w == 0 {
        return Ok(());
    }
    let diameter = cell.diameter();
    if diameter < opts.newton_diameter {
        if let Some(z) = try_accept(f, &cell, w, opts) {
            out.push(z);
            return Ok(());
        }
    }
    let stop = if w == 1 { opts.split_diameter } else { opts.cluster_diameter };
    if diameter < stop.min(opts.newton_diameter) || diameter < MIN_DIAMETER {
        out.push(finish(f, &cell, w, opts));
        return Ok(());
    }
    let (c1, c2, w1, w2) = split_checked(f, &cell, w, opts)?;
    if opts.parallel {
        let mut left = Vec::new();
        let mut right = Vec::new();
        let (a, b) = rayon::join(|| resolve(f, c1, w1, opts, &mut left), || resolve(f, c2, w2, opts, &mut right));
        a?;
        b?;
        out.append(&mut left);
        out.append(&mut right);
        Ok(())
    } else {
        resolve(f, c1, w1, opts, out)?;
        resolve(f, c2, w2, opts, out)
    }
}

/// Splits `cell`, perturbing the cut until both halves have clean windings that
/// add up to the parent's.
fn split_checked<F>(f: &F, cell: &Cell, w: i64, opts: &ZeroOptions) -> Result<(Cell, Cell, i64, i64)>
where
    F: Fn(C64) -> Result<C64> + Sync + ?Sized,
{
    let tries = (opts.max_retries + 1).min(SPLIT_RATIOS.len());
    for &ratio in &SPLIT_RATIOS[..tries] {
        let (c1, c2) = cell.split(ratio);
        let w1 = match confirmed_winding(f, &c1.contour(), &opts.winding) {
            Ok(v) => v,
            Err(e) if is_geometric(&e) => continue,
            Err(e) => return Err(e),
        };
        let w2 = match confirmed_winding(f, &c2.contour(), &opts.winding) {
            Ok(v) => v,
            Err(e) if is_geometric(&e) => continue,
            Err(e) => return Err(e),
        };
        if w1 >= 0 && w2 >= 0 && w1 + w2 == w {
            return Ok((c1, c2, w1, w2));
        }
    }
    Err(Error::UnresolvableContour { retries: tries - 1 })
}

/// Central-difference derivative.
fn derivative<F>(f: &F, z: C64) -> Result<C64>
where
    F: Fn(C64) -> Result<C64> + ?Sized,
{
    let h = 1e-6 * (1.0 + z.norm());
    Ok((f(z + h)? - f(z - h)?) / (2.0 * h))
}

struct Newton {
    z: C64,
    value: C64,
    iterations: usize,
}

/// Newton iteration with step `m f / f'`, which converges quadratically to a
/// zero of multiplicity `m`. Simple zeros stop at `|f| < tol`; multiple zeros
/// keep iterating while `|f|` still decreases, since `|f| < tol` only fixes
/// them to about `tol^{1/m}`.
fn newton<F>(f: &F, start: C64, m: i64, opts: &ZeroOptions) -> Option<Newton>
where
    F: Fn(C64) -> Result<C64> + ?Sized,
{
    let mut z = start;
    let mut value = f(z).ok()?;
    let mut best = Newton { z, value, iterations: 0 };
    let mut stalled = 0;
    for it in 0..opts.max_newton {
        if value.norm() < opts.tol && (m == 1 || stalled >= 2 || value.norm() == 0.0) {
            break;
        }
        let d = match derivative(f, z) {
            Ok(d) if d.norm() > 0.0 && d.is_finite() => d,
            _ => break,
        };
        let step = value / d * m as f64;
        z -= step;
        value = match f(z) {
            Ok(v) => v,
            Err(_) => break,
        };
        if value.norm() < best.value.norm() {
            best = Newton { z, value, iterations: it + 1 };
            stalled = 0;
        } else {
            stalled += 1;
        }
        if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
            break;
        }
    }
    (best.value.norm() < opts.tol).then_some(best)
}

/// Winding around a small circle at `z`, or `None` if it cannot be computed.
fn local_multiplicity<F>(f: &F, z: C64, opts: &ZeroOptions) -> Option<i64>
where
    F: Fn(C64) -> Result<C64> + ?Sized,
{
    winding_number(f, &Contour::circle(z, opts.multiplicity_radius), &opts.winding).ok()
}

/// Accepts the cell if Newton from its center converges inside it to a point
/// whose small circle carries all `w` zeros of the cell.
fn try_accept<F>(f: &F, cell: &Cell, w: i64, opts: &ZeroOptions) -> Option<LocatedZero>
where
    F: Fn(C64) -> Result<C64> + ?Sized,
{
    let nt = newton(f, cell.center(), w, opts)?;
    if !cell.contains(nt.z) {
        return None;
    }
    let m = if w == 1 { 1 } else { local_multiplicity(f, nt.z, opts)? };
    if m != w {
        return None;
    }
    Some(LocatedZero {
        position: nt.z,
        multiplicity: w as usize,
        residual: nt.value.norm(),
        newton_iterations: nt.iterations,
        polished: true,
    })
}

/// Final treatment of a cell that is small enough: polish if possible, else
/// report the center.
fn finish<F>(f: &F, cell: &Cell, w: i64, opts: &ZeroOptions) -> LocatedZero
where
    F: Fn(C64) -> Result<C64> + ?Sized,
{
    let center = cell.center();
    if let Some(nt) = newton(f, center, w, opts) {
        if (nt.z - center).norm() <= cell.diameter().max(opts.multiplicity_radius) {
            let m = local_multiplicity(f, nt.z, opts).filter(|&m| m == w).unwrap_or(w);
            return LocatedZero {
                position: nt.z,
                multiplicity: m as usize,
                residual: nt.value.norm(),
                newton_iterations: nt.iterations,
                polished: true,
            };
        }
    }
    LocatedZero {
        position: center,
        multiplicity: w as usize,
        residual: f(center).map(|v| v.norm()).unwrap_or(f64::INFINITY),
        newton_iterations: opts.max_newton,
        polished: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn annulus(r0: f64, r1: f64) -> Region {
        Region::Annulus(AnnulusRegion::new(r0, r1).unwrap())
    }

    #[test]
    fn single_simple_zero() {
        let f = |z: C64| Ok(1.0 - 3.0 / z);
        let zs = locate_zeros(&f, &annulus(1.2, 5.0), &ZeroOptions::default()).unwrap();
        assert_eq!(zs.len(), 1);
        assert!((zs[0].position - c(3.0, 0.0)).norm() < 1e-9);
        assert_eq!(zs[0].multiplicity, 1);
        assert!(zs[0].polished && zs[0].residual < 1e-10);
    }

    #[test]
    fn double_zero() {
        let f = |z: C64| Ok((1.0 - 3.0 / z) * (1.0 - 3.0 / z));
        let s = search_zeros(&f, &annulus(1.2, 5.0), &ZeroOptions::default()).unwrap();
        assert_eq!(s.total_winding, 2);
        assert_eq!(s.zeros.len(), 1);
        assert_eq!(s.zeros[0].multiplicity, 2);
        assert!((s.zeros[0].position - c(3.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn several_zeros_in_a_box_and_annulus() {
        let roots = [c(2.0, 1.0), c(3.0, 0.0), c(2.0, 0.0), c(-1.5, -1.5), c(0.2, 4.0)];
        let f = |z: C64| Ok(roots.iter().map(|r| 1.0 - r / z).product::<C64>());
        for parallel in [false, true] {
            let opts = ZeroOptions { parallel, ..Default::default() };
            let s = search_zeros(&f, &annulus(1.2, 6.0), &opts).unwrap();
            assert_eq!(s.total_winding, 5);
            let found: Vec<C64> = s.zeros.iter().map(|z| z.position).collect();
            assert!(crate::matching::matching_distance(&found, &roots).unwrap() < 1e-9);
        }
        let zs = locate_zeros(&f, &Region::Rect { lo: c(1.5, -0.5), hi: c(3.5, 1.5) }, &ZeroOptions::default()).unwrap();
        assert_eq!(zs.len(), 3);
    }

    #[test]
    fn zero_on_the_inner_boundary_is_handled() {
        // zero exactly on |z| = 1.2 and another one inside
        let f = |z: C64| Ok((1.0 - 1.2 / z) * (1.0 - c(0.0, 2.0) / z));
        let s = search_zeros(&f, &annulus(1.2, 4.0), &ZeroOptions::default()).unwrap();
        assert_eq!(s.total_winding, 1);
        assert!((s.zeros[0].position - c(0.0, 2.0)).norm() < 1e-9);
    }

    #[test]
    fn no_zeros() {
        let f = |_z: C64| Ok(C64::new(1.0, 0.0));
        assert!(locate_zeros(&f, &annulus(1.2, 5.0), &ZeroOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn invalid_annulus() {
        assert!(AnnulusRegion::new(0.9, 2.0).is_err());
        assert!(AnnulusRegion::new(2.0, 1.5).is_err());
    }
}
