//! Boundary-to-boundary excursions of a limit path.
//!
//! A segment runs between two consecutive boundary contacts. It becomes an
//! [`Excursion`] when its height, measured from the boundary it left, exceeds
//! the floor. Segments before the first contact and after the last one are
//! incomplete and never reported.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::limit::{Boundary, LimitTrajectory};
use crate::math::sqrt;
use crate::{Error, Result};

pub const DEFAULT_FLOOR: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcursionKind {
    /// Returns to the boundary it left.
    Spike,
    /// Reaches the opposite boundary.
    Jump,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excursion {
    pub t_start: f64,
    pub t_apex: f64,
    pub t_end: f64,
    /// Largest distance from `origin`.
    pub max_height: f64,
    pub ascent_time: f64,
    pub descent_time: f64,
    pub origin: Boundary,
    pub kind: ExcursionKind,
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    t_a: f64,
    h_a: f64,
    t_b: f64,
    h_b: f64,
}

/// Streaming excursion detector. Feed it one grid point at a time with
/// [`ExcursionTracker::push`].
///
/// With [`ExcursionTracker::with_apex_refinement`] the apex height is drawn
/// from the Brownian-bridge maximum on every grid interval that could hold
/// it, which removes the `O(√dt)` downward bias of the grid maximum. Event
/// times then refer to the midpoint of the grid step in which the contact or
/// the apex happened, instead of its right end.
#[derive(Debug, Clone)]
pub struct ExcursionTracker {
    dt: f64,
    floor: f64,
    jump_tol: f64,
    window: f64,
    origin: Option<(Boundary, f64)>,
    grid_max: f64,
    t_apex: f64,
    prev: Option<(f64, f64)>,
    candidates: Vec<Interval>,
    rng: Option<ChaCha8Rng>,
}

impl ExcursionTracker {
    pub fn new(dt: f64, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor < 0.5) {
            return Err(Error::OutOfRange {
                field: "floor",
                reason: "must lie in (0, 0.5)",
            });
        }
        if !(dt > 0.0) {
            return Err(Error::OutOfRange {
                field: "dt",
                reason: "must be > 0",
            });
        }
        Ok(ExcursionTracker {
            dt,
            floor,
            jump_tol: 2.0 * sqrt(dt),
            window: 4.0 * sqrt(dt),
            origin: None,
            grid_max: 0.0,
            t_apex: 0.0,
            prev: None,
            candidates: Vec::new(),
            rng: None,
        })
    }

    pub fn with_apex_refinement(mut self, rng: ChaCha8Rng) -> Self {
        self.rng = Some(rng);
        self
    }

    fn event_time(&self, t: f64) -> f64 {
        match (self.rng.is_some(), self.prev) {
            (true, Some((t_prev, _))) => 0.5 * (t_prev + t),
            _ => t,
        }
    }

    fn start(&mut self, boundary: Boundary, t: f64) {
        self.origin = Some((boundary, t));
        self.grid_max = 0.0;
        self.t_apex = t;
        self.candidates.clear();
    }

    fn track(&mut self, origin: Boundary, t: f64, q: f64) {
        let h = origin.distance(q).clamp(0.0, 1.0);
        if h > self.grid_max {
            self.grid_max = h;
            self.t_apex = t;
            if self.rng.is_some() {
                let cut = h - self.window;
                self.candidates.retain(|iv| iv.h_a.max(iv.h_b) >= cut);
            }
        }
        if self.rng.is_some() {
            if let Some((t_prev, q_prev)) = self.prev {
                let h_prev = origin.distance(q_prev).clamp(0.0, 1.0);
                if h.max(h_prev) >= self.grid_max - self.window {
                    self.candidates.push(Interval {
                        t_a: t_prev,
                        h_a: h_prev,
                        t_b: t,
                        h_b: h,
                    });
                }
            }
        }
    }

    fn refined_apex(&mut self) -> (f64, f64) {
        let Some(rng) = self.rng.as_mut() else {
            return (self.grid_max, self.t_apex);
        };
        let (mut best, mut t_best) = (self.grid_max, self.t_apex);
        for iv in &self.candidates {
            let e: f64 = rng.sample(Exp1);
            let d = iv.h_a - iv.h_b;
            let top = (0.5 * (iv.h_a + iv.h_b + sqrt(d * d + 2.0 * e * self.dt))).min(1.0);
            if top > best {
                best = top;
                t_best = 0.5 * (iv.t_a + iv.t_b);
            }
        }
        (best, t_best)
    }

    /// Adds the grid point `(t, q)`. `contact` is the boundary touched on the
    /// step ending at this point, if any. Returns the excursion this contact
    /// closes when its height exceeds the floor.
    pub fn push(&mut self, t: f64, q: f64, contact: Option<Boundary>) -> Option<Excursion> {
        let mut out = None;
        if let Some((origin, t_start)) = self.origin {
            self.track(origin, t, q);
            if let Some(end) = contact {
                let (max_height, t_apex) = self.refined_apex();
                if max_height > self.floor {
                    let kind = if end != origin || 1.0 - max_height <= self.jump_tol {
                        ExcursionKind::Jump
                    } else {
                        ExcursionKind::Spike
                    };
                    let t_end = self.event_time(t);
                    out = Some(Excursion {
                        t_start,
                        t_apex,
                        t_end,
                        max_height,
                        ascent_time: t_apex - t_start,
                        descent_time: t_end - t_apex,
                        origin,
                        kind,
                    });
                }
            }
        }
        if let Some(b) = contact {
            self.start(b, self.event_time(t));
        }
        self.prev = Some((t, q));
        out
    }
}

/// Boundary touched on step `k − 1 → k` of a limit path: a pushing-term
/// increment or a grid value on the boundary.
pub fn contact_at(path: &LimitTrajectory, k: usize) -> Option<Boundary> {
    let q = path.q[k];
    let lower = q <= 0.0 || path.contact(k, Boundary::Lower);
    let upper = q >= 1.0 || path.contact(k, Boundary::Upper);
    match (lower, upper) {
        (true, true) => Some(if q < 0.5 { Boundary::Lower } else { Boundary::Upper }),
        (true, false) => Some(Boundary::Lower),
        (false, true) => Some(Boundary::Upper),
        (false, false) => None,
    }
}

/// All complete excursions of `path` higher than `floor`, in time order.
pub fn detect_excursions(path: &LimitTrajectory, floor: f64) -> Result<Vec<Excursion>> {
    let mut tracker = ExcursionTracker::new(path.dt, floor)?;
    let mut out = Vec::new();
    for k in 0..path.len() {
        if let Some(e) = tracker.push(path.t_grid[k], path.q[k], contact_at(path, k)) {
            out.push(e);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::LimitOptions;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn synthetic(q: Vec<f64>, dt: f64) -> LimitTrajectory {
        let n = q.len();
        LimitTrajectory {
            dt,
            lambda: 1.0,
            p: 0.5,
            options: LimitOptions::default(),
            t_grid: (0..n).map(|k| k as f64 * dt).collect(),
            q,
            big_l: vec![0.0; n],
            big_u: vec![0.0; n],
            b: vec![0.0; n],
            s_of_t: vec![0.0; n],
        }
    }

    #[test]
    fn zero_path_has_no_excursions() {
        let path = synthetic(vec![0.0; 50], 1e-3);
        assert!(detect_excursions(&path, DEFAULT_FLOOR).unwrap().is_empty());
    }

    #[test]
    fn tent_is_one_symmetric_spike() {
        let q = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.3, 0.2, 0.1, 0.0, 0.0];
        let path = synthetic(q, 0.01);
        let ex = detect_excursions(&path, DEFAULT_FLOOR).unwrap();
        assert_eq!(ex.len(), 1);
        let e = ex[0];
        assert_eq!(e.kind, ExcursionKind::Spike);
        assert_eq!(e.origin, Boundary::Lower);
        assert_abs_diff_eq!(e.max_height, 0.4);
        assert_abs_diff_eq!(e.t_apex, 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(e.ascent_time, e.descent_time, epsilon = 1e-15);
        assert_abs_diff_eq!(e.ascent_time, 0.04, epsilon = 1e-15);
    }

    #[test]
    fn crossing_is_a_jump_and_floor_filters() {
        let q = vec![0.0, 0.01, 0.0, 0.5, 1.0, 0.7, 1.0];
        let path = synthetic(q, 1e-4);
        let ex = detect_excursions(&path, DEFAULT_FLOOR).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].kind, ExcursionKind::Jump);
        assert_eq!(ex[0].origin, Boundary::Lower);
        assert_eq!(ex[1].kind, ExcursionKind::Spike);
        assert_eq!(ex[1].origin, Boundary::Upper);
        assert_abs_diff_eq!(ex[1].max_height, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn near_miss_of_the_other_side_counts_as_jump() {
        let dt = 1e-4;
        let q = vec![0.0, 0.5, 1.0 - 1.5 * f64::sqrt(dt), 0.5, 0.0];
        let ex = detect_excursions(&synthetic(q, dt), DEFAULT_FLOOR).unwrap();
        assert_eq!(ex[0].kind, ExcursionKind::Jump);
    }

    #[test]
    fn incomplete_segments_are_skipped() {
        let q = vec![0.5, 0.6, 0.0, 0.3, 0.4];
        assert!(detect_excursions(&synthetic(q, 0.1), DEFAULT_FLOOR).unwrap().is_empty());
    }

    #[test]
    fn floor_range_is_checked() {
        let path = synthetic(vec![0.0], 0.1);
        assert!(detect_excursions(&path, 0.0).is_err());
        assert!(detect_excursions(&path, 0.5).is_err());
    }

    #[test]
    fn refinement_only_raises_the_apex() {
        use rand::SeedableRng;
        let q = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.3, 0.2, 0.1, 0.0];
        let dt = 1e-3;
        let mut tracker = ExcursionTracker::new(dt, DEFAULT_FLOOR)
            .unwrap()
            .with_apex_refinement(ChaCha8Rng::seed_from_u64(1));
        let mut out = vec![];
        for (k, &qk) in q.iter().enumerate() {
            let contact = if qk == 0.0 { Some(Boundary::Lower) } else { None };
            out.extend(tracker.push(k as f64 * dt, qk, contact));
        }
        assert_eq!(out.len(), 1);
        assert!(out[0].max_height >= 0.4 && out[0].max_height < 0.4 + 4.0 * dt.sqrt() + 0.1);
    }
}
