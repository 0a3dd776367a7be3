//! Piecewise scalar controls for Loewner evolutions.
//!
//! A [`DrivingFunction`] is a complex-valued control `t -> x(t)` defined on a
//! finite horizon `[0, T]`, built from segments of four kinds: constant,
//! linear, sqrt-scaled and tabulated (linearly interpolated). The unimodular
//! circle driver `k(t)`, the real chordal driver `lambda(t)` and the
//! disk-valued `tau(t)` are all instances, interpreted by the field that owns
//! them.

use num_complex::Complex64;

use crate::{Error, Result};

const JOIN_EPS: f64 = 1e-9;

/// One piece of a piecewise control on `[t_start, t_end]`.
#[derive(Clone, Debug)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub kind: SegmentKind,
}

#[derive(Clone, Debug)]
pub enum SegmentKind {
    /// `x(t) = value`
    Constant { value: Complex64 },
    /// Linear interpolation from `start` at `t_start` to `end` at `t_end`.
    Linear { start: Complex64, end: Complex64 },
    /// `x(t) = coeff * sqrt(t)` with the global time coordinate.
    SqrtScaled { coeff: Complex64 },
    /// Linear interpolation through `(times[i], values[i])`; times strictly
    /// increasing and spanning `[t_start, t_end]`.
    Tabulated {
        times: Vec<f64>,
        values: Vec<Complex64>,
    },
}

impl Segment {
    fn value_at(&self, t: f64) -> Complex64 {
        match &self.kind {
            SegmentKind::Constant { value } => *value,
            SegmentKind::Linear { start, end } => {
                let span = self.t_end - self.t_start;
                if span <= 0.0 {
                    return *start;
                }
                let a = ((t - self.t_start) / span).clamp(0.0, 1.0);
                start * (1.0 - a) + end * a
            }
            SegmentKind::SqrtScaled { coeff } => coeff * t.max(0.0).sqrt(),
            SegmentKind::Tabulated { times, values } => {
                if t <= times[0] {
                    return values[0];
                }
                if t >= *times.last().unwrap() {
                    return *values.last().unwrap();
                }
                let idx = match times.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
                    Ok(i) => return values[i],
                    Err(i) => i,
                };
                let (t0, t1) = (times[idx - 1], times[idx]);
                let a = (t - t0) / (t1 - t0);
                values[idx - 1] * (1.0 - a) + values[idx] * a
            }
        }
    }

    fn start_value(&self) -> Complex64 {
        self.value_at(self.t_start)
    }

    fn end_value(&self) -> Complex64 {
        self.value_at(self.t_end)
    }

    fn interior_breakpoints(&self, out: &mut Vec<f64>) {
        if let SegmentKind::Tabulated { times, .. } = &self.kind {
            for &t in &times[1..times.len().saturating_sub(1)] {
                out.push(t);
            }
        }
    }

    fn split_at(&self, t: f64) -> (Segment, Segment) {
        let mk = |a: f64, b: f64, kind: SegmentKind| Segment {
            t_start: a,
            t_end: b,
            kind,
        };
        match &self.kind {
            SegmentKind::Constant { value } => (
                mk(self.t_start, t, SegmentKind::Constant { value: *value }),
                mk(t, self.t_end, SegmentKind::Constant { value: *value }),
            ),
            SegmentKind::Linear { start, end } => {
                let mid = self.value_at(t);
                (
                    mk(
                        self.t_start,
                        t,
                        SegmentKind::Linear {
                            start: *start,
                            end: mid,
                        },
                    ),
                    mk(
                        t,
                        self.t_end,
                        SegmentKind::Linear {
                            start: mid,
                            end: *end,
                        },
                    ),
                )
            }
            SegmentKind::SqrtScaled { coeff } => (
                mk(self.t_start, t, SegmentKind::SqrtScaled { coeff: *coeff }),
                mk(t, self.t_end, SegmentKind::SqrtScaled { coeff: *coeff }),
            ),
            SegmentKind::Tabulated { times, values } => {
                let mid = self.value_at(t);
                let mut lt = vec![];
                let mut lv = vec![];
                let mut rt = vec![];
                let mut rv = vec![];
                for (&ti, &vi) in times.iter().zip(values) {
                    if ti < t {
                        lt.push(ti);
                        lv.push(vi);
                    } else if ti > t {
                        rt.push(ti);
                        rv.push(vi);
                    }
                }
                lt.push(t);
                lv.push(mid);
                rt.insert(0, t);
                rv.insert(0, mid);
                (
                    mk(self.t_start, t, SegmentKind::Tabulated { times: lt, values: lv }),
                    mk(t, self.t_end, SegmentKind::Tabulated { times: rt, values: rv }),
                )
            }
        }
    }
}

/// Declared regularity class of a driver or field: the order `d ∈ [1, ∞]`
/// of the controlling L^d bound. Metadata only; membership is never inferred
/// from samples.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum RegularityOrder {
    Finite(f64),
    #[default]
    Infinite,
}

/// A piecewise control on `[0, horizon]` with explicit breakpoints.
#[derive(Clone, Debug)]
pub struct DrivingFunction {
    segments: Vec<Segment>,
    breakpoints: Vec<f64>,
    horizon: f64,
    order: RegularityOrder,
}

impl DrivingFunction {
    /// Builds from contiguous segments tiling `[0, horizon]`. When
    /// `require_continuity` is set, adjacent segment values must agree at the
    /// interior breakpoints to within 1e-9.
    pub fn piecewise(segments: Vec<Segment>, require_continuity: bool) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyDriver);
        }
        if segments[0].t_start != 0.0 {
            return Err(Error::SegmentGap {
                t: segments[0].t_start,
            });
        }
        for seg in &segments {
            if !(seg.t_end > seg.t_start) {
                return Err(Error::SegmentGap { t: seg.t_start });
            }
            if let SegmentKind::Tabulated { times, values } = &seg.kind {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::NonMonotoneSamples);
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::NonMonotoneSamples);
                }
                if (times[0] - seg.t_start).abs() > JOIN_EPS
                    || (times.last().unwrap() - seg.t_end).abs() > JOIN_EPS
                {
                    return Err(Error::SegmentGap { t: times[0] });
                }
            }
        }
        for pair in segments.windows(2) {
            if (pair[1].t_start - pair[0].t_end).abs() > 0.0 {
                return Err(Error::SegmentGap { t: pair[0].t_end });
            }
            if require_continuity {
                let jump = (pair[1].start_value() - pair[0].end_value()).norm();
                if jump > JOIN_EPS {
                    return Err(Error::DiscontinuousAtBreakpoint {
                        t: pair[0].t_end,
                        jump,
                    });
                }
            }
        }
        let horizon = segments.last().unwrap().t_end;
        let mut breakpoints = vec![0.0];
        for seg in &segments {
            seg.interior_breakpoints(&mut breakpoints);
            breakpoints.push(seg.t_end);
        }
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup();
        Ok(Self {
            segments,
            breakpoints,
            horizon,
            order: RegularityOrder::Infinite,
        })
    }

    pub fn constant(value: Complex64, horizon: f64) -> Result<Self> {
        Self::piecewise(
            vec![Segment {
                t_start: 0.0,
                t_end: horizon,
                kind: SegmentKind::Constant { value },
            }],
            false,
        )
    }

    pub fn constant_real(value: f64, horizon: f64) -> Result<Self> {
        Self::constant(Complex64::new(value, 0.0), horizon)
    }

    pub fn linear(start: Complex64, end: Complex64, horizon: f64) -> Result<Self> {
        Self::piecewise(
            vec![Segment {
                t_start: 0.0,
                t_end: horizon,
                kind: SegmentKind::Linear { start, end },
            }],
            false,
        )
    }

    pub fn sqrt_scaled(coeff: Complex64, horizon: f64) -> Result<Self> {
        Self::piecewise(
            vec![Segment {
                t_start: 0.0,
                t_end: horizon,
                kind: SegmentKind::SqrtScaled { coeff },
            }],
            false,
        )
    }

    pub fn tabulated(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::NonMonotoneSamples);
        }
        let (t0, t1) = (times[0], *times.last().unwrap());
        if t0 != 0.0 {
            return Err(Error::SegmentGap { t: t0 });
        }
        Self::piecewise(
            vec![Segment {
                t_start: t0,
                t_end: t1,
                kind: SegmentKind::Tabulated { times, values },
            }],
            false,
        )
    }

    pub fn with_order(mut self, order: RegularityOrder) -> Self {
        self.order = order;
        self
    }

    pub fn order(&self) -> RegularityOrder {
        self.order
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Sorted breakpoints, including 0, the horizon, segment joins and
    /// tabulated sample times.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn eval(&self, t: f64) -> Result<Complex64> {
        if !(0.0..=self.horizon * (1.0 + 1e-14) + 1e-300).contains(&t) {
            return Err(Error::OutsideHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.eval_clamped(t))
    }

    /// Evaluation with the time clamped into the horizon. Integrator stages
    /// may poke just past a subinterval end by rounding; the clamp keeps that
    /// well defined without widening the public contract.
    pub(crate) fn eval_clamped(&self, t: f64) -> Complex64 {
        let t = t.clamp(0.0, self.horizon);
        let idx = self
            .segments
            .partition_point(|s| s.t_end < t)
            .min(self.segments.len() - 1);
        self.segments[idx].value_at(t)
    }

    /// The time-reversed control `t -> x(T - t)` on `[0, T]`, `T <= horizon`.
    /// Constant, linear and tabulated segments reverse exactly; sqrt-scaled
    /// segments are densely tabulated (the reversed graph is not expressible
    /// in the four segment kinds).
    pub fn reversed(&self, big_t: f64) -> Result<Self> {
        if big_t > self.horizon * (1.0 + 1e-14) {
            return Err(Error::HorizonTooShort {
                needed: big_t,
                horizon: self.horizon,
            });
        }
        let mut pieces: Vec<Segment> = Vec::new();
        for seg in self.segments.iter().rev() {
            let a = seg.t_start.max(0.0);
            let b = seg.t_end.min(big_t);
            if !(b > a) {
                continue;
            }
            let (ra, rb) = (big_t - b, big_t - a);
            let kind = match &seg.kind {
                SegmentKind::Constant { value } => SegmentKind::Constant { value: *value },
                SegmentKind::Linear { .. } => SegmentKind::Linear {
                    start: seg.value_at(b),
                    end: seg.value_at(a),
                },
                SegmentKind::SqrtScaled { .. } => {
                    let n = 64;
                    let times: Vec<f64> =
                        (0..=n).map(|i| ra + (rb - ra) * i as f64 / n as f64).collect();
                    let values: Vec<Complex64> =
                        times.iter().map(|&u| seg.value_at(big_t - u)).collect();
                    SegmentKind::Tabulated { times, values }
                }
                SegmentKind::Tabulated { times, values } => {
                    let mut ts: Vec<f64> = Vec::new();
                    let mut vs: Vec<Complex64> = Vec::new();
                    for (&ti, &vi) in times.iter().zip(values).rev() {
                        if ti >= a - JOIN_EPS && ti <= b + JOIN_EPS {
                            ts.push(big_t - ti);
                            vs.push(vi);
                        }
                    }
                    SegmentKind::Tabulated { times: ts, values: vs }
                }
            };
            pieces.push(Segment {
                t_start: ra,
                t_end: rb,
                kind,
            });
        }
        let order = self.order;
        Ok(Self::piecewise(pieces, false)?.with_order(order))
    }

    /// Splits segments at the given times without changing the values; used
    /// to confirm that integration endpoints do not depend on how the tiling
    /// is cut.
    pub fn with_extra_breakpoints(&self, cuts: &[f64]) -> Result<Self> {
        let mut segments = self.segments.clone();
        for &t in cuts {
            if !(t > 0.0 && t < self.horizon) {
                continue;
            }
            let idx = segments
                .iter()
                .position(|s| s.t_start < t && t < s.t_end);
            if let Some(i) = idx {
                let (l, r) = segments[i].split_at(t);
                segments.splice(i..=i, [l, r]);
            }
        }
        let order = self.order;
        Ok(Self::piecewise(segments, false)?.with_order(order))
    }
}
