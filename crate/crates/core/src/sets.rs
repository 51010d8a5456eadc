//! Singularity sets Σ and their finite-resolution decision procedures.
//!
//! Nowhere density is enforced by construction: primitives are points or
//! closed thin boxes, and every constructed set must pass the
//! dense-complement check at the configured resolution. That check, the
//! limsup representation machinery of the special ideals, and the
//! measure bookkeeping all live here.

use crate::geom::{BoxN, DomainBox};
use crate::poset::{IndexPoset, PosetElem};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::sync::Arc;

/// Building block of a singularity set: closed and (for the sets the
/// theorems need) thin, so finite unions stay nowhere dense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SingPrimitive {
    Point(Vec<f64>),
    Slab(BoxN),
}

impl SingPrimitive {
    pub fn dim(&self) -> usize {
        match self {
            SingPrimitive::Point(p) => p.len(),
            SingPrimitive::Slab(b) => b.dim(),
        }
    }

    pub fn linf_dist(&self, x: &[f64]) -> f64 {
        match self {
            SingPrimitive::Point(p) => p
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
            SingPrimitive::Slab(b) => b.linf_dist(x),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.linf_dist(x) == 0.0
    }

    pub fn volume(&self) -> f64 {
        match self {
            SingPrimitive::Point(_) => 0.0,
            SingPrimitive::Slab(b) => b.volume(),
        }
    }

    /// Whether this primitive is contained in `other`.
    pub fn within(&self, other: &SingPrimitive) -> bool {
        match (self, other) {
            (SingPrimitive::Point(p), _) => other.contains(p),
            (SingPrimitive::Slab(a), SingPrimitive::Slab(b)) => b.contains_box(a),
            (SingPrimitive::Slab(a), SingPrimitive::Point(p)) => {
                a.volume() == 0.0 && a.lo == *p && a.hi == *p
            }
        }
    }

    pub fn as_box(&self) -> BoxN {
        match self {
            SingPrimitive::Point(p) => BoxN::new(p.clone(), p.clone()),
            SingPrimitive::Slab(b) => b.clone(),
        }
    }

    /// Hyperplane slice {x_axis = value} of the ambient box.
    pub fn slice(ambient: &DomainBox, axis: usize, value: f64) -> SingPrimitive {
        let mut lo = Vec::with_capacity(ambient.dim());
        let mut hi = Vec::with_capacity(ambient.dim());
        for i in 0..ambient.dim() {
            let (a, b) = ambient.axis(i);
            if i == axis {
                lo.push(value);
                hi.push(value);
            } else {
                lo.push(a);
                hi.push(b);
            }
        }
        SingPrimitive::Slab(BoxN::new(lo, hi))
    }
}

/// Class tag in the family lattice S_nd ⊂ S_BaireI ⊂ S_D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetClass {
    NowhereDense,
    BaireFirst,
    DenseComplement,
}

impl SetClass {
    pub fn join(self, other: SetClass) -> SetClass {
        self.max(other)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SetClass::NowhereDense => "nd",
            SetClass::BaireFirst => "baire1",
            SetClass::DenseComplement => "dense-complement",
        }
    }
}

/// Restartable, side-effect-free primitive enumeration; `None` marks the
/// end of a finite stream.
#[derive(Clone)]
pub struct Enumeration {
    pub label: String,
    gen: Arc<dyn Fn(u64) -> Option<SingPrimitive> + Send + Sync>,
}

impl std::fmt::Debug for Enumeration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Enumeration({})", self.label)
    }
}

impl Enumeration {
    pub fn new(
        label: impl Into<String>,
        gen: impl Fn(u64) -> Option<SingPrimitive> + Send + Sync + 'static,
    ) -> Self {
        Enumeration { label: label.into(), gen: Arc::new(gen) }
    }

    pub fn get(&self, k: u64) -> Option<SingPrimitive> {
        (self.gen)(k)
    }
}

#[derive(Debug, Clone)]
pub enum PrimitiveSource {
    Finite(Vec<SingPrimitive>),
    Enumerated(Enumeration),
}

/// A singularity set Σ with its class tag and primitive source.
#[derive(Debug, Clone)]
pub struct SingularitySet {
    pub class: SetClass,
    pub ambient: DomainBox,
    pub source: PrimitiveSource,
    pub measure_budget: Option<f64>,
    pub label: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SetsError {
    #[error("resolution {h} must be positive and smaller than every axis length {min}")]
    BadResolution { h: f64, min: f64 },
    #[error("complement not dense at resolution {h}: cell {cell:?} has no point outside the set")]
    ComplementNotDense { h: f64, cell: BoxN },
    #[error("dense-complement check inconclusive at resolution {h} (cell {cell:?})")]
    DenseCheckInconclusive { h: f64, cell: BoxN },
    #[error("primitive {0:?} leaves the ambient box")]
    PrimitiveOutsideAmbient(Box<SingPrimitive>),
    #[error("ambient boxes differ")]
    AmbientMismatch,
    #[error("set is not point-enumerable (primitive {0} is a slab)")]
    NotPointEnumerable(u64),
    #[error("class can only move up the lattice, not {from:?} -> {to:?}")]
    ClassDowngrade { from: SetClass, to: SetClass },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl SingularitySet {
    pub fn empty(ambient: &DomainBox) -> Self {
        SingularitySet {
            class: SetClass::NowhereDense,
            ambient: ambient.clone(),
            source: PrimitiveSource::Finite(Vec::new()),
            measure_budget: None,
            label: "empty".into(),
        }
    }

    /// Finite union of primitives, gated by the dense-complement check.
    pub fn nowhere_dense(
        ambient: &DomainBox,
        primitives: Vec<SingPrimitive>,
        gate: &DenseCheckCfg,
    ) -> Result<Self, SetsError> {
        for p in &primitives {
            if !ambient.as_box().contains_box(&p.as_box()) {
                return Err(SetsError::PrimitiveOutsideAmbient(Box::new(p.clone())));
            }
        }
        let set = SingularitySet {
            class: SetClass::NowhereDense,
            ambient: ambient.clone(),
            source: PrimitiveSource::Finite(primitives),
            measure_budget: None,
            label: "nd".into(),
        };
        set.require_dense_complement(gate)?;
        Ok(set)
    }

    /// Countable union via an enumeration procedure, gated like above.
    pub fn enumerated(
        class: SetClass,
        ambient: &DomainBox,
        enumeration: Enumeration,
        gate: &DenseCheckCfg,
    ) -> Result<Self, SetsError> {
        let label = enumeration.label.clone();
        let set = SingularitySet {
            class,
            ambient: ambient.clone(),
            source: PrimitiveSource::Enumerated(enumeration),
            measure_budget: None,
            label,
        };
        set.require_dense_complement(gate)?;
        Ok(set)
    }

    fn require_dense_complement(&self, gate: &DenseCheckCfg) -> Result<(), SetsError> {
        match is_complement_dense_at(self, gate)? {
            DenseReport { verdict: Verdict3::True, .. } => Ok(()),
            DenseReport { verdict: Verdict3::False, witness_cell: Some(cell), .. } => {
                Err(SetsError::ComplementNotDense { h: gate.resolution, cell })
            }
            DenseReport { witness_cell, .. } => Err(SetsError::DenseCheckInconclusive {
                h: gate.resolution,
                cell: witness_cell.unwrap_or_else(|| self.ambient.as_box().clone()),
            }),
        }
    }

    /// Primitives visible within the enumeration budget.
    pub fn primitives(&self, budget: u64) -> Vec<SingPrimitive> {
        match &self.source {
            PrimitiveSource::Finite(v) => v.clone(),
            PrimitiveSource::Enumerated(e) => (0..budget).filter_map(|k| e.get(k)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.source, PrimitiveSource::Finite(_))
    }

    pub fn min_dist(&self, x: &[f64], budget: u64) -> f64 {
        self.primitives(budget)
            .iter()
            .map(|p| p.linf_dist(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Verifiably outside all primitives enumerated within the budget.
    pub fn definitely_outside(&self, x: &[f64], budget: u64) -> bool {
        self.min_dist(x, budget) > 0.0
    }

    pub fn contains_enumerated(&self, x: &[f64], budget: u64) -> bool {
        self.primitives(budget).iter().any(|p| p.contains(x))
    }

    /// Move the class tag up the lattice (S_nd ⊂ S_BaireI ⊂ S_D).
    pub fn retag_class(&self, to: SetClass) -> Result<SingularitySet, SetsError> {
        if to < self.class {
            return Err(SetsError::ClassDowngrade { from: self.class, to });
        }
        let mut out = self.clone();
        out.class = to;
        Ok(out)
    }

    /// Inclusion on enumerated primitives: every primitive of `self`
    /// sits inside some primitive of `other`.
    pub fn included_in(&self, other: &SingularitySet, budget: u64) -> bool {
        let mine = self.primitives(budget);
        let theirs = other.primitives(budget);
        mine.iter().all(|p| theirs.iter().any(|q| p.within(q)))
    }

    // -----------------------------------------------------------------
    // serialization (line-oriented text form)

    pub fn to_text(&self, budget: u64) -> String {
        let mut out = String::new();
        write!(out, "{}", self.class.tag()).unwrap();
        for i in 0..self.ambient.dim() {
            let (lo, hi) = self.ambient.axis(i);
            write!(out, " {lo:?} {hi:?}").unwrap();
        }
        out.push('\n');
        for p in self.primitives(budget) {
            match p {
                SingPrimitive::Point(v) => {
                    out.push_str("point");
                    for c in v {
                        write!(out, " {c:?}").unwrap();
                    }
                }
                SingPrimitive::Slab(b) => {
                    out.push_str("box");
                    for i in 0..b.dim() {
                        write!(out, " {:?} {:?}", b.lo[i], b.hi[i]).unwrap();
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<SingularitySet, SetsError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or(SetsError::Parse { line: 0, msg: "empty singularity-set file".into() })?;
        let mut parts = header.split_whitespace();
        let class = match parts.next() {
            Some("nd") => SetClass::NowhereDense,
            Some("baire1") => SetClass::BaireFirst,
            Some("dense-complement") => SetClass::DenseComplement,
            other => {
                return Err(SetsError::Parse {
                    line: hline,
                    msg: format!("unknown class tag {other:?}"),
                })
            }
        };
        let bounds: Vec<f64> = parts
            .map(|w| {
                w.parse::<f64>().map_err(|_| SetsError::Parse {
                    line: hline,
                    msg: format!("bad ambient bound `{w}`"),
                })
            })
            .collect::<Result<_, _>>()?;
        if bounds.is_empty() || bounds.len() % 2 != 0 {
            return Err(SetsError::Parse {
                line: hline,
                msg: "header needs an even, nonzero number of ambient bounds".into(),
            });
        }
        let intervals: Vec<(f64, f64)> = bounds.chunks(2).map(|c| (c[0], c[1])).collect();
        let ambient = DomainBox::new(&intervals)
            .map_err(|e| SetsError::Parse { line: hline, msg: e.to_string() })?;
        let dim = ambient.dim();

        let mut primitives = Vec::new();
        let mut enumeration: Option<Enumeration> = None;
        for (lno, line) in lines {
            let mut parts = line.split_whitespace();
            let kind = parts.next().unwrap();
            let rest: Vec<&str> = parts.collect();
            let nums = |want: usize| -> Result<Vec<f64>, SetsError> {
                if rest.len() != want {
                    return Err(SetsError::Parse {
                        line: lno,
                        msg: format!("expected {want} numbers, got {}", rest.len()),
                    });
                }
                rest.iter()
                    .map(|w| {
                        w.parse::<f64>().map_err(|_| SetsError::Parse {
                            line: lno,
                            msg: format!("bad number `{w}`"),
                        })
                    })
                    .collect()
            };
            match kind {
                "point" => primitives.push(SingPrimitive::Point(nums(dim)?)),
                "box" => {
                    let v = nums(2 * dim)?;
                    let lo: Vec<f64> = v.iter().step_by(2).copied().collect();
                    let hi: Vec<f64> = v.iter().skip(1).step_by(2).copied().collect();
                    primitives.push(SingPrimitive::Slab(BoxN::new(lo, hi)));
                }
                "enumerate" => {
                    let (axis_lo, axis_hi) = ambient.axis(0);
                    enumeration = Some(match rest.as_slice() {
                        ["dyadics"] => dyadic_points(axis_lo, axis_hi),
                        ["triadics"] => triadic_points(axis_lo, axis_hi),
                        ["rationals-max-den", d] => {
                            let maxden: u64 = d.parse().map_err(|_| SetsError::Parse {
                                line: lno,
                                msg: format!("bad denominator bound `{d}`"),
                            })?;
                            rationals_max_den(axis_lo, axis_hi, maxden)
                        }
                        other => {
                            return Err(SetsError::Parse {
                                line: lno,
                                msg: format!("unknown enumeration {other:?}"),
                            })
                        }
                    });
                }
                other => {
                    return Err(SetsError::Parse {
                        line: lno,
                        msg: format!("unknown primitive kind `{other}`"),
                    })
                }
            }
        }
        let label = enumeration.as_ref().map(|e| e.label.clone()).unwrap_or_else(|| "file".into());
        let source = match enumeration {
            Some(e) if primitives.is_empty() => PrimitiveSource::Enumerated(e),
            Some(e) => {
                let fixed = primitives;
                let lbl = format!("{}+file", e.label);
                PrimitiveSource::Enumerated(Enumeration::new(lbl, move |k| {
                    let nf = fixed.len() as u64;
                    if k < nf {
                        Some(fixed[k as usize].clone())
                    } else {
                        e.get(k - nf)
                    }
                }))
            }
            None => PrimitiveSource::Finite(primitives),
        };
        Ok(SingularitySet { class, ambient, source, measure_budget: None, label })
    }
}

/// Class-join union of two singularity sets; the result is revalidated
/// for a dense complement, mirroring that unions of dense-complement
/// sets need not keep the property.
pub fn union(
    a: &SingularitySet,
    b: &SingularitySet,
    gate: &DenseCheckCfg,
) -> Result<SingularitySet, SetsError> {
    if a.ambient != b.ambient {
        return Err(SetsError::AmbientMismatch);
    }
    let source = match (&a.source, &b.source) {
        (PrimitiveSource::Finite(x), PrimitiveSource::Finite(y)) => {
            let mut v = x.clone();
            v.extend(y.iter().cloned());
            PrimitiveSource::Finite(v)
        }
        _ => {
            // interleave the two streams; exhausted slots pass through
            let (ea, eb) = (as_enumeration(a), as_enumeration(b));
            let label = format!("{}|{}", ea.label, eb.label);
            PrimitiveSource::Enumerated(Enumeration::new(label, move |k| {
                if k % 2 == 0 {
                    ea.get(k / 2).or_else(|| eb.get(k / 2))
                } else {
                    eb.get(k / 2).or_else(|| ea.get(k / 2 + 1))
                }
            }))
        }
    };
    let out = SingularitySet {
        class: a.class.join(b.class),
        ambient: a.ambient.clone(),
        source,
        measure_budget: match (a.measure_budget, b.measure_budget) {
            (Some(x), Some(y)) => Some(x + y),
            _ => None,
        },
        label: format!("{}|{}", a.label, b.label),
    };
    out.require_dense_complement(gate)?;
    Ok(out)
}

fn as_enumeration(s: &SingularitySet) -> Enumeration {
    match &s.source {
        PrimitiveSource::Enumerated(e) => e.clone(),
        PrimitiveSource::Finite(v) => {
            let v = v.clone();
            Enumeration::new(s.label.clone(), move |k| v.get(k as usize).cloned())
        }
    }
}

// ---------------------------------------------------------------------
// built-in enumerations

/// Dyadic points q/2^j in the open interval, enumerated level by level.
pub fn dyadic_points(lo: f64, hi: f64) -> Enumeration {
    scaled_base_points(lo, hi, 2, "dyadics")
}

/// Triadic points q/3^j in the open interval.
pub fn triadic_points(lo: f64, hi: f64) -> Enumeration {
    scaled_base_points(lo, hi, 3, "triadics")
}

fn scaled_base_points(lo: f64, hi: f64, base: u64, label: &str) -> Enumeration {
    Enumeration::new(label, move |k| {
        // level j holds the fractions i/base^j with i not divisible by base
        let mut remaining = k;
        let mut level_size = base - 1;
        let mut denom = base;
        loop {
            if remaining < level_size {
                // the (remaining+1)-th numerator at this level that is
                // not divisible by `base`
                let mut count = 0;
                for i in 1..denom {
                    if i % base != 0 {
                        if count == remaining {
                            let frac = i as f64 / denom as f64;
                            return Some(SingPrimitive::Point(vec![lo + (hi - lo) * frac]));
                        }
                        count += 1;
                    }
                }
                unreachable!("level size bookkeeping");
            }
            remaining -= level_size;
            denom = denom.checked_mul(base)?;
            level_size = level_size * base;
        }
    })
}

/// The finitely many reduced fractions p/q with q ≤ maxden, scaled into
/// the open interval and enumerated denominator-major (coarse first).
pub fn rationals_max_den(lo: f64, hi: f64, maxden: u64) -> Enumeration {
    let mut points = Vec::new();
    for q in 2..=maxden {
        for p in 1..q {
            if gcd(p, q) == 1 {
                points.push(p as f64 / q as f64);
            }
        }
    }
    Enumeration::new(format!("rationals-max-den-{maxden}"), move |k| {
        points
            .get(k as usize)
            .map(|f| SingPrimitive::Point(vec![lo + (hi - lo) * f]))
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The full grid of the given spacing (used to construct density
/// counterexamples in tests).
pub fn grid_points(ambient: &DomainBox, spacing: f64) -> Vec<SingPrimitive> {
    let (lo, hi) = ambient.axis(0);
    let mut out = Vec::new();
    let mut k = 1u64;
    loop {
        let x = lo + spacing * k as f64;
        if x >= hi {
            break;
        }
        out.push(SingPrimitive::Point(vec![x]));
        k += 1;
    }
    out
}

// ---------------------------------------------------------------------
// dense-complement check

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict3 {
    True,
    False,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct DenseCheckCfg {
    /// Grid resolution h.
    pub resolution: f64,
    pub samples_per_cell: u32,
    pub seed: u64,
    pub enum_budget: u64,
    pub sampler: Sampler,
}

#[derive(Debug, Clone)]
pub enum Sampler {
    /// Cell center first, then seeded jitter inside the cell.
    PseudoRandom,
    /// Nodes of a global grid of the given spacing (test hook).
    GridNodes { spacing: f64 },
}

impl DenseCheckCfg {
    pub fn at_resolution(h: f64) -> Self {
        DenseCheckCfg {
            resolution: h,
            samples_per_cell: 4,
            seed: 0x5eed,
            enum_budget: 512,
            sampler: Sampler::PseudoRandom,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseReport {
    pub verdict: Verdict3,
    /// A witness point outside Σ for every grid cell (when true).
    pub witnesses: Vec<(BoxN, Vec<f64>)>,
    /// The offending cell on false/inconclusive verdicts.
    pub witness_cell: Option<BoxN>,
    pub cells: usize,
}

const OUTSIDE_MARGIN: f64 = 1e-12;

/// True iff every h-cell of the ambient grid contains a sampled point
/// verifiably outside Σ (outside all primitives enumerated within the
/// budget). Three-valued: a sample within rounding distance of Σ is
/// neither inside nor verifiably outside.
pub fn is_complement_dense_at(
    sigma: &SingularitySet,
    cfg: &DenseCheckCfg,
) -> Result<DenseReport, SetsError> {
    let h = cfg.resolution;
    let min_width = sigma.ambient.min_width();
    if !(h > 0.0) || h >= min_width {
        return Err(SetsError::BadResolution { h, min: min_width });
    }
    let prims = sigma.primitives(cfg.enum_budget);
    let dim = sigma.ambient.dim();
    let counts: Vec<usize> = (0..dim)
        .map(|i| {
            let (lo, hi) = sigma.ambient.axis(i);
            ((hi - lo) / h).ceil() as usize
        })
        .collect();
    let total: usize = counts.iter().product();
    let mut witnesses = Vec::with_capacity(total);
    let mut inconclusive_cell = None;

    for flat in 0..total {
        // unflatten row-major
        let mut rem = flat;
        let mut cell_lo = Vec::with_capacity(dim);
        let mut cell_hi = Vec::with_capacity(dim);
        for i in 0..dim {
            let stride: usize = counts[i + 1..].iter().product();
            let ci = rem / stride;
            rem %= stride;
            let (lo, hi) = sigma.ambient.axis(i);
            cell_lo.push(lo + ci as f64 * h);
            cell_hi.push((lo + (ci + 1) as f64 * h).min(hi));
        }
        let cell = BoxN::new(cell_lo, cell_hi);
        let mut found = None;
        let mut ambiguous = false;
        for point in cell_samples(&cell, cfg, flat as u64) {
            let d = prims
                .iter()
                .map(|p| p.linf_dist(&point))
                .fold(f64::INFINITY, f64::min);
            if d > OUTSIDE_MARGIN {
                found = Some(point);
                break;
            }
            if d > 0.0 {
                ambiguous = true;
            }
        }
        match found {
            Some(p) => witnesses.push((cell, p)),
            None if ambiguous => {
                if inconclusive_cell.is_none() {
                    inconclusive_cell = Some(cell);
                }
            }
            None => {
                return Ok(DenseReport {
                    verdict: Verdict3::False,
                    witnesses,
                    witness_cell: Some(cell),
                    cells: total,
                })
            }
        }
    }
    if let Some(cell) = inconclusive_cell {
        return Ok(DenseReport {
            verdict: Verdict3::Inconclusive,
            witnesses,
            witness_cell: Some(cell),
            cells: total,
        });
    }
    Ok(DenseReport { verdict: Verdict3::True, witnesses, witness_cell: None, cells: total })
}

fn cell_samples(cell: &BoxN, cfg: &DenseCheckCfg, cell_index: u64) -> Vec<Vec<f64>> {
    match &cfg.sampler {
        Sampler::PseudoRandom => {
            let mut out = vec![cell.center()];
            let mut rng = SplitMix64::new(cfg.seed ^ cell_index.wrapping_mul(0x9e37_79b9));
            for _ in 1..cfg.samples_per_cell {
                out.push(
                    (0..cell.dim())
                        .map(|i| rng.f64_in(cell.lo[i], cell.hi[i]))
                        .collect(),
                );
            }
            out
        }
        Sampler::GridNodes { spacing } => {
            // nodes of the global grid k*spacing that fall inside the cell
            let mut out = Vec::new();
            let mut point = vec![0.0; cell.dim()];
            collect_nodes(cell, *spacing, 0, &mut point, &mut out, cfg.samples_per_cell as usize);
            out
        }
    }
}

fn collect_nodes(
    cell: &BoxN,
    spacing: f64,
    axis: usize,
    point: &mut Vec<f64>,
    out: &mut Vec<Vec<f64>>,
    cap: usize,
) {
    if out.len() >= cap {
        return;
    }
    if axis == cell.dim() {
        out.push(point.clone());
        return;
    }
    let mut k = (cell.lo[axis] / spacing).ceil() as i64;
    while (k as f64) * spacing <= cell.hi[axis] {
        point[axis] = k as f64 * spacing;
        collect_nodes(cell, spacing, axis + 1, point, out, cap);
        if out.len() >= cap {
            return;
        }
        k += 1;
    }
}

// ---------------------------------------------------------------------
// limsup representations

/// A representation Σ = limsup Σ_λ: each Σ_λ is a finite primitive
/// union with open complement.
#[derive(Clone)]
pub struct LimsupFamily {
    pub label: String,
    pub poset: IndexPoset,
    map: Arc<dyn Fn(&PosetElem) -> Vec<SingPrimitive> + Send + Sync>,
}

impl std::fmt::Debug for LimsupFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LimsupFamily({}, poset {})", self.label, self.poset.label)
    }
}

impl LimsupFamily {
    pub fn new(
        label: impl Into<String>,
        poset: IndexPoset,
        map: impl Fn(&PosetElem) -> Vec<SingPrimitive> + Send + Sync + 'static,
    ) -> Self {
        LimsupFamily { label: label.into(), poset, map: Arc::new(map) }
    }

    pub fn sigma_at(&self, lambda: &PosetElem) -> Vec<SingPrimitive> {
        (self.map)(lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LimsupVerdict {
    /// x belongs to Σ_μ cofinally within the budget.
    In,
    /// From this λ on, no examined Σ_μ contains x.
    Out { lambda: PosetElem },
    Inconclusive,
}

/// Budgeted evaluation of x ∈ limsup Σ_λ.
pub fn limsup_contains(family: &LimsupFamily, x: &[f64], budget: usize) -> LimsupVerdict {
    let mut hits_everywhere = true;
    let mut ladders = 0;
    for j in 0..budget as u64 {
        let lambda = family.poset.chain(j);
        let mus = family.poset.successors_sample(&lambda, budget);
        let mut hit = false;
        let mut all_out = true;
        for mu in &mus {
            let prims = family.sigma_at(mu);
            if prims.iter().any(|p| p.contains(x)) {
                hit = true;
                all_out = false;
                break;
            }
            if prims.iter().any(|p| p.linf_dist(x) <= OUTSIDE_MARGIN) {
                all_out = false;
            }
        }
        if all_out {
            return LimsupVerdict::Out { lambda };
        }
        if !hit {
            hits_everywhere = false;
        }
        ladders += 1;
    }
    if hits_everywhere && ladders >= 2 {
        LimsupVerdict::In
    } else {
        LimsupVerdict::Inconclusive
    }
}

/// The finite-subset representation: λ ranges over nonvoid finite
/// subsets A of the enumerated points, ordered by inclusion, Σ_λ = A.
pub fn finite_subset_representation(
    sigma: &SingularitySet,
    enum_budget: u64,
) -> Result<LimsupFamily, SetsError> {
    let points = point_list(sigma, enum_budget)?;
    let universe = points.len() as u64;
    let poset = IndexPoset::finite_subsets(universe, format!("subsets({})", sigma.label));
    Ok(LimsupFamily::new(
        format!("finite-subsets({})", sigma.label),
        poset,
        move |lambda| {
            lambda
                .set
                .iter()
                .filter_map(|&i| points.get(i as usize).cloned())
                .map(SingPrimitive::Point)
                .collect()
        },
    ))
}

/// The constant representation over L = N: Σ_λ = Σ for every λ.
pub fn constant_representation(sigma: &SingularitySet, enum_budget: u64) -> LimsupFamily {
    let prims = sigma.primitives(enum_budget);
    LimsupFamily::new(
        format!("constant({})", sigma.label),
        IndexPoset::naturals(),
        move |_| prims.clone(),
    )
}

/// A representation that differs from the constant one at finitely many
/// indices (the extra primitive is not cofinal, so the limsup is
/// unchanged). Used to exercise representation independence.
pub fn transient_extra_representation(
    sigma: &SingularitySet,
    enum_budget: u64,
    extra: SingPrimitive,
) -> LimsupFamily {
    let prims = sigma.primitives(enum_budget);
    LimsupFamily::new(
        format!("transient-extra({})", sigma.label),
        IndexPoset::naturals(),
        move |lambda| {
            let mut v = prims.clone();
            if lambda.level == 0 {
                v.push(extra.clone());
            }
            v
        },
    )
}

// ---------------------------------------------------------------------
// measure

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureBound {
    pub bound: f64,
    /// Set when the enumeration was not exhausted within the budget.
    pub partial: bool,
}

/// Upper bound on the Lebesgue measure: the sum of primitive volumes
/// over the enumeration budget.
pub fn measure_bound(sigma: &SingularitySet, budget: u64) -> MeasureBound {
    let bound = sigma.primitives(budget).iter().map(|p| p.volume()).sum();
    let partial = match &sigma.source {
        PrimitiveSource::Finite(_) => false,
        PrimitiveSource::Enumerated(e) => e.get(budget).is_some(),
    };
    MeasureBound { bound, partial }
}

fn point_list(sigma: &SingularitySet, budget: u64) -> Result<Vec<Vec<f64>>, SetsError> {
    sigma
        .primitives(budget)
        .into_iter()
        .enumerate()
        .map(|(i, p)| match p {
            SingPrimitive::Point(v) => Ok(v),
            SingPrimitive::Slab(_) => Err(SetsError::NotPointEnumerable(i as u64)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_line() -> DomainBox {
        DomainBox::line(0.0, 1.0).unwrap()
    }

    fn gate(h: f64) -> DenseCheckCfg {
        DenseCheckCfg::at_resolution(h)
    }

    #[test]
    fn slices_have_dense_complement() {
        let dom = DomainBox::new(&[(0.0, 2.0), (0.0, 2.0)]).unwrap();
        let sigma = SingularitySet::nowhere_dense(
            &dom,
            vec![SingPrimitive::slice(&dom, 0, 1.0)],
            &gate(0.1),
        )
        .unwrap();
        let rep = is_complement_dense_at(&sigma, &gate(0.1)).unwrap();
        assert_eq!(rep.verdict, Verdict3::True);
        assert_eq!(rep.witnesses.len(), rep.cells);
    }

    #[test]
    fn rationals_surrogate_is_dense_with_dense_complement() {
        let dom = unit_line();
        let sigma = SingularitySet::enumerated(
            SetClass::DenseComplement,
            &dom,
            rationals_max_den(0.0, 1.0, 64),
            &gate(0.01),
        )
        .unwrap();
        let rep = is_complement_dense_at(&sigma, &gate(0.01)).unwrap();
        assert_eq!(rep.verdict, Verdict3::True);
    }

    #[test]
    fn grid_counterexample_fails_density() {
        let dom = unit_line();
        let h = 0.1;
        let sigma = SingularitySet {
            class: SetClass::NowhereDense,
            ambient: dom.clone(),
            source: PrimitiveSource::Finite(grid_points(&dom, h / 2.0)),
            measure_budget: None,
            label: "grid".into(),
        };
        let cfg = DenseCheckCfg {
            resolution: h,
            samples_per_cell: 8,
            seed: 1,
            enum_budget: 64,
            sampler: Sampler::GridNodes { spacing: h / 2.0 },
        };
        let rep = is_complement_dense_at(&sigma, &cfg).unwrap();
        assert_eq!(rep.verdict, Verdict3::False);
        assert!(rep.witness_cell.is_some());
    }

    #[test]
    fn rounding_margin_gives_inconclusive() {
        let dom = unit_line();
        // a point a hair away from the only sample
        let sigma = SingularitySet {
            class: SetClass::NowhereDense,
            ambient: dom.clone(),
            source: PrimitiveSource::Finite(vec![SingPrimitive::Point(vec![0.25 + 1e-13])]),
            measure_budget: None,
            label: "hair".into(),
        };
        let cfg = DenseCheckCfg {
            resolution: 0.5,
            samples_per_cell: 1,
            seed: 1,
            enum_budget: 4,
            sampler: Sampler::PseudoRandom,
        };
        let rep = is_complement_dense_at(&sigma, &cfg).unwrap();
        assert_eq!(rep.verdict, Verdict3::Inconclusive);
    }

    #[test]
    fn union_joins_classes_and_memberships() {
        let dom = DomainBox::new(&[(0.0, 3.0)]).unwrap();
        let a = SingularitySet::nowhere_dense(
            &dom,
            vec![SingPrimitive::Point(vec![1.0])],
            &gate(0.1),
        )
        .unwrap();
        let b = SingularitySet::nowhere_dense(
            &dom,
            vec![SingPrimitive::Point(vec![2.0])],
            &gate(0.1),
        )
        .unwrap();
        let u = union(&a, &b, &gate(0.1)).unwrap();
        assert_eq!(u.class, SetClass::NowhereDense);
        assert!(u.contains_enumerated(&[1.0], 8));
        assert!(u.contains_enumerated(&[2.0], 8));
        // identity under the empty set
        let e = SingularitySet::empty(&dom);
        let u2 = union(&a, &e, &gate(0.1)).unwrap();
        assert_eq!(u2.primitives(8), a.primitives(8));
    }

    #[test]
    fn union_of_enumerations_interleaves() {
        let dom = unit_line();
        let dy = SingularitySet::enumerated(
            SetClass::BaireFirst,
            &dom,
            dyadic_points(0.0, 1.0),
            &gate(0.05),
        )
        .unwrap();
        let tri = SingularitySet::enumerated(
            SetClass::BaireFirst,
            &dom,
            triadic_points(0.0, 1.0),
            &gate(0.05),
        )
        .unwrap();
        let u = union(&dy, &tri, &gate(0.05)).unwrap();
        assert_eq!(u.class, SetClass::BaireFirst);
        assert!(u.contains_enumerated(&[0.5], 16), "dyadic survives");
        assert!(u.contains_enumerated(&[1.0 / 3.0], 16), "triadic survives");
    }

    #[test]
    fn nd_retag_keeps_membership() {
        let dom = unit_line();
        let sigma = SingularitySet::nowhere_dense(
            &dom,
            vec![SingPrimitive::Point(vec![0.25]), SingPrimitive::Point(vec![0.75])],
            &gate(0.05),
        )
        .unwrap();
        let up = sigma.retag_class(SetClass::BaireFirst).unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..1000 {
            let x = vec![rng.next_f64()];
            assert_eq!(
                sigma.contains_enumerated(&x, 16),
                up.contains_enumerated(&x, 16)
            );
        }
        assert!(matches!(
            up.retag_class(SetClass::NowhereDense),
            Err(SetsError::ClassDowngrade { .. })
        ));
    }

    #[test]
    fn limsup_constant_and_subset_representations() {
        let dom = unit_line();
        let sigma = SingularitySet::nowhere_dense(
            &dom,
            vec![
                SingPrimitive::Point(vec![0.25]),
                SingPrimitive::Point(vec![0.5]),
                SingPrimitive::Point(vec![0.75]),
            ],
            &gate(0.05),
        )
        .unwrap();
        let constant = constant_representation(&sigma, 8);
        assert_eq!(limsup_contains(&constant, &[0.5], 8), LimsupVerdict::In);
        assert!(matches!(limsup_contains(&constant, &[0.3], 8), LimsupVerdict::Out { .. }));

        let subsets = finite_subset_representation(&sigma, 8).unwrap();
        assert_eq!(limsup_contains(&subsets, &[0.25], 8), LimsupVerdict::In);
        assert!(matches!(limsup_contains(&subsets, &[0.6], 8), LimsupVerdict::Out { .. }));
    }

    #[test]
    fn limsup_of_dyadic_enumeration_spot_check() {
        let dom = unit_line();
        let sigma = SingularitySet::enumerated(
            SetClass::BaireFirst,
            &dom,
            dyadic_points(0.0, 1.0),
            &gate(0.05),
        )
        .unwrap();
        // the ladder walks enumeration indices in order, so the budget
        // has to subsume the indices being spot-checked
        let family = finite_subset_representation(&sigma, 50).unwrap();
        let pts = sigma.primitives(50);
        let mut rng = SplitMix64::new(17);
        for _ in 0..50 {
            let k = rng.usize_below(pts.len());
            if let SingPrimitive::Point(p) = &pts[k] {
                assert_eq!(limsup_contains(&family, p, 60), LimsupVerdict::In);
            }
        }
        assert!(matches!(
            limsup_contains(&family, &[1.0 / 3.0], 60),
            LimsupVerdict::Out { .. }
        ));
    }

    #[test]
    fn alternating_family_limsup() {
        // Σ_λ alternates between {a} and {b}; both are cofinal
        let fam = LimsupFamily::new("alternating", IndexPoset::naturals(), |lambda| {
            if lambda.level % 2 == 0 {
                vec![SingPrimitive::Point(vec![0.25])]
            } else {
                vec![SingPrimitive::Point(vec![0.75])]
            }
        });
        assert_eq!(limsup_contains(&fam, &[0.25], 8), LimsupVerdict::In);
        assert_eq!(limsup_contains(&fam, &[0.75], 8), LimsupVerdict::In);
        assert!(matches!(limsup_contains(&fam, &[0.5], 8), LimsupVerdict::Out { .. }));
    }

    #[test]
    fn singleton_representation_single_element_poset() {
        let dom = unit_line();
        let sigma = SingularitySet::nowhere_dense(
            &dom,
            vec![SingPrimitive::Point(vec![0.5])],
            &gate(0.05),
        )
        .unwrap();
        let fam = finite_subset_representation(&sigma, 4).unwrap();
        // one-point set: the poset universe has a single element
        assert_eq!(fam.poset.kind, crate::poset::PosetKind::FiniteSubsets { universe: 1 });
        assert_eq!(limsup_contains(&fam, &[0.5], 6), LimsupVerdict::In);
    }

    #[test]
    fn measure_bounds() {
        let dom = DomainBox::new(&[(0.0, 4.0), (0.0, 1.0)]).unwrap();
        // k hyperplane slices have measure zero
        let slices = SingularitySet::nowhere_dense(
            &dom,
            (1..=3).map(|k| SingPrimitive::slice(&dom, 0, k as f64)).collect(),
            &gate(0.2),
        )
        .unwrap();
        assert_eq!(measure_bound(&slices, 8), MeasureBound { bound: 0.0, partial: false });

        // thickened slabs of widths eps/2^k sum to <= eps
        let eps = 0.04;
        let slabs: Vec<SingPrimitive> = (1..=6)
            .map(|k| {
                let w = eps / 2f64.powi(k);
                let c = k as f64 * 0.5;
                SingPrimitive::Slab(BoxN::new(vec![c - w / 2.0, 0.0], vec![c + w / 2.0, 1.0]))
            })
            .collect();
        let fat = SingularitySet {
            class: SetClass::NowhereDense,
            ambient: dom.clone(),
            source: PrimitiveSource::Finite(slabs),
            measure_budget: Some(eps),
            label: "slabs".into(),
        };
        let mb = measure_bound(&fat, 16);
        assert!(mb.bound <= eps && mb.bound > 0.0);

        let empty = SingularitySet::empty(&dom);
        assert_eq!(measure_bound(&empty, 4).bound, 0.0);
    }

    #[test]
    fn text_round_trip() {
        let dom = DomainBox::new(&[(0.0, 2.0), (0.0, 1.0)]).unwrap();
        let sigma = SingularitySet::nowhere_dense(
            &dom,
            vec![
                SingPrimitive::Point(vec![0.5, 0.25]),
                SingPrimitive::slice(&dom, 0, 1.0),
            ],
            &gate(0.1),
        )
        .unwrap();
        let text = sigma.to_text(16);
        let back = SingularitySet::from_text(&text).unwrap();
        assert_eq!(back.class, sigma.class);
        assert_eq!(back.ambient, sigma.ambient);
        assert_eq!(back.primitives(16), sigma.primitives(16));
    }

    #[test]
    fn text_parse_errors_carry_lines() {
        let err = SingularitySet::from_text("nd 0 1\nblob 3").unwrap_err();
        match err {
            SetsError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("blob"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
