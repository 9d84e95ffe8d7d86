//! Adaptive Gauss–Kronrod integration on finite intervals, half-lines and
//! intervals with an integrable power-law endpoint singularity.
//!
//! All routines use the global-adaptive strategy: an initial partition is
//! refined by bisecting the panel with the largest error estimate until the
//! summed error meets `max(abs_tol, rel_tol·|I|)`. The initial partition is
//! what adapts the scheme to oscillatory integrands: panels never exceed
//! half of the declared oscillation period.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

// 21-point Kronrod abscissae on [-1, 1] (non-negative half) and weights;
// odd indices are the 10-point Gauss abscissae.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_934_407_530,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Consecutive walk-out panels whose absolute mass must fall below the
/// truncation threshold before the half-line tail is closed off.
const QUIET_PANELS: usize = 2;

/// Walk-out stops once a panel carries less than this fraction of the mass
/// seen so far. Independent of the tolerance so that tightening it only
/// continues the refinement of the same partition.
const QUIET_FRACTION: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("tolerance not reached after {subdivisions} subdivisions: best estimate {value} ± {err_estimate}")]
    AccuracyNotReached {
        value: f64,
        err_estimate: f64,
        subdivisions: usize,
    },
    #[error("integrand is not finite at {at}")]
    NonFinite { at: f64 },
}

/// Where the integrand's support ends on the half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Walk out until the integrand's mass per panel is negligible, then
    /// close the remaining `[W, ∞)` by the map `ω = W/s`.
    DecayThreshold,
    /// The integrand vanishes beyond `edge`.
    CompactSupport { edge: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub truncation: Truncation,
    /// Period of the fastest oscillation in the integrand, if known.
    pub oscillation_period_hint: Option<f64>,
    /// Characteristic width of non-oscillatory structure; sets the panel
    /// width when no period hint is given.
    pub length_scale: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            max_subdivisions: 200_000,
            truncation: Truncation::DecayThreshold,
            oscillation_period_hint: None,
            length_scale: 1.0,
        }
    }
}

impl QuadSpec {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.oscillation_period_hint = Some(period);
        self
    }

    pub fn with_length_scale(mut self, scale: f64) -> Self {
        self.length_scale = scale;
        self
    }

    pub fn with_compact_support(mut self, edge: f64) -> Self {
        self.truncation = Truncation::CompactSupport { edge };
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(QuadError::InvalidSpec(format!(
                "tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_subdivisions < 8 {
            return Err(QuadError::InvalidSpec(format!(
                "max_subdivisions must be at least 8, got {}",
                self.max_subdivisions
            )));
        }
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(QuadError::InvalidSpec(format!(
                "length scale must be positive and finite, got {}",
                self.length_scale
            )));
        }
        if let Some(p) = self.oscillation_period_hint {
            if !(p > 0.0 && p.is_finite()) {
                return Err(QuadError::InvalidSpec(format!(
                    "oscillation period must be positive and finite, got {p}"
                )));
            }
        }
        if let Truncation::CompactSupport { edge } = self.truncation {
            if !(edge > 0.0 && edge.is_finite()) {
                return Err(QuadError::InvalidSpec(format!(
                    "support edge must be positive and finite, got {edge}"
                )));
            }
        }
        Ok(())
    }

    /// Largest initial panel width compatible with the period hint.
    fn panel_width(&self) -> f64 {
        match self.oscillation_period_hint {
            Some(p) => (0.5 * p).min(self.length_scale),
            None => self.length_scale,
        }
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// An integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err_estimate: f64,
}

impl Estimate {
    pub fn new(value: f64, err_estimate: f64) -> Self {
        Estimate {
            value,
            err_estimate,
        }
    }

    pub fn rel_err(&self) -> f64 {
        if self.value == 0.0 {
            self.err_estimate
        } else {
            self.err_estimate / self.value.abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    // |f| integrated over the panel, used for the walk-out truncation test
    mass: f64,
    // which integrand of a joint refinement the panel belongs to
    src: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by position so the refinement order is reproducible
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.src.cmp(&self.src))
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

/// Neumaier summation; panel sums run to tens of thousands of terms.
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn new(start: f64) -> Self {
        CompensatedSum {
            sum: start,
            comp: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

type Integrand<'a> = &'a dyn Fn(f64) -> f64;

fn gk21(f: Integrand<'_>, src: usize, a: f64, b: f64) -> Result<Panel, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { at: center });
    }
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = WGK[10] * fc.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let x1 = center - dx;
        let x2 = center + dx;
        let f1 = f(x1);
        let f2 = f(x2);
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { at: x1 });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { at: x2 });
        }
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let err = rescale_error((res_k - res_g) * half, res_abs, res_asc);
    Ok(Panel {
        a,
        b,
        value,
        err,
        mass: res_abs,
        src,
    })
}

/// Global adaptive refinement of an initial partition. Panels may belong to
/// different integrands (`fns[panel.src]`); the tolerance applies to the sum.
fn refine(fns: &[Integrand<'_>], initial: Vec<Panel>, spec: &QuadSpec) -> Result<Estimate, QuadError> {
    let mut heap: BinaryHeap<Panel> = initial.into_iter().collect();
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    let mut count = heap.len();
    loop {
        // recomputed each pass to keep the sum free of drift
        let mut value = CompensatedSum::new(frozen_value);
        let mut err = frozen_err;
        for p in heap.iter() {
            value.add(p.value);
            err += p.err;
        }
        let value = value.total();
        if err <= spec.tolerance(value) {
            return Ok(Estimate::new(value, err));
        }
        if count >= spec.max_subdivisions {
            return Err(QuadError::AccuracyNotReached {
                value,
                err_estimate: err,
                subdivisions: count,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => return Ok(Estimate::new(value, err)),
        };
        let mid = 0.5 * (worst.a + worst.b);
        let at_roundoff = worst.err <= 100.0 * f64::EPSILON * worst.mass;
        if at_roundoff || mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-14 * mid.abs() {
            // bisection cannot improve this panel any further
            frozen_value += worst.value;
            frozen_err += worst.err;
            continue;
        }
        let f = fns[worst.src];
        heap.push(gk21(f, worst.src, worst.a, mid)?);
        heap.push(gk21(f, worst.src, mid, worst.b)?);
        count += 1;
    }
}

fn partition(f: Integrand<'_>, src: usize, a: f64, b: f64, width: f64) -> Result<Vec<Panel>, QuadError> {
    let n = (((b - a) / width).ceil() as usize).max(1);
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == n { b } else { a + (i + 1) as f64 * h };
            gk21(f, src, lo, hi)
        })
        .collect()
}

/// `[W, ∞)` mapped onto `s ∈ (0, 1]` by `ω = W/s`.
fn mapped_tail<'a>(f: Integrand<'a>, cut: f64) -> impl Fn(f64) -> f64 + 'a {
    move |s: f64| {
        let w = cut / s;
        if !w.is_finite() {
            return 0.0;
        }
        let v = f(w) * cut / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }
}

/// `∫_a^b f`, adaptively, with panels no wider than the spec allows.
pub fn integrate_interval<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    spec: &QuadSpec,
) -> Result<Estimate, QuadError> {
    spec.validate()?;
    if a == b {
        return Ok(Estimate::new(0.0, 0.0));
    }
    if b < a {
        let e = integrate_interval(f, b, a, spec)?;
        return Ok(Estimate::new(-e.value, e.err_estimate));
    }
    let g = |x: f64| f(x);
    let fns: [Integrand<'_>; 1] = [&g];
    let panels = partition(&g, 0, a, b, spec.panel_width())?;
    refine(&fns, panels, spec)
}

/// `∫_0^∞ f`.
pub fn integrate_halfline<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    spec: &QuadSpec,
) -> Result<Estimate, QuadError> {
    spec.validate()?;
    let g = |x: f64| f(x);
    let h = spec.panel_width();
    match spec.truncation {
        Truncation::CompactSupport { edge } => {
            let fns: [Integrand<'_>; 1] = [&g];
            let panels = partition(&g, 0, 0.0, edge, h)?;
            refine(&fns, panels, spec)
        }
        Truncation::DecayThreshold => {
            let mut panels = Vec::new();
            let mut total_mass = 0.0;
            let mut quiet = 0;
            let mut quiet_mass = 0.0;
            let mut a = 0.0;
            let mut width = h;
            // Oscillatory integrands keep half-period panels and are truncated
            // once the envelope is negligible (a mapped tail would oscillate
            // without bound near s = 0). Smooth ones grow geometrically past
            // the core and close off with the mapped tail.
            let oscillatory = spec.oscillation_period_hint.is_some();
            let walk_limit = spec.max_subdivisions / 4;
            // a quiet stretch must span a full period so that a node of the
            // oscillation cannot fake convergence
            let quiet_needed = match spec.oscillation_period_hint {
                Some(p) => QUIET_PANELS.max((p / h).ceil() as usize + 1),
                None => QUIET_PANELS,
            };
            while quiet < quiet_needed && panels.len() < walk_limit {
                let b = a + width;
                let p = gk21(&g, 0, a, b)?;
                total_mass += p.mass;
                // for ω^-2 decay or faster, the remainder past b is at most
                // (b / width) times the current panel mass
                let quiet_now = if oscillatory {
                    p.mass * b / width < 1e-2 * spec.abs_tol.max(spec.rel_tol * total_mass)
                } else {
                    p.mass < QUIET_FRACTION * total_mass
                };
                if quiet_now {
                    quiet += 1;
                    quiet_mass = f64::max(quiet_mass, p.mass);
                } else {
                    quiet = 0;
                    quiet_mass = 0.0;
                }
                panels.push(p);
                a = b;
                if !oscillatory && a >= 8.0 * h {
                    width *= 2.0;
                }
            }
            if oscillatory {
                let fns: [Integrand<'_>; 1] = [&g];
                let head = refine(&fns, panels, spec)?;
                // the truncated remainder is charged to the error estimate;
                // algebraic decay at least as fast as ω^-2 is assumed
                let dropped = quiet_mass * a / width;
                return Ok(Estimate::new(head.value, head.err_estimate + dropped));
            }
            let tail = mapped_tail(&g, a);
            panels.push(gk21(&tail, 1, 0.0, 1.0)?);
            let fns: [Integrand<'_>; 2] = [&g, &tail];
            refine(&fns, panels, spec)
        }
    }
}

/// `∫_lower^edge f(ω)(edge − ω)^exponent dω` for `exponent ∈ (−1, 0)` and
/// `f` regular at the edge.
///
/// The substitution `ω = edge − u^{1/(1+exponent)}` absorbs the weight
/// exactly, leaving `(1/(1+exponent)) ∫ f(edge − u^{1/(1+exponent)}) du`.
pub fn integrate_endpoint_singular<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    lower: f64,
    edge: f64,
    exponent: f64,
    spec: &QuadSpec,
) -> Result<Estimate, QuadError> {
    spec.validate()?;
    if !(exponent > -1.0 && exponent < 0.0) {
        return Err(QuadError::InvalidSpec(format!(
            "endpoint exponent must lie in (-1, 0), got {exponent}"
        )));
    }
    if !(lower < edge) {
        return Err(QuadError::InvalidSpec(format!(
            "lower limit {lower} must be below the singular edge {edge}"
        )));
    }
    let p = 1.0 + exponent;
    let inv_p = 1.0 / p;
    let u_max = (edge - lower).powf(p);
    let g = move |u: f64| f(edge - u.powf(inv_p)) * inv_p;
    // panel count follows the ω-space width limit
    let n = (((edge - lower) / spec.panel_width()).ceil() as usize).max(4);
    let fns: [Integrand<'_>; 1] = [&g];
    let panels = partition(&g, 0, 0.0, u_max, u_max / n as f64)?;
    refine(&fns, panels, spec)
}

/// Remainder control for [`integrate_halfline_split`].
pub struct OscillatoryTail<'a> {
    /// Period-averaged integrand, integrated exactly beyond the cut.
    pub mean: &'a (dyn Fn(f64) -> f64 + Sync),
    /// Estimate of `∫_W^∞ (f − mean)` and a bound on its error, as a
    /// function of the cut `W`.
    pub remainder: &'a (dyn Fn(f64) -> (f64, f64) + Sync),
    /// Smallest admissible cut (past all non-monotone structure).
    pub min_cut: f64,
}

/// `∫_0^∞ f` for integrands of the form smooth × (mean + decaying
/// oscillation): `[0, W]` is integrated directly with half-period panels and
/// `[W, ∞)` through the period-averaged integrand plus an asymptotic
/// estimate of the oscillating remainder. `W` is pushed out until the
/// remainder's error bound is below a quarter of the tolerance; that bound
/// is added to the reported error.
pub fn integrate_halfline_split<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    tail: &OscillatoryTail<'_>,
    spec: &QuadSpec,
) -> Result<Estimate, QuadError> {
    spec.validate()?;
    let h = spec.panel_width();
    let round_up = |w: f64| (w / h).ceil().max(1.0) * h;
    let g = |x: f64| f(x);
    let mean = |x: f64| (tail.mean)(x);

    // the remainder budget takes a quarter of the tolerance
    let inner = QuadSpec {
        rel_tol: 0.75 * spec.rel_tol,
        abs_tol: 0.75 * spec.abs_tol,
        ..*spec
    };
    let evaluate = |cut: f64| -> Result<Estimate, QuadError> {
        let n = (cut / h).round() as usize;
        if n > spec.max_subdivisions {
            return Err(QuadError::AccuracyNotReached {
                value: f64::NAN,
                err_estimate: f64::INFINITY,
                subdivisions: n,
            });
        }
        let mapped = mapped_tail(&mean, cut);
        let mut panels = partition(&g, 0, 0.0, cut, h)?;
        panels.push(gk21(&mapped, 1, 0.0, 1.0)?);
        let fns: [Integrand<'_>; 2] = [&g, &mapped];
        refine(&fns, panels, &inner)
    };

    let mut cut = round_up(tail.min_cut.max(16.0 * h));
    let mut est = evaluate(cut)?;
    for _ in 0..4 {
        let budget = 0.25 * spec.tolerance(est.value);
        let (rem, bound) = (tail.remainder)(cut);
        if bound <= budget {
            return Ok(Estimate::new(est.value + rem, est.err_estimate + bound));
        }
        // the remainder is cheap: locate the cut first, then integrate once more
        let mut guard = 0;
        while (tail.remainder)(cut).1 > budget {
            cut = round_up(cut * 1.5);
            guard += 1;
            if guard > 200 || cut / h > spec.max_subdivisions as f64 {
                return Err(QuadError::AccuracyNotReached {
                    value: est.value + rem,
                    err_estimate: est.err_estimate + (tail.remainder)(cut).1,
                    subdivisions: (cut / h) as usize,
                });
            }
        }
        est = evaluate(cut)?;
    }
    let (rem, bound) = (tail.remainder)(cut);
    Err(QuadError::AccuracyNotReached {
        value: est.value + rem,
        err_estimate: est.err_estimate + bound,
        subdivisions: (cut / h) as usize,
    })
}

/// `∫_0^T dt ∫_0^t ds f(t, s)` with both integrals split at `breakpoints`
/// (where `f` may have kinks in either argument).
pub fn integrate_triangle<F: Fn(f64, f64) -> f64 + ?Sized>(
    f: &F,
    upper: f64,
    breakpoints: &[f64],
    spec: &QuadSpec,
) -> Result<Estimate, QuadError> {
    spec.validate()?;
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > 0.0 && b < upper)
        .collect();
    cuts.push(0.0);
    cuts.push(upper);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let inner_spec = QuadSpec {
        rel_tol: (1e-2 * spec.rel_tol).max(1e-14),
        abs_tol: 1e-2 * spec.abs_tol,
        ..*spec
    };
    let failure = std::cell::RefCell::new(None);
    let inner = |t: f64| -> f64 {
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            if w[0] >= t {
                break;
            }
            let hi = w[1].min(t);
            match integrate_interval(&|s: f64| f(t, s), w[0], hi, &inner_spec) {
                Ok(e) => acc += e.value,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    return f64::NAN;
                }
            }
        }
        acc
    };
    let mut value = 0.0;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        match integrate_interval(&inner, w[0], w[1], spec) {
            Ok(e) => {
                value += e.value;
                err += e.err_estimate;
            }
            Err(e) => return Err(failure.borrow_mut().take().unwrap_or(e)),
        }
    }
    Ok(Estimate::new(value, err))
}
