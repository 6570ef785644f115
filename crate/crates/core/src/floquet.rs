//! Floquet analysis of the periodic background: monodromy, discriminant,
//! band edges, the quasimomentum branch, Bloch solutions and Fourier
//! coefficients of Bloch products.
//!
//! Conventions: the Wronskian is W{f,g} = f'g - f g'; the Bloch pair is
//! normalized so that ψ₋ = conj(ψ₊) and Im W{ψ₊,ψ₋} > 0 inside a band
//! (equivalently iW < 0). The quasimomentum branch is fixed by k(λ₀) = 0
//! and continuity, so band j sweeps [jπ, (j+1)π].

use crate::error::{Error, Result};
use crate::numkit::ode::{integrate_observed, rk4_uniform, OdeOptions};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Relative guard below which a gap is considered closed (touching bands).
pub const CLOSED_GAP_TOL: f64 = 1e-7;
/// Refuse Bloch extraction when |D| exceeds 2 by less than this near an
/// open gap; eigenvector conditioning degrades at edges.
pub const NEAR_EDGE_GUARD: f64 = 1e-6;

#[derive(Clone)]
enum PotentialKind {
    Free,
    Constant(f64),
    Callback(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Uniform samples over one period, interpolated by a periodic 4-point
    /// cubic (Lagrange) rule.
    Sampled(Vec<f64>),
}

/// The potential q over one period together with the period a.
#[derive(Clone)]
pub struct PeriodicBackground {
    period: f64,
    kind: PotentialKind,
}

impl PeriodicBackground {
    pub fn free(period: f64) -> Self {
        assert!(period > 0.0);
        PeriodicBackground {
            period,
            kind: PotentialKind::Free,
        }
    }

    pub fn constant(v0: f64, period: f64) -> Self {
        assert!(period > 0.0);
        PeriodicBackground {
            period,
            kind: PotentialKind::Constant(v0),
        }
    }

    pub fn from_callback(f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, period: f64) -> Self {
        assert!(period > 0.0);
        PeriodicBackground {
            period,
            kind: PotentialKind::Callback(f),
        }
    }

    /// Samples are taken at x_i = i·a/N, i = 0..N-1, wrapped periodically.
    pub fn from_samples(samples: Vec<f64>, period: f64) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::Validation(
                "sampled potential needs at least 4 points".into(),
            ));
        }
        assert!(period > 0.0);
        Ok(PeriodicBackground {
            period,
            kind: PotentialKind::Sampled(samples),
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Free => 0.0,
            PotentialKind::Constant(v) => *v,
            PotentialKind::Callback(f) => {
                let r = x.rem_euclid(self.period);
                f(r)
            }
            PotentialKind::Sampled(qs) => {
                let n = qs.len();
                let t = x.rem_euclid(self.period) / self.period * n as f64;
                let i = t.floor() as isize;
                let s = t - i as f64;
                let at = |j: isize| qs[(j.rem_euclid(n as isize)) as usize];
                let (qm1, q0, q1, q2) = (at(i - 1), at(i), at(i + 1), at(i + 2));
                // 4-point cubic Lagrange on the unit-spaced stencil.
                -qm1 * s * (s - 1.0) * (s - 2.0) / 6.0
                    + q0 * (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0
                    - q1 * (s + 1.0) * s * (s - 2.0) / 2.0
                    + q2 * (s + 1.0) * s * (s - 1.0) / 6.0
            }
        }
    }
}

fn hill_max_step(a: f64, lambda: f64) -> f64 {
    let freq = lambda.abs().sqrt().max(1.0);
    (a / 16.0).min(2.0 * PI / freq / 20.0)
}

/// Transfer matrix over one period in the (ψ, ψ') basis; det = 1 up to
/// integration tolerance.
pub fn monodromy(bg: &PeriodicBackground, lambda: f64) -> Result<[[f64; 2]; 2]> {
    let a = bg.period();
    let mut field = |x: f64, y: &[f64; 4]| {
        let v = bg.eval(x) - lambda;
        [y[1], v * y[0], y[3], v * y[2]]
    };
    let opt = OdeOptions {
        rtol: 1e-12,
        max_step: hill_max_step(a, lambda),
        ..Default::default()
    };
    let (y, _) = integrate_observed(&mut field, (0.0, a), [1.0, 0.0, 0.0, 1.0], &opt, &mut |_, _, _| {})?;
    Ok([[y[0], y[2]], [y[1], y[3]]])
}

/// Trace of the monodromy matrix.
pub fn discriminant(bg: &PeriodicBackground, lambda: f64) -> Result<f64> {
    let m = monodromy(bg, lambda)?;
    Ok(m[0][0] + m[1][1])
}

/// One spectral band with its quasimomentum range [jπ, (j+1)π].
#[derive(Debug, Clone, Copy)]
pub struct Band {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Ordered band edges of the periodic operator.
#[derive(Debug, Clone)]
pub struct BandStructure {
    pub bands: Vec<Band>,
}

impl BandStructure {
    /// Flattened edge list λ₀, μ₀, μ₁, λ₁, λ₂, ... (doubled at touching gaps).
    pub fn edges(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.bands.len());
        for b in &self.bands {
            out.push(b.lo);
            out.push(b.hi);
        }
        out
    }

    pub fn band_containing(&self, lambda: f64) -> Option<&Band> {
        self.bands.iter().find(|b| b.lo < lambda && lambda < b.hi)
    }

    fn scale(&self) -> f64 {
        self.bands
            .last()
            .map(|b| b.hi.abs().max(1.0))
            .unwrap_or(1.0)
    }

    /// Gap width above band j; 0 means touching.
    pub fn gap_above(&self, j: usize) -> Option<f64> {
        if j + 1 < self.bands.len() {
            Some(self.bands[j + 1].lo - self.bands[j].hi)
        } else {
            None
        }
    }

    pub fn gap_above_is_closed(&self, j: usize) -> bool {
        match self.gap_above(j) {
            Some(w) => w.abs() <= CLOSED_GAP_TOL * self.scale(),
            None => false,
        }
    }
}

fn bisect_root(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<f64> {
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::Bracketing(format!(
            "no sign change on [{a:.6e}, {b:.6e}]"
        )));
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section refinement of an extremum bracketed by three grid points.
fn refine_extremum(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    maximize: bool,
    tol: f64,
) -> Result<(f64, f64)> {
    let phi = 0.5 * (3.0 - 5f64.sqrt());
    let mut lo = a;
    let mut hi = b;
    let mut x1 = lo + phi * (hi - lo);
    let mut x2 = hi - phi * (hi - lo);
    let sgn = if maximize { -1.0 } else { 1.0 };
    let mut f1 = sgn * f(x1)?;
    let mut f2 = sgn * f(x2)?;
    while (hi - lo).abs() > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + phi * (hi - lo);
            f1 = sgn * f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - phi * (hi - lo);
            f2 = sgn * f(x2)?;
        }
    }
    let xm = 0.5 * (lo + hi);
    Ok((xm, sgn * if f1 < f2 { f1 } else { f2 }))
}

/// Locate the edges of bands 0..=j_max by a coarse scan of the discriminant
/// refined with bisection; touching bands are reported as equal edges.
pub fn band_edges(bg: &PeriodicBackground, j_max: usize) -> Result<BandStructure> {
    let a = bg.period();
    let step = 0.05 * (PI / a) * (PI / a);
    let root_tol = 1e-10;

    // Start below the spectrum: walk down until D > 2.
    let mut qmin = f64::INFINITY;
    for i in 0..512 {
        qmin = qmin.min(bg.eval(i as f64 * a / 512.0));
    }
    let mut lam = qmin - 1.0;
    let mut d_here = discriminant(bg, lam)?;
    let mut guard = 0;
    while d_here <= 2.0 {
        lam -= 10.0 * step;
        d_here = discriminant(bg, lam)?;
        guard += 1;
        if guard > 200 {
            return Err(Error::Bracketing(
                "could not find the hyperbolic region below the spectrum".into(),
            ));
        }
    }

    let needed = 2 * (j_max + 1);
    let mut edges: Vec<f64> = Vec::new();
    let mut prev = (lam, d_here);
    let mut prev2: Option<(f64, f64)> = None;
    let max_cells = 400_000usize;

    for cell in 0.. {
        if edges.len() >= needed {
            break;
        }
        if cell > max_cells {
            return Err(Error::Bracketing(
                "band-edge scan exhausted its cell budget".into(),
            ));
        }
        let x_next = prev.0 + step;
        let d_next = discriminant(bg, x_next)?;

        for target in [2.0f64, -2.0] {
            if (prev.1 - target) * (d_next - target) < 0.0 {
                let r = bisect_root(
                    |x| Ok(discriminant(bg, x)? - target),
                    prev.0,
                    x_next,
                    root_tol * prev.0.abs().max(1.0),
                )?;
                edges.push(r);
            }
        }

        // Interior extremum: possible touching point or a pair of roots
        // hiding inside one cell.
        if let Some(p2) = prev2 {
            let slope1 = prev.1 - p2.1;
            let slope2 = d_next - prev.1;
            if slope1 * slope2 < 0.0 {
                let maximize = slope1 > 0.0;
                let (xe, de) =
                    refine_extremum(|x| discriminant(bg, x), p2.0, x_next, maximize, root_tol)?;
                let target = if maximize { 2.0 } else { -2.0 };
                let inside = p2.1.abs() < 2.0 && d_next.abs() < 2.0;
                let already_found = |edges: &[f64], r: f64| {
                    edges
                        .iter()
                        .rev()
                        .take(6)
                        .any(|&e| (e - r).abs() < 100.0 * root_tol * r.abs().max(1.0))
                };
                if (de - target).abs() <= 1e-8 {
                    if inside && !already_found(&edges, xe) {
                        edges.push(xe);
                        edges.push(xe);
                    }
                } else if inside && (maximize && de > target || !maximize && de < target) {
                    // A genuine narrow gap hiding between grid points; its two
                    // crossings may or may not have been caught by the per-cell
                    // sign test, so only push the ones that were not.
                    let r1 = bisect_root(
                        |x| Ok(discriminant(bg, x)? - target),
                        p2.0,
                        xe,
                        root_tol * xe.abs().max(1.0),
                    )?;
                    let r2 = bisect_root(
                        |x| Ok(discriminant(bg, x)? - target),
                        xe,
                        x_next,
                        root_tol * xe.abs().max(1.0),
                    )?;
                    if !already_found(&edges, r1) {
                        edges.push(r1);
                    }
                    if !already_found(&edges, r2) {
                        edges.push(r2);
                    }
                }
            }
        }

        prev2 = Some(prev);
        prev = (x_next, d_next);
    }

    edges.sort_by(f64::total_cmp);
    if edges.len() < needed {
        return Err(Error::Bracketing(format!(
            "found {} edges, need {needed}; scan resolution insufficient",
            edges.len()
        )));
    }

    let bands = (0..=j_max)
        .map(|j| Band {
            index: j,
            lo: edges[2 * j],
            hi: edges[2 * j + 1],
        })
        .collect();
    Ok(BandStructure { bands })
}

/// Quasimomentum k(λ) and dk/dλ for λ strictly inside a band.
pub fn quasimomentum(
    bg: &PeriodicBackground,
    bs: &BandStructure,
    lambda: f64,
) -> Result<(f64, f64)> {
    let band = *bs
        .band_containing(lambda)
        .ok_or(Error::GapOrEdge { lambda })?;
    let k = k_in_band(bg, &band, lambda)?;
    let width = band.hi - band.lo;
    let h = (1e-6 * width).min(0.45 * (lambda - band.lo).min(band.hi - lambda));
    let kp = (k_in_band(bg, &band, lambda + h)? - k_in_band(bg, &band, lambda - h)?) / (2.0 * h);
    Ok((k, kp))
}

fn k_in_band(bg: &PeriodicBackground, band: &Band, lambda: f64) -> Result<f64> {
    let d = discriminant(bg, lambda)?;
    let inner = (d / 2.0).clamp(-1.0, 1.0).acos();
    let j = band.index as f64;
    Ok(if band.index % 2 == 0 {
        j * PI + inner
    } else {
        (j + 1.0) * PI - inner
    })
}

/// Quasimomentum extended to a closed-gap touching point by continuity.
pub fn quasimomentum_at(
    bg: &PeriodicBackground,
    bs: &BandStructure,
    lambda: f64,
) -> Result<(f64, f64)> {
    if let Some(t) = touching_point_near(bs, lambda) {
        // The step must stay large enough that D ∓ 2 ~ c (λ-ν)² dominates the
        // integration noise of the discriminant; arccos turns that noise into
        // a square-root-amplified error in k otherwise.
        let h = 5e-4 * t.energy.abs().max(1.0);
        let (k_lo, _) = quasimomentum(bg, bs, t.energy - h)?;
        let (k_hi, _) = quasimomentum(bg, bs, t.energy + h)?;
        let k = PI * (t.lower_band + 1) as f64;
        let kp = (k_hi - k_lo) / (2.0 * h);
        debug_assert!((0.5 * (k_lo + k_hi) - k).abs() < 1e-3);
        return Ok((k, kp));
    }
    quasimomentum(bg, bs, lambda)
}

struct Touching {
    energy: f64,
    lower_band: usize,
}

fn touching_point_near(bs: &BandStructure, lambda: f64) -> Option<Touching> {
    let scale = bs.scale();
    for j in 0..bs.bands.len().saturating_sub(1) {
        if bs.gap_above_is_closed(j) {
            let e = 0.5 * (bs.bands[j].hi + bs.bands[j + 1].lo);
            if (lambda - e).abs() <= CLOSED_GAP_TOL * scale {
                return Some(Touching {
                    energy: e,
                    lower_band: j,
                });
            }
        }
    }
    None
}

/// Bloch data at one energy: the ψ₊ seed, the Wronskian W{ψ₊,ψ₋} and dk/dλ.
#[derive(Debug, Clone)]
pub struct BlochData {
    pub lambda: f64,
    pub k: f64,
    /// (ψ₊(0), ψ₊'(0)); the ψ₋ seed is its complex conjugate by construction.
    pub psi_plus_seed: [Complex64; 2],
    pub wronskian: Complex64,
    pub kprime: f64,
}

impl BlochData {
    pub fn psi_minus_seed(&self) -> [Complex64; 2] {
        [self.psi_plus_seed[0].conj(), self.psi_plus_seed[1].conj()]
    }

    pub fn wronskian_abs(&self) -> f64 {
        self.wronskian.norm()
    }
}

fn wronskian_of_seed(seed: &[Complex64; 2]) -> Complex64 {
    // W{ψ₊,ψ₋}(0) = ψ₊'(0) conj(ψ₊(0)) - ψ₊(0) conj(ψ₊'(0)) = 2i Im(ψ₊' conj(ψ₊)).
    let w = seed[1] * seed[0].conj() - seed[0] * seed[1].conj();
    w
}

fn normalize_first_nonzero(v: &mut [Complex64; 2]) {
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let pivot = if v[0].norm() > 1e-10 * norm { v[0] } else { v[1] };
    v[0] /= pivot;
    v[1] /= pivot;
}

/// Bloch solutions at λ strictly inside a band (or at a closed-gap touching
/// point, where the limit directions come from the λ-derivative of the
/// monodromy). `rescale` multiplies the ψ₊ seed after normalization — the
/// gauge hook used by the invariance tests.
pub fn bloch(
    bg: &PeriodicBackground,
    bs: &BandStructure,
    lambda: f64,
    rescale: Option<Complex64>,
) -> Result<BlochData> {
    if let Some(t) = touching_point_near(bs, lambda) {
        return bloch_at_touching(bg, bs, &t, rescale);
    }

    let (k, kprime) = quasimomentum(bg, bs, lambda)?;
    let d = discriminant(bg, lambda)?;
    if d.abs() > 2.0 - NEAR_EDGE_GUARD {
        return Err(Error::NearEdge { disc_abs: d.abs() });
    }

    let m = monodromy(bg, lambda)?;
    let mult = Complex64::new(0.0, k).exp();
    let va = [
        Complex64::new(m[0][1], 0.0),
        mult - Complex64::new(m[0][0], 0.0),
    ];
    let vb = [
        mult - Complex64::new(m[1][1], 0.0),
        Complex64::new(m[1][0], 0.0),
    ];
    let mut seed = if va[0].norm_sqr() + va[1].norm_sqr() >= vb[0].norm_sqr() + vb[1].norm_sqr() {
        va
    } else {
        vb
    };
    normalize_first_nonzero(&mut seed);
    finish_bloch(lambda, k, kprime, seed, rescale)
}

fn bloch_at_touching(
    bg: &PeriodicBackground,
    bs: &BandStructure,
    t: &Touching,
    rescale: Option<Complex64>,
) -> Result<BlochData> {
    let (k, kprime) = quasimomentum_at(bg, bs, t.energy)?;
    let scale = bs.scale();
    let h = 1e-6 * scale;
    let mp = monodromy(bg, t.energy + h)?;
    let mm = monodromy(bg, t.energy - h)?;
    // dM/dλ; its eigenvectors are the limiting Bloch directions.
    let m1 = [
        [(mp[0][0] - mm[0][0]) / (2.0 * h), (mp[0][1] - mm[0][1]) / (2.0 * h)],
        [(mp[1][0] - mm[1][0]) / (2.0 * h), (mp[1][1] - mm[1][1]) / (2.0 * h)],
    ];
    let tr = m1[0][0] + m1[1][1];
    let det = m1[0][0] * m1[1][1] - m1[0][1] * m1[1][0];
    let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    let mu = Complex64::new(tr / 2.0, 0.0) + disc;
    let va = [Complex64::new(m1[0][1], 0.0), mu - m1[0][0]];
    let vb = [mu - m1[1][1], Complex64::new(m1[1][0], 0.0)];
    let mut seed = if va[0].norm_sqr() + va[1].norm_sqr() >= vb[0].norm_sqr() + vb[1].norm_sqr() {
        va
    } else {
        vb
    };
    normalize_first_nonzero(&mut seed);
    finish_bloch(t.energy, k, kprime, seed, rescale)
}

fn finish_bloch(
    lambda: f64,
    k: f64,
    kprime: f64,
    mut seed: [Complex64; 2],
    rescale: Option<Complex64>,
) -> Result<BlochData> {
    let mut w = wronskian_of_seed(&seed);
    if w.im < 0.0 {
        seed = [seed[0].conj(), seed[1].conj()];
        w = wronskian_of_seed(&seed);
    }
    let seed_scale = (seed[0].norm_sqr() + seed[1].norm_sqr()).max(1e-300);
    if w.norm() < 1e-10 * seed_scale {
        return Err(Error::NearEdge {
            disc_abs: 2.0, // degenerate eigenvector; treated as an edge condition
        });
    }
    if let Some(s) = rescale {
        seed[0] *= s;
        seed[1] *= s;
        w *= s.norm_sqr();
    }
    Ok(BlochData {
        lambda,
        k,
        psi_plus_seed: seed,
        wronskian: w,
        kprime,
    })
}

/// One-period Bloch trajectory on a uniform grid with Floquet continuation,
/// for pointwise evaluation of ψ₊(x), ψ₊'(x) at arbitrary x ≥ 0.
pub struct BlochWave {
    period: f64,
    k: f64,
    h: f64,
    /// (Re ψ, Im ψ, Re ψ', Im ψ') at uniform nodes over [0, a].
    nodes: Vec<[f64; 4]>,
}

impl BlochWave {
    pub fn new(bg: &PeriodicBackground, bloch: &BlochData) -> Self {
        let a = bg.period();
        let lambda = bloch.lambda;
        let per_osc = 2.0 * PI / lambda.abs().sqrt().max(1.0);
        let n = ((a / per_osc * 200.0).ceil() as usize).clamp(4096, 65_536);
        let s = bloch.psi_plus_seed;
        let y0 = [s[0].re, s[0].im, s[1].re, s[1].im];
        let mut field = |x: f64, y: &[f64; 4]| {
            let v = bg.eval(x) - lambda;
            [y[2], y[3], v * y[0], v * y[1]]
        };
        let nodes = rk4_uniform(&mut field, (0.0, a), y0, n);
        BlochWave {
            period: a,
            k: bloch.k,
            h: a / n as f64,
            nodes,
        }
    }

    /// ψ₊ and ψ₊' at x, using ψ₊(x + ma) = e^{ikm} ψ₊(x).
    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let m = (x / self.period).floor();
        let r = x - m * self.period;
        let phase = Complex64::from_polar(1.0, self.k * m);
        let (psi, dpsi) = self.eval_base(r.clamp(0.0, self.period));
        (phase * psi, phase * dpsi)
    }

    fn eval_base(&self, r: f64) -> (Complex64, Complex64) {
        let n = self.nodes.len() - 1;
        let t = (r / self.h).min(n as f64 - 1e-9);
        let i = (t.floor() as usize).min(n - 1);
        let s = t - i as f64;
        let y0 = &self.nodes[i];
        let y1 = &self.nodes[i + 1];
        // Cubic Hermite in each component pair using the stored derivative.
        let hh = self.h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let val = |f0: f64, d0: f64, f1: f64, d1: f64| {
            h00 * f0 + h10 * hh * d0 + h01 * f1 + h11 * hh * d1
        };
        let psi = Complex64::new(
            val(y0[0], y0[2], y1[0], y1[2]),
            val(y0[1], y0[3], y1[1], y1[3]),
        );
        // Exact derivative of the Hermite interpolant; node densities keep
        // the interpolation error well below the integration tolerance.
        let dh00 = 6.0 * s * (s - 1.0) / hh;
        let dh10 = (1.0 - s) * (1.0 - 3.0 * s);
        let dh01 = -6.0 * s * (s - 1.0) / hh;
        let dh11 = s * (3.0 * s - 2.0);
        let dval = |f0: f64, d0: f64, f1: f64, d1: f64| {
            dh00 * f0 + dh10 * d0 + dh01 * f1 + dh11 * d1
        };
        let dpsi = Complex64::new(
            dval(y0[0], y0[2], y1[0], y1[2]),
            dval(y0[1], y0[3], y1[1], y1[3]),
        );
        (psi, dpsi)
    }
}

/// Fourier coefficient b_n⁺(λ) = (1/a) ∫₀^a ψ₊²(t) e^{-2i(k+πn)t/a} dt,
/// with ψ₊ integrated from its seed alongside the quadrature.
pub fn fourier_bn_plus(
    bg: &PeriodicBackground,
    bloch: &BlochData,
    n: i64,
) -> Result<Complex64> {
    let a = bg.period();
    let freq = -2.0 * (bloch.k + PI * n as f64) / a;
    let s = bloch.psi_plus_seed;
    let integral = bloch_product_integral(bg, bloch.lambda, [s[0], s[1]], freq)?;
    Ok(integral / a)
}

/// ∫₀^a ψ²(t) e^{i·freq·t} dt for the Bloch branch launched from `seed`.
pub fn bloch_product_integral(
    bg: &PeriodicBackground,
    lambda: f64,
    seed: [Complex64; 2],
    freq: f64,
) -> Result<Complex64> {
    let a = bg.period();
    let y0 = [seed[0].re, seed[0].im, seed[1].re, seed[1].im, 0.0, 0.0];
    let mut field = |x: f64, y: &[f64; 6]| {
        let v = bg.eval(x) - lambda;
        let psi = Complex64::new(y[0], y[1]);
        let ph = Complex64::from_polar(1.0, freq * x);
        let integrand = psi * psi * ph;
        [y[2], y[3], v * y[0], v * y[1], integrand.re, integrand.im]
    };
    let opt = OdeOptions {
        rtol: 1e-12,
        max_step: hill_max_step(a, lambda).min(2.0 * PI / freq.abs().max(1e-300) / 20.0),
        ..Default::default()
    };
    let (y, _) = integrate_observed(&mut field, (0.0, a), y0, &opt, &mut |_, _, _| {})?;
    Ok(Complex64::new(y[4], y[5]))
}
