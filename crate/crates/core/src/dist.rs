//! Distribution functions on `[0,∞)`: CDF evaluation, pseudo-inverses,
//! Laplace transforms, and the strict-dominance order with its witness
//! construction.
//!
//! The pseudo-inverse is `φ⁻¹(s) = sup{t ≥ 0 : φ(t) < s}` with `sup ∅ = 0`;
//! it is the inverse-transform sampler and, applied to a shared uniform
//! field, the coupling device for comparing potentials sitewise.

use crate::error::{Error, Result};

/// Absolute tolerance of the bisection fallback for pseudo-inverses.
pub const PINV_BISECT_TOL: f64 = 1e-12;
/// Relative tolerance of the adaptive quadrature behind generic Laplace transforms.
pub const LAPLACE_QUAD_RELTOL: f64 = 1e-10;
/// Default grid resolution for numeric CDF comparisons and measure integrals.
pub const DEFAULT_GRID_POINTS: usize = 10_000;

/// A distribution function on `[0,∞)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    /// Unit mass at `value ≥ 0`.
    Point { value: f64 },
    /// Finite support: strictly increasing values with positive probabilities
    /// summing to 1.
    Atomic { atoms: Vec<(f64, f64)> },
    /// Exponential with rate `r > 0`.
    Exponential { rate: f64 },
    /// Uniform on `[lo, hi]`, `0 ≤ lo < hi`.
    Uniform { lo: f64, hi: f64 },
    /// `base` translated right by `shift ≥ 0`; realizes the potential `ω + λ`.
    Shifted {
        base: Box<DistributionSpec>,
        shift: f64,
    },
}

impl DistributionSpec {
    pub fn point(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Domain(format!("point mass at {value} < 0")));
        }
        Ok(DistributionSpec::Point { value })
    }

    pub fn atomic(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Domain("atomic spec needs at least one atom".into()));
        }
        let mut total = 0.0;
        for window in atoms.windows(2) {
            if window[0].0 >= window[1].0 || window[0].0.is_nan() || window[1].0.is_nan() {
                return Err(Error::Domain(
                    "atomic values must be strictly increasing".into(),
                ));
            }
        }
        for &(v, p) in &atoms {
            if v.is_nan() || v < 0.0 {
                return Err(Error::Domain(format!("atom value {v} < 0")));
            }
            if p.is_nan() || p <= 0.0 {
                return Err(Error::Domain(format!("atom probability {p} not positive")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "atom probabilities sum to {total}, not 1"
            )));
        }
        Ok(DistributionSpec::Atomic { atoms })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if rate.is_nan() || rate <= 0.0 {
            return Err(Error::Domain(format!("exponential rate {rate} not > 0")));
        }
        Ok(DistributionSpec::Exponential { rate })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo < 0.0 || lo >= hi {
            return Err(Error::Domain(format!("uniform bounds [{lo},{hi}] invalid")));
        }
        Ok(DistributionSpec::Uniform { lo, hi })
    }

    /// The distribution of `X + λ`; nested shifts are flattened.
    pub fn shift_by(&self, lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda < 0.0 {
            return Err(Error::Domain(format!("shift {lambda} < 0")));
        }
        Ok(match self {
            DistributionSpec::Shifted { base, shift } => DistributionSpec::Shifted {
                base: base.clone(),
                shift: shift + lambda,
            },
            other => DistributionSpec::Shifted {
                base: Box::new(other.clone()),
                shift: lambda,
            },
        })
    }

    /// Stable identifier used in CSV rows and provenance records.
    pub fn id(&self) -> String {
        match self {
            DistributionSpec::Point { value } => format!("point({value})"),
            DistributionSpec::Atomic { atoms } => {
                let parts: Vec<String> = atoms.iter().map(|(v, p)| format!("{v}:{p}")).collect();
                format!("atomic({})", parts.join(","))
            }
            DistributionSpec::Exponential { rate } => format!("exponential({rate})"),
            DistributionSpec::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
            DistributionSpec::Shifted { base, shift } => {
                format!("shifted({},+{})", base.id(), shift)
            }
        }
    }

    /// `φ(t)`, defined for every real `t` (0 below the support).
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            DistributionSpec::Point { value } => {
                if t >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::Atomic { atoms } => {
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    if v <= t {
                        acc += p;
                    } else {
                        break;
                    }
                }
                acc.min(1.0)
            }
            DistributionSpec::Exponential { rate } => {
                if t < 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * t).exp()
                }
            }
            DistributionSpec::Uniform { lo, hi } => {
                if t < *lo {
                    0.0
                } else if t >= *hi {
                    1.0
                } else {
                    (t - lo) / (hi - lo)
                }
            }
            DistributionSpec::Shifted { base, shift } => base.cdf(t - shift),
        }
    }

    /// `φ⁻¹(s) = sup{t ≥ 0 : φ(t) < s}` for `s ∈ (0,1)`, `sup ∅ = 0`.
    pub fn pseudo_inverse(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!(
                "pseudo-inverse needs s in (0,1), got {s}"
            )));
        }
        Ok(match self {
            DistributionSpec::Point { value } => *value,
            DistributionSpec::Atomic { atoms } => {
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if acc >= s {
                        return Ok(v);
                    }
                }
                // Rounding left acc a hair below 1.
                atoms.last().unwrap().0
            }
            DistributionSpec::Exponential { rate } => -(1.0 - s).ln() / rate,
            DistributionSpec::Uniform { lo, hi } => lo + s * (hi - lo),
            DistributionSpec::Shifted { base, shift } => base.pseudo_inverse(s)? + shift,
        })
    }

    /// Bisection evaluation of the sup-definition straight off the CDF.
    ///
    /// Closed forms above are the production path; this generic fallback is
    /// kept callable so the two routes can be cross-checked.
    pub fn pseudo_inverse_bisect(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!(
                "pseudo-inverse needs s in (0,1), got {s}"
            )));
        }
        if self.cdf(0.0) >= s {
            return Ok(0.0); // sup ∅ = 0
        }
        // Find hi with φ(hi) ≥ s.
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.cdf(hi) < s {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Numeric("pseudo-inverse bracket not found".into()));
            }
        }
        // Invariant: φ(lo) < s ≤ φ(hi).
        while hi - lo > PINV_BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Laplace transform `L(k) = E[e^{-kX}] = ∫₀¹ e^{-k φ⁻¹(s)} ds`, `k ≥ 0`.
    pub fn laplace_transform(&self, k: f64) -> f64 {
        assert!(k >= 0.0, "laplace transform needs k >= 0");
        match self {
            DistributionSpec::Point { value } => (-k * value).exp(),
            DistributionSpec::Atomic { atoms } => {
                atoms.iter().map(|&(v, p)| p * (-k * v).exp()).sum()
            }
            DistributionSpec::Exponential { rate } => rate / (rate + k),
            DistributionSpec::Shifted { base, shift } => {
                (-k * shift).exp() * base.laplace_transform(k)
            }
            // No closed form dispatched: integrate e^{-k φ⁻¹(s)} over s.
            DistributionSpec::Uniform { .. } => self.laplace_by_quadrature(k),
        }
    }

    /// Adaptive Simpson integration of `s ↦ e^{-k φ⁻¹(s)}` on (0,1).
    pub fn laplace_by_quadrature(&self, k: f64) -> f64 {
        if k == 0.0 {
            return 1.0;
        }
        let f = |s: f64| {
            let s = s.clamp(1e-15, 1.0 - 1e-15);
            (-k * self.pseudo_inverse(s).expect("s in (0,1)")).exp()
        };
        adaptive_simpson(&f, 0.0, 1.0, LAPLACE_QUAD_RELTOL)
    }

    /// `E[X]`.
    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Point { value } => *value,
            DistributionSpec::Atomic { atoms } => atoms.iter().map(|&(v, p)| v * p).sum(),
            DistributionSpec::Exponential { rate } => 1.0 / rate,
            DistributionSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistributionSpec::Shifted { base, shift } => base.mean() + shift,
        }
    }

    /// Essential infimum of the support.
    pub fn ess_inf(&self) -> f64 {
        match self {
            DistributionSpec::Point { value } => *value,
            DistributionSpec::Atomic { atoms } => atoms[0].0,
            DistributionSpec::Exponential { .. } => 0.0,
            DistributionSpec::Uniform { lo, .. } => *lo,
            DistributionSpec::Shifted { base, shift } => base.ess_inf() + shift,
        }
    }

    /// Finite atom list when the CDF is a step function, shifts applied.
    fn as_atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            DistributionSpec::Point { value } => Some(vec![(*value, 1.0)]),
            DistributionSpec::Atomic { atoms } => Some(atoms.clone()),
            DistributionSpec::Shifted { base, shift } => base
                .as_atoms()
                .map(|atoms| atoms.into_iter().map(|(v, p)| (v + shift, p)).collect()),
            _ => None,
        }
    }

    /// An upper end for comparison grids: the `1 - 1e-12` quantile.
    fn support_hull_hi(&self) -> f64 {
        self.pseudo_inverse(1.0 - 1e-12).unwrap_or(0.0)
    }
}

/// How a dominance verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictMethod {
    /// Decided on the merged jump set of two step CDFs.
    Exact,
    /// Decided numerically on a dense grid; resolution recorded.
    Grid { points: usize },
}

/// Outcome of a strict-dominance comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceVerdict {
    pub dominates: bool,
    pub method: VerdictMethod,
}

/// `F` strictly dominates `G` iff `F ≤ G` pointwise and `F ≢ G`.
pub fn strictly_dominates(f: &DistributionSpec, g: &DistributionSpec) -> DominanceVerdict {
    strictly_dominates_grid(f, g, DEFAULT_GRID_POINTS)
}

/// Grid-resolution-parameterized variant of [`strictly_dominates`].
pub fn strictly_dominates_grid(
    f: &DistributionSpec,
    g: &DistributionSpec,
    grid_points: usize,
) -> DominanceVerdict {
    if let (Some(fa), Some(ga)) = (f.as_atoms(), g.as_atoms()) {
        // Step CDFs: compare at every merged jump point. Between jumps both
        // are constant, below the first jump both are 0, so this is exact.
        let mut ts: Vec<f64> = fa.iter().chain(ga.iter()).map(|&(v, _)| v).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        let mut le = true;
        let mut strict = false;
        for &t in &ts {
            let (cf, cg) = (f.cdf(t), g.cdf(t));
            if cf > cg {
                le = false;
                break;
            }
            if cf < cg {
                strict = true;
            }
        }
        return DominanceVerdict {
            dominates: le && strict,
            method: VerdictMethod::Exact,
        };
    }
    // Numeric path: dense grid over the joint support hull plus a geometric
    // tail sweep; verdicts carry the grid flag.
    let hi = f.support_hull_hi().max(g.support_hull_hi()).max(1e-6);
    let mut le = true;
    let mut strict = false;
    let mut check = |t: f64| {
        let (cf, cg) = (f.cdf(t), g.cdf(t));
        if cf > cg + 1e-12 {
            le = false;
        }
        if cf < cg - 1e-12 {
            strict = true;
        }
    };
    for i in 0..grid_points {
        check(hi * i as f64 / (grid_points - 1) as f64);
    }
    let mut t = hi;
    for _ in 0..16 {
        t *= 2.0;
        check(t);
    }
    DominanceVerdict {
        dominates: le && strict,
        method: VerdictMethod::Grid {
            points: grid_points,
        },
    }
}

/// The quantities extracted from a strict-dominance pair: a separation point
/// `t'`, the half-gap `ε`, the right-continuity slack `η₀`, and a closed
/// interval `𝓗 ⊂ (0,1)` on which `F⁻¹ - G⁻¹ ≥ η₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceWitness {
    pub t_prime: f64,
    pub epsilon: f64,
    pub eta0: f64,
    pub h_lo: f64,
    pub h_hi: f64,
}

impl DominanceWitness {
    pub fn h_measure(&self) -> f64 {
        self.h_hi - self.h_lo
    }

    fn check(&self) -> Result<()> {
        let ok = self.h_lo < self.h_hi
            && self.h_lo > 0.0
            && self.h_hi < 1.0
            && self.eta0 > 0.0
            && self.epsilon > 0.0
            && self.h_measure() > 0.0
            && self.h_measure() < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Numeric(format!("degenerate witness {self:?}")))
        }
    }
}

/// Construct the dominance witness.
///
/// `t'` is the smallest merged-jump/grid point with `G(t') > F(t')`;
/// `ε = (G(t') - F(t'))/2`; `η₀` is half the largest right-continuity slack
/// `sup{η : F(t'+η) ≤ F(t') + ε}` (capped at 1, located by bisection); and
/// `𝓗` is the middle third of `[F(t'+η₀), G(t')]`.
pub fn dominance_witness(f: &DistributionSpec, g: &DistributionSpec) -> Result<DominanceWitness> {
    if !strictly_dominates(f, g).dominates {
        return Err(Error::Precondition(format!(
            "{} does not strictly dominate {}",
            f.id(),
            g.id()
        )));
    }
    let t_prime = smallest_separation_point(f, g)?;
    let epsilon = 0.5 * (g.cdf(t_prime) - f.cdf(t_prime));
    debug_assert!(epsilon > 0.0);

    // sup{η in (0,1] : F(t'+η) ≤ F(t') + ε}, found by bisection on the
    // monotone condition; half of it leaves slack against grid error.
    let threshold = f.cdf(t_prime) + epsilon;
    let eta_sup = if f.cdf(t_prime + 1.0) <= threshold {
        1.0
    } else {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while hi - lo > PINV_BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            if f.cdf(t_prime + mid) <= threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let eta0 = 0.5 * eta_sup;

    let f_up = f.cdf(t_prime + eta0);
    let g_tp = g.cdf(t_prime);
    let gap = g_tp - f_up;
    if gap <= 0.0 {
        return Err(Error::Numeric(
            "witness interval collapsed; CDF gap nonpositive".into(),
        ));
    }
    let witness = DominanceWitness {
        t_prime,
        epsilon,
        eta0,
        h_lo: f_up + gap / 3.0,
        h_hi: g_tp - gap / 3.0,
    };
    witness.check()?;
    Ok(witness)
}

fn smallest_separation_point(f: &DistributionSpec, g: &DistributionSpec) -> Result<f64> {
    if let (Some(fa), Some(ga)) = (f.as_atoms(), g.as_atoms()) {
        let mut ts: Vec<f64> = fa.iter().chain(ga.iter()).map(|&(v, _)| v).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        for &t in &ts {
            if g.cdf(t) > f.cdf(t) {
                return Ok(t);
            }
        }
    } else {
        let hi = f.support_hull_hi().max(g.support_hull_hi()).max(1e-6);
        let n = DEFAULT_GRID_POINTS;
        for i in 0..n {
            let t = hi * i as f64 / (n - 1) as f64;
            if g.cdf(t) > f.cdf(t) + 1e-9 {
                return Ok(t);
            }
        }
    }
    Err(Error::Numeric("no separation point found".into()))
}

/// Lebesgue measure of `{s ∈ (0,1) : F⁻¹(s) - G⁻¹(s) ≥ η₀}` by midpoint-grid
/// integration; the coupling probability `P(ω_F(0) ≥ ω_G(0) + η₀)`.
pub fn coupling_gap_measure(
    f: &DistributionSpec,
    g: &DistributionSpec,
    eta0: f64,
    grid_points: usize,
) -> f64 {
    let mut hits = 0usize;
    for i in 0..grid_points {
        let s = (i as f64 + 0.5) / grid_points as f64;
        let df = f.pseudo_inverse(s).expect("s in (0,1)");
        let dg = g.pseudo_inverse(s).expect("s in (0,1)");
        if df - dg >= eta0 {
            hits += 1;
        }
    }
    hits as f64 / grid_points as f64
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    // Scale the absolute budget by a magnitude estimate; the integrand here
    // lives in (0,1] so this is close to a relative tolerance.
    let tol = rel_tol * whole.abs().max(1e-300);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}
