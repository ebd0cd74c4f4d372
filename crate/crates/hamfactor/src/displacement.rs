//! The displacing Hamiltonian: an autonomous map translating the ball `B(r)`
//! along `x_1` so that its iterates are pairwise disjoint.
//!
//! The 1-D profile is `H_1(y) = L * y * plateau(y; -r, r, eps)`, so
//! `H_1' = L` exactly on `[-r, r]` and `H_1 = 0` for `|y| > r + eps`. The
//! full Hamiltonian multiplies the profile by cutoffs that equal 1 on a tube
//! around the translation range:
//!
//! ```text
//! H(z) = H_1(y_1) * plateau(x_1; -(m+2)L - r, (m+2)L + r, 1)
//!               * prod_{i>=2} plateau(x_i; -r, r, 1) * plateau(y_i; -r, r, 1)
//! ```
//!
//! On the closed tube every cutoff is constant 1 with vanishing derivative,
//! so the Hamiltonian vector field is exactly `L * d/dx_1` there: the time-1
//! map translates tube points by `L` with no integration error beyond
//! rounding. The tube's `x_1` extent covers every position reachable from
//! `B(r)` by up to `m + 2` applications, one spare power beyond what the
//! construction uses.
//!
//! The slope `L` must exceed `2r` for translated balls to be disjoint; a
//! slope of `r` (translating by `r` per application) moves the ball by less
//! than its own diameter, which [`verify_displacement`] detects.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::HamiltonianExpr;
use crate::geometry::{
    evaluate_word, DiffeoWord, FlowError, IntegratorConfig, Letter, LetterRole,
};

/// Parameters of the displacement construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplacementSpec {
    /// Radius of the ball containing every factor's support.
    pub r: f64,
    /// Number of factors to displace past each other.
    pub m: usize,
    /// Half-dimension of the phase space.
    pub n: usize,
    /// Translation length per application of `h`; must exceed `2r`.
    pub l: f64,
    /// Transition width of the profile plateau, in `(0, 1]`.
    pub eps: f64,
}

/// Invalid displacement parameters.
#[derive(Debug, Clone, thiserror::Error)]
pub enum SpecError {
    #[error("ball radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("need at least one factor")]
    NoFactors,
    #[error("half-dimension must be positive")]
    ZeroDimension,
    #[error("translation length {l} does not exceed the ball diameter {diameter}; the iterated balls would overlap")]
    TranslationTooShort { l: f64, diameter: f64 },
    #[error("profile transition width must lie in (0, 1], got {0}")]
    BadTransitionWidth(f64),
}

impl DisplacementSpec {
    /// Default construction: `L = 3r`, `eps = 1`.
    pub fn new(r: f64, m: usize, n: usize) -> Result<Self, SpecError> {
        Self::with_overrides(r, m, n, None, None)
    }

    /// Construction with explicit overrides, still validating `L > 2r`.
    pub fn with_overrides(
        r: f64,
        m: usize,
        n: usize,
        l: Option<f64>,
        eps: Option<f64>,
    ) -> Result<Self, SpecError> {
        let spec = Self::unvalidated(r, m, n, l, eps)?;
        if spec.l <= 2.0 * spec.r {
            return Err(SpecError::TranslationTooShort {
                l: spec.l,
                diameter: 2.0 * spec.r,
            });
        }
        Ok(spec)
    }

    /// Skip the `L > 2r` check; used only to demonstrate that short
    /// translations fail to displace.
    pub fn unvalidated(
        r: f64,
        m: usize,
        n: usize,
        l: Option<f64>,
        eps: Option<f64>,
    ) -> Result<Self, SpecError> {
        if !(r > 0.0) {
            return Err(SpecError::NonPositiveRadius(r));
        }
        if m == 0 {
            return Err(SpecError::NoFactors);
        }
        if n == 0 {
            return Err(SpecError::ZeroDimension);
        }
        let eps = eps.unwrap_or(1.0);
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(SpecError::BadTransitionWidth(eps));
        }
        Ok(DisplacementSpec {
            r,
            m,
            n,
            l: l.unwrap_or(3.0 * r),
            eps,
        })
    }

    /// `x_1` extent of the tube on which all cutoffs equal 1.
    pub fn tube_x1(&self) -> [f64; 2] {
        let reach = (self.m as f64 + 2.0) * self.l + self.r;
        [-reach, reach]
    }

    /// Whether `z` lies in the closed tube (cutoffs identically 1, so the
    /// displacement field is exactly `L * d/dx_1`). `slack` absorbs
    /// integrator overshoot when checking computed trajectories.
    pub fn tube_contains(&self, z: &[f64], slack: f64) -> bool {
        let [lo, hi] = self.tube_x1();
        if z[0] < lo - slack || z[0] > hi + slack {
            return false;
        }
        z.iter().skip(1).all(|v| v.abs() <= self.r + slack)
    }

    /// Whether the translated balls `B(r) + kL e_{x1}`, `k = 0..m`, are
    /// pairwise disjoint. Pure geometry: consecutive centers sit `L` apart.
    pub fn analytically_disjoint(&self) -> bool {
        self.l > 2.0 * self.r
    }
}

/// `step((v-a+eps)/eps) * step((b+eps-v)/eps)`: a C-infinity plateau that is
/// exactly 1 on `[a, b]` and exactly 0 outside `[a-eps, b+eps]`.
pub fn plateau(v: &HamiltonianExpr, a: f64, b: f64, eps: f64) -> HamiltonianExpr {
    assert!(a < b, "plateau needs a < b");
    assert!(eps > 0.0, "plateau needs a positive transition width");
    let n = v.half_dim();
    let eps_const = HamiltonianExpr::constant(n, eps);
    let rising = v
        .clone()
        .offset(-(a - eps))
        .div(eps_const.clone())
        .expect("positive constant divisor");
    let falling = HamiltonianExpr::constant(n, b + eps)
        .sub(v.clone())
        .div(eps_const)
        .expect("positive constant divisor");
    rising.step().mul(falling.step())
}

/// The 1-D profile `H_1(y_1) = L * y_1 * plateau(y_1; -r, r, eps)`.
pub fn build_profile(spec: &DisplacementSpec) -> HamiltonianExpr {
    let y1 = HamiltonianExpr::y(spec.n, 1);
    let cutoff = plateau(&y1, -spec.r, spec.r, spec.eps);
    y1.scale(spec.l).mul(cutoff)
}

/// The full displacing Hamiltonian on R^2n; see the module docs.
pub fn build_displacement_hamiltonian(spec: &DisplacementSpec) -> HamiltonianExpr {
    let mut h = build_profile(spec);
    let [lo, hi] = spec.tube_x1();
    h = h.mul(plateau(&HamiltonianExpr::x(spec.n, 1), lo, hi, 1.0));
    for i in 2..=spec.n {
        h = h.mul(plateau(&HamiltonianExpr::x(spec.n, i), -spec.r, spec.r, 1.0));
        h = h.mul(plateau(&HamiltonianExpr::y(spec.n, i), -spec.r, spec.r, 1.0));
    }
    h
}

/// The time-1 word of the displacing Hamiltonian.
pub fn displacement_word(spec: &DisplacementSpec) -> DiffeoWord {
    let h = build_displacement_hamiltonian(spec);
    DiffeoWord::new(vec![Letter::with_role(h, 1.0, LetterRole::Displacing)])
        .expect("displacement Hamiltonian has a bounded support box")
}

/// Outcome of the displacement verification.
#[derive(Debug, Clone, Serialize)]
pub struct DisplacementReport {
    pub samples: usize,
    /// Iterates checked: `h^k` for `k = 0..=powers`.
    pub powers: usize,
    /// Max over samples and `k` of `|h^k(z) - (z + kL e_{x1})| / max(k, 1)`,
    /// i.e. translation error per application.
    pub max_translation_deviation: f64,
    /// Minimum distance between distinct image clouds.
    pub min_cloud_separation: f64,
    /// The geometric gap `L - 2r` the clouds must respect.
    pub required_separation: f64,
    /// `L > 2r`, the exact disjointness criterion.
    pub analytic_disjoint: bool,
    /// Translation exactness at `1e-6` per application.
    pub translation_pass: bool,
    /// Overall verdict: analytic disjointness, sampled separation, and
    /// translation exactness all hold.
    pub pass: bool,
}

/// Sample `B(r)` (interior and boundary sphere), iterate the displacement
/// word, and check translation exactness and pairwise cloud separation for
/// `h^k`, `k = 0..=m+1`.
pub fn verify_displacement(
    h: &DiffeoWord,
    spec: &DisplacementSpec,
    samples: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<DisplacementReport, FlowError> {
    assert!(samples >= 1);
    let dim = 2 * spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(samples);
    // Half uniform in the ball, half on the sphere where the separation
    // bound is attained.
    while points.len() < samples {
        let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-spec.r..=spec.r)).collect();
        let norm: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= spec.r {
            if points.len() % 2 == 0 && norm > 0.0 {
                points.push(z.iter().map(|v| v * spec.r / norm).collect());
            } else {
                points.push(z);
            }
        }
    }

    let powers = spec.m + 1;
    let mut clouds: Vec<Vec<Vec<f64>>> = vec![points.clone()];
    let mut max_dev: f64 = 0.0;
    for k in 1..=powers {
        let prev = &clouds[k - 1];
        let mut next = Vec::with_capacity(prev.len());
        for z in prev {
            next.push(evaluate_word(h, z, cfg)?);
        }
        for (z0, zk) in points.iter().zip(&next) {
            let mut dev: f64 = 0.0;
            for j in 0..dim {
                let expect = if j == 0 {
                    z0[j] + k as f64 * spec.l
                } else {
                    z0[j]
                };
                dev = dev.max((zk[j] - expect).abs());
            }
            max_dev = max_dev.max(dev / k as f64);
        }
        clouds.push(next);
    }

    let mut min_sep = f64::INFINITY;
    for a in 0..=powers {
        for b in (a + 1)..=powers {
            for p in &clouds[a] {
                for q in &clouds[b] {
                    let d: f64 = p
                        .iter()
                        .zip(q)
                        .map(|(u, v)| (u - v) * (u - v))
                        .sum::<f64>()
                        .sqrt();
                    min_sep = min_sep.min(d);
                }
            }
        }
    }

    let required = spec.l - 2.0 * spec.r;
    let translation_pass = max_dev <= 1e-6;
    let analytic = spec.analytically_disjoint();
    let separation_pass = min_sep >= required - 1e-3;
    Ok(DisplacementReport {
        samples,
        powers,
        max_translation_deviation: max_dev,
        min_cloud_separation: min_sep,
        required_separation: required,
        analytic_disjoint: analytic,
        translation_pass,
        pass: analytic && separation_pass && translation_pass,
    })
}
