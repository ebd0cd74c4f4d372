//! The Calabi value: the plain volume integral of a generating Hamiltonian.
//!
//! On R^2n the map sending an autonomous diffeomorphism to the integral of
//! its Hamiltonian is additive under composition and invariant under
//! conjugation by volume-preserving maps; any constant normalization is
//! immaterial for kernel membership, so none is applied.
//!
//! Integrals are composite midpoint quadrature over the structural support
//! box. For the C-infinity compactly supported integrands of this crate the
//! midpoint rule converges faster than any polynomial order, and every
//! reported value carries a refinement delta against the half-spacing grid.
//!
//! [`balance_calabi`] implements the zero-Calabi variant: when the input
//! factors sum to Calabi zero, the displacing Hamiltonian is compensated by
//! a remote bump `beta`, placed in a box disjoint from the tube and from
//! every support the construction touches, with amplitude solving
//! `Cal(H) - kappa Cal(beta) = 0`. The tube dynamics are untouched, so the
//! plan's maps on the working region are identical while `Cal(A1') =
//! Cal(A2') = 0` (up to quadrature) and `Cal(A3') = sum Cal(F_i) = 0`.

use serde::Serialize;

use crate::displacement::DisplacementSpec;
use crate::expr::{HamiltonianExpr, SupportBound};
use crate::factorization::{build_plan_with_displacing, FactorizationPlan, PlanError};
use crate::geometry::{evaluate_word, FlowError, IntegratorConfig};

/// A quadrature result with its self-consistency refinement.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CalabiValue {
    pub value: f64,
    /// Requested grid spacing (per axis, before rounding to the box).
    pub grid_spacing: f64,
    /// `|value - value at half spacing|`.
    pub refinement_delta: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CalabiError {
    #[error("integrand has no certified bounded support box")]
    UnboundedSupport,
    #[error(
        "factors are not in the Calabi kernel: sum of factor values is {measured}, tolerance {tolerance}"
    )]
    NotInKernel { measured: f64, tolerance: f64 },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Default quadrature spacing for a construction of ball radius `r`.
///
/// The bump integrands lose accuracy sub-exponentially with spacing
/// (midpoint error tracks their Fourier decay); 128 cells across `r + 1`
/// keeps the absolute error of every reported integral below 1e-8, which
/// the additivity checks need.
pub fn default_grid_spacing(r: f64) -> f64 {
    (r + 1.0) / 128.0
}

/// Composite midpoint quadrature of `f` over its support box.
fn quadrature(f: &HamiltonianExpr, spacing: f64) -> Result<f64, CalabiError> {
    assert!(spacing > 0.0, "grid spacing must be positive");
    match f.support_bound() {
        SupportBound::Empty => Ok(0.0),
        SupportBound::Unbounded => Err(CalabiError::UnboundedSupport),
        SupportBound::Box(ivs) => Ok(quadrature_over_box(&ivs, spacing, |z| f.eval(z))),
    }
}

/// Midpoint rule over an explicit box; the grid is row-major and summation
/// order is fixed, keeping results bit-reproducible.
fn quadrature_over_box(
    ivs: &[[f64; 2]],
    spacing: f64,
    mut integrand: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let dim = ivs.len();
    let mut counts = Vec::with_capacity(dim);
    let mut steps = Vec::with_capacity(dim);
    let mut weight = 1.0;
    for [lo, hi] in ivs {
        let width = hi - lo;
        debug_assert!(width >= 0.0);
        let count = ((width / spacing).ceil() as usize).max(1);
        let h = width / count as f64;
        counts.push(count);
        steps.push(h);
        weight *= h;
    }
    let mut index = vec![0usize; dim];
    let mut z = vec![0.0; dim];
    let mut sum = 0.0;
    loop {
        for j in 0..dim {
            z[j] = ivs[j][0] + (index[j] as f64 + 0.5) * steps[j];
        }
        sum += integrand(&z);
        let mut axis = 0;
        loop {
            index[axis] += 1;
            if index[axis] < counts[axis] {
                break;
            }
            index[axis] = 0;
            axis += 1;
            if axis == dim {
                return sum * weight;
            }
        }
    }
}

/// Calabi value of a compactly supported Hamiltonian, with refinement check.
pub fn calabi(f: &HamiltonianExpr, grid_spacing: f64) -> Result<CalabiValue, CalabiError> {
    let value = quadrature(f, grid_spacing)?;
    let finer = quadrature(f, grid_spacing / 2.0)?;
    Ok(CalabiValue {
        value,
        grid_spacing,
        refinement_delta: (value - finer).abs(),
    })
}

/// Numeric check that `Cal(H o g^{-1}) = Cal(H)`: the correction integral
/// `int (H(g^{-1} z) - H(z)) dz` over the region where `g` acts must vanish.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VolumeCheck {
    /// Reference `Cal(H)` at the base spacing.
    pub reference: f64,
    /// `Cal(H o g^{-1})` sampled at the coarse spacing.
    pub sampled: f64,
    pub coarse_spacing: f64,
    pub abs_error: f64,
    pub ok: bool,
}

/// Calabi bookkeeping for a factorization plan.
#[derive(Debug, Clone, Serialize)]
pub struct CalabiReport {
    pub grid_spacing: f64,
    pub factors: Vec<CalabiValue>,
    pub factor_sum: f64,
    pub glued: CalabiValue,
    /// `|Cal(G) - sum Cal(F_i)|`, additivity over the disjoint summands.
    pub glued_vs_sum_error: f64,
    pub glued_vs_sum_ok: bool,
    /// `Cal(H)` of the displacing Hamiltonian.
    pub displacing: CalabiValue,
    /// Calabi values of the three factors: `A1` carries `H o g^{-1}` whose
    /// integral equals `Cal(H)` by volume preservation; `A2` carries `-H`;
    /// `A3` carries the glued Hamiltonian.
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `Cal(A1) + Cal(A2)`, identically zero by construction.
    pub a1_plus_a2: f64,
    pub volume_check: Option<VolumeCheck>,
}

/// Compute the report; `volume_check` additionally integrates `H o g^{-1}`
/// through actual word evaluations on a coarse grid (slow but independent).
pub fn calabi_of_plan(
    plan: &FactorizationPlan,
    grid_spacing: f64,
    volume_check: bool,
    cfg: &IntegratorConfig,
) -> Result<CalabiReport, CalabiError> {
    let mut factors = Vec::with_capacity(plan.factors.len());
    let mut factor_sum = 0.0;
    for f in &plan.factors {
        let v = calabi(f, grid_spacing)?;
        factor_sum += v.value;
        factors.push(v);
    }
    let glued = calabi(&plan.glued, grid_spacing)?;
    let glued_vs_sum_error = (glued.value - factor_sum).abs();
    let glued_vs_sum_ok = glued_vs_sum_error <= 1e-6 * factor_sum.abs().max(1.0);
    let displacing = calabi(&plan.displacing, grid_spacing)?;

    let volume_check = if volume_check {
        Some(sampled_volume_check(plan, grid_spacing, cfg)?)
    } else {
        None
    };

    let a1 = displacing.value;
    let a2 = -displacing.value;
    Ok(CalabiReport {
        grid_spacing,
        factors,
        factor_sum,
        glued,
        glued_vs_sum_error,
        glued_vs_sum_ok,
        displacing,
        a1,
        a2,
        a3: glued.value,
        a1_plus_a2: a1 + a2,
        volume_check,
    })
}

/// `g` differs from the identity only inside the conjugate balls
/// `B(r)-box + kL e_{x1}`, `k = -m..-1`; everywhere else `H o g^{-1} = H`.
/// Integrate the difference over the hull of those balls on a coarse grid.
fn sampled_volume_check(
    plan: &FactorizationPlan,
    grid_spacing: f64,
    cfg: &IntegratorConfig,
) -> Result<VolumeCheck, CalabiError> {
    let spec = &plan.spec;
    let m = plan.m() as f64;
    let coarse = 4.0 * grid_spacing;
    let mut hull = vec![[-spec.r, spec.r]; 2 * spec.n];
    hull[0] = [-m * spec.l - spec.r, -spec.l + spec.r];

    let g_inverse = plan.g.invert();
    let mut flow_error: Option<FlowError> = None;
    let correction = quadrature_over_box(&hull, coarse, |z| {
        match evaluate_word(&g_inverse, z, cfg) {
            Ok(w) => plan.displacing.eval(&w) - plan.displacing.eval(z),
            Err(e) => {
                flow_error.get_or_insert(e);
                0.0
            }
        }
    });
    if let Some(e) = flow_error {
        return Err(CalabiError::Flow(e));
    }

    let reference = quadrature(&plan.displacing, grid_spacing)?;
    let sampled = reference + correction;
    let abs_error = correction.abs();
    Ok(VolumeCheck {
        reference,
        sampled,
        coarse_spacing: coarse,
        abs_error,
        ok: abs_error <= 1e-3 * reference.abs().max(1.0),
    })
}

/// A plan whose displacing Hamiltonian has been compensated to Calabi zero.
#[derive(Debug)]
pub struct BalancedPlan {
    pub plan: FactorizationPlan,
    /// Amplitude of the compensating bump.
    pub kappa: f64,
    /// Measured `sum Cal(F_i)` of the inputs.
    pub kernel_sum: f64,
    /// `Cal(H')` after balancing, re-measured.
    pub displacing_residual: f64,
}

/// The compensating bump: a product bump translated far along `y_1`, with
/// box `[-1, 1]` in every coordinate except `y_1 in [c - 1, c + 1]` where
/// `c = r + eps + 2.5`, disjoint from the tube, from `B(r)`, from the glued
/// summands, and from the displacing Hamiltonian's support.
pub fn compensating_bump(spec: &DisplacementSpec) -> HamiltonianExpr {
    let n = spec.n;
    let center = spec.r + spec.eps + 2.5;
    let mut beta = HamiltonianExpr::x(n, 1).bump();
    beta = beta.mul(HamiltonianExpr::y(n, 1).offset(-center).bump());
    for i in 2..=n {
        beta = beta.mul(HamiltonianExpr::x(n, i).bump());
        beta = beta.mul(HamiltonianExpr::y(n, i).bump());
    }
    beta
}

/// Rebuild the plan with `H' = H - kappa * beta` so that `Cal(H') = 0`.
///
/// Requires the input factors to be in the Calabi kernel (their values sum
/// to zero within quadrature tolerance); refuses otherwise, reporting the
/// measured sum.
pub fn balance_calabi(
    plan: &FactorizationPlan,
    grid_spacing: f64,
) -> Result<BalancedPlan, CalabiError> {
    let mut kernel_sum = 0.0;
    let mut scale = 0.0f64;
    for f in &plan.factors {
        let v = calabi(f, grid_spacing)?;
        kernel_sum += v.value;
        scale += v.value.abs();
    }
    let tolerance = 1e-6 * scale.max(1.0);
    if kernel_sum.abs() > tolerance {
        return Err(CalabiError::NotInKernel {
            measured: kernel_sum,
            tolerance,
        });
    }

    let beta = compensating_bump(&plan.spec);
    let cal_h = quadrature(&plan.displacing, grid_spacing)?;
    let cal_beta = quadrature(&beta, grid_spacing)?;
    debug_assert!(cal_beta > 0.0);
    let kappa = cal_h / cal_beta;
    let balanced_h = plan.displacing.clone().sub(beta.scale(kappa));

    let rebuilt =
        build_plan_with_displacing(plan.factors.clone(), plan.spec, balanced_h)?;
    let displacing_residual = quadrature(&rebuilt.displacing, grid_spacing)?.abs();
    Ok(BalancedPlan {
        plan: rebuilt,
        kappa,
        kernel_sum,
        displacing_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::factorization::{plan_factorization, verify_factorization, PlanOverrides};

    #[test]
    fn zero_field_has_zero_value() {
        let v = calabi(&HamiltonianExpr::zero(1), 0.05).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.refinement_delta, 0.0);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let f = parse("y1*bump(x1)*bump(y1)", 1).unwrap();
        let v = calabi(&f, 0.05).unwrap();
        assert!(v.value.abs() <= 1e-10, "value {}", v.value);
    }

    #[test]
    fn unbounded_integrand_rejected() {
        assert!(matches!(
            calabi(&parse("bump(x1)", 1).unwrap(), 0.1),
            Err(CalabiError::UnboundedSupport)
        ));
    }

    #[test]
    fn refinement_delta_shrinks_by_eight() {
        // Richardson self-consistency: halving the (coarse) grid must shrink
        // the delta by well over the conservative 8x.
        let f = parse("bump(x1)*bump(y1)", 1).unwrap();
        let coarse = calabi(&f, 0.2).unwrap();
        let fine = calabi(&f, 0.1).unwrap();
        assert!(coarse.refinement_delta > 0.0);
        assert!(
            fine.refinement_delta <= coarse.refinement_delta / 8.0,
            "coarse {} fine {}",
            coarse.refinement_delta,
            fine.refinement_delta
        );
    }

    #[test]
    fn additivity_on_disjoint_supports() {
        let f = parse("0.5*bump(x1/0.5)*bump(y1)", 1).unwrap();
        let g = parse("0.25*bump((x1-4)/0.5)*bump(y1)", 1).unwrap();
        let s = 0.04;
        let sum = calabi(&f.clone().add(g.clone()), s).unwrap().value;
        let parts = calabi(&f, s).unwrap().value + calabi(&g, s).unwrap().value;
        assert!((sum - parts).abs() <= 1e-9 * parts.abs().max(1.0));
    }

    #[test]
    fn translation_invariance() {
        let f = parse("0.5*bump(x1/0.7)*bump(y1/0.7)", 1).unwrap();
        let shifted = f.shift_coordinate(0, 2.375);
        let s = 0.04;
        let a = calabi(&f, s).unwrap().value;
        let b = calabi(&shifted, s).unwrap().value;
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    fn kernel_factors() -> Vec<HamiltonianExpr> {
        // F2 = -F1 shifted inside the ball: the Calabi values cancel.
        vec![
            parse("0.5*bump(x1/0.4)*bump((y1-0.3)/0.4)", 1).unwrap(),
            parse("-(0.5*bump(x1/0.4)*bump((y1+0.3)/0.4))", 1).unwrap(),
        ]
    }

    #[test]
    fn plan_report_glued_matches_factor_sum() {
        let factors = vec![
            parse("0.6*bump(x1/0.6)*bump(y1/0.6)", 1).unwrap(),
            parse("0.3*bump((x1-0.1)/0.5)*bump(y1/0.5)", 1).unwrap(),
        ];
        let plan = plan_factorization(&factors, &PlanOverrides::default()).unwrap();
        let spacing = default_grid_spacing(plan.spec.r);
        let cfg = IntegratorConfig::default();
        let report = calabi_of_plan(&plan, spacing, false, &cfg).unwrap();
        assert!(report.glued_vs_sum_ok, "{report:?}");
        assert_eq!(report.a1_plus_a2, 0.0);
        assert!((report.a3 - report.factor_sum).abs() <= 1e-6 * report.factor_sum.abs().max(1.0));
    }

    #[test]
    fn volume_check_on_single_factor() {
        let factors = vec![parse("0.5*bump(x1/0.6)*bump(y1/0.6)", 1).unwrap()];
        let plan = plan_factorization(&factors, &PlanOverrides::default()).unwrap();
        let spacing = default_grid_spacing(plan.spec.r);
        let cfg = IntegratorConfig::with_step(2e-3);
        let report = calabi_of_plan(&plan, spacing, true, &cfg).unwrap();
        let vc = report.volume_check.unwrap();
        assert!(vc.ok, "{vc:?}");
    }

    #[test]
    fn balance_refuses_non_kernel_input() {
        let factors = vec![parse("0.5*bump(x1/0.6)*bump(y1/0.6)", 1).unwrap()];
        let plan = plan_factorization(&factors, &PlanOverrides::default()).unwrap();
        let spacing = default_grid_spacing(plan.spec.r);
        assert!(matches!(
            balance_calabi(&plan, spacing),
            Err(CalabiError::NotInKernel { .. })
        ));
    }

    #[test]
    fn balanced_plan_has_zero_calabi_factors_and_still_verifies() {
        let plan = plan_factorization(&kernel_factors(), &PlanOverrides::default()).unwrap();
        let spacing = default_grid_spacing(plan.spec.r);
        let balanced = balance_calabi(&plan, spacing).unwrap();
        assert!(balanced.kernel_sum.abs() <= 1e-10);
        assert!(balanced.displacing_residual <= 1e-5);

        let cfg = IntegratorConfig::default();
        let report = calabi_of_plan(&balanced.plan, spacing, false, &cfg).unwrap();
        assert!(report.a1.abs() <= 1e-5);
        assert!(report.a2.abs() <= 1e-5);
        assert!(report.a3.abs() <= 1e-5);

        let comp = verify_factorization(&balanced.plan, 60, 1e-3, 17, &cfg, 0).unwrap();
        assert!(comp.pass, "{comp:?}");
    }

    #[test]
    fn compensating_bump_is_disjoint_from_construction() {
        let plan = plan_factorization(&kernel_factors(), &PlanOverrides::default()).unwrap();
        let beta = compensating_bump(&plan.spec);
        let beta_box = match beta.support_bound() {
            SupportBound::Box(b) => b,
            other => panic!("expected box, got {other:?}"),
        };
        let h_box = match plan.displacing.support_bound() {
            SupportBound::Box(b) => b,
            other => panic!("expected box, got {other:?}"),
        };
        // Disjoint in the y1 coordinate.
        assert!(beta_box[1][0] > h_box[1][1]);
        // And beta saturates the tube check negatively.
        assert!(!plan.spec.tube_contains(&[0.0, beta_box[1][0]], 0.0));
    }
}
