//! Hamiltonian vector fields, time-t flow maps, and composable words of
//! autonomous flows.
//!
//! The ambient space is R^2n with coordinates `(x1, y1, ..., xn, yn)` and the
//! standard symplectic form `omega = sum_i dx_i ^ dy_i`. The Hamiltonian
//! vector field of `F` solves `omega(X_F, .) = dF`, which in these
//! coordinates reads
//!
//! ```text
//! X_F = (dF/dy_1, -dF/dx_1, ..., dF/dy_n, -dF/dx_n).
//! ```
//!
//! With this sign, `H(z) = H_1(y_1)` and `H_1' = c` on a region gives the
//! field `c * d/dx_1` there, i.e. a rightward drift for increasing profiles.
//!
//! A [`DiffeoWord`] is a finite sequence of letters, each the time-`duration`
//! flow of one autonomous Hamiltonian. The word `(w1, w2, ..., wk)` denotes
//! the composition `w1 o w2 o ... o wk`: the rightmost letter acts first.
//!
//! All operations here are pure; words and expressions are immutable, so
//! evaluation may be spread over threads freely.

use serde::Serialize;

use crate::expr::{symplectic_swizzle, FieldScratch, HamiltonianExpr};

/// Point of phase space, ordered `(x1, y1, ..., xn, yn)`.
pub type PhasePoint = Vec<f64>;

/// Integration scheme for time-t flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Classical explicit fourth-order Runge-Kutta.
    Rk4,
    /// Implicit midpoint by fixed-point iteration; symplectic, used for
    /// cross-checks.
    ImplicitMidpoint,
}

/// Fixed-step integrator configuration.
///
/// A duration `t` is covered by `ceil(|t|/step)` substeps of size `step`,
/// with the final substep shrunk so the total is exactly `t`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            scheme: Scheme::Rk4,
            step: 1e-3,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: f64) -> Self {
        IntegratorConfig {
            step,
            ..Default::default()
        }
    }
}

/// Failure during flow integration.
#[derive(Debug, Clone, thiserror::Error)]
pub enum FlowError {
    #[error("flow of duration {duration} needs {needed} substeps, exceeding max_steps = {max}")]
    StepBudgetExceeded {
        duration: f64,
        needed: usize,
        max: usize,
    },
    #[error("implicit midpoint iteration failed to converge at step size {step}")]
    MidpointDiverged { step: f64 },
}

/// Role of a letter inside the factorization pipeline. `Displacing` marks
/// letters generated by the displacement Hamiltonian, which are subject to
/// the tube discipline during verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LetterRole {
    Generic,
    /// Time-1 flow of the i-th input factor (1-based); duration carries the
    /// inverse.
    Factor(usize),
    Displacing,
    Glued,
}

/// One letter: the time-`duration` flow of an autonomous Hamiltonian.
/// Negative durations denote the inverse map.
#[derive(Debug, Clone)]
pub struct Letter {
    pub hamiltonian: HamiltonianExpr,
    pub duration: f64,
    pub role: LetterRole,
}

impl Letter {
    pub fn new(hamiltonian: HamiltonianExpr, duration: f64) -> Self {
        Letter {
            hamiltonian,
            duration,
            role: LetterRole::Generic,
        }
    }

    pub fn with_role(hamiltonian: HamiltonianExpr, duration: f64, role: LetterRole) -> Self {
        Letter {
            hamiltonian,
            duration,
            role,
        }
    }

    pub fn inverse(&self) -> Self {
        Letter {
            hamiltonian: self.hamiltonian.clone(),
            duration: -self.duration,
            role: self.role,
        }
    }
}

/// Error from the checked word constructor.
#[derive(Debug, Clone, thiserror::Error)]
#[error("letter {index} has no certified bounded support box")]
pub struct UnboundedLetter {
    pub index: usize,
}

/// A composable sequence of autonomous flows; see the module docs for the
/// composition convention.
#[derive(Debug, Clone, Default)]
pub struct DiffeoWord {
    letters: Vec<Letter>,
}

impl DiffeoWord {
    /// Checked constructor: every letter must have a certified bounded
    /// support box, which the construction pipeline relies on.
    pub fn new(letters: Vec<Letter>) -> Result<Self, UnboundedLetter> {
        for (index, letter) in letters.iter().enumerate() {
            if !letter.hamiltonian.support_bound().is_bounded() {
                return Err(UnboundedLetter { index });
            }
        }
        Ok(DiffeoWord { letters })
    }

    /// Unchecked constructor for analysis fixtures (e.g. quadratic
    /// Hamiltonians with unbounded support used as integrator oracles).
    pub fn new_unchecked(letters: Vec<Letter>) -> Self {
        DiffeoWord { letters }
    }

    pub fn identity() -> Self {
        DiffeoWord::default()
    }

    pub fn single(hamiltonian: HamiltonianExpr, duration: f64) -> Result<Self, UnboundedLetter> {
        DiffeoWord::new(vec![Letter::new(hamiltonian, duration)])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Total integration time, `sum |duration|`.
    pub fn total_duration(&self) -> f64 {
        self.letters.iter().map(|l| l.duration.abs()).sum()
    }

    /// Inverse word: reversed letter order, negated durations.
    pub fn invert(&self) -> Self {
        DiffeoWord {
            letters: self.letters.iter().rev().map(Letter::inverse).collect(),
        }
    }

    /// `self` followed (on the left) by nothing else: concatenation
    /// `self o rhs` as words.
    pub fn compose(&self, rhs: &DiffeoWord) -> Self {
        let mut letters = self.letters.clone();
        letters.extend(rhs.letters.iter().cloned());
        DiffeoWord { letters }
    }

    /// Conjugate `by o self o by^{-1}` as a word.
    pub fn conjugate(&self, by: &DiffeoWord) -> Self {
        by.compose(self).compose(&by.invert())
    }
}

/// Evaluate the Hamiltonian vector field of `f` at `z`.
pub fn vector_field(f: &HamiltonianExpr, z: &[f64]) -> Vec<f64> {
    let grad = f.grad(z);
    let mut out = vec![0.0; grad.len()];
    symplectic_swizzle(&grad, &mut out);
    out
}

/// Number of substeps covering `|t|`, final substep shrunk to fit.
fn substep_count(t: f64, cfg: &IntegratorConfig) -> Result<usize, FlowError> {
    if t == 0.0 {
        return Ok(0);
    }
    let needed = (t.abs() / cfg.step).ceil() as usize;
    if needed > cfg.max_steps {
        return Err(FlowError::StepBudgetExceeded {
            duration: t,
            needed,
            max: cfg.max_steps,
        });
    }
    Ok(needed.max(1))
}

/// Integrate a generic field `dz/dt = field(z)` for time `t` in place.
/// `field(z, out)` must fill `out` with the velocity at `z`.
pub(crate) fn integrate_field<F>(
    mut field: F,
    t: f64,
    z: &mut [f64],
    cfg: &IntegratorConfig,
    mut on_substep: Option<&mut dyn FnMut(f64, &[f64])>,
) -> Result<(), FlowError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let steps = substep_count(t, cfg)?;
    if steps == 0 {
        return Ok(());
    }
    let dim = z.len();
    let sign = t.signum();
    let mut remaining = t.abs();
    let mut elapsed = 0.0;
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];

    for _ in 0..steps {
        let h = sign * cfg.step.min(remaining);
        match cfg.scheme {
            Scheme::Rk4 => {
                field(z, &mut k1);
                for j in 0..dim {
                    stage[j] = z[j] + 0.5 * h * k1[j];
                }
                field(&stage, &mut k2);
                for j in 0..dim {
                    stage[j] = z[j] + 0.5 * h * k2[j];
                }
                field(&stage, &mut k3);
                for j in 0..dim {
                    stage[j] = z[j] + h * k3[j];
                }
                field(&stage, &mut k4);
                for j in 0..dim {
                    z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
            Scheme::ImplicitMidpoint => {
                // Solve y = z + (h/2) X(y) by fixed point, then z' = 2y - z.
                for j in 0..dim {
                    stage[j] = z[j];
                }
                let mut converged = false;
                for _ in 0..64 {
                    field(&stage, &mut k1);
                    let mut delta: f64 = 0.0;
                    for j in 0..dim {
                        let next = z[j] + 0.5 * h * k1[j];
                        delta = delta.max((next - stage[j]).abs());
                        stage[j] = next;
                    }
                    if delta <= 1e-14 {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(FlowError::MidpointDiverged { step: h });
                }
                for j in 0..dim {
                    z[j] = 2.0 * stage[j] - z[j];
                }
            }
        }
        remaining -= h.abs();
        elapsed += h.abs();
        if let Some(sink) = on_substep.as_deref_mut() {
            sink(elapsed, z);
        }
    }
    Ok(())
}

/// Time-`t` flow of the Hamiltonian vector field of `f`, starting from `z`.
///
/// Points strictly outside the structural support box are fixed by the flow
/// and are returned unchanged without integration.
pub fn flow(
    f: &HamiltonianExpr,
    t: f64,
    z: &[f64],
    cfg: &IntegratorConfig,
) -> Result<PhasePoint, FlowError> {
    assert_eq!(z.len(), f.dim(), "phase point dimension mismatch");
    let mut out = z.to_vec();
    flow_in_place(f, t, &mut out, cfg, None)?;
    Ok(out)
}

pub(crate) fn flow_in_place(
    f: &HamiltonianExpr,
    t: f64,
    z: &mut [f64],
    cfg: &IntegratorConfig,
    on_substep: Option<&mut dyn FnMut(f64, &[f64])>,
) -> Result<(), FlowError> {
    if f.support_bound().excludes(z) {
        // Exactly zero field along the whole (constant) trajectory.
        if let Some(sink) = on_substep {
            sink(t.abs(), z);
        }
        return Ok(());
    }
    let program = f.compile();
    let mut scratch = FieldScratch::default();
    let mut grad = vec![0.0; f.dim()];
    integrate_field(
        |point, out| {
            program.eval_grad(point, &mut scratch, &mut grad);
            symplectic_swizzle(&grad, out);
        },
        t,
        z,
        cfg,
        on_substep,
    )
}

/// Apply a single letter to `z` in place.
pub fn apply_letter(
    letter: &Letter,
    z: &mut [f64],
    cfg: &IntegratorConfig,
) -> Result<(), FlowError> {
    flow_in_place(&letter.hamiltonian, letter.duration, z, cfg, None)
}

/// Evaluate a word at `z`: letters act right to left.
pub fn evaluate_word(
    w: &DiffeoWord,
    z: &[f64],
    cfg: &IntegratorConfig,
) -> Result<PhasePoint, FlowError> {
    let mut point = z.to_vec();
    for letter in w.letters().iter().rev() {
        apply_letter(letter, &mut point, cfg)?;
    }
    Ok(point)
}

/// Evaluate a word while streaming every accepted substep to `sink` as
/// `(t, point)`, with `t` the cumulative integration time across letters
/// (letters contribute `|duration|` each, rightmost first). A letter skipped
/// by the support-box test emits a single row at its end time.
pub fn evaluate_word_traced(
    w: &DiffeoWord,
    z: &[f64],
    cfg: &IntegratorConfig,
    sink: &mut dyn FnMut(f64, &[f64]),
) -> Result<PhasePoint, FlowError> {
    let mut point = z.to_vec();
    let mut offset = 0.0;
    for letter in w.letters().iter().rev() {
        flow_in_place(
            &letter.hamiltonian,
            letter.duration,
            &mut point,
            cfg,
            Some(&mut |elapsed, p| sink(offset + elapsed, p)),
        )?;
        offset += letter.duration.abs();
    }
    Ok(point)
}

/// Jacobian of the word map at `z` by central finite differences.
pub fn jacobian(
    w: &DiffeoWord,
    z: &[f64],
    fd_eps: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<Vec<f64>>, FlowError> {
    jacobian_of_map(|p| evaluate_word(w, p, cfg), z, fd_eps)
}

/// Jacobian of an arbitrary map by central finite differences; rows index
/// output coordinates, columns input coordinates.
pub fn jacobian_of_map<E>(
    mut map: impl FnMut(&[f64]) -> Result<PhasePoint, E>,
    z: &[f64],
    fd_eps: f64,
) -> Result<Vec<Vec<f64>>, E> {
    assert!(fd_eps > 0.0);
    let dim = z.len();
    let mut jac = vec![vec![0.0; dim]; dim];
    for col in 0..dim {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[col] += fd_eps;
        zm[col] -= fd_eps;
        let fp = map(&zp)?;
        let fm = map(&zm)?;
        for row in 0..dim {
            jac[row][col] = (fp[row] - fm[row]) / (2.0 * fd_eps);
        }
    }
    Ok(jac)
}

/// Symplecticity diagnostics of a Jacobian.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymplecticResidual {
    /// `max_ij |J^T Omega J - Omega|`.
    pub omega_residual: f64,
    /// `|det J - 1|`; only computed for n = 1 where the determinant is the
    /// whole story.
    pub det_deviation: Option<f64>,
}

/// Residual of `J^T Omega J = Omega` for the matrix of the standard form.
pub fn symplectic_residual_of_jacobian(jac: &[Vec<f64>]) -> SymplecticResidual {
    let dim = jac.len();
    debug_assert!(dim % 2 == 0);
    // Omega has blocks [[0, 1], [-1, 0]] along the diagonal:
    // omega(e_{2i}, e_{2i+1}) = 1.
    let omega = |r: usize, c: usize| -> f64 {
        if r / 2 == c / 2 {
            if r % 2 == 0 && c % 2 == 1 {
                1.0
            } else if r % 2 == 1 && c % 2 == 0 {
                -1.0
            } else {
                0.0
            }
        } else {
            0.0
        }
    };
    let mut max_residual: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            // (J^T Omega J)_{ab} = sum_{r,c} J_{ra} Omega_{rc} J_{cb}
            let mut acc = 0.0;
            for r in 0..dim {
                let jra = jac[r][a];
                if jra == 0.0 {
                    continue;
                }
                for c in 0..dim {
                    let w = omega(r, c);
                    if w != 0.0 {
                        acc += jra * w * jac[c][b];
                    }
                }
            }
            max_residual = max_residual.max((acc - omega(a, b)).abs());
        }
    }
    let det_deviation = if dim == 2 {
        Some((jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0] - 1.0).abs())
    } else {
        None
    };
    SymplecticResidual {
        omega_residual: max_residual,
        det_deviation,
    }
}

/// Symplecticity residual of the word map at `z`.
pub fn symplectic_residual(
    w: &DiffeoWord,
    z: &[f64],
    fd_eps: f64,
    cfg: &IntegratorConfig,
) -> Result<SymplecticResidual, FlowError> {
    let jac = jacobian(w, z, fd_eps, cfg)?;
    Ok(symplectic_residual_of_jacobian(&jac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn oscillator() -> HamiltonianExpr {
        parse("(x1^2+y1^2)/2", 1).unwrap()
    }

    fn small_bump() -> HamiltonianExpr {
        parse("0.5*bump(x1/0.8)*bump(y1/0.8)", 1).unwrap()
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn vector_field_of_oscillator() {
        // X_F = (y, -x)
        let f = oscillator();
        assert_eq!(vector_field(&f, &[1.0, 0.0]), vec![0.0, -1.0]);
        assert_eq!(vector_field(&f, &[0.0, 2.0]), vec![2.0, 0.0]);
    }

    #[test]
    fn vector_field_of_zero() {
        let f = HamiltonianExpr::zero(2);
        assert_eq!(vector_field(&f, &[1.0, 2.0, 3.0, 4.0]), vec![0.0; 4]);
    }

    #[test]
    fn flow_of_zero_field_is_identity() {
        let f = HamiltonianExpr::zero(1);
        let cfg = IntegratorConfig::default();
        let z = flow(&f, 3.7, &[0.2, -0.4], &cfg).unwrap();
        assert_eq!(z, vec![0.2, -0.4]);
    }

    #[test]
    fn oscillator_rotates_clockwise() {
        // Closed-form oracle: the flow is z(t) = (x cos t + y sin t,
        // -x sin t + y cos t); from (1, 0) at t = pi/2 it reaches (0, -1).
        let f = oscillator();
        let cfg = IntegratorConfig::default();
        let z = flow(&f, std::f64::consts::FRAC_PI_2, &[1.0, 0.0], &cfg).unwrap();
        assert!(dist(&z, &[0.0, -1.0]) <= 1e-8, "got {z:?}");
    }

    #[test]
    fn implicit_midpoint_cross_check() {
        let f = oscillator();
        let cfg = IntegratorConfig {
            scheme: Scheme::ImplicitMidpoint,
            step: 1e-3,
            max_steps: 10_000,
        };
        let z = flow(&f, 1.0, &[1.0, 0.0], &cfg).unwrap();
        let rk = flow(&f, 1.0, &[1.0, 0.0], &IntegratorConfig::default()).unwrap();
        assert!(dist(&z, &rk) <= 1e-6, "midpoint {z:?} vs rk4 {rk:?}");
    }

    #[test]
    fn flow_additivity() {
        let f = small_bump();
        let cfg = IntegratorConfig::default();
        let z0 = [0.15, -0.2];
        let (s, t) = (0.4, 0.6);
        let once = flow(&f, s + t, &z0, &cfg).unwrap();
        let twice = flow(&f, t, &flow(&f, s, &z0, &cfg).unwrap(), &cfg).unwrap();
        assert!(dist(&once, &twice) <= 1e-8);
    }

    #[test]
    fn energy_conservation_along_flow() {
        let f = small_bump();
        let cfg = IntegratorConfig::default();
        for z0 in [[0.1, 0.1], [0.3, -0.5], [-0.6, 0.2], [0.0, 0.7]] {
            for t in [0.25, 0.5, 1.0] {
                let z = flow(&f, t, &z0, &cfg).unwrap();
                assert!((f.eval(&z) - f.eval(&z0)).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn word_times_inverse_is_identity() {
        let w = DiffeoWord::new(vec![
            Letter::new(small_bump(), 1.0),
            Letter::new(parse("0.4*bump((x1-0.2)/0.5)*bump(y1/0.5)", 1).unwrap(), 1.0),
        ])
        .unwrap();
        let cfg = IntegratorConfig::default();
        let z0 = [0.1, 0.2];
        let z = evaluate_word(&w.compose(&w.invert()), &z0, &cfg).unwrap();
        assert!(dist(&z, &z0) <= 1e-7);
    }

    #[test]
    fn single_inverse_pair_cancels() {
        let a = Letter::new(small_bump(), 1.0);
        let w = DiffeoWord::new(vec![a.clone(), a.inverse()]).unwrap();
        let cfg = IntegratorConfig::default();
        let z0 = [0.2, -0.1];
        let z = evaluate_word(&w, &z0, &cfg).unwrap();
        assert!(dist(&z, &z0) <= 1e-8);
    }

    #[test]
    fn empty_word_is_identity() {
        let cfg = IntegratorConfig::default();
        let z = evaluate_word(&DiffeoWord::identity(), &[1.0, 2.0], &cfg).unwrap();
        assert_eq!(z, vec![1.0, 2.0]);
    }

    #[test]
    fn invert_reverses_and_negates() {
        let f = small_bump();
        let g = oscillator();
        let w = DiffeoWord::new_unchecked(vec![Letter::new(f.clone(), 1.0), Letter::new(g, 1.0)]);
        let inv = w.invert();
        assert_eq!(inv.letters()[0].duration, -1.0);
        assert_eq!(inv.letters()[1].hamiltonian, f);
        assert!(DiffeoWord::identity().invert().is_empty());
    }

    #[test]
    fn disjoint_supports_commute() {
        let a = parse("0.5*bump((x1+2)/0.5)*bump(y1/0.5)", 1).unwrap();
        let b = parse("0.5*bump((x1-2)/0.5)*bump(y1/0.5)", 1).unwrap();
        let ab = DiffeoWord::new(vec![Letter::new(a.clone(), 1.0), Letter::new(b.clone(), 1.0)])
            .unwrap();
        let ba = DiffeoWord::new(vec![Letter::new(b, 1.0), Letter::new(a, 1.0)]).unwrap();
        let cfg = IntegratorConfig::default();
        for z0 in [[-2.1, 0.1], [2.0, -0.2], [0.0, 0.0], [1.8, 0.3]] {
            let p = evaluate_word(&ab, &z0, &cfg).unwrap();
            let q = evaluate_word(&ba, &z0, &cfg).unwrap();
            assert!(dist(&p, &q) <= 1e-8);
        }
    }

    #[test]
    fn conjugate_matches_pointwise_identity() {
        let w = DiffeoWord::new(vec![Letter::new(small_bump(), 1.0)]).unwrap();
        let u = DiffeoWord::new(vec![Letter::new(
            parse("0.3*bump(x1/0.9)*bump((y1-0.1)/0.9)", 1).unwrap(),
            1.0,
        )])
        .unwrap();
        let cfg = IntegratorConfig::default();
        let z0 = [0.25, 0.1];
        let lhs = evaluate_word(&w.conjugate(&u), &z0, &cfg).unwrap();
        let inner = evaluate_word(&u.invert(), &z0, &cfg).unwrap();
        let mid = evaluate_word(&w, &inner, &cfg).unwrap();
        let rhs = evaluate_word(&u, &mid, &cfg).unwrap();
        assert!(dist(&lhs, &rhs) <= 1e-7);
    }

    #[test]
    fn jacobian_of_identity_word() {
        let cfg = IntegratorConfig::default();
        let jac = jacobian(&DiffeoWord::identity(), &[0.3, 0.4], 1e-4, &cfg).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((jac[r][c] - expect).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn jacobian_of_rotation_flow() {
        // The oscillator flow for time t has Jacobian equal to rotation by -t.
        let t = 0.7;
        let w = DiffeoWord::new_unchecked(vec![Letter::new(oscillator(), t)]);
        let cfg = IntegratorConfig::default();
        let jac = jacobian(&w, &[0.3, -0.2], 1e-4, &cfg).unwrap();
        let expect = [[t.cos(), t.sin()], [-t.sin(), t.cos()]];
        for r in 0..2 {
            for c in 0..2 {
                assert!(
                    (jac[r][c] - expect[r][c]).abs() <= 1e-6,
                    "J[{r}][{c}] = {} vs {}",
                    jac[r][c],
                    expect[r][c]
                );
            }
        }
    }

    #[test]
    fn symplectic_residual_of_flows() {
        let cfg = IntegratorConfig::default();
        let id = symplectic_residual(&DiffeoWord::identity(), &[0.1, 0.2], 1e-4, &cfg).unwrap();
        assert!(id.omega_residual <= 1e-9);
        assert!(id.det_deviation.unwrap() <= 1e-9);

        let w = DiffeoWord::new(vec![Letter::new(small_bump(), 1.0)]).unwrap();
        let res = symplectic_residual(&w, &[0.2, 0.3], 1e-4, &cfg).unwrap();
        assert!(res.omega_residual <= 1e-5, "residual {}", res.omega_residual);
    }

    #[test]
    fn doubling_map_is_detected_as_non_symplectic() {
        // Component-wise doubling has det J = 4.
        let double = |z: &[f64]| -> Result<PhasePoint, std::convert::Infallible> {
            Ok(z.iter().map(|v| 2.0 * v).collect())
        };
        let jac = jacobian_of_map(double, &[0.5, -0.5], 1e-5).unwrap();
        let res = symplectic_residual_of_jacobian(&jac);
        assert!(res.omega_residual >= 1.0);
        assert!((res.det_deviation.unwrap() - 3.0).abs() <= 1e-6);
    }

    #[test]
    fn step_budget_is_enforced() {
        let cfg = IntegratorConfig {
            scheme: Scheme::Rk4,
            step: 1e-3,
            max_steps: 10,
        };
        let err = flow(&small_bump(), 1.0, &[0.0, 0.0], &cfg).unwrap_err();
        assert!(matches!(err, FlowError::StepBudgetExceeded { .. }));
    }

    // Conjugation transforms Hamiltonians by F -> F o psi^{-1}: the map
    // psi o flow_F o psi^{-1} agrees with the flow of the pushforward field
    // Dpsi . X_F o psi^{-1}, evaluated here by finite differences.
    #[test]
    fn conjugation_law_via_pushforward_field() {
        let f = small_bump();
        let psi = DiffeoWord::new(vec![Letter::new(
            parse("0.4*bump((x1-0.1)/0.9)*bump(y1/0.9)", 1).unwrap(),
            1.0,
        )])
        .unwrap();
        let cfg = IntegratorConfig::with_step(1e-2);
        let z0 = [0.2, 0.15];

        // Left side: psi(flow_F(psi^{-1}(z0))).
        let back = evaluate_word(&psi.invert(), &z0, &cfg).unwrap();
        let mid = flow(&f, 1.0, &back, &cfg).unwrap();
        let lhs = evaluate_word(&psi, &mid, &cfg).unwrap();

        // Right side: integrate the pushforward field from z0.
        let mut rhs = z0.to_vec();
        integrate_field(
            |z, out| {
                let w = evaluate_word(&psi.invert(), z, &cfg).unwrap();
                let jac = jacobian(&psi, &w, 1e-5, &cfg).unwrap();
                let xf = vector_field(&f, &w);
                for (r, row) in jac.iter().enumerate() {
                    out[r] = row.iter().zip(&xf).map(|(a, b)| a * b).sum();
                }
            },
            1.0,
            &mut rhs,
            &IntegratorConfig::with_step(2e-2),
            None,
        )
        .unwrap();

        assert!(dist(&lhs, &rhs) <= 1e-4, "lhs {lhs:?} rhs {rhs:?}");
    }
}

