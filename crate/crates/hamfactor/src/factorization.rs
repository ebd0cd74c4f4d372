//! From `m` autonomous factors to three explicit autonomous factors.
//!
//! Inputs are compactly supported Hamiltonians `F_1..F_m` generating
//! `a_1..a_m`, with `f = a_1 o ... o a_m`. The plan instantiates the word
//! identity `f = [g, h] . b` (see [`crate::words`]) on actual flows:
//!
//! * `h` displaces `B(r)` by `L > 2r` per application ([`crate::displacement`]);
//! * `g = prod_i h^{k_i} c_i^{-1} h^{-k_i}` with `k_i = i - m - 1` and
//!   `c_i = a_1 o ... o a_i`, realized as a word of flows;
//! * `A1 = g o h o g^{-1}`, autonomous with Hamiltonian `H o g^{-1}`;
//! * `A2 = h^{-1}`, autonomous with Hamiltonian `-H`;
//! * `A3 = b = prod_i (a_i)^{h^{k_i}}`, autonomous with the glued Hamiltonian
//!   `G(z) = sum_i F_i(z - k_i L e_{x1})`, whose summands have pairwise
//!   disjoint supports. `A3` is realized as the time-1 flow of the single
//!   expression `G`, which is what makes the third factor autonomous.
//!
//! Conjugation acts on Hamiltonians by `F -> F o psi^{-1}`; the glued formula
//! above is the pullback of each `F_i` under the inverse of its conjugator.
//! [`verify_glued_autonomy`] checks this convention numerically and also
//! measures the opposite convention, which must fail.
//!
//! During numeric verification every displacement letter must act on points
//! of the tube where its field is an exact translation; this is asserted at
//! runtime and a violation reports a construction bug rather than a numeric
//! error.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::displacement::{
    build_displacement_hamiltonian, DisplacementSpec, SpecError,
};
use crate::expr::{HamiltonianExpr, SupportBound};
use crate::geometry::{
    apply_letter, evaluate_word, flow, DiffeoWord, FlowError, IntegratorConfig, Letter, LetterRole,
};
use crate::words::{build_b, partial_product, GroupWord};

/// Optional knobs for [`plan_factorization`].
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PlanOverrides {
    /// Translation length; default `3r`.
    pub l: Option<f64>,
    /// Profile transition width; default 1.
    pub eps: Option<f64>,
    /// Admit `L <= 2r` (the displacement check will then fail; used for the
    /// negative control).
    pub allow_short_translation: bool,
}

/// Construction failure.
#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("no factors given")]
    NoFactors,
    #[error("factor {index} has no certified bounded support box")]
    UnboundedSupport { index: usize },
    #[error("factor {index} lives on R^{found} but factor 0 on R^{expected}")]
    DimensionMismatch {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("glued summands {first} and {second} have overlapping support boxes")]
    SummandOverlap { first: usize, second: usize },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("displacement letter {letter} evaluated outside the tube at {point:?}; construction bug")]
    TubeDiscipline { letter: usize, point: Vec<f64> },
}

/// Witness that a factor is autonomous: a single generating Hamiltonian,
/// either in closed form or as the pullback of a closed form by a word.
#[derive(Debug, Clone)]
pub enum AutonomyWitness {
    ClosedForm(HamiltonianExpr),
    /// `base o by`, evaluated by running the word then the expression.
    Pullback {
        base: HamiltonianExpr,
        by: DiffeoWord,
    },
}

impl AutonomyWitness {
    /// Evaluate the witness Hamiltonian at a point.
    pub fn eval(&self, z: &[f64], cfg: &IntegratorConfig) -> Result<f64, FlowError> {
        match self {
            AutonomyWitness::ClosedForm(e) => Ok(e.eval(z)),
            AutonomyWitness::Pullback { base, by } => {
                let w = evaluate_word(by, z, cfg)?;
                Ok(base.eval(&w))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            AutonomyWitness::ClosedForm(e) => format!("closed form: {e}"),
            AutonomyWitness::Pullback { by, .. } => {
                format!("pullback of the displacing Hamiltonian by a {}-letter word", by.len())
            }
        }
    }
}

/// The output bundle: displacing data, auxiliary element, and the three
/// autonomous factors with their Hamiltonian witnesses.
#[derive(Debug, Clone)]
pub struct FactorizationPlan {
    pub factors: Vec<HamiltonianExpr>,
    pub spec: DisplacementSpec,
    /// The displacing Hamiltonian `H`.
    pub displacing: HamiltonianExpr,
    /// Time-1 word of `H`.
    pub h: DiffeoWord,
    /// The auxiliary element as a word of flows.
    pub g: DiffeoWord,
    /// `A1 = g o h o g^{-1}`.
    pub a1: DiffeoWord,
    /// `A2 = h^{-1}`.
    pub a2: DiffeoWord,
    /// `A3`: time-1 flow of the glued Hamiltonian.
    pub a3: DiffeoWord,
    pub a1_witness: AutonomyWitness,
    pub a2_witness: AutonomyWitness,
    pub a3_witness: AutonomyWitness,
    /// The glued Hamiltonian `G`.
    pub glued: HamiltonianExpr,
    /// `b = prod_i (a_i)^{h^{k_i}}` as a word (equals `A3` as a map).
    pub b_word: DiffeoWord,
    /// `f = a_1 o ... o a_m` as a word.
    pub f_word: DiffeoWord,
}

/// Glued Hamiltonian `G(z) = sum_i F_i(z - k_i L e_{x1})`, `k_i = i - m - 1`:
/// the generator of `b` in one time unit. Summand `i` is supported in
/// `B(r) + k_i L e_{x1}`; overlapping summand boxes are rejected.
pub fn glued_hamiltonian(
    factors: &[HamiltonianExpr],
    spec: &DisplacementSpec,
) -> Result<HamiltonianExpr, PlanError> {
    if factors.is_empty() {
        return Err(PlanError::NoFactors);
    }
    let m = factors.len();
    let mut glued: Option<HamiltonianExpr> = None;
    let mut boxes: Vec<(usize, Vec<[f64; 2]>)> = Vec::new();
    for (idx, f) in factors.iter().enumerate() {
        let shift = (m as f64 + 1.0 - (idx as f64 + 1.0)) * spec.l; // -k_i L
        let summand = f.shift_coordinate(0, shift);
        match summand.support_bound() {
            SupportBound::Box(b) => {
                for (other, prev) in &boxes {
                    let overlaps = prev
                        .iter()
                        .zip(&b)
                        .all(|(p, q)| p[0] <= q[1] && q[0] <= p[1]);
                    if overlaps {
                        return Err(PlanError::SummandOverlap {
                            first: *other,
                            second: idx,
                        });
                    }
                }
                boxes.push((idx, b));
            }
            SupportBound::Empty => {}
            SupportBound::Unbounded => {
                return Err(PlanError::UnboundedSupport { index: idx });
            }
        }
        glued = Some(match glued {
            None => summand,
            Some(acc) => acc.add(summand),
        });
    }
    Ok(glued.expect("at least one factor"))
}

/// Smallest origin-centered ball radius covering every factor support, plus
/// a fixed margin so supports sit strictly inside `B(r)`.
fn covering_radius(factors: &[HamiltonianExpr]) -> Result<f64, PlanError> {
    let mut radius: f64 = 0.0;
    for (index, f) in factors.iter().enumerate() {
        match f.support_bound().enclosing_radius() {
            Some(r) => radius = radius.max(r),
            None => return Err(PlanError::UnboundedSupport { index }),
        }
    }
    Ok(radius + 0.1)
}

/// Build the full plan from the input factors.
pub fn plan_factorization(
    factors: &[HamiltonianExpr],
    overrides: &PlanOverrides,
) -> Result<FactorizationPlan, PlanError> {
    if factors.is_empty() {
        return Err(PlanError::NoFactors);
    }
    let n = factors[0].half_dim();
    for (index, f) in factors.iter().enumerate() {
        if f.half_dim() != n {
            return Err(PlanError::DimensionMismatch {
                index,
                found: f.half_dim(),
                expected: n,
            });
        }
    }
    let m = factors.len();
    let r = covering_radius(factors)?;
    let spec = if overrides.allow_short_translation {
        DisplacementSpec::unvalidated(r, m, n, overrides.l, overrides.eps)?
    } else {
        DisplacementSpec::with_overrides(r, m, n, overrides.l, overrides.eps)?
    };
    build_plan(factors.to_vec(), spec)
}

/// Assemble the words for a fixed displacement spec and displacing
/// Hamiltonian; shared with the Calabi-balanced variant, which swaps in a
/// modified `H` whose dynamics on the tube are identical.
pub(crate) fn build_plan_with_displacing(
    factors: Vec<HamiltonianExpr>,
    spec: DisplacementSpec,
    displacing: HamiltonianExpr,
) -> Result<FactorizationPlan, PlanError> {
    let m = factors.len();
    let h_letter = |power: i64| -> Letter {
        Letter::with_role(displacing.clone(), power as f64, LetterRole::Displacing)
    };
    let factor_letter = |i: usize, sign: f64| -> Letter {
        Letter::with_role(factors[i - 1].clone(), sign, LetterRole::Factor(i))
    };

    // g = prod_i h^{k_i} c_i^{-1} h^{-k_i}, k_i = i - m - 1; the word lists
    // the i = 1 block first. Rightmost letters act first, so each block reads
    // h^{k_i}, then a_i^{ -1} ... a_1^{-1}, then h^{-k_i}.
    let mut g_letters = Vec::new();
    for i in 1..=m {
        let k = i as i64 - m as i64 - 1;
        g_letters.push(h_letter(k));
        for j in (1..=i).rev() {
            g_letters.push(factor_letter(j, -1.0));
        }
        g_letters.push(h_letter(-k));
    }
    let g = DiffeoWord::new(g_letters).expect("all plan letters have bounded support");

    let h = displacement_word_from(&displacing);
    let glued = glued_hamiltonian(&factors, &spec)?;

    let mut b_letters = Vec::new();
    for i in 1..=m {
        let k = i as i64 - m as i64 - 1;
        b_letters.push(h_letter(k));
        b_letters.push(factor_letter(i, 1.0));
        b_letters.push(h_letter(-k));
    }
    let b_word = DiffeoWord::new(b_letters).expect("all plan letters have bounded support");

    let f_letters: Vec<Letter> = (1..=m).map(|i| factor_letter(i, 1.0)).collect();
    let f_word = DiffeoWord::new(f_letters).expect("all plan letters have bounded support");

    let a1 = h.conjugate(&g);
    let a2 = h.invert();
    let a3 = DiffeoWord::new(vec![Letter::with_role(
        glued.clone(),
        1.0,
        LetterRole::Glued,
    )])
    .expect("glued Hamiltonian has bounded support");

    let a1_witness = AutonomyWitness::Pullback {
        base: displacing.clone(),
        by: g.invert(),
    };
    let a2_witness = AutonomyWitness::ClosedForm(displacing.clone().neg());
    let a3_witness = AutonomyWitness::ClosedForm(glued.clone());

    Ok(FactorizationPlan {
        factors,
        spec,
        displacing,
        h,
        g,
        a1,
        a2,
        a3,
        a1_witness,
        a2_witness,
        a3_witness,
        glued,
        b_word,
        f_word,
    })
}

fn build_plan(
    factors: Vec<HamiltonianExpr>,
    spec: DisplacementSpec,
) -> Result<FactorizationPlan, PlanError> {
    let displacing = build_displacement_hamiltonian(&spec);
    build_plan_with_displacing(factors, spec, displacing)
}

fn displacement_word_from(displacing: &HamiltonianExpr) -> DiffeoWord {
    DiffeoWord::new(vec![Letter::with_role(
        displacing.clone(),
        1.0,
        LetterRole::Displacing,
    )])
    .expect("displacement Hamiltonian has bounded support")
}

impl FactorizationPlan {
    pub fn m(&self) -> usize {
        self.factors.len()
    }

    pub fn half_dim(&self) -> usize {
        self.spec.n
    }

    /// The composed word `A1 o A2 o A3`.
    pub fn composed(&self) -> DiffeoWord {
        self.a1.compose(&self.a2).compose(&self.a3)
    }

    /// Map plan letters back to abstract generators and check that
    /// `A1 . A2 . b` reduces to `a_1 ... a_m` exactly in the word algebra
    /// (with `A3` expanded as the product of conjugates it generates).
    pub fn symbolic_coherence(&self) -> bool {
        let m = self.m();
        let mut product = GroupWord::identity(m);
        let symbolic = self.a1.compose(&self.a2).compose(&self.b_word);
        for letter in symbolic.letters() {
            let image = match letter.role {
                LetterRole::Factor(i) => {
                    debug_assert!(letter.duration.abs() == 1.0);
                    let g = GroupWord::generator(m, i);
                    if letter.duration < 0.0 {
                        g.invert()
                    } else {
                        g
                    }
                }
                LetterRole::Displacing => {
                    debug_assert!(letter.duration.fract() == 0.0);
                    GroupWord::h_power(m, letter.duration as i64)
                }
                LetterRole::Glued => build_b(m),
                LetterRole::Generic => return false,
            };
            product = product.multiply(&image);
        }
        product == partial_product(m, m)
    }

    /// The box from which verification samples are drawn: covers `B(r)`, all
    /// displaced balls, and one extra translation either way, while keeping
    /// every displacement letter of `A1 o A2 o A3` inside the tube.
    pub fn sampling_window(&self) -> Vec<[f64; 2]> {
        let spec = &self.spec;
        let mut window = vec![[-spec.r, spec.r]; 2 * spec.n];
        window[0] = [
            -((spec.m as f64 + 1.0) * spec.l) - spec.r,
            spec.l + spec.r,
        ];
        window
    }
}

/// Numeric verification of `f = A1 o A2 o A3`.
#[derive(Debug, Clone, Serialize)]
pub struct CompositionReport {
    pub samples: usize,
    pub tolerance: f64,
    pub max_error: f64,
    pub mean_error: f64,
    /// Exact reduction of the letter images in the word algebra.
    pub symbolic_coherence: bool,
    /// Number of displacement-letter applications checked against the tube.
    pub tube_checks: usize,
    pub glued: GluedAutonomyReport,
    /// Max residual of the pullback-field check on `A1`, when requested.
    pub deep_conjugation_residual: Option<f64>,
    pub pass: bool,
}

/// Comparison of the glued flow against the word it must equal, under both
/// possible conjugation conventions.
#[derive(Debug, Clone, Serialize)]
pub struct GluedAutonomyReport {
    pub points: usize,
    pub tolerance: f64,
    /// `max |flow_G(1, z) - b(z)|` with `G = sum F_i o h^{-k_i}` (pullback by
    /// the inverse conjugator; the convention the construction uses).
    pub pullback_by_inverse_max_error: f64,
    /// Same measurement for `G_alt = sum F_i o h^{k_i}`; the construction is
    /// only consistent if this one fails.
    pub pullback_by_forward_max_error: f64,
    pub pass: bool,
}

/// Evaluate `A1 o A2 o A3` at `z`, asserting the tube discipline on every
/// displacement letter: start and end of each such letter must lie in the
/// closed tube (small slack absorbs integrator overshoot from factor flows).
fn evaluate_composed_checked(
    plan: &FactorizationPlan,
    word: &DiffeoWord,
    z: &[f64],
    cfg: &IntegratorConfig,
    tube_checks: &mut usize,
) -> Result<Vec<f64>, PlanError> {
    const SLACK: f64 = 1e-7;
    let mut point = z.to_vec();
    for (idx, letter) in word.letters().iter().enumerate().rev() {
        if letter.role == LetterRole::Displacing {
            if !plan.spec.tube_contains(&point, SLACK) {
                return Err(PlanError::TubeDiscipline {
                    letter: idx,
                    point: point.clone(),
                });
            }
        }
        apply_letter(letter, &mut point, cfg)?;
        if letter.role == LetterRole::Displacing {
            *tube_checks += 1;
            if !plan.spec.tube_contains(&point, SLACK) {
                return Err(PlanError::TubeDiscipline {
                    letter: idx,
                    point: point.clone(),
                });
            }
        }
    }
    Ok(point)
}

fn sample_points(plan: &FactorizationPlan, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let spec = &plan.spec;
    let dim = 2 * spec.n;
    let mut points = Vec::with_capacity(samples);

    // Deterministic lattice over the box of B(r), filtered to the ball.
    let per_axis = ((samples as f64 / 2.0).powf(1.0 / dim as f64).ceil() as usize).max(2);
    let mut index = vec![0usize; dim];
    loop {
        let z: Vec<f64> = index
            .iter()
            .map(|&i| -spec.r + 2.0 * spec.r * (i as f64 + 0.5) / per_axis as f64)
            .collect();
        if z.iter().map(|v| v * v).sum::<f64>().sqrt() <= spec.r {
            points.push(z);
        }
        let mut axis = 0;
        loop {
            index[axis] += 1;
            if index[axis] < per_axis {
                break;
            }
            index[axis] = 0;
            axis += 1;
            if axis == dim {
                break;
            }
        }
        if axis == dim || points.len() >= samples {
            break;
        }
    }

    // Seeded uniform points over the sampling window fill the remainder.
    let window = plan.sampling_window();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while points.len() < samples {
        points.push(
            window
                .iter()
                .map(|[lo, hi]| rng.gen_range(*lo..=*hi))
                .collect(),
        );
    }
    points.truncate(samples);
    points
}

/// Verify the composition at sampled points; also re-checks the glued flow
/// against the conjugate word and, optionally, the `A1` witness via its
/// pushforward field at a few points.
pub fn verify_factorization(
    plan: &FactorizationPlan,
    samples: usize,
    tolerance: f64,
    seed: u64,
    cfg: &IntegratorConfig,
    deep_conjugation_points: usize,
) -> Result<CompositionReport, PlanError> {
    assert!(samples >= 1);
    let points = sample_points(plan, samples, seed);
    let composed = plan.composed();
    let mut tube_checks = 0usize;
    let mut max_error: f64 = 0.0;
    let mut total_error = 0.0;
    for z in &points {
        let fz = evaluate_word(&plan.f_word, z, cfg)?;
        let az = evaluate_composed_checked(plan, &composed, z, cfg, &mut tube_checks)?;
        let err: f64 = fz
            .iter()
            .zip(&az)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        max_error = max_error.max(err);
        total_error += err;
    }
    let mean_error = total_error / points.len() as f64;

    let glued = verify_glued_autonomy(plan, 50, 1e-4, seed ^ 0x9e3779b97f4a7c15, cfg)?;
    let symbolic_coherence = plan.symbolic_coherence();

    let deep_conjugation_residual = if deep_conjugation_points > 0 {
        Some(deep_conjugation_residual(
            plan,
            deep_conjugation_points,
            seed ^ 0x517cc1b727220a95,
            cfg,
        )?)
    } else {
        None
    };

    let pass = max_error <= tolerance && glued.pass && symbolic_coherence;
    Ok(CompositionReport {
        samples: points.len(),
        tolerance,
        max_error,
        mean_error,
        symbolic_coherence,
        tube_checks,
        glued,
        deep_conjugation_residual,
        pass,
    })
}

/// Criterion for the autonomy of the third factor: the time-1 flow of the
/// glued Hamiltonian must reproduce the word `b`, and the opposite
/// conjugation convention must fail to.
pub fn verify_glued_autonomy(
    plan: &FactorizationPlan,
    points: usize,
    tolerance: f64,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<GluedAutonomyReport, PlanError> {
    let spec = &plan.spec;
    let m = plan.m();
    let dim = 2 * spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Sample where the dynamics actually happen: each point lands in a
    // uniformly chosen displaced ball box (k = -m..-1) or the original box.
    let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let k = rng.gen_range(-(m as i64)..=0);
        let mut z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-spec.r..=spec.r)).collect();
        z[0] += k as f64 * spec.l;
        z
    };

    let alt = alternative_glued(plan);
    let mut forward_err: f64 = 0.0;
    let mut inverse_err: f64 = 0.0;
    for _ in 0..points {
        let z = sample(&mut rng);
        let word_image = evaluate_word(&plan.b_word, &z, cfg)?;
        let flow_image = flow(&plan.glued, 1.0, &z, cfg)?;
        let alt_image = flow(&alt, 1.0, &z, cfg)?;
        let d = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
        };
        inverse_err = inverse_err.max(d(&flow_image, &word_image));
        forward_err = forward_err.max(d(&alt_image, &word_image));
    }
    Ok(GluedAutonomyReport {
        points,
        tolerance,
        pullback_by_inverse_max_error: inverse_err,
        pullback_by_forward_max_error: forward_err,
        pass: inverse_err <= tolerance,
    })
}

/// The glued sum under the opposite conjugation convention,
/// `sum_i F_i o h^{k_i}`: summands shift the other way.
fn alternative_glued(plan: &FactorizationPlan) -> HamiltonianExpr {
    let m = plan.m();
    let mut acc: Option<HamiltonianExpr> = None;
    for (idx, f) in plan.factors.iter().enumerate() {
        let k = idx as f64 + 1.0 - m as f64 - 1.0;
        let summand = f.shift_coordinate(0, k * plan.spec.l);
        acc = Some(match acc {
            None => summand,
            Some(a) => a.add(summand),
        });
    }
    acc.expect("at least one factor")
}

/// Residual of the `A1` autonomy witness: integrate the pushforward field
/// `Dg . X_H o g^{-1}` for one time unit and compare with the `A1` word.
fn deep_conjugation_residual(
    plan: &FactorizationPlan,
    points: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<f64, PlanError> {
    use crate::geometry::{integrate_field, jacobian, vector_field};
    let spec = &plan.spec;
    let dim = 2 * spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // The conjugated dynamics are stiff (speeds of order L during the burst
    // where the factor flow is undone), so the outer integration needs the
    // full 1e-3 step. The word evaluations inside the field can afford a
    // coarser step: their error enters through the finite-difference
    // Jacobian, and 5e-3 words under a 1e-3 difference width keep that noise
    // near 1e-5.
    let outer = IntegratorConfig {
        step: cfg.step.min(1e-3),
        ..*cfg
    };
    let inner = IntegratorConfig {
        step: cfg.step.max(5e-3),
        ..*cfg
    };
    let fd_eps = 1e-3;
    let mut max_residual: f64 = 0.0;
    for _ in 0..points {
        let mut z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-spec.r..=spec.r)).collect();
        z[0] -= spec.l; // inside the first displaced ball, where A1 acts
        let expected = evaluate_word(&plan.a1, &z, &inner)?;
        let mut integrated = z.clone();
        let mut field_error: Option<FlowError> = None;
        integrate_field(
            |point, out| {
                let result = (|| -> Result<(), FlowError> {
                    let w = evaluate_word(&plan.g.invert(), point, &inner)?;
                    let jac = jacobian(&plan.g, &w, fd_eps, &inner)?;
                    let xh = vector_field(&plan.displacing, &w);
                    for (r, row) in jac.iter().enumerate() {
                        out[r] = row.iter().zip(&xh).map(|(a, b)| a * b).sum();
                    }
                    Ok(())
                })();
                if let Err(e) = result {
                    field_error.get_or_insert(e);
                    out.fill(0.0);
                }
            },
            1.0,
            &mut integrated,
            &outer,
            None,
        )?;
        if let Some(e) = field_error {
            return Err(e.into());
        }
        let residual: f64 = expected
            .iter()
            .zip(&integrated)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(residual);
    }
    Ok(max_residual)
}
