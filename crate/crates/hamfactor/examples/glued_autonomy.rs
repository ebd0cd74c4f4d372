//! Autonomy of the third factor: the product of conjugates
//! b = prod_i h^{k_i} a_i h^{-k_i} equals the time-1 flow of the single
//! Hamiltonian G = sum_i F_i(. - k_i L e_{x1}), because the summands have
//! pairwise disjoint supports. Conjugation acts on Hamiltonians by
//! F -> F o psi^{-1}; gluing with the opposite convention puts the
//! summands on the wrong side and fails, which pins the convention.
//!
//! Run with: `cargo run --release --example glued_autonomy`

use hamfactor::expr::{parse, SupportBound};
use hamfactor::factorization::{plan_factorization, verify_glued_autonomy, PlanOverrides};
use hamfactor::geometry::IntegratorConfig;

fn main() {
    let factors = vec![
        parse("0.6*bump(x1/0.6)*bump(y1/0.6)", 1).unwrap(),
        parse("0.4*bump((x1-0.1)/0.5)*bump((y1-0.1)/0.5)", 1).unwrap(),
    ];
    let plan = plan_factorization(&factors, &PlanOverrides::default()).unwrap();

    println!("glued Hamiltonian G (m = {}):", plan.m());
    println!("  {}", plan.glued);
    match plan.glued.support_bound() {
        SupportBound::Box(ivs) => println!(
            "  support box: x1 in [{:.3}, {:.3}], y1 in [{:.3}, {:.3}]",
            ivs[0][0], ivs[0][1], ivs[1][0], ivs[1][1]
        ),
        other => println!("  support: {other:?}"),
    }
    println!(
        "  summand i sits in B(r) + (i - m - 1) L e_x1 with L = {:.4}",
        plan.spec.l
    );

    let cfg = IntegratorConfig::default();
    let report = verify_glued_autonomy(&plan, 50, 1e-4, 42, &cfg).unwrap();
    println!("\nflow of G for time 1 vs the word b at {} points:", report.points);
    println!(
        "  pullback by the inverse conjugator (F_i o h^{{-k_i}}): max error {:.3e}  <- the construction",
        report.pullback_by_inverse_max_error
    );
    println!(
        "  pullback by the forward conjugator (F_i o h^{{k_i}}):  max error {:.3e}  <- fails, wrong side",
        report.pullback_by_forward_max_error
    );
    println!("  verdict: {}", if report.pass { "PASS" } else { "FAIL" });
}
