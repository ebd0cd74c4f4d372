//! Calabi values and the zero-Calabi variant: when the input factors sum to
//! Calabi zero, compensating the displacing Hamiltonian with a remote bump
//! makes every one of the three factors Calabi-trivial while leaving the
//! composition untouched.
//!
//! Run with: `cargo run --release --example calabi_balance`

use hamfactor::calabi::{balance_calabi, calabi, calabi_of_plan, default_grid_spacing};
use hamfactor::expr::parse;
use hamfactor::factorization::{plan_factorization, verify_factorization, PlanOverrides};
use hamfactor::geometry::IntegratorConfig;

fn main() {
    // F2 is -F1 translated inside the ball, so Cal(F1) + Cal(F2) = 0.
    let factors = vec![
        parse("0.5*bump(x1/0.4)*bump((y1-0.3)/0.4)", 1).unwrap(),
        parse("-(0.5*bump(x1/0.4)*bump((y1+0.3)/0.4))", 1).unwrap(),
    ];
    let plan = plan_factorization(&factors, &PlanOverrides::default()).unwrap();
    let spacing = default_grid_spacing(plan.spec.r);
    println!("quadrature spacing: {spacing:.5}");

    for (i, f) in factors.iter().enumerate() {
        let v = calabi(f, spacing).unwrap();
        println!(
            "Cal(F{}) = {:+.9e}  (refinement delta {:.1e})",
            i + 1,
            v.value,
            v.refinement_delta
        );
    }

    let cfg = IntegratorConfig::default();
    let before = calabi_of_plan(&plan, spacing, false, &cfg).unwrap();
    println!("\nunbalanced plan:");
    println!("  Cal(G)  = {:+.3e} vs sum of factors {:+.3e}", before.glued.value, before.factor_sum);
    println!("  Cal(A1) = {:+.3e}, Cal(A2) = {:+.3e}, Cal(A3) = {:+.3e}", before.a1, before.a2, before.a3);

    let balanced = balance_calabi(&plan, spacing).unwrap();
    println!("\nbalancing:");
    println!("  measured kernel sum: {:+.3e}", balanced.kernel_sum);
    println!("  compensating amplitude kappa: {:+.3e}", balanced.kappa);
    println!("  Cal(H') after balancing: {:.3e}", balanced.displacing_residual);

    let after = calabi_of_plan(&balanced.plan, spacing, false, &cfg).unwrap();
    println!("\nbalanced plan:");
    println!(
        "  |Cal(A1)| = {:.3e}, |Cal(A2)| = {:.3e}, |Cal(A3)| = {:.3e}  (all <= 1e-5)",
        after.a1.abs(),
        after.a2.abs(),
        after.a3.abs()
    );

    let comp = verify_factorization(&balanced.plan, 120, 1e-3, 42, &cfg, 0).unwrap();
    println!(
        "  composition still verifies: max error {:.3e} over {} points -> {}",
        comp.max_error,
        comp.samples,
        if comp.pass { "PASS" } else { "FAIL" }
    );
}
