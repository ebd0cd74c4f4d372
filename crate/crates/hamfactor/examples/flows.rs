//! Hamiltonian flows: the rotation oracle, energy conservation along
//! trajectories, symplecticity of the Jacobian, and word composition.
//!
//! Run with: `cargo run --example flows`

use hamfactor::expr::parse;
use hamfactor::geometry::{
    evaluate_word, flow, jacobian, symplectic_residual_of_jacobian, vector_field, DiffeoWord,
    IntegratorConfig, Letter,
};

fn main() {
    let cfg = IntegratorConfig::default();

    // The harmonic oscillator rotates phase space clockwise: from (1, 0),
    // time pi/2 reaches (0, -1) in closed form.
    let oscillator = parse("(x1^2+y1^2)/2", 1).unwrap();
    println!(
        "X_F at (1, 0) for F = (x1^2+y1^2)/2: {:?}",
        vector_field(&oscillator, &[1.0, 0.0])
    );
    let z = flow(&oscillator, std::f64::consts::FRAC_PI_2, &[1.0, 0.0], &cfg).unwrap();
    println!("flow for t = pi/2 from (1, 0): ({:+.10}, {:+.10})", z[0], z[1]);
    println!("closed-form answer:            (+0.0000000000, -1.0000000000)");

    // Energy is conserved along autonomous flows.
    let bump = parse("0.5*bump(x1/0.8)*bump(y1/0.8)", 1).unwrap();
    let z0 = [0.3, -0.2];
    let mut max_drift: f64 = 0.0;
    for k in 1..=10 {
        let t = k as f64 / 10.0;
        let zt = flow(&bump, t, &z0, &cfg).unwrap();
        max_drift = max_drift.max((bump.eval(&zt) - bump.eval(&z0)).abs());
    }
    println!("\nenergy drift along a bump flow, t in (0, 1]: {max_drift:.3e}");

    // The Jacobian of the time-t oscillator flow is rotation by -t.
    let t = 0.7;
    let word = DiffeoWord::new_unchecked(vec![Letter::new(oscillator, t)]);
    let jac = jacobian(&word, &[0.4, 0.1], 1e-4, &cfg).unwrap();
    println!("\nJacobian of the time-{t} oscillator flow:");
    println!("  [{:+.6} {:+.6}]   cos t = {:+.6}", jac[0][0], jac[0][1], t.cos());
    println!("  [{:+.6} {:+.6}]   sin t = {:+.6}", jac[1][0], jac[1][1], t.sin());
    let residual = symplectic_residual_of_jacobian(&jac);
    println!(
        "symplecticity: |J^T O J - O| = {:.3e}, |det J - 1| = {:.3e}",
        residual.omega_residual,
        residual.det_deviation.unwrap()
    );

    // Words compose right-to-left; a word against its inverse is the
    // identity up to integrator error.
    let a = Letter::new(bump.clone(), 1.0);
    let b = Letter::new(
        parse("0.4*bump((x1-0.2)/0.5)*bump(y1/0.5)", 1).unwrap(),
        1.0,
    );
    let w = DiffeoWord::new(vec![a, b]).unwrap();
    let round_trip = evaluate_word(&w.compose(&w.invert()), &z0, &cfg).unwrap();
    let err: f64 = round_trip
        .iter()
        .zip(&z0)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    println!("\n|w(w^-1(z)) - z| for a two-letter word: {err:.3e}");
}
