//! Structural support bounds and positivity certificates.
//!
//! The analysis is deliberately syntactic: `bump` and `step` applied to an
//! affine function of a single coordinate bound that coordinate, sums take
//! per-coordinate hulls, products intersect per-factor knowledge, and
//! everything else is conservative. A returned box is therefore sound (the
//! expression is exactly zero outside it) but never claimed tight.

use serde::Serialize;

use super::Node;

/// Result of the support analysis.
///
/// `Empty` means the expression is identically zero. `Box` gives closed
/// per-coordinate intervals, ordered `x1, y1, ..., xn, yn`, outside of which
/// the expression evaluates to exactly zero. `Unbounded` means the structure
/// certifies nothing in at least one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SupportBound {
    Empty,
    Box(Vec<[f64; 2]>),
    Unbounded,
}

impl SupportBound {
    /// True when `z` lies strictly outside the bound (so the field is zero
    /// there and a flow may skip it). `Unbounded` never excludes a point.
    pub fn excludes(&self, z: &[f64]) -> bool {
        match self {
            SupportBound::Empty => true,
            SupportBound::Unbounded => false,
            SupportBound::Box(ivs) => ivs
                .iter()
                .zip(z)
                .any(|([lo, hi], v)| *v < *lo || *v > *hi),
        }
    }

    /// Radius of the smallest origin-centered ball containing the box.
    pub fn enclosing_radius(&self) -> Option<f64> {
        match self {
            SupportBound::Empty => Some(0.0),
            SupportBound::Unbounded => None,
            SupportBound::Box(ivs) => Some(
                ivs.iter()
                    .map(|[lo, hi]| lo.abs().max(hi.abs()).powi(2))
                    .sum::<f64>()
                    .sqrt(),
            ),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, SupportBound::Unbounded)
    }
}

/// Per-coordinate partial knowledge; intervals may be half-infinite.
#[derive(Debug, Clone)]
struct Info {
    zero: bool,
    coords: Vec<[f64; 2]>,
}

impl Info {
    fn unbounded(dim: usize) -> Self {
        Info {
            zero: false,
            coords: vec![[f64::NEG_INFINITY, f64::INFINITY]; dim],
        }
    }

    fn zero(dim: usize) -> Self {
        Info {
            zero: true,
            coords: vec![[f64::NEG_INFINITY, f64::INFINITY]; dim],
        }
    }
}

pub(super) fn support_bound(node: &Node, dim: usize) -> SupportBound {
    let info = analyze(node, dim);
    if info.zero {
        return SupportBound::Empty;
    }
    if info.coords.iter().all(|[lo, hi]| lo.is_finite() && hi.is_finite()) {
        SupportBound::Box(info.coords)
    } else {
        SupportBound::Unbounded
    }
}

fn analyze(node: &Node, dim: usize) -> Info {
    match node {
        Node::Const(c) => {
            if *c == 0.0 {
                Info::zero(dim)
            } else {
                Info::unbounded(dim)
            }
        }
        Node::Var(_) => Info::unbounded(dim),
        Node::Add(a, b) | Node::Sub(a, b) => {
            let ia = analyze(a, dim);
            let ib = analyze(b, dim);
            if ia.zero {
                return ib;
            }
            if ib.zero {
                return ia;
            }
            // Outside the hull both summands vanish.
            let coords = ia
                .coords
                .iter()
                .zip(&ib.coords)
                .map(|(p, q)| [p[0].min(q[0]), p[1].max(q[1])])
                .collect();
            Info { zero: false, coords }
        }
        Node::Mul(a, b) => {
            let ia = analyze(a, dim);
            let ib = analyze(b, dim);
            if ia.zero || ib.zero {
                return Info::zero(dim);
            }
            // Outside either factor's box the product vanishes.
            let mut coords = Vec::with_capacity(dim);
            for (p, q) in ia.coords.iter().zip(&ib.coords) {
                let lo = p[0].max(q[0]);
                let hi = p[1].min(q[1]);
                if lo > hi {
                    // Disjoint factor supports: product is identically zero.
                    return Info::zero(dim);
                }
                coords.push([lo, hi]);
            }
            Info { zero: false, coords }
        }
        Node::Div(a, _) => analyze(a, dim),
        Node::Neg(a) => analyze(a, dim),
        Node::Pow(a, k) => {
            if *k == 0 {
                Info::unbounded(dim)
            } else {
                analyze(a, dim)
            }
        }
        Node::Exp(_) => Info::unbounded(dim),
        Node::Bump(arg) => match as_affine(arg) {
            Some((Some(slot), a, b)) if a != 0.0 => {
                // |a v + b| >= 1 => bump = 0; bound v to [(-1-b)/a, (1-b)/a].
                let u = (-1.0 - b) / a;
                let w = (1.0 - b) / a;
                boxed(dim, slot, u.min(w), u.max(w))
            }
            Some((_, _, b)) if b.abs() >= 1.0 => Info::zero(dim),
            _ => Info::unbounded(dim),
        },
        Node::Step(arg) => match as_affine(arg) {
            Some((Some(slot), a, b)) if a > 0.0 => boxed(dim, slot, -b / a, f64::INFINITY),
            Some((Some(slot), a, b)) if a < 0.0 => boxed(dim, slot, f64::NEG_INFINITY, -b / a),
            Some((_, _, b)) if b <= 0.0 => Info::zero(dim),
            _ => Info::unbounded(dim),
        },
    }
}

fn boxed(dim: usize, slot: usize, lo: f64, hi: f64) -> Info {
    let mut info = Info::unbounded(dim);
    info.coords[slot] = [lo, hi];
    info
}

/// Recognize `a * z[slot] + b` for a single coordinate (slot `None` means the
/// expression is the constant `b`).
fn as_affine(node: &Node) -> Option<(Option<usize>, f64, f64)> {
    match node {
        Node::Const(c) => Some((None, 0.0, *c)),
        Node::Var(slot) => Some((Some(*slot), 1.0, 0.0)),
        Node::Neg(a) => {
            let (s, a, b) = as_affine(a)?;
            Some((s, -a, -b))
        }
        Node::Add(p, q) => combine(as_affine(p)?, as_affine(q)?, 1.0),
        Node::Sub(p, q) => combine(as_affine(p)?, as_affine(q)?, -1.0),
        Node::Mul(p, q) => {
            let (sp, ap, bp) = as_affine(p)?;
            let (sq, aq, bq) = as_affine(q)?;
            match (sp, sq) {
                (None, _) => Some((sq, bp * aq, bp * bq)),
                (_, None) => Some((sp, bq * ap, bq * bp)),
                _ => None,
            }
        }
        Node::Div(p, q) => {
            let (sp, ap, bp) = as_affine(p)?;
            let (sq, aq, bq) = as_affine(q)?;
            if sq.is_none() && aq == 0.0 && bq != 0.0 {
                Some((sp, ap / bq, bp / bq))
            } else {
                None
            }
        }
        Node::Pow(a, 1) => as_affine(a),
        Node::Pow(_, 0) => Some((None, 0.0, 1.0)),
        _ => None,
    }
}

fn combine(
    p: (Option<usize>, f64, f64),
    q: (Option<usize>, f64, f64),
    sign: f64,
) -> Option<(Option<usize>, f64, f64)> {
    let (sp, ap, bp) = p;
    let (sq, aq, bq) = q;
    let slot = match (sp, sq) {
        (Some(s), Some(t)) if s == t => Some(s),
        (Some(_), Some(_)) => return None,
        (Some(s), None) => Some(s),
        (None, t) => t,
    };
    Some((slot, ap + sign * aq, bp + sign * bq))
}

/// Structural positive lower bound for an expression, used to guard
/// quotients. Returns `Some(bound)` only when every point of R^2n evaluates
/// to at least `bound > 0`.
pub(super) fn positive_lower_bound(node: &Node) -> Option<f64> {
    match node {
        Node::Const(c) if *c > 0.0 => Some(*c),
        Node::Add(a, b) => match (positive_lower_bound(a), positive_lower_bound(b)) {
            (Some(p), Some(q)) => Some(p + q),
            (Some(p), None) if is_nonnegative(b) => Some(p),
            (None, Some(q)) if is_nonnegative(a) => Some(q),
            _ => None,
        },
        Node::Mul(a, b) => Some(positive_lower_bound(a)? * positive_lower_bound(b)?),
        Node::Neg(a) => match a.as_ref() {
            Node::Neg(inner) => positive_lower_bound(inner),
            _ => None,
        },
        Node::Pow(a, k) => {
            let p = positive_lower_bound(a)?;
            Some(p.powi(*k as i32))
        }
        _ => None,
    }
}

/// Structural nonnegativity.
fn is_nonnegative(node: &Node) -> bool {
    match node {
        Node::Const(c) => *c >= 0.0,
        Node::Bump(_) | Node::Step(_) | Node::Exp(_) => true,
        Node::Pow(a, k) => k % 2 == 0 || is_nonnegative(a),
        Node::Mul(a, b) => is_nonnegative(a) && is_nonnegative(b),
        Node::Add(a, b) => is_nonnegative(a) && is_nonnegative(b),
        Node::Div(a, b) => is_nonnegative(a) && positive_lower_bound(b).is_some(),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, HamiltonianExpr};
    use super::*;

    #[test]
    fn constant_zero_is_empty() {
        assert_eq!(parse("0", 1).unwrap().support_bound(), SupportBound::Empty);
    }

    #[test]
    fn single_coordinate_bump_is_unbounded_overall() {
        // bump(y1/r) bounds y1 but not x1.
        let e = parse("bump(y1/0.5)", 1).unwrap();
        assert_eq!(e.support_bound(), SupportBound::Unbounded);
    }

    #[test]
    fn product_of_bumps_is_a_box() {
        let e = parse("bump(x1/0.5)*bump(y1/0.5)", 1).unwrap();
        match e.support_bound() {
            SupportBound::Box(ivs) => {
                assert!((ivs[0][0] + 0.5).abs() < 1e-15 && (ivs[0][1] - 0.5).abs() < 1e-15);
                assert!((ivs[1][0] + 0.5).abs() < 1e-15 && (ivs[1][1] - 0.5).abs() < 1e-15);
            }
            other => panic!("expected box, got {other:?}"),
        }
    }

    #[test]
    fn sum_with_unbounded_term_is_unbounded() {
        let e = parse("bump(x1)+x1", 1).unwrap();
        assert_eq!(e.support_bound(), SupportBound::Unbounded);
    }

    #[test]
    fn step_pair_bounds_an_interval() {
        // plateau on [-1, 1] with shoulders of width 0.5
        let e = parse("step((x1+1.5)/0.5)*step((1.5-x1)/0.5)*bump(y1)", 1).unwrap();
        match e.support_bound() {
            SupportBound::Box(ivs) => {
                assert!((ivs[0][0] + 1.5).abs() < 1e-12);
                assert!((ivs[0][1] - 1.5).abs() < 1e-12);
            }
            other => panic!("expected box, got {other:?}"),
        }
    }

    #[test]
    fn disjoint_product_is_empty() {
        let e = parse("bump(x1)*bump(x1-10)", 1).unwrap();
        assert_eq!(e.support_bound(), SupportBound::Empty);
    }

    #[test]
    fn shifted_bump_box_shifts() {
        let e = parse("bump(x1/0.5)*bump(y1/0.5)", 1)
            .unwrap()
            .shift_coordinate(0, 3.0);
        match e.support_bound() {
            SupportBound::Box(ivs) => {
                assert!((ivs[0][0] + 3.5).abs() < 1e-12);
                assert!((ivs[0][1] + 2.5).abs() < 1e-12);
            }
            other => panic!("expected box, got {other:?}"),
        }
    }

    #[test]
    fn eval_is_exactly_zero_outside_box() {
        let e = parse("0.5*bump(x1/0.75)*bump((y1-0.25)/0.5)", 1).unwrap();
        let ivs = match e.support_bound() {
            SupportBound::Box(ivs) => ivs,
            other => panic!("expected box, got {other:?}"),
        };
        // Points just outside each face must evaluate to exactly 0.
        for (j, [lo, hi]) in ivs.iter().enumerate() {
            for v in [lo - 1e-9, hi + 1e-9, lo - 10.0, hi + 10.0] {
                let mut z = vec![0.0, 0.25];
                z[j] = v;
                assert_eq!(e.eval(&z), 0.0, "coordinate {j} at {v}");
            }
        }
    }

    #[test]
    fn enclosing_radius_of_box() {
        let e = parse("bump(x1/0.6)*bump(y1/0.8)", 1).unwrap();
        let r = e.support_bound().enclosing_radius().unwrap();
        assert!((r - (0.36_f64 + 0.64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn positivity_certificates() {
        let ok = |s: &str| positive_lower_bound(parse(s, 1).unwrap().root()).is_some();
        assert!(ok("0.5"));
        assert!(ok("x1^2+0.25"));
        assert!(ok("(x1^2+1)*(y1^2+2)"));
        assert!(ok("bump(x1)+1"));
        assert!(!ok("x1"));
        assert!(!ok("exp(x1)")); // infimum 0, not bounded away
        assert!(!ok("bump(x1)"));
        assert!(!ok("0"));
    }

    #[test]
    fn helper_constructors_bound_plateaus() {
        // step((v-a+eps)/eps) * step((b+eps-v)/eps) built programmatically
        let n = 1;
        let v = HamiltonianExpr::y(n, 1);
        let lo = v
            .clone()
            .offset(0.75)
            .div(HamiltonianExpr::constant(n, 0.25))
            .unwrap()
            .step();
        let hi = HamiltonianExpr::constant(n, 0.75)
            .sub(HamiltonianExpr::y(n, 1))
            .div(HamiltonianExpr::constant(n, 0.25))
            .unwrap()
            .step();
        let e = lo.mul(hi).mul(HamiltonianExpr::x(n, 1).bump());
        match e.support_bound() {
            SupportBound::Box(ivs) => {
                assert!((ivs[1][0] + 0.75).abs() < 1e-12);
                assert!((ivs[1][1] - 0.75).abs() < 1e-12);
            }
            other => panic!("expected box, got {other:?}"),
        }
    }
}
