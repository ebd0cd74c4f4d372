//! A minimal expression language for compactly supported smooth scalar
//! fields on R^2n.
//!
//! Expressions are closed-form trees over `{+, -, *, /, ^, exp, bump, step}`
//! and the phase-space coordinates `x1, y1, ..., xn, yn`. The two built-ins
//! `bump` and `step` provide all the C-infinity plateaus and cutoffs the
//! constructions need; everything else is ordinary arithmetic. Division is
//! only admitted when the denominator carries a structural positive lower
//! bound, which makes evaluation total.
//!
//! Differentiation is exact: [`HamiltonianExpr::grad`] applies the
//! sum/product/quotient/chain rules node by node, with the closed-form
//! derivatives of `bump` and `step` from [`special`]. Support bounds are
//! structural over-approximations; see [`support`].
//!
//! Expressions are immutable after construction, and evaluation is pure, so
//! values may be shared freely across threads.

mod parser;
pub mod special;
mod support;
mod tape;

pub use parser::{parse, ParseError, ParseErrorKind};
pub use support::SupportBound;
pub(crate) use tape::{symplectic_swizzle, FieldProgram, FieldScratch};

use std::fmt;

/// Which member of a conjugate coordinate pair a variable refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// One node of an expression tree. Variables are stored by coordinate slot:
/// `x_i` occupies slot `2(i-1)` and `y_i` slot `2(i-1)+1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
    Neg(Box<Node>),
    Exp(Box<Node>),
    Bump(Box<Node>),
    Step(Box<Node>),
}

/// A closed-form scalar field on R^2n.
///
/// The half-dimension `n` is part of the value; combining expressions with
/// mismatched `n` is a programming error and panics.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianExpr {
    n: usize,
    root: Node,
}

/// Error from [`HamiltonianExpr::div`]: the denominator has no structural
/// positive lower bound, so the quotient could divide by zero.
#[derive(Debug, Clone, thiserror::Error)]
#[error("denominator has no structural positive lower bound")]
pub struct UnguardedQuotient;

impl HamiltonianExpr {
    pub(crate) fn from_node(n: usize, root: Node) -> Self {
        assert!(n >= 1, "half-dimension must be positive");
        Self { n, root }
    }

    /// Half-dimension of the ambient phase space.
    pub fn half_dim(&self) -> usize {
        self.n
    }

    /// Full phase-space dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub(crate) fn root(&self) -> &Node {
        &self.root
    }

    /// Constant field. Negative values are stored as a negated positive
    /// constant so that printing round-trips to the identical tree.
    pub fn constant(n: usize, value: f64) -> Self {
        assert!(value.is_finite(), "constants must be finite");
        Self::from_node(n, const_node(value))
    }

    /// The zero field.
    pub fn zero(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    /// The coordinate `x_i` or `y_i` (1-based index).
    pub fn var(n: usize, axis: Axis, index: usize) -> Self {
        assert!(index >= 1 && index <= n, "variable index out of range");
        let slot = 2 * (index - 1) + if axis == Axis::Y { 1 } else { 0 };
        Self::from_node(n, Node::Var(slot))
    }

    pub fn x(n: usize, index: usize) -> Self {
        Self::var(n, Axis::X, index)
    }

    pub fn y(n: usize, index: usize) -> Self {
        Self::var(n, Axis::Y, index)
    }

    fn join(self, rhs: Self, f: impl FnOnce(Box<Node>, Box<Node>) -> Node) -> Self {
        assert_eq!(self.n, rhs.n, "half-dimension mismatch");
        Self::from_node(self.n, f(Box::new(self.root), Box::new(rhs.root)))
    }

    pub fn add(self, rhs: Self) -> Self {
        self.join(rhs, Node::Add)
    }

    pub fn sub(self, rhs: Self) -> Self {
        self.join(rhs, Node::Sub)
    }

    pub fn mul(self, rhs: Self) -> Self {
        self.join(rhs, Node::Mul)
    }

    /// Quotient; the denominator must carry a structural positive lower bound.
    pub fn div(self, rhs: Self) -> Result<Self, UnguardedQuotient> {
        if support::positive_lower_bound(&rhs.root).is_none() {
            return Err(UnguardedQuotient);
        }
        Ok(self.join(rhs, Node::Div))
    }

    pub fn pow(self, exponent: u32) -> Self {
        Self::from_node(self.n, Node::Pow(Box::new(self.root), exponent))
    }

    pub fn neg(self) -> Self {
        Self::from_node(self.n, Node::Neg(Box::new(self.root)))
    }

    pub fn exp(self) -> Self {
        Self::from_node(self.n, Node::Exp(Box::new(self.root)))
    }

    pub fn bump(self) -> Self {
        Self::from_node(self.n, Node::Bump(Box::new(self.root)))
    }

    pub fn step(self) -> Self {
        Self::from_node(self.n, Node::Step(Box::new(self.root)))
    }

    /// Multiply by a scalar constant.
    pub fn scale(self, c: f64) -> Self {
        let n = self.n;
        Self::constant(n, c).mul(self)
    }

    /// `self + c` with the constant folded into a canonical add/sub.
    pub fn offset(self, c: f64) -> Self {
        let n = self.n;
        if c >= 0.0 {
            self.add(Self::constant(n, c))
        } else {
            self.sub(Self::constant(n, -c))
        }
    }

    /// Substitute `coordinate slot -> slot + delta` everywhere, i.e. evaluate
    /// `self` at a point translated by `-delta` along that coordinate.
    pub fn shift_coordinate(&self, slot: usize, delta: f64) -> Self {
        assert!(slot < self.dim(), "coordinate slot out of range");
        fn walk(node: &Node, slot: usize, delta: f64) -> Node {
            match node {
                Node::Var(s) if *s == slot => {
                    let var = Box::new(Node::Var(*s));
                    if delta >= 0.0 {
                        Node::Add(var, Box::new(const_node(delta)))
                    } else {
                        Node::Sub(var, Box::new(const_node(-delta)))
                    }
                }
                Node::Const(_) | Node::Var(_) => node.clone(),
                Node::Add(a, b) => Node::Add(walk(a, slot, delta).into(), walk(b, slot, delta).into()),
                Node::Sub(a, b) => Node::Sub(walk(a, slot, delta).into(), walk(b, slot, delta).into()),
                Node::Mul(a, b) => Node::Mul(walk(a, slot, delta).into(), walk(b, slot, delta).into()),
                Node::Div(a, b) => Node::Div(walk(a, slot, delta).into(), walk(b, slot, delta).into()),
                Node::Pow(a, k) => Node::Pow(walk(a, slot, delta).into(), *k),
                Node::Neg(a) => Node::Neg(walk(a, slot, delta).into()),
                Node::Exp(a) => Node::Exp(walk(a, slot, delta).into()),
                Node::Bump(a) => Node::Bump(walk(a, slot, delta).into()),
                Node::Step(a) => Node::Step(walk(a, slot, delta).into()),
            }
        }
        Self::from_node(self.n, walk(&self.root, slot, delta))
    }

    /// Exact recursive evaluation at a phase point.
    pub fn eval(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.dim(), "phase point dimension mismatch");
        eval_node(&self.root, z)
    }

    /// Exact gradient (all `2n` partials) at a phase point.
    pub fn grad(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim(), "phase point dimension mismatch");
        let mut grad = vec![0.0; self.dim()];
        grad_node(&self.root, z, 1.0, &mut grad);
        grad
    }

    /// Structural support bound: a box outside of which the expression
    /// evaluates to exactly zero, when the tree certifies one.
    pub fn support_bound(&self) -> SupportBound {
        support::support_bound(&self.root, self.dim())
    }

    /// Canonical printer; [`parse`] of the output reproduces the tree.
    pub fn print(&self) -> String {
        let mut out = String::new();
        print_node(&self.root, self.n, &mut out);
        out
    }

    pub(crate) fn compile(&self) -> FieldProgram {
        FieldProgram::compile(self)
    }
}

impl fmt::Display for HamiltonianExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.print())
    }
}

fn const_node(value: f64) -> Node {
    // -0.0 normalizes to 0.0; negative constants become Neg(positive) so the
    // printed form stays inside the grammar.
    if value == 0.0 {
        Node::Const(0.0)
    } else if value < 0.0 {
        Node::Neg(Box::new(Node::Const(-value)))
    } else {
        Node::Const(value)
    }
}

fn eval_node(node: &Node, z: &[f64]) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Var(slot) => z[*slot],
        Node::Add(a, b) => eval_node(a, z) + eval_node(b, z),
        Node::Sub(a, b) => eval_node(a, z) - eval_node(b, z),
        Node::Mul(a, b) => eval_node(a, z) * eval_node(b, z),
        Node::Div(a, b) => eval_node(a, z) / eval_node(b, z),
        Node::Pow(a, k) => pow_value(eval_node(a, z), *k),
        Node::Neg(a) => -eval_node(a, z),
        Node::Exp(a) => eval_node(a, z).exp(),
        Node::Bump(a) => special::bump(eval_node(a, z)),
        Node::Step(a) => special::step(eval_node(a, z)),
    }
}

fn pow_value(base: f64, k: u32) -> f64 {
    // x^0 == 1 by convention, including 0^0.
    base.powi(k as i32)
}

/// Accumulate `seed * d(node)/dz` into `grad`. Using a seed instead of
/// materializing child gradients keeps the recursion allocation-free.
fn grad_node(node: &Node, z: &[f64], seed: f64, grad: &mut [f64]) {
    match node {
        Node::Const(_) => {}
        Node::Var(slot) => grad[*slot] += seed,
        Node::Add(a, b) => {
            grad_node(a, z, seed, grad);
            grad_node(b, z, seed, grad);
        }
        Node::Sub(a, b) => {
            grad_node(a, z, seed, grad);
            grad_node(b, z, -seed, grad);
        }
        Node::Mul(a, b) => {
            let va = eval_node(a, z);
            let vb = eval_node(b, z);
            grad_node(a, z, seed * vb, grad);
            grad_node(b, z, seed * va, grad);
        }
        Node::Div(a, b) => {
            let va = eval_node(a, z);
            let vb = eval_node(b, z);
            grad_node(a, z, seed / vb, grad);
            grad_node(b, z, -seed * va / (vb * vb), grad);
        }
        Node::Pow(a, k) => {
            if *k >= 1 {
                let va = eval_node(a, z);
                grad_node(a, z, seed * (*k as f64) * pow_value(va, *k - 1), grad);
            }
        }
        Node::Neg(a) => grad_node(a, z, -seed, grad),
        Node::Exp(a) => {
            let va = eval_node(a, z);
            grad_node(a, z, seed * va.exp(), grad);
        }
        Node::Bump(a) => {
            let va = eval_node(a, z);
            grad_node(a, z, seed * special::bump_prime(va), grad);
        }
        Node::Step(a) => {
            let va = eval_node(a, z);
            grad_node(a, z, seed * special::step_prime(va), grad);
        }
    }
}

fn print_node(node: &Node, n: usize, out: &mut String) {
    use std::fmt::Write;
    match node {
        Node::Const(c) => {
            let _ = write!(out, "{c:?}");
        }
        Node::Var(slot) => {
            let axis = if slot % 2 == 0 { 'x' } else { 'y' };
            let _ = write!(out, "{axis}{}", slot / 2 + 1);
            debug_assert!(slot / 2 < n);
        }
        Node::Add(a, b) => binary(a, "+", b, n, out),
        Node::Sub(a, b) => binary(a, "-", b, n, out),
        Node::Mul(a, b) => binary(a, "*", b, n, out),
        Node::Div(a, b) => binary(a, "/", b, n, out),
        Node::Pow(a, k) => {
            use std::fmt::Write;
            out.push('(');
            print_node(a, n, out);
            let _ = write!(out, "^{k}");
            out.push(')');
        }
        Node::Neg(a) => {
            out.push_str("(-");
            print_node(a, n, out);
            out.push(')');
        }
        Node::Exp(a) => func("exp", a, n, out),
        Node::Bump(a) => func("bump", a, n, out),
        Node::Step(a) => func("step", a, n, out),
    }
}

fn binary(a: &Node, op: &str, b: &Node, n: usize, out: &mut String) {
    out.push('(');
    print_node(a, n, out);
    out.push_str(op);
    print_node(b, n, out);
    out.push(')');
}

fn func(name: &str, a: &Node, n: usize, out: &mut String) {
    out.push_str(name);
    out.push('(');
    print_node(a, n, out);
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(e: &HamiltonianExpr, z: &[f64], h: f64) -> Vec<f64> {
        (0..z.len())
            .map(|j| {
                let mut zp = z.to_vec();
                let mut zm = z.to_vec();
                zp[j] += h;
                zm[j] -= h;
                (e.eval(&zp) - e.eval(&zm)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn eval_bump_normalization() {
        let e = HamiltonianExpr::y(1, 1).bump();
        assert_eq!(e.eval(&[0.3, 0.0]), 1.0);
        assert_eq!(e.eval(&[0.0, 2.0]), 0.0);
    }

    #[test]
    fn eval_step_half() {
        let e = HamiltonianExpr::x(1, 1).step();
        assert_eq!(e.eval(&[0.5, 0.0]), 0.5);
    }

    #[test]
    fn grad_constant_is_zero() {
        let e = HamiltonianExpr::constant(2, 4.25);
        assert_eq!(e.grad(&[1.0, 2.0, 3.0, 4.0]), vec![0.0; 4]);
    }

    #[test]
    fn grad_quadratic() {
        // (x1^2 + y1^2) / 2 at (1, 2) -> (1, 2)
        let n = 1;
        let e = HamiltonianExpr::x(n, 1)
            .pow(2)
            .add(HamiltonianExpr::y(n, 1).pow(2))
            .div(HamiltonianExpr::constant(n, 2.0))
            .unwrap();
        assert_eq!(e.grad(&[1.0, 2.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn grad_matches_finite_differences_on_bump() {
        let e = HamiltonianExpr::y(1, 1).bump();
        let z = [0.0, 0.5];
        let g = e.grad(&z);
        let fd = fd_grad(&e, &z, 1e-5);
        let rel = (g[1] - fd[1]).abs() / g[1].abs().max(1e-12);
        assert!(rel <= 1e-6, "relative error {rel}");
    }

    #[test]
    fn shift_coordinate_translates_argument() {
        let e = HamiltonianExpr::x(1, 1).bump();
        let shifted = e.shift_coordinate(0, 2.0); // bump(x1 + 2)
        assert_eq!(shifted.eval(&[-2.0, 0.0]), 1.0);
        assert_eq!(shifted.eval(&[0.0, 0.0]), e.eval(&[2.0, 0.0]));
        let back = e.shift_coordinate(0, -2.0);
        assert_eq!(back.eval(&[2.0, 0.0]), 1.0);
    }

    #[test]
    fn negative_constants_print_inside_grammar() {
        let e = HamiltonianExpr::constant(1, -1.5);
        assert_eq!(e.print(), "(-1.5)");
        let reparsed = parse(&e.print(), 1).unwrap();
        assert_eq!(reparsed, e);
    }

    #[test]
    fn unguarded_quotient_rejected() {
        let n = 1;
        let num = HamiltonianExpr::constant(n, 1.0);
        let den = HamiltonianExpr::x(n, 1);
        assert!(num.div(den).is_err());
    }

    #[test]
    fn guarded_quotient_accepted() {
        let n = 1;
        // x1^2 + 0.25 has a positive lower bound
        let den = HamiltonianExpr::x(n, 1)
            .pow(2)
            .add(HamiltonianExpr::constant(n, 0.25));
        let q = HamiltonianExpr::y(n, 1).div(den).unwrap();
        assert!(q.eval(&[0.0, 1.0]).is_finite());
    }
}
