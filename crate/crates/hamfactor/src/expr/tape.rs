//! Flat postorder compilation of expression trees.
//!
//! Flow integration evaluates the same Hamiltonian gradient millions of
//! times; walking the boxed tree with per-node allocation would dominate the
//! runtime. `FieldProgram` lowers a tree once into a vector of slot-indexed
//! ops evaluated forward-mode (value plus full gradient per slot) into
//! reusable buffers. The arithmetic per op is identical to the recursive
//! rules in the parent module.

use super::{special, HamiltonianExpr, Node};

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, u32),
    Neg(u32),
    Exp(u32),
    Bump(u32),
    Step(u32),
}

/// A compiled scalar field with forward-mode gradients.
#[derive(Debug, Clone)]
pub struct FieldProgram {
    ops: Vec<Op>,
    dim: usize,
}

/// Scratch buffers for one evaluation thread.
#[derive(Debug, Default)]
pub struct FieldScratch {
    vals: Vec<f64>,
    grads: Vec<f64>,
}

impl FieldProgram {
    pub fn compile(expr: &HamiltonianExpr) -> Self {
        let mut ops = Vec::new();
        lower(expr.root(), &mut ops);
        FieldProgram {
            ops,
            dim: expr.dim(),
        }
    }

    /// Evaluate value and gradient at `z`; the gradient of the root lands in
    /// `grad_out`. Returns the value.
    pub fn eval_grad(&self, z: &[f64], scratch: &mut FieldScratch, grad_out: &mut [f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim);
        let dim = self.dim;
        let slots = self.ops.len();
        scratch.vals.clear();
        scratch.vals.resize(slots, 0.0);
        scratch.grads.clear();
        scratch.grads.resize(slots * dim, 0.0);
        let vals = &mut scratch.vals;
        let grads = &mut scratch.grads;

        for (i, op) in self.ops.iter().enumerate() {
            match *op {
                Op::Const(c) => {
                    vals[i] = c;
                }
                Op::Var(slot) => {
                    vals[i] = z[slot as usize];
                    grads[i * dim + slot as usize] = 1.0;
                }
                Op::Add(a, b) => {
                    let (a, b) = (a as usize, b as usize);
                    vals[i] = vals[a] + vals[b];
                    for j in 0..dim {
                        grads[i * dim + j] = grads[a * dim + j] + grads[b * dim + j];
                    }
                }
                Op::Sub(a, b) => {
                    let (a, b) = (a as usize, b as usize);
                    vals[i] = vals[a] - vals[b];
                    for j in 0..dim {
                        grads[i * dim + j] = grads[a * dim + j] - grads[b * dim + j];
                    }
                }
                Op::Mul(a, b) => {
                    let (a, b) = (a as usize, b as usize);
                    let (va, vb) = (vals[a], vals[b]);
                    vals[i] = va * vb;
                    for j in 0..dim {
                        grads[i * dim + j] = grads[a * dim + j] * vb + va * grads[b * dim + j];
                    }
                }
                Op::Div(a, b) => {
                    let (a, b) = (a as usize, b as usize);
                    let (va, vb) = (vals[a], vals[b]);
                    vals[i] = va / vb;
                    for j in 0..dim {
                        grads[i * dim + j] =
                            grads[a * dim + j] / vb - va * grads[b * dim + j] / (vb * vb);
                    }
                }
                Op::Pow(a, k) => {
                    let a = a as usize;
                    let va = vals[a];
                    vals[i] = va.powi(k as i32);
                    if k >= 1 {
                        let factor = k as f64 * va.powi(k as i32 - 1);
                        for j in 0..dim {
                            grads[i * dim + j] = factor * grads[a * dim + j];
                        }
                    }
                }
                Op::Neg(a) => {
                    let a = a as usize;
                    vals[i] = -vals[a];
                    for j in 0..dim {
                        grads[i * dim + j] = -grads[a * dim + j];
                    }
                }
                Op::Exp(a) => {
                    let a = a as usize;
                    let v = vals[a].exp();
                    vals[i] = v;
                    for j in 0..dim {
                        grads[i * dim + j] = v * grads[a * dim + j];
                    }
                }
                Op::Bump(a) => {
                    let a = a as usize;
                    let t = vals[a];
                    vals[i] = special::bump(t);
                    let d = special::bump_prime(t);
                    for j in 0..dim {
                        grads[i * dim + j] = d * grads[a * dim + j];
                    }
                }
                Op::Step(a) => {
                    let a = a as usize;
                    let t = vals[a];
                    vals[i] = special::step(t);
                    let d = special::step_prime(t);
                    for j in 0..dim {
                        grads[i * dim + j] = d * grads[a * dim + j];
                    }
                }
            }
        }

        let last = slots - 1;
        grad_out.copy_from_slice(&grads[last * dim..(last + 1) * dim]);
        vals[last]
    }
}

/// `(dF/dx_1, dF/dy_1, ...) -> (dF/dy_1, -dF/dx_1, ...)`.
pub fn symplectic_swizzle(grad: &[f64], out: &mut [f64]) {
    for i in 0..grad.len() / 2 {
        out[2 * i] = grad[2 * i + 1];
        out[2 * i + 1] = -grad[2 * i];
    }
}

fn lower(node: &Node, ops: &mut Vec<Op>) -> u32 {
    let idx = match node {
        Node::Const(c) => {
            ops.push(Op::Const(*c));
            return (ops.len() - 1) as u32;
        }
        Node::Var(slot) => {
            ops.push(Op::Var(*slot as u32));
            return (ops.len() - 1) as u32;
        }
        Node::Add(a, b) => {
            let (a, b) = (lower(a, ops), lower(b, ops));
            Op::Add(a, b)
        }
        Node::Sub(a, b) => {
            let (a, b) = (lower(a, ops), lower(b, ops));
            Op::Sub(a, b)
        }
        Node::Mul(a, b) => {
            let (a, b) = (lower(a, ops), lower(b, ops));
            Op::Mul(a, b)
        }
        Node::Div(a, b) => {
            let (a, b) = (lower(a, ops), lower(b, ops));
            Op::Div(a, b)
        }
        Node::Pow(a, k) => Op::Pow(lower(a, ops), *k),
        Node::Neg(a) => Op::Neg(lower(a, ops)),
        Node::Exp(a) => Op::Exp(lower(a, ops)),
        Node::Bump(a) => Op::Bump(lower(a, ops)),
        Node::Step(a) => Op::Step(lower(a, ops)),
    };
    ops.push(idx);
    (ops.len() - 1) as u32
}
