//! Minimal scalar reverse-mode differentiation tape.
//!
//! The forward pass of one sample is recorded as a flat list of
//! primitive operations; a single backward sweep then accumulates
//! exact adjoints for every raw parameter. Branch decisions (which
//! firing bound feeds a type-reduced endpoint, which side of a pinball
//! max is active) are made by the caller before recording, so the tape
//! only ever sees the smooth piece selected by the forward pass.

use crate::membership::{stable_sigmoid, stable_softplus};

/// Index of a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(u32);

#[derive(Debug, Clone, Copy)]
enum Op {
    Input,
    Const,
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    Exp(u32),
    Sigmoid(u32),
    Softplus(u32),
    LogCosh(u32),
    AddConst(u32),
    MulConst(u32, f64),
}

#[derive(Debug, Default)]
pub struct Tape {
    ops: Vec<Op>,
    vals: Vec<f64>,
    n_inputs: usize,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// Drops all recorded nodes but keeps allocations for reuse.
    pub fn clear(&mut self) {
        self.ops.clear();
        self.vals.clear();
        self.n_inputs = 0;
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, id: NodeId) -> f64 {
        self.vals[id.0 as usize]
    }

    fn push(&mut self, op: Op, val: f64) -> NodeId {
        let id = self.ops.len() as u32;
        self.ops.push(op);
        self.vals.push(val);
        NodeId(id)
    }

    /// Registers a differentiable input. Inputs must be pushed before
    /// any other node; their adjoints are what [`Tape::gradient`]
    /// returns.
    pub fn input(&mut self, val: f64) -> NodeId {
        debug_assert_eq!(self.ops.len(), self.n_inputs, "inputs must come first");
        self.n_inputs += 1;
        self.push(Op::Input, val)
    }

    pub fn constant(&mut self, val: f64) -> NodeId {
        self.push(Op::Const, val)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.vals[a.0 as usize] + self.vals[b.0 as usize];
        self.push(Op::Add(a.0, b.0), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.vals[a.0 as usize] - self.vals[b.0 as usize];
        self.push(Op::Sub(a.0, b.0), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.vals[a.0 as usize] * self.vals[b.0 as usize];
        self.push(Op::Mul(a.0, b.0), v)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.vals[a.0 as usize] / self.vals[b.0 as usize];
        self.push(Op::Div(a.0, b.0), v)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = -self.vals[a.0 as usize];
        self.push(Op::Neg(a.0), v)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let v = self.vals[a.0 as usize].exp();
        self.push(Op::Exp(a.0), v)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = stable_sigmoid(self.vals[a.0 as usize]);
        self.push(Op::Sigmoid(a.0), v)
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        let v = stable_softplus(self.vals[a.0 as usize]);
        self.push(Op::Softplus(a.0), v)
    }

    /// `ln(cosh x)` in the overflow-free form; derivative `tanh(x)`.
    pub fn log_cosh(&mut self, a: NodeId) -> NodeId {
        let v = crate::grad::log_cosh(self.vals[a.0 as usize]);
        self.push(Op::LogCosh(a.0), v)
    }

    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.vals[a.0 as usize] + c;
        self.push(Op::AddConst(a.0), v)
    }

    pub fn mul_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.vals[a.0 as usize] * c;
        self.push(Op::MulConst(a.0, c), v)
    }

    /// Backward sweep from `out`; returns the adjoints of the input
    /// nodes in registration order.
    pub fn gradient(&self, out: NodeId, scratch: &mut Vec<f64>) -> Vec<f64> {
        let mut grads = Vec::new();
        self.gradient_into(out, scratch, &mut grads);
        grads
    }

    /// Like [`Tape::gradient`] but writes into a caller-owned buffer.
    pub fn gradient_into(&self, out: NodeId, scratch: &mut Vec<f64>, grads: &mut Vec<f64>) {
        scratch.clear();
        scratch.resize(self.ops.len(), 0.0);
        scratch[out.0 as usize] = 1.0;

        for (idx, op) in self.ops.iter().enumerate().rev() {
            let go = scratch[idx];
            if go == 0.0 {
                continue;
            }
            match *op {
                Op::Input | Op::Const => {}
                Op::Add(a, b) => {
                    scratch[a as usize] += go;
                    scratch[b as usize] += go;
                }
                Op::Sub(a, b) => {
                    scratch[a as usize] += go;
                    scratch[b as usize] -= go;
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.vals[a as usize], self.vals[b as usize]);
                    scratch[a as usize] += go * vb;
                    scratch[b as usize] += go * va;
                }
                Op::Div(a, b) => {
                    let (va, vb) = (self.vals[a as usize], self.vals[b as usize]);
                    scratch[a as usize] += go / vb;
                    scratch[b as usize] -= go * va / (vb * vb);
                }
                Op::Neg(a) => scratch[a as usize] -= go,
                Op::Exp(a) => scratch[a as usize] += go * self.vals[idx],
                Op::Sigmoid(a) => {
                    let s = self.vals[idx];
                    scratch[a as usize] += go * s * (1.0 - s);
                }
                Op::Softplus(a) => {
                    scratch[a as usize] += go * stable_sigmoid(self.vals[a as usize]);
                }
                Op::LogCosh(a) => {
                    scratch[a as usize] += go * self.vals[a as usize].tanh();
                }
                Op::AddConst(a) => scratch[a as usize] += go,
                Op::MulConst(a, c) => scratch[a as usize] += go * c,
            }
        }

        grads.clear();
        grads.extend_from_slice(&scratch[..self.n_inputs]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grad1(build: impl Fn(&mut Tape, NodeId) -> NodeId, x: f64) -> (f64, f64) {
        let mut tape = Tape::new();
        let xin = tape.input(x);
        let out = build(&mut tape, xin);
        let g = tape.gradient(out, &mut Vec::new());
        (tape.value(out), g[0])
    }

    #[test]
    fn square_gradient() {
        let (v, g) = grad1(|t, x| t.mul(x, x), 3.0);
        assert_eq!(v, 9.0);
        assert_eq!(g, 6.0);
    }

    #[test]
    fn quotient_and_fanout() {
        // f(x) = x / (x + 2) at x = 3 -> f = 0.6, f' = 2/25
        let (v, g) = grad1(
            |t, x| {
                let den = t.add_const(x, 2.0);
                t.div(x, den)
            },
            3.0,
        );
        assert!((v - 0.6).abs() < 1e-15);
        assert!((g - 2.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn exp_sigmoid_softplus_chain() {
        let (_, g) = grad1(|t, x| t.exp(x), 0.7);
        assert!((g - 0.7f64.exp()).abs() < 1e-12);

        let (v, g) = grad1(|t, x| t.sigmoid(x), 0.3);
        assert!((g - v * (1.0 - v)).abs() < 1e-15);

        let (_, g) = grad1(|t, x| t.softplus(x), -1.2);
        assert!((g - stable_sigmoid(-1.2)).abs() < 1e-15);
    }

    #[test]
    fn log_cosh_derivative_is_tanh() {
        for &x in &[-3.0, -0.5, 0.0, 0.1, 2.0, 50.0] {
            let (v, g) = grad1(|t, n| t.log_cosh(n), x);
            assert!((v - crate::grad::log_cosh(x)).abs() < 1e-12);
            assert!((g - x.tanh()).abs() < 1e-12);
        }
    }

    #[test]
    fn clear_reuses_storage() {
        let mut tape = Tape::new();
        let x = tape.input(2.0);
        let _ = tape.mul(x, x);
        tape.clear();
        let x = tape.input(4.0);
        let y = tape.mul_const(x, 3.0);
        let g = tape.gradient(y, &mut Vec::new());
        assert_eq!(g, vec![3.0]);
    }
}
