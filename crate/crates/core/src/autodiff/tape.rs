//! Scalar reverse-mode tape.
//!
//! Every recorded node stores its value and the local partial derivatives
//! with respect to its predecessors. Nodes are appended in evaluation order,
//! which is a topological order, so the backward sweep is a single reverse
//! pass over the node list.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{acos_unit_slope, Scalar};

/// Operation that produced a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sqrt,
    Abs,
    Tanh,
    Relu,
    Acos,
    Max,
    Affine,
    Fused,
}

#[derive(Default)]
struct TapeInner {
    values: Vec<f64>,
    ops: Vec<Op>,
    /// `edges[edge_end[i-1]..edge_end[i]]` are the predecessors of node `i`.
    edge_end: Vec<u32>,
    parents: Vec<u32>,
    partials: Vec<f64>,
}

impl TapeInner {
    fn push(&mut self, op: Op, value: f64, edges: &[(u32, f64)]) -> u32 {
        let idx = self.values.len() as u32;
        self.values.push(value);
        self.ops.push(op);
        for &(p, d) in edges {
            self.parents.push(p);
            self.partials.push(d);
        }
        self.edge_end.push(self.parents.len() as u32);
        idx
    }
}

#[derive(Default)]
pub struct Tape {
    inner: RefCell<TapeInner>,
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: u32,
    value: f64,
}

/// Adjoints of every node after a backward sweep.
#[derive(Debug, Clone)]
pub struct Gradients {
    adjoints: Vec<f64>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops all nodes, keeping the allocations.
    pub fn reset(&mut self) {
        let inner = self.inner.get_mut();
        inner.values.clear();
        inner.ops.clear();
        inner.edge_end.clear();
        inner.parents.clear();
        inner.partials.clear();
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records an independent variable (parameter, input or constant).
    pub fn var(&self, value: f64) -> Var<'_> {
        let index = self.inner.borrow_mut().push(Op::Leaf, value, &[]);
        Var { tape: self, index, value }
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    pub fn op_of(&self, v: Var<'_>) -> Op {
        self.inner.borrow().ops[v.index as usize]
    }

    /// Predecessors of `v` as `(node index, local partial)`.
    pub fn predecessors(&self, v: Var<'_>) -> Vec<(usize, f64)> {
        let inner = self.inner.borrow();
        let i = v.index as usize;
        let start = if i == 0 { 0 } else { inner.edge_end[i - 1] as usize };
        let end = inner.edge_end[i] as usize;
        (start..end)
            .map(|e| (inner.parents[e] as usize, inner.partials[e]))
            .collect()
    }

    fn record(&self, op: Op, value: f64, edges: &[(u32, f64)]) -> Var<'_> {
        let index = self.inner.borrow_mut().push(op, value, edges);
        Var { tape: self, index, value }
    }

    /// Reverse sweep from `root`. Nodes recorded after `root` are ignored.
    pub fn backward(&self, root: Var<'_>) -> Gradients {
        assert!(std::ptr::eq(root.tape, self), "root belongs to another tape");
        let inner = self.inner.borrow();
        let n = root.index as usize + 1;
        let mut adj = vec![0.0; inner.values.len()];
        adj[root.index as usize] = 1.0;
        for i in (0..n).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            let start = if i == 0 { 0 } else { inner.edge_end[i - 1] as usize };
            let end = inner.edge_end[i] as usize;
            for e in start..end {
                adj[inner.parents[e] as usize] += g * inner.partials[e];
            }
        }
        Gradients { adjoints: adj }
    }

    /// Gradient of `root` with respect to each of `wrt`.
    pub fn gradient(&self, root: Var<'_>, wrt: &[Var<'_>]) -> Vec<f64> {
        let g = self.backward(root);
        wrt.iter().map(|v| g.wrt(*v)).collect()
    }
}

impl Gradients {
    pub fn wrt(&self, v: Var<'_>) -> f64 {
        self.adjoints[v.index as usize]
    }
}

impl<'t> Var<'t> {
    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn tape(self) -> &'t Tape {
        self.tape
    }

    fn unary(self, op: Op, value: f64, d: f64) -> Self {
        self.tape.record(op, value, &[(self.index, d)])
    }

    fn binary(self, rhs: Self, op: Op, value: f64, da: f64, db: f64) -> Self {
        debug_assert!(std::ptr::eq(self.tape, rhs.tape), "mixing tapes");
        self.tape
            .record(op, value, &[(self.index, da), (rhs.index, db)])
    }
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var(#{} = {})", self.index, self.value)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Add, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Sub, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Mul, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        self.binary(rhs, Op::Div, q, 1.0 / rhs.value, -q / rhs.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self {
        self.unary(Op::Neg, -self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Self {
        self.unary(Op::Add, self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Self {
        self.unary(Op::Sub, self.value - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Self {
        self.unary(Op::Mul, self.value * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: f64) -> Self {
        self.unary(Op::Div, self.value / rhs, 1.0 / rhs)
    }
}

impl<'t> Scalar for Var<'t> {
    fn value(self) -> f64 {
        self.value
    }

    fn lift(self, c: f64) -> Self {
        self.tape.var(c)
    }

    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        let d = if s > 0.0 { 0.5 / s } else { 0.0 };
        self.unary(Op::Sqrt, s, d)
    }

    fn abs(self) -> Self {
        let d = if self.value < 0.0 { -1.0 } else { 1.0 };
        self.unary(Op::Abs, self.value.abs(), d)
    }

    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.unary(Op::Tanh, t, 1.0 - t * t)
    }

    fn relu(self) -> Self {
        if self.value > 0.0 {
            self.unary(Op::Relu, self.value, 1.0)
        } else {
            self.unary(Op::Relu, 0.0, 0.0)
        }
    }

    fn acos_unit(self) -> Self {
        let v = self.value.clamp(-1.0, 1.0).acos();
        self.unary(Op::Acos, v, acos_unit_slope(self.value))
    }

    fn max_const(self, floor: f64) -> Self {
        if self.value > floor {
            self.unary(Op::Max, self.value, 1.0)
        } else {
            self.unary(Op::Max, floor, 0.0)
        }
    }

    fn affine(bias: Self, weights: &[Self], inputs: &[Self]) -> Self {
        assert_eq!(weights.len(), inputs.len());
        let tape = bias.tape;
        let mut inner = tape.inner.borrow_mut();
        let mut value = bias.value;
        inner.parents.push(bias.index);
        inner.partials.push(1.0);
        for (w, x) in weights.iter().zip(inputs) {
            value += w.value * x.value;
            inner.parents.push(w.index);
            inner.partials.push(x.value);
            inner.parents.push(x.index);
            inner.partials.push(w.value);
        }
        let index = inner.values.len() as u32;
        inner.values.push(value);
        inner.ops.push(Op::Affine);
        let end = inner.parents.len() as u32;
        inner.edge_end.push(end);
        Var { tape, index, value }
    }

    fn fused(value: f64, parents: &[Self], partials: &[f64]) -> Self {
        assert_eq!(parents.len(), partials.len());
        let tape = parents[0].tape;
        let mut inner = tape.inner.borrow_mut();
        for (p, d) in parents.iter().zip(partials) {
            inner.parents.push(p.index);
            inner.partials.push(*d);
        }
        let index = inner.values.len() as u32;
        inner.values.push(value);
        inner.ops.push(Op::Fused);
        let end = inner.parents.len() as u32;
        inner.edge_end.push(end);
        Var { tape, index, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_parameter_gives_one_hot() {
        let tape = Tape::new();
        let theta = tape.vars(&[0.5, -1.0, 2.0]);
        let g = tape.gradient(theta[1], &theta);
        assert_eq!(g, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn sum_of_squares() {
        let tape = Tape::new();
        let theta = tape.vars(&[1.0, 2.0, 3.0]);
        let root = theta.iter().skip(1).fold(theta[0] * theta[0], |acc, &t| acc + t * t);
        assert_eq!(root.value(), 14.0);
        assert_eq!(tape.gradient(root, &theta), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn unreachable_parameters_get_zero() {
        let tape = Tape::new();
        let theta = tape.vars(&[1.0, 2.0]);
        let root = theta[0].tanh();
        let g = tape.gradient(root, &theta);
        assert_eq!(g[1], 0.0);
        assert!((g[0] - (1.0 - 1f64.tanh().powi(2))).abs() < 1e-15);
    }

    #[test]
    fn shared_subexpression_accumulates() {
        // f = x*y + x/y at (3, 2): df/dx = y + 1/y, df/dy = x - x/y²
        let tape = Tape::new();
        let x = tape.var(3.0);
        let y = tape.var(2.0);
        let f = x * y + x / y;
        let g = tape.gradient(f, &[x, y]);
        assert!((g[0] - 2.5).abs() < 1e-15);
        assert!((g[1] - 2.25).abs() < 1e-15);
    }

    #[test]
    fn affine_records_one_node() {
        let tape = Tape::new();
        let b = tape.var(0.5);
        let w = tape.vars(&[1.0, -2.0]);
        let x = tape.vars(&[3.0, 4.0]);
        let before = tape.len();
        let y = Var::affine(b, &w, &x);
        assert_eq!(tape.len(), before + 1);
        assert_eq!(tape.op_of(y), Op::Affine);
        assert_eq!(tape.predecessors(y).len(), 5);
        assert_eq!(y.value(), 0.5 + 3.0 - 8.0);
        let g = tape.gradient(y, &[b, w[0], w[1], x[0], x[1]]);
        assert_eq!(g, vec![1.0, 3.0, 4.0, 1.0, -2.0]);
    }

    #[test]
    fn guarded_slopes_are_finite() {
        let tape = Tape::new();
        let z = tape.var(0.0);
        let s = z.sqrt();
        assert_eq!(tape.gradient(s, &[z]), vec![0.0]);
        let one = tape.var(1.0);
        let a = one.acos_unit();
        assert_eq!(a.value(), 0.0);
        assert!(tape.gradient(a, &[one])[0].is_finite());
    }

    #[test]
    fn reset_reuses_tape() {
        let mut tape = Tape::new();
        {
            let x = tape.var(1.0);
            let _ = x + x;
        }
        tape.reset();
        assert!(tape.is_empty());
    }
}
