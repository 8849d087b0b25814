use super::scalar::{AdScalar, GUARD_EPS};
use crate::real::Real;
use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// One recorded operation: up to two parents with local partial derivatives.
/// Unary operations set both parent slots to the same index with a zero
/// second partial, which keeps the reverse sweep branch-free.
#[derive(Clone, Copy)]
struct Node<T> {
    p0: u32,
    p1: u32,
    g0: T,
    g1: T,
}

/// Append-only record of scalar operations (a Wengert list).
///
/// Cleared and refilled once per gradient evaluation; `clear` keeps the
/// allocation, so a long optimization loop reuses one buffer.
pub struct Tape<T> {
    nodes: RefCell<Vec<Node<T>>>,
}

/// Reverse-mode variable: a lightweight `Copy` handle onto a [`Tape`].
///
/// Constants are represented without a tape reference and fold eagerly:
/// arithmetic on constants records nothing, multiplication by a constant
/// zero erases the operand entirely, and adding a constant reuses the
/// operand's node with a shifted value. Derivative lanes that are
/// structurally zero therefore cost no tape space, which is what makes
/// per-coordinate seeded passes cheap on models where most coordinates do
/// not interact.
#[derive(Clone, Copy)]
pub struct Var<'t, T: Real> {
    tape: Option<&'t Tape<T>>,
    idx: u32,
    val: T,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::with_capacity(1024)),
        }
    }

    /// Discards all recorded nodes but keeps capacity. Any `Var` created
    /// before the call must no longer be used.
    pub fn clear(&self) {
        self.nodes.borrow_mut().clear();
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// Registers an independent variable.
    pub fn leaf(&self, val: T) -> Var<'_, T> {
        let idx = self.push(Node {
            p0: 0,
            p1: 0,
            g0: T::c(0.0),
            g1: T::c(0.0),
        });
        Var {
            tape: Some(self),
            idx,
            val,
        }
    }

    fn push(&self, node: Node<T>) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len();
        assert!(idx < u32::MAX as usize, "tape overflow");
        nodes.push(node);
        idx as u32
    }

    /// Reverse sweep: gradient of `output` with respect to `wrt`.
    ///
    /// A constant output has a zero gradient. Nodes with zero adjoint are
    /// skipped, so dead subgraphs cost only the scan.
    pub fn gradient(&self, output: Var<'_, T>, wrt: &[Var<'_, T>]) -> Vec<T> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![T::c(0.0); nodes.len()];
        if output.tape.is_some() {
            adj[output.idx as usize] = T::c(1.0);
            for i in (0..nodes.len()).rev() {
                let a = adj[i];
                if a != T::c(0.0) {
                    let n = nodes[i];
                    adj[n.p0 as usize] = adj[n.p0 as usize] + a * n.g0;
                    adj[n.p1 as usize] = adj[n.p1 as usize] + a * n.g1;
                }
            }
        }
        wrt.iter()
            .map(|v| {
                if v.tape.is_some() {
                    adj[v.idx as usize]
                } else {
                    T::c(0.0)
                }
            })
            .collect()
    }
}

impl<'t, T: Real> Var<'t, T> {
    /// A constant, attached to no tape.
    pub fn c(val: T) -> Self {
        Var {
            tape: None,
            idx: 0,
            val,
        }
    }

    pub fn val(&self) -> T {
        self.val
    }

    fn unary(self, val: T, g: T) -> Self {
        match self.tape {
            None => Var::c(val),
            Some(t) => {
                let idx = t.push(Node {
                    p0: self.idx,
                    p1: self.idx,
                    g0: g,
                    g1: T::c(0.0),
                });
                Var {
                    tape: Some(t),
                    idx,
                    val,
                }
            }
        }
    }

    fn binary(self, rhs: Self, val: T, g_lhs: T, g_rhs: T) -> Self {
        match (self.tape, rhs.tape) {
            (None, None) => Var::c(val),
            (Some(_), None) => self.unary(val, g_lhs),
            (None, Some(_)) => rhs.unary(val, g_rhs),
            (Some(t), Some(u)) => {
                debug_assert!(std::ptr::eq(t, u), "variables from different tapes");
                let idx = t.push(Node {
                    p0: self.idx,
                    p1: rhs.idx,
                    g0: g_lhs,
                    g1: g_rhs,
                });
                Var {
                    tape: Some(t),
                    idx,
                    val,
                }
            }
        }
    }

    fn is_const(&self) -> bool {
        self.tape.is_none()
    }
}

impl<'t, T: Real> Add for Var<'t, T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        // x + c shifts the value but keeps the node: the gradient factor is 1.
        if rhs.is_const() {
            return Var {
                val: self.val + rhs.val,
                ..self
            };
        }
        if self.is_const() {
            return Var {
                val: self.val + rhs.val,
                ..rhs
            };
        }
        self.binary(rhs, self.val + rhs.val, T::c(1.0), T::c(1.0))
    }
}

impl<'t, T: Real> Sub for Var<'t, T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        if rhs.is_const() {
            return Var {
                val: self.val - rhs.val,
                ..self
            };
        }
        if self.is_const() && self.val == T::c(0.0) {
            return -rhs;
        }
        self.binary(rhs, self.val - rhs.val, T::c(1.0), -T::c(1.0))
    }
}

impl<'t, T: Real> Mul for Var<'t, T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        if self.is_const() {
            if self.val == T::c(0.0) {
                return Var::c(T::c(0.0));
            }
            if self.val == T::c(1.0) {
                return rhs;
            }
        }
        if rhs.is_const() {
            if rhs.val == T::c(0.0) {
                return Var::c(T::c(0.0));
            }
            if rhs.val == T::c(1.0) {
                return self;
            }
        }
        self.binary(rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t, T: Real> Div for Var<'t, T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<'t, T: Real> Neg for Var<'t, T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.unary(-self.val, -T::c(1.0))
    }
}

impl<'t, T: Real> AdScalar for Var<'t, T> {
    type Base = T;

    fn constant(c: T) -> Self {
        Var::c(c)
    }

    fn value(&self) -> T {
        self.val
    }

    fn is_const_zero(&self) -> bool {
        self.is_const() && self.val == T::c(0.0)
    }

    fn recip(self) -> Self {
        if self.val.abs() <= T::c(GUARD_EPS) {
            return self.unary(T::nan(), T::nan());
        }
        let w = T::c(1.0) / self.val;
        self.unary(w, -(w * w))
    }

    fn ln(self) -> Self {
        if self.val <= T::c(GUARD_EPS) {
            return self.unary(T::nan(), T::nan());
        }
        self.unary(num_traits::Float::ln(self.val), T::c(1.0) / self.val)
    }

    fn exp(self) -> Self {
        let e = num_traits::Float::exp(self.val);
        self.unary(e, e)
    }

    fn sqrt(self) -> Self {
        if self.val < T::c(0.0) {
            return self.unary(T::nan(), T::nan());
        }
        let r = num_traits::Float::sqrt(self.val);
        if r <= T::c(GUARD_EPS) {
            // Derivative is singular at zero; poison it like recip does.
            return self.unary(r, T::nan());
        }
        self.unary(r, T::c(0.5) / r)
    }

    fn sin(self) -> Self {
        self.unary(
            num_traits::Float::sin(self.val),
            num_traits::Float::cos(self.val),
        )
    }

    fn cos(self) -> Self {
        self.unary(
            num_traits::Float::cos(self.val),
            -num_traits::Float::sin(self.val),
        )
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => Var::c(T::c(1.0)),
            1 => self,
            _ => {
                let f = num_traits::Float::powi(self.val, n);
                let fp =
                    T::from_i32(n).unwrap() * num_traits::Float::powi(self.val, n - 1);
                self.unary(f, fp)
            }
        }
    }

    fn max_val(self, c: T) -> Self {
        if self.val >= c {
            self
        } else {
            Var::c(c)
        }
    }

    fn min_val(self, c: T) -> Self {
        if self.val <= c {
            self
        } else {
            Var::c(c)
        }
    }
}
