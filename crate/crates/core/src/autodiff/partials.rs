use super::dual2::Dual2;
use super::scalar::AdScalar;
use crate::error::{Error, Result};
use crate::real::Real;
use num_traits::Float;
use std::ops::{Index, IndexMut};

/// Dense row-major matrix of scalars. Only the storage and indexing the
/// propagation code needs; no linear algebra.
#[derive(Clone, Debug)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Copy> Mat<S> {
    pub fn fill(rows: usize, cols: usize, v: S) -> Self {
        Mat {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.cols + c]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.cols + c]
    }
}

/// Input/output arity of a differentiable vector map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapDims {
    pub n_s: usize,
    pub n_a: usize,
    pub n_eps: usize,
    pub n_out: usize,
}

/// A vector map `(s, a, e) -> out` evaluated over any differentiable scalar.
///
/// Implementations must be a single arithmetic expression over [`AdScalar`]
/// operations (branching only through `max_val`/`min_val` or on constants),
/// so that every scalar instantiation computes the same function.
pub trait DiffMap<T: Real> {
    fn dims(&self) -> MapDims;
    fn eval<S: AdScalar<Base = T>>(&self, s: &[S], a: &[S], e: &[S]) -> Vec<S>;
}

/// Value, Jacobian blocks, and diagonal second-derivative blocks of a
/// [`DiffMap`] at one point.
///
/// `j_*` are full Jacobian blocks (`n_out x n_*`). `h_*` hold only the
/// diagonal of each per-output Hessian block: `h_s[(i, k)]` is
/// `d^2 out_i / d s_k^2`. Off-diagonal curvature is deliberately not
/// computed; the propagation scheme treats inputs as independent.
#[derive(Clone, Debug)]
pub struct PartialsBundle<S> {
    pub value: Vec<S>,
    pub j_s: Mat<S>,
    pub j_a: Mat<S>,
    pub j_eps: Mat<S>,
    pub h_s: Mat<S>,
    pub h_a: Mat<S>,
    pub h_eps: Mat<S>,
}

impl<S: AdScalar> PartialsBundle<S> {
    fn zeroed(dims: MapDims) -> Self {
        let z = S::zero();
        PartialsBundle {
            value: vec![z; dims.n_out],
            j_s: Mat::fill(dims.n_out, dims.n_s, z),
            j_a: Mat::fill(dims.n_out, dims.n_a, z),
            j_eps: Mat::fill(dims.n_out, dims.n_eps, z),
            h_s: Mat::fill(dims.n_out, dims.n_s, z),
            h_a: Mat::fill(dims.n_out, dims.n_a, z),
            h_eps: Mat::fill(dims.n_out, dims.n_eps, z),
        }
    }

    /// First non-finite component, as `(what, output row)`.
    pub fn find_non_finite(&self) -> Option<(&'static str, usize)> {
        let check = |m: &Mat<S>, what: &'static str| -> Option<(&'static str, usize)> {
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    if !m[(r, c)].value().is_finite() {
                        return Some((what, r));
                    }
                }
            }
            None
        };
        for (i, v) in self.value.iter().enumerate() {
            if !v.value().is_finite() {
                return Some(("value", i));
            }
        }
        check(&self.j_s, "j_s")
            .or_else(|| check(&self.j_a, "j_a"))
            .or_else(|| check(&self.j_eps, "j_eps"))
            .or_else(|| check(&self.h_s, "h_s"))
            .or_else(|| check(&self.h_a, "h_a"))
            .or_else(|| check(&self.h_eps, "h_eps"))
    }
}

/// Group tag for the three input blocks of a [`DiffMap`].
#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    S,
    A,
    Eps,
}

/// Computes a [`PartialsBundle`] with one seeded forward pass per selected
/// input coordinate.
///
/// `mask_*` select which coordinates are differentiated; columns for
/// unselected coordinates stay zero. Callers use the masks to skip
/// coordinates whose downstream weight (a variance) is structurally zero.
/// If no coordinate is selected, the map is evaluated once without any
/// derivative lanes.
pub fn partials_with_masks<T: Real, S: AdScalar<Base = T>, F: DiffMap<T>>(
    f: &F,
    s: &[S],
    a: &[S],
    e: &[S],
    mask_s: &[bool],
    mask_a: &[bool],
    mask_e: &[bool],
) -> PartialsBundle<S> {
    let dims = f.dims();
    let mut out = PartialsBundle::zeroed(dims);
    let mut have_value = false;

    let mut ds: Vec<Dual2<S>> = s.iter().map(|&v| Dual2::lift(v)).collect();
    let mut da: Vec<Dual2<S>> = a.iter().map(|&v| Dual2::lift(v)).collect();
    let mut de: Vec<Dual2<S>> = e.iter().map(|&v| Dual2::lift(v)).collect();

    for (block, mask) in [
        (Block::S, mask_s),
        (Block::A, mask_a),
        (Block::Eps, mask_e),
    ] {
        for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            let inputs = match block {
                Block::S => &mut ds,
                Block::A => &mut da,
                Block::Eps => &mut de,
            };
            inputs[k].d1 = S::one();
            let res = f.eval::<Dual2<S>>(&ds, &da, &de);
            debug_assert_eq!(res.len(), dims.n_out, "map output arity");
            let (j, h) = match block {
                Block::S => (&mut out.j_s, &mut out.h_s),
                Block::A => (&mut out.j_a, &mut out.h_a),
                Block::Eps => (&mut out.j_eps, &mut out.h_eps),
            };
            for (i, r) in res.iter().enumerate() {
                j[(i, k)] = r.d1;
                h[(i, k)] = r.d2;
            }
            if !have_value {
                for (i, r) in res.iter().enumerate() {
                    out.value[i] = r.re;
                }
                have_value = true;
            }
            let inputs = match block {
                Block::S => &mut ds,
                Block::A => &mut da,
                Block::Eps => &mut de,
            };
            inputs[k].d1 = S::zero();
        }
    }

    if !have_value {
        out.value = f.eval::<S>(s, a, e);
        debug_assert_eq!(out.value.len(), dims.n_out, "map output arity");
    }
    out
}

/// Evaluates value, Jacobians, and diagonal second derivatives of `f` at a
/// point, one seeded pass per input coordinate.
///
/// Errors on argument arity mismatches and on any non-finite component in
/// the result (overflow or a domain guard).
pub fn eval_partials<T: Real, F: DiffMap<T>>(
    f: &F,
    s: &[T],
    a: &[T],
    e: &[T],
) -> Result<PartialsBundle<T>> {
    let dims = f.dims();
    check_len("s", dims.n_s, s.len())?;
    check_len("a", dims.n_a, a.len())?;
    check_len("e", dims.n_eps, e.len())?;
    let bundle = partials_with_masks(
        f,
        s,
        a,
        e,
        &vec![true; dims.n_s],
        &vec![true; dims.n_a],
        &vec![true; dims.n_eps],
    );
    if let Some((what, row)) = bundle.find_non_finite() {
        return Err(Error::non_finite(format!(
            "partials ({what}, output {row})"
        )));
    }
    Ok(bundle)
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
