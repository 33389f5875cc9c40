//! Index regrouping: view a matrix as a multi-leg tensor, permute the legs and
//! group them back into rows and columns.

use alloc::vec::Vec;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Describes a relabeling of a matrix whose rows are the composite of
/// `dims[..row_legs]` and whose columns are the composite of `dims[row_legs..]`
/// (first leg most significant). Output leg `j` is input leg `perm[j]`; the
/// first `out_row_legs` output legs form the output rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Regroup {
    dims: Vec<usize>,
    row_legs: usize,
    perm: Vec<usize>,
    out_row_legs: usize,
}

impl Regroup {
    pub fn new(dims: &[usize], row_legs: usize, perm: &[usize], out_row_legs: usize) -> Result<Self> {
        let n = dims.len();
        if dims.contains(&0) || row_legs > n || out_row_legs > n || perm.len() != n {
            return Err(Error::Config("regroup descriptor is malformed"));
        }
        let mut seen = alloc::vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::Config("regroup permutation is not a bijection"));
            }
            seen[p] = true;
        }
        Ok(Self { dims: dims.to_vec(), row_legs, perm: perm.to_vec(), out_row_legs })
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.dims[..self.row_legs].iter().product(), self.dims[self.row_legs..].iter().product())
    }

    pub fn output_dims(&self) -> Vec<usize> {
        self.perm.iter().map(|&p| self.dims[p]).collect()
    }

    pub fn output_shape(&self) -> (usize, usize) {
        let od = self.output_dims();
        (od[..self.out_row_legs].iter().product(), od[self.out_row_legs..].iter().product())
    }

    /// The descriptor that undoes this one.
    pub fn inverse(&self) -> Self {
        let n = self.perm.len();
        let mut inv = alloc::vec![0; n];
        for (j, &p) in self.perm.iter().enumerate() {
            inv[p] = j;
        }
        Self { dims: self.output_dims(), row_legs: self.out_row_legs, perm: inv, out_row_legs: self.row_legs }
    }
}

pub fn regroup(t: &ComplexMatrix, scheme: &Regroup) -> Result<ComplexMatrix> {
    let (r, c) = scheme.input_shape();
    if t.shape() != (r, c) {
        return Err(Error::Shape { context: "regroup", expected: (r, c), found: t.shape() });
    }
    let n = scheme.dims.len();
    let out_dims = scheme.output_dims();
    let (orows, ocols) = scheme.output_shape();
    // strides of each input leg within the flat row-major index
    let mut in_stride = alloc::vec![0usize; n];
    let mut acc = 1;
    for k in (0..n).rev() {
        in_stride[k] = acc;
        acc *= scheme.dims[k];
    }
    let src = t.as_slice();
    let mut out = ComplexMatrix::zeros(orows, ocols);
    let mut idx = alloc::vec![0usize; n];
    for slot in out.as_mut_slice().iter_mut() {
        let flat: usize = idx.iter().zip(&scheme.perm).map(|(&i, &p)| i * in_stride[p]).sum();
        *slot = src[flat];
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < out_dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;
    use crate::C64;

    #[test]
    fn round_trip() {
        let mut r = rng(11);
        let (de, ds) = (2, 2);
        let n = de * ds * ds;
        let m = random_matrix(&mut r, n, n);
        let scheme = Regroup::new(&[de, ds, ds, de, ds, ds], 3, &[0, 1, 3, 4, 2, 5], 4).unwrap();
        let back = regroup(&regroup(&m, &scheme).unwrap(), &scheme.inverse()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn two_by_two_to_vector() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let to_vec = Regroup::new(&[2, 2], 1, &[0, 1], 2).unwrap();
        let v = regroup(&m, &to_vec).unwrap();
        assert_eq!(v.shape(), (4, 1));
        assert_eq!(v.as_slice()[2], C64::new(3.0, 0.0));
        assert_eq!(regroup(&v, &to_vec.inverse()).unwrap(), m);
    }

    #[test]
    fn joint_node_matches_index_loop() {
        let mut r = rng(12);
        let (de, ds) = (2usize, 2usize);
        let a = random_matrix(&mut r, de * ds, de * ds);
        let b = random_matrix(&mut r, de * ds, de * ds);
        // a legs (E1, t, e, t') -> rows (E1,t,t'), cols e
        let pa = Regroup::new(&[de, ds, de, ds], 2, &[0, 1, 3, 2], 3).unwrap();
        // b legs (e, u, E0, u') -> rows e, cols (E0,u,u')
        let pb = Regroup::new(&[de, ds, de, ds], 2, &[0, 2, 1, 3], 1).unwrap();
        let joint = &regroup(&a, &pa).unwrap() * &regroup(&b, &pb).unwrap();
        for e1 in 0..de {
            for t in 0..ds {
                for tp in 0..ds {
                    for e0 in 0..de {
                        for u in 0..ds {
                            for up in 0..ds {
                                let mut want = C64::new(0.0, 0.0);
                                for e in 0..de {
                                    want += a[(e1 * ds + t, e * ds + tp)] * b[(e * ds + u, e0 * ds + up)];
                                }
                                let got = joint[(e1 * ds * ds + t * ds + tp, e0 * ds * ds + u * ds + up)];
                                assert!((got - want).norm() < 1e-14);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn shape_errors() {
        let s = Regroup::new(&[2, 3], 1, &[1, 0], 1).unwrap();
        assert!(matches!(regroup(&ComplexMatrix::zeros(3, 2), &s), Err(Error::Shape { .. })));
        assert!(Regroup::new(&[2, 3], 1, &[0, 0], 1).is_err());
    }
}
