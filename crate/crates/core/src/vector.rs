//! Parameter and direction vectors.
//!
//! Both are flat `d`-vectors. They are kept as distinct types so a gradient
//! estimate cannot be passed where a policy parameter is expected; conversions
//! between the two are explicit ([`PolicyParams::delta_from`],
//! [`PolicyParams::ascend`]).

use std::ops::{Index, IndexMut};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Flat policy parameter vector `θ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolicyParams<T>(Vec<T>);

/// A `d`-vector gradient estimate or update direction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Direction<T>(Vec<T>);

macro_rules! vector_common {
    ($ty:ident) => {
        impl<T: Scalar> $ty<T> {
            pub fn zeros(dim: usize) -> Self {
                Self(vec![T::zero(); dim])
            }

            pub fn from_vec(values: Vec<T>) -> Self {
                Self(values)
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[T] {
                &self.0
            }

            pub fn as_mut_slice(&mut self) -> &mut [T] {
                &mut self.0
            }

            pub fn into_vec(self) -> Vec<T> {
                self.0
            }

            pub fn iter(&self) -> std::slice::Iter<'_, T> {
                self.0.iter()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|x| x.is_finite())
            }

            pub fn norm_sq(&self) -> T {
                self.0.iter().map(|&x| x * x).sum()
            }

            pub fn norm(&self) -> T {
                self.norm_sq().sqrt()
            }

            /// Elementwise conversion to another precision.
            pub fn cast<U: Scalar>(&self) -> $ty<U> {
                $ty(self.0.iter().map(|x| U::of(x.as_f64())).collect())
            }
        }

        impl<T> Index<usize> for $ty<T> {
            type Output = T;
            fn index(&self, i: usize) -> &T {
                &self.0[i]
            }
        }

        impl<T> IndexMut<usize> for $ty<T> {
            fn index_mut(&mut self, i: usize) -> &mut T {
                &mut self.0[i]
            }
        }

        impl<T> From<Vec<T>> for $ty<T> {
            fn from(v: Vec<T>) -> Self {
                Self(v)
            }
        }
    };
}

vector_common!(PolicyParams);
vector_common!(Direction);

impl<T: Scalar> PolicyParams<T> {
    /// `self + step * dir`.
    pub fn ascend(&self, dir: &Direction<T>, step: T) -> Result<Self> {
        check_dim("PolicyParams::ascend", self.dim(), dir.dim())?;
        Ok(Self(self.0.iter().zip(dir.iter()).map(|(&t, &u)| t + step * u).collect()))
    }

    /// `self - origin` as a direction.
    pub fn delta_from(&self, origin: &PolicyParams<T>) -> Result<Direction<T>> {
        check_dim("PolicyParams::delta_from", self.dim(), origin.dim())?;
        Ok(Direction(self.0.iter().zip(origin.iter()).map(|(&a, &b)| a - b).collect()))
    }

    /// Convex mixture `alpha * anchor + (1 - alpha) * self`.
    pub fn mix_toward(&self, anchor: &PolicyParams<T>, alpha: T) -> Result<Self> {
        check_dim("PolicyParams::mix_toward", self.dim(), anchor.dim())?;
        let keep = T::one() - alpha;
        Ok(Self(self.0.iter().zip(anchor.iter()).map(|(&cur, &anc)| alpha * anc + keep * cur).collect()))
    }

    pub fn distance(&self, other: &PolicyParams<T>) -> Result<T> {
        Ok(self.delta_from(other)?.norm())
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }
}

impl<T: Scalar> Direction<T> {
    pub fn dot(&self, other: &[T]) -> Result<T> {
        check_dim("Direction::dot", self.dim(), other.len())?;
        Ok(self.0.iter().zip(other).map(|(&a, &b)| a * b).sum())
    }

    pub fn scaled(&self, c: T) -> Self {
        Self(self.0.iter().map(|&x| c * x).collect())
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: T, other: &Direction<T>) -> Result<()> {
        check_dim("Direction::axpy", self.dim(), other.dim())?;
        for (a, &b) in self.0.iter_mut().zip(other.iter()) {
            *a = *a + c * b;
        }
        Ok(())
    }

    pub fn add(&self, other: &Direction<T>) -> Result<Self> {
        check_dim("Direction::add", self.dim(), other.dim())?;
        Ok(Self(self.0.iter().zip(other.iter()).map(|(&a, &b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Direction<T>) -> Result<Self> {
        check_dim("Direction::sub", self.dim(), other.dim())?;
        Ok(Self(self.0.iter().zip(other.iter()).map(|(&a, &b)| a - b).collect()))
    }

    pub fn max_abs_diff(&self, other: &Direction<T>) -> Result<T> {
        check_dim("Direction::max_abs_diff", self.dim(), other.dim())?;
        Ok(self.0.iter().zip(other.iter()).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascend_and_delta_are_inverse() {
        let theta = PolicyParams::from_vec(vec![1.0, -2.0, 0.5]);
        let dir = Direction::from_vec(vec![0.5, 0.5, -1.0]);
        let next = theta.ascend(&dir, 2.0).unwrap();
        assert_eq!(next.as_slice(), &[2.0, -1.0, -1.5]);
        let back = next.delta_from(&theta).unwrap();
        assert_eq!(back.as_slice(), &[1.0, 1.0, -2.0]);
    }

    #[test]
    fn mix_endpoints() {
        let cur = PolicyParams::from_vec(vec![1.0, 2.0]);
        let anchor = PolicyParams::from_vec(vec![-1.0, 0.0]);
        assert_eq!(cur.mix_toward(&anchor, 0.0).unwrap(), cur);
        assert_eq!(cur.mix_toward(&anchor, 1.0).unwrap(), anchor);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = Direction::<f64>::zeros(2);
        let b = Direction::<f64>::zeros(3);
        assert!(matches!(a.add(&b), Err(Error::DimensionMismatch { expected: 2, got: 3, .. })));
    }
}
