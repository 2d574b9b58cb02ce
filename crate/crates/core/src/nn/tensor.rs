use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense real tensor stored row-major. Batched tensors carry the batch as the
/// leading dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let t = Self { shape, data };
        t.check()?;
        Ok(t)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.shape.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch(format!("tensor shape {:?} has a zero dimension", self.shape)));
        }
        if self.shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::DimensionMismatch(format!(
                "tensor shape {:?} does not match {} values",
                self.shape,
                self.data.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}
