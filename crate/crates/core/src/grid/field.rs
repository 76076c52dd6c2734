use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Chart;

/// One real sample per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    chart: Arc<Chart>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(chart: Arc<Chart>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != chart.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                chart.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(ScalarField { chart, values })
    }

    pub fn from_fn(chart: &Arc<Chart>, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let values = (0..chart.len()).map(|n| f(&chart.node_coords(n))).collect();
        ScalarField { chart: chart.clone(), values }
    }

    pub fn constant(chart: &Arc<Chart>, c: f64) -> ScalarField {
        ScalarField { chart: chart.clone(), values: vec![c; chart.len()] }
    }

    pub(crate) fn from_raw(chart: Arc<Chart>, values: Vec<f64>) -> ScalarField {
        debug_assert_eq!(values.len(), chart.len());
        ScalarField { chart, values }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// The same values as a rank-0 tensor field.
    pub fn to_tensor(&self) -> TensorField {
        TensorField::from_raw(self.chart.clone(), 0, 0, false, self.values.clone())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { chart: self.chart.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        same_chart(&self.chart, &other.chart)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(ScalarField { chart: self.chart.clone(), values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A sampled tensor field of type (contravariant, covariant).
///
/// Each node stores `dim^(contravariant + covariant)` components in row-major
/// order over the index tuple, contravariant slots first. The `symmetric`
/// flag is only meaningful for rank (0,2) fields and is checked exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    chart: Arc<Chart>,
    contravariant: usize,
    covariant: usize,
    symmetric: bool,
    data: Vec<f64>,
}

impl TensorField {
    pub fn new(
        chart: Arc<Chart>,
        contravariant: usize,
        covariant: usize,
        symmetric: bool,
        data: Vec<f64>,
    ) -> Result<TensorField> {
        let comps = chart.dim().pow((contravariant + covariant) as u32);
        if data.len() != comps * chart.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for {} nodes x {} components",
                data.len(),
                chart.len(),
                comps
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: i / comps });
        }
        if symmetric {
            if contravariant != 0 || covariant != 2 {
                return Err(Error::ShapeMismatch("symmetric flag requires a (0,2) tensor".into()));
            }
            let n = chart.dim();
            for block in data.chunks(comps) {
                for i in 0..n {
                    for j in i + 1..n {
                        if block[i * n + j] != block[j * n + i] {
                            return Err(Error::NotSymmetric {
                                defect: (block[i * n + j] - block[j * n + i]).abs(),
                            });
                        }
                    }
                }
            }
        }
        Ok(TensorField { chart, contravariant, covariant, symmetric, data })
    }

    pub(crate) fn from_raw(
        chart: Arc<Chart>,
        contravariant: usize,
        covariant: usize,
        symmetric: bool,
        data: Vec<f64>,
    ) -> TensorField {
        debug_assert_eq!(
            data.len(),
            chart.len() * chart.dim().pow((contravariant + covariant) as u32)
        );
        TensorField { chart, contravariant, covariant, symmetric, data }
    }

    /// Fills components from a closure receiving node coordinates and the
    /// component buffer of that node.
    pub fn from_fn(
        chart: &Arc<Chart>,
        contravariant: usize,
        covariant: usize,
        f: impl Fn(&[f64], &mut [f64]),
    ) -> TensorField {
        let comps = chart.dim().pow((contravariant + covariant) as u32);
        let mut data = vec![0.0; comps * chart.len()];
        for (node, block) in data.chunks_mut(comps).enumerate() {
            f(&chart.node_coords(node), block);
        }
        TensorField { chart: chart.clone(), contravariant, covariant, symmetric: false, data }
    }

    /// Symmetric (0,2) field: the closure fills an `n x n` block and the
    /// upper triangle is mirrored onto the lower one.
    pub fn symmetric_from_fn(chart: &Arc<Chart>, f: impl Fn(&[f64], &mut [f64])) -> TensorField {
        let mut t = TensorField::from_fn(chart, 0, 2, f);
        t.mirror_upper();
        t.symmetric = true;
        t
    }

    /// Vector field (1,0) from a closure.
    pub fn vector_from_fn(chart: &Arc<Chart>, f: impl Fn(&[f64], &mut [f64])) -> TensorField {
        TensorField::from_fn(chart, 1, 0, f)
    }

    pub fn zeros(chart: &Arc<Chart>, contravariant: usize, covariant: usize) -> TensorField {
        let comps = chart.dim().pow((contravariant + covariant) as u32);
        TensorField {
            chart: chart.clone(),
            contravariant,
            covariant,
            symmetric: contravariant == 0 && covariant == 2,
            data: vec![0.0; comps * chart.len()],
        }
    }

    /// Symmetrizes a (0,2) field by averaging with its transpose.
    pub fn symmetrized(&self) -> Result<TensorField> {
        if self.contravariant != 0 || self.covariant != 2 {
            return Err(Error::ShapeMismatch("symmetrization requires a (0,2) tensor".into()));
        }
        let n = self.chart.dim();
        let mut data = self.data.clone();
        for block in data.chunks_mut(n * n) {
            for i in 0..n {
                for j in i + 1..n {
                    let m = 0.5 * (block[i * n + j] + block[j * n + i]);
                    block[i * n + j] = m;
                    block[j * n + i] = m;
                }
            }
        }
        Ok(TensorField { chart: self.chart.clone(), contravariant: 0, covariant: 2, symmetric: true, data })
    }

    fn mirror_upper(&mut self) {
        let n = self.chart.dim();
        for block in self.data.chunks_mut(n * n) {
            for i in 0..n {
                for j in i + 1..n {
                    block[j * n + i] = block[i * n + j];
                }
            }
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn contravariant(&self) -> usize {
        self.contravariant
    }

    pub fn covariant(&self) -> usize {
        self.covariant
    }

    pub fn rank(&self) -> usize {
        self.contravariant + self.covariant
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Components stored per node.
    pub fn components(&self) -> usize {
        self.chart.dim().pow(self.rank() as u32)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let c = self.components();
        &self.data[node * c..(node + 1) * c]
    }

    pub fn get(&self, node: usize, idx: &[usize]) -> f64 {
        let n = self.chart.dim();
        let flat = idx.iter().fold(0, |acc, &i| acc * n + i);
        self.at(node)[flat]
    }

    /// Scalar field of one component.
    pub fn component(&self, idx: &[usize]) -> ScalarField {
        let n = self.chart.dim();
        let flat = idx.iter().fold(0, |acc, &i| acc * n + i);
        let c = self.components();
        let values = (0..self.chart.len()).map(|node| self.data[node * c + flat]).collect();
        ScalarField::from_raw(self.chart.clone(), values)
    }

    pub fn same_shape(&self, other: &TensorField) -> Result<()> {
        same_chart(&self.chart, &other.chart)?;
        if self.contravariant != other.contravariant || self.covariant != other.covariant {
            return Err(Error::ShapeMismatch(format!(
                "type ({},{}) vs ({},{})",
                self.contravariant, self.covariant, other.contravariant, other.covariant
            )));
        }
        Ok(())
    }

    /// `a*self + b*other`.
    pub fn lin_comb(&self, a: f64, other: &TensorField, b: f64) -> Result<TensorField> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&x, &y)| a * x + b * y).collect();
        Ok(TensorField {
            chart: self.chart.clone(),
            contravariant: self.contravariant,
            covariant: self.covariant,
            symmetric: self.symmetric && other.symmetric,
            data,
        })
    }

    pub fn scaled(&self, a: f64) -> TensorField {
        TensorField { data: self.data.iter().map(|x| a * x).collect(), ..self.clone() }
    }

    /// Pointwise product with a scalar field.
    pub fn scaled_by(&self, f: &ScalarField) -> Result<TensorField> {
        same_chart(&self.chart, f.chart())?;
        let c = self.components();
        let mut data = self.data.clone();
        for (block, &s) in data.chunks_mut(c).zip(f.values()) {
            block.iter_mut().for_each(|x| *x *= s);
        }
        Ok(TensorField { data, ..self.clone() })
    }

    /// Largest absolute component over all nodes.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::ChartMismatch)
    }
}
