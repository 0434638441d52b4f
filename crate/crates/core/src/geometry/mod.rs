//! Cubes, uniform midpoint grids, subcube partitions and sampled functions.
//!
//! Multi-indices are ordered lexicographically with axis 0 most significant,
//! so the linear index of `(i_0, …, i_{N-1})` on an `m`-per-axis grid is
//! `Σ_a i_a · m^{N-1-a}`. Every file format and every kernel in the crate
//! relies on this order.

mod corpus;
mod functions;

pub use corpus::{standard_corpus, CorpusEntry, Regularity};
pub use functions::{sample, FunctionSpec, PreparedFunction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Linear index of `idx` on a grid with `extent` cells per axis.
pub fn linear_index(idx: &[usize], extent: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * extent + i)
}

/// Inverse of [`linear_index`].
pub fn multi_index(mut linear: usize, extent: usize, dim: usize) -> Vec<usize> {
    let mut idx = vec![0; dim];
    for slot in idx.iter_mut().rev() {
        *slot = linear % extent;
        linear /= extent;
    }
    idx
}

/// Advances `idx` to its lexicographic successor in `[0, extent)^N`.
/// Returns `false` after the last index (and leaves `idx` all zeros).
pub fn next_multi_index(idx: &mut [usize], extent: usize) -> bool {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < extent {
            return true;
        }
        *slot = 0;
    }
    false
}

fn check_index(idx: &[usize], dim: usize, extent: usize) -> Result<()> {
    if idx.len() != dim || idx.iter().any(|&i| i >= extent) {
        return Err(Error::IndexOutOfRange {
            index: idx.to_vec(),
            extent,
        });
    }
    Ok(())
}

/// Axis-aligned open cube `Q_r(x₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CubeFile<T>")]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Cube<T> {
    center: Vec<T>,
    side: T,
}

#[derive(Deserialize)]
struct CubeFile<T> {
    center: Vec<T>,
    side: T,
}

impl<T: Scalar> TryFrom<CubeFile<T>> for Cube<T> {
    type Error = Error;
    fn try_from(f: CubeFile<T>) -> Result<Self> {
        Cube::new(f.center, f.side)
    }
}

impl<T: Scalar> Cube<T> {
    pub fn new(center: Vec<T>, side: T) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid("cube dimension must be at least 1"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("cube center must be finite"));
        }
        if !(side.is_finite() && side > T::zero()) {
            return Err(Error::invalid(format!("cube side must be positive, got {side}")));
        }
        Ok(Self { center, side })
    }

    /// `Q_side(0)` in `dim` dimensions.
    pub fn centered(dim: usize, side: T) -> Result<Self> {
        Self::new(vec![T::zero(); dim], side)
    }

    /// The unit cube `Q₁(0)`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::centered(dim, T::one())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn side(&self) -> T {
        self.side
    }

    pub fn volume(&self) -> T {
        self.side.powi(self.dim() as i32)
    }

    pub fn diagonal(&self) -> T {
        T::from_usize_exact(self.dim()).sqrt() * self.side
    }

    /// Open-cube membership.
    pub fn contains(&self, x: &[T]) -> bool {
        let half = self.side / T::lit(2.0);
        x.len() == self.dim() && x.iter().zip(&self.center).all(|(&xi, &ci)| (xi - ci).abs() < half)
    }

    /// The `j`-th member of the partition of this cube into `k^N` congruent
    /// subcubes of side `r/k`.
    pub fn subcube(&self, k: usize, j: &[usize]) -> Result<Cube<T>> {
        if k == 0 {
            return Err(Error::invalid("partition depth k must be positive"));
        }
        check_index(j, self.dim(), k)?;
        if k == 1 {
            return Ok(self.clone());
        }
        let sub = self.side / T::from_usize_exact(k);
        let half = self.side / T::lit(2.0);
        let center = self
            .center
            .iter()
            .zip(j)
            .map(|(&c, &ja)| c - half + (T::from_usize_exact(ja) + T::lit(0.5)) * sub)
            .collect();
        Cube::new(center, sub)
    }
}

/// A cube together with a resolution of `m` cells per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<T> {
    cube: Cube<T>,
    m: usize,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(cube: Cube<T>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("grid needs at least one cell per axis"));
        }
        let total = m
            .checked_pow(cube.dim() as u32)
            .ok_or_else(|| Error::invalid("grid cell count overflows usize"))?;
        // Keeps cell counts exactly representable.
        if total > (1 << 40) {
            return Err(Error::invalid(format!("grid with {total} cells is too large")));
        }
        Ok(Self { cube, m })
    }

    pub fn cube(&self) -> &Cube<T> {
        &self.cube
    }

    pub fn dim(&self) -> usize {
        self.cube.dim()
    }

    /// Cells per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Cell side `h = r/m`.
    pub fn cell_side(&self) -> T {
        self.cube.side / T::from_usize_exact(self.m)
    }

    pub fn cell_count(&self) -> usize {
        self.m.pow(self.dim() as u32)
    }

    pub fn cell_volume(&self) -> T {
        self.cell_side().powi(self.dim() as i32)
    }

    /// Midpoint of cell `idx`: `center − side/2 + (idx + 1/2)·h`.
    pub fn cell_center(&self, idx: &[usize]) -> Result<Vec<T>> {
        check_index(idx, self.dim(), self.m)?;
        Ok(self.cell_center_unchecked(idx))
    }

    pub(crate) fn cell_center_unchecked(&self, idx: &[usize]) -> Vec<T> {
        let h = self.cell_side();
        let half = self.cube.side / T::lit(2.0);
        self.cube
            .center
            .iter()
            .zip(idx)
            .map(|(&c, &i)| c - half + (T::from_usize_exact(i) + T::lit(0.5)) * h)
            .collect()
    }

    /// All cell midpoints in lexicographic order, flattened (`dim` coordinates per cell).
    pub fn cell_centers(&self) -> Vec<T> {
        let dim = self.dim();
        let mut out = Vec::with_capacity(self.cell_count() * dim);
        let mut idx = vec![0; dim];
        loop {
            out.extend(self.cell_center_unchecked(&idx));
            if !next_multi_index(&mut idx, self.m) {
                break;
            }
        }
        out
    }

    /// Same resolution on a different cube.
    pub fn rehost(&self, cube: Cube<T>) -> Result<Self> {
        if cube.dim() != self.dim() {
            return Err(Error::invalid("re-hosting cube has a different dimension"));
        }
        GridSpec::new(cube, self.m)
    }
}

/// Samples of a function at the `m^N` cell midpoints of a [`GridSpec`].
///
/// Serialized as `{"dim", "center", "side", "m", "values"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFile<T>", into = "GridFile<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct GridFunction<T: Scalar> {
    spec: GridSpec<T>,
    values: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct GridFile<T> {
    dim: usize,
    center: Vec<T>,
    side: T,
    m: usize,
    values: Vec<T>,
}

impl<T: Scalar> TryFrom<GridFile<T>> for GridFunction<T> {
    type Error = Error;
    fn try_from(f: GridFile<T>) -> Result<Self> {
        if f.center.len() != f.dim {
            return Err(Error::invalid(format!(
                "center has {} coordinates but dim is {}",
                f.center.len(),
                f.dim
            )));
        }
        let spec = GridSpec::new(Cube::new(f.center, f.side)?, f.m)?;
        GridFunction::new(spec, f.values)
    }
}

impl<T: Scalar> From<GridFunction<T>> for GridFile<T> {
    fn from(u: GridFunction<T>) -> Self {
        let GridFunction { spec, values } = u;
        GridFile {
            dim: spec.dim(),
            m: spec.m,
            center: spec.cube.center,
            side: spec.cube.side,
            values,
        }
    }
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.cell_count() {
            return Err(Error::invalid(format!(
                "expected {} values for m = {} in {} dimensions, got {}",
                spec.cell_count(),
                spec.m,
                spec.dim(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("value at linear index {pos} is not finite")));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec<T>, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let dim = spec.dim();
        let values = spec.cell_centers().chunks(dim).map(f).collect();
        Self::new(spec, values)
    }

    pub fn constant(spec: GridSpec<T>, value: T) -> Result<Self> {
        let n = spec.cell_count();
        Self::new(spec, vec![value; n])
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn cube(&self) -> &Cube<T> {
        &self.spec.cube
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn value_at(&self, idx: &[usize]) -> Result<T> {
        check_index(idx, self.dim(), self.m())?;
        Ok(self.values[linear_index(idx, self.m())])
    }

    /// `t·u` on the same grid.
    pub fn scaled(&self, t: T) -> Result<Self> {
        Self::new(self.spec.clone(), self.values.iter().map(|&v| t * v).collect())
    }

    /// `u + t` on the same grid.
    pub fn shifted(&self, t: T) -> Result<Self> {
        Self::new(self.spec.clone(), self.values.iter().map(|&v| v + t).collect())
    }

    /// The identical sample array on another cube of the same dimension.
    pub fn rehost(&self, cube: Cube<T>) -> Result<Self> {
        Ok(Self {
            spec: self.spec.rehost(cube)?,
            values: self.values.clone(),
        })
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Restriction to the `j`-th subcube of the `k^N` partition. Requires
    /// `k | m`; the result has `m/k` cells per axis and carries exactly the
    /// parent samples inside the subcube.
    pub fn restrict(&self, k: usize, j: &[usize]) -> Result<Self> {
        let m = self.m();
        if k == 0 || m % k != 0 {
            return Err(Error::Alignment { m, k });
        }
        let cube = self.cube().subcube(k, j)?;
        let n = m / k;
        let dim = self.dim();
        let origin: Vec<usize> = j.iter().map(|&ja| ja * n).collect();
        let mut values = Vec::with_capacity(n.pow(dim as u32));
        let mut local = vec![0; dim];
        let mut parent = vec![0; dim];
        loop {
            for a in 0..dim {
                parent[a] = origin[a] + local[a];
            }
            values.push(self.values[linear_index(&parent, m)]);
            if !next_multi_index(&mut local, n) {
                break;
            }
        }
        Self::new(GridSpec::new(cube, n)?, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(dim: usize, m: usize) -> GridSpec<f64> {
        GridSpec::new(Cube::unit(dim).unwrap(), m).unwrap()
    }

    #[test]
    fn cell_center_examples() {
        let g = unit_grid(2, 2);
        assert_eq!(g.cell_center(&[0, 0]).unwrap(), vec![-0.25, -0.25]);
        assert_eq!(g.cell_center(&[1, 1]).unwrap(), vec![0.25, 0.25]);

        let g = GridSpec::new(Cube::new(vec![1.0, 1.0], 2.0).unwrap(), 4).unwrap();
        assert_eq!(g.cell_center(&[0, 3]).unwrap(), vec![0.25, 1.75]);
    }

    #[test]
    fn cell_center_rejects_bad_indices() {
        let g = unit_grid(2, 2);
        assert!(matches!(g.cell_center(&[2, 0]), Err(Error::IndexOutOfRange { .. })));
        assert!(g.cell_center(&[0]).is_err());
    }

    #[test]
    fn subcube_examples() {
        let q = Cube::<f64>::unit(2).unwrap();
        let s = q.subcube(2, &[0, 0]).unwrap();
        assert_eq!(s.center(), &[-0.25, -0.25]);
        assert_eq!(s.side(), 0.5);
        assert_eq!(q.subcube(1, &[0, 0]).unwrap(), q);

        let q3 = Cube::<f64>::centered(3, 3.0).unwrap();
        let s = q3.subcube(3, &[1, 1, 1]).unwrap();
        assert_eq!(s.center(), &[0.0, 0.0, 0.0]);
        assert_eq!(s.side(), 1.0);
        assert!(q.subcube(2, &[2, 0]).is_err());
    }

    #[test]
    fn subcube_geometry_scales_by_k() {
        let q = Cube::new(vec![0.3, -1.0, 2.0], 1.5).unwrap();
        for k in 1..6 {
            let s = q.subcube(k, &[0, k - 1, k / 2]).unwrap();
            let kn = (k as f64).powi(3);
            assert!((s.volume() - q.volume() / kn).abs() <= 1e-15 * q.volume());
            assert!((s.diagonal() - q.diagonal() / k as f64).abs() <= 1e-15 * q.diagonal());
        }
    }

    #[test]
    fn volume_and_diagonal() {
        let q = Cube::new(vec![0.0; 3], 2.0).unwrap();
        assert_eq!(q.volume(), 8.0);
        assert!((q.diagonal() - 2.0 * 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cube_validation() {
        assert!(Cube::<f64>::new(vec![], 1.0).is_err());
        assert!(Cube::<f64>::new(vec![0.0], 0.0).is_err());
        assert!(Cube::<f64>::new(vec![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn restrict_selects_parent_samples() {
        let spec = unit_grid(2, 4);
        let u = GridFunction::new(spec, (0..16).map(|v| v as f64).collect()).unwrap();
        let r = u.restrict(2, &[0, 0]).unwrap();
        assert_eq!(r.values(), &[0.0, 1.0, 4.0, 5.0]);
        assert_eq!(r.m(), 2);
        assert_eq!(r.cube().center(), &[-0.25, -0.25]);

        let r = u.restrict(2, &[1, 0]).unwrap();
        assert_eq!(r.values(), &[8.0, 9.0, 12.0, 13.0]);

        let single = u.restrict(4, &[2, 3]).unwrap();
        assert_eq!(single.values(), &[11.0]);
        assert_eq!(single.m(), 1);

        assert!(matches!(u.restrict(3, &[0, 0]), Err(Error::Alignment { m: 4, k: 3 })));
    }

    #[test]
    fn restricted_midpoints_match_parent_midpoints() {
        let spec = GridSpec::new(Cube::new(vec![0.5, -0.25], 3.0).unwrap(), 6).unwrap();
        let u = GridFunction::from_fn(spec.clone(), |x| x[0] * 10.0 + x[1]).unwrap();
        let r = u.restrict(3, &[2, 1]).unwrap();
        let sub = r.spec();
        for (i, &v) in r.values().iter().enumerate() {
            let local = multi_index(i, 2, 2);
            let parent = [4 + local[0], 2 + local[1]];
            let a: Vec<f64> = sub.cell_center(&local).unwrap();
            let b = spec.cell_center(&parent).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
            assert_eq!(v, u.value_at(&parent).unwrap());
        }
    }

    #[test]
    fn index_round_trip() {
        for lin in 0..125 {
            let idx = multi_index(lin, 5, 3);
            assert_eq!(linear_index(&idx, 5), lin);
        }
        let mut idx = vec![0, 0];
        let mut count = 1;
        while next_multi_index(&mut idx, 3) {
            count += 1;
        }
        assert_eq!(count, 9);
    }

    #[test]
    fn grid_function_json_layout() {
        let u = GridFunction::new(unit_grid(2, 2), vec![1.0, 2.0, 3.0, 4.5]).unwrap();
        let json = serde_json::to_value(&u).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"dim": 2, "center": [0.0, 0.0], "side": 1.0, "m": 2,
                               "values": [1.0, 2.0, 3.0, 4.5]})
        );
        let back: GridFunction<f64> = serde_json::from_value(json).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn grid_function_json_validation() {
        let bad = r#"{"dim": 2, "center": [0.0, 0.0], "side": 1.0, "m": 2, "values": [1.0]}"#;
        assert!(serde_json::from_str::<GridFunction<f64>>(bad).is_err());
        let bad = r#"{"dim": 3, "center": [0.0, 0.0], "side": 1.0, "m": 1, "values": [1.0]}"#;
        assert!(serde_json::from_str::<GridFunction<f64>>(bad).is_err());
        let bad = r#"{"dim": 1, "center": [0.0], "side": -1.0, "m": 1, "values": [1.0]}"#;
        assert!(serde_json::from_str::<GridFunction<f64>>(bad).is_err());
    }
}
