//! Cartesian grid fields over a convex domain.
//!
//! Fields are stored on a uniform lattice covering the domain's bounding box
//! plus a one-cell margin. Nodes outside the domain carry the value zero
//! (fields are extended by zero outside the closed domain), and chord
//! integrands sample fields by trilinear interpolation.

use crate::geometry::ConvexDomain;
use crate::real::Real;
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

/// Uniform isotropic lattice: node `(i, j, k)` sits at
/// `origin + spacing * (i, j, k)`, `x` fastest in memory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<R> {
    pub origin: Vec3<R>,
    pub spacing: R,
    pub dims: [usize; 3],
}

impl<R: Real> Grid<R> {
    /// Lattice covering the domain bounding box with a one-cell margin on
    /// every side, so interpolation near the boundary sees complete cells.
    pub fn covering(domain: &ConvexDomain<R>, spacing: R) -> Self {
        assert!(spacing > R::zero(), "grid spacing must be positive");
        let (lo, hi) = domain.bounding_box();
        let origin = lo - Vec3::splat(spacing);
        let count = |a: R, b: R| -> usize {
            let span = (b + spacing - a) / spacing;
            span.ceil().to_usize().unwrap() + 1
        };
        Grid {
            origin,
            spacing,
            dims: [
                count(origin.x, hi.x),
                count(origin.y, hi.y),
                count(origin.z, hi.z),
            ],
        }
    }

    /// Lattice with a fixed node count per axis over the bounding box
    /// (plus margin); used when configs specify resolution instead of spacing.
    pub fn with_resolution(domain: &ConvexDomain<R>, nodes_per_axis: usize) -> Self {
        assert!(nodes_per_axis >= 4, "need at least 4 nodes per axis");
        let (lo, hi) = domain.bounding_box();
        let extent = (hi - lo).max_component();
        // nodes_per_axis nodes span the box itself; margin adds one on each side.
        let spacing = extent / R::of_usize(nodes_per_axis - 1);
        Self::covering(domain, spacing)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3<R> {
        self.origin
            + Vec3::new(
                self.spacing * R::of_usize(i),
                self.spacing * R::of_usize(j),
                self.spacing * R::of_usize(k),
            )
    }

    pub fn position_of(&self, idx: usize) -> Vec3<R> {
        let (i, j, k) = self.unravel(idx);
        self.position(i, j, k)
    }

    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        (i, j, k)
    }

    /// Cell coordinates and trilinear weights for a point, or `None` when the
    /// point falls outside the lattice (value zero by extension).
    #[inline]
    fn locate(&self, p: Vec3<R>) -> Option<([usize; 3], [R; 3])> {
        let f = (p - self.origin) / self.spacing;
        let fs = [f.x, f.y, f.z];
        let mut cell = [0usize; 3];
        let mut frac = [R::zero(); 3];
        for a in 0..3 {
            if fs[a] < R::zero() {
                return None;
            }
            let i = fs[a].floor();
            let mut iu = i.to_usize()?;
            if iu + 1 >= self.dims[a] {
                // Points exactly on the far face clamp into the last cell.
                if iu + 1 == self.dims[a] && (fs[a] - i) <= R::of(1e-12) {
                    iu -= 1;
                } else {
                    return None;
                }
            }
            cell[a] = iu;
            frac[a] = fs[a] - R::of_usize(iu);
        }
        Some((cell, frac))
    }
}

/// Scalar samples on a [`Grid`] with an inside-the-domain node mask.
/// Values vanish off the mask, matching the zero-extension convention.
#[derive(Debug, Clone)]
pub struct ScalarField<R> {
    pub grid: Grid<R>,
    pub values: Vec<R>,
    pub inside: Vec<bool>,
}

impl<R: Real> ScalarField<R> {
    pub fn zeros(grid: Grid<R>, domain: &ConvexDomain<R>) -> Self {
        let inside: Vec<bool> = (0..grid.len())
            .map(|idx| domain.contains(grid.position_of(idx)))
            .collect();
        ScalarField {
            grid,
            values: vec![R::zero(); grid.len()],
            inside,
        }
    }

    /// Nodewise construction on the inside mask; outside nodes stay zero.
    pub fn from_fn<F: Fn(Vec3<R>) -> R>(grid: Grid<R>, domain: &ConvexDomain<R>, f: F) -> Self {
        let mut field = Self::zeros(grid, domain);
        for idx in 0..grid.len() {
            if field.inside[idx] {
                field.values[idx] = f(grid.position_of(idx));
            }
        }
        field
    }

    pub fn constant(grid: Grid<R>, domain: &ConvexDomain<R>, value: R) -> Self {
        Self::from_fn(grid, domain, |_| value)
    }

    /// Same mask, new values from a nodewise map of the existing ones.
    pub fn map<F: Fn(R) -> R>(&self, f: F) -> Self {
        let mut out = self.clone();
        for idx in 0..out.values.len() {
            out.values[idx] = if out.inside[idx] {
                f(self.values[idx])
            } else {
                R::zero()
            };
        }
        out
    }

    pub fn inside_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(move |&i| self.inside[i])
    }

    /// Mask-renormalized trilinear interpolation.
    ///
    /// In the interior this is plain trilinear interpolation. In cells cut by
    /// the boundary the weights of outside nodes are dropped and the rest
    /// renormalized, so the sample is a convex combination of inside values:
    /// constant fields interpolate exactly along entire chords (which keeps
    /// the telescoped closure identities exact at the quadrature level), and
    /// samples never exceed the field's sup bound. Cells with no inside node
    /// sample zero, the zero-extension convention.
    #[inline]
    pub fn sample(&self, p: Vec3<R>) -> R {
        match self.grid.locate(p) {
            None => R::zero(),
            Some((c, f)) => {
                let [i, j, k] = c;
                let [fx, fy, fz] = f;
                let wx = [R::one() - fx, fx];
                let wy = [R::one() - fy, fy];
                let wz = [R::one() - fz, fz];
                let mut num = R::zero();
                let mut den = R::zero();
                for (dk, &wk) in wz.iter().enumerate() {
                    for (dj, &wj) in wy.iter().enumerate() {
                        for (di, &wi) in wx.iter().enumerate() {
                            let idx = self.grid.index(i + di, j + dj, k + dk);
                            if self.inside[idx] {
                                let w = wi * wj * wk;
                                num = num + w * self.values[idx];
                                den = den + w;
                            }
                        }
                    }
                }
                if den > R::zero() {
                    num / den
                } else {
                    R::zero()
                }
            }
        }
    }

    /// Supremum of `|values|` over the inside mask.
    pub fn sup_norm(&self) -> R {
        self.inside_indices()
            .map(|i| self.values[i].abs())
            .fold(R::zero(), |a, b| a.max(b))
    }

    /// Supremum of `|self - other|` over the inside mask (grids must match).
    pub fn sup_diff(&self, other: &Self) -> R {
        assert_eq!(self.grid, other.grid);
        self.inside_indices()
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(R::zero(), |a, b| a.max(b))
    }

    pub fn min_inside(&self) -> R {
        self.inside_indices()
            .map(|i| self.values[i])
            .fold(R::infinity(), |a, b| a.min(b))
    }
}

/// Samples over grid nodes x sphere-quadrature directions; the direction
/// axis is contiguous in memory.
#[derive(Debug, Clone)]
pub struct AngularField<R> {
    pub grid: Grid<R>,
    pub n_dirs: usize,
    pub values: Vec<R>,
    pub inside: Vec<bool>,
}

impl<R: Real> AngularField<R> {
    pub fn zeros(grid: Grid<R>, domain: &ConvexDomain<R>, n_dirs: usize) -> Self {
        let inside: Vec<bool> = (0..grid.len())
            .map(|idx| domain.contains(grid.position_of(idx)))
            .collect();
        AngularField {
            grid,
            n_dirs,
            values: vec![R::zero(); grid.len() * n_dirs],
            inside,
        }
    }

    pub fn like(other: &Self) -> Self {
        AngularField {
            grid: other.grid,
            n_dirs: other.n_dirs,
            values: vec![R::zero(); other.values.len()],
            inside: other.inside.clone(),
        }
    }

    #[inline]
    pub fn at(&self, node: usize, dir: usize) -> R {
        self.values[node * self.n_dirs + dir]
    }

    #[inline]
    pub fn set(&mut self, node: usize, dir: usize, v: R) {
        self.values[node * self.n_dirs + dir] = v;
    }

    /// Mask-renormalized trilinear interpolation of the `dir` component
    /// (see [`ScalarField::sample`]).
    pub fn sample_dir(&self, p: Vec3<R>, dir: usize) -> R {
        match self.grid.locate(p) {
            None => R::zero(),
            Some((c, f)) => {
                let [i, j, k] = c;
                let [fx, fy, fz] = f;
                let wx = [R::one() - fx, fx];
                let wy = [R::one() - fy, fy];
                let wz = [R::one() - fz, fz];
                let mut num = R::zero();
                let mut den = R::zero();
                for (dk, &wk) in wz.iter().enumerate() {
                    for (dj, &wj) in wy.iter().enumerate() {
                        for (di, &wi) in wx.iter().enumerate() {
                            let node = self.grid.index(i + di, j + dj, k + dk);
                            if self.inside[node] {
                                let w = wi * wj * wk;
                                num = num + w * self.values[node * self.n_dirs + dir];
                                den = den + w;
                            }
                        }
                    }
                }
                if den > R::zero() {
                    num / den
                } else {
                    R::zero()
                }
            }
        }
    }

    pub fn sup_norm(&self) -> R {
        let mut sup = R::zero();
        for node in 0..self.grid.len() {
            if !self.inside[node] {
                continue;
            }
            for d in 0..self.n_dirs {
                sup = sup.max(self.at(node, d).abs());
            }
        }
        sup
    }

    pub fn inside_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.len()).filter(move |&i| self.inside[i])
    }
}
