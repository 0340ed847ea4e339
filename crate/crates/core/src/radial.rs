//! Radially symmetric measures on a centered ball: uniform cell grids,
//! piecewise-constant densities, exact cumulative mass and its inverse, and
//! mass-conserving pushforward under monotone radial maps.
//!
//! A density here is a vector of cell averages over spherical shells. All
//! mass bookkeeping goes through the exact shell volumes
//! `c_d·(r_{j+1}^d − r_j^d)`, so total mass is a finite sum whose value does
//! not depend on quadrature choices.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{unit_ball_volume, unit_sphere_area};

/// Uniform radial grid on `[0, r_max]` in `d` dimensions.
///
/// Grids are uniform by construction: the on-disk density format records
/// only `(d, r_max, n)` and the grid is rebuilt from those three numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    d: u32,
    edges: Vec<f64>,
    centers: Vec<f64>,
    volumes: Vec<f64>,
    cd: f64,
}

impl RadialGrid {
    pub fn uniform(d: u32, r_max: f64, n: usize) -> Result<Arc<Self>> {
        if d < 1 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "domain radius must be positive and finite, got {r_max}"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 cells, got {n}"
            )));
        }
        let cd = unit_ball_volume(d);
        let edges: Vec<f64> = (0..=n).map(|j| r_max * j as f64 / n as f64).collect();
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let volumes = edges
            .windows(2)
            .map(|w| cd * (w[1].powi(d as i32) - w[0].powi(d as i32)))
            .collect();
        Ok(Arc::new(Self { d, edges, centers, volumes, cd }))
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    pub fn n_cells(&self) -> usize {
        self.centers.len()
    }

    pub fn r_max(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    /// Cell edges, length `n_cells() + 1`, starting at 0.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Exact shell volumes `c_d·(r_{j+1}^d − r_j^d)`.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Volume of the unit ball in this dimension.
    pub fn unit_ball(&self) -> f64 {
        self.cd
    }

    /// Sphere area `d·c_d·r^{d−1}` through which radial flux passes at
    /// edge `j`.
    pub fn face_area(&self, j: usize) -> f64 {
        unit_sphere_area(self.d) * self.edges[j].powi(self.d as i32 - 1)
    }

    /// Index of the cell whose half-open shell `[r_j, r_{j+1})` contains
    /// `r`, clamped to the boundary cells.
    pub fn cell_containing(&self, r: f64) -> usize {
        let n = self.n_cells();
        if r <= 0.0 {
            return 0;
        }
        let dr = self.r_max() / n as f64;
        ((r / dr) as usize).min(n - 1)
    }
}

/// Nonnegative radial density as cell averages over a [`RadialGrid`].
///
/// Immutable; the cumulative mass at every edge is computed once at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    cum: Vec<f64>,
}

impl RadialDensity {
    pub fn from_values(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidParameter(format!(
                "density has {} cells, grid has {}",
                values.len(),
                grid.n_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let mut cum = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for (v, vol) in values.iter().zip(grid.volumes()) {
            acc += v * vol;
            cum.push(acc);
        }
        Ok(Self { grid, values, cum })
    }

    /// Cell averages of a pointwise profile, by 16-point Gauss quadrature
    /// of `u(r)·d·r^{d−1}` per shell.
    pub fn from_profile(grid: Arc<RadialGrid>, u: impl Fn(f64) -> f64) -> Result<Self> {
        let d = grid.dim() as f64;
        let sigma = unit_sphere_area(grid.dim());
        let mut values = Vec::with_capacity(grid.n_cells());
        for (w, vol) in grid.edges().windows(2).zip(grid.volumes()) {
            let m = sigma * crate::quad::gauss16(&|r| u(r) * r.powf(d - 1.0), w[0], w[1]);
            values.push((m / vol).max(0.0));
        }
        Self::from_values(grid, values)
    }

    /// Uniform density of the given total mass on the shell `a ≤ r ≤ b`,
    /// with exact partial-cell overlap volumes at both ends.
    pub fn uniform_shell(grid: Arc<RadialGrid>, a: f64, b: f64, mass: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= grid.r_max()) {
            return Err(Error::InvalidDomain(format!(
                "shell [{a}, {b}] must satisfy 0 <= a < b <= {}",
                grid.r_max()
            )));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "shell mass must be positive, got {mass}"
            )));
        }
        let d = grid.dim() as i32;
        let cd = grid.unit_ball();
        let level = mass / (cd * (b.powi(d) - a.powi(d)));
        let values = grid
            .edges()
            .windows(2)
            .zip(grid.volumes())
            .map(|(w, vol)| {
                let lo = w[0].max(a);
                let hi = w[1].min(b);
                if hi <= lo {
                    0.0
                } else {
                    level * cd * (hi.powi(d) - lo.powi(d)) / vol
                }
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Cumulative mass at each grid edge, length `n_cells() + 1`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    /// Mass of the ball of radius `r`, continuous and piecewise `r^d`.
    pub fn cumulative_at(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.grid.r_max() {
            return self.mass();
        }
        let j = self.grid.cell_containing(r);
        let d = self.grid.dim() as i32;
        let left = self.grid.edges()[j];
        self.cum[j] + self.values[j] * self.grid.unit_ball() * (r.powi(d) - left.powi(d))
    }

    /// Smallest radius enclosing mass `m`: the generalized inverse of
    /// [`cumulative_at`]. `m` may exceed the total mass by a relative
    /// rounding slack of `1e−12`; larger overshoots are domain errors.
    pub fn quantile(&self, m: f64) -> Result<f64> {
        let total = self.mass();
        if !(m >= 0.0) || m > total * (1.0 + 1e-12) {
            return Err(Error::InvalidDomain(format!(
                "quantile argument {m} outside [0, {total}]"
            )));
        }
        let m = m.min(total);
        if m == 0.0 {
            // Left edge of the support.
            let j = self
                .values
                .iter()
                .position(|&v| v > 0.0)
                .ok_or_else(|| Error::InvalidDomain("quantile of a zero density".into()))?;
            return Ok(self.grid.edges()[j]);
        }
        // First edge with cum >= m; cells of zero mass contribute equal
        // consecutive cum values and are skipped by the strict partition.
        let k = self.cum.partition_point(|&c| c < m);
        let j = k - 1;
        let d = self.grid.dim() as i32;
        let left = self.grid.edges()[j];
        let need = m - self.cum[j];
        let denom = self.values[j] * self.grid.unit_ball();
        let rd = left.powi(d) + need / denom;
        Ok(rd.powf(1.0 / d as f64).min(self.grid.edges()[j + 1]))
    }

    /// `∫ r² dμ`, exact for the piecewise-constant density.
    pub fn second_moment(&self) -> f64 {
        let d = self.grid.dim() as i32;
        let sigma = unit_sphere_area(self.grid.dim());
        self.values
            .iter()
            .zip(self.grid.edges().windows(2))
            .map(|(v, w)| {
                v * sigma * (w[1].powi(d + 2) - w[0].powi(d + 2)) / (d + 2) as f64
            })
            .sum()
    }

    /// `Σ |u − v|·V_j`; densities must share a grid.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter(
                "densities live on different grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.volumes())
            .map(|((a, b), vol)| (a - b).abs() * vol)
            .sum())
    }

    /// Pushforward under a continuous strictly increasing radial map `t`,
    /// conserving mass cell-by-cell: each target shell receives exactly the
    /// source mass of its preimage interval, located by bisection.
    ///
    /// Fails if the map sends source mass beyond `target.r_max()`.
    pub fn pushforward(
        &self,
        t: impl Fn(f64) -> f64,
        target: Arc<RadialGrid>,
    ) -> Result<Self> {
        let r_hi = self.grid.r_max();
        let top = t(r_hi);
        if top > target.r_max() * (1.0 + 1e-12) {
            return Err(Error::InvalidMap(format!(
                "map sends r = {r_hi} to {top}, beyond the target radius {}",
                target.r_max()
            )));
        }
        // Preimage of each target edge by bisection.
        let pre: Vec<f64> = target
            .edges()
            .iter()
            .map(|&e| {
                if t(0.0) >= e {
                    0.0
                } else if top < e {
                    r_hi
                } else {
                    crate::interp::invert_increasing(&t, 0.0, r_hi, e, 1e-13 * r_hi)
                }
            })
            .collect();
        let mut values = Vec::with_capacity(target.n_cells());
        let mut acc_prev = self.cumulative_at(pre[0]);
        for (k, vol) in target.volumes().iter().enumerate() {
            let acc = self.cumulative_at(pre[k + 1]);
            values.push(((acc - acc_prev) / vol).max(0.0));
            acc_prev = acc;
        }
        Self::from_values(target, values)
    }

    /// Writes the density as a text table: a `# d r_max n` header line and
    /// one `r_left r_right value` row per cell. Numbers use the shortest
    /// decimal form that parses back to the same float, so a write/read
    /// round trip is exact and reruns are byte-identical.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let g = &self.grid;
        let mut out = String::new();
        out.push_str(&format!("# {} {} {}\n", g.dim(), g.r_max(), g.n_cells()));
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{} {} {}\n", g.edges()[j], g.edges()[j + 1], v));
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads the format written by [`write_file`]. The grid is rebuilt from
    /// the header; row edges are checked against it.
    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |msg: String| Error::Parse { path: path.to_path_buf(), msg };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| bad("empty density file".into()))?;
        let mut head = header.split_whitespace();
        if head.next() != Some("#") {
            return Err(bad("first line must be a \"# d r_max n\" header".into()));
        }
        let d: u32 = head
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header: bad dimension".into()))?;
        let r_max: f64 = head
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header: bad radius".into()))?;
        let n: usize = head
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header: bad cell count".into()))?;
        let grid = RadialGrid::uniform(d, r_max, n)?;
        let mut values = vec![0.0; n];
        let mut seen = 0usize;
        for (lineno, line) in lines {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if seen >= n {
                return Err(bad(format!("line {}: more rows than header cells", lineno + 1)));
            }
            let mut cols = body.split_whitespace();
            let mut next = |what: &str| -> Result<f64> {
                cols.next()
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| bad(format!("line {}: bad {what}", lineno + 1)))
            };
            let (lo, hi, v) = (next("r_left")?, next("r_right")?, next("value")?);
            let tol = 1e-12 * r_max;
            if (lo - grid.edges()[seen]).abs() > tol || (hi - grid.edges()[seen + 1]).abs() > tol {
                return Err(bad(format!(
                    "line {}: edges [{lo}, {hi}] disagree with the header grid",
                    lineno + 1
                )));
            }
            values[seen] = v;
            seen += 1;
        }
        if seen != n {
            return Err(bad(format!("expected {n} rows, found {seen}")));
        }
        Self::from_values(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn grid_volumes_tile_the_ball() {
        for d in [1u32, 2, 3, 7] {
            let g = RadialGrid::uniform(d, 2.5, 37).unwrap();
            let total: f64 = g.volumes().iter().sum();
            assert_relative_eq!(
                total,
                g.unit_ball() * 2.5f64.powi(d as i32),
                max_relative = 1e-12
            );
            assert_eq!(g.edges().len(), 38);
            assert_abs_diff_eq!(g.edges()[0], 0.0);
            assert_relative_eq!(g.r_max(), 2.5);
            for j in 0..g.n_cells() {
                assert_relative_eq!(
                    g.centers()[j],
                    0.5 * (g.edges()[j] + g.edges()[j + 1]),
                    max_relative = 1e-14
                );
            }
        }
    }

    #[test]
    fn cell_containing_is_consistent_with_edges() {
        let g = RadialGrid::uniform(3, 1.0, 10).unwrap();
        assert_eq!(g.cell_containing(0.0), 0);
        assert_eq!(g.cell_containing(0.05), 0);
        assert_eq!(g.cell_containing(0.1), 1);
        assert_eq!(g.cell_containing(0.999), 9);
        assert_eq!(g.cell_containing(5.0), 9);
    }

    #[test]
    fn uniform_shell_mass_and_quantile_closed_form() {
        let g = RadialGrid::uniform(3, 2.0, 257).unwrap();
        let (a, b, mass) = (0.3, 1.7, 2.4);
        let u = RadialDensity::uniform_shell(g, a, b, mass).unwrap();
        assert_relative_eq!(u.mass(), mass, max_relative = 1e-12);
        // Quantiles of a uniform shell: r(m) = (a³ + (m/M)(b³ − a³))^{1/3}.
        for frac in [0.01, 0.25, 0.5, 0.75, 0.99] {
            let m = frac * mass;
            let expect = (a.powi(3) + frac * (b.powi(3) - a.powi(3))).powf(1.0 / 3.0);
            assert_relative_eq!(u.quantile(m).unwrap(), expect, max_relative = 1e-9);
        }
        // Support endpoints are resolved to the enclosing cell.
        assert_abs_diff_eq!(u.quantile(mass).unwrap(), b, epsilon = 2.0 / 257.0);
        assert_abs_diff_eq!(u.quantile(0.0).unwrap(), a, epsilon = 2.0 / 257.0);
    }

    #[test]
    fn cumulative_and_quantile_invert_each_other() {
        let g = RadialGrid::uniform(2, 1.5, 128).unwrap();
        let u = RadialDensity::from_profile(g, |r| (1.0 - r).max(0.0) + 0.1).unwrap();
        for r in [0.01, 0.3, 0.77, 1.2, 1.49] {
            let m = u.cumulative_at(r);
            assert_relative_eq!(u.quantile(m).unwrap(), r, max_relative = 1e-10);
        }
        for frac in [1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-9] {
            let m = frac * u.mass();
            let r = u.quantile(m).unwrap();
            assert_relative_eq!(u.cumulative_at(r), m, max_relative = 1e-10);
        }
    }

    #[test]
    fn quantile_skips_interior_vacuum() {
        let g = RadialGrid::uniform(1, 4.0, 16).unwrap();
        // Mass on [0,1] and [3,4] with vacuum in between.
        let mut vals = vec![0.0; 16];
        for j in 0..4 {
            vals[j] = 1.0;
            vals[12 + j] = 1.0;
        }
        let u = RadialDensity::from_values(g, vals).unwrap();
        let half = 0.5 * u.mass();
        // The half-mass quantile may land anywhere in the vacuum gap; the
        // defining property is that cumulative mass there equals half.
        let q = u.quantile(half).unwrap();
        assert!((1.0..=3.0).contains(&q), "q = {q}");
        assert_relative_eq!(u.cumulative_at(q), half, max_relative = 1e-12);
        let q9 = u.quantile(0.9 * u.mass()).unwrap();
        assert!(q9 > 3.0);
    }

    #[test]
    fn second_moment_of_uniform_ball() {
        // For a unit-mass uniform ball of radius b: ∫r²dμ = d·b²/(d+2).
        for d in [1u32, 2, 3] {
            let g = RadialGrid::uniform(d, 1.0, 400).unwrap();
            let u = RadialDensity::uniform_shell(g, 0.0, 0.8, 1.0).unwrap();
            assert_relative_eq!(
                u.second_moment(),
                d as f64 * 0.64 / (d + 2) as f64,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn pushforward_dilation_rescales_uniform_ball() {
        let g = RadialGrid::uniform(3, 1.0, 200).unwrap();
        let target = RadialGrid::uniform(3, 2.0, 300).unwrap();
        let u = RadialDensity::uniform_shell(g, 0.0, 0.9, 1.7).unwrap();
        let v = u.pushforward(|r| 2.0 * r, target).unwrap();
        assert_relative_eq!(v.mass(), 1.7, max_relative = 1e-10);
        // Dilation by 2 divides the density level by 2^d = 8.
        let level = 1.7 / (v.grid().unit_ball() * 0.9f64.powi(3));
        let mid = v.grid().cell_containing(0.9);
        assert_relative_eq!(v.values()[mid], level / 8.0, max_relative = 1e-6);
        let outside = v.grid().cell_containing(1.9);
        assert_abs_diff_eq!(v.values()[outside], 0.0);
    }

    #[test]
    fn pushforward_rejects_escaping_mass() {
        let g = RadialGrid::uniform(2, 1.0, 50).unwrap();
        let u = RadialDensity::uniform_shell(g.clone(), 0.0, 1.0, 1.0).unwrap();
        let err = u.pushforward(|r| 3.0 * r, g).unwrap_err();
        assert!(matches!(err, Error::InvalidMap(_)));
    }

    #[test]
    fn file_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.density");
        let g = RadialGrid::uniform(3, 1.5, 64).unwrap();
        let u = RadialDensity::from_profile(g, |r| (1.0 - r * r).max(0.0).powf(0.7)).unwrap();
        u.write_file(&path).unwrap();
        let v = RadialDensity::read_file(&path).unwrap();
        assert_eq!(u.values(), v.values());
        assert_eq!(u.grid(), v.grid());
        let first = std::fs::read(&path).unwrap();
        u.write_file(&path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
    }

    #[test]
    fn file_reader_rejects_malformed_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.density");
        for body in [
            "",
            "3 1.0 4\n",
            "# 3 1.0 4\n0 0.25 1.0\n",
            "# 3 1.0 2\n0 0.5 1.0\n0.6 1.0 1.0\n",
            "# 3 1.0 2\n0 0.5 1.0\n0.5 1.0 -2.0\n",
        ] {
            std::fs::write(&path, body).unwrap();
            assert!(RadialDensity::read_file(&path).is_err(), "accepted {body:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn cumulative_is_monotone_and_quantile_inverts(
            vals in prop::collection::vec(0.0f64..5.0, 24),
            d in 1u32..5,
        ) {
            let g = RadialGrid::uniform(d, 1.0, 24).unwrap();
            let u = RadialDensity::from_values(g, vals).unwrap();
            prop_assume!(u.mass() > 1e-9);
            for w in u.cumulative().windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            for frac in [0.1f64, 0.5, 0.93] {
                let m = frac * u.mass();
                let r = u.quantile(m).unwrap();
                prop_assert!((u.cumulative_at(r) - m).abs() <= 1e-10 * u.mass());
            }
        }

        #[test]
        fn pushforward_conserves_mass(
            vals in prop::collection::vec(0.0f64..3.0, 16),
            scale in 0.3f64..1.8,
        ) {
            let g = RadialGrid::uniform(3, 1.0, 16).unwrap();
            let target = RadialGrid::uniform(3, 2.0, 23).unwrap();
            let u = RadialDensity::from_values(g, vals).unwrap();
            let v = u.pushforward(|r| scale * r, target).unwrap();
            prop_assert!((v.mass() - u.mass()).abs() <= 1e-11 * (1.0 + u.mass()));
        }
    }
}
