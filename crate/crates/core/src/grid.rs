//! Rectangular cell-centered grids with homogeneous-Neumann difference
//! operators and the discrete inner products built on them.
//!
//! The domain is a box of side lengths `lx` (and `ly` in 2D) split into
//! `nx` (times `ny`) cells of equal size. Unknowns live at cell centers,
//! so the center of cell `i` along x is `(i + 1/2) * hx`. The Laplacian
//! uses the standard 3-point (1D) or 5-point (2D) stencil closed at the
//! boundary by mirror ghost cells (`u[-1] = u[0]`), which realizes the
//! zero-flux condition and makes the operator symmetric with zero row
//! and column sums. Constants are therefore in its kernel exactly, and
//! every integral of a Laplacian image vanishes to rounding, which is
//! what the conservation checks downstream rely on.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Cell-centered discretization of a rectangular domain in 1 or 2 dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: u8,
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid {
    /// Interval `[0, lx]` split into `nx` cells.
    pub fn line(nx: usize, lx: f64) -> Result<Self> {
        if nx < 3 {
            return Err(Error::InvalidModelConstant {
                name: "grid.nx",
                value: nx as f64,
                constraint: "cell count must be at least 3",
            });
        }
        if !(lx.is_finite() && lx > 0.0) {
            return Err(Error::InvalidModelConstant {
                name: "grid.lx",
                value: lx,
                constraint: "extent must be positive and finite",
            });
        }
        Ok(Self {
            dim: 1,
            nx,
            ny: 1,
            lx,
            ly: 0.0,
        })
    }

    /// Rectangle `[0, lx] x [0, ly]` split into `nx * ny` cells.
    pub fn rectangle(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidModelConstant {
                name: "grid.nx/ny",
                value: nx.min(ny) as f64,
                constraint: "cell counts must be at least 3",
            });
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidModelConstant {
                name: "grid.lx/ly",
                value: if lx > 0.0 { ly } else { lx },
                constraint: "extents must be positive and finite",
            });
        }
        Ok(Self {
            dim: 2,
            nx,
            ny,
            lx,
            ly,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Cell count along y; 1 for a 1D grid.
    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    /// Total number of cells.
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Spacing along x.
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    /// Spacing along y (only meaningful in 2D).
    pub fn hy(&self) -> f64 {
        if self.dim == 2 {
            self.ly / self.ny as f64
        } else {
            0.0
        }
    }

    /// Volume of one cell (length in 1D, area in 2D).
    pub fn cell_volume(&self) -> f64 {
        match self.dim {
            1 => self.hx(),
            _ => self.hx() * self.hy(),
        }
    }

    /// Measure of the whole domain.
    pub fn measure(&self) -> f64 {
        self.cell_volume() * self.cells() as f64
    }

    /// Center coordinates of the cell with flat (row-major) index `idx`.
    pub fn cell_center(&self, idx: usize) -> (f64, f64) {
        let i = idx % self.nx;
        let j = idx / self.nx;
        let x = (i as f64 + 0.5) * self.hx();
        let y = if self.dim == 2 {
            (j as f64 + 0.5) * self.hy()
        } else {
            0.0
        };
        (x, y)
    }
}

/// One scalar value per grid cell, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wrap a value vector, checking length and finiteness.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::DimensionMismatch {
                len: values.len(),
                cells: grid.cells(),
            });
        }
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField { cell });
        }
        Ok(Self { grid, values })
    }

    /// Field with the same value in every cell.
    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.cells()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Evaluate `f(x, y)` at every cell center.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = (0..grid.cells())
            .map(|idx| {
                let (x, y) = grid.cell_center(idx);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `self + c * other`, both on the same grid.
    pub fn add_scaled(&self, c: f64, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Field {
            grid: self.grid,
            values,
        })
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, mut f: impl FnMut(f64, f64) -> f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field {
            grid: self.grid,
            values,
        })
    }

    /// Pointwise map.
    pub fn map(&self, f: impl FnMut(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().copied().map(f).collect(),
        }
    }

    /// Error if any entry is NaN or infinite.
    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(cell) => Err(Error::NonFiniteField { cell }),
            None => Ok(()),
        }
    }
}

/// Discrete Neumann Laplacian: 3-point (1D) or 5-point (2D) stencil with
/// mirror ghost cells at the boundary.
///
/// Applying it to a constant field gives exactly zero, and its column sums
/// vanish, so `inner_l2(laplacian_neumann(u), 1) == 0` to rounding.
pub fn laplacian_neumann(u: &Field) -> Field {
    let g = u.grid;
    let (nx, ny) = (g.nx, g.ny);
    let v = &u.values;
    let mut out = vec![0.0; v.len()];

    let ax = 1.0 / (g.hx() * g.hx());
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx {
            let c = v[row + i];
            // Mirror closure: the ghost neighbor equals the boundary cell,
            // so the corresponding difference drops out.
            let left = if i > 0 { v[row + i - 1] } else { c };
            let right = if i + 1 < nx { v[row + i + 1] } else { c };
            out[row + i] = ax * (left - 2.0 * c + right);
        }
    }

    if g.dim == 2 {
        let ay = 1.0 / (g.hy() * g.hy());
        for j in 0..ny {
            for i in 0..nx {
                let c = v[j * nx + i];
                let down = if j > 0 { v[(j - 1) * nx + i] } else { c };
                let up = if j + 1 < ny { v[(j + 1) * nx + i] } else { c };
                out[j * nx + i] += ay * (down - 2.0 * c + up);
            }
        }
    }

    Field {
        grid: g,
        values: out,
    }
}

/// Discrete L2 inner product: midpoint quadrature `sum_i u_i v_i * cell_volume`.
pub fn inner_l2(u: &Field, v: &Field) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    let dot: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok(dot * u.grid.cell_volume())
}

/// L2 norm induced by [`inner_l2`].
pub fn norm_l2(u: &Field) -> f64 {
    inner_l2(u, u)
        .expect("same field shares its own grid")
        .sqrt()
}

/// Discrete H1 seminorm squared, `|u|_{H1}^2 = -<u, lap u>`.
///
/// Summation by parts with the mirror closure makes this the sum of squared
/// one-sided differences, hence nonnegative and zero exactly on constants.
pub fn seminorm_h1(u: &Field) -> f64 {
    let lap = laplacian_neumann(u);
    let val = -inner_l2(u, &lap).expect("same grid by construction");
    // Rounding can leave a tiny negative residue on near-constant fields.
    val.max(0.0)
}

/// Write a field in the single-column CSV format:
/// a `# grid ...` header line, then one value per row in row-major order.
pub fn write_field_csv<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let g = field.grid;
    match g.dim {
        1 => writeln!(w, "# grid d=1 nx={} lx={}", g.nx, g.lx)?,
        _ => writeln!(
            w,
            "# grid d=2 nx={} ny={} lx={} ly={}",
            g.nx, g.ny, g.lx, g.ly
        )?,
    }
    for v in &field.values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Read a field from the CSV format produced by [`write_field_csv`].
pub fn read_field_csv<R: BufRead>(r: R) -> Result<Field> {
    let mut header: Option<Grid> = None;
    let mut values = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if header.is_none() {
                header = Some(parse_grid_header(rest.trim(), lineno + 1)?);
            }
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|_| {
            Error::FieldCsv(format!(
                "line {}: expected a number, got {trimmed:?}",
                lineno + 1
            ))
        })?;
        values.push(v);
    }
    let grid = header.ok_or_else(|| Error::FieldCsv("missing `# grid ...` header".into()))?;
    Field::from_values(grid, values)
}

fn parse_grid_header(text: &str, lineno: usize) -> Result<Grid> {
    let mut d = None;
    let mut nx = None;
    let mut ny = None;
    let mut lx = None;
    let mut ly = None;
    let mut tokens = text.split_whitespace();
    if tokens.next() != Some("grid") {
        return Err(Error::FieldCsv(format!(
            "line {lineno}: header must start with `grid`"
        )));
    }
    for tok in tokens {
        let (key, val) = tok.split_once('=').ok_or_else(|| {
            Error::FieldCsv(format!("line {lineno}: malformed header token {tok:?}"))
        })?;
        let parse_err =
            || Error::FieldCsv(format!("line {lineno}: bad value in header token {tok:?}"));
        match key {
            "d" => d = Some(val.parse::<u8>().map_err(|_| parse_err())?),
            "nx" => nx = Some(val.parse::<usize>().map_err(|_| parse_err())?),
            "ny" => ny = Some(val.parse::<usize>().map_err(|_| parse_err())?),
            "lx" => lx = Some(val.parse::<f64>().map_err(|_| parse_err())?),
            "ly" => ly = Some(val.parse::<f64>().map_err(|_| parse_err())?),
            other => {
                return Err(Error::FieldCsv(format!(
                    "line {lineno}: unknown header key {other:?}"
                )))
            }
        }
    }
    let missing = |what: &str| Error::FieldCsv(format!("line {lineno}: header misses {what}"));
    match d.ok_or_else(|| missing("d"))? {
        1 => Grid::line(
            nx.ok_or_else(|| missing("nx"))?,
            lx.ok_or_else(|| missing("lx"))?,
        ),
        2 => Grid::rectangle(
            nx.ok_or_else(|| missing("nx"))?,
            ny.ok_or_else(|| missing("ny"))?,
            lx.ok_or_else(|| missing("lx"))?,
            ly.ok_or_else(|| missing("ly"))?,
        ),
        other => Err(Error::FieldCsv(format!(
            "line {lineno}: unsupported dimension {other}"
        ))),
    }
}
