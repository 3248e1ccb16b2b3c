//! Periodic grid functions with a cached Fourier transform.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Uniform periodic grid on `[0, L)^d` with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("grid dimension {dim} not in 1..=3")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "points per axis must be a power of two >= 4, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument(format!("domain length {length} must be positive")));
        }
        Ok(Self { dim, n, length })
    }

    /// Grid on the standard torus of length `2π`.
    pub fn periodic(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 2.0 * PI)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Largest resolved wavenumber `π n / L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Highest dyadic block whose support stays at or below the Nyquist
    /// wavenumber: `2^{j+1} ≤ π n / L`.
    pub fn j_max(&self) -> i32 {
        self.nyquist().log2().floor() as i32 - 1
    }

    /// Multi-index of a flat (row-major, last axis fastest) index.
    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let m = self.multi_index(idx);
        let h = self.spacing();
        (0..self.dim).map(|a| m[a] as f64 * h).collect()
    }

    fn wavenumber_1d(&self, i: usize) -> f64 {
        let k = if i <= self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        };
        k * 2.0 * PI / self.length
    }

    /// Wavevector of a flat spectral index.
    pub fn wavevector(&self, idx: usize) -> Vec<f64> {
        let m = self.multi_index(idx);
        (0..self.dim).map(|a| self.wavenumber_1d(m[a])).collect()
    }

    /// Whether a spectral index touches the Nyquist plane on some axis.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        (0..self.dim).any(|a| m[a] == self.n / 2)
    }

    /// All wavevectors in spectral order.
    pub fn wavevectors(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.wavevector(i)).collect()
    }
}

/// Real-valued function on a periodic grid.
#[derive(Debug, Clone)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
    spectrum: OnceLock<Arc<Vec<Complex64>>>,
}

impl PartialEq for GridField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    /// Real part of the inverse transform of `spectrum`.
    pub fn from_spectrum(grid: Grid, mut spectrum: Vec<Complex64>) -> Self {
        fft_nd(&mut spectrum, grid, true);
        let values = spectrum.iter().map(|c| c.re).collect();
        Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Unnormalized DFT, computed once and cached.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| {
                let mut data: Vec<Complex64> =
                    self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft_nd(&mut data, self.grid, false);
                Arc::new(data)
            })
            .as_slice()
    }

    /// Apply a Fourier multiplier `m(ξ)`.
    pub fn multiplier<F: Fn(&[f64]) -> Complex64>(&self, m: F) -> Self {
        let spec = self.spectrum();
        let out: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(i, c)| c * m(&self.grid.wavevector(i)))
            .collect();
        Self::from_spectrum(self.grid, out)
    }

    /// Apply a real radial or general real multiplier.
    pub fn real_multiplier<F: Fn(&[f64]) -> f64>(&self, m: F) -> Self {
        self.multiplier(|xi| Complex64::new(m(xi), 0.0))
    }

    /// Multiply the spectrum by precomputed factors.
    pub fn multiplier_table(&self, table: &[Complex64]) -> Self {
        let out: Vec<Complex64> = self
            .spectrum()
            .iter()
            .zip(table)
            .map(|(a, b)| a * b)
            .collect();
        Self::from_spectrum(self.grid, out)
    }

    /// Partial derivative along `axis`; the Nyquist mode is dropped.
    pub fn derivative(&self, axis: usize) -> Self {
        let grid = self.grid;
        let spec = self.spectrum();
        let out: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let m = grid.multi_index(i);
                if m[axis] == grid.n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, grid.wavenumber_1d(m[axis]))
                }
            })
            .collect();
        Self::from_spectrum(grid, out)
    }

    pub fn gradient(&self) -> Vec<GridField> {
        (0..self.grid.dim).map(|a| self.derivative(a)).collect()
    }

    /// `x ↦ f(x + z)`, exact for band-limited fields.
    pub fn shift(&self, z: &[f64]) -> Self {
        self.multiplier(|xi| {
            let ph: f64 = xi.iter().zip(z).map(|(a, b)| a * b).sum();
            Complex64::new(ph.cos(), ph.sin())
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `L^p` norm on the torus (cell-volume weighted); `p = ∞` is the max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, self.grid.cell_volume(), p)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            spectrum: OnceLock::new(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Trigonometric interpolation at an arbitrary point (periodic).
    pub fn eval_spectral(&self, x: &[f64]) -> f64 {
        let grid = self.grid;
        let spec = self.spectrum();
        let n = grid.n;
        let w = 2.0 * PI / grid.length;
        // Per-axis phase tables e^{i k x_a}.
        let tables: Vec<Vec<Complex64>> = (0..grid.dim)
            .map(|a| {
                (0..n)
                    .map(|i| {
                        let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
                        let half = if i == n / 2 { 0.5 } else { 1.0 };
                        let ph = k * w * x[a];
                        Complex64::new(ph.cos(), ph.sin()) * half
                    })
                    .collect()
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in spec.iter().enumerate() {
            let m = grid.multi_index(idx);
            let mut ph = Complex64::new(1.0, 0.0);
            let mut nyq = false;
            for a in 0..grid.dim {
                ph *= tables[a][m[a]];
                nyq |= m[a] == n / 2;
            }
            if nyq {
                // split the Nyquist coefficient symmetrically between ±n/2
                let mut ph2 = Complex64::new(1.0, 0.0);
                for a in 0..grid.dim {
                    let t = tables[a][m[a]];
                    ph2 *= if m[a] == n / 2 { t.conj() } else { t };
                }
                acc += c * (ph + ph2);
                continue;
            }
            acc += c * ph;
        }
        acc.re / grid.len() as f64
    }

    /// Tensor-product cubic (Catmull–Rom) interpolation, periodic.
    pub fn eval_cubic(&self, x: &[f64]) -> f64 {
        let grid = self.grid;
        let n = grid.n as isize;
        let h = grid.spacing();
        let mut base = [0isize; 3];
        let mut wts = [[0.0f64; 4]; 3];
        for a in 0..grid.dim {
            let s = x[a] / h;
            let i0 = s.floor();
            let t = s - i0;
            base[a] = i0 as isize - 1;
            wts[a] = catmull_rom(t);
        }
        let mut acc = 0.0;
        let stride = |a: usize| (grid.n as isize).pow((grid.dim - 1 - a) as u32);
        match grid.dim {
            1 => {
                for i in 0..4 {
                    let ii = (base[0] + i as isize).rem_euclid(n);
                    acc += wts[0][i] * self.values[ii as usize];
                }
            }
            2 => {
                for i in 0..4 {
                    let ii = (base[0] + i as isize).rem_euclid(n);
                    for j in 0..4 {
                        let jj = (base[1] + j as isize).rem_euclid(n);
                        acc += wts[0][i] * wts[1][j] * self.values[(ii * stride(0) + jj) as usize];
                    }
                }
            }
            _ => {
                for i in 0..4 {
                    let ii = (base[0] + i as isize).rem_euclid(n);
                    for j in 0..4 {
                        let jj = (base[1] + j as isize).rem_euclid(n);
                        for k in 0..4 {
                            let kk = (base[2] + k as isize).rem_euclid(n);
                            acc += wts[0][i]
                                * wts[1][j]
                                * wts[2][k]
                                * self.values[(ii * stride(0) + jj * stride(1) + kk) as usize];
                        }
                    }
                }
            }
        }
        acc
    }

    /// Spectral zero-padding onto a finer grid with `factor` times the points.
    pub fn upsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(Error::InvalidArgument("upsampling factor must be a power of two".into()));
        }
        let coarse = self.grid;
        let fine = Grid::new(coarse.dim, coarse.n * factor, coarse.length)?;
        let spec = self.spectrum();
        let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
        let scale = (factor as f64).powi(coarse.dim as i32);
        for (idx, c) in spec.iter().enumerate() {
            let m = coarse.multi_index(idx);
            if (0..coarse.dim).any(|a| m[a] == coarse.n / 2) {
                continue;
            }
            let mut fidx = 0usize;
            for a in 0..coarse.dim {
                let k = if m[a] < coarse.n / 2 { m[a] } else { fine.n - (coarse.n - m[a]) };
                fidx = fidx * fine.n + k;
            }
            out[fidx] = c * scale;
        }
        Ok(Self::from_spectrum(fine, out))
    }

    /// Write as CSV: three header lines (`d,..`, `N,..`, `L,..`) followed by
    /// the values in row-major order, one per line.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut s = header_text(self.grid);
        for v in &self.values {
            s.push_str(&format!("{v}\n"));
        }
        fs::write(path, s)?;
        Ok(())
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let grid = parse_header(&mut lines)?;
        let values = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad value {l:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, values)
    }

    /// Raw little-endian `f64` values plus a `<path>.meta` sidecar holding the
    /// same three header lines as the CSV format.
    pub fn write_raw<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path)?;
        for v in &self.values {
            f.write_all(&v.to_le_bytes())?;
        }
        fs::write(sidecar(path), header_text(self.grid))?;
        Ok(())
    }

    pub fn read_raw<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let meta = fs::read_to_string(sidecar(path))?;
        let grid = parse_header(&mut meta.lines())?;
        let bytes = fs::read(path)?;
        if bytes.len() != 8 * grid.len() {
            return Err(Error::Format(format!(
                "raw file has {} bytes, expected {}",
                bytes.len(),
                8 * grid.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(grid, values)
    }
}

fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    s.into()
}

fn header_text(grid: Grid) -> String {
    format!("d,{}\nN,{}\nL,{}\n", grid.dim, grid.n, grid.length)
}

fn parse_header<'a, I: Iterator<Item = &'a str>>(lines: &mut I) -> Result<Grid> {
    let mut get = |key: &str| -> Result<String> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing header line {key}")))?;
        let (k, v) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("malformed header line {line:?}")))?;
        if k.trim() != key {
            return Err(Error::Format(format!("expected header {key}, found {k}")));
        }
        Ok(v.trim().to_string())
    };
    let d = get("d")?.parse::<usize>().map_err(|e| Error::Format(e.to_string()))?;
    let n = get("N")?.parse::<usize>().map_err(|e| Error::Format(e.to_string()))?;
    let l = get("L")?.parse::<f64>().map_err(|e| Error::Format(e.to_string()))?;
    Grid::new(d, n, l)
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}

/// `L^p` norm of grid values with the given cell volume.
pub fn lp_norm(values: &[f64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let s: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    (s * cell).powf(1.0 / p)
}

/// In-place n-dimensional FFT; the inverse is normalized by `1/len`.
pub fn fft_nd(data: &mut [Complex64], grid: Grid, inverse: bool) {
    let n = grid.n;
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    let total = grid.len();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block = stride * n;
        for start in (0..total).step_by(block) {
            for off in 0..stride {
                for k in 0..n {
                    line[k] = data[start + off + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for k in 0..n {
                    data[start + off + k * stride] = line[k];
                }
            }
        }
    }
    if inverse {
        let s = 1.0 / total as f64;
        data.iter_mut().for_each(|c| *c *= s);
    }
}
