//! Periodic grid functions on `[0, L)^n` with `N` points per axis.
//!
//! Samples sit at `x = (L/N) i`, stored row-major (last axis fastest). The
//! spectrum uses the unitary DFT
//! `F[kappa] = N^{-n/2} sum_i f[i] exp(-2 pi i kappa . i / N)`,
//! with index `kappa` in `[-N/2, N/2)` read as frequency `xi = kappa / L`.
//! Fourier series coefficients of the sampled function are `F / N^{n/2}`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    n: usize,
    size: usize,
    period: f64,
    data: Vec<Complex64>,
}

/// Signed wavenumber of DFT index `i`.
#[inline]
pub fn wavenumber(i: usize, size: usize) -> i64 {
    if i < size / 2 {
        i as i64
    } else {
        i as i64 - size as i64
    }
}

/// DFT index of wavenumber `kappa`, modulo `size`.
#[inline]
pub fn index_of(kappa: i64, size: usize) -> usize {
    kappa.rem_euclid(size as i64) as usize
}

/// Planned unitary n-D transform, reusable across calls.
pub(crate) struct NdFft {
    n: usize,
    size: usize,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl NdFft {
    pub(crate) fn new(n: usize, size: usize, inverse: bool) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let fft = if inverse { planner.plan_fft_inverse(size) } else { planner.plan_fft_forward(size) };
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Self { n, size, fft, line: vec![Complex64::new(0.0, 0.0); size], scratch }
    }

    pub(crate) fn process(&mut self, data: &mut [Complex64]) {
        let (n, size) = (self.n, self.size);
        let total = data.len();
        if n == 1 {
            self.fft.process_with_scratch(data, &mut self.scratch);
        } else {
            for axis in 0..n {
                let stride = size.pow((n - 1 - axis) as u32);
                let block = stride * size;
                for base in (0..total).step_by(block) {
                    for offset in 0..stride {
                        let start = base + offset;
                        for (t, v) in self.line.iter_mut().enumerate() {
                            *v = data[start + t * stride];
                        }
                        self.fft.process_with_scratch(&mut self.line, &mut self.scratch);
                        for (t, v) in self.line.iter().enumerate() {
                            data[start + t * stride] = *v;
                        }
                    }
                }
            }
        }
        let scale = (total as f64).sqrt().recip();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

fn transform_axes(data: &mut [Complex64], n: usize, size: usize, inverse: bool) {
    NdFft::new(n, size, inverse).process(data);
}

impl GridFunction {
    fn check_shape(n: usize, size: usize, period: f64) -> Result<()> {
        if n == 0 {
            return Err(Error::param("n", "must be >= 1"));
        }
        if size < 2 {
            return Err(Error::param("N", "must be >= 2"));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::param("L", "must be positive"));
        }
        Ok(())
    }

    pub fn zeros(n: usize, size: usize, period: f64) -> Result<Self> {
        Self::check_shape(n, size, period)?;
        Ok(Self { n, size, period, data: vec![Complex64::new(0.0, 0.0); size.pow(n as u32)] })
    }

    pub fn from_samples(n: usize, size: usize, period: f64, data: Vec<Complex64>) -> Result<Self> {
        Self::check_shape(n, size, period)?;
        if data.len() != size.pow(n as u32) {
            return Err(Error::GridMismatch { reason: format!("{} samples for N^n = {}", data.len(), size.pow(n as u32)) });
        }
        Ok(Self { n, size, period, data })
    }

    /// Samples `f(x)` at the grid points.
    pub fn from_fn(n: usize, size: usize, period: f64, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let mut g = Self::zeros(n, size, period)?;
        let h = period / size as f64;
        let mut x = vec![0.0; n];
        for (i, v) in g.data.iter_mut().enumerate() {
            let mut rest = i;
            for a in (0..n).rev() {
                x[a] = (rest % size) as f64 * h;
                rest /= size;
            }
            *v = f(&x);
        }
        Ok(g)
    }

    /// Grid function with the given unitary spectrum.
    pub fn from_spectrum(n: usize, size: usize, period: f64, mut spectrum: Vec<Complex64>) -> Result<Self> {
        Self::check_shape(n, size, period)?;
        if spectrum.len() != size.pow(n as u32) {
            return Err(Error::GridMismatch { reason: "spectrum length is not N^n".into() });
        }
        transform_axes(&mut spectrum, n, size, true);
        Ok(Self { n, size, period, data: spectrum })
    }

    /// `exp(2 pi i kappa . x / L)`.
    pub fn mode(n: usize, size: usize, period: f64, kappa: &[i64]) -> Result<Self> {
        if kappa.len() != n {
            return Err(Error::param("kappa", "length must be n"));
        }
        let mut spec = vec![Complex64::new(0.0, 0.0); size.pow(n as u32)];
        let idx = kappa.iter().fold(0, |acc, &k| acc * size + index_of(k, size));
        spec[idx] = Complex64::new((spec.len() as f64).sqrt(), 0.0);
        Self::from_spectrum(n, size, period, spec)
    }

    /// Complex Gaussian series coefficients on the modes with `|xi| <= band`
    /// and zero elsewhere.
    pub fn random_band_limited<R: Rng + ?Sized>(n: usize, size: usize, period: f64, band: f64, rng: &mut R) -> Result<Self> {
        Self::check_shape(n, size, period)?;
        let total = size.pow(n as u32);
        let scale = (total as f64).sqrt() / std::f64::consts::SQRT_2;
        let mut spec = vec![Complex64::new(0.0, 0.0); total];
        let proto = Self { n, size, period, data: Vec::new() };
        for (i, v) in spec.iter_mut().enumerate() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if proto.frequency_norm_sq(i) <= band * band {
                *v = Complex64::new(re, im) * scale;
            }
        }
        Self::from_spectrum(n, size, period, spec)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.data
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.n == other.n && self.size == other.size && self.period == other.period
    }

    pub fn require_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                reason: format!(
                    "(n, N, L) = ({}, {}, {}) vs ({}, {}, {})",
                    self.n, self.size, self.period, other.n, other.size, other.period
                ),
            })
        }
    }

    /// Signed wavenumbers of flat index `i`.
    pub fn wavenumbers(&self, i: usize) -> Vec<i64> {
        let mut out = vec![0; self.n];
        let mut rest = i;
        for a in (0..self.n).rev() {
            out[a] = wavenumber(rest % self.size, self.size);
            rest /= self.size;
        }
        out
    }

    /// Frequency `xi = kappa / L` of flat index `i`.
    pub fn frequency(&self, i: usize) -> Vec<f64> {
        self.wavenumbers(i).into_iter().map(|k| k as f64 / self.period).collect()
    }

    pub fn frequency_norm_sq(&self, i: usize) -> f64 {
        let mut rest = i;
        let mut s = 0.0;
        for _ in 0..self.n {
            let k = wavenumber(rest % self.size, self.size) as f64 / self.period;
            s += k * k;
            rest /= self.size;
        }
        s
    }

    /// Largest frequency magnitude resolved along an axis.
    pub fn nyquist(&self) -> f64 {
        self.size as f64 / (2.0 * self.period)
    }

    /// Unitary spectrum.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut s = self.data.clone();
        transform_axes(&mut s, self.n, self.size, false);
        s
    }

    /// Fourier series coefficients `spectrum / N^{n/2}`.
    pub fn series_coefficients(&self) -> Vec<Complex64> {
        let scale = (self.data.len() as f64).sqrt().recip();
        self.spectrum().into_iter().map(|c| c * scale).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        (self.period / self.size as f64).powi(self.n as i32)
    }

    /// `(cell volume * sum |f|^p)^{1/p}`; a quasi-norm for `p < 1`.
    pub fn norm_lp(&self, p: f64) -> f64 {
        if p == 2.0 {
            return self.norm_l2();
        }
        (self.cell_volume() * self.data.iter().map(|v| v.norm().powf(p)).sum::<f64>()).powf(1.0 / p)
    }

    pub fn norm_l2(&self) -> f64 {
        (self.cell_volume() * self.data.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self { data: self.data.iter().map(|v| v * a).collect(), ..self.clone() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.require_same_grid(other)?;
        Ok(Self { data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(), ..self.clone() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_grid(other)?;
        Ok(Self { data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(), ..self.clone() })
    }

    pub fn pointwise_mul(&self, other: &Self) -> Result<Self> {
        self.require_same_grid(other)?;
        Ok(Self { data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(), ..self.clone() })
    }

    /// `g(x) = f(x - shift * L/N)`, periodically.
    pub fn translated(&self, shift: &[i64]) -> Result<Self> {
        if shift.len() != self.n {
            return Err(Error::param("shift", "length must be n"));
        }
        let mut out = self.clone();
        let size = self.size as i64;
        for (i, v) in out.data.iter_mut().enumerate() {
            let mut rest = i;
            let mut src = 0usize;
            let mut stride = 1usize;
            for a in (0..self.n).rev() {
                let c = (rest % self.size) as i64;
                rest /= self.size;
                src += ((c - shift[a]).rem_euclid(size) as usize) * stride;
                stride *= self.size;
            }
            *v = self.data[src];
        }
        Ok(out)
    }

    /// Little-endian binary: a JSON header file and a raw sample file.
    pub fn write<H: Write, D: Write>(&self, header: H, mut data: D, dtype: Dtype) -> Result<()> {
        let h = GridHeader { n: self.n, size: self.size, period: self.period, dtype, layout: "row_major".into() };
        serde_json::to_writer_pretty(header, &h)?;
        for v in &self.data {
            match dtype {
                Dtype::Complex128 => {
                    data.write_all(&v.re.to_le_bytes())?;
                    data.write_all(&v.im.to_le_bytes())?;
                }
                Dtype::Complex64 => {
                    data.write_all(&(v.re as f32).to_le_bytes())?;
                    data.write_all(&(v.im as f32).to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read<H: Read, D: Read>(header: H, mut data: D) -> Result<Self> {
        let h: GridHeader = serde_json::from_reader(header)?;
        if h.layout != "row_major" {
            return Err(Error::Format(format!("unsupported layout {}", h.layout)));
        }
        Self::check_shape(h.n, h.size, h.period)?;
        let len = h.size.pow(h.n as u32);
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let v = match h.dtype {
                Dtype::Complex128 => {
                    let mut b = [0u8; 8];
                    data.read_exact(&mut b)?;
                    let re = f64::from_le_bytes(b);
                    data.read_exact(&mut b)?;
                    Complex64::new(re, f64::from_le_bytes(b))
                }
                Dtype::Complex64 => {
                    let mut b = [0u8; 4];
                    data.read_exact(&mut b)?;
                    let re = f32::from_le_bytes(b);
                    data.read_exact(&mut b)?;
                    Complex64::new(re as f64, f32::from_le_bytes(b) as f64)
                }
            };
            out.push(v);
        }
        if data.read(&mut [0u8; 1])? != 0 {
            return Err(Error::Format("trailing bytes after samples".into()));
        }
        Self::from_samples(h.n, h.size, h.period, out)
    }

    /// Writes `<stem>.json` and `<stem>.bin`.
    pub fn save(&self, stem: &Path, dtype: Dtype) -> Result<()> {
        let header = BufWriter::new(File::create(stem.with_extension("json"))?);
        let mut data = BufWriter::new(File::create(stem.with_extension("bin"))?);
        self.write(header, &mut data, dtype)?;
        data.flush()?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let header = BufReader::new(File::open(stem.with_extension("json"))?);
        let data = BufReader::new(File::open(stem.with_extension("bin"))?);
        Self::read(header, data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    Complex64,
    Complex128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
    #[serde(rename = "L")]
    pub period: f64,
    pub dtype: Dtype,
    pub layout: String,
}
