use super::fft::{fft_nd, is_nyquist, slot, wavenumber};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

/// ⟨l,j⟩ = max(1, |l|₁, |j|).
pub fn bracket(l: &[i64], j: i64) -> i64 {
    let l1: i64 = l.iter().map(|x| x.abs()).sum();
    1.max(l1).max(j.abs())
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::invalid("field needs at least the θ dimension"));
    }
    for &n in shape {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("grid size {n} is not a power of two ≥ 2")));
        }
    }
    Ok(())
}

fn decode(mut idx: usize, shape: &[usize], out: &mut [usize]) {
    for axis in (0..shape.len()).rev() {
        out[axis] = idx % shape[axis];
        idx /= shape[axis];
    }
}

/// Complex Fourier coefficients of a field, same layout as the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Coeffs {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl Coeffs {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        Ok(Coeffs {
            shape: shape.to_vec(),
            data: vec![Complex64::default(); shape.iter().product()],
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn time_dims(&self) -> usize {
        self.shape.len() - 1
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Storage position of (l, j) if it lies inside the truncation |l_i|, |j| < n/2.
    pub fn position(&self, l: &[i64], j: i64) -> Option<usize> {
        if l.len() != self.time_dims() {
            return None;
        }
        let mut pos = 0usize;
        for (axis, &n) in self.shape.iter().enumerate() {
            let k = if axis < l.len() { l[axis] } else { j };
            if 2 * k.unsigned_abs() as usize >= n {
                return None;
            }
            pos = pos * n + slot(k, n);
        }
        Some(pos)
    }

    pub fn get(&self, l: &[i64], j: i64) -> Complex64 {
        self.position(l, j).map_or(Complex64::default(), |p| self.data[p])
    }

    pub fn set(&mut self, l: &[i64], j: i64, c: Complex64) -> Result<()> {
        let p = self
            .position(l, j)
            .ok_or_else(|| Error::invalid(format!("mode ({l:?},{j}) outside truncation")))?;
        self.data[p] = c;
        Ok(())
    }

    /// Every storage slot with its wavenumbers and a Nyquist flag.
    pub fn modes(&self) -> Vec<(Vec<i64>, i64, bool)> {
        let d = self.time_dims();
        let mut idx = vec![0usize; self.shape.len()];
        (0..self.data.len())
            .map(|p| {
                decode(p, &self.shape, &mut idx);
                let ny = idx.iter().zip(&self.shape).any(|(&i, &n)| is_nyquist(i, n));
                let l = (0..d).map(|a| wavenumber(idx[a], self.shape[a])).collect();
                (l, wavenumber(idx[d], self.shape[d]), ny)
            })
            .collect()
    }

    /// Largest |c(−l,−j) − conj c(l,j)|.
    pub fn hermitian_defect(&self) -> f64 {
        let mut idx = vec![0usize; self.shape.len()];
        let mut worst = 0.0f64;
        for p in 0..self.data.len() {
            decode(p, &self.shape, &mut idx);
            let mut q = 0usize;
            for (axis, &n) in self.shape.iter().enumerate() {
                q = q * n + (n - idx[axis]) % n;
            }
            worst = worst.max((self.data[q] - self.data[p].conj()).norm());
        }
        worst
    }

    /// Synthesize the real field; rejects coefficient sets that are not Hermitian.
    pub fn to_field(&self) -> Result<PeriodicField> {
        let scale = self.data.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        let defect = self.hermitian_defect();
        if defect > 1e-10 * scale {
            return Err(Error::invalid(format!(
                "coefficients are not Hermitian (defect {defect:.3e}); field would be complex"
            )));
        }
        let mut buf = self.data.clone();
        fft_nd(&mut buf, &self.shape, true);
        Ok(PeriodicField {
            shape: self.shape.clone(),
            values: buf.iter().map(|c| c.re).collect(),
        })
    }

    /// (Σ ⟨l,j⟩^{2s}|c_{l,j}|²)^{1/2}; valid for complex coefficient sets too.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.modes()
            .iter()
            .zip(&self.data)
            .map(|((l, j, _), z)| (bracket(l, *j) as f64).powf(2.0 * s) * z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn map_modes(&self, mut f: impl FnMut(&[i64], i64, bool, Complex64) -> Complex64) -> Coeffs {
        let mut out = self.clone();
        for (p, (l, j, ny)) in self.modes().into_iter().enumerate() {
            out.data[p] = f(&l, j, ny, self.data[p]);
        }
        out
    }
}

/// Real samples of a function on 𝕋 (θ only) or 𝕋^d × 𝕋 ((φ, θ)), θ last.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl PeriodicField {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_shape(&shape)?;
        if shape.iter().product::<usize>() != values.len() {
            return Err(Error::invalid("sample count does not match grid shape"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite sample"));
        }
        Ok(PeriodicField { shape, values })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::constant(shape, 0.0)
    }

    pub fn constant(shape: &[usize], c: f64) -> Result<Self> {
        check_shape(shape)?;
        Ok(PeriodicField {
            shape: shape.to_vec(),
            values: vec![c; shape.iter().product()],
        })
    }

    /// θ-only field sampled at θ_k = 2πk/m.
    pub fn from_fn_theta(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..m).map(|k| f(2.0 * PI * k as f64 / m as f64)).collect();
        Self::new(vec![m], values)
    }

    /// Field on the full grid; `f(φ, θ)`.
    pub fn from_fn(shape: &[usize], f: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        check_shape(shape)?;
        let total = shape.iter().product();
        let d = shape.len() - 1;
        let mut idx = vec![0usize; shape.len()];
        let mut phi = vec![0.0; d];
        let mut values = Vec::with_capacity(total);
        for p in 0..total {
            decode(p, shape, &mut idx);
            for a in 0..d {
                phi[a] = 2.0 * PI * idx[a] as f64 / shape[a] as f64;
            }
            values.push(f(&phi, 2.0 * PI * idx[d] as f64 / shape[d] as f64));
        }
        Self::new(shape.to_vec(), values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time_dims(&self) -> usize {
        self.shape.len() - 1
    }

    pub fn theta_size(&self) -> usize {
        *self.shape.last().unwrap()
    }

    pub fn coeffs(&self) -> Coeffs {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut buf, &self.shape, false);
        let scale = 1.0 / self.values.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        Coeffs {
            shape: self.shape.clone(),
            data: buf,
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Normalized L² inner product (grid average of the product).
    pub fn inner(&self, other: &PeriodicField) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() / self.values.len() as f64)
    }

    pub fn same_grid(&self, other: &PeriodicField) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::invalid(format!(
                "grid mismatch {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &PeriodicField, f: impl Fn(f64, f64) -> f64) -> Result<PeriodicField> {
        self.same_grid(other)?;
        Ok(PeriodicField {
            shape: self.shape.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> PeriodicField {
        self.map(|v| c * v)
    }

    fn with_coeffs(&self, f: impl FnMut(&[i64], i64, bool, Complex64) -> Complex64) -> PeriodicField {
        let c = self.coeffs().map_modes(f);
        let mut buf = c.data;
        fft_nd(&mut buf, &self.shape, true);
        PeriodicField {
            shape: self.shape.clone(),
            values: buf.iter().map(|z| z.re).collect(),
        }
    }

    /// ∂_θ, row by row in φ (the θ Nyquist mode is dropped, φ Nyquist slots are kept).
    pub fn derivative_theta(&self) -> PeriodicField {
        let m = self.theta_size() as i64;
        self.with_coeffs(|_, j, _, c| if 2 * j.abs() == m { Complex64::default() } else { c * Complex64::new(0.0, j as f64) })
    }

    /// ∂_{φ_axis}.
    pub fn derivative_phi(&self, axis: usize) -> Result<PeriodicField> {
        if axis >= self.time_dims() {
            return Err(Error::invalid(format!("no time axis {axis}")));
        }
        Ok(self.with_coeffs(|l, _, ny, c| if ny { Complex64::default() } else { c * Complex64::new(0.0, l[axis] as f64) }))
    }

    /// ω·∂_φ.
    pub fn directional_phi(&self, omega: &[f64]) -> Result<PeriodicField> {
        if omega.len() != self.time_dims() {
            return Err(Error::invalid("frequency vector length differs from time dimensions"));
        }
        Ok(self.with_coeffs(|l, _, ny, c| {
            if ny {
                return Complex64::default();
            }
            let w: f64 = l.iter().zip(omega).map(|(&a, &o)| a as f64 * o).sum();
            c * Complex64::new(0.0, w)
        }))
    }

    /// θ-mean of the field, for every φ (largest |coefficient| with j = 0).
    fn theta_mean_size(&self) -> f64 {
        self.coeffs()
            .modes()
            .iter()
            .zip(self.coeffs().data())
            .filter(|((_, j, _), _)| *j == 0)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    fn require_zero_mean(&self, what: &str) -> Result<()> {
        let tol = 1e-12 * self.linf().max(1.0);
        let m = self.theta_mean_size();
        if m > tol {
            return Err(Error::invalid(format!("{what} needs a zero-mean field (mean {m:.3e})")));
        }
        Ok(())
    }

    /// ∂_θ^{-1}: Σ ρ_j/(ij) e^{ijθ}, zero mean.
    pub fn antiderivative(&self) -> Result<PeriodicField> {
        self.require_zero_mean("antiderivative")?;
        Ok(self.with_coeffs(|_, j, ny, c| {
            if j == 0 || ny {
                Complex64::default()
            } else {
                c / Complex64::new(0.0, j as f64)
            }
        }))
    }

    /// Largest ⟨l,j⟩ strictly inside the truncation.
    pub fn max_bracket(&self) -> i64 {
        let d = self.time_dims();
        let time: i64 = self.shape[..d].iter().map(|&n| n as i64 / 2 - 1).sum();
        time.max(self.theta_size() as i64 / 2 - 1).max(1)
    }

    /// Π_N: zero every coefficient with ⟨l,j⟩ > N (and the Nyquist slots).
    pub fn project(&self, n: i64) -> Result<PeriodicField> {
        if n < 1 || n > self.max_bracket() {
            return Err(Error::invalid(format!(
                "cutoff {n} outside [1, {}] for this grid",
                self.max_bracket()
            )));
        }
        Ok(self.with_coeffs(|l, j, ny, c| if ny || bracket(l, j) > n { Complex64::default() } else { c }))
    }

    /// Π_N^⊥ = Id − Π_N.
    pub fn project_complement(&self, n: i64) -> Result<PeriodicField> {
        Ok(self - &self.project(n)?)
    }

    /// (Σ ⟨l,j⟩^{2s}|ρ_{l,j}|²)^{1/2}.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.coeffs().sobolev_norm(s)
    }

    /// Keep |j| ≤ frac·M/2 and |l_i| ≤ frac·n_i/2 (frac = 2/3 gives the usual rule).
    pub fn dealias(&self, frac: f64) -> PeriodicField {
        let d = self.time_dims();
        let cuts: Vec<f64> = self.shape.iter().map(|&n| frac * n as f64 / 2.0).collect();
        self.with_coeffs(|l, j, ny, c| {
            let keep = !ny && (j.abs() as f64) <= cuts[d] && l.iter().enumerate().all(|(a, &k)| (k.abs() as f64) <= cuts[a]);
            if keep {
                c
            } else {
                Complex64::default()
            }
        })
    }

    /// 𝒮₂: ρ ↦ ρ(−φ, −θ).
    pub fn reflect(&self) -> PeriodicField {
        let mut idx = vec![0usize; self.shape.len()];
        let mut values = vec![0.0; self.values.len()];
        for (p, v) in values.iter_mut().enumerate() {
            decode(p, &self.shape, &mut idx);
            let mut q = 0usize;
            for (axis, &n) in self.shape.iter().enumerate() {
                q = q * n + (n - idx[axis]) % n;
            }
            *v = self.values[q];
        }
        PeriodicField {
            shape: self.shape.clone(),
            values,
        }
    }

    /// Values at (φ_a, y_p) where y_p = points[p] replaces the θ node of sample p.
    /// Exact trigonometric interpolation along θ.
    pub fn eval_theta_at(&self, points: &[f64]) -> Result<Vec<f64>> {
        if points.len() != self.values.len() {
            return Err(Error::invalid("one evaluation point per sample required"));
        }
        let m = self.theta_size();
        let plan = super::fft::Plan1d::new(m);
        let half = m / 2;
        let mut out = vec![0.0; points.len()];
        for (row, chunk) in self.values.chunks(m).enumerate() {
            let c = plan.coeffs(chunk);
            for k in 0..m {
                let p = row * m + k;
                let y = points[p];
                let mut acc = c[0].re;
                for j in 1..half {
                    let e = Complex64::from_polar(1.0, j as f64 * y);
                    acc += 2.0 * (c[j] * e).re;
                }
                // Nyquist mode as a real cosine
                acc += c[half].re * (half as f64 * y).cos();
                out[p] = acc;
            }
        }
        Ok(out)
    }

    /// Single θ-only evaluation at an arbitrary angle.
    pub fn eval_theta(&self, y: f64) -> Result<f64> {
        if self.time_dims() != 0 {
            return Err(Error::invalid("eval_theta needs a θ-only field"));
        }
        let m = self.theta_size();
        Ok(self.eval_theta_at(&vec![y; m])?[0])
    }
}

/// 𝒲(r,h) = ∫ ∂_θ^{-1}r · h dθ (normalized measure).
pub fn symplectic_pairing(r: &PeriodicField, h: &PeriodicField) -> Result<f64> {
    r.same_grid(h)?;
    h.require_zero_mean("symplectic pairing")?;
    r.antiderivative()?.inner(h)
}

impl Add for &PeriodicField {
    type Output = PeriodicField;
    fn add(self, rhs: &PeriodicField) -> PeriodicField {
        self.zip_with(rhs, |a, b| a + b).expect("grid mismatch in field addition")
    }
}

impl Sub for &PeriodicField {
    type Output = PeriodicField;
    fn sub(self, rhs: &PeriodicField) -> PeriodicField {
        self.zip_with(rhs, |a, b| a - b).expect("grid mismatch in field subtraction")
    }
}

impl Mul for &PeriodicField {
    type Output = PeriodicField;
    fn mul(self, rhs: &PeriodicField) -> PeriodicField {
        self.zip_with(rhs, |a, b| a * b).expect("grid mismatch in field product")
    }
}

impl Neg for &PeriodicField {
    type Output = PeriodicField;
    fn neg(self) -> PeriodicField {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cos_mode(m: usize, j: i64) -> PeriodicField {
        PeriodicField::from_fn_theta(m, |t| (j as f64 * t).cos()).unwrap()
    }

    fn random_field(rng: &mut ChaCha8Rng, shape: &[usize], top: i64) -> PeriodicField {
        let mut c = Coeffs::zeros(shape).unwrap();
        for (l, j, ny) in c.modes() {
            if ny || bracket(&l, j) > top {
                continue;
            }
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / bracket(&l, j) as f64;
            let nl: Vec<i64> = l.iter().map(|x| -x).collect();
            if c.get(&nl, -j) == Complex64::default() {
                c.set(&l, j, z).unwrap();
                c.set(&nl, -j, z.conj()).unwrap();
            }
        }
        let p = c.position(&vec![0; shape.len() - 1], 0).unwrap();
        c.data[p] = Complex64::new(c.data[p].re, 0.0);
        c.to_field().unwrap()
    }

    #[test]
    fn theta_derivative_keeps_phi_nyquist() {
        let f = PeriodicField::from_fn(&[8, 16], |p, t| (4.0 * p[0]).cos() * t.sin()).unwrap();
        let exact = PeriodicField::from_fn(&[8, 16], |p, t| (4.0 * p[0]).cos() * t.cos()).unwrap();
        assert!((&f.derivative_theta() - &exact).linf() < 1e-14);
        let ny = PeriodicField::from_fn_theta(16, |t| (8.0 * t).cos()).unwrap();
        assert_eq!(ny.derivative_theta().linf(), 0.0);
    }

    #[test]
    fn projection_keeps_and_drops_modes() {
        let f = cos_mode(32, 3);
        let p = f.project(5).unwrap();
        assert!((&p - &f).linf() < 1e-14);
        let g = cos_mode(32, 7);
        assert!(g.project(5).unwrap().linf() < 1e-14);
        assert!(matches!(g.project(16), Err(Error::InvalidArgument(_))));
        let comp = g.project_complement(5).unwrap();
        assert!((&comp - &g).linf() < 1e-14);
    }

    #[test]
    fn sobolev_norm_of_constants_and_modes() {
        let c = PeriodicField::constant(&[16], -2.5).unwrap();
        for s in [0.0, 1.0, 3.5] {
            assert!((c.sobolev_norm(s) - 2.5).abs() < 1e-14);
        }
        // cos jθ = (e_j + e_{-j})/2, so the norm is |j|^s/√2
        let f = cos_mode(32, 4);
        assert!((f.sobolev_norm(2.0) - 16.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_rules() {
        let m = 64;
        let s3 = PeriodicField::from_fn_theta(m, |t| (3.0 * t).sin()).unwrap();
        let expect = PeriodicField::from_fn_theta(m, |t| -(3.0 * t).cos() / 3.0).unwrap();
        assert!((&s3.antiderivative().unwrap() - &expect).linf() < 1e-14);
        let c1 = cos_mode(m, 1);
        let s1 = PeriodicField::from_fn_theta(m, f64::sin).unwrap();
        assert!((&c1.antiderivative().unwrap() - &s1).linf() < 1e-14);
        let offset = c1.map(|v| v + 1.0);
        assert!(matches!(offset.antiderivative(), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn pairing_of_cos_and_sin() {
        // ∂^{-1}cos jθ = sin jθ / j, so the pairing is mean(sin² jθ)/j with the sign of the rule
        for j in 1..6 {
            let c = cos_mode(64, j);
            let s = PeriodicField::from_fn_theta(64, |t| (j as f64 * t).sin()).unwrap();
            let w = symplectic_pairing(&c, &s).unwrap();
            let expected = 1.0 / (2.0 * j as f64);
            // oracle: direct quadrature of (sin jθ / j)·sin jθ
            let direct = s.inner(&s).unwrap() / j as f64;
            assert!((direct - expected).abs() < 1e-14);
            assert!((w - direct).abs() < 1e-14, "j={j}: {w}");
            let w_rev = symplectic_pairing(&s, &c).unwrap();
            assert!((w_rev + expected).abs() < 1e-14);
        }
    }

    #[test]
    fn reflection_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_field(&mut rng, &[8, 16], 6);
        assert_eq!(f.reflect().reflect(), f);
        let g = PeriodicField::from_fn(&[8, 16], |p, t| (p[0] + 2.0 * t).cos()).unwrap();
        assert!((&g.reflect() - &g).linf() < 1e-14);
    }

    #[test]
    fn off_grid_evaluation_matches_closed_form() {
        let f = PeriodicField::from_fn(&[8, 32], |p, t| (p[0] - 3.0 * t).sin() + 0.5 * (2.0 * t).cos()).unwrap();
        let pts: Vec<f64> = (0..f.values().len()).map(|p| 0.37 * p as f64).collect();
        let vals = f.eval_theta_at(&pts).unwrap();
        for (p, v) in vals.iter().enumerate() {
            let phi = 2.0 * PI * (p / 32) as f64 / 8.0;
            let y = pts[p];
            let exact = (phi - 3.0 * y).sin() + 0.5 * (2.0 * y).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn hermitian_check_rejects_complex_fields() {
        let mut c = Coeffs::zeros(&[16]).unwrap();
        c.set(&[], 2, Complex64::new(1.0, 0.0)).unwrap();
        assert!(c.to_field().is_err());
        c.set(&[], -2, Complex64::new(1.0, 0.0)).unwrap();
        assert!(c.to_field().is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip_and_parseval(seed in 0u64..10_000, d in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shape: Vec<usize> = match d { 0 => vec![64], 1 => vec![16, 32], _ => vec![8, 8, 16] };
            let values: Vec<f64> = (0..shape.iter().product::<usize>()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = PeriodicField::new(shape.clone(), values).unwrap();
            let c = f.coeffs();
            prop_assert!(c.hermitian_defect() < 1e-14);
            let back = c.to_field().unwrap();
            prop_assert!((&back - &f).linf() < 1e-13 * f.linf());
            let energy: f64 = c.data().iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((energy - f.inner(&f).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn projector_smoothing_bound(seed in 0u64..10_000, n in 1i64..15, s in 0.0f64..3.0, t in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_field(&mut rng, &[8, 32], 20);
            let p = f.project(n).unwrap();
            prop_assert!(p.sobolev_norm(s + t) <= (n as f64).powf(t) * f.sobolev_norm(s) * (1.0 + 1e-12));
        }

        #[test]
        fn interpolation_inequality(seed in 0u64..10_000, s1 in 0.0f64..2.0, s2 in 2.0f64..5.0, th in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_field(&mut rng, &[64], 25);
            let s3 = th * s1 + (1.0 - th) * s2;
            // Hölder gives the inequality with constant 1
            let rhs = f.sobolev_norm(s1).powf(th) * f.sobolev_norm(s2).powf(1.0 - th);
            prop_assert!(f.sobolev_norm(s3) <= rhs * (1.0 + 1e-12));
        }

        #[test]
        fn antiderivative_inverts_derivative(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_field(&mut rng, &[8, 32], 12);
            let zm = f.with_coeffs(|_, j, _, c| if j == 0 { Complex64::default() } else { c });
            let back = zm.antiderivative().unwrap().derivative_theta();
            prop_assert!((&back - &zm).linf() < 1e-13 * zm.linf().max(1.0));
        }

        #[test]
        fn pairing_is_antisymmetric(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_field(&mut rng, &[64], 20);
            let b = random_field(&mut rng, &[64], 20);
            let a = &a - &PeriodicField::constant(&[64], a.mean()).unwrap();
            let b = &b - &PeriodicField::constant(&[64], b.mean()).unwrap();
            let w1 = symplectic_pairing(&a, &b).unwrap();
            let w2 = symplectic_pairing(&b, &a).unwrap();
            prop_assert!((w1 + w2).abs() < 1e-14);
            prop_assert!(symplectic_pairing(&a, &a).unwrap().abs() < 1e-15);
        }
    }
}
