use super::field::{bracket, Coeffs, PeriodicField};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

type C = Complex64;

/// Number of points in the box [−k, k]^d.
pub fn box_len(d: usize, k: i64) -> usize {
    ((2 * k + 1) as usize).pow(d as u32)
}

/// Row-major index of `l` in the box [−k, k]^d.
pub fn box_index(l: &[i64], k: i64) -> Option<usize> {
    let mut idx = 0usize;
    for &x in l {
        if x.abs() > k {
            return None;
        }
        idx = idx * (2 * k + 1) as usize + (x + k) as usize;
    }
    Some(idx)
}

pub fn box_point(mut idx: usize, d: usize, k: i64) -> Vec<i64> {
    let w = (2 * k + 1) as usize;
    let mut out = vec![0i64; d];
    for a in (0..d).rev() {
        out[a] = (idx % w) as i64 - k;
        idx /= w;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    /// blocks[k] is the space matrix T(k)_{j,j₀}, k in the box [−window, window]^d
    Toeplitz { window: i64, blocks: Vec<DMatrix<C>> },
    /// Full matrix over the lattice box(time_cut) × modes, time index major.
    Dense { time_cut: i64, matrix: DMatrix<C> },
}

/// Truncated matrix T^{l,j}_{l₀,j₀} of a linear operator on fields over 𝕋^d × 𝕋.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperatorMatrix {
    time_dims: usize,
    modes: Vec<i64>,
    repr: Repr,
}

/// Space modes ±1..±n in increasing order (zero mean).
pub fn symmetric_modes(n: i64) -> Vec<i64> {
    (-n..=n).filter(|&j| j != 0).collect()
}

impl LinearOperatorMatrix {
    fn check_modes(modes: &[i64]) -> Result<()> {
        if modes.is_empty() {
            return Err(Error::invalid("operator needs at least one space mode"));
        }
        if modes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("space modes must be strictly increasing"));
        }
        Ok(())
    }

    pub fn toeplitz_zeros(time_dims: usize, modes: Vec<i64>, window: i64) -> Result<Self> {
        Self::check_modes(&modes)?;
        if window < 0 {
            return Err(Error::invalid("negative symbol window"));
        }
        let n = modes.len();
        Ok(LinearOperatorMatrix {
            time_dims,
            repr: Repr::Toeplitz {
                window,
                blocks: vec![DMatrix::zeros(n, n); box_len(time_dims, window)],
            },
            modes,
        })
    }

    pub fn identity(time_dims: usize, modes: Vec<i64>) -> Result<Self> {
        let n = modes.len();
        Self::multiplier(time_dims, modes, &vec![C::new(1.0, 0.0); n])
    }

    /// Fourier multiplier e_{l,j} ↦ a_j e_{l,j}.
    pub fn multiplier(time_dims: usize, modes: Vec<i64>, diag: &[C]) -> Result<Self> {
        if diag.len() != modes.len() {
            return Err(Error::invalid("one multiplier value per mode required"));
        }
        let mut op = Self::toeplitz_zeros(time_dims, modes, 0)?;
        if let Repr::Toeplitz { blocks, .. } = &mut op.repr {
            blocks[0] = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag));
        }
        Ok(op)
    }

    /// θ-only (or time-independent) operator given by one space matrix.
    pub fn from_space_matrix(time_dims: usize, modes: Vec<i64>, m: DMatrix<C>) -> Result<Self> {
        if m.nrows() != modes.len() || m.ncols() != modes.len() {
            return Err(Error::invalid("space matrix size differs from mode count"));
        }
        let mut op = Self::toeplitz_zeros(time_dims, modes, 0)?;
        if let Repr::Toeplitz { blocks, .. } = &mut op.repr {
            blocks[0] = m;
        }
        Ok(op)
    }

    pub fn dense(time_dims: usize, modes: Vec<i64>, time_cut: i64, matrix: DMatrix<C>) -> Result<Self> {
        Self::check_modes(&modes)?;
        let n = box_len(time_dims, time_cut) * modes.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::invalid(format!("dense matrix must be {n}×{n}")));
        }
        Ok(LinearOperatorMatrix {
            time_dims,
            modes,
            repr: Repr::Dense { time_cut, matrix },
        })
    }

    pub fn time_dims(&self) -> usize {
        self.time_dims
    }

    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    /// Largest |j| among the space modes.
    pub fn truncation(&self) -> i64 {
        self.modes.iter().map(|j| j.abs()).max().unwrap_or(0)
    }

    pub fn is_toeplitz(&self) -> bool {
        matches!(self.repr, Repr::Toeplitz { .. })
    }

    /// Symbol window (Toeplitz) or time cut (dense).
    pub fn window(&self) -> i64 {
        match &self.repr {
            Repr::Toeplitz { window, .. } => *window,
            Repr::Dense { time_cut, .. } => *time_cut,
        }
    }

    pub fn mode_index(&self, j: i64) -> Option<usize> {
        self.modes.binary_search(&j).ok()
    }

    /// Space block T(k), Toeplitz only.
    pub fn block(&self, k: &[i64]) -> Option<&DMatrix<C>> {
        match &self.repr {
            Repr::Toeplitz { window, blocks } => box_index(k, *window).map(|i| &blocks[i]),
            Repr::Dense { .. } => None,
        }
    }

    /// Symbol entry T_j^{j₀}(k); zero outside the stored window.
    pub fn symbol(&self, k: &[i64], j: i64, j0: i64) -> C {
        match (self.block(k), self.mode_index(j), self.mode_index(j0)) {
            (Some(b), Some(a), Some(c)) => b[(a, c)],
            _ => C::default(),
        }
    }

    pub fn set_symbol(&mut self, k: &[i64], j: i64, j0: i64, v: C) -> Result<()> {
        let (a, c) = match (self.mode_index(j), self.mode_index(j0)) {
            (Some(a), Some(c)) => (a, c),
            _ => return Err(Error::invalid(format!("mode ({j},{j0}) not in operator"))),
        };
        match &mut self.repr {
            Repr::Toeplitz { window, blocks } => {
                let i = box_index(k, *window)
                    .ok_or_else(|| Error::invalid(format!("offset {k:?} outside window {window}")))?;
                blocks[i][(a, c)] = v;
                Ok(())
            }
            Repr::Dense { .. } => Err(Error::invalid("set_symbol needs a Toeplitz operator")),
        }
    }

    /// Full entry T^{l,j}_{l₀,j₀}.
    pub fn entry(&self, l: &[i64], j: i64, l0: &[i64], j0: i64) -> C {
        match &self.repr {
            Repr::Toeplitz { .. } => {
                let k: Vec<i64> = l.iter().zip(l0).map(|(a, b)| a - b).collect();
                self.symbol(&k, j, j0)
            }
            Repr::Dense { time_cut, matrix } => {
                let n = self.modes.len();
                match (
                    box_index(l, *time_cut),
                    box_index(l0, *time_cut),
                    self.mode_index(j),
                    self.mode_index(j0),
                ) {
                    (Some(r), Some(c), Some(a), Some(b)) => matrix[(r * n + a, c * n + b)],
                    _ => C::default(),
                }
            }
        }
    }

    /// Restriction to the lattice box(time_cut) × modes as one dense matrix.
    pub fn to_dense(&self, time_cut: i64) -> LinearOperatorMatrix {
        let d = self.time_dims;
        let nb = box_len(d, time_cut);
        let n = self.modes.len();
        let mut m = DMatrix::zeros(nb * n, nb * n);
        for r in 0..nb {
            let l = box_point(r, d, time_cut);
            for c in 0..nb {
                let l0 = box_point(c, d, time_cut);
                for (a, &j) in self.modes.iter().enumerate() {
                    for (b, &j0) in self.modes.iter().enumerate() {
                        m[(r * n + a, c * n + b)] = self.entry(&l, j, &l0, j0);
                    }
                }
            }
        }
        LinearOperatorMatrix {
            time_dims: d,
            modes: self.modes.clone(),
            repr: Repr::Dense { time_cut, matrix: m },
        }
    }

    pub fn dense_matrix(&self) -> Option<&DMatrix<C>> {
        match &self.repr {
            Repr::Dense { matrix, .. } => Some(matrix),
            Repr::Toeplitz { .. } => None,
        }
    }

    /// Iterate (k, j, j₀, value) over stored Toeplitz symbols.
    pub fn symbols(&self) -> Vec<(Vec<i64>, i64, i64, C)> {
        let mut out = Vec::new();
        if let Repr::Toeplitz { window, blocks } = &self.repr {
            for (i, b) in blocks.iter().enumerate() {
                let k = box_point(i, self.time_dims, *window);
                for (a, &j) in self.modes.iter().enumerate() {
                    for (c, &j0) in self.modes.iter().enumerate() {
                        out.push((k.clone(), j, j0, b[(a, c)]));
                    }
                }
            }
        }
        out
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.time_dims != other.time_dims || self.modes != other.modes {
            return Err(Error::invalid("operators live on different lattices"));
        }
        Ok(())
    }

    fn map_symbols(&self, f: impl Fn(&[i64], i64, i64, C) -> C) -> LinearOperatorMatrix {
        let mut out = self.clone();
        match &mut out.repr {
            Repr::Toeplitz { window, blocks } => {
                for (i, b) in blocks.iter_mut().enumerate() {
                    let k = box_point(i, self.time_dims, *window);
                    for (a, &j) in self.modes.iter().enumerate() {
                        for (c, &j0) in self.modes.iter().enumerate() {
                            b[(a, c)] = f(&k, j, j0, b[(a, c)]);
                        }
                    }
                }
            }
            Repr::Dense { .. } => {}
        }
        out
    }

    fn with_window(&self, w: i64) -> LinearOperatorMatrix {
        let Repr::Toeplitz { window, blocks } = &self.repr else {
            return self.clone();
        };
        let d = self.time_dims;
        let n = self.modes.len();
        let mut nb = vec![DMatrix::zeros(n, n); box_len(d, w)];
        for (i, b) in blocks.iter().enumerate() {
            let k = box_point(i, d, *window);
            if let Some(t) = box_index(&k, w) {
                nb[t] = b.clone();
            }
        }
        LinearOperatorMatrix {
            time_dims: d,
            modes: self.modes.clone(),
            repr: Repr::Toeplitz { window: w, blocks: nb },
        }
    }

    fn combine(&self, other: &Self, f: impl Fn(&DMatrix<C>, &DMatrix<C>) -> DMatrix<C>) -> Result<Self> {
        self.compatible(other)?;
        match (&self.repr, &other.repr) {
            (Repr::Toeplitz { window: w1, .. }, Repr::Toeplitz { window: w2, .. }) => {
                let w = (*w1).max(*w2);
                let (a, b) = (self.with_window(w), other.with_window(w));
                let (Repr::Toeplitz { blocks: ba, .. }, Repr::Toeplitz { blocks: bb, .. }) = (&a.repr, &b.repr) else {
                    unreachable!()
                };
                let blocks = ba.iter().zip(bb).map(|(x, y)| f(x, y)).collect();
                Ok(LinearOperatorMatrix {
                    time_dims: self.time_dims,
                    modes: self.modes.clone(),
                    repr: Repr::Toeplitz { window: w, blocks },
                })
            }
            _ => {
                let cut = self.window().max(other.window());
                let a = self.to_dense(cut);
                let b = other.to_dense(cut);
                let m = f(a.dense_matrix().unwrap(), b.dense_matrix().unwrap());
                Self::dense(self.time_dims, self.modes.clone(), cut, m)
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    pub fn scale(&self, c: C) -> Self {
        let mut out = self.clone();
        match &mut out.repr {
            Repr::Toeplitz { blocks, .. } => blocks.iter_mut().for_each(|b| *b *= c),
            Repr::Dense { matrix, .. } => *matrix *= c,
        }
        out
    }

    /// Product self∘other. Toeplitz symbols convolve in k; `cap` bounds the result window.
    pub fn compose_capped(&self, other: &Self, cap: Option<i64>) -> Result<Self> {
        self.compatible(other)?;
        match (&self.repr, &other.repr) {
            (Repr::Toeplitz { window: w1, blocks: b1 }, Repr::Toeplitz { window: w2, blocks: b2 }) => {
                let d = self.time_dims;
                let w = cap.map_or(w1 + w2, |c| c.min(w1 + w2));
                let n = self.modes.len();
                let mut blocks = vec![DMatrix::<C>::zeros(n, n); box_len(d, w)];
                for (i1, a) in b1.iter().enumerate() {
                    if a.iter().all(|z| *z == C::default()) {
                        continue;
                    }
                    let k1 = box_point(i1, d, *w1);
                    for (i2, b) in b2.iter().enumerate() {
                        if b.iter().all(|z| *z == C::default()) {
                            continue;
                        }
                        let k2 = box_point(i2, d, *w2);
                        let k: Vec<i64> = k1.iter().zip(&k2).map(|(x, y)| x + y).collect();
                        if let Some(t) = box_index(&k, w) {
                            blocks[t] += a * b;
                        }
                    }
                }
                Ok(LinearOperatorMatrix {
                    time_dims: d,
                    modes: self.modes.clone(),
                    repr: Repr::Toeplitz { window: w, blocks },
                })
            }
            _ => {
                let cut = self.window().max(other.window());
                let a = self.to_dense(cut);
                let b = other.to_dense(cut);
                Self::dense(
                    self.time_dims,
                    self.modes.clone(),
                    cut,
                    a.dense_matrix().unwrap() * b.dense_matrix().unwrap(),
                )
            }
        }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.compose_capped(other, None)
    }

    /// Matrix-vector product in coefficient space. Input modes outside the
    /// operator's space modes are treated as zero; the output keeps only the
    /// operator's space modes and the field's time truncation.
    pub fn apply_coeffs(&self, input: &Coeffs) -> Result<Coeffs> {
        let d = self.time_dims;
        if input.time_dims() != d {
            return Err(Error::invalid("field and operator have different time dimensions"));
        }
        let m = *input.shape().last().unwrap() as i64;
        if 2 * self.truncation() >= m {
            return Err(Error::invalid(format!(
                "operator modes up to {} exceed the field θ truncation ({})",
                self.truncation(),
                m / 2 - 1
            )));
        }
        let mut out = Coeffs::zeros(input.shape())?;
        let sites: Vec<(Vec<i64>, i64, bool)> = input.modes();
        let in_sites: Vec<(usize, &Vec<i64>, i64)> = sites
            .iter()
            .enumerate()
            .filter(|(p, (_, j, ny))| !*ny && self.mode_index(*j).is_some() && input.data()[*p] != C::default())
            .map(|(p, (l, j, _))| (p, l, *j))
            .collect();
        for (l, j, ny) in &sites {
            if *ny || self.mode_index(*j).is_none() {
                continue;
            }
            let mut acc = C::default();
            for (p, l0, j0) in &in_sites {
                acc += self.entry(l, *j, l0, *j0) * input.data()[*p];
            }
            out.set(l, *j, acc)?;
        }
        Ok(out)
    }

    /// Action on a real field; the result must be real (real operators).
    pub fn apply(&self, field: &PeriodicField) -> Result<PeriodicField> {
        self.apply_coeffs(&field.coeffs())?.to_field()
    }

    /// (Σ_{(k,m)} ⟨k,m⟩^{2s} sup_{j−j₀=m}|T_j^{j₀}(k)|²)^{1/2}.
    pub fn offdiag_norm(&self, s: f64) -> Result<f64> {
        let Repr::Toeplitz { window, blocks } = &self.repr else {
            return Err(Error::invalid("off-diagonal norm needs a Toeplitz-in-time operator"));
        };
        let d = self.time_dims;
        let span = self.modes.last().unwrap() - self.modes.first().unwrap();
        let mut total = 0.0;
        for (i, b) in blocks.iter().enumerate() {
            let k = box_point(i, d, *window);
            let mut sup = vec![0.0f64; (2 * span + 1) as usize];
            for (a, &j) in self.modes.iter().enumerate() {
                for (c, &j0) in self.modes.iter().enumerate() {
                    let slot = (j - j0 + span) as usize;
                    sup[slot] = sup[slot].max(b[(a, c)].norm());
                }
            }
            for (slot, v) in sup.iter().enumerate() {
                if *v > 0.0 {
                    let mdiff = slot as i64 - span;
                    total += (bracket(&k, mdiff) as f64).powf(2.0 * s) * v * v;
                }
            }
        }
        Ok(total.sqrt())
    }

    fn sign_law(&self, tol: f64, law: impl Fn(C, C) -> f64) -> bool {
        if self.modes.iter().any(|&j| self.mode_index(-j).is_none()) {
            return false;
        }
        match &self.repr {
            Repr::Toeplitz { .. } => self.symbols().iter().all(|(k, j, j0, v)| {
                let nk: Vec<i64> = k.iter().map(|x| -x).collect();
                law(*v, self.symbol(&nk, -j, -j0)) <= tol
            }),
            Repr::Dense { time_cut, .. } => {
                let d = self.time_dims;
                let nb = box_len(d, *time_cut);
                (0..nb).all(|r| {
                    let l = box_point(r, d, *time_cut);
                    let nl: Vec<i64> = l.iter().map(|x| -x).collect();
                    (0..nb).all(|c| {
                        let l0 = box_point(c, d, *time_cut);
                        let nl0: Vec<i64> = l0.iter().map(|x| -x).collect();
                        self.modes.iter().all(|&j| {
                            self.modes.iter().all(|&j0| {
                                law(self.entry(&l, j, &l0, j0), self.entry(&nl, -j, &nl0, -j0)) <= tol
                            })
                        })
                    })
                })
            }
        }
    }

    /// T^{−l,−j}_{−l₀,−j₀} = conj T^{l,j}_{l₀,j₀}.
    pub fn is_real(&self, tol: f64) -> bool {
        self.sign_law(tol, |v, m| (m - v.conj()).norm())
    }

    /// T^{−l,−j}_{−l₀,−j₀} = −T^{l,j}_{l₀,j₀}.
    pub fn is_reversible(&self, tol: f64) -> bool {
        self.sign_law(tol, |v, m| (m + v).norm())
    }

    /// T^{−l,−j}_{−l₀,−j₀} = T^{l,j}_{l₀,j₀}.
    pub fn is_reversibility_preserving(&self, tol: f64) -> bool {
        self.sign_law(tol, |v, m| (m - v).norm())
    }

    /// ⌊T⌋: the k = 0, j = j₀ symbols.
    pub fn diagonal_part(&self) -> Result<Self> {
        if !self.is_toeplitz() {
            return Err(Error::invalid("diagonal part needs a Toeplitz operator"));
        }
        Ok(self.map_symbols(|k, j, j0, v| if j == j0 && k.iter().all(|&x| x == 0) { v } else { C::default() }))
    }

    /// P_N: keep symbols with ⟨k, j−j₀⟩ ≤ N.
    pub fn project_bracket(&self, n: i64) -> Result<Self> {
        if !self.is_toeplitz() {
            return Err(Error::invalid("band projection needs a Toeplitz operator"));
        }
        Ok(self.map_symbols(|k, j, j0, v| if bracket(k, j - j0) <= n { v } else { C::default() }))
    }

    /// Diagonal values T_j^j(0) in mode order.
    pub fn diagonal(&self) -> Vec<C> {
        self.modes
            .iter()
            .map(|&j| self.entry(&vec![0; self.time_dims], j, &vec![0; self.time_dims], j))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        match &self.repr {
            Repr::Toeplitz { blocks, .. } => blocks.iter().flat_map(|b| b.iter()).fold(0.0, |m, z| m.max(z.norm())),
            Repr::Dense { matrix, .. } => matrix.iter().fold(0.0, |m, z| m.max(z.norm())),
        }
    }

    /// Largest |entry| off the main diagonal of the lattice.
    pub fn max_offdiag_abs(&self) -> f64 {
        let dense = self.to_dense(if self.is_toeplitz() { 0 } else { self.window() });
        let m = dense.dense_matrix().unwrap();
        let mut worst = 0.0f64;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if r != c {
                    worst = worst.max(m[(r, c)].norm());
                }
            }
        }
        worst
    }

    /// Eigenvalues of the lattice restriction box(time_cut) × modes.
    pub fn eigenvalues(&self, time_cut: i64) -> Result<Vec<C>> {
        let dense = self.to_dense(time_cut);
        let m = dense.dense_matrix().unwrap().clone();
        let ev = m
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::invariant("eigenvalues", "Schur decomposition did not converge"))?;
        let mut out: Vec<C> = ev.iter().cloned().collect();
        out.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap().then(a.re.partial_cmp(&b.re).unwrap()));
        Ok(out)
    }
}
