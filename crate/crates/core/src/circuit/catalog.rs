//! The fixed gate catalog and its unitaries.
//!
//! Matrix convention: bit `j` of a row/column index is the state of the
//! gate's `j`-th operand. For controlled gates the controls come first, so
//! `cx q[0],q[1]` flips operand 1 when operand 0 is set.

use num_complex::Complex;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateSpec {
    pub name: &'static str,
    pub qubit_arity: usize,
    pub param_arity: usize,
    /// Leading operands acting as controls. Part of the replacement-pool key.
    pub controls: usize,
}

const fn spec(name: &'static str, qubit_arity: usize, param_arity: usize, controls: usize) -> GateSpec {
    GateSpec {
        name,
        qubit_arity,
        param_arity,
        controls,
    }
}

pub const CATALOG: &[GateSpec] = &[
    spec("id", 1, 0, 0),
    spec("x", 1, 0, 0),
    spec("y", 1, 0, 0),
    spec("z", 1, 0, 0),
    spec("h", 1, 0, 0),
    spec("s", 1, 0, 0),
    spec("sdg", 1, 0, 0),
    spec("t", 1, 0, 0),
    spec("tdg", 1, 0, 0),
    spec("rx", 1, 1, 0),
    spec("ry", 1, 1, 0),
    spec("rz", 1, 1, 0),
    spec("p", 1, 1, 0),
    spec("cx", 2, 0, 1),
    spec("cz", 2, 0, 1),
    spec("swap", 2, 0, 0),
    spec("ch", 2, 0, 1),
    spec("ccx", 3, 0, 2),
    spec("cswap", 3, 0, 1),
];

pub fn lookup(name: &str) -> Option<&'static GateSpec> {
    CATALOG.iter().find(|g| g.name == name)
}

/// Gates interchangeable with `name` under replacement: same qubit arity,
/// parameter arity and control count. Includes `name` itself.
pub fn replacement_pool(name: &str) -> Vec<&'static GateSpec> {
    match lookup(name) {
        Some(g) => CATALOG
            .iter()
            .filter(|o| o.qubit_arity == g.qubit_arity && o.param_arity == g.param_arity && o.controls == g.controls)
            .collect(),
        None => Vec::new(),
    }
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> GateMatrix<T> {
    pub fn from_rows(dim: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), dim * dim, "matrix data must be dim x dim");
        Self { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex::new(T::one(), T::zero());
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.dim + col]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                for c in 0..n {
                    data[r * n + c] = data[r * n + c] + a * other.get(k, c);
                }
            }
        }
        Self { dim: n, data }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = self.data.clone();
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.get(r, c).conj();
            }
        }
        Self { dim: n, data }
    }

    /// Max-norm distance of `U·U†` from the identity.
    pub fn unitarity_error(&self) -> T {
        let product = self.mul(&self.adjoint());
        let id = Self::identity(self.dim);
        product
            .data
            .iter()
            .zip(&id.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    /// Embeds `base` (acting on the targets) under `controls` leading control
    /// operands.
    fn controlled(base: &Self, controls: usize) -> Self {
        let dim = base.dim << controls;
        let ctrl_mask = (1 << controls) - 1;
        let mut out = Self::identity(dim);
        for r in 0..dim {
            for c in 0..dim {
                if r & ctrl_mask != c & ctrl_mask {
                    continue;
                }
                if r & ctrl_mask == ctrl_mask {
                    out.data[r * dim + c] = base.get(r >> controls, c >> controls);
                }
            }
        }
        out
    }
}

fn c<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

fn m2<T: Scalar>(a: Complex<T>, b: Complex<T>, cc: Complex<T>, d: Complex<T>) -> GateMatrix<T> {
    GateMatrix::from_rows(2, vec![a, b, cc, d])
}

fn diag<T: Scalar>(phase: T) -> GateMatrix<T> {
    let one = Complex::new(T::one(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    m2(one, zero, zero, Complex::from_polar(T::one(), phase))
}

fn swap_matrix<T: Scalar>() -> GateMatrix<T> {
    let mut m = GateMatrix::identity(4);
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    m.data[5] = zero;
    m.data[10] = zero;
    m.data[6] = one;
    m.data[9] = one;
    m
}

/// Unitary for a catalog gate, or `None` for an unknown name or a wrong
/// parameter count.
pub fn unitary<T: Scalar>(name: &str, params: &[T]) -> Option<GateMatrix<T>> {
    let spec = lookup(name)?;
    if params.len() != spec.param_arity {
        return None;
    }
    let half = |t: T| t / T::lit(2.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let m = match name {
        "id" => GateMatrix::identity(2),
        "x" => m2(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)),
        "y" => m2(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)),
        "z" => m2(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)),
        "h" => m2(c(r, 0.), c(r, 0.), c(r, 0.), c(-r, 0.)),
        "s" => diag(T::FRAC_PI_2()),
        "sdg" => diag(-T::FRAC_PI_2()),
        "t" => diag(T::FRAC_PI_4()),
        "tdg" => diag(-T::FRAC_PI_4()),
        "rx" => {
            let (s, co) = half(params[0]).sin_cos();
            m2(
                Complex::new(co, T::zero()),
                Complex::new(T::zero(), -s),
                Complex::new(T::zero(), -s),
                Complex::new(co, T::zero()),
            )
        }
        "ry" => {
            let (s, co) = half(params[0]).sin_cos();
            m2(
                Complex::new(co, T::zero()),
                Complex::new(-s, T::zero()),
                Complex::new(s, T::zero()),
                Complex::new(co, T::zero()),
            )
        }
        "rz" => {
            let zero = Complex::new(T::zero(), T::zero());
            let h = half(params[0]);
            m2(
                Complex::from_polar(T::one(), -h),
                zero,
                zero,
                Complex::from_polar(T::one(), h),
            )
        }
        "p" => diag(params[0]),
        "cx" => GateMatrix::controlled(&unitary("x", &[])?, 1),
        "cz" => GateMatrix::controlled(&unitary("z", &[])?, 1),
        "ch" => GateMatrix::controlled(&unitary("h", &[])?, 1),
        "swap" => swap_matrix(),
        "ccx" => GateMatrix::controlled(&unitary("x", &[])?, 2),
        "cswap" => GateMatrix::controlled(&swap_matrix(), 1),
        _ => return None,
    };
    Some(m)
}
