use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::PRUNE_TOL;
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

/// Tensor product of single-qubit Paulis stored as bit masks: qubit k
/// carries X when only `x` bit k is set, Z when only `z` bit k is set and
/// Y when both are set. The identity is `x = z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn new(x: u64, z: u64) -> Self {
        PauliString { x, z }
    }

    pub fn single(qubit: usize, letter: char) -> Result<Self> {
        if qubit >= 64 {
            return Err(Error::QubitCap { requested: qubit + 1, cap: 64 });
        }
        let b = 1u64 << qubit;
        match letter {
            'X' => Ok(PauliString::new(b, 0)),
            'Y' => Ok(PauliString::new(b, b)),
            'Z' => Ok(PauliString::new(0, b)),
            other => Err(Error::Parse {
                line: 0,
                message: format!("unknown Pauli letter '{other}'"),
            }),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Qubits acted on non-trivially.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    /// Highest qubit index touched plus one.
    pub fn width(&self) -> usize {
        64 - self.support().leading_zeros() as usize
    }

    pub fn letters(&self) -> Vec<(usize, char)> {
        let mut out = Vec::new();
        let mut s = self.support();
        while s != 0 {
            let q = s.trailing_zeros() as usize;
            let b = 1u64 << q;
            let c = match (self.x & b != 0, self.z & b != 0) {
                (true, false) => 'X',
                (true, true) => 'Y',
                _ => 'Z',
            };
            out.push((q, c));
            s &= s - 1;
        }
        out
    }

    /// Number of Y letters; sets the phase i^{ny} relating the string to X^x Z^z.
    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// P·Q = phase · R.
    pub fn multiply(&self, other: &PauliString) -> (Complex64, PauliString) {
        let r = PauliString::new(self.x ^ other.x, self.z ^ other.z);
        // σ(x,z) = i^{x·z} XˣZᶻ; moving Z^{z1} past X^{x2} gives (−1)^{z1·x2}.
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 4
            - r.y_count() % 4;
        (i_pow(k), r)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// P|b⟩ = phase·|b'⟩ for computational basis index `b`.
    #[inline]
    pub fn act(&self, b: usize) -> (usize, Complex64) {
        let sign = if (self.z & b as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        (b ^ self.x as usize, i_pow(self.y_count()) * sign)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, (q, c)) in self.letters().into_iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}{q}")?;
        }
        write!(f, "]")
    }
}

/// Weighted sum of Pauli strings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QubitOperator {
    terms: BTreeMap<PauliString, Complex64>,
}

impl QubitOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity(c: f64) -> Self {
        Self::from_term(PauliString::IDENTITY, Complex64::new(c, 0.0))
    }

    pub fn from_term(p: PauliString, c: Complex64) -> Self {
        let mut op = Self::zero();
        op.add_term(p, c);
        op
    }

    pub fn add_term(&mut self, p: PauliString, c: Complex64) {
        let e = self.terms.entry(p).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        if e.norm() < PRUNE_TOL {
            self.terms.remove(&p);
        }
    }

    pub fn terms(&self) -> &BTreeMap<PauliString, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    /// Minimum register size the operator acts on.
    pub fn n_qubits(&self) -> usize {
        self.terms.keys().map(|p| p.width()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero();
        for (p, v) in &self.terms {
            out.add_term(*p, v * c);
        }
        out
    }

    /// Largest imaginary part over all coefficients.
    pub fn max_imaginary(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imaginary() <= tol
    }

    /// Real-coefficient view of a Hermitian operator.
    pub fn real_terms(&self, tol: f64) -> Result<Vec<(PauliString, f64)>> {
        let im = self.max_imaginary();
        if im > tol {
            return Err(Error::NonHermitian(im));
        }
        Ok(self.terms.iter().map(|(p, c)| (*p, c.re)).collect())
    }

    pub fn constant(&self) -> f64 {
        self.coefficient(&PauliString::IDENTITY).re
    }

    /// out ← Σ c_k P_k · psi.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (p, c) in &self.terms {
            for (b, amp) in psi.iter().enumerate() {
                if amp.re == 0.0 && amp.im == 0.0 {
                    continue;
                }
                let (b2, ph) = p.act(b);
                out[b2] += c * ph * amp;
            }
        }
    }

    /// Dense 2ⁿ×2ⁿ matrix; for oracles and small exact diagonalization.
    pub fn to_dense(&self, n_qubits: usize) -> DMatrix<Complex64> {
        let dim = 1usize << n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (p, c) in &self.terms {
            for b in 0..dim {
                let (b2, ph) = p.act(b);
                m[(b2, b)] += c * ph;
            }
        }
        m
    }
}

impl Add for &QubitOperator {
    type Output = QubitOperator;
    fn add(self, rhs: &QubitOperator) -> QubitOperator {
        let mut out = self.clone();
        for (p, c) in &rhs.terms {
            out.add_term(*p, *c);
        }
        out
    }
}

impl Sub for &QubitOperator {
    type Output = QubitOperator;
    fn sub(self, rhs: &QubitOperator) -> QubitOperator {
        let mut out = self.clone();
        for (p, c) in &rhs.terms {
            out.add_term(*p, -c);
        }
        out
    }
}

impl Mul for &QubitOperator {
    type Output = QubitOperator;
    fn mul(self, rhs: &QubitOperator) -> QubitOperator {
        let mut out = QubitOperator::zero();
        for (p, a) in &self.terms {
            for (q, b) in &rhs.terms {
                let (ph, r) = p.multiply(q);
                out.add_term(r, a * b * ph);
            }
        }
        out
    }
}

fn format_coeff(c: &Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("({}{:+}i)", c.re, c.im)
    }
}

/// One term per line: `coeff [X0 Z1 Y3]`.
impl fmt::Display for QubitOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, c) in &self.terms {
            writeln!(f, "{} {}", format_coeff(c), p)?;
        }
        Ok(())
    }
}

fn parse_coeff(s: &str) -> Option<Complex64> {
    if let Some(inner) = s.strip_prefix('(').and_then(|t| t.strip_suffix("i)")) {
        // split at the sign that starts the imaginary part (not an exponent sign)
        let bytes = inner.as_bytes();
        let pos = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))?;
        let re = inner[..pos].parse().ok()?;
        let im = inner[pos..].parse().ok()?;
        Some(Complex64::new(re, im))
    } else {
        s.parse().ok().map(|re| Complex64::new(re, 0.0))
    }
}

impl FromStr for QubitOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut op = QubitOperator::zero();
        for (ln, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::Parse { line: ln + 1, message: m.to_string() };
            let open = line.find('[').ok_or_else(|| err("missing '['"))?;
            let close = line.rfind(']').ok_or_else(|| err("missing ']'"))?;
            let coeff = parse_coeff(line[..open].trim()).ok_or_else(|| err("bad coefficient"))?;
            let mut p = PauliString::IDENTITY;
            for tok in line[open + 1..close].split_whitespace() {
                let letter = tok.chars().next().ok_or_else(|| err("empty Pauli"))?;
                let q: usize = tok[1..].parse().map_err(|_| err("bad qubit index"))?;
                let single = PauliString::single(q, letter).map_err(|_| err("bad Pauli letter"))?;
                if single.support() & p.support() != 0 {
                    return Err(err("repeated qubit"));
                }
                p = PauliString::new(p.x | single.x, p.z | single.z);
            }
            op.add_term(p, coeff);
        }
        Ok(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense1(c: char) -> DMatrix<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        match c {
            'X' => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            'Y' => DMatrix::from_row_slice(2, 2, &[o, -I, I, o]),
            'Z' => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
            _ => DMatrix::identity(2, 2),
        }
    }

    /// Kronecker-product oracle with qubit k = bit k of the basis index.
    fn dense_kron(p: &PauliString, n: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::<Complex64>::identity(1, 1);
        let letters = p.letters();
        for q in (0..n).rev() {
            let c = letters.iter().find(|(k, _)| *k == q).map(|(_, c)| *c).unwrap_or('I');
            m = m.kronecker(&dense1(c));
        }
        m
    }

    #[test]
    fn single_qubit_products() {
        let x = PauliString::single(0, 'X').unwrap();
        let y = PauliString::single(0, 'Y').unwrap();
        let z = PauliString::single(0, 'Z').unwrap();
        assert_eq!(x.multiply(&y), (I, z));
        assert_eq!(y.multiply(&z), (I, x));
        assert_eq!(z.multiply(&x), (I, y));
        assert_eq!(y.multiply(&x), (-I, z));
        assert_eq!(y.multiply(&y), (Complex64::new(1.0, 0.0), PauliString::IDENTITY));
    }

    #[test]
    fn products_match_dense_oracle() {
        let n = 3;
        let all: Vec<PauliString> = (0..64u64)
            .map(|k| PauliString::new(k & 7, k >> 3))
            .collect();
        for p in &all {
            assert!((p.width()) <= n);
            let dp = dense_kron(p, n);
            let qop = QubitOperator::from_term(*p, Complex64::new(1.0, 0.0));
            assert!((qop.to_dense(n) - &dp).camax() < 1e-14);
            for q in &all {
                let (ph, r) = p.multiply(q);
                let lhs = &dp * dense_kron(q, n);
                let rhs = dense_kron(&r, n) * ph;
                assert!((lhs - rhs).camax() < 1e-14, "{p} {q}");
                let comm = (&dp * dense_kron(q, n) - dense_kron(q, n) * &dp).camax() < 1e-14;
                assert_eq!(comm, p.commutes_with(q));
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let op: QubitOperator = "0.5 [X0 Z1 Y3]\n(-0.25+1.5e-3i) [Z2]\n-1 []\n".parse().unwrap();
        assert_eq!(op.len(), 3);
        assert_eq!(op.constant(), -1.0);
        let text = op.to_string();
        assert!(text.contains("0.5 [X0 Z1 Y3]"));
        let back: QubitOperator = text.parse().unwrap();
        assert_eq!(back, op);
        assert!("1 [Q0]".parse::<QubitOperator>().is_err());
        assert!("1 [X0 Z0]".parse::<QubitOperator>().is_err());
    }
}
