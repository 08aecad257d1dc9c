//! Pauli strings with exact phase tracking.
//!
//! A string is `i^phase * W_0 (x) ... (x) W_{n-1}` with each `W_q` one of
//! I, X, Y, Z picked by the bit pair `(x[q], z[q])`: (0,0)=I, (1,0)=X,
//! (1,1)=Y, (0,1)=Z. The phase exponent lives in 0..4 so products of
//! Hermitian strings stay exact through S-like gates.

use std::fmt;

/// Exponent f with `W_a W_b = i^f W_{a xor b}` for one qubit.
fn mul_phase(ax: bool, az: bool, bx: bool, bz: bool) -> i8 {
    match (ax, az) {
        (false, false) => 0,
        (true, false) => {
            // X * {I,X,Y,Z}
            if bz {
                if bx { 1 } else { 3 }
            } else {
                0
            }
        }
        (true, true) => (bz as i8) - (bx as i8),
        (false, true) => {
            if bx {
                if bz { 3 } else { 1 }
            } else {
                0
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    x: Vec<bool>,
    z: Vec<bool>,
    /// Power of i applied to the whole string, 0..4.
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { x: vec![false; n], z: vec![false; n], phase: 0 }
    }

    /// Build from per-qubit letters 'I', 'X', 'Y', 'Z'.
    pub fn from_letters(letters: &str) -> Self {
        let mut p = PauliString::identity(letters.len());
        for (q, ch) in letters.chars().enumerate() {
            let (x, z) = match ch {
                'I' => (false, false),
                'X' => (true, false),
                'Y' => (true, true),
                'Z' => (false, true),
                _ => panic!("unknown Pauli letter {ch:?}"),
            };
            p.x[q] = x;
            p.z[q] = z;
        }
        p
    }

    pub fn n_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn set_phase(&mut self, phase: u8) {
        self.phase = phase % 4;
    }

    pub fn bits(&self, q: usize) -> (bool, bool) {
        (self.x[q], self.z[q])
    }

    pub fn set_bits(&mut self, q: usize, x: bool, z: bool) {
        self.x[q] = x;
        self.z[q] = z;
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&b| !b) && self.z.iter().all(|&b| !b)
    }

    /// Number of qubits carrying a non-identity letter.
    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).filter(|(&x, &z)| x || z).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n_qubits()).filter(|&q| self.x[q] || self.z[q]).collect()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        assert_eq!(self.n_qubits(), other.n_qubits(), "qubit counts differ");
        let mut anti = false;
        for q in 0..self.n_qubits() {
            anti ^= (self.x[q] & other.z[q]) ^ (self.z[q] & other.x[q]);
        }
        !anti
    }

    /// In-place product `self <- self * other` with exact phase.
    pub fn mul_assign(&mut self, other: &PauliString) {
        assert_eq!(self.n_qubits(), other.n_qubits(), "qubit counts differ");
        let mut acc = 0i8;
        for q in 0..self.n_qubits() {
            acc += mul_phase(self.x[q], self.z[q], other.x[q], other.z[q]);
            self.x[q] ^= other.x[q];
            self.z[q] ^= other.z[q];
        }
        self.phase = ((self.phase as i8 + other.phase as i8 + acc).rem_euclid(4)) as u8;
    }

    pub fn mul(&self, other: &PauliString) -> PauliString {
        let mut out = self.clone();
        out.mul_assign(other);
        out
    }

    /// i^phase decomposition offset when writing the string as a product of
    /// bare X^x Z^z generator factors: W = i^{x z} X^x Z^z per qubit.
    pub fn generator_phase_offset(&self) -> u8 {
        let count = self.x.iter().zip(&self.z).filter(|(&x, &z)| x && z).count();
        (count % 4) as u8
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            0 => write!(f, "+")?,
            1 => write!(f, "+i")?,
            2 => write!(f, "-")?,
            _ => write!(f, "-i")?,
        }
        for q in 0..self.n_qubits() {
            let ch = match (self.x[q], self.z[q]) {
                (false, false) => 'I',
                (true, false) => 'X',
                (true, true) => 'Y',
                (false, true) => 'Z',
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_products() {
        let x = PauliString::from_letters("X");
        let y = PauliString::from_letters("Y");
        let z = PauliString::from_letters("Z");
        // XY = iZ, YX = -iZ, ZX = iY, XZ = -iY, YZ = iX, ZY = -iX
        assert_eq!(x.mul(&y), with_phase(&z, 1));
        assert_eq!(y.mul(&x), with_phase(&z, 3));
        assert_eq!(z.mul(&x), with_phase(&y, 1));
        assert_eq!(x.mul(&z), with_phase(&y, 3));
        assert_eq!(y.mul(&z), with_phase(&x, 1));
        assert_eq!(z.mul(&y), with_phase(&x, 3));
        for p in [&x, &y, &z] {
            assert_eq!(p.mul(p), PauliString::identity(1));
        }
    }

    #[test]
    fn commutation() {
        let xy = PauliString::from_letters("XY");
        let yx = PauliString::from_letters("YX");
        let zz = PauliString::from_letters("ZZ");
        let zi = PauliString::from_letters("ZI");
        let ix = PauliString::from_letters("IX");
        assert!(xy.commutes_with(&yx));
        // Two anticommuting positions cancel out.
        assert!(xy.commutes_with(&zz));
        assert!(xy.commutes_with(&zi) == false);
        assert!(zz.commutes_with(&zz));
        assert!(ix.commutes_with(&zz) == false);
    }

    #[test]
    fn weight_and_support() {
        let p = PauliString::from_letters("IXYZI");
        assert_eq!(p.weight(), 3);
        assert_eq!(p.support(), vec![1, 2, 3]);
        assert!(!p.is_identity());
        assert!(PauliString::identity(4).is_identity());
    }

    fn with_phase(p: &PauliString, phase: u8) -> PauliString {
        let mut out = p.clone();
        out.set_phase(phase);
        out
    }
}
