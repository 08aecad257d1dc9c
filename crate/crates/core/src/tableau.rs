//! Conjugation tableaux for Clifford circuits.
//!
//! A tableau stores `U X_q U^dag` and `U Z_q U^dag` for every qubit, which
//! pins the Clifford U down to global phase. Gates update rows through exact
//! bit rules, so pushing Pauli rotations through long Clifford stretches
//! costs no floating point at all.

use crate::circuit::Circuit;
use crate::error::CoreError;
use crate::gate::{Gate, GateKind};
use crate::pauli::PauliString;
use crate::rebase::rebase;

/// One-gate conjugation primitive; everything Clifford reduces to these.
#[derive(Clone, Copy, Debug)]
enum Prim {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Z(usize),
    V(usize),
    Vdg(usize),
    Cx(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
}

impl Prim {
    fn gate(self) -> Gate {
        match self {
            Prim::H(q) => Gate::new(GateKind::H, &[q], &[]),
            Prim::S(q) => Gate::new(GateKind::S, &[q], &[]),
            Prim::Sdg(q) => Gate::new(GateKind::Sdg, &[q], &[]),
            Prim::X(q) => Gate::new(GateKind::X, &[q], &[]),
            Prim::Z(q) => Gate::new(GateKind::Z, &[q], &[]),
            Prim::V(q) => Gate::new(GateKind::V, &[q], &[]),
            Prim::Vdg(q) => Gate::new(GateKind::Vdg, &[q], &[]),
            Prim::Cx(a, b) => Gate::new(GateKind::Cx, &[a, b], &[]),
            Prim::Cz(a, b) => Gate::new(GateKind::Cz, &[a, b], &[]),
            Prim::Swap(a, b) => Gate::new(GateKind::Swap, &[a, b], &[]),
        }
    }

    fn dagger(self) -> Prim {
        match self {
            Prim::S(q) => Prim::Sdg(q),
            Prim::Sdg(q) => Prim::S(q),
            Prim::V(q) => Prim::Vdg(q),
            Prim::Vdg(q) => Prim::V(q),
            other => other,
        }
    }
}

/// Apply `P -> G P G^dag` to a string, tracking the exact i-power phase.
fn conjugate_prim(p: &mut PauliString, prim: Prim) {
    match prim {
        Prim::H(q) => {
            let (x, z) = p.bits(q);
            if x && z {
                p.set_phase(p.phase() + 2);
            }
            p.set_bits(q, z, x);
        }
        Prim::S(q) => {
            // X -> Y, Y -> -X, Z -> Z
            let (x, z) = p.bits(q);
            if x && z {
                p.set_phase(p.phase() + 2);
            }
            p.set_bits(q, x, z ^ x);
        }
        Prim::Sdg(q) => {
            // X -> -Y, Y -> X
            let (x, z) = p.bits(q);
            if x && !z {
                p.set_phase(p.phase() + 2);
            }
            p.set_bits(q, x, z ^ x);
        }
        Prim::X(q) => {
            let (_, z) = p.bits(q);
            if z {
                p.set_phase(p.phase() + 2);
            }
        }
        Prim::Z(q) => {
            let (x, _) = p.bits(q);
            if x {
                p.set_phase(p.phase() + 2);
            }
        }
        Prim::V(q) => {
            // X -> X, Y -> Z, Z -> -Y
            let (x, z) = p.bits(q);
            if z && !x {
                p.set_phase(p.phase() + 2);
            }
            p.set_bits(q, x ^ z, z);
        }
        Prim::Vdg(q) => {
            // X -> X, Y -> -Z, Z -> Y
            let (x, z) = p.bits(q);
            if x && z {
                p.set_phase(p.phase() + 2);
            }
            p.set_bits(q, x ^ z, z);
        }
        Prim::Cx(c, t) => {
            let (xc, zc) = p.bits(c);
            let (xt, zt) = p.bits(t);
            let delta = (xc & zc) as i8 + (xt & zt) as i8
                - (xc & (zc ^ zt)) as i8
                - ((xc ^ xt) & zt) as i8;
            p.set_phase((p.phase() as i8 + delta).rem_euclid(4) as u8);
            p.set_bits(c, xc, zc ^ zt);
            p.set_bits(t, xc ^ xt, zt);
        }
        Prim::Cz(a, b) => {
            let (xa, za) = p.bits(a);
            let (xb, zb) = p.bits(b);
            let delta = 2 * (xa & xb) as i8 + (xa & za) as i8 + (xb & zb) as i8
                - (xa & (za ^ xb)) as i8
                - (xb & (zb ^ xa)) as i8;
            p.set_phase((p.phase() as i8 + delta).rem_euclid(4) as u8);
            p.set_bits(a, xa, za ^ xb);
            p.set_bits(b, xb, zb ^ xa);
        }
        Prim::Swap(a, b) => {
            let (xa, za) = p.bits(a);
            let (xb, zb) = p.bits(b);
            p.set_bits(a, xb, zb);
            p.set_bits(b, xa, za);
        }
    }
}

fn rz_prims(quarter_turns: i64, q: usize) -> Vec<Prim> {
    match quarter_turns.rem_euclid(4) {
        1 => vec![Prim::S(q)],
        2 => vec![Prim::Z(q)],
        3 => vec![Prim::Sdg(q)],
        _ => vec![],
    }
}

fn rx_prims(quarter_turns: i64, q: usize) -> Vec<Prim> {
    match quarter_turns.rem_euclid(4) {
        1 => vec![Prim::V(q)],
        2 => vec![Prim::X(q)],
        3 => vec![Prim::Vdg(q)],
        _ => vec![],
    }
}

/// Conjugation primitives of a Clifford gate, in application order.
fn clifford_prims(g: &Gate) -> Option<Vec<Prim>> {
    if !g.is_clifford() {
        return None;
    }
    let qs = g.qubits();
    Some(match g.kind() {
        GateKind::H => vec![Prim::H(qs[0])],
        GateKind::S => vec![Prim::S(qs[0])],
        GateKind::Sdg => vec![Prim::Sdg(qs[0])],
        GateKind::X => vec![Prim::X(qs[0])],
        GateKind::Z => vec![Prim::Z(qs[0])],
        GateKind::V => vec![Prim::V(qs[0])],
        GateKind::Vdg => vec![Prim::Vdg(qs[0])],
        GateKind::Cx => vec![Prim::Cx(qs[0], qs[1])],
        GateKind::Cz => vec![Prim::Cz(qs[0], qs[1])],
        GateKind::Swap => vec![Prim::Swap(qs[0], qs[1])],
        GateKind::Rz => rz_prims((2.0 * g.params()[0]).round() as i64, qs[0]),
        GateKind::PhasedX => {
            let alpha = g.params()[0];
            let beta = g.params()[1];
            if (alpha / 2.0 - (alpha / 2.0).round()).abs() < 0.25 {
                // alpha a multiple of 2: the gate is +-identity.
                vec![]
            } else {
                // Rz(beta) Rx(alpha) Rz(-beta): conjugate by the rightmost
                // factor first.
                let ka = (2.0 * alpha).round() as i64;
                let kb = (2.0 * beta).round() as i64;
                let mut prims = rz_prims(-kb, qs[0]);
                prims.extend(rx_prims(ka, qs[0]));
                prims.extend(rz_prims(kb, qs[0]));
                prims
            }
        }
        GateKind::ZZPhase => {
            // ZZPhase(0.5) is CZ . (S x S) up to global phase.
            let k = (2.0 * g.params()[0]).round().rem_euclid(4.0) as i64;
            let mut prims = Vec::new();
            for _ in 0..k {
                prims.extend([Prim::S(qs[0]), Prim::S(qs[1]), Prim::Cz(qs[0], qs[1])]);
            }
            prims
        }
    })
}

/// Clifford unitary as its conjugation action on the Pauli generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    /// xout[q] = U X_q U^dag
    xout: Vec<PauliString>,
    /// zout[q] = U Z_q U^dag
    zout: Vec<PauliString>,
}

impl Tableau {
    pub fn identity(n: usize) -> Self {
        let mut xout = Vec::with_capacity(n);
        let mut zout = Vec::with_capacity(n);
        for q in 0..n {
            let mut p = PauliString::identity(n);
            p.set_bits(q, true, false);
            xout.push(p);
            let mut p = PauliString::identity(n);
            p.set_bits(q, false, true);
            zout.push(p);
        }
        Tableau { n, xout, zout }
    }

    /// Validating constructor from explicit generator images.
    pub fn from_rows(xout: Vec<PauliString>, zout: Vec<PauliString>) -> Result<Self, CoreError> {
        let n = xout.len();
        if zout.len() != n
            || xout.iter().chain(&zout).any(|p| p.n_qubits() != n)
            || xout.iter().chain(&zout).any(|p| p.phase() % 2 != 0)
        {
            return Err(CoreError::NotSymplectic);
        }
        let t = Tableau { n, xout, zout };
        if !t.is_symplectic() {
            return Err(CoreError::NotSymplectic);
        }
        Ok(t)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn x_row(&self, q: usize) -> &PauliString {
        &self.xout[q]
    }

    pub fn z_row(&self, q: usize) -> &PauliString {
        &self.zout[q]
    }

    /// Rows anticommute exactly on their own X/Z pair and commute elsewhere.
    pub fn is_symplectic(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                if !self.xout[i].commutes_with(&self.xout[j])
                    || !self.zout[i].commutes_with(&self.zout[j])
                    || self.xout[i].commutes_with(&self.zout[j]) != (i != j)
                {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_identity(&self) -> bool {
        *self == Tableau::identity(self.n)
    }

    /// Left-compose with a gate: T <- conj_g . T.
    pub fn apply_gate(&mut self, g: &Gate) -> Result<(), CoreError> {
        let prims = clifford_prims(g).ok_or(CoreError::NonClifford { index: 0 })?;
        for prim in prims {
            for row in self.xout.iter_mut().chain(self.zout.iter_mut()) {
                conjugate_prim(row, prim);
            }
        }
        Ok(())
    }

    /// Right-compose with a gate: T <- T . conj_g.
    pub fn compose_right_gate(&mut self, g: &Gate) -> Result<(), CoreError> {
        let prims = clifford_prims(g).ok_or(CoreError::NonClifford { index: 0 })?;
        let mut updates: Vec<(bool, usize, PauliString)> = Vec::new();
        for &q in g.qubits() {
            for is_x in [true, false] {
                let mut gen = PauliString::identity(self.n);
                gen.set_bits(q, is_x, !is_x);
                for &prim in &prims {
                    conjugate_prim(&mut gen, prim);
                }
                updates.push((is_x, q, self.conjugate_pauli(&gen)));
            }
        }
        for (is_x, q, row) in updates {
            if is_x {
                self.xout[q] = row;
            } else {
                self.zout[q] = row;
            }
        }
        Ok(())
    }

    pub fn from_circuit(c: &Circuit) -> Result<Self, CoreError> {
        let mut t = Tableau::identity(c.n_qubits());
        for (index, g) in c.gates().iter().enumerate() {
            t.apply_gate(g).map_err(|_| CoreError::NonClifford { index })?;
        }
        Ok(t)
    }

    /// U p U^dag for the tableau's unitary, with exact phase.
    pub fn conjugate_pauli(&self, p: &PauliString) -> PauliString {
        assert_eq!(p.n_qubits(), self.n, "qubit counts differ");
        let mut acc = PauliString::identity(self.n);
        acc.set_phase(p.phase() + p.generator_phase_offset());
        for q in 0..self.n {
            let (x, z) = p.bits(q);
            if x {
                acc.mul_assign(&self.xout[q]);
            }
            if z {
                acc.mul_assign(&self.zout[q]);
            }
        }
        acc
    }

    /// T_self . T_rhs, the tableau of U_self U_rhs.
    pub fn compose(&self, rhs: &Tableau) -> Tableau {
        assert_eq!(self.n, rhs.n, "qubit counts differ");
        let xout = rhs.xout.iter().map(|p| self.conjugate_pauli(p)).collect();
        let zout = rhs.zout.iter().map(|p| self.conjugate_pauli(p)).collect();
        Tableau { n: self.n, xout, zout }
    }

    /// Inverse tableau. Bits come from the symplectic transpose; each phase
    /// is then fixed so that T(T^{-1}(G)) = G for every generator G.
    pub fn adjoint(&self) -> Tableau {
        let n = self.n;
        let mut inv = Tableau::identity(n);
        for i in 0..n {
            for j in 0..n {
                let xi = (self.zout[j].bits(i).1, self.xout[j].bits(i).1);
                inv.xout[i].set_bits(j, xi.0, xi.1);
                let zi = (self.zout[j].bits(i).0, self.xout[j].bits(i).0);
                inv.zout[i].set_bits(j, zi.0, zi.1);
            }
        }
        for i in 0..n {
            let back = self.conjugate_pauli(&inv.xout[i]);
            inv.xout[i].set_phase(u8::wrapping_sub(4, back.phase()) % 4);
            let back = self.conjugate_pauli(&inv.zout[i]);
            inv.zout[i].set_phase(u8::wrapping_sub(4, back.phase()) % 4);
        }
        inv
    }

    /// Native-gateset circuit with exactly this tableau, built by reducing a
    /// working copy to the identity with staged row elimination.
    pub fn synthesize(&self) -> Result<Circuit, CoreError> {
        if !self.is_symplectic() || self.xout.iter().chain(&self.zout).any(|p| p.phase() % 2 != 0)
        {
            return Err(CoreError::NotSymplectic);
        }
        let n = self.n;
        let mut r = self.clone();
        let mut applied: Vec<Prim> = Vec::new();
        let mut emit = |r: &mut Tableau, prim: Prim| {
            for row in r.xout.iter_mut().chain(r.zout.iter_mut()) {
                conjugate_prim(row, prim);
            }
            applied.push(prim);
        };

        for i in 0..n {
            // Reduce U X_i U^dag to +-X_i.
            if !(i..n).any(|j| r.xout[i].bits(j).0) {
                let j = (i..n).find(|&j| r.xout[i].bits(j).1).expect("row is empty");
                emit(&mut r, Prim::H(j));
            }
            let pivot = (i..n).find(|&j| r.xout[i].bits(j).0).unwrap();
            if pivot != i {
                emit(&mut r, Prim::Swap(i, pivot));
            }
            for j in i + 1..n {
                if r.xout[i].bits(j).0 {
                    emit(&mut r, Prim::Cx(i, j));
                }
            }
            if r.xout[i].bits(i).1 {
                emit(&mut r, Prim::S(i));
            }
            for j in i + 1..n {
                if r.xout[i].bits(j).1 {
                    emit(&mut r, Prim::Cz(i, j));
                }
            }
            debug_assert_eq!(r.xout[i].support(), vec![i]);

            // Reduce U Z_i U^dag to +-Z_i with gates that fix X_i.
            debug_assert!(r.zout[i].bits(i).1, "row must anticommute with X_i");
            if r.zout[i].bits(i).0 {
                emit(&mut r, Prim::V(i));
            }
            for j in i + 1..n {
                let (x, z) = r.zout[i].bits(j);
                if x {
                    emit(&mut r, if z { Prim::V(j) } else { Prim::H(j) });
                }
            }
            for j in i + 1..n {
                if r.zout[i].bits(j).1 {
                    emit(&mut r, Prim::Cx(j, i));
                }
            }
            debug_assert_eq!(r.zout[i].support(), vec![i]);
        }
        for i in 0..n {
            if r.xout[i].phase() == 2 {
                emit(&mut r, Prim::Z(i));
            }
            if r.zout[i].phase() == 2 {
                emit(&mut r, Prim::X(i));
            }
        }
        debug_assert!(r.is_identity());

        // conj_{g_m} ... conj_{g_1} T = Id, so U = g_1^dag ... g_m^dag with
        // the last-emitted dagger applied first.
        let gates: Vec<Gate> = applied.into_iter().rev().map(|p| p.dagger().gate()).collect();
        Ok(rebase(&Circuit::from_gates(n, gates)))
    }
}
