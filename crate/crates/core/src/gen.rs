//! Seeded generators for the eight benchmark circuit families, plus dataset
//! assembly into JSONL with a manifest.
//!
//! All class recipes emit native-gateset circuits that are already
//! rebase-normalised, and are deterministic functions of the supplied RNG
//! state. Angles are uniform on [0, 2) half-turns except inside Clifford
//! stretches, which draw multiples of 0.5.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::CoreError;
use crate::format::{self, CircuitMetadata};
use crate::gate::{Gate, GateKind};
use crate::kak;
use crate::passes;
use crate::pauli::PauliString;
use crate::rebase::rebase;
use crate::unitary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CircuitClass {
    RandomSu4,
    RandomSu8,
    Iqp,
    Qaoa,
    PauliGadget,
    CliffordSu4,
    OrderedCliffordSu4,
    CliffordSu4Su8,
}

impl CircuitClass {
    pub const ALL: [CircuitClass; 8] = [
        CircuitClass::RandomSu4,
        CircuitClass::RandomSu8,
        CircuitClass::Iqp,
        CircuitClass::Qaoa,
        CircuitClass::PauliGadget,
        CircuitClass::CliffordSu4,
        CircuitClass::OrderedCliffordSu4,
        CircuitClass::CliffordSu4Su8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CircuitClass::RandomSu4 => "Random-SU4",
            CircuitClass::RandomSu8 => "Random-SU8",
            CircuitClass::Iqp => "IQP",
            CircuitClass::Qaoa => "QAOA",
            CircuitClass::PauliGadget => "Pauli",
            CircuitClass::CliffordSu4 => "Clifford-SU4",
            CircuitClass::OrderedCliffordSu4 => "Ordered-Clifford-SU4",
            CircuitClass::CliffordSu4Su8 => "Clifford-SU4-SU8",
        }
    }

    pub fn from_name(name: &str) -> Option<CircuitClass> {
        CircuitClass::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Smallest qubit count the recipe is defined on.
    pub fn min_qubits(self) -> usize {
        match self {
            CircuitClass::Iqp | CircuitClass::PauliGadget => 1,
            CircuitClass::RandomSu8 | CircuitClass::CliffordSu4Su8 => 3,
            _ => 2,
        }
    }

    /// Default size-parameter range keeping worst-case two-qubit counts
    /// within the training budget of 215 at up to seven qubits.
    pub fn default_size_range(self) -> (usize, usize) {
        match self {
            CircuitClass::RandomSu4 => (0, 70),
            CircuitClass::RandomSu8 => (0, 11),
            CircuitClass::Iqp => (0, 200),
            CircuitClass::Qaoa => (0, 10),
            CircuitClass::PauliGadget => (0, 19),
            CircuitClass::CliffordSu4 => (0, 26),
            CircuitClass::OrderedCliffordSu4 => (0, 11),
            CircuitClass::CliffordSu4Su8 => (0, 11),
        }
    }
}

/// Recipe for one batch of circuits. Both ranges are inclusive; `size` is the
/// class size parameter (blocks, bundles, diagonal gates, layers, gadgets or
/// segments).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub class: CircuitClass,
    pub qubits: (usize, usize),
    pub size: (usize, usize),
    pub seed: u64,
    pub count: usize,
}

impl GenSpec {
    /// Training defaults: three to seven qubits, class-default sizes.
    pub fn training_default(class: CircuitClass, seed: u64, count: usize) -> GenSpec {
        GenSpec { class, qubits: (3, 7), size: class.default_size_range(), seed, count }
    }

    fn validate(&self) -> Result<(), CoreError> {
        if self.qubits.0 > self.qubits.1 || self.size.0 > self.size.1 {
            return Err(CoreError::Spec(format!(
                "empty range in {:?}: qubits {:?}, size {:?}",
                self.class, self.qubits, self.size
            )));
        }
        if self.qubits.0 < self.class.min_qubits() {
            return Err(CoreError::Spec(format!(
                "{} needs at least {} qubits, spec allows {}",
                self.class.name(),
                self.class.min_qubits(),
                self.qubits.0
            )));
        }
        Ok(())
    }
}

fn random_pair(rng: &mut impl Rng, n: usize) -> (usize, usize) {
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

fn distinct_qubits(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(k);
    all
}

fn push_su4_block(c: &mut Circuit, rng: &mut impl Rng, a: usize, b: usize) {
    let u = unitary::haar_unitary(4, rng);
    let synth = kak::kak_synthesize(&u).expect("Haar SU(4) synthesis");
    for g in synth.gates() {
        let qubits: Vec<usize> =
            g.qubits().iter().map(|&q| if q == 0 { a } else { b }).collect();
        c.push(Gate::new(g.kind(), &qubits, g.params()));
    }
}

/// One bundle standing in for a Haar SU(8) block: two brickwork rounds of
/// SU(4) blocks over a qubit triple, dense enough to leave the product far
/// from any local-times-SU(4) factorisation.
fn push_su8_bundle(c: &mut Circuit, rng: &mut impl Rng, triple: &[usize]) {
    for _ in 0..2 {
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            push_su4_block(c, rng, triple[i], triple[j]);
        }
    }
}

fn push_clifford_stretch(c: &mut Circuit, rng: &mut impl Rng, n: usize, len: usize) {
    for _ in 0..len {
        match rng.gen_range(0..3) {
            0 => c.push(Gate::new(GateKind::H, &[rng.gen_range(0..n)], &[])),
            1 => c.push(Gate::new(GateKind::S, &[rng.gen_range(0..n)], &[])),
            _ => {
                let (a, b) = random_pair(rng, n);
                c.push(Gate::new(GateKind::Cz, &[a, b], &[]));
            }
        }
    }
}

/// A Clifford block followed by its inverse. The block starts with a CZ chain
/// through `span` wires so the identity pair has multi-wire support, then
/// appends a few random Clifford gates.
fn push_clifford_identity(c: &mut Circuit, rng: &mut impl Rng, span: &[usize], n: usize) {
    let mut block = Circuit::new(n);
    for w in span.windows(2) {
        block.push(Gate::new(GateKind::Cz, &[w[0], w[1]], &[]));
    }
    let extras = rng.gen_range(2..=6);
    push_clifford_stretch(&mut block, rng, n, extras);
    c.extend(block.gates().iter().copied());
    c.extend(block.gates().iter().rev().map(Gate::dagger));
}

fn gen_random_su4(rng: &mut impl Rng, n: usize, blocks: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..blocks {
        let (a, b) = random_pair(rng, n);
        push_su4_block(&mut c, rng, a, b);
    }
    c
}

fn gen_random_su8(rng: &mut impl Rng, n: usize, bundles: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..bundles {
        let triple = distinct_qubits(rng, n, 3);
        push_su8_bundle(&mut c, rng, &triple);
    }
    c
}

/// Returns the boundary-layer angles alongside the circuit so tests can
/// verify the sandwiched diagonal structure.
fn gen_iqp(rng: &mut impl Rng, n: usize, diag_gates: usize) -> (Vec<f64>, Circuit) {
    let betas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let mut c = Circuit::new(n);
    for (q, &beta) in betas.iter().enumerate() {
        c.push(Gate::phased_x(q, 0.5, beta));
    }
    for _ in 0..diag_gates {
        if n >= 2 && rng.gen_bool(0.5) {
            let (a, b) = random_pair(rng, n);
            c.push(Gate::zz_phase(a, b, rng.gen_range(0.0..2.0)));
        } else {
            c.push(Gate::rz(rng.gen_range(0..n), rng.gen_range(0.0..2.0)));
        }
    }
    for (q, &beta) in betas.iter().enumerate() {
        c.push(Gate::phased_x(q, 0.5, beta));
    }
    (betas, c)
}

fn gen_qaoa(rng: &mut impl Rng, n: usize, layers: usize) -> Circuit {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.5) {
                edges.push((i, j));
            }
        }
    }
    let mut c = Circuit::new(n);
    for _ in 0..layers {
        let gamma = rng.gen_range(0.0..2.0);
        for &(i, j) in &edges {
            c.push(Gate::zz_phase(i, j, gamma));
        }
        let theta = rng.gen_range(0.0..2.0);
        for q in 0..n {
            c.push(Gate::phased_x(q, theta, 0.0));
        }
    }
    c
}

fn gen_pauli_gadgets(rng: &mut impl Rng, n: usize, gadgets: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..gadgets {
        let weight = rng.gen_range(1..=n);
        let mut support = distinct_qubits(rng, n, weight);
        support.sort_unstable();
        let mut p = PauliString::identity(n);
        for &q in &support {
            match rng.gen_range(0..3) {
                0 => p.set_bits(q, true, false),
                1 => p.set_bits(q, true, true),
                _ => p.set_bits(q, false, true),
            }
        }
        passes::emit_gadget(&mut c, &p, rng.gen_range(0.0..2.0));
    }
    c
}

fn gen_clifford_su4(rng: &mut impl Rng, n: usize, segments: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..segments {
        if rng.gen_bool(0.5) {
            let len = rng.gen_range(2..=8);
            push_clifford_stretch(&mut c, rng, n, len);
        } else {
            let (a, b) = random_pair(rng, n);
            push_su4_block(&mut c, rng, a, b);
        }
    }
    c
}

/// All SU(4) layers act on one fixed pair, and the Clifford identity between
/// layers straddles that pair plus a third wire. The redundancy is then only
/// reachable by removing the Clifford blocks before merging the pair blocks.
fn gen_ordered_clifford_su4(rng: &mut impl Rng, n: usize, layers: usize) -> Circuit {
    let mut c = Circuit::new(n);
    if layers == 0 {
        return c;
    }
    let (a, b) = random_pair(rng, n);
    let span: Vec<usize> = if n >= 3 {
        let mut third = rng.gen_range(0..n - 2);
        for q in [a.min(b), a.max(b)] {
            if third >= q {
                third += 1;
            }
        }
        vec![a, third, b]
    } else {
        vec![a, b]
    };
    for layer in 0..layers {
        push_su4_block(&mut c, rng, a, b);
        if layer + 1 < layers {
            push_clifford_identity(&mut c, rng, &span, n);
        }
    }
    c
}

fn gen_clifford_su4_su8(rng: &mut impl Rng, n: usize, segments: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..segments {
        match rng.gen_range(0..3) {
            0 => {
                let len = rng.gen_range(2..=8);
                push_clifford_stretch(&mut c, rng, n, len);
            }
            1 => {
                let (a, b) = random_pair(rng, n);
                push_su4_block(&mut c, rng, a, b);
            }
            _ => {
                let triple = distinct_qubits(rng, n, 3);
                push_su8_bundle(&mut c, rng, &triple);
            }
        }
    }
    c
}

/// Generate one circuit from `spec`, drawing its qubit count and size
/// parameter from `rng`.
pub fn generate(spec: &GenSpec, rng: &mut impl Rng) -> Result<Circuit, CoreError> {
    spec.validate()?;
    let n = rng.gen_range(spec.qubits.0..=spec.qubits.1);
    let size = rng.gen_range(spec.size.0..=spec.size.1);
    let c = match spec.class {
        CircuitClass::RandomSu4 => gen_random_su4(rng, n, size),
        CircuitClass::RandomSu8 => gen_random_su8(rng, n, size),
        CircuitClass::Iqp => gen_iqp(rng, n, size).1,
        CircuitClass::Qaoa => gen_qaoa(rng, n, size),
        CircuitClass::PauliGadget => gen_pauli_gadgets(rng, n, size),
        CircuitClass::CliffordSu4 => gen_clifford_su4(rng, n, size),
        CircuitClass::OrderedCliffordSu4 => gen_ordered_clifford_su4(rng, n, size),
        CircuitClass::CliffordSu4Su8 => gen_clifford_su4_su8(rng, n, size),
    };
    Ok(rebase(&c))
}

/// Independent RNG substream for circuit `index` of a dataset seeded by
/// `seed`. Streams are independent of generation order, so assembly can be
/// parallelised without changing output.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub total: usize,
    pub train_count: usize,
    pub validation_count: usize,
    pub class_counts: BTreeMap<String, usize>,
    pub n_qubits_histogram: BTreeMap<usize, usize>,
    pub two_qubit_histogram: BTreeMap<usize, usize>,
}

/// Path of the manifest written next to a dataset.
pub fn manifest_path(dataset: &Path) -> PathBuf {
    let mut name = dataset.file_stem().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    dataset.with_file_name(name)
}

/// Assemble a JSONL dataset cycling round-robin through `specs`, with a 90/10
/// train/validation split (every tenth circuit validates) and a manifest
/// JSON next to the dataset file. Total line count is the sum of the specs'
/// counts.
pub fn make_dataset(specs: &[GenSpec], out: &Path) -> Result<DatasetManifest, CoreError> {
    if specs.is_empty() {
        return Err(CoreError::Spec("no generator specs given".to_string()));
    }
    for spec in specs {
        spec.validate()?;
    }
    let total: usize = specs.iter().map(|s| s.count).sum();
    let mut manifest = DatasetManifest {
        version: format::FORMAT_VERSION,
        total,
        train_count: 0,
        validation_count: 0,
        class_counts: BTreeMap::new(),
        n_qubits_histogram: BTreeMap::new(),
        two_qubit_histogram: BTreeMap::new(),
    };
    let mut lines: Vec<(Circuit, CircuitMetadata)> = Vec::with_capacity(total);
    for index in 0..total {
        let spec = &specs[index % specs.len()];
        let mut rng = substream(spec.seed, index as u64);
        let circuit = generate(spec, &mut rng)?;
        let split = if index % 10 == 9 { "validation" } else { "train" };
        if split == "train" {
            manifest.train_count += 1;
        } else {
            manifest.validation_count += 1;
        }
        *manifest
            .class_counts
            .entry(spec.class.name().to_string())
            .or_insert(0) += 1;
        *manifest.n_qubits_histogram.entry(circuit.n_qubits()).or_insert(0) += 1;
        *manifest
            .two_qubit_histogram
            .entry(circuit.two_qubit_count())
            .or_insert(0) += 1;
        let metadata = CircuitMetadata {
            class: Some(spec.class.name().to_string()),
            seed: Some(index as u64),
            split: Some(split.to_string()),
        };
        lines.push((circuit, metadata));
    }
    format::write_dataset(out, lines.iter().map(|(c, m)| (c, m)))?;
    let manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    std::fs::write(manifest_path(out), manifest_json + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passes::{apply_pass, Action};
    use crate::unitary::{circuit_unitary, gate_matrix, phase_invariant_distance};

    fn spec(class: CircuitClass, qubits: (usize, usize), size: (usize, usize)) -> GenSpec {
        GenSpec { class, qubits, size, seed: 11, count: 1 }
    }

    #[test]
    fn every_class_generates_native_canonical_circuits() {
        for (k, class) in CircuitClass::ALL.into_iter().enumerate() {
            let s = spec(class, (class.min_qubits(), 5), (1, 6));
            for i in 0..4 {
                let mut rng = substream(7, (k * 10 + i) as u64);
                let c = generate(&s, &mut rng).unwrap();
                assert!(c.is_native(), "{} not native", class.name());
                assert_eq!(rebase(&c), c, "{} not canonical", class.name());
                assert!(c.n_qubits() >= class.min_qubits());
                assert!(c.n_qubits() <= 5);
            }
        }
    }

    #[test]
    fn generation_is_deterministic_under_seed() {
        for class in CircuitClass::ALL {
            let s = spec(class, (class.min_qubits(), 4), (1, 4));
            let a = generate(&s, &mut substream(3, 0)).unwrap();
            let b = generate(&s, &mut substream(3, 0)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn su4_block_count_bounds_two_qubit_count() {
        for blocks in [0usize, 1, 5, 9] {
            let s = spec(CircuitClass::RandomSu4, (4, 4), (blocks, blocks));
            let c = generate(&s, &mut substream(5, blocks as u64)).unwrap();
            assert!(c.two_qubit_count() <= 3 * blocks);
        }
    }

    #[test]
    fn default_sizes_respect_the_two_qubit_budget() {
        for class in CircuitClass::ALL {
            let s = GenSpec {
                class,
                qubits: (class.min_qubits().max(3), 7),
                size: class.default_size_range(),
                seed: 23,
                count: 1,
            };
            for i in 0..6 {
                let c = generate(&s, &mut substream(23, i)).unwrap();
                assert!(
                    c.two_qubit_count() <= 215,
                    "{} produced {} two-qubit gates",
                    class.name(),
                    c.two_qubit_count()
                );
            }
        }
    }

    #[test]
    fn iqp_is_diagonal_between_its_boundaries() {
        for i in 0..5 {
            let mut rng = substream(13, i);
            let n = 3;
            let (betas, c) = gen_iqp(&mut rng, n, 6);
            let c = rebase(&c);
            let u = circuit_unitary(&c).unwrap();
            let mut boundary = Circuit::new(n);
            for (q, &beta) in betas.iter().enumerate() {
                boundary.push(Gate::phased_x(q, 0.5, beta));
            }
            let bu = circuit_unitary(&boundary).unwrap();
            // c = B D B, so D = B^dag U B^dag up to the usual global phase.
            let d = bu.adjoint() * &u * bu.adjoint();
            let dim = d.nrows();
            for r in 0..dim {
                for col in 0..dim {
                    if r != col {
                        assert!(
                            d[(r, col)].norm() <= 1e-9,
                            "off-diagonal {:.3e} at trial {i}",
                            d[(r, col)].norm()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ordered_clifford_su4_collapses_under_resynth_then_kak() {
        for i in 0..5 {
            let layers = 3;
            let s = spec(CircuitClass::OrderedCliffordSu4, (3, 5), (layers, layers));
            let c = generate(&s, &mut substream(29, i)).unwrap();
            assert!(c.two_qubit_count() > 3 * layers, "identity blocks add cost");
            let r1 = apply_pass(Action::CliffordResynthesis, &c);
            let r2 = apply_pass(Action::KakDecomposition, &r1.circuit);
            assert!(
                r2.circuit.two_qubit_count() <= 3 * layers,
                "trial {i}: {} left after cleanup",
                r2.circuit.two_qubit_count()
            );
            if c.n_qubits() <= 5 {
                let ua = circuit_unitary(&c).unwrap();
                let ub = circuit_unitary(&r2.circuit).unwrap();
                assert!(phase_invariant_distance(&ua, &ub) <= 1e-7);
            }
        }
    }

    #[test]
    fn pauli_gadgets_realise_their_strings() {
        let n = 3;
        let mut p = PauliString::identity(n);
        p.set_bits(0, false, true);
        p.set_bits(1, true, true);
        p.set_bits(2, true, false);
        let theta = 0.37;
        let mut c = Circuit::new(n);
        passes::emit_gadget(&mut c, &p, theta);
        let u = circuit_unitary(&rebase(&c)).unwrap();
        // Oracle: exp(-i*pi*theta/2 * P) built from the dense Pauli matrix.
        let zero = unitary::c(0.0, 0.0);
        let mut pm = unitary::CMat::from_element(1, 1, unitary::c(1.0, 0.0));
        for q in 0..n {
            let g = match p.bits(q) {
                // PhasedX(1, 0) = -iX and PhasedX(1, 0.5) = -iY; undo the phases.
                (true, false) => {
                    gate_matrix(&Gate::phased_x(0, 1.0, 0.0)) * unitary::c(0.0, 1.0)
                }
                (true, true) => {
                    gate_matrix(&Gate::phased_x(0, 1.0, 0.5)) * unitary::c(0.0, 1.0)
                }
                (false, true) => {
                    let mut z = unitary::CMat::from_element(2, 2, zero);
                    z[(0, 0)] = unitary::c(1.0, 0.0);
                    z[(1, 1)] = unitary::c(-1.0, 0.0);
                    z
                }
                (false, false) => unitary::CMat::identity(2, 2),
            };
            pm = pm.kronecker(&g);
        }
        let half = std::f64::consts::PI * theta / 2.0;
        let dim = 1 << n;
        let mut expected = unitary::CMat::identity(dim, dim) * unitary::c(half.cos(), 0.0);
        expected -= pm * unitary::c(0.0, half.sin());
        assert!(phase_invariant_distance(&u, &expected) <= 1e-10);
    }

    #[test]
    fn qaoa_layers_alternate_diagonal_and_mixer_gates() {
        let s = spec(CircuitClass::Qaoa, (4, 4), (3, 3));
        let c = generate(&s, &mut substream(31, 2)).unwrap();
        // Every two-qubit gate shares its layer angle with its neighbours.
        let zz_angles: Vec<f64> = c
            .gates()
            .iter()
            .filter(|g| g.arity() == 2)
            .map(|g| g.params()[0])
            .collect();
        let distinct: std::collections::BTreeSet<u64> =
            zz_angles.iter().map(|a| a.to_bits()).collect();
        assert!(distinct.len() <= 3, "one shared angle per layer");
    }

    #[test]
    fn dataset_round_robins_classes_and_splits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.jsonl");
        let specs: Vec<GenSpec> = CircuitClass::ALL
            .into_iter()
            .map(|class| GenSpec {
                class,
                qubits: (3, 4),
                size: (1, 3),
                seed: 41,
                count: 13,
            })
            .collect();
        // 100 total: pad the first four specs by one less, keeping the sum.
        let mut specs = specs;
        for s in specs.iter_mut().skip(4) {
            s.count = 12;
        }
        let manifest = make_dataset(&specs, &path).unwrap();
        assert_eq!(manifest.total, 100);
        assert_eq!(manifest.train_count, 90);
        assert_eq!(manifest.validation_count, 10);
        for class in CircuitClass::ALL {
            let count = manifest.class_counts[class.name()];
            assert!(count == 12 || count == 13, "{}: {}", class.name(), count);
        }
        let records = format::read_dataset(&path).unwrap();
        assert_eq!(records.len(), 100);
        for (i, r) in records.iter().enumerate() {
            assert_eq!(
                r.metadata.class.as_deref(),
                Some(CircuitClass::ALL[i % 8].name())
            );
            let expect = if i % 10 == 9 { "validation" } else { "train" };
            assert_eq!(r.metadata.split.as_deref(), Some(expect));
            assert!(r.circuit.n_qubits() >= 3 && r.circuit.n_qubits() <= 4);
        }
        assert!(manifest_path(&path).exists());
    }

    #[test]
    fn dataset_files_are_byte_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        let specs: Vec<GenSpec> = CircuitClass::ALL
            .into_iter()
            .map(|class| GenSpec {
                class,
                qubits: (3, 4),
                size: (0, 2),
                seed: 55,
                count: 3,
            })
            .collect();
        make_dataset(&specs, &a).unwrap();
        make_dataset(&specs, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(
            std::fs::read(manifest_path(&a)).unwrap(),
            std::fs::read(manifest_path(&b)).unwrap()
        );
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let s = spec(CircuitClass::RandomSu8, (2, 2), (1, 1));
        assert!(generate(&s, &mut substream(1, 0)).is_err());
        let s = spec(CircuitClass::Qaoa, (3, 2), (1, 1));
        assert!(generate(&s, &mut substream(1, 0)).is_err());
    }

    #[test]
    fn serialised_generated_circuits_round_trip() {
        for k in 0..1000u64 {
            let class = CircuitClass::ALL[k as usize % CircuitClass::ALL.len()];
            let s = spec(class, (class.min_qubits(), 4), (1, 3));
            let c = generate(&s, &mut substream(61, k)).unwrap();
            let line = format::serialize_circuit(&c);
            let back = format::parse_circuit(line.as_bytes()).unwrap();
            assert_eq!(back, c);
        }
    }
}
