//! Fixture answers, a seeded synthetic problem generator, and rule-based
//! corruptions that turn a correct annotated answer into a hard negative.
//!
//! Synthetic answers are prose plus `@claim{…}` blocks. Every family has known
//! closed-form results, so positives pass the checks they trigger and each
//! corruption breaks exactly one claim.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::{format_complex, hermitian_eigen, ComplexMatrix, Expr, HermitianEigen};
use crate::judge::SemanticScores;
use crate::pipeline::{Difficulty, SampleRecord, TaskType, Verdict, VerificationRecord};
use crate::ses::{
    extract_claims, ClaimBody, Indicator, MatrixKind, Operand, PerDim, VerificationVector,
};

const SYSTEM_NOTE: &str = "Solve the following problem efficiently, with strict adherence to mathematical logic and physical laws.";

/// Heisenberg-picture ladder operator: the commutator of the evolved operators is time independent.
pub fn commutator_fixture() -> SampleRecord {
    let answer = concat!(
        "Step 1: Equation of motion. [H, a] = hbar*omega*[adag*a, a] = hbar*omega*(adag*[a, a] + [adag, a]*a) = -hbar*omega*a, ",
        "so d/dt a(t) = -i*omega*a(t).\n",
        "Step 2: Time evolution. Solving the ODE gives a(t) = a(0)*exp(-i*omega*t); taking the Hermitian adjoint, ",
        "adag(t) = adag(0)*exp(i*omega*t).\n",
        "Step 3: Verification. [a(t), adag(t)] = exp(-i*omega*t)*exp(i*omega*t)*[a(0), adag(0)] = 1*1 = 1. ",
        "The commutator equals 1 for all t, confirming consistency.\n",
        "@claim{kind=commutator, A=a*exp(-I*omega*t), B=adag*exp(I*omega*t), result=1}\n",
    );
    SampleRecord {
        id: "04215".into(),
        task_type: TaskType::ProblemSolving,
        topic: "Quantum Optics".into(),
        difficulty: Difficulty::Hard,
        question: concat!(
            "Consider a Hamiltonian H = hbar*omega*adag*a. 1. Derive the expression for a(t) using the Heisenberg ",
            "equation of motion dA/dt = (i/hbar)[H, A]. 2. Prove that [a(t), adag(t)] is time-independent."
        )
        .into(),
        answer: answer.into(),
        reference_answer: Some(answer.into()),
        think_trace: None,
    }
}

/// Particle in a box evaluated at n = 0: the arithmetic is right, the physics is not.
pub fn box_ground_state_fixture() -> SampleRecord {
    let answer = concat!(
        "The energy levels for a particle in a 1D infinite box are given by the formula ",
        "E_n = n^2*pi^2*hbar^2/(2*m*L^2).\n",
        "@claim{kind=final_expression, expr=n^2*pi^2*hbar^2/(2*m*L^2), dims=n:1; m:M; L:L, target=energy}\n",
        "Substituting the given quantum number n = 0: E_0 = 0^2*pi^2*hbar^2/(2*m*L^2) = 0.\n",
        "@claim{kind=numeric, value=0, reference=n^2*pi^2*hbar^2/(2*m*L^2), at=n=0; m=1; L=1}\n",
        "Thus, the energy of the particle in this state is zero.\n",
        "@claim{kind=energy, value=0, n=0, system=bound_state}\n",
    );
    SampleRecord {
        id: "20591".into(),
        task_type: TaskType::ProblemSolving,
        topic: "Bound States".into(),
        difficulty: Difficulty::Easy,
        question: concat!(
            "A particle of mass m is confined in a one-dimensional infinite potential well of width L. Using the ",
            "standard energy formula, calculate the energy E_n for the state with quantum number n = 0."
        )
        .into(),
        answer: answer.into(),
        reference_answer: Some(
            concat!(
                "The energy levels of a particle in a 1D infinite box are E_n = n^2*pi^2*hbar^2/(2*m*L^2) ",
                "with n a positive integer; n = 0 is not an allowed bound state and the minimum energy E_1 is positive.\n",
                "@claim{kind=final_expression, expr=n^2*pi^2*hbar^2/(2*m*L^2), dims=n:1; m:M; L:L, target=energy}\n",
            )
            .into(),
        ),
        think_trace: None,
    }
}

/// A generated problem before it is rendered into a record.
#[derive(Debug, Clone)]
struct Problem {
    topic: &'static str,
    question: String,
    prose: Vec<String>,
    claims: Vec<String>,
    difficulty: Difficulty,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn family_box(rng: &mut ChaCha8Rng) -> Problem {
    let n: u32 = rng.random_range(1..=5);
    let m = f64::from(rng.random_range(1..=4u32));
    let l = f64::from(rng.random_range(1..=3u32));
    let e = f64::from(n * n) * PI * PI / (2.0 * m * l * l);
    Problem {
        topic: "Bound States",
        question: format!(
            "A particle of mass m = {m} is confined in a one-dimensional infinite well of width L = {l} (natural units, hbar = 1). \
             Find the energy of the level with quantum number n = {n}."
        ),
        prose: vec![
            "Inside the well the wavefunction vanishes at both walls, so only standing waves fit.".into(),
            format!("The allowed wavenumbers are k = n*pi/L with n a positive integer, here n = {n}."),
            "The energy levels are E_n = n^2*pi^2*hbar^2/(2*m*L^2), which carries units of energy.".into(),
            format!("Substituting m = {m} and L = {l} gives E_{n} = {e:.6} in natural units."),
            "The energy is strictly positive, consistent with the zero-point energy of a bound state.".into(),
        ],
        claims: vec![
            "@claim{kind=final_expression, expr=n^2*pi^2*hbar^2/(2*m*L^2), dims=n:1; m:M; L:L, target=energy}".into(),
            format!(
                "@claim{{kind=numeric, value={}, reference=n^2*pi^2*hbar^2/(2*m*L^2), at=n={n}; m={m}; L={l}}}",
                num(e)
            ),
            format!("@claim{{kind=energy, value={}, n={n}, system=bound_state}}", num(e)),
            format!("@claim{{kind=quantum_number, name=n, value={n}, domain=positive_integer}}"),
        ],
        difficulty: Difficulty::Easy,
    }
}

fn family_oscillator(rng: &mut ChaCha8Rng) -> Problem {
    let n: u32 = rng.random_range(0..=6);
    let omega = f64::from(rng.random_range(1..=9u32)) / 2.0;
    let e = (f64::from(n) + 0.5) * omega;
    Problem {
        topic: "Harmonic Oscillator",
        question: format!(
            "A quantum harmonic oscillator has angular frequency omega = {omega} (hbar = 1). What is the energy of the state with n = {n}?"
        ),
        prose: vec![
            "Write the Hamiltonian with ladder operators as H = hbar*omega*(adag*a + 1/2).".into(),
            "The number operator adag*a has non-negative integer eigenvalues n.".into(),
            "Hence E_n = (n + 1/2)*hbar*omega, which has units of energy.".into(),
            format!("For n = {n} and omega = {omega} this gives E = {e}."),
            "Even the ground state keeps the zero-point energy hbar*omega/2.".into(),
        ],
        claims: vec![
            "@claim{kind=final_expression, expr=(n+1/2)*hbar*omega, dims=n:1; omega:T^-1, target=energy}".into(),
            format!("@claim{{kind=numeric, value={}, reference=(n+1/2)*hbar*omega, at=n={n}; omega={omega}}}", num(e)),
            format!("@claim{{kind=energy, value={}, system=bound_state}}", num(e)),
            format!("@claim{{kind=quantum_number, name=n, value={n}, domain=nonnegative_integer}}"),
        ],
        difficulty: Difficulty::Easy,
    }
}

fn family_spin(rng: &mut ChaCha8Rng) -> Problem {
    let theta = f64::from(rng.random_range(1..=30u32)) / 10.0;
    let half = theta / 2.0;
    let (c, s) = (half.cos(), half.sin());
    Problem {
        topic: "Spin and Measurement",
        question: format!(
            "A spin-1/2 particle is prepared along an axis tilted by theta = {theta} rad from z. Give the state in the z basis and the outcome probabilities of a z measurement."
        ),
        prose: vec![
            "A spin tilted by theta in the x-z plane is |psi> = cos(theta/2)|up> + sin(theta/2)|down>.".into(),
            format!("With theta = {theta} the amplitudes are cos({half}) and sin({half})."),
            "The Born rule gives the probabilities as squared moduli of the amplitudes.".into(),
            "The state is normalized because cos^2 + sin^2 = 1, so the probabilities sum to one.".into(),
        ],
        claims: vec![
            format!("@claim{{kind=state_vector, m=[[cos({half})],[sin({half})]]}}"),
            format!("@claim{{kind=probabilities, values=[{},{}]}}", num(c * c), num(s * s)),
        ],
        difficulty: Difficulty::Medium,
    }
}

fn family_unitary(rng: &mut ChaCha8Rng) -> Problem {
    let phi = f64::from(rng.random_range(1..=40u32)) / 10.0;
    let (matrix, what) = if rng.random_bool(0.5) {
        (format!("[[cos({phi}),-sin({phi})],[sin({phi}),cos({phi})]]"), "a real rotation by the angle phi")
    } else {
        (format!("[[1,0],[0,exp(I*{phi})]]"), "a relative phase gate exp(i*phi) on the lower level")
    };
    Problem {
        topic: "Quantum Gates",
        question: format!("Write the two-level evolution operator implementing {what} with phi = {phi} and show it is unitary."),
        prose: vec![
            format!("The operator is {what}."),
            "Closed-system evolution must preserve the norm of every state.".into(),
            "Multiplying by the conjugate transpose gives U^dagger U = I, so the operator is unitary.".into(),
            "Its eigenvalues therefore lie on the unit circle.".into(),
        ],
        claims: vec![format!("@claim{{kind=unitary_evolution, m={matrix}}}")],
        difficulty: Difficulty::Medium,
    }
}

fn real_matrix_literal(m: &[[f64; 2]; 2]) -> String {
    format!("[[{},{}],[{},{}]]", num(m[0][0]), num(m[0][1]), num(m[1][0]), num(m[1][1]))
}

fn family_density(rng: &mut ChaCha8Rng) -> Problem {
    let p = f64::from(rng.random_range(5..=45u32)) / 50.0;
    let t = f64::from(rng.random_range(1..=30u32)) / 10.0;
    let (c, s) = (t.cos(), t.sin());
    let (p1, p2) = (p, 1.0 - p);
    let rho = [
        [p1 * c * c + p2 * s * s, (p1 - p2) * c * s],
        [(p1 - p2) * c * s, p1 * s * s + p2 * c * c],
    ];
    let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
    Problem {
        topic: "Mixed States",
        question: format!(
            "A qubit is in the mixture of two orthogonal states rotated by t = {t} rad with weights {p1} and {p2}. Give its density matrix and spectrum."
        ),
        prose: vec![
            "A mixed state is rho = sum_i p_i |phi_i><phi_i| with orthonormal phi_i.".into(),
            format!("Rotating the computational basis by t = {t} gives the eigenvectors."),
            "The density matrix is Hermitian with unit trace.".into(),
            format!("Its eigenvalues are the mixing weights {lo} and {hi}, both non-negative."),
        ],
        claims: vec![
            format!("@claim{{kind=density_matrix, m={}}}", real_matrix_literal(&rho)),
            format!("@claim{{kind=eigenvalues, m={}, values=[{},{}]}}", real_matrix_literal(&rho), num(lo), num(hi)),
        ],
        difficulty: Difficulty::Hard,
    }
}

fn family_observable(rng: &mut ChaCha8Rng) -> Problem {
    let a = f64::from(rng.random_range(-4..=4i32)) / 2.0;
    let d = f64::from(rng.random_range(-4..=4i32)) / 2.0;
    let b = f64::from(rng.random_range(0..=4i32)) / 4.0;
    let c = f64::from(rng.random_range(1..=4i32)) / 4.0;
    let mean = (a + d) / 2.0;
    let radius = (((a - d) / 2.0).powi(2) + b * b + c * c).sqrt();
    let mut m = ComplexMatrix::zeros(2, 2);
    m.set(0, 0, Complex64::new(a, 0.0));
    m.set(0, 1, Complex64::new(b, -c));
    m.set(1, 0, Complex64::new(b, c));
    m.set(1, 1, Complex64::new(d, 0.0));
    Problem {
        topic: "Observables",
        question: format!(
            "Consider the qubit observable with diagonal entries {a}, {d} and off-diagonal coupling {} . Find its eigenvalues.",
            format_complex(Complex64::new(b, -c))
        ),
        prose: vec![
            "Physical observables are represented by Hermitian operators.".into(),
            "For a 2x2 Hermitian matrix the eigenvalues are (a+d)/2 +- sqrt(((a-d)/2)^2 + |b|^2).".into(),
            format!("Here the centre is {mean} and the splitting radius is {radius:.6}."),
            "Both eigenvalues are real, as required for measurement outcomes.".into(),
        ],
        claims: vec![
            format!("@claim{{kind=observable, m={m}}}"),
            format!("@claim{{kind=eigenvalues, m={m}, values=[{},{}]}}", num(mean - radius), num(mean + radius)),
        ],
        difficulty: Difficulty::Medium,
    }
}

fn family_ladder(rng: &mut ChaCha8Rng) -> Problem {
    let (question, claim, note) = match rng.random_range(0..3u32) {
        0 => (
            "For H = hbar*omega*adag*a, show that [a(t), adag(t)] does not depend on time.",
            "@claim{kind=commutator, A=a*exp(-I*omega*t), B=adag*exp(I*omega*t), result=1}",
            "the phases cancel and the canonical commutator [a, adag] = 1 survives",
        ),
        1 => (
            "Compute the commutator of the number operator N = adag*a with the annihilation operator a.",
            "@claim{kind=commutator, A=num, B=a, result=-a}",
            "using [adag*a, a] = [adag, a]*a = -a",
        ),
        _ => (
            "Compute the commutator of the number operator N = adag*a with the creation operator adag.",
            "@claim{kind=commutator, A=num, B=adag, result=adag}",
            "using [adag*a, adag] = adag*[a, adag] = adag",
        ),
    };
    Problem {
        topic: "Ladder Operators",
        question: question.into(),
        prose: vec![
            "Start from the canonical relation [a, adag] = 1.".into(),
            format!("Expanding the commutator, {note}."),
            "The result is consistent with the algebra of the harmonic oscillator.".into(),
            "A numerical check on a truncated Fock space reproduces the same operator identity.".into(),
        ],
        claims: vec![claim.into()],
        difficulty: Difficulty::Hard,
    }
}

fn family_pauli(rng: &mut ChaCha8Rng) -> Problem {
    let (a, b, result, names) = match rng.random_range(0..3u32) {
        0 => ("[[0,1],[1,0]]", "[[0,-I],[I,0]]", "[[2*I,0],[0,-2*I]]", ("sigma_x", "sigma_y", "2i*sigma_z")),
        1 => ("[[0,-I],[I,0]]", "[[1,0],[0,-1]]", "[[0,2*I],[2*I,0]]", ("sigma_y", "sigma_z", "2i*sigma_x")),
        _ => ("[[1,0],[0,-1]]", "[[0,1],[1,0]]", "[[0,2],[-2,0]]", ("sigma_z", "sigma_x", "2i*sigma_y")),
    };
    Problem {
        topic: "Spin Algebra",
        question: format!("Evaluate the commutator [{}, {}] of the Pauli matrices.", names.0, names.1),
        prose: vec![
            "The Pauli matrices satisfy [sigma_i, sigma_j] = 2i*epsilon_ijk*sigma_k.".into(),
            format!("Multiplying out the matrices, [{}, {}] = {}.", names.0, names.1, names.2),
            "The result is anti-Hermitian, as any commutator of Hermitian operators must be.".into(),
        ],
        claims: vec![format!("@claim{{kind=commutator, A={a}, B={b}, result={result}}}")],
        difficulty: Difficulty::Easy,
    }
}

type Family = fn(&mut ChaCha8Rng) -> Problem;

const FAMILIES: [Family; 8] = [
    family_box,
    family_oscillator,
    family_spin,
    family_unitary,
    family_density,
    family_observable,
    family_ladder,
    family_pauli,
];

fn render(problem: &Problem, prose_take: usize, think: bool) -> String {
    let mut out = String::new();
    if think {
        out.push_str("<think>Identify the governing relation, then substitute and check the constraints.</think>\n");
    }
    for sentence in problem.prose.iter().take(prose_take) {
        out.push_str(sentence);
        out.push('\n');
    }
    for claim in &problem.claims {
        out.push_str(claim);
        out.push('\n');
    }
    out
}

fn random_task_type(rng: &mut ChaCha8Rng) -> TaskType {
    if rng.random_bool(0.6) {
        TaskType::ProblemSolving
    } else {
        TaskType::ALL[rng.random_range(0..4)]
    }
}

/// Seeded generator of correct annotated answers with a reference answer.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    rng: ChaCha8Rng,
    next_id: usize,
}

impl SyntheticCorpus {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_id: 0,
        }
    }

    fn problem(&mut self) -> Problem {
        let family = FAMILIES[self.rng.random_range(0..FAMILIES.len())];
        family(&mut self.rng)
    }

    fn record(&mut self, problem: &Problem, answer: String) -> SampleRecord {
        self.next_id += 1;
        SampleRecord {
            id: format!("syn-{:05}", self.next_id),
            task_type: random_task_type(&mut self.rng),
            topic: problem.topic.into(),
            difficulty: problem.difficulty,
            question: format!("{SYSTEM_NOTE} {}", problem.question),
            answer,
            reference_answer: Some(render(problem, problem.prose.len(), false)),
            think_trace: None,
        }
    }

    /// One correct answer; prose completeness varies between records.
    pub fn positive(&mut self) -> SampleRecord {
        let problem = self.problem();
        let take = self.rng.random_range(1..=problem.prose.len());
        let think = self.rng.random_bool(0.3);
        let answer = render(&problem, take, think);
        self.record(&problem, answer)
    }

    pub fn take(&mut self, n: usize) -> Vec<SampleRecord> {
        (0..n).map(|_| self.positive()).collect()
    }

    /// A question with `n` candidate answers of latent quality `q ∈ [0,1)`.
    ///
    /// A candidate is correct with probability `q` (otherwise one claim is
    /// corrupted) and includes a share of the explanatory prose close to `q`.
    pub fn candidate_pool(&mut self, n: usize, corruptor: &Corruptor) -> (SampleRecord, Vec<Candidate>) {
        let problem = self.problem();
        let mut base = self.record(&problem, String::new());
        let mut candidates = Vec::with_capacity(n);
        for _ in 0..n {
            let quality: f64 = self.rng.random();
            let take = ((quality * problem.prose.len() as f64).round() as usize).max(1);
            let mut answer = render(&problem, take, false);
            let correct = self.rng.random_bool(quality);
            if !correct {
                let salt = self.rng.random();
                if let Some(bad) = corruptor.corrupt_text(&answer, salt) {
                    answer = bad;
                }
            }
            candidates.push(Candidate { answer, quality, correct });
        }
        base.answer = candidates.first().map(|c| c.answer.clone()).unwrap_or_default();
        (base, candidates)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub answer: String,
    pub quality: f64,
    pub correct: bool,
}

/// Rule-based hard-negative generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Corruptor {
    /// Probability that a fixture also yields a corrupted copy.
    pub rate: f64,
    pub seed: u64,
}

impl Default for Corruptor {
    fn default() -> Self {
        Self { rate: 1.0, seed: 11 }
    }
}

fn scale_expr(e: &Expr, factor: f64) -> Expr {
    Expr::Binary(crate::expr::BinOp::Mul, Box::new(Expr::Num(factor)), Box::new(e.clone()))
}

fn shift_lowest_eigenvalue(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let eig = hermitian_eigen(m, 1e-8).ok()?;
    let mut values = eig.values.clone();
    let n = values.len();
    if n < 2 {
        return None;
    }
    // move the lowest eigenvalue to -0.05 and give the difference to the highest, keeping the trace
    let delta = values[0] + 0.05;
    values[0] = -0.05;
    values[n - 1] += delta;
    Some(HermitianEigen { values, vectors: eig.vectors }.reconstruct())
}

impl Corruptor {
    pub fn new(rate: f64, seed: u64) -> Self {
        Self { rate, seed }
    }

    /// Applies one corruption rule to one claim.
    pub fn corrupt_claim(body: &ClaimBody) -> Option<ClaimBody> {
        let out = match body {
            ClaimBody::FinalExpression { expr, reference, dims, target } => ClaimBody::FinalExpression {
                expr: scale_expr(expr, 2.0),
                reference: reference.clone(),
                dims: dims.clone(),
                target: *target,
            },
            ClaimBody::NumericValue { value, reference, at, units } => {
                let is_zero = matches!(value, Expr::Num(x) if *x == 0.0);
                let value = if is_zero {
                    Expr::Num(1.0)
                } else {
                    scale_expr(value, 1.5)
                };
                ClaimBody::NumericValue {
                    value,
                    reference: reference.clone(),
                    at: at.clone(),
                    units: *units,
                }
            }
            ClaimBody::Matrix { kind, matrix } => {
                let matrix = match kind {
                    MatrixKind::UnitaryEvolution | MatrixKind::StateVector => matrix.scale(Complex64::new(1.1, 0.0)),
                    MatrixKind::DensityMatrix => shift_lowest_eigenvalue(matrix)?,
                    MatrixKind::Observable => {
                        let mut m = matrix.clone();
                        let (i, j) = if m.rows() > 1 { (0, 1) } else { (0, 0) };
                        m.set(i, j, m.get(i, j) + Complex64::new(0.0, 0.3));
                        m
                    }
                };
                ClaimBody::Matrix { kind: *kind, matrix }
            }
            ClaimBody::Commutator { a, b, result, at } => {
                let result = match result {
                    Operand::Expr(Expr::Num(x)) if *x == 1.0 => {
                        Operand::Expr(crate::expr::parse_expr("exp(-I*omega*t)").ok()?)
                    }
                    Operand::Expr(e) => Operand::Expr(Expr::Neg(Box::new(e.clone()))),
                    Operand::Matrix(m) => Operand::Matrix(m.scale(Complex64::new(-1.0, 0.0))),
                };
                ClaimBody::Commutator {
                    a: a.clone(),
                    b: b.clone(),
                    result,
                    at: at.clone(),
                }
            }
            ClaimBody::Probabilities(values) => {
                let mut values = values.clone();
                *values.first_mut()? += 0.1;
                ClaimBody::Probabilities(values)
            }
            ClaimBody::Energy { system, at, .. } => ClaimBody::Energy {
                value: Expr::Num(0.0),
                quantum_number: Some(0.0),
                system: *system,
                at: at.clone(),
            },
            ClaimBody::Eigenvalues { matrix, values } => {
                let mut values = values.clone();
                *values.last_mut()? += Complex64::new(0.1, 0.0);
                ClaimBody::Eigenvalues { matrix: matrix.clone(), values }
            }
            ClaimBody::QuantumNumber { name, domain, .. } => ClaimBody::QuantumNumber {
                name: name.clone(),
                value: -1.0,
                domain: *domain,
            },
        };
        Some(out)
    }

    /// Rewrites one claim block in `answer`, chosen by `salt`. `None` if nothing is corruptible.
    pub fn corrupt_text(&self, answer: &str, salt: u64) -> Option<String> {
        let bundle = extract_claims(answer);
        if bundle.claims.is_empty() || bundle.is_unparsable() {
            return None;
        }
        let mut order: Vec<usize> = (0..bundle.claims.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed ^ salt));
        order.into_iter().find_map(|i| {
            let claim = &bundle.claims[i];
            let bad = Self::corrupt_claim(&claim.body)?;
            let mut out = String::with_capacity(answer.len() + 16);
            out.push_str(&answer[..claim.span.start]);
            out.push_str(&bad.to_string());
            out.push_str(&answer[claim.span.end..]);
            Some(out)
        })
    }

    pub fn corrupt(&self, record: &SampleRecord, salt: u64) -> Option<SampleRecord> {
        let answer = self.corrupt_text(&record.answer, salt)?;
        Some(SampleRecord {
            id: format!("{}-neg", record.id),
            answer,
            ..record.clone()
        })
    }
}

/// Cell counts of a deterministic-vs-semantic confusion table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedCells {
    pub det_pass_sem_pass: usize,
    pub det_pass_sem_fail: usize,
    pub det_fail_sem_pass: usize,
    pub det_fail_sem_fail: usize,
}

/// Builds verification records whose flags realise the given confusion cells and
/// per-dimension semantic pass counts at threshold 0.8.
///
/// Every failing dimension is placed on a semantically failing record, so each
/// dimension's failure count must not exceed the number of such records and,
/// together, the failures must cover all of them. Returns `None` otherwise.
pub fn planted_records(cells: PlantedCells, dim_passes: PerDim<usize>) -> Option<Vec<VerificationRecord>> {
    let n = cells.det_pass_sem_pass + cells.det_pass_sem_fail + cells.det_fail_sem_pass + cells.det_fail_sem_fail;
    let sem_fail = cells.det_pass_sem_fail + cells.det_fail_sem_fail;
    let fails = dim_passes.map(|_, p| n.checked_sub(*p));
    let fails = PerDim::new(fails.corr?, fails.phys?, fails.inst?);
    if fails.to_array().iter().any(|f| *f > sem_fail) || fails.to_array().iter().sum::<usize>() < sem_fail {
        return None;
    }
    // fill failure slots cyclically over the semantically failing records
    let mut failing = vec![PerDim::splat(false); sem_fail];
    let mut slot = 0;
    for dim in [crate::ses::EvalDimension::Phys, crate::ses::EvalDimension::Corr, crate::ses::EvalDimension::Inst] {
        for _ in 0..*fails.get(dim) {
            *failing[slot % sem_fail.max(1)].get_mut(dim) = true;
            slot += 1;
        }
    }
    let mut records = Vec::with_capacity(n);
    let mut push = |det: bool, flags: PerDim<bool>| {
        let scores: SemanticScores = flags.map(|_, failed| if *failed { 0.3 } else { 0.9 });
        let v: VerificationVector = if det {
            PerDim::new(Indicator::Pass, Indicator::Pass, Indicator::Unavailable)
        } else {
            PerDim::new(Indicator::Pass, Indicator::Fail, Indicator::Unavailable)
        };
        let semantic_pass = !flags.to_array().iter().any(|f| *f);
        let verdict = if det && semantic_pass { Verdict::Pass } else { Verdict::Fail };
        records.push(VerificationRecord {
            id: format!("planted-{:04}", records.len() + 1),
            task_type: TaskType::ProblemSolving,
            difficulty: Difficulty::Medium,
            v,
            reports: Vec::new(),
            scores: Some(scores),
            semantic_pass,
            deterministic_pass: det,
            verdict,
            rationale: String::new(),
        });
    };
    let mut fail_iter = failing.into_iter();
    for _ in 0..cells.det_pass_sem_pass {
        push(true, PerDim::splat(false));
    }
    for _ in 0..cells.det_fail_sem_pass {
        push(false, PerDim::splat(false));
    }
    for _ in 0..cells.det_pass_sem_fail {
        push(true, fail_iter.next()?);
    }
    for _ in 0..cells.det_fail_sem_fail {
        push(false, fail_iter.next()?);
    }
    Some(records)
}
