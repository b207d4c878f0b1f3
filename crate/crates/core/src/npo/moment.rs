//! Moment problems: the symbolic data of one entropy-bound relaxation at a
//! single quadrature node (or of a Bell-expression relaxation), and its
//! conversion to an explicit real semidefinite program.
//!
//! Moments are grouped into conjugation classes {w, w†}; the class key is
//! the smaller word. All constraint data here is real, so the moment matrix
//! can be taken real symmetric; the complex Hermitian embedding is kept as a
//! cross-check path.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::basis::{generate_basis, Scenario};
use super::monomial::{canonicalize, Family, Monomial, OperatorLabel, SubstitutionRules};
use super::NpoError;
use crate::protocols::{CorrelationTables, ProtocolSpec};
use crate::sdp::{Block, Constraint, MatEntry, SdpProblem};

/// One conjugation class of moments. `norm_bound` bounds |⟨w⟩| in any model
/// where each auxiliary operator has ‖Z‖² ≤ α.
#[derive(Debug, Clone)]
pub struct MomentClass {
    pub key: Monomial,
    pub norm_bound: f64,
    pub self_adjoint: bool,
}

/// Main moment-matrix entry: annihilated by orthogonality, or a class
/// reference (`conj` marks that the entry holds the conjugate of the key).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MainEntry {
    Zero,
    Moment { class: usize, conj: bool },
}

/// coeff · m(class) or coeff · conj(m(class)).
#[derive(Debug, Clone, Copy)]
pub struct LinTerm {
    pub class: usize,
    pub conj: bool,
    pub coeff: f64,
}

#[derive(Debug, Clone)]
pub struct Equality {
    pub label: String,
    pub terms: Vec<LinTerm>,
    pub rhs: f64,
}

/// One operator-inequality block α − Z†Z ⪰ 0 (or α − ZZ†) localized over a
/// low-level word basis; entries are affine in the moment classes.
#[derive(Debug, Clone)]
pub struct LocalizingBlock {
    pub label: String,
    pub basis_len: usize,
    /// Upper triangle, row-major.
    pub entries: Vec<Vec<LinTerm>>,
    pub trace_bound: f64,
}

#[derive(Debug, Clone)]
pub struct MomentProblem {
    pub scenario: Scenario,
    pub alpha: f64,
    pub basis: Vec<Monomial>,
    pub classes: Vec<MomentClass>,
    /// Upper triangle of the main moment matrix, row-major.
    pub main: Vec<MainEntry>,
    pub localizing: Vec<LocalizingBlock>,
    pub equalities: Vec<Equality>,
    pub objective: Vec<LinTerm>,
    pub main_trace_bound: f64,
}

/// How the A/B statistics constrain the relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbConstraintMode {
    /// Every probability p(a,b|x,y) for the selected y inputs.
    FullTable,
    /// A single disagreement-probability equality at one input pair, with
    /// B's outcome binned.
    QberOnly { x: usize, y: usize },
}

#[derive(Debug, Clone)]
pub struct EntropyOptions {
    pub level: usize,
    pub extras: Vec<String>,
    pub localizing_level: usize,
    pub ab_mode: AbConstraintMode,
}

impl EntropyOptions {
    pub fn from_spec(spec: &ProtocolSpec) -> Self {
        Self {
            level: spec.level,
            extras: spec.extra_monomials.clone(),
            localizing_level: 1,
            ab_mode: AbConstraintMode::FullTable,
        }
    }
}

/// Whether to exploit that all moments here are provably real, or to force
/// the Hermitian-to-real embedding (doubling every block).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealifyMode {
    Real,
    ForceComplex,
}

type WordSum = Vec<(f64, Vec<OperatorLabel>)>;

fn word_prod(a: &WordSum, b: &WordSum) -> WordSum {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (ca, wa) in a {
        for (cb, wb) in b {
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            out.push((ca * cb, w));
        }
    }
    out
}

/// Projector (family, outcome|setting) as a word sum, with the last outcome
/// eliminated through completeness.
fn op_sum(family: Family, setting: usize, outcome: usize, kept: usize) -> WordSum {
    if outcome < kept {
        vec![(
            1.0,
            vec![OperatorLabel::new(family, setting as u8, outcome as u8)],
        )]
    } else {
        let mut out = vec![(1.0, vec![])];
        for k in 0..kept {
            out.push((
                -1.0,
                vec![OperatorLabel::new(family, setting as u8, k as u8)],
            ));
        }
        out
    }
}

struct Registry {
    rules: SubstitutionRules,
    map: HashMap<Monomial, usize>,
    classes: Vec<MomentClass>,
}

impl Registry {
    fn new() -> Self {
        let mut r = Self {
            rules: SubstitutionRules,
            map: HashMap::new(),
            classes: Vec::new(),
        };
        // Class 0 is always the identity moment.
        r.class_of(&Monomial::identity());
        r
    }

    fn class_of(&mut self, w: &Monomial) -> (usize, bool) {
        let adj = w.adjoint(&self.rules);
        let self_adjoint = adj == *w;
        let key = if adj < *w { adj } else { w.clone() };
        let conj = !self_adjoint && *w != key;
        if let Some(&idx) = self.map.get(&key) {
            return (idx, conj);
        }
        let idx = self.classes.len();
        self.map.insert(key.clone(), idx);
        // Every letter is a projector or a normalized auxiliary, so |⟨w⟩| ≤ 1.
        self.classes.push(MomentClass {
            key,
            norm_bound: 1.0,
            self_adjoint,
        });
        (idx, conj)
    }

    /// Canonicalize a word sum into a linear expression over classes.
    fn expr(&mut self, words: &WordSum) -> Vec<LinTerm> {
        let mut acc: BTreeMap<(usize, bool), f64> = BTreeMap::new();
        for (coeff, w) in words {
            if let Some(c) = canonicalize(w, &self.rules) {
                let (class, conj) = self.class_of(&c);
                *acc.entry((class, conj)).or_insert(0.0) += coeff;
            }
        }
        acc.into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|((class, conj), coeff)| LinTerm { class, conj, coeff })
            .collect()
    }
}

fn upper_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn upper_idx(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * (2 * n - i + 1) / 2 + (j - i)
}

fn build_main(
    basis: &[Monomial],
    reg: &mut Registry,
) -> Vec<MainEntry> {
    let rules = reg.rules;
    let n = basis.len();
    let mut main = Vec::with_capacity(upper_len(n));
    let adjoints: Vec<Monomial> = basis.iter().map(|u| u.adjoint(&rules)).collect();
    for i in 0..n {
        for j in i..n {
            match adjoints[i].mul(&basis[j], &rules) {
                None => main.push(MainEntry::Zero),
                Some(w) => {
                    let (class, conj) = reg.class_of(&w);
                    main.push(MainEntry::Moment { class, conj });
                }
            }
        }
    }
    main
}

fn localizing_blocks(
    scenario: &Scenario,
    loc_level: usize,
    reg: &mut Registry,
) -> Result<Vec<LocalizingBlock>, NpoError> {
    let rules = reg.rules;
    let lbasis = generate_basis(scenario, loc_level, &[])?;
    let adjoints: Vec<Monomial> = lbasis.iter().map(|u| u.adjoint(&rules)).collect();
    // Diagonal entries are ⟨u†(1 − G)u⟩ ≤ ⟨u†u⟩ ≤ 1 in any model.
    let trace_bound = lbasis.len() as f64;
    let mut blocks = Vec::new();
    for a in 0..scenario.z_symbols {
        let z = OperatorLabel::new(Family::Z, 0, a as u8);
        let zd = OperatorLabel::new(Family::Zdag, 0, a as u8);
        for (tag, g) in [("ZdagZ", vec![zd, z]), ("ZZdag", vec![z, zd])] {
            let mut entries = Vec::with_capacity(upper_len(lbasis.len()));
            for i in 0..lbasis.len() {
                for j in i..lbasis.len() {
                    let mut words: WordSum = Vec::new();
                    let mut uv: Vec<OperatorLabel> = adjoints[i].labels().to_vec();
                    uv.extend_from_slice(lbasis[j].labels());
                    words.push((1.0, uv));
                    let mut ugv: Vec<OperatorLabel> = adjoints[i].labels().to_vec();
                    ugv.extend_from_slice(&g);
                    ugv.extend_from_slice(lbasis[j].labels());
                    words.push((-1.0, ugv));
                    entries.push(reg.expr(&words));
                }
            }
            blocks.push(LocalizingBlock {
                label: format!("{}[{}]", tag, a),
                basis_len: lbasis.len(),
                entries,
                trace_bound,
            });
        }
    }
    Ok(blocks)
}

/// The relaxation of one conditional-entropy term at quadrature node `t`:
/// minimize Σ_a ⟨A_{a|x*}(Z_a + Z_a† + (1−t)Z_a†Z_a) + t Z_aZ_a†⟩ over all
/// operator models reproducing the constrained statistics, with auxiliary
/// norm bounds ‖Z_a‖² ≤ α.
///
/// Internally the auxiliaries are normalized (Ẑ = Z/√α, ‖Ẑ‖ ≤ 1): the
/// localizing blocks impose 1 − Ẑ†Ẑ ⪰ 0 and the scale √α moves into the
/// objective coefficients. The value is unchanged while every moment stays
/// in [−1, 1], which keeps the certification trace bounds small.
pub fn build_entropy_problem(
    spec: &ProtocolSpec,
    tables: &CorrelationTables,
    key_x: usize,
    t: f64,
    alpha: f64,
    opts: &EntropyOptions,
) -> Result<MomentProblem, NpoError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(NpoError::BadNode(t));
    }
    let (b_settings, b_kept) = match opts.ab_mode {
        AbConstraintMode::FullTable => (
            spec.sdp_y_inputs.clone(),
            tables.p_ab_test.right_outcomes.len() - 1,
        ),
        AbConstraintMode::QberOnly { y, .. } => (vec![y], 1),
    };
    for &y in &b_settings {
        if y >= tables.p_ab_test.right_inputs {
            return Err(NpoError::MissingInput(y));
        }
    }
    let scenario = Scenario {
        a_settings: spec.x_angles.len(),
        a_kept: 1,
        b_settings,
        b_kept,
        t_settings: spec.z_angles.len(),
        t_kept: 1,
        z_symbols: 2,
    };

    let basis = generate_basis(&scenario, opts.level, &opts.extras)?;
    let mut reg = Registry::new();
    let main = build_main(&basis, &mut reg);
    let main_trace_bound = basis.len() as f64;

    let mut equalities = Vec::new();
    equalities.push(Equality {
        label: "normalization".into(),
        terms: vec![LinTerm {
            class: 0,
            conj: false,
            coeff: 1.0,
        }],
        rhs: 1.0,
    });

    if scenario.t_settings > 0 {
        let p_at = tables.p_at.as_ref().ok_or(NpoError::MissingTesterTable)?;
        for x in 0..scenario.a_settings {
            for z in 0..scenario.t_settings {
                for a in 0..2 {
                    for c in 0..2 {
                        let words = word_prod(
                            &op_sum(Family::A, x, a, 1),
                            &op_sum(Family::T, z, c, 1),
                        );
                        equalities.push(Equality {
                            label: format!("p_at({},{}|{},{})", a, c, x, z),
                            terms: reg.expr(&words),
                            rhs: p_at.p(a, c, x, z),
                        });
                    }
                }
            }
        }
    }

    match opts.ab_mode {
        AbConstraintMode::FullTable => {
            let n_b = tables.p_ab_test.right_outcomes.len();
            for x in 0..scenario.a_settings {
                for &y in &scenario.b_settings {
                    for a in 0..2 {
                        for b in 0..n_b {
                            let words = word_prod(
                                &op_sum(Family::A, x, a, 1),
                                &op_sum(Family::B, y, b, scenario.b_kept),
                            );
                            equalities.push(Equality {
                                label: format!("p_ab({},{}|{},{})", a, b, x, y),
                                terms: reg.expr(&words),
                                rhs: tables.p_ab_test.p(a, b, x, y),
                            });
                        }
                    }
                }
            }
        }
        AbConstraintMode::QberOnly { x, y } => {
            let binned = if tables.p_ab_test.right_outcomes.len() > 2 {
                tables
                    .p_ab_test
                    .bin_right(crate::qmodel::Outcome::Plus)
                    .expect("testing table with a no-click column bins")
            } else {
                tables.p_ab_test.clone()
            };
            let q = binned.p(0, 1, x, y) + binned.p(1, 0, x, y);
            let mut words = word_prod(&op_sum(Family::A, x, 0, 1), &op_sum(Family::B, y, 1, 1));
            words.extend(word_prod(
                &op_sum(Family::A, x, 1, 1),
                &op_sum(Family::B, y, 0, 1),
            ));
            equalities.push(Equality {
                label: format!("qber({},{})", x, y),
                terms: reg.expr(&words),
                rhs: q,
            });
        }
    }

    let sqrt_alpha = alpha.sqrt();
    let mut obj_words: WordSum = Vec::new();
    for a in 0..scenario.z_symbols {
        let za = OperatorLabel::new(Family::Z, 0, a as u8);
        let zda = OperatorLabel::new(Family::Zdag, 0, a as u8);
        let a_proj = op_sum(Family::A, key_x, a, 1);
        let inner: WordSum = vec![
            (sqrt_alpha, vec![za]),
            (sqrt_alpha, vec![zda]),
            ((1.0 - t) * alpha, vec![zda, za]),
        ];
        obj_words.extend(word_prod(&a_proj, &inner));
        obj_words.push((t * alpha, vec![za, zda]));
    }
    let objective = reg.expr(&obj_words);

    let localizing = localizing_blocks(&scenario, opts.localizing_level, &mut reg)?;

    Ok(MomentProblem {
        scenario,
        alpha,
        basis,
        classes: reg.classes,
        main,
        localizing,
        equalities,
        objective,
        main_trace_bound,
    })
}

/// Relaxation of a Bell-expression maximum over two commuting projective
/// parties (A and B families): the objective is −Σ c·E(x,y) with
/// E(x,y) = 4⟨A_{0|x}B_{0|y}⟩ − 2⟨A_{0|x}⟩ − 2⟨B_{0|y}⟩ + 1, so the
/// certified minimum negated upper-bounds the Bell value.
pub fn build_bell_problem(
    scenario: &Scenario,
    correlator_terms: &[(usize, usize, f64)],
    level: usize,
    extras: &[String],
) -> Result<MomentProblem, NpoError> {
    let basis = generate_basis(scenario, level, extras)?;
    let mut reg = Registry::new();
    let main = build_main(&basis, &mut reg);
    let mut obj_words: WordSum = Vec::new();
    for &(x, y, c) in correlator_terms {
        let ax = OperatorLabel::new(Family::A, x as u8, 0);
        let by = OperatorLabel::new(Family::B, y as u8, 0);
        obj_words.push((-4.0 * c, vec![ax, by]));
        obj_words.push((2.0 * c, vec![ax]));
        obj_words.push((2.0 * c, vec![by]));
        obj_words.push((-c, vec![]));
    }
    let objective = reg.expr(&obj_words);
    let equalities = vec![Equality {
        label: "normalization".into(),
        terms: vec![LinTerm {
            class: 0,
            conj: false,
            coeff: 1.0,
        }],
        rhs: 1.0,
    }];
    let main_trace_bound = basis.len() as f64;
    Ok(MomentProblem {
        scenario: scenario.clone(),
        alpha: 1.0,
        basis,
        classes: reg.classes,
        main,
        localizing: vec![],
        equalities,
        objective,
        main_trace_bound,
    })
}

impl MomentProblem {
    pub fn main_entry(&self, i: usize, j: usize) -> &MainEntry {
        let n = self.basis.len();
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.main[upper_idx(n, i, j)]
    }

    /// Deterministic textual form; stable across runs, suitable for golden
    /// tests and content-addressed caching.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let sc = &self.scenario;
        let _ = writeln!(
            s,
            "scenario a={}x{} b={:?}x{} t={}x{} z={} alpha={:.17e}",
            sc.a_settings,
            sc.a_kept,
            sc.b_settings,
            sc.b_kept,
            sc.t_settings,
            sc.t_kept,
            sc.z_symbols,
            self.alpha
        );
        let _ = writeln!(s, "basis {} trace_bound {:.17e}", self.basis.len(), self.main_trace_bound);
        for w in &self.basis {
            let _ = writeln!(s, "  {}", w);
        }
        let _ = writeln!(s, "classes {}", self.classes.len());
        for (k, c) in self.classes.iter().enumerate() {
            let _ = writeln!(
                s,
                "  {}: {} bound={:.17e}{}",
                k,
                c.key,
                c.norm_bound,
                if c.self_adjoint { " selfadj" } else { "" }
            );
        }
        let fmt_terms = |terms: &[LinTerm]| -> String {
            terms
                .iter()
                .map(|t| {
                    format!(
                        "{:+.17e}*m{}{}",
                        t.coeff,
                        t.class,
                        if t.conj { "~" } else { "" }
                    )
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(s, "main");
        let n = self.basis.len();
        for i in 0..n {
            for j in i..n {
                match self.main[upper_idx(n, i, j)] {
                    MainEntry::Zero => {
                        let _ = writeln!(s, "  {} {} 0", i, j);
                    }
                    MainEntry::Moment { class, conj } => {
                        let _ = writeln!(
                            s,
                            "  {} {} m{}{}",
                            i,
                            j,
                            class,
                            if conj { "~" } else { "" }
                        );
                    }
                }
            }
        }
        for b in &self.localizing {
            let _ = writeln!(
                s,
                "loc {} size={} trace_bound={:.17e}",
                b.label, b.basis_len, b.trace_bound
            );
            let mut k = 0;
            for i in 0..b.basis_len {
                for j in i..b.basis_len {
                    let _ = writeln!(s, "  {} {} {}", i, j, fmt_terms(&b.entries[k]));
                    k += 1;
                }
            }
        }
        for e in &self.equalities {
            let _ = writeln!(s, "eq {}: {} = {:.17e}", e.label, fmt_terms(&e.terms), e.rhs);
        }
        let _ = writeln!(s, "obj {}", fmt_terms(&self.objective));
        s
    }
}

struct FunctionalBuilder {
    acc: BTreeMap<(usize, usize, usize), f64>,
}

impl FunctionalBuilder {
    fn new() -> Self {
        Self {
            acc: BTreeMap::new(),
        }
    }

    /// Add c·X_{block}(i,j) as an inner-product functional (halving
    /// off-diagonal matrix entries, which are counted twice).
    fn add(&mut self, block: usize, i: usize, j: usize, c: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let v = if i == j { c } else { 0.5 * c };
        *self.acc.entry((block, i, j)).or_insert(0.0) += v;
    }

    fn entries(self) -> Vec<MatEntry> {
        self.acc
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((block, row, col), value)| MatEntry {
                block,
                row,
                col,
                value,
            })
            .collect()
    }

    fn into_constraint(self, rhs: f64) -> Constraint {
        Constraint {
            entries: self.entries(),
            rhs,
        }
    }
}

/// First main-block occurrence of every class: (row, col, conjugated).
fn representatives(mp: &MomentProblem) -> Vec<Option<(usize, usize, bool)>> {
    let n = mp.basis.len();
    let mut reps: Vec<Option<(usize, usize, bool)>> = vec![None; mp.classes.len()];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            if let MainEntry::Moment { class, conj } = mp.main[k] {
                if reps[class].is_none() {
                    reps[class] = Some((i, j, conj));
                }
            }
            k += 1;
        }
    }
    reps
}

fn rep_of(
    reps: &[Option<(usize, usize, bool)>],
    classes: &[MomentClass],
    class: usize,
) -> Result<(usize, usize, bool), NpoError> {
    reps[class]
        .ok_or_else(|| NpoError::UnrepresentedMoment(classes[class].key.to_string()))
}

/// Convert a moment problem to an explicit SDP. In `Real` mode every moment
/// is a single real scalar; `ForceComplex` keeps independent real and
/// imaginary parts through the standard Hermitian-to-symmetric embedding
/// (each block doubles) and is used to validate that the real reduction is
/// lossless.
pub fn realify(mp: &MomentProblem, mode: RealifyMode) -> Result<SdpProblem, NpoError> {
    match mode {
        RealifyMode::Real => realify_real(mp),
        RealifyMode::ForceComplex => realify_complex(mp),
    }
}

fn realify_real(mp: &MomentProblem) -> Result<SdpProblem, NpoError> {
    let n = mp.basis.len();
    let reps = representatives(mp);
    let mut blocks = vec![Block {
        size: n,
        diagonal: false,
        trace_bound: mp.main_trace_bound,
    }];
    for b in &mp.localizing {
        blocks.push(Block {
            size: b.basis_len,
            diagonal: false,
            trace_bound: b.trace_bound,
        });
    }

    let mut constraints = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            match mp.main[k] {
                MainEntry::Zero => {
                    let mut f = FunctionalBuilder::new();
                    f.add(0, i, j, 1.0);
                    constraints.push(f.into_constraint(0.0));
                }
                MainEntry::Moment { class, .. } => {
                    let (ri, rj, _) = reps[class].expect("occurrence implies representative");
                    if (ri, rj) != (i, j) {
                        let mut f = FunctionalBuilder::new();
                        f.add(0, i, j, 1.0);
                        f.add(0, ri, rj, -1.0);
                        constraints.push(f.into_constraint(0.0));
                    }
                }
            }
            k += 1;
        }
    }

    for (bi, lb) in mp.localizing.iter().enumerate() {
        let block = bi + 1;
        let mut k = 0;
        for i in 0..lb.basis_len {
            for j in i..lb.basis_len {
                let mut f = FunctionalBuilder::new();
                f.add(block, i, j, 1.0);
                for t in &lb.entries[k] {
                    let (ri, rj, _) = rep_of(&reps, &mp.classes, t.class)?;
                    f.add(0, ri, rj, -t.coeff);
                }
                constraints.push(f.into_constraint(0.0));
                k += 1;
            }
        }
    }

    for e in &mp.equalities {
        let mut f = FunctionalBuilder::new();
        for t in &e.terms {
            let (ri, rj, _) = rep_of(&reps, &mp.classes, t.class)?;
            f.add(0, ri, rj, t.coeff);
        }
        constraints.push(f.into_constraint(e.rhs));
    }

    let mut obj = FunctionalBuilder::new();
    for t in &mp.objective {
        let (ri, rj, _) = rep_of(&reps, &mp.classes, t.class)?;
        obj.add(0, ri, rj, t.coeff);
    }

    Ok(SdpProblem {
        blocks,
        constraints,
        objective: obj.entries(),
    })
}

fn realify_complex(mp: &MomentProblem) -> Result<SdpProblem, NpoError> {
    let n = mp.basis.len();
    let reps = representatives(mp);
    let sgn = |conj: bool| if conj { -1.0 } else { 1.0 };
    let mut blocks = vec![Block {
        size: 2 * n,
        diagonal: false,
        trace_bound: 2.0 * mp.main_trace_bound,
    }];
    for b in &mp.localizing {
        blocks.push(Block {
            size: 2 * b.basis_len,
            diagonal: false,
            trace_bound: 2.0 * b.trace_bound,
        });
    }

    let mut constraints = Vec::new();
    let mut push = |entries: Vec<(usize, usize, usize, f64)>, rhs: f64| {
        let mut f = FunctionalBuilder::new();
        for (b, i, j, c) in entries {
            f.add(b, i, j, c);
        }
        constraints.push(f.into_constraint(rhs));
    };

    // Main block: M = X + iY embedded as [[X, −Y], [Y, X]]; the stored
    // symmetric matrix holds X in both diagonal copies and −Y_ij at
    // (i, n+j). Re(m(class)) lives at the class's first occurrence; the
    // imaginary slot there carries −σ₀·Im(m).
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            match mp.main[k] {
                MainEntry::Zero => {
                    push(vec![(0, i, j, 1.0)], 0.0);
                    push(vec![(0, n + i, n + j, 1.0)], 0.0);
                    push(vec![(0, i, n + j, 1.0)], 0.0);
                    if i < j {
                        push(vec![(0, j, n + i, 1.0)], 0.0);
                    }
                }
                MainEntry::Moment { class, conj } => {
                    push(vec![(0, n + i, n + j, 1.0), (0, i, j, -1.0)], 0.0);
                    if i < j {
                        push(vec![(0, i, n + j, 1.0), (0, j, n + i, 1.0)], 0.0);
                    } else {
                        push(vec![(0, i, n + i, 1.0)], 0.0);
                    }
                    let (ri, rj, rconj) =
                        reps[class].expect("occurrence implies representative");
                    if (ri, rj) == (i, j) {
                        if mp.classes[class].self_adjoint && i < j {
                            push(vec![(0, i, n + j, 1.0)], 0.0);
                        }
                    } else {
                        push(vec![(0, i, j, 1.0), (0, ri, rj, -1.0)], 0.0);
                        let s = sgn(conj) * sgn(rconj);
                        push(vec![(0, i, n + j, 1.0), (0, ri, n + rj, -s)], 0.0);
                    }
                }
            }
            k += 1;
        }
    }

    for (bi, lb) in mp.localizing.iter().enumerate() {
        let block = bi + 1;
        let ln = lb.basis_len;
        let mut k = 0;
        for i in 0..ln {
            for j in i..ln {
                // Real part ties to the real representatives.
                let mut re = vec![(block, i, j, 1.0)];
                let mut im = vec![(block, i, ln + j, 1.0)];
                for t in &lb.entries[k] {
                    let (ri, rj, rconj) = rep_of(&reps, &mp.classes, t.class)?;
                    re.push((0, ri, rj, -t.coeff));
                    im.push((0, ri, n + rj, -t.coeff * sgn(t.conj) * sgn(rconj)));
                }
                push(re, 0.0);
                push(im, 0.0);
                push(
                    vec![(block, ln + i, ln + j, 1.0), (block, i, j, -1.0)],
                    0.0,
                );
                if i < j {
                    push(
                        vec![(block, i, ln + j, 1.0), (block, j, ln + i, 1.0)],
                        0.0,
                    );
                } else {
                    push(vec![(block, i, ln + i, 1.0)], 0.0);
                }
                k += 1;
            }
        }
    }

    for e in &mp.equalities {
        let mut f = FunctionalBuilder::new();
        for t in &e.terms {
            let (ri, rj, _) = rep_of(&reps, &mp.classes, t.class)?;
            f.add(0, ri, rj, t.coeff);
        }
        constraints.push(f.into_constraint(e.rhs));
    }

    let mut obj = FunctionalBuilder::new();
    for t in &mp.objective {
        let (ri, rj, _) = rep_of(&reps, &mp.classes, t.class)?;
        obj.add(0, ri, rj, t.coeff);
    }

    Ok(SdpProblem {
        blocks,
        constraints,
        objective: obj.entries(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{honest_tables, table1_spec, NoiseParams, ProtocolName};

    fn ideal() -> NoiseParams {
        NoiseParams {
            eta_s: 1.0,
            eta_l: 1.0,
            visibility: 1.0,
        }
    }

    fn small_problem() -> MomentProblem {
        let spec = table1_spec(ProtocolName::RBb84);
        let tables = honest_tables(&spec, &ideal()).unwrap();
        let opts = EntropyOptions {
            level: 2,
            extras: vec![],
            localizing_level: 1,
            ab_mode: AbConstraintMode::FullTable,
        };
        build_entropy_problem(&spec, &tables, 0, 0.5, 3.0, &opts).unwrap()
    }

    #[test]
    fn identity_is_class_zero() {
        let mp = small_problem();
        assert!(mp.classes[0].key.is_empty());
        assert!(matches!(
            mp.main_entry(0, 0),
            MainEntry::Moment { class: 0, conj: false }
        ));
    }

    #[test]
    fn letter_count_matches_scenario() {
        let mp = small_problem();
        // A: 2, B: 2 settings × 2 kept, T: 2, Z: 2, Z†: 2.
        assert_eq!(mp.scenario.letters().len(), 12);
        let level1 = mp.basis.iter().filter(|w| w.len() == 1).count();
        assert_eq!(level1, 12);
    }

    #[test]
    fn diagonal_entries_are_self_adjoint_classes() {
        let mp = small_problem();
        for i in 0..mp.basis.len() {
            match *mp.main_entry(i, i) {
                MainEntry::Moment { class, conj } => {
                    assert!(mp.classes[class].self_adjoint);
                    assert!(!conj);
                }
                MainEntry::Zero => panic!("diagonal annihilated"),
            }
        }
    }

    #[test]
    fn four_localizing_blocks_with_bounds() {
        let mp = small_problem();
        assert_eq!(mp.localizing.len(), 4);
        for b in &mp.localizing {
            assert!(b.trace_bound > 0.0);
            assert_eq!(b.entries.len(), b.basis_len * (b.basis_len + 1) / 2);
        }
    }

    #[test]
    fn constraint_counts() {
        let mp = small_problem();
        // 1 normalization + 2·2·2·2 tester rows + 2·2·2·3 long-path rows.
        assert_eq!(mp.equalities.len(), 1 + 16 + 24);
    }

    #[test]
    fn qber_mode_single_row() {
        let spec = table1_spec(ProtocolName::RBb84);
        let noise = NoiseParams {
            eta_s: 1.0,
            eta_l: 0.8,
            visibility: 1.0,
        };
        let tables = honest_tables(&spec, &noise).unwrap();
        let opts = EntropyOptions {
            level: 2,
            extras: vec![],
            localizing_level: 1,
            ab_mode: AbConstraintMode::QberOnly { x: 1, y: 1 },
        };
        let mp = build_entropy_problem(&spec, &tables, 0, 0.5, 3.0, &opts).unwrap();
        assert_eq!(mp.equalities.len(), 1 + 16 + 1);
        let q = mp.equalities.last().unwrap();
        assert!((q.rhs - 0.1).abs() < 1e-10);
    }

    #[test]
    fn objective_value_at_t_one_limit() {
        // As t → 1 the objective's optimal value approaches −1; structurally,
        // the t-dependent coefficients must enter as (1−t) and t.
        let spec = table1_spec(ProtocolName::RBb84);
        let tables = honest_tables(&spec, &ideal()).unwrap();
        let opts = EntropyOptions {
            level: 1,
            extras: vec![],
            localizing_level: 1,
            ab_mode: AbConstraintMode::FullTable,
        };
        let a = build_entropy_problem(&spec, &tables, 0, 0.3, 5.0, &opts).unwrap();
        let b = build_entropy_problem(&spec, &tables, 0, 0.7, 5.0, &opts).unwrap();
        assert_eq!(a.objective.len(), b.objective.len());
        assert_ne!(
            a.dump(),
            b.dump(),
            "objective must depend on the quadrature node"
        );
    }

    #[test]
    fn dump_is_deterministic() {
        let a = small_problem().dump();
        let b = small_problem().dump();
        assert_eq!(a, b);
        assert!(a.contains("normalization"));
    }

    #[test]
    fn rejects_bad_node() {
        let spec = table1_spec(ProtocolName::RBb84);
        let tables = honest_tables(&spec, &ideal()).unwrap();
        let opts = EntropyOptions {
            level: 1,
            extras: vec![],
            localizing_level: 1,
            ab_mode: AbConstraintMode::FullTable,
        };
        assert!(build_entropy_problem(&spec, &tables, 0, 1.0, 3.0, &opts).is_err());
        assert!(build_entropy_problem(&spec, &tables, 0, 0.0, 3.0, &opts).is_err());
    }

    #[test]
    fn realify_produces_valid_sdp() {
        let mp = small_problem();
        let sdp = realify(&mp, RealifyMode::Real).unwrap();
        sdp.validate().unwrap();
        assert_eq!(sdp.blocks.len(), 5);
        assert_eq!(sdp.blocks[0].size, mp.basis.len());

        let emb = realify(&mp, RealifyMode::ForceComplex).unwrap();
        emb.validate().unwrap();
        assert_eq!(emb.blocks[0].size, 2 * mp.basis.len());
        assert!((emb.blocks[0].trace_bound - 2.0 * sdp.blocks[0].trace_bound).abs() < 1e-12);
    }

    #[test]
    fn realify_fails_when_moment_unrepresented() {
        // At level 1 without extras, localizing entries contain words like
        // Z†Z that have no main-block representative of the form u†v.
        let spec = table1_spec(ProtocolName::RBb84);
        let tables = honest_tables(&spec, &ideal()).unwrap();
        let opts = EntropyOptions {
            level: 1,
            extras: vec![],
            localizing_level: 1,
            ab_mode: AbConstraintMode::FullTable,
        };
        let mp = build_entropy_problem(&spec, &tables, 0, 0.5, 3.0, &opts).unwrap();
        match realify(&mp, RealifyMode::Real) {
            Err(NpoError::UnrepresentedMoment(_)) => {}
            other => panic!("expected unrepresented moment, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn bell_problem_objective() {
        let scenario = Scenario {
            a_settings: 2,
            a_kept: 1,
            b_settings: vec![0, 1],
            b_kept: 1,
            t_settings: 0,
            t_kept: 0,
            z_symbols: 0,
        };
        let terms = [
            (0, 0, 1.0),
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 1, -1.0),
        ];
        let mp = build_bell_problem(&scenario, &terms, 1, &["AB".into()]).unwrap();
        // Constant parts cancel: +1+1+1−1 scaled by −1 leaves −2 on identity.
        let id_coeff: f64 = mp
            .objective
            .iter()
            .filter(|t| t.class == 0)
            .map(|t| t.coeff)
            .sum();
        assert!((id_coeff + 2.0).abs() < 1e-12);
        let sdp = realify(&mp, RealifyMode::Real).unwrap();
        sdp.validate().unwrap();
    }
}
