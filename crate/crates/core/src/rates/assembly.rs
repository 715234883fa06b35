//! Symbolic term assembly for the second-order survival probability.
//!
//! The survival amplitude of branch `n` is
//! `Ω = Σ_i ψ_i* ⟨i| V† R(τ) U(τ) |Ψ_n⟩` where `|Ψ_n⟩ = P_ψ|n⟩|vac⟩` and `R`
//! is the identity (effective rate) or the inverse system evolution
//! (modified rate). Expanding `U` and `R` to second order in Δ yields a list
//! of amplitude terms, each a coefficient times a product of bath
//! displacements `e^{sχ(t)}`. The survival probability `⟨Ω†Ω⟩` pairs these
//! terms; every pair reduces to a scalar prefactor times a kernel
//! `e^{iε(phase)} exp(Σ_{j<k} s_j s_k Φ_C*(t_j − t_k))` integrated over a
//! point, a line, a triangle or a square.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::state::sigma;

/// Time arguments that can appear in a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Time {
    Zero,
    V2,
    V1,
    Tau,
}

impl Time {
    fn rank(self) -> u8 {
        self as u8
    }
}

/// Integration domain of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Domain {
    Point,
    Line,
    Triangle,
    Square,
}

/// Which of the two preparation branches a table belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct Branch(pub usize);

/// Choice of the reference evolution removed before measuring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// Plain evolution: the effective decay rate Γ.
    Effective,
    /// Free system evolution undone before measuring: the modified rate Γₙ.
    Modified,
}

impl RateMode {
    pub fn name(self) -> &'static str {
        match self {
            RateMode::Effective => "effective",
            RateMode::Modified => "modified",
        }
    }
}

/// Local shape of a single amplitude term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Point,
    /// One variable `P ∈ [0, τ]`.
    Line,
    /// Ordered variables `P ≥ Q`.
    Triangle,
    /// Independent variables `P, Q ∈ [0, τ]`.
    Square,
}

impl Shape {
    fn order(self) -> usize {
        match self {
            Shape::Point => 0,
            Shape::Line => 1,
            Shape::Triangle | Shape::Square => 2,
        }
    }
}

/// Local time symbols inside one amplitude term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Local {
    Zero,
    Tau,
    P,
    Q,
}

/// ζ exponents `(ζ₁, ζ₁*, ζ₂, ζ₂*)`.
pub(crate) type ZetaPowers = [u8; 4];

#[derive(Debug, Clone)]
struct Amp {
    coeff: Complex64,
    zeta: ZetaPowers,
    /// Coefficients of ε·τ, ε·P, ε·Q in the phase.
    phase: [f64; 3],
    /// Displacements as (2·s, time).
    ops: Vec<(i8, Local)>,
    shape: Shape,
}

impl Amp {
    fn unit() -> Self {
        Amp {
            coeff: Complex64::new(1.0, 0.0),
            zeta: [0; 4],
            phase: [0.0; 3],
            ops: Vec::new(),
            shape: Shape::Point,
        }
    }

    /// Operator product `self · other`.
    fn then(&self, other: &Amp, shape: Shape) -> Amp {
        let mut zeta = self.zeta;
        for (z, o) in zeta.iter_mut().zip(other.zeta) {
            *z += o;
        }
        let mut ops = self.ops.clone();
        ops.extend_from_slice(&other.ops);
        Amp {
            coeff: self.coeff * other.coeff,
            zeta,
            phase: [
                self.phase[0] + other.phase[0],
                self.phase[1] + other.phase[1],
                self.phase[2] + other.phase[2],
            ],
            ops,
            shape,
        }
    }

    /// Renames the variable `P` to `Q` (used when a second Dyson layer
    /// contributes its own variable).
    fn rename_p_to_q(mut self) -> Amp {
        for op in &mut self.ops {
            if op.1 == Local::P {
                op.1 = Local::Q;
            }
        }
        self.phase = [self.phase[0], 0.0, self.phase[1]];
        self
    }
}

/// One scalar contribution `coeff · ζ-monomial · ∫ kernel`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Term {
    pub kernel: usize,
    pub coeff: Complex64,
    pub zeta: ZetaPowers,
}

/// Kernel `e^{iε(c·(τ, v₁, v₂))} exp(Σ_p cr_p Re L_p + i ci_p Im L_p)`
/// over a domain, with `L_p` ranging over [`PAIRS`].
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Kernel {
    pub domain: Domain,
    pub phase: [f64; 3],
    pub cr: [f64; 6],
    pub ci: [f64; 6],
}

/// Canonical ordered time pairs `(later, earlier)`; `L_p = Φ_C*(later − earlier)`.
pub(crate) const PAIRS: [(Time, Time); 6] = [
    (Time::Tau, Time::Zero),
    (Time::V1, Time::Zero),
    (Time::V2, Time::Zero),
    (Time::Tau, Time::V1),
    (Time::Tau, Time::V2),
    (Time::V1, Time::V2),
];

fn pair_index(a: Time, b: Time) -> usize {
    PAIRS
        .iter()
        .position(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
        .expect("distinct times always form a canonical pair")
}

/// Kernels and terms for one branch and mode.
#[derive(Debug, Clone, Default)]
pub(crate) struct TermTable {
    pub kernels: Vec<Kernel>,
    pub terms: Vec<Term>,
}

#[derive(Hash, PartialEq, Eq)]
struct KernelKey {
    domain: Domain,
    phase: [i32; 3],
    cr: [i32; 6],
    ci: [i32; 6],
}

/// Builds the table for branch `n`. `half_delta = Δ/2`.
pub(crate) fn build_table(branch: Branch, mode: RateMode, half_delta: f64) -> TermTable {
    let amps: Vec<Amp> = (0..2)
        .flat_map(|i| amplitude_terms(branch, mode, half_delta, i))
        .collect();
    let mut table = TermTable::default();
    let mut index: HashMap<KernelKey, usize> = HashMap::new();
    let mut merged: HashMap<(usize, ZetaPowers), Complex64> = HashMap::new();
    let mut order: Vec<(usize, ZetaPowers)> = Vec::new();
    for bra in &amps {
        for ket in &amps {
            if bra.shape.order() + ket.shape.order() > 2 {
                continue;
            }
            let Some((kernel, coeff, zeta)) = pair(bra, ket) else {
                continue;
            };
            let key = KernelKey {
                domain: kernel.domain,
                phase: kernel.phase.map(|x| (2.0 * x).round() as i32),
                cr: kernel.cr.map(|x| (4.0 * x).round() as i32),
                ci: kernel.ci.map(|x| (4.0 * x).round() as i32),
            };
            let k = *index.entry(key).or_insert_with(|| {
                table.kernels.push(kernel);
                table.kernels.len() - 1
            });
            let slot = merged.entry((k, zeta)).or_insert_with(|| {
                order.push((k, zeta));
                Complex64::new(0.0, 0.0)
            });
            *slot += coeff;
        }
    }
    table.terms = order
        .into_iter()
        .filter_map(|key| {
            let coeff = merged[&key];
            (coeff.norm() > 0.0).then_some(Term {
                kernel: key.0,
                coeff,
                zeta: key.1,
            })
        })
        .collect();
    table
}

/// `⟨i| V† R U |Ψ_n⟩` expanded to second order, with `ψ_i*` attached.
fn amplitude_terms(branch: Branch, mode: RateMode, half_delta: f64, i: usize) -> Vec<Amp> {
    let n = branch.0;
    let si = sigma(i);
    let mut head = Amp::unit();
    head.zeta[if i == 0 { 1 } else { 3 }] = 1;
    head.ops.push((-si, Local::Tau));
    if mode == RateMode::Effective {
        head.phase[0] = -0.5 * f64::from(si);
    }

    let comp = |j: usize| -> Amp {
        let mut a = Amp::unit();
        a.zeta[if j == 0 { 0 } else { 2 }] = 1;
        let shift = sigma(j) - sigma(n);
        if shift != 0 {
            a.ops.push((shift, Local::Zero));
        }
        a
    };
    let mi = Complex64::new(0.0, -half_delta);
    let pi = Complex64::new(0.0, half_delta);
    let second = Complex64::new(-half_delta * half_delta, 0.0);

    // ⟨j| U_I |Ψ_n⟩ in local variables P (≥ Q).
    let interaction = |j: usize| -> Vec<Amp> {
        let sj = f64::from(sigma(j));
        let mut out = vec![comp(j)];
        let mut first = Amp::unit();
        first.coeff = mi;
        first.phase[1] = sj;
        first.ops.push((2 * sigma(j), Local::P));
        out.push(first.then(&comp(1 - j), Shape::Line));
        let mut two = Amp::unit();
        two.coeff = second;
        two.phase[1] = sj;
        two.phase[2] = -sj;
        two.ops.push((2 * sigma(j), Local::P));
        two.ops.push((-2 * sigma(j), Local::Q));
        out.push(two.then(&comp(j), Shape::Triangle));
        out
    };

    let mut out = Vec::new();
    match mode {
        RateMode::Effective => {
            for a in interaction(i) {
                let shape = a.shape;
                out.push(head.then(&a, shape));
            }
        }
        RateMode::Modified => {
            // ⟨i| R |j⟩ with static bath operators evaluated at τ.
            let si_f = f64::from(si);
            for a in interaction(i) {
                let shape = a.shape;
                out.push(head.then(&a, shape));
            }
            let j = 1 - i;
            let mut r1 = Amp::unit();
            r1.coeff = pi;
            r1.phase[1] = si_f;
            r1.ops.push((2 * si, Local::Tau));
            for a in interaction(j) {
                match a.shape {
                    Shape::Point => out.push(head.then(&r1.then(&a, Shape::Line), Shape::Line)),
                    Shape::Line => {
                        let moved = a.rename_p_to_q();
                        out.push(head.then(&r1.then(&moved, Shape::Square), Shape::Square));
                    }
                    _ => {}
                }
            }
            let mut r2 = Amp::unit();
            r2.coeff = second;
            r2.phase[1] = -si_f;
            r2.phase[2] = si_f;
            out.push(head.then(&r2.then(&comp(i), Shape::Triangle), Shape::Triangle));
        }
    }
    out
}

/// Pairs `bra† · ket`; returns the kernel, coefficient and ζ powers.
fn pair(bra: &Amp, ket: &Amp) -> Option<(Kernel, Complex64, ZetaPowers)> {
    // Assign global variables.
    let (bra_map, ket_map, domain) = match (bra.shape, ket.shape) {
        (Shape::Point, s) | (s, Shape::Point) => {
            let d = match s {
                Shape::Point => Domain::Point,
                Shape::Line => Domain::Line,
                Shape::Triangle => Domain::Triangle,
                Shape::Square => Domain::Square,
            };
            ([Time::V1, Time::V2], [Time::V1, Time::V2], d)
        }
        (Shape::Line, Shape::Line) => ([Time::V1, Time::V2], [Time::V2, Time::V1], Domain::Square),
        _ => return None,
    };
    let resolve = |l: Local, map: [Time; 2]| match l {
        Local::Zero => Time::Zero,
        Local::Tau => Time::Tau,
        Local::P => map[0],
        Local::Q => map[1],
    };
    let mut phase = [0.0; 3];
    let mut add_phase = |p: [f64; 3], map: [Time; 2], sign: f64| {
        phase[0] += sign * p[0];
        for (k, t) in [(1, map[0]), (2, map[1])] {
            let slot = if t == Time::V1 { 1 } else { 2 };
            phase[slot] += sign * p[k];
        }
    };
    add_phase(bra.phase, bra_map, -1.0);
    add_phase(ket.phase, ket_map, 1.0);

    let mut ops: Vec<(f64, Time)> = Vec::with_capacity(bra.ops.len() + ket.ops.len());
    for &(s, t) in bra.ops.iter().rev() {
        ops.push((-0.5 * f64::from(s), resolve(t, bra_map)));
    }
    for &(s, t) in &ket.ops {
        ops.push((0.5 * f64::from(s), resolve(t, ket_map)));
    }
    let mut cr = [0.0; 6];
    let mut ci = [0.0; 6];
    for j in 0..ops.len() {
        for k in j + 1..ops.len() {
            let (sj, tj) = ops[j];
            let (sk, tk) = ops[k];
            if tj == tk {
                continue;
            }
            let w = sj * sk;
            let p = pair_index(tj, tk);
            // Φ_C*(t_j − t_k) is L_p when t_j is the later time, else its conjugate.
            if tj.rank() > tk.rank() {
                cr[p] += w;
                ci[p] += w;
            } else {
                cr[p] += w;
                ci[p] -= w;
            }
        }
    }
    let mut zeta = [bra.zeta[1], bra.zeta[0], bra.zeta[3], bra.zeta[2]];
    for (z, o) in zeta.iter_mut().zip(ket.zeta) {
        *z += o;
    }
    Some((
        Kernel {
            domain,
            phase,
            cr,
            ci,
        },
        bra.coeff.conj() * ket.coeff,
        zeta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_amplitude_carries_the_branch_displacement() {
        for mode in [RateMode::Effective, RateMode::Modified] {
            for n in 0..2 {
                for i in 0..2 {
                    for a in amplitude_terms(Branch(n), mode, 0.1, i) {
                        let net: i32 = a.ops.iter().map(|o| i32::from(o.0)).sum();
                        assert_eq!(
                            net,
                            -i32::from(sigma(n)),
                            "mode {mode:?} branch {n} row {i}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn zeroth_order_terms_sum_to_one_at_tau_zero() {
        // At τ → 0 every kernel tends to one; the point-domain coefficients
        // then give |Σ_i |ζ_i|²|² = 1 for any state.
        let t = build_table(Branch(1), RateMode::Effective, 0.0);
        let z1 = Complex64::new(0.6, 0.0);
        let z2 = Complex64::new(0.0, 0.8);
        let mut s = Complex64::new(0.0, 0.0);
        for term in &t.terms {
            let z = [z1, z1.conj(), z2, z2.conj()];
            let mut m = term.coeff;
            for (b, e) in z.iter().zip(term.zeta) {
                m *= b.powu(u32::from(e));
            }
            s += m;
        }
        assert!((s - 1.0).norm() < 1e-15);
    }

    #[test]
    fn modified_mode_has_more_kernels() {
        let e = build_table(Branch(1), RateMode::Effective, 0.05);
        let m = build_table(Branch(1), RateMode::Modified, 0.05);
        assert!(m.kernels.len() > e.kernels.len());
        assert!(e.kernels.iter().any(|k| k.domain == Domain::Square));
    }
}
