//! Weight-class characteristics, summation functionals and the three-weight
//! constants that control the square function and Haar multipliers.
//!
//! Every supremum over dyadic intervals is an exhaustive maximum over the tree.
//! Subtree sums `Σ_{I ∈ 𝒟(J)}` are accumulated bottom-up in one pass.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dyadic::{check_same_tree, DyadicIndex, DyadicTree, StepWeight};
use crate::error::{Error, Result};
use crate::sequence::CarlesonSequence;

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::BadExponent(p))
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// `[ω]_{A_p} = max_I ⟨ω⟩_I ⟨ω^{-1/(p-1)}⟩_I^{p-1}`.
pub fn ap_characteristic(omega: &StepWeight, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let dual = omega.powf(-1.0 / (p - 1.0))?;
    Ok(max_of(omega.masses().iter().zip(dual.masses()).enumerate().map(
        |(i, (m, d))| {
            let len = DyadicIndex::from_heap_index(i).length();
            (m / len) * (d / len).powf(p - 1.0)
        },
    )))
}

/// `[ω]_{RH_p} = max_I ⟨ω^p⟩_I^{1/p} / ⟨ω⟩_I`.
pub fn rhp_characteristic(omega: &StepWeight, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let power = omega.powf(p)?;
    Ok(max_of(omega.masses().iter().zip(power.masses()).enumerate().map(
        |(i, (m, q))| {
            let len = DyadicIndex::from_heap_index(i).length();
            (q / len).powf(1.0 / p) / (m / len)
        },
    )))
}

/// `([ω]_{A_∞}, [ω]_{RH_1})`.
///
/// `A_∞` uses `⟨ω⟩_I exp(-⟨log ω⟩_I)`; `RH_1` uses the entropy
/// `⟨(ω/⟨ω⟩_I) log(ω/⟨ω⟩_I)⟩_I`, both from exact leaf sums.
pub fn a_inf_and_rh1(omega: &StepWeight) -> (f64, f64) {
    let tree = omega.tree();
    let logs: Vec<f64> = omega.leaves().iter().map(|v| v.ln()).collect();
    let log_integrals = tree.integrals(&logs);
    let mut a_inf = f64::NEG_INFINITY;
    let mut rh1 = f64::NEG_INFINITY;
    for index in tree.intervals() {
        let avg = omega.average_at(&index);
        let log_avg = log_integrals[index.heap_index()] / index.length();
        a_inf = a_inf.max(avg * (-log_avg).exp());
        let range = index.leaf_range(tree.depth());
        let count = range.len() as f64;
        let entropy = omega.leaves()[range]
            .iter()
            .map(|&v| {
                let r = v / avg;
                r * r.ln()
            })
            .sum::<f64>()
            / count;
        rh1 = rh1.max(entropy);
    }
    (a_inf, rh1)
}

/// `D(ω) = max_{I ≠ root} ω(Ĩ)/ω(I)`.
pub fn doubling_constant(omega: &StepWeight) -> f64 {
    max_of(
        omega
            .tree()
            .with_parent()
            .map(|i| omega.mass_at(&i.parent().unwrap()) / omega.mass_at(&i)),
    )
}

/// `[u,v]_{A_2(w)} = max_I ⟨v⟩_I^w ⟨u^{-1}⟩_I^w`.
pub fn joint_a2w(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<f64> {
    let terms = joint_a2w_terms(u, v, w)?;
    Ok(max_of(terms))
}

fn joint_a2w_terms(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<Vec<f64>> {
    check_same_tree(u.tree(), w.tree())?;
    check_same_tree(v.tree(), w.tree())?;
    let vw = v.product(w)?;
    let uinv_w = u.recip().product(w)?;
    Ok(w.masses()
        .iter()
        .zip(vw.masses())
        .zip(uinv_w.masses())
        .map(|((m, a), b)| (a / m) * (b / m))
        .collect())
}

/// `[u,v]_{Ã_2(w)} = max_{J ≠ root} (w(J*)/w(J̃))² ⟨u^{-1}⟩_J^w ⟨v⟩_J^w`.
pub fn restricted_a2w(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<f64> {
    let terms = joint_a2w_terms(u, v, w)?;
    Ok(max_of(w.tree().with_parent().map(|j| {
        let damping = w.mass_at(&j.sibling().unwrap()) / w.mass_at(&j.parent().unwrap());
        damping * damping * terms[j.heap_index()]
    })))
}

/// Joint `A_2(w)` restricted to intervals that have a parent.
pub fn joint_a2w_below_root(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<f64> {
    let terms = joint_a2w_terms(u, v, w)?;
    Ok(max_of(w.tree().with_parent().map(|j| terms[j.heap_index()])))
}

/// `[u,v]_{RH_p(σ)} = max_I (⟨v^p⟩_I^σ)^{1/p} / ⟨u⟩_I^σ`.
pub fn joint_rhp_weighted(u: &StepWeight, v: &StepWeight, sigma: &StepWeight, p: f64) -> Result<f64> {
    check_exponent(p)?;
    check_same_tree(u.tree(), sigma.tree())?;
    check_same_tree(v.tree(), sigma.tree())?;
    let vp = v.powf(p)?.product(sigma)?;
    let us = u.product(sigma)?;
    Ok(max_of(
        sigma
            .masses()
            .iter()
            .zip(vp.masses())
            .zip(us.masses())
            .map(|((s, a), b)| (a / s).powf(1.0 / p) / (b / s)),
    ))
}

/// The four equivalent three-weight quantities:
/// direct `max ⟨vw²⟩⟨u⁻¹⟩/⟨w⟩²`, `[uw, vw]_{A_2(w)}`, `[v⁻¹w⁻¹, u⁻¹w⁻¹]_{A_2(w)}`
/// and `[uw, v^{1/2}u^{1/2}w]²_{RH_2(u⁻¹)}`.
pub fn three_weight_forms(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<[f64; 4]> {
    let direct = three_weight_direct(u, v, w)?;
    let uw = u.product(w)?;
    let vw = v.product(w)?;
    let via_pair = joint_a2w(&uw, &vw, w)?;
    let via_dual = joint_a2w(&vw.recip(), &uw.recip(), w)?;
    let mixed = v.powf(0.5)?.product(&u.powf(0.5)?)?.product(w)?;
    let via_rh = joint_rhp_weighted(&uw, &mixed, &u.recip(), 2.0)?.powi(2);
    Ok([direct, via_pair, via_dual, via_rh])
}

fn three_weight_direct(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<f64> {
    check_same_tree(u.tree(), w.tree())?;
    let uinv = u.recip();
    let vw2 = v.product(&w.powf(2.0)?)?;
    Ok(max_of(
        w.masses()
            .iter()
            .zip(uinv.masses())
            .zip(vw2.masses())
            .map(|((m, a), b)| a * b / (m * m)),
    ))
}

/// Which summation condition [`summation_ratio`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummationMode {
    Ap,
    Rhp,
    Rh1,
    Fkp,
    #[serde(rename = "rhp-power")]
    RhpPower,
}

/// Plain `Δ_I g = ⟨g⟩_{I⁺} - ⟨g⟩_{I⁻}` for every non-leaf interval, heap-indexed.
pub(crate) fn plain_deltas(g: &StepWeight) -> Vec<f64> {
    g.tree()
        .non_leaf()
        .map(|i| g.average_at(&i.right()) - g.average_at(&i.left()))
        .collect()
}

/// Per-interval summands (zero on leaves) and the normalising average at `J`.
fn summation_terms(omega: &StepWeight, p: f64, mode: SummationMode) -> Result<(Vec<f64>, Vec<f64>)> {
    let tree = omega.tree();
    let mut terms = vec![0.0; tree.interval_count()];
    let avg = omega.averages();
    let normaliser: Vec<f64>;
    match mode {
        SummationMode::RhpPower => {
            check_exponent(p)?;
            let powered = omega.powf(p)?;
            let deltas = plain_deltas(&powered);
            for i in tree.non_leaf() {
                let h = i.heap_index();
                terms[h] = i.length() * deltas[h].powi(2) / avg[h].powf(p);
            }
            normaliser = powered.averages();
        }
        _ => {
            let deltas = plain_deltas(omega);
            let factor: Box<dyn Fn(f64) -> f64> = match mode {
                SummationMode::Ap => {
                    check_exponent(p)?;
                    Box::new(move |a: f64| a.powf(-1.0 / (p - 1.0)))
                }
                SummationMode::Rhp => {
                    check_exponent(p)?;
                    Box::new(move |a: f64| a.powf(p))
                }
                SummationMode::Rh1 => Box::new(|a: f64| a),
                _ => Box::new(|_| 1.0),
            };
            for i in tree.non_leaf() {
                let h = i.heap_index();
                terms[h] = i.length() * (deltas[h] / avg[h]).powi(2) * factor(avg[h]);
            }
            normaliser = avg.iter().map(|&a| factor(a)).collect();
        }
    }
    Ok((terms, normaliser))
}

/// Best local constant at `J` for the chosen summation condition:
/// `(1/|J|) Σ_{I ∈ 𝒟(J)} term_I` divided by the condition's right-hand average.
pub fn summation_ratio(omega: &StepWeight, p: f64, mode: SummationMode, j: &DyadicIndex) -> Result<f64> {
    omega.tree().check_non_leaf(j)?;
    let (terms, normaliser) = summation_terms(omega, p, mode)?;
    let sums = omega.tree().subtree_sums(&terms);
    let h = j.heap_index();
    Ok(sums[h] / j.length() / normaliser[h])
}

/// Maximum of [`summation_ratio`] over all non-leaf `J`.
pub fn summation_constant(omega: &StepWeight, p: f64, mode: SummationMode) -> Result<f64> {
    let tree = omega.tree();
    let (terms, normaliser) = summation_terms(omega, p, mode)?;
    let sums = tree.subtree_sums(&terms);
    Ok(max_of(tree.non_leaf().map(|j| {
        sums[j.heap_index()] / j.length() / normaliser[j.heap_index()]
    })))
}

/// Carleson intensity of `λ`: `max_J (1/|J|) Σ_{I ∈ 𝒟(J)} λ_I`, or, with a
/// weight, `max_J (1/|J|) Σ λ_I ⟨ω⟩_I / ⟨ω⟩_J`.
pub fn carleson_constant(lambda: &CarlesonSequence, omega: Option<&StepWeight>) -> Result<f64> {
    let tree = lambda.tree();
    let mut terms = lambda.padded();
    let avg = match omega {
        Some(w) => {
            check_same_tree(tree, w.tree())?;
            let avg = w.averages();
            for (t, a) in terms.iter_mut().zip(&avg) {
                *t *= a;
            }
            Some(avg)
        }
        None => None,
    };
    let sums = tree.subtree_sums(&terms);
    Ok(max_of(tree.intervals().map(|j| {
        let h = j.heap_index();
        let local = sums[h] / j.length();
        match &avg {
            Some(a) => local / a[h],
            None => local,
        }
    })))
}

/// The carleson-transfer transform `ν_I = λ_I / (⟨ω⁻¹⟩_I ⟨ω⟩_I)`.
pub fn carleson_transfer(lambda: &CarlesonSequence, omega: &StepWeight) -> Result<CarlesonSequence> {
    check_same_tree(lambda.tree(), omega.tree())?;
    let inv = omega.recip();
    CarlesonSequence::from_fn(lambda.tree(), |i| {
        let h = i.heap_index();
        lambda.values()[h] / (inv.average_at(&i) * omega.average_at(&i))
    })
}

/// Local-to-global helper: `max_J` of `(Σ_{I ∈ 𝒟(J)} terms_I) / norm_J`.
fn max_subtree_ratio(tree: DyadicTree, terms: &[f64], norm: impl Fn(DyadicIndex) -> f64) -> f64 {
    let sums = tree.subtree_sums(terms);
    max_of(tree.intervals().map(|j| sums[j.heap_index()] / norm(j)))
}

/// Derived weights shared by the three-weight constants.
struct Triple {
    w: StepWeight,
    v: StepWeight,
    u_inv: StepWeight,
    /// `u⁻¹w²`
    u_inv_w2: StepWeight,
    /// `vw²`
    v_w2: StepWeight,
}

impl Triple {
    fn new(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<Self> {
        check_same_tree(u.tree(), w.tree())?;
        check_same_tree(v.tree(), w.tree())?;
        let w2 = w.powf(2.0)?;
        let u_inv = u.recip();
        Ok(Triple {
            u_inv_w2: u_inv.product(&w2)?,
            v_w2: v.product(&w2)?,
            u_inv,
            v: v.clone(),
            w: w.clone(),
        })
    }

    fn tree(&self) -> DyadicTree {
        self.w.tree()
    }

    /// `sup_J ⟨u⁻¹w⟩_J^w ⟨vw⁻¹⟩_J^w`.
    fn sufficiency_c1(&self) -> f64 {
        max_of(self.tree().intervals().map(|i| {
            let m = self.w.mass_at(&i);
            self.u_inv_w2.mass_at(&i) * self.v.mass_at(&i) / (m * m)
        }))
    }

    /// Summands `|Δ_I^w(u⁻¹w)|² [w(I⁻)²v(I⁺) + w(I⁺)²v(I⁻)]/w(I)²`, zero on leaves.
    fn sufficiency_c2_terms(&self) -> Vec<f64> {
        let tree = self.tree();
        let mut terms = vec![0.0; tree.interval_count()];
        let avg_g = |i: &DyadicIndex| self.u_inv_w2.mass_at(i) / self.w.mass_at(i);
        for i in tree.non_leaf() {
            let (l, r) = (i.left(), i.right());
            let delta = avg_g(&r) - avg_g(&l);
            let (wl, wr, wi) = (self.w.mass_at(&l), self.w.mass_at(&r), self.w.mass_at(&i));
            let bracket = (wl * wl * self.v.mass_at(&r) + wr * wr * self.v.mass_at(&l)) / (wi * wi);
            terms[i.heap_index()] = delta * delta * bracket;
        }
        terms
    }

    /// `sup_J (1/w(J)) Σ_{I ∈ 𝒟(J)} |Δ_I^w(u⁻¹w)|² [..] / ⟨u⁻¹w⟩_J^w`.
    fn sufficiency_c2(&self) -> f64 {
        let terms = self.sufficiency_c2_terms();
        max_subtree_ratio(self.tree(), &terms, |j| self.u_inv_w2.mass_at(&j))
    }

    fn joint_c1(&self) -> f64 {
        max_of(self.tree().intervals().map(|i| {
            let m = self.w.mass_at(&i);
            self.u_inv.mass_at(&i) * self.v_w2.mass_at(&i) / (m * m)
        }))
    }

    /// `sup_J (1/|J|) Σ |I| |Δ_I a|² ⟨b⟩_I/⟨w⟩_I² / ⟨a⟩_J`.
    fn carleson_pair(&self, a: &StepWeight, b: &StepWeight) -> f64 {
        let tree = self.tree();
        let deltas = plain_deltas(a);
        let mut terms = vec![0.0; tree.interval_count()];
        for i in tree.non_leaf() {
            let h = i.heap_index();
            let wa = self.w.average_at(&i);
            terms[h] = i.length() * deltas[h].powi(2) * b.average_at(&i) / (wa * wa);
        }
        max_subtree_ratio(tree, &terms, |j| j.length() * a.average_at(&j))
    }

    /// `max_J Q_J/⟨a⟩_J` with `Q_J = (1/|J|) Σ_{I ⊊ J} |Ĩ| (⟨a⟩_I/⟨w⟩_I)² (1 - ⟨w⟩_I/⟨w⟩_Ĩ)² ⟨b⟩_Ĩ`.
    fn parent_ratio_max(&self, a: &StepWeight, b: &StepWeight) -> f64 {
        let tree = self.tree();
        let mut terms = vec![0.0; tree.interval_count()];
        for i in tree.with_parent() {
            let parent = i.parent().unwrap();
            let ratio = a.average_at(&i) / self.w.average_at(&i);
            let drop = 1.0 - self.w.average_at(&i) / self.w.average_at(&parent);
            terms[i.heap_index()] = parent.length() * ratio * ratio * drop * drop * b.average_at(&parent);
        }
        let sums = tree.subtree_sums(&terms);
        max_of(tree.intervals().map(|j| {
            let h = j.heap_index();
            (sums[h] - terms[h]) / j.length() / a.average_at(&j)
        }))
    }

    /// `max_J (1/|J|) Σ |I| |Δ_I w/⟨w⟩_I|² ⟨a⟩_I / ⟨a⟩_J`.
    fn weighted_fkp(&self, a: &StepWeight) -> f64 {
        let tree = self.tree();
        let deltas = plain_deltas(&self.w);
        let mut terms = vec![0.0; tree.interval_count()];
        for i in tree.non_leaf() {
            let h = i.heap_index();
            terms[h] = i.length() * (deltas[h] / self.w.average_at(&i)).powi(2) * a.average_at(&i);
        }
        max_subtree_ratio(tree, &terms, |j| j.length() * a.average_at(&j))
    }
}

/// `sup_J ⟨u⁻¹w⟩_J^w ⟨vw⁻¹⟩_J^w`, the three-weight constant in the square-function upper bound.
pub fn sufficiency_c1(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<f64> {
    Ok(Triple::new(u, v, w)?.sufficiency_c1())
}

/// Carleson constant of the square-function upper bound.
pub fn sufficiency_c2(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<f64> {
    Ok(Triple::new(u, v, w)?.sufficiency_c2())
}

/// `Σ_{I ∈ 𝒟(J)} |Δ_I^w(u⁻¹w)|² [w(I⁻)²v(I⁺) + w(I⁺)²v(I⁻)]/w(I)²` for one `J`.
pub fn sufficiency_c2_sum(u: &StepWeight, v: &StepWeight, w: &StepWeight, j: &DyadicIndex) -> Result<f64> {
    w.tree().check(j)?;
    let triple = Triple::new(u, v, w)?;
    let terms = triple.sufficiency_c2_terms();
    Ok(triple.tree().subtree_sums(&terms)[j.heap_index()])
}

/// Conditions `(1/|J|) Σ |I| |Δ_I w/⟨w⟩_I|² ⟨u⁻¹⟩_I ≤ C⟨u⁻¹⟩_J` and the same with `vw²`.
pub fn weighted_fkp_conditions(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<(f64, f64)> {
    let t = Triple::new(u, v, w)?;
    Ok((t.weighted_fkp(&t.u_inv), t.weighted_fkp(&t.v_w2)))
}

/// All weight-class constants for a weight, optionally with the three-weight block for `(u, v, w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CharacteristicReport {
    pub depth: u32,
    /// Keyed by the exponent as printed, e.g. `"2"`.
    pub ap: BTreeMap<String, f64>,
    pub rhp: BTreeMap<String, f64>,
    pub a_inf: f64,
    pub rh1: f64,
    pub doubling: f64,
    pub joint_a2w: Option<f64>,
    pub restricted_a2w: Option<f64>,
    pub sufficiency_c1: Option<f64>,
    pub sufficiency_c2: Option<f64>,
    pub joint_c1: Option<f64>,
    pub joint_c2: Option<f64>,
    pub joint_c3: Option<f64>,
    pub q_max: Option<f64>,
    pub r_max: Option<f64>,
    /// Suprema run over the truncated tree; the root has no parent term.
    pub boundary: String,
}

impl CharacteristicReport {
    /// Single-weight characteristics of `omega` for the given exponents.
    pub fn single(omega: &StepWeight, exponents: &[f64]) -> Result<Self> {
        let mut ap = BTreeMap::new();
        let mut rhp = BTreeMap::new();
        for &p in exponents {
            ap.insert(format!("{p}"), ap_characteristic(omega, p)?);
            rhp.insert(format!("{p}"), rhp_characteristic(omega, p)?);
        }
        let (a_inf, rh1) = a_inf_and_rh1(omega);
        Ok(CharacteristicReport {
            depth: omega.depth(),
            ap,
            rhp,
            a_inf,
            rh1,
            doubling: doubling_constant(omega),
            joint_a2w: None,
            restricted_a2w: None,
            sufficiency_c1: None,
            sufficiency_c2: None,
            joint_c1: None,
            joint_c2: None,
            joint_c3: None,
            q_max: None,
            r_max: None,
            boundary: "root-truncated".to_string(),
        })
    }

    /// Full report: single-weight block for `w` plus every three-weight constant.
    pub fn triple(u: &StepWeight, v: &StepWeight, w: &StepWeight, exponents: &[f64]) -> Result<Self> {
        let mut report = CharacteristicReport::single(w, exponents)?;
        let t = Triple::new(u, v, w)?;
        report.joint_a2w = Some(joint_a2w(u, v, w)?);
        report.restricted_a2w = Some(restricted_a2w(u, v, w)?);
        report.sufficiency_c1 = Some(t.sufficiency_c1());
        report.sufficiency_c2 = Some(t.sufficiency_c2());
        report.joint_c1 = Some(t.joint_c1());
        report.joint_c2 = Some(t.carleson_pair(&t.u_inv, &t.v_w2));
        report.joint_c3 = Some(t.carleson_pair(&t.v_w2, &t.u_inv));
        report.q_max = Some(t.parent_ratio_max(&t.u_inv, &t.v_w2));
        report.r_max = Some(t.parent_ratio_max(&t.v_w2, &t.u_inv));
        Ok(report)
    }
}

/// The three-weight report with exponent 2.
pub fn triple_constants(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<CharacteristicReport> {
    CharacteristicReport::triple(u, v, w, &[2.0])
}
