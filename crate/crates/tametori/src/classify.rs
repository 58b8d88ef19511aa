//! Counts attached to each tame elliptic twisted class: stable classes,
//! rational embedding counts, rational conjugacy classes, the component
//! group exact sequence, isogeny transfer, and the assembled report.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::chevalley::{NormalizerElt, TitsTorsionModel};
use crate::error::Error;
use crate::intlin::{self, TorsionVec};
use crate::kac::{self, KacPoint};
use crate::mat::SqMat;
use crate::rootdata::{GroupContext, IsogenyChoice};
use crate::weyl::{self, TwistedClassTable};
use crate::Result;

/// Explicit choices threaded through a run; every reported count is
/// invariant under them, which the fuzz suite exercises.
#[derive(Debug, Clone, Default)]
pub struct Choices {
    /// member of the twisted class to use as base point
    pub rep_member: Option<usize>,
    /// member of the Frobenius descent coset
    pub w_fr_member: Option<usize>,
    /// exponent replacing the abstract primitive root, prime to the order
    pub unit_exp: Option<u64>,
    /// index into the valid central norm corrections
    pub z_index: Option<usize>,
}

/// A tame elliptic twisted class that is stable under the Frobenius norm
/// map, together with its alcove point and descent data.
pub struct ToriOrbit<'a> {
    pub ctx: &'a GroupContext,
    pub class_id: usize,
    /// chosen base representative (Weyl element id)
    pub rep: usize,
    pub q: u64,
    pub kac: KacPoint,
    /// all solutions of the descent equation
    pub w_fr_coset: Vec<usize>,
    /// chosen member of the coset
    pub w_fr: usize,
    pub unit_exp: u64,
}

/// One stable class inside an orbit: a Frobenius twisted conjugacy class
/// of the twisted centralizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableClass {
    pub rep: usize,
    pub members: Vec<usize>,
}

pub fn make_orbit<'a>(
    ctx: &'a GroupContext,
    table: &TwistedClassTable,
    class_id: usize,
    q: u64,
    choices: &Choices,
) -> Result<ToriOrbit<'a>> {
    let w = ctx.weyl();
    let rep = match choices.rep_member {
        Some(m) => {
            assert!(table.classes[class_id].contains(&m), "member outside the class");
            m
        }
        None => table.reps[class_id],
    };
    let rep_mat = &w.elements[rep];
    if !weyl::is_elliptic(ctx, rep_mat) {
        return Err(Error::PreconditionFailed("class is not elliptic".into()));
    }
    if !weyl::is_tame_class(ctx, rep_mat, ctx.p) {
        return Err(Error::PreconditionFailed("class is not tame".into()));
    }
    let image = w.id_of(&weyl::fr_norm(ctx, rep_mat, q));
    if table.class_of[image] != class_id {
        return Err(Error::NotDefinedOverK);
    }
    let unit_exp = choices.unit_exp.unwrap_or(1);
    let kac = kac::assign_point(ctx, table, class_id, Some(rep), unit_exp)?;
    let w_fr_coset = weyl::solve_w_fr(ctx, rep_mat, q)?;
    let w_fr = match choices.w_fr_member {
        Some(m) => {
            assert!(w_fr_coset.contains(&m), "not a descent solution");
            m
        }
        None => w_fr_coset[0],
    };
    Ok(ToriOrbit { ctx, class_id, rep, q, kac, w_fr_coset, w_fr, unit_exp })
}

/// The twisted Frobenius on Weyl element ids: `g -> w_fr fr(g) w_fr^-1`.
fn frobenius_on_weyl(ctx: &GroupContext, w_fr: usize) -> Vec<usize> {
    let w = ctx.weyl();
    let fr_perm = w.twist_permutation(&ctx.fr_matrix());
    let inv = w.inv(w_fr);
    (0..w.len())
        .map(|g| w.mul(w.mul(w_fr, fr_perm[g]), inv))
        .collect()
}

/// Stable classes: Frobenius twisted conjugacy classes of the twisted
/// centralizer, in deterministic order.
pub fn stable_classes(orbit: &ToriOrbit) -> Vec<StableClass> {
    let ctx = orbit.ctx;
    let w = ctx.weyl();
    let centralizer = weyl::twisted_centralizer(ctx, &w.elements[orbit.rep]);
    let psi = frobenius_on_weyl(ctx, orbit.w_fr);
    let members: BTreeSet<usize> = centralizer.iter().copied().collect();
    let mut class_of: HashMap<usize, usize> = HashMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &start in &centralizer {
        if class_of.contains_key(&start) {
            continue;
        }
        let cid = classes.len();
        let mut stack = vec![start];
        let mut cls = vec![start];
        class_of.insert(start, cid);
        while let Some(x) = stack.pop() {
            for &g in &centralizer {
                let y = w.mul(w.mul(w.inv(g), x), psi[g]);
                debug_assert!(members.contains(&y), "twist leaves the centralizer");
                if !class_of.contains_key(&y) {
                    class_of.insert(y, cid);
                    cls.push(y);
                    stack.push(y);
                }
            }
        }
        cls.sort_unstable();
        classes.push(cls);
    }
    let mut out: Vec<StableClass> = classes
        .into_iter()
        .map(|members| {
            let rep = members
                .iter()
                .copied()
                .min_by(|&a, &b| w.elements[a].cmp(&w.elements[b]))
                .unwrap();
            StableClass { rep, members }
        })
        .collect();
    out.sort_by(|a, b| w.elements[a.rep].cmp(&w.elements[b.rep]));
    out
}

/// The residue torus fixed points attached to an orbit on the given
/// lattice: the image of the simply connected fixed points, as an explicit
/// list of torsion vectors in lattice coordinates, prime-to-p part only.
fn residue_fixed_subgroup(ctx: &GroupContext, rep_mat: &SqMat) -> Vec<TorsionVec> {
    let r = ctx.rank;
    let ws = rep_mat.mul(&ctx.sigma_matrix());
    // generators: (w sigma - 1)^-1 of the coroot basis, in lattice coords
    let m = crate::mat::QMat::from_sq(&ws);
    let mut m1 = m.clone();
    for i in 0..r {
        m1.set(i, i, m1.at(i, i) - Rational64::one());
    }
    let minv = m1.inverse();
    let mut gens = Vec::new();
    for j in 0..r {
        let mut e = vec![Rational64::zero(); r];
        e[j] = Rational64::one();
        let t = minv.apply(&e);
        gens.push(TorsionVec::from_raw(ctx.lattice.inv.apply(&t)));
    }
    let mut seen: BTreeSet<TorsionVec> = BTreeSet::new();
    seen.insert(TorsionVec::zero(r));
    let mut stack = vec![TorsionVec::zero(r)];
    while let Some(x) = stack.pop() {
        for g in &gens {
            let y = x.add(g);
            if seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    seen.into_iter()
        .filter(|t| ctx.p == 0 || t.order().gcd(&ctx.p) == 1)
        .collect()
}

/// Matrix (on lattice coordinates) of the twisted Frobenius attached to a
/// stable class member: `w' w_fr fr`.
fn embedding_twist_matrix(ctx: &GroupContext, w_prime: usize, w_fr: usize) -> SqMat {
    let w = ctx.weyl();
    let m = w.elements[w_prime].mul(&w.elements[w_fr]).mul(&ctx.fr_matrix());
    ctx.lattice.conjugate(&m).expect("twist stabilizes the lattice")
}

/// Number of rational embeddings for the stable class of `w_prime`:
/// coinvariants of the residue fixed points under the twisted Frobenius.
pub fn embedding_count(orbit: &ToriOrbit, w_prime: usize) -> u64 {
    let ctx = orbit.ctx;
    let subgroup = residue_fixed_subgroup(ctx, &ctx.weyl().elements[orbit.rep]);
    embedding_count_in(ctx, orbit, w_prime, &subgroup)
}

fn embedding_count_in(
    ctx: &GroupContext,
    orbit: &ToriOrbit,
    w_prime: usize,
    subgroup: &[TorsionVec],
) -> u64 {
    let psi = embedding_twist_matrix(ctx, w_prime, orbit.w_fr);
    let set: BTreeSet<&TorsionVec> = subgroup.iter().collect();
    let mut image = BTreeSet::new();
    for v in subgroup {
        let f = v.apply(&psi.a, ctx.rank).scale(orbit.q as i64);
        assert!(set.contains(&f), "twisted Frobenius must stabilize the subgroup");
        image.insert(v.sub(&f));
    }
    (subgroup.len() / image.len()) as u64
}

// ---------------------------------------------------------------------------
// rational classes via the twisted normalizer group

/// The finite twisted normalizer group of an orbit: torsion torus times
/// centralizer Weyl parts, fixed by the inner twist of the class, with the
/// Frobenius automorphism solved from the descent equation.
pub struct TwistedNormalizerGroup<'a> {
    pub tits: TitsTorsionModel<'a>,
    pub elements: Vec<NormalizerElt>,
    pub fixing: NormalizerElt,
    pub n_f: NormalizerElt,
    pub valid_z: Vec<TorsionVec>,
}

/// Extended normalizer element carrying an integral uniformizer exponent:
/// represents `s(pi) t(zeta) n_v`.
type ExtElt = (Vec<i64>, TorsionVec, usize);

struct ExtModel<'a, 'b> {
    tits: &'b TitsTorsionModel<'a>,
    /// the abstract root of unity as a fraction: unit / ell
    xi: Rational64,
}

impl ExtModel<'_, '_> {
    fn mul(&self, a: &ExtElt, b: &ExtElt) -> ExtElt {
        let ctx = self.tits.ctx;
        let act = &self.tits.lattice_action[a.2];
        let moved_pi = act.apply(&b.0);
        let moved_t = b.1.apply(&act.a, ctx.rank);
        let c = self.tits.cocycle(a.2, b.2);
        (
            a.0.iter().zip(&moved_pi).map(|(x, y)| x + y).collect(),
            a.1.add(&moved_t).add(&c),
            ctx.weyl().mul(a.2, b.2),
        )
    }

    fn sigma(&self, a: &ExtElt) -> ExtElt {
        let ctx = self.tits.ctx;
        let sm = ctx
            .lattice
            .conjugate(&ctx.sigma_matrix())
            .expect("sigma stabilizes the lattice");
        let s_pi = sm.apply(&a.0);
        // sigma(s(pi)) = s(xi) s(pi): the pi part sheds a torsion factor
        let shed = TorsionVec::from_raw(
            s_pi.iter().map(|&x| Rational64::from_integer(x) * self.xi).collect(),
        );
        let (t, v) = self
            .tits
            .twist_act(&ctx.sigma_matrix(), &(a.1.clone(), a.2));
        (s_pi, t.add(&shed), v)
    }

    fn is_identity(&self, a: &ExtElt) -> bool {
        a.0.iter().all(|&x| x == 0) && a.1.is_zero() && a.2 == self.tits.ctx.weyl().identity()
    }
}

impl<'a> TwistedNormalizerGroup<'a> {
    pub fn build(orbit: &ToriOrbit<'a>, choices: &Choices) -> Result<TwistedNormalizerGroup<'a>> {
        let ctx = orbit.ctx;
        if ctx.lattice.basis != crate::mat::QMat::identity(ctx.rank) {
            return Err(Error::UnsupportedConfiguration(
                "rational classes are computed on the simply connected lattice".into(),
            ));
        }
        let su3_case = !ctx.sigma.is_identity();
        if su3_case
            && !(ctx.factors.len() == 1
                && ctx.factors[0].letter == 'A'
                && ctx.factors[0].rank == 2)
        {
            return Err(Error::UnsupportedConfiguration(
                "twisted rational classes implemented for the ramified A2 case only".into(),
            ));
        }
        let w = ctx.weyl();
        let tits = TitsTorsionModel::new(ctx);
        let ell = orbit.kac.ell;
        let xi = Rational64::new(orbit.unit_exp as i64, ell as i64);
        let lambda_lat: Vec<i64> = ctx
            .lattice
            .coords(&orbit.kac.lambda)
            .expect("kac numerator lies in the lattice");
        // valid central corrections: trivial twisted norm in the extended model
        let ext = ExtModel { tits: &tits, xi };
        let rep_mat = &w.elements[orbit.rep];
        let ws_lat = ctx
            .lattice
            .conjugate(&rep_mat.mul(&ctx.sigma_matrix()))
            .unwrap();
        let pi_part: Vec<i64> = {
            let moved = ctx.lattice.conjugate(rep_mat).unwrap().apply(&lambda_lat);
            lambda_lat.iter().zip(&moved).map(|(a, b)| a - b).collect()
        };
        let mut valid_z = Vec::new();
        for z in ctx.central_torsion_points() {
            let m_ext: ExtElt = (pi_part.clone(), z.clone(), orbit.rep);
            // twisted norm of order ell
            let mut norm: ExtElt =
                (vec![0; ctx.rank], TorsionVec::zero(ctx.rank), w.identity());
            let mut twisted = m_ext.clone();
            for _ in 0..ell {
                norm = ext.mul(&norm, &twisted);
                twisted = ext.sigma(&twisted);
            }
            if ext.is_identity(&norm) {
                valid_z.push(z);
            }
        }
        if valid_z.is_empty() {
            return Err(Error::NFNotFound);
        }
        let z = match choices.z_index {
            Some(i) => valid_z[i % valid_z.len()].clone(),
            None => valid_z[0].clone(),
        };
        // fixing element n lambda(xi) z
        let lam_tors = TorsionVec::from_raw(
            lambda_lat
                .iter()
                .map(|&c| Rational64::from_integer(c) * xi)
                .collect(),
        );
        let fixing = tits.mul(
            &(TorsionVec::zero(ctx.rank), orbit.rep),
            &(lam_tors.add(&z), w.identity()),
        );
        // fixed subgroup: weyl parts in the twisted centralizer, torsion
        // parts solved per weyl part
        let theta = |x: &NormalizerElt| -> NormalizerElt {
            tits.mul(&tits.mul(&fixing, &tits.sigma_act(x)), &tits.inv(&fixing))
        };
        let centralizer = weyl::twisted_centralizer(ctx, rep_mat);
        let mut elements = Vec::new();
        for &v in &centralizer {
            let base = theta(&(TorsionVec::zero(ctx.rank), v));
            assert_eq!(base.1, v, "centralizer member escapes the fixed group");
            // theta(t, v) = (ws(t) + b_v, v); fixed when (1 - ws) t = b_v
            let b_v = base.0;
            let phi = ws_lat.to_int_matrix();
            match intlin::solve_torsion_equation(&phi, &b_v) {
                intlin::TorsorSolution::NoSolution => {}
                sol @ intlin::TorsorSolution::Torsor { .. } => {
                    for t in sol.all() {
                        let cand = (t, v);
                        assert_eq!(theta(&cand), cand, "solved element must be fixed");
                        elements.push(cand);
                    }
                }
            }
        }
        elements.sort();
        // Frobenius descent on the normalizer: solve
        // fr(norm_q(fixing)) = f^-1 fixing sigma(f)
        let lhs = {
            let mut norm: NormalizerElt = (TorsionVec::zero(ctx.rank), w.identity());
            let mut twisted = fixing.clone();
            for _ in 0..orbit.q {
                norm = tits.mul(&norm, &twisted);
                twisted = tits.sigma_act(&twisted);
            }
            tits.fr_act(orbit.q, &norm)
        };
        let mut nf_solutions: Vec<NormalizerElt> = Vec::new();
        for v_f in 0..w.len() {
            // weyl part: lhs_w = v_f^-1 rep sigma(v_f)
            let sigma_vf = tits.twist_act(&ctx.sigma_matrix(), &(TorsionVec::zero(ctx.rank), v_f)).1;
            if w.mul(w.mul(w.inv(v_f), fixing.1), sigma_vf) != lhs.1 {
                continue;
            }
            // torsion part: affine in t_f, reduce to the standard torsor form
            let zero_probe = {
                let n_f0 = (TorsionVec::zero(ctx.rank), v_f);
                tits.mul(
                    &tits.mul(&tits.inv(&n_f0), &fixing),
                    &tits.sigma_act(&n_f0),
                )
            };
            // difference to absorb: v_f^-1 (ws - 1) t_f = lhs.0 - zero_probe.0
            let target = lhs.0.sub(&zero_probe.0);
            let vf_target = target.apply(&tits.lattice_action[v_f].a, ctx.rank);
            let phi = ws_lat.to_int_matrix();
            match intlin::solve_torsion_equation(&phi, &vf_target.neg()) {
                intlin::TorsorSolution::NoSolution => {}
                sol @ intlin::TorsorSolution::Torsor { .. } => {
                    for t in sol.all() {
                        let cand = (t, v_f);
                        let rhs = tits.mul(
                            &tits.mul(&tits.inv(&cand), &fixing),
                            &tits.sigma_act(&cand),
                        );
                        if rhs == lhs {
                            nf_solutions.push(cand);
                        }
                    }
                }
            }
        }
        nf_solutions.sort();
        if nf_solutions.is_empty() {
            return Err(Error::NFNotFound);
        }
        let n_f = match choices.w_fr_member {
            // reuse the coset choice index to also vary the normalizer lift
            Some(i) => nf_solutions[i % nf_solutions.len()].clone(),
            None => nf_solutions[0].clone(),
        };
        Ok(TwistedNormalizerGroup { tits, elements, fixing, n_f, valid_z })
    }

    fn theta_f(&self, x: &NormalizerElt, q: u64) -> NormalizerElt {
        let f = self.tits.fr_act(q, x);
        self.tits
            .mul(&self.tits.mul(&self.n_f, &f), &self.tits.inv(&self.n_f))
    }

    /// Twisted conjugacy classes under `x ~ g^-1 x theta_f(g)`; returns
    /// the list of classes as sorted element lists.
    pub fn twisted_classes(&self, q: u64) -> Vec<Vec<NormalizerElt>> {
        let index: BTreeMap<&NormalizerElt, usize> =
            self.elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let theta_imgs: Vec<NormalizerElt> =
            self.elements.iter().map(|g| self.theta_f(g, q)).collect();
        let inv: Vec<NormalizerElt> = self.elements.iter().map(|g| self.tits.inv(g)).collect();
        let n = self.elements.len();
        let mut class_of = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if class_of[start] != usize::MAX {
                continue;
            }
            let cid = classes.len();
            class_of[start] = cid;
            let mut members = vec![start];
            let mut stack = vec![start];
            while let Some(x) = stack.pop() {
                for g in 0..n {
                    let y = self
                        .tits
                        .mul(&self.tits.mul(&inv[g], &self.elements[x]), &theta_imgs[g]);
                    let yi = *index.get(&y).expect("twisted action leaves the group");
                    if class_of[yi] == usize::MAX {
                        class_of[yi] = cid;
                        members.push(yi);
                        stack.push(yi);
                    }
                }
            }
            members.sort_unstable();
            classes.push(members);
        }
        classes
            .into_iter()
            .map(|ms| ms.into_iter().map(|i| self.elements[i].clone()).collect())
            .collect()
    }
}

/// Rational class data: total count and the fiber sizes over the stable
/// classes, aligned with the deterministic stable class order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalData {
    pub total: u64,
    pub fibers: Vec<u64>,
}

pub fn rational_class_count(orbit: &ToriOrbit, choices: &Choices) -> Result<RationalData> {
    let group = TwistedNormalizerGroup::build(orbit, choices)?;
    rational_from_group(orbit, &group, None)
}

fn rational_from_group(
    orbit: &ToriOrbit,
    group: &TwistedNormalizerGroup,
    kernel: Option<&[TorsionVec]>,
) -> Result<RationalData> {
    let ctx = orbit.ctx;
    let stable = stable_classes(orbit);
    let w = ctx.weyl();
    // optionally pass to the quotient by a central kernel
    let canonical = |x: &NormalizerElt| -> NormalizerElt {
        match kernel {
            None => x.clone(),
            Some(k) => {
                let mut best: Option<NormalizerElt> = None;
                for z in k {
                    let y = (x.0.add(z), x.1);
                    if best.as_ref().map_or(true, |b| y < *b) {
                        best = Some(y);
                    }
                }
                best.unwrap()
            }
        }
    };
    let classes = if kernel.is_none() {
        group.twisted_classes(orbit.q)
    } else {
        // quotient group: canonicalize, dedupe, and recount
        let elements: BTreeSet<NormalizerElt> =
            group.elements.iter().map(&canonical).collect();
        let elements: Vec<NormalizerElt> = elements.into_iter().collect();
        let index: BTreeMap<&NormalizerElt, usize> =
            elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let n = elements.len();
        let mut class_of = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        // conjugating set: all representatives of the quotient
        for start in 0..n {
            if class_of[start] != usize::MAX {
                continue;
            }
            let cid = classes.len();
            class_of[start] = cid;
            let mut members = vec![start];
            let mut stack = vec![start];
            while let Some(x) = stack.pop() {
                for g in &elements {
                    let y = canonical(&group.tits.mul(
                        &group.tits.mul(&group.tits.inv(g), &elements[x]),
                        &group.theta_f(g, orbit.q),
                    ));
                    let yi = *index.get(&y).expect("quotient action closed");
                    if class_of[yi] == usize::MAX {
                        class_of[yi] = cid;
                        members.push(yi);
                        stack.push(yi);
                    }
                }
            }
            members.sort_unstable();
            classes.push(members);
        }
        classes
            .into_iter()
            .map(|ms| ms.into_iter().map(|i| elements[i].clone()).collect())
            .collect()
    };
    // fibers over the stable classes through the Weyl part
    let stable_of_weyl: HashMap<usize, usize> = stable
        .iter()
        .enumerate()
        .flat_map(|(si, sc)| sc.members.iter().map(move |&m| (m, si)))
        .collect();
    let mut fibers = vec![0u64; stable.len()];
    for cls in &classes {
        let si = stable_of_weyl[&cls[0].1];
        for e in cls {
            assert_eq!(
                stable_of_weyl[&e.1], si,
                "twisted class crosses stable classes"
            );
        }
        fibers[si] += 1;
    }
    let total = classes.len() as u64;
    assert_eq!(total, fibers.iter().sum::<u64>());
    let _ = w;
    Ok(RationalData { total, fibers })
}

// ---------------------------------------------------------------------------
// exact sequence of component groups

/// Orders in the component group sequence
/// `1 -> (residue fixed points)_Fr -> (cocharacter coinvariants)_Fr -> (fundamental group)_Fr -> 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SequenceCheck {
    pub torus_components: u64,
    pub residue_part: u64,
    pub omega_part: u64,
}

pub fn component_sequence_check(orbit: &ToriOrbit) -> Result<SequenceCheck> {
    let ctx = orbit.ctx;
    let w = ctx.weyl();
    let ws_lat = ctx
        .lattice
        .conjugate(&w.elements[orbit.rep].mul(&ctx.sigma_matrix()))
        .unwrap();
    // lattice coinvariants X / (w sigma - 1) X with the Frobenius action
    let r = ctx.rank;
    let mut rels = ws_lat.to_int_matrix();
    for i in 0..r {
        rels[(i, i)] -= num_bigint::BigInt::one();
    }
    let pres = intlin::QuotientPresentation::new(&rels)?;
    let psi = {
        let m = w.elements[orbit.w_fr].mul(&ctx.fr_matrix());
        ctx.lattice.conjugate(&m).unwrap()
    };
    let action = pres.induced_endo(&psi.to_int_matrix());
    let coinv = intlin::coinvariants(&pres.group, &action)?;
    let torus_components = coinv.order();
    let residue_part = embedding_count(orbit, w.identity());
    let fg = crate::rootdata::fundamental_group(ctx)?;
    let omega_part = fg.coinvariants.order();
    if torus_components != residue_part * omega_part {
        return Err(Error::CheckFailed(format!(
            "component sequence: {torus_components} != {residue_part} * {omega_part}"
        )));
    }
    Ok(SequenceCheck { torus_components, residue_part, omega_part })
}

// ---------------------------------------------------------------------------
// isogeny transfer

/// Counts for the quotient of the simply connected group by a central
/// kernel: embeddings per stable class and rational classes.
#[derive(Debug, Clone)]
pub struct TransferData {
    pub stable: u64,
    pub embeddings: Vec<u64>,
    pub rational: Option<RationalData>,
}

/// Validate and close a central kernel given by torsion generators.
pub fn close_kernel(ctx: &GroupContext, gens: &[TorsionVec]) -> Result<Vec<TorsionVec>> {
    let center: BTreeSet<TorsionVec> = ctx.central_torsion_points().into_iter().collect();
    for g in gens {
        if !center.contains(g) {
            return Err(Error::BadKernel("generator is not central".into()));
        }
    }
    let mut seen: BTreeSet<TorsionVec> = BTreeSet::new();
    seen.insert(TorsionVec::zero(ctx.rank));
    let mut stack = vec![TorsionVec::zero(ctx.rank)];
    while let Some(x) = stack.pop() {
        for g in gens {
            let y = x.add(g);
            if seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    if ctx.p > 0 && seen.len() as u64 % ctx.p == 0 {
        return Err(Error::BadKernel(format!(
            "residue characteristic divides the kernel order {}",
            seen.len()
        )));
    }
    // Frobenius stability: q fr maps the kernel into itself
    if let Some(q) = ctx.q {
        let frm = ctx
            .lattice
            .conjugate(&ctx.fr_matrix())
            .expect("fr stabilizes the lattice");
        for z in &seen {
            let img = z.apply(&frm.a, ctx.rank).scale(q as i64);
            if !seen.contains(&img) {
                return Err(Error::BadKernel("kernel is not Frobenius stable".into()));
            }
        }
    }
    // fixed by the inner twist of any elliptic class: the Weyl group acts
    // trivially on central points, so only the inertia twist matters
    let sm = ctx
        .lattice
        .conjugate(&ctx.sigma_matrix())
        .expect("sigma stabilizes the lattice");
    for z in &seen {
        if !seen.contains(&z.apply(&sm.a, ctx.rank)) {
            return Err(Error::BadKernel("kernel is not inertia stable".into()));
        }
    }
    Ok(seen.into_iter().collect())
}

pub fn isogeny_transfer(
    orbit: &ToriOrbit,
    kernel_gens: &[TorsionVec],
    choices: &Choices,
) -> Result<TransferData> {
    let ctx = orbit.ctx;
    if ctx.lattice.basis != crate::mat::QMat::identity(ctx.rank) {
        return Err(Error::UnsupportedConfiguration(
            "transfer starts from the simply connected lattice".into(),
        ));
    }
    let kernel = close_kernel(ctx, kernel_gens)?;
    let stable = stable_classes(orbit);
    // embeddings: coinvariants of the quotient of the residue subgroup
    let subgroup = residue_fixed_subgroup(ctx, &ctx.weyl().elements[orbit.rep]);
    let sub_set: BTreeSet<TorsionVec> = subgroup.iter().cloned().collect();
    let canon = |v: &TorsionVec| -> TorsionVec {
        kernel
            .iter()
            .map(|z| v.add(z))
            .filter(|y| sub_set.contains(y))
            .min()
            .unwrap_or_else(|| v.clone())
    };
    // quotient subgroup: canonical representatives of cosets intersected
    // with the subgroup (kernel members inside the subgroup act)
    let quotient: BTreeSet<TorsionVec> = subgroup.iter().map(&canon).collect();
    let quotient: Vec<TorsionVec> = quotient.into_iter().collect();
    let mut embeddings = Vec::new();
    for sc in &stable {
        let psi = embedding_twist_matrix(ctx, sc.rep, orbit.w_fr);
        let mut image = BTreeSet::new();
        for v in &quotient {
            let f = v.apply(&psi.a, ctx.rank).scale(orbit.q as i64);
            image.insert(canon(&v.sub(&f)));
        }
        embeddings.push((quotient.len() / image.len()) as u64);
    }
    // rational classes of the quotient group
    let rational = match TwistedNormalizerGroup::build(orbit, choices) {
        Ok(group) => {
            // the kernel must sit inside the fixed group
            let elems: BTreeSet<&NormalizerElt> = group.elements.iter().collect();
            for z in &kernel {
                let e = (z.clone(), ctx.weyl().identity());
                if !elems.contains(&e) {
                    return Err(Error::BadKernel(
                        "kernel does not embed in the twisted normalizer".into(),
                    ));
                }
            }
            Some(rational_from_group(orbit, &group, Some(&kernel))?)
        }
        Err(Error::UnsupportedConfiguration(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(TransferData { stable: stable.len() as u64, embeddings, rational })
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub class_size: usize,
    pub ell: u64,
    pub point_numerator: Vec<i64>,
    pub point_denominator: i64,
    pub kac_j: i64,
    pub kac_coords: Vec<i64>,
    pub stable: u64,
    pub embeddings: Vec<u64>,
    pub rational: Option<u64>,
    pub fibers: Option<Vec<u64>>,
    pub sequence: SequenceCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub group: String,
    pub lattice: String,
    pub q: u64,
    pub rows: Vec<ReportRow>,
}

fn lattice_name(ctx: &GroupContext) -> String {
    if ctx.lattice.basis == crate::mat::QMat::identity(ctx.rank) {
        "sc".into()
    } else {
        let adjoint = {
            let q = crate::mat::QMat::from_sq(&ctx.cartan).inverse();
            let mut b = crate::mat::QMat::identity(ctx.rank);
            for i in 0..ctx.rank {
                for j in 0..ctx.rank {
                    b.set(j, i, q.at(i, j));
                }
            }
            b
        };
        if ctx.lattice.basis == adjoint {
            "ad".into()
        } else {
            "intermediate".into()
        }
    }
}

/// Label a twisted class: the long element, the (twisted) Coxeter class,
/// or a generic tag with the twisted order.
pub fn class_label(ctx: &GroupContext, table: &TwistedClassTable, class_id: usize) -> String {
    let w = ctx.weyl();
    let rep = &w.elements[table.reps[class_id]];
    let ws = rep.mul(&ctx.sigma_matrix());
    if ws.is_minus_identity() {
        return "-1".into();
    }
    // twisted Coxeter: product of one simple reflection per twist orbit
    let cox = {
        let mut seen = vec![false; ctx.rank];
        let mut m = SqMat::identity(ctx.rank);
        for i in 0..ctx.rank {
            if !seen[i] {
                let mut j = i;
                loop {
                    seen[j] = true;
                    j = ctx.sigma.perm[j];
                    if j == i {
                        break;
                    }
                }
                m = m.mul(&ctx.simple_reflections[i]);
            }
        }
        m
    };
    if table.class_of[w.id_of(&cox)] == class_id {
        return "cox".into();
    }
    format!("e{}c{}", weyl::twisted_order(ctx, rep), class_id)
}

/// Full classification for one q: a row per Frobenius stable tame
/// elliptic class, with all computable counts.
pub fn full_report(ctx: &GroupContext, q: u64, choices: &Choices) -> Result<ClassificationReport> {
    let table = weyl::sigma_classes(ctx);
    let stable_ids = weyl::fr_stable_elliptic_classes(ctx, q);
    let sc_ctx;
    let is_sc = ctx.lattice.basis == crate::mat::QMat::identity(ctx.rank);
    let transfer_source: Option<(&GroupContext, Vec<TorsionVec>)> = if is_sc {
        None
    } else {
        sc_ctx = GroupContext::new_permissive(&crate::rootdata::GroupSpecData {
            cartan_type: ctx.factors.clone(),
            isogeny: IsogenyChoice::SimplyConnected,
            sigma: ctx.sigma.clone(),
            fr: ctx.fr.clone(),
            p: ctx.p,
            q: ctx.q,
        })?;
        // kernel: central points of the cover that die in this lattice
        let kernel: Vec<TorsionVec> = sc_ctx
            .central_torsion_points()
            .into_iter()
            .filter(|z| {
                let coroot_vec: Vec<Rational64> = z.0.clone();
                ctx.lattice.contains(&coroot_vec)
            })
            .collect();
        Some((&sc_ctx, kernel))
    };
    let mut rows = Vec::new();
    for class_id in stable_ids {
        let orbit = make_orbit(ctx, &table, class_id, q, choices)?;
        let stable = stable_classes(&orbit);
        let sequence = component_sequence_check(&orbit)?;
        let (embeddings, rational, fibers) = match &transfer_source {
            None => {
                let embeddings: Vec<u64> =
                    stable.iter().map(|sc| embedding_count(&orbit, sc.rep)).collect();
                match rational_class_count(&orbit, choices) {
                    Ok(rd) => (embeddings, Some(rd.total), Some(rd.fibers)),
                    Err(Error::UnsupportedConfiguration(_)) => (embeddings, None, None),
                    Err(e) => return Err(e),
                }
            }
            Some((sc, kernel)) => {
                // transfer from the cover: identify the class over there
                let sc_table = weyl::sigma_classes(sc);
                let rep_mat = &ctx.weyl().elements[orbit.rep];
                let sc_class = sc_table.class_of[sc.weyl().id_of(rep_mat)];
                let sc_orbit = make_orbit(sc, &sc_table, sc_class, q, choices)?;
                let td = isogeny_transfer(&sc_orbit, kernel, choices)?;
                // sanity: the direct residue computation on this lattice
                // must agree with the transferred embedding counts
                let direct: Vec<u64> =
                    stable.iter().map(|s| embedding_count(&orbit, s.rep)).collect();
                if direct != td.embeddings {
                    return Err(Error::CheckFailed(format!(
                        "transferred embeddings {:?} disagree with the direct computation {:?}",
                        td.embeddings, direct
                    )));
                }
                match td.rational {
                    Some(rd) => (td.embeddings, Some(rd.total), Some(rd.fibers)),
                    None => (td.embeddings, None, None),
                }
            }
        };
        let (num, den) = orbit.kac.reduced_point();
        rows.push(ReportRow {
            label: class_label(ctx, &table, class_id),
            class_size: table.classes[class_id].len(),
            ell: orbit.kac.ell,
            point_numerator: num,
            point_denominator: den,
            kac_j: orbit.kac.j,
            kac_coords: orbit.kac.coords.clone(),
            stable: stable.len() as u64,
            embeddings,
            rational,
            fibers,
            sequence,
        });
    }
    rows.sort_by(|a, b| {
        (a.point_denominator, &a.point_numerator).cmp(&(b.point_denominator, &b.point_numerator))
    });
    Ok(ClassificationReport {
        group: ctx.type_name(),
        lattice: lattice_name(ctx),
        q,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Coxeter class report

#[derive(Debug, Clone, Serialize)]
pub struct CoxeterReport {
    pub coxeter_number: u64,
    pub center_order: u64,
    pub stable: u64,
    pub barycenter_checked: bool,
}

/// Checks specific to the Coxeter class of a split context: the lattice
/// coinvariants realize the center of the cover, type A points sit at the
/// barycenter, and the stable class count is gcd(h, q - 1).
pub fn coxeter_report(ctx: &GroupContext, q: u64, choices: &Choices) -> Result<CoxeterReport> {
    if !ctx.sigma.is_identity() {
        return Err(Error::UnsupportedConfiguration("coxeter report needs a split context".into()));
    }
    let w = ctx.weyl();
    let cox = {
        let mut m = SqMat::identity(ctx.rank);
        for s in &ctx.simple_reflections {
            m = m.mul(s);
        }
        m
    };
    let table = weyl::sigma_classes(ctx);
    let class_id = table.class_of[w.id_of(&cox)];
    let orbit = make_orbit(ctx, &table, class_id, q, choices)?;
    // coinvariants on the coroot lattice have the order of the center of
    // the simply connected cover
    let mut rels = cox.to_int_matrix();
    for i in 0..ctx.rank {
        rels[(i, i)] -= num_bigint::BigInt::one();
    }
    let coker = intlin::cokernel(&rels)?;
    let center_order = ctx.connection_index();
    if coker.order() != center_order {
        return Err(Error::CheckFailed(format!(
            "Coxeter coinvariants {} != connection index {center_order}",
            coker.order()
        )));
    }
    let h = weyl::twisted_order(ctx, &cox);
    let stable = stable_classes(&orbit).len() as u64;
    if ctx.factors.len() == 1 && ctx.fr.is_identity() {
        let expect = h.gcd(&(q - 1));
        if stable != expect {
            return Err(Error::CheckFailed(format!(
                "Coxeter stable classes {stable} != gcd({h}, {})",
                q - 1
            )));
        }
    }
    // type A factors: the point is the alcove barycenter
    let mut barycenter_checked = false;
    if ctx.factors.iter().all(|t| t.letter == 'A') {
        let walls = crate::rootdata::simple_affine_roots(ctx)?;
        for wall in &walls {
            let marks_total: i64 = walls
                .iter()
                .filter(|w2| w2.label.starts_with(wall.label.split(':').next().unwrap()))
                .map(|w2| w2.mark)
                .sum();
            let v = wall.eval(&ctx.cartan, &orbit.kac.point);
            if v != Rational64::new(1, marks_total) {
                return Err(Error::CheckFailed(
                    "type A Coxeter point is not the barycenter".into(),
                ));
            }
        }
        barycenter_checked = true;
    }
    Ok(CoxeterReport { coxeter_number: h, center_order, stable, barycenter_checked })
}

// re-export for the CLI
pub use crate::rootdata::GroupSpecData;

/// Convenience: the adjoint lattice sibling of a context.
pub fn adjoint_sibling(ctx: &GroupContext) -> Result<GroupContext> {
    GroupContext::new_permissive(&GroupSpecData {
        cartan_type: ctx.factors.clone(),
        isogeny: IsogenyChoice::Adjoint,
        sigma: ctx.sigma.clone(),
        fr: ctx.fr.clone(),
        p: ctx.p,
        q: ctx.q,
    })
}

/// Convenience: the simply connected sibling of a context.
pub fn sc_sibling(ctx: &GroupContext) -> Result<GroupContext> {
    GroupContext::new_permissive(&GroupSpecData {
        cartan_type: ctx.factors.clone(),
        isogeny: IsogenyChoice::SimplyConnected,
        sigma: ctx.sigma.clone(),
        fr: ctx.fr.clone(),
        p: ctx.p,
        q: ctx.q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::{parse_cartan_type, DiagramAut, IsogenyChoice};

    fn ctx_of(ty: &str, iso: IsogenyChoice, fr_flip: bool, q: u64) -> GroupContext {
        let cartan_type = parse_cartan_type(ty).unwrap();
        let rank: usize = cartan_type.iter().map(|t| t.rank).sum();
        let mut p = 2;
        while q % p != 0 {
            p += 1;
        }
        let fr = if fr_flip {
            DiagramAut::from_perm((0..rank).rev().collect())
        } else {
            DiagramAut::identity(rank)
        };
        GroupContext::new_permissive(&GroupSpecData {
            cartan_type,
            isogeny: iso,
            sigma: DiagramAut::identity(rank),
            fr,
            p,
            q: Some(q),
        })
        .unwrap()
    }

    fn orbit_for<'a>(
        ctx: &'a GroupContext,
        table: &TwistedClassTable,
        label: &str,
        q: u64,
    ) -> ToriOrbit<'a> {
        let cid = (0..table.len())
            .find(|&c| class_label(ctx, table, c) == label)
            .unwrap();
        make_orbit(ctx, table, cid, q, &Choices::default()).unwrap()
    }

    #[test]
    fn sl_n_counts() {
        // Coxeter class of SL_n: gcd(n, q - 1) stable classes and the same
        // number of embeddings; the unramified flip form swaps q - 1 for q + 1
        for (n, ty) in [(2u64, "A1"), (3, "A2"), (4, "A3")] {
            for q in [3u64, 5, 7, 11, 13] {
                if q % n == 0 {
                    continue;
                }
                for flip in [false, true] {
                    let ctx = ctx_of(ty, IsogenyChoice::SimplyConnected, flip, q);
                    let table = weyl::sigma_classes(&ctx);
                    let orbit = orbit_for(&ctx, &table, "cox", q);
                    let stable = stable_classes(&orbit);
                    assert_eq!(
                        stable.len() as u64,
                        n.gcd(&(q - 1)),
                        "stable count for {ty} q={q} flip={flip}"
                    );
                    let expect = if flip { n.gcd(&(q + 1)) } else { n.gcd(&(q - 1)) };
                    for sc in &stable {
                        assert_eq!(
                            embedding_count(&orbit, sc.rep),
                            expect,
                            "embeddings for {ty} q={q} flip={flip}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sp4_minus_one_counts() {
        let ctx = ctx_of("C2", IsogenyChoice::SimplyConnected, false, 5);
        let table = weyl::sigma_classes(&ctx);
        let orbit = orbit_for(&ctx, &table, "-1", 5);
        assert_eq!(orbit.kac.ell, 4);
        // the descent coset is the whole Weyl group since -1 is central
        assert_eq!(orbit.w_fr_coset.len(), 8);
        let stable = stable_classes(&orbit);
        assert_eq!(stable.len(), 5);
        let mut emb: Vec<u64> =
            stable.iter().map(|sc| embedding_count(&orbit, sc.rep)).collect();
        emb.sort_unstable();
        assert_eq!(emb, vec![2, 2, 4, 4, 4]);
        let rd = rational_class_count(&orbit, &Choices::default()).unwrap();
        assert_eq!(rd.total, 14, "4 divides q - 1");
        let ctx = ctx_of("C2", IsogenyChoice::SimplyConnected, false, 3);
        let table = weyl::sigma_classes(&ctx);
        let orbit = orbit_for(&ctx, &table, "-1", 3);
        let rd = rational_class_count(&orbit, &Choices::default()).unwrap();
        assert_eq!(rd.total, 6, "4 does not divide q - 1");
    }

    #[test]
    fn sp4_coxeter_counts() {
        for q in [3u64, 5, 7, 9, 11, 13] {
            let ctx = ctx_of("C2", IsogenyChoice::SimplyConnected, false, q);
            let table = weyl::sigma_classes(&ctx);
            let orbit = orbit_for(&ctx, &table, "cox", q);
            assert_eq!(orbit.kac.ell, 8);
            let stable = stable_classes(&orbit);
            assert_eq!(stable.len() as u64, (q - 1).gcd(&4));
            for sc in &stable {
                assert_eq!(embedding_count(&orbit, sc.rep), 2);
            }
            let rd = rational_class_count(&orbit, &Choices::default()).unwrap();
            assert_eq!(rd.total, (q - 1).gcd(&8));
        }
    }

    #[test]
    fn transfer_to_psp4() {
        for q in [3u64, 5] {
            let ctx = ctx_of("C2", IsogenyChoice::SimplyConnected, false, q);
            let table = weyl::sigma_classes(&ctx);
            let kernel = ctx.central_torsion_points();
            let nontrivial: Vec<_> =
                kernel.iter().filter(|z| !z.is_zero()).cloned().collect();
            // trivial kernel changes nothing
            let orbit = orbit_for(&ctx, &table, "cox", q);
            let td = isogeny_transfer(&orbit, &[], &Choices::default()).unwrap();
            assert_eq!(td.embeddings, vec![2; td.stable as usize]);
            assert_eq!(
                td.rational.unwrap().total,
                rational_class_count(&orbit, &Choices::default()).unwrap().total
            );
            // the full center gives the adjoint counts
            let td = isogeny_transfer(&orbit, &nontrivial, &Choices::default()).unwrap();
            assert_eq!(td.embeddings, vec![1; td.stable as usize]);
            assert_eq!(td.rational.unwrap().total, (q - 1).gcd(&4));
            let orbit = orbit_for(&ctx, &table, "-1", q);
            let td = isogeny_transfer(&orbit, &nontrivial, &Choices::default()).unwrap();
            assert_eq!(td.stable, 5);
            let expect = if (q - 1) % 4 == 0 { 10 } else { 6 };
            assert_eq!(td.rational.unwrap().total, expect);
        }
    }

    #[test]
    fn component_sequence_lattices() {
        // simply connected: the fundamental group is trivial and the two
        // torus counts coincide
        let ctx = ctx_of("C2", IsogenyChoice::SimplyConnected, false, 5);
        let table = weyl::sigma_classes(&ctx);
        let orbit = orbit_for(&ctx, &table, "cox", 5);
        let sq = component_sequence_check(&orbit).unwrap();
        assert_eq!(sq.omega_part, 1);
        assert_eq!(sq.torus_components, sq.residue_part);
        // adjoint C2: omega contributes a factor of two
        let ctx = ctx_of("C2", IsogenyChoice::Adjoint, false, 5);
        let table = weyl::sigma_classes(&ctx);
        let orbit = orbit_for(&ctx, &table, "cox", 5);
        let sq = component_sequence_check(&orbit).unwrap();
        assert_eq!(sq.omega_part, 2);
        assert_eq!(sq.torus_components, sq.residue_part * 2);
        // adjoint A1 at odd q
        let ctx = ctx_of("A1", IsogenyChoice::Adjoint, false, 5);
        let table = weyl::sigma_classes(&ctx);
        let orbit = orbit_for(&ctx, &table, "-1", 5);
        component_sequence_check(&orbit).unwrap();
    }

    #[test]
    fn sl2_full_report() {
        let ctx = ctx_of("A1", IsogenyChoice::SimplyConnected, false, 3);
        let report = full_report(&ctx, 3, &Choices::default()).unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert_eq!(row.stable, 2);
        assert_eq!(row.embeddings, vec![2, 2]);
        assert_eq!(row.rational, Some(4));
    }

    #[test]
    fn coxeter_reports() {
        let ctx = ctx_of("A2", IsogenyChoice::SimplyConnected, false, 7);
        let rep = coxeter_report(&ctx, 7, &Choices::default()).unwrap();
        assert_eq!(rep.center_order, 3);
        assert!(rep.barycenter_checked);
        let ctx = ctx_of("G2", IsogenyChoice::SimplyConnected, false, 7);
        let rep = coxeter_report(&ctx, 7, &Choices::default()).unwrap();
        assert_eq!(rep.stable, 6);
        assert!(!rep.barycenter_checked);
        let ctx = ctx_of("C2", IsogenyChoice::SimplyConnected, false, 5);
        let rep = coxeter_report(&ctx, 5, &Choices::default()).unwrap();
        assert_eq!(rep.center_order, 2);
    }

    #[test]
    fn product_orbit_not_defined_over_k() {
        let cartan_type = parse_cartan_type("G2xG2xG2").unwrap();
        let ctx = GroupContext::new(&GroupSpecData {
            cartan_type,
            isogeny: IsogenyChoice::SimplyConnected,
            sigma: DiagramAut::identity(6),
            fr: DiagramAut::from_perm(vec![2, 3, 4, 5, 0, 1]),
            p: 5,
            q: Some(5),
        })
        .unwrap();
        ctx.try_weyl(2000).unwrap();
        let w = ctx.weyl();
        let table = weyl::sigma_classes(&ctx);
        // mixed class: distinct elliptic types on the three factors
        let mixed = {
            let cox0 = ctx.simple_reflections[0].mul(&ctx.simple_reflections[1]);
            let rot1 = {
                let r = ctx.simple_reflections[2].mul(&ctx.simple_reflections[3]);
                r.mul(&r)
            };
            let m12 = ctx.simple_reflections[4].mul(&ctx.simple_reflections[5]).pow(3);
            cox0.mul(&rot1).mul(&m12)
        };
        let cid = table.class_of[w.id_of(&mixed)];
        match make_orbit(&ctx, &table, cid, 5, &Choices::default()) {
            Err(Error::NotDefinedOverK) => {}
            other => panic!("expected NotDefinedOverK, got {other:?}"),
        }
        // the diagonal Coxeter class survives
        let diag = {
            let mut m = SqMat::identity(6);
            for s in &ctx.simple_reflections {
                m = m.mul(s);
            }
            m
        };
        let cid = table.class_of[w.id_of(&diag)];
        assert!(make_orbit(&ctx, &table, cid, 5, &Choices::default()).is_ok());
    }

    #[test]
    fn choice_independence_spot() {
        let ctx = ctx_of("G2", IsogenyChoice::SimplyConnected, false, 7);
        let base = full_report(&ctx, 7, &Choices::default()).unwrap();
        let table = weyl::sigma_classes(&ctx);
        for class_id in weyl::fr_stable_elliptic_classes(&ctx, 7) {
            let members = table.classes[class_id].clone();
            for &member in members.iter().take(3) {
                let choices = Choices {
                    rep_member: Some(member),
                    w_fr_member: None,
                    unit_exp: None,
                    z_index: None,
                };
                let orbit = make_orbit(&ctx, &table, class_id, 7, &choices).unwrap();
                let stable = stable_classes(&orbit);
                let base_row = base
                    .rows
                    .iter()
                    .find(|r| {
                        (r.point_numerator.clone(), r.point_denominator) == orbit.kac.reduced_point()
                    })
                    .unwrap();
                assert_eq!(stable.len() as u64, base_row.stable);
                let mut emb: Vec<u64> =
                    stable.iter().map(|sc| embedding_count(&orbit, sc.rep)).collect();
                emb.sort_unstable();
                let mut expect = base_row.embeddings.clone();
                expect.sort_unstable();
                assert_eq!(emb, expect);
                if let Ok(rd) = rational_class_count(&orbit, &choices) {
                    assert_eq!(Some(rd.total), base_row.rational);
                }
            }
        }
    }

    #[test]
    fn unramified_su3_coxeter() {
        let ctx = ctx_of("A2", IsogenyChoice::SimplyConnected, true, 5);
        let report = full_report(&ctx, 5, &Choices::default()).unwrap();
        let cox = report.rows.iter().find(|r| r.label == "cox").unwrap();
        assert_eq!(cox.stable, 1, "gcd(3, q - 1) for q = 5");
        assert_eq!(cox.embeddings, vec![3], "gcd(3, q + 1) for q = 5");
    }
}
