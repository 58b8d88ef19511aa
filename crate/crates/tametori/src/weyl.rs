//! Weyl group enumeration, twisted conjugacy, ellipticity and tameness
//! tests, the twisted norm map, and the Frobenius descent solver.

use std::collections::HashMap;

use crate::error::Error;
use crate::mat::SqMat;
use crate::rootdata::GroupContext;
use crate::Result;

/// Upper bound on the Weyl group order for exhaustive enumeration; F4 is
/// the largest type that any verified table needs.
pub const DEFAULT_ORDER_BOUND: usize = 1152;

/// A Weyl group element: integer matrix acting on coroot coordinates plus
/// a reduced word in simple reflections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeylElement {
    pub matrix: SqMat,
    pub word: Vec<usize>,
}

/// The full Weyl group, enumerated by closure under simple reflections.
///
/// Elements are indexed in a deterministic breadth-first order with BFS
/// depth equal to Coxeter length, so `words[i]` is a reduced word.
pub struct WeylGroup {
    pub rank: usize,
    pub elements: Vec<SqMat>,
    pub words: Vec<Vec<usize>>,
    index: HashMap<SqMat, usize>,
    mul_table: std::sync::OnceLock<Vec<u32>>,
}

impl WeylGroup {
    pub fn enumerate(ctx: &GroupContext, bound: usize) -> Result<WeylGroup> {
        let expected = ctx.weyl_order_formula();
        if expected as usize > bound {
            return Err(Error::GroupTooLarge { bound });
        }
        let rank = ctx.rank;
        let mut elements = vec![SqMat::identity(rank)];
        let mut words: Vec<Vec<usize>> = vec![vec![]];
        let mut index = HashMap::new();
        index.insert(elements[0].clone(), 0usize);
        let mut head = 0;
        while head < elements.len() {
            let cur = elements[head].clone();
            let cur_word = words[head].clone();
            for (s, refl) in ctx.simple_reflections.iter().enumerate() {
                let next = cur.mul(refl);
                if !index.contains_key(&next) {
                    index.insert(next.clone(), elements.len());
                    elements.push(next);
                    let mut w = cur_word.clone();
                    w.push(s);
                    words.push(w);
                }
            }
            head += 1;
        }
        assert_eq!(
            elements.len() as u64,
            expected,
            "enumeration disagrees with the order formula"
        );
        Ok(WeylGroup {
            rank,
            elements,
            words,
            index,
            mul_table: std::sync::OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id_of(&self, m: &SqMat) -> usize {
        *self.index.get(m).expect("matrix is not a Weyl element")
    }

    pub fn try_id_of(&self, m: &SqMat) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn element(&self, id: usize) -> WeylElement {
        WeylElement { matrix: self.elements[id].clone(), word: self.words[id].clone() }
    }

    fn table(&self) -> &Vec<u32> {
        self.mul_table.get_or_init(|| {
            let n = self.len();
            let mut t = vec![0u32; n * n];
            for i in 0..n {
                for j in 0..n {
                    t[i * n + j] = self.id_of(&self.elements[i].mul(&self.elements[j])) as u32;
                }
            }
            t
        })
    }

    #[inline]
    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.table()[i * self.len() + j] as usize
    }

    pub fn inv(&self, i: usize) -> usize {
        let n = self.len();
        (0..n).find(|&j| self.mul(i, j) == 0).unwrap()
    }

    /// Identity element id (always 0 by construction).
    pub fn identity(&self) -> usize {
        0
    }

    /// The action of a diagram automorphism as a permutation of element ids.
    pub fn twist_permutation(&self, aut_matrix: &SqMat) -> Vec<usize> {
        let inv = {
            // permutation matrices invert by transposition
            aut_matrix.transpose()
        };
        (0..self.len())
            .map(|i| self.id_of(&aut_matrix.mul(&self.elements[i]).mul(&inv)))
            .collect()
    }
}

/// Partition of the Weyl group into twisted conjugacy classes for the
/// equivalence `x ~ g^-1 x tau(g)`.
#[derive(Debug, Clone)]
pub struct TwistedClassTable {
    /// class id per element
    pub class_of: Vec<usize>,
    /// members of each class, sorted
    pub classes: Vec<Vec<usize>>,
    /// canonical representative: element with the lexicographically
    /// smallest matrix
    pub reps: Vec<usize>,
}

impl TwistedClassTable {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// Twisted conjugacy classes under `x ~ g^-1 x tau(g)` where `tau` is
/// given as a permutation of element ids.
pub fn twisted_classes(w: &WeylGroup, tau: &[usize]) -> TwistedClassTable {
    let n = w.len();
    let mut class_of = vec![usize::MAX; n];
    let mut classes = Vec::new();
    for start in 0..n {
        if class_of[start] != usize::MAX {
            continue;
        }
        let cid = classes.len();
        let mut members = vec![start];
        class_of[start] = cid;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for g in 0..n {
                let y = w.mul(w.mul(w.inv(g), x), tau[g]);
                if class_of[y] == usize::MAX {
                    class_of[y] = cid;
                    members.push(y);
                    stack.push(y);
                }
            }
        }
        members.sort_unstable();
        classes.push(members);
    }
    let reps = classes
        .iter()
        .map(|members| {
            members
                .iter()
                .copied()
                .min_by(|&a, &b| w.elements[a].cmp(&w.elements[b]))
                .unwrap()
        })
        .collect();
    TwistedClassTable { class_of, classes, reps }
}

/// Twisted conjugacy classes for the inertia twist of the context.
pub fn sigma_classes(ctx: &GroupContext) -> TwistedClassTable {
    let w = ctx.weyl();
    let tau = w.twist_permutation(&ctx.sigma_matrix());
    twisted_classes(w, &tau)
}

/// Ellipticity: no nonzero fixed vector of `w sigma` on the cocharacter
/// space of the derived group (the whole space here, the context being
/// semisimple).
pub fn is_elliptic(ctx: &GroupContext, w: &SqMat) -> bool {
    let m = w.mul(&ctx.sigma_matrix());
    let mut a = m.to_int_matrix();
    for i in 0..a.rows {
        a[(i, i)] -= num_bigint::BigInt::from(1);
    }
    !num_traits::Zero::is_zero(&a.det())
}

/// Order of `(w, sigma)` in the extension of the Weyl group by the diagram
/// automorphisms; faithful on coroot coordinates because diagram
/// automorphisms preserve the simple system.
pub fn twisted_order(ctx: &GroupContext, w: &SqMat) -> u64 {
    let m = w.mul(&ctx.sigma_matrix());
    m.order(4 * DEFAULT_ORDER_BOUND as u64)
}

/// Tameness of a class member: p does not divide the twisted order.
pub fn is_tame_class(ctx: &GroupContext, w: &SqMat, p: u64) -> bool {
    p == 0 || twisted_order(ctx, w) % p != 0
}

/// Twisted norm `w sigma(w) sigma^2(w) ... sigma^(d-1)(w)`, equal to
/// `(w sigma)^d sigma^-d` as matrices.
pub fn norm_map(ctx: &GroupContext, w: &SqMat, d: u64) -> SqMat {
    let s = ctx.sigma_matrix();
    let ws = w.mul(&s);
    let pow = ws.pow(d);
    let s_order = ctx.sigma.order as u64;
    let s_inv_pow = s.pow(s_order - (d % s_order) % s_order);
    pow.mul(&s_inv_pow)
}

/// Apply the composite Frobenius-after-norm map to an element and return
/// the resulting matrix.
pub fn fr_norm(ctx: &GroupContext, w: &SqMat, q: u64) -> SqMat {
    let f = ctx.fr_matrix();
    let finv = f.transpose();
    f.mul(&norm_map(ctx, w, q)).mul(&finv)
}

/// The tame elliptic twisted classes fixed by the Frobenius-norm map.
pub fn fr_stable_elliptic_classes(ctx: &GroupContext, q: u64) -> Vec<usize> {
    let w = ctx.weyl();
    let table = sigma_classes(ctx);
    (0..table.len())
        .filter(|&c| {
            let rep = &w.elements[table.reps[c]];
            is_tame_class(ctx, rep, ctx.p)
                && is_elliptic(ctx, rep)
                && table.class_of[w.id_of(&fr_norm(ctx, rep, q))] == c
        })
        .collect()
}

/// Fixed points of conjugation by `w sigma`: the Weyl elements whose
/// matrices commute with `w sigma`.
pub fn twisted_centralizer(ctx: &GroupContext, w: &SqMat) -> Vec<usize> {
    let ws = w.mul(&ctx.sigma_matrix());
    let wg = ctx.weyl();
    (0..wg.len())
        .filter(|&i| wg.elements[i].mul(&ws) == ws.mul(&wg.elements[i]))
        .collect()
}

/// All solutions `f` of the descent equation
/// `fr(norm_q(w)) = f^-1 w sigma(f)`.
///
/// When the class of `w` is stable under the Frobenius-norm map the
/// solution set is nonempty and forms a left coset of the twisted
/// centralizer of `w`.
pub fn solve_w_fr(ctx: &GroupContext, w: &SqMat, q: u64) -> Result<Vec<usize>> {
    let wg = ctx.weyl();
    let target = fr_norm(ctx, w, q);
    let s = ctx.sigma_matrix();
    let s_inv = s.transpose();
    let sols: Vec<usize> = (0..wg.len())
        .filter(|&i| {
            let f = &wg.elements[i];
            let f_inv = &wg.elements[wg.inv(i)];
            let sigma_f = s.mul(f).mul(&s_inv);
            f_inv.mul(w).mul(&sigma_f) == target
        })
        .collect();
    if sols.is_empty() {
        return Err(Error::NoSolution);
    }
    Ok(sols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::{parse_cartan_type, DiagramAut, GroupSpecData, IsogenyChoice};

    fn ctx(ty: &str, q: Option<u64>) -> GroupContext {
        let cartan_type = parse_cartan_type(ty).unwrap();
        let rank: usize = cartan_type.iter().map(|t| t.rank).sum();
        GroupContext::new_permissive(&GroupSpecData {
            cartan_type,
            isogeny: IsogenyChoice::SimplyConnected,
            sigma: DiagramAut::identity(rank),
            fr: DiagramAut::identity(rank),
            p: 0,
            q,
        })
        .unwrap()
    }

    fn su3_ctx(q: u64) -> GroupContext {
        GroupContext::new(&GroupSpecData {
            cartan_type: parse_cartan_type("A2").unwrap(),
            isogeny: IsogenyChoice::SimplyConnected,
            sigma: DiagramAut::from_perm(vec![1, 0]),
            fr: DiagramAut::identity(2),
            p: q,
            q: Some(q),
        })
        .unwrap()
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(ctx("A1", None).weyl().len(), 2);
        assert_eq!(ctx("C2", None).weyl().len(), 8);
        assert_eq!(ctx("G2", None).weyl().len(), 12);
        assert_eq!(ctx("A2", None).weyl().len(), 6);
    }

    #[test]
    fn group_too_large() {
        let c = ctx("C2", None);
        assert!(matches!(
            WeylGroup::enumerate(&c, 4),
            Err(Error::GroupTooLarge { .. })
        ));
    }

    #[test]
    fn ordinary_classes() {
        let c = ctx("C2", None);
        let t = sigma_classes(&c);
        assert_eq!(t.len(), 5);
        let c = ctx("A1", None);
        assert_eq!(sigma_classes(&c).len(), 2);
    }

    #[test]
    fn su3_sigma_classes() {
        let c = su3_ctx(7);
        let table = sigma_classes(&c);
        assert_eq!(table.len(), 3);
        let w = c.weyl();
        // identity class contains the two rotations
        let id_class = &table.classes[table.class_of[0]];
        assert_eq!(id_class.len(), 3);
        // reflections split as {w_a, w_b} and {w_0}
        let refl_class = table.class_of[w.id_of(&c.simple_reflections[0])];
        assert_eq!(table.classes[refl_class].len(), 2);
        let elliptic: Vec<bool> = (0..3)
            .map(|i| is_elliptic(&c, &w.elements[table.reps[i]]))
            .collect();
        assert_eq!(elliptic.iter().filter(|&&b| b).count(), 2);
        // w_a sigma is elliptic even though w_a alone is not
        assert!(is_elliptic(&c, &c.simple_reflections[0]));
    }

    #[test]
    fn elliptic_and_tame() {
        let c = ctx("C2", None);
        let w = c.weyl();
        let cox = c.simple_reflections[0].mul(&c.simple_reflections[1]);
        assert!(is_elliptic(&c, &cox));
        assert!(!is_elliptic(&c, &SqMat::identity(2)));
        assert_eq!(twisted_order(&c, &cox), 4);
        assert!(is_tame_class(&c, &cox, 5));
        assert!(!is_tame_class(&c, &cox, 2));
        assert!(is_tame_class(&c, &cox, 0));
        let _ = w;
    }

    #[test]
    fn norm_map_split_and_twisted() {
        let c = ctx("C2", None);
        let cox = c.simple_reflections[0].mul(&c.simple_reflections[1]);
        assert_eq!(norm_map(&c, &cox, 1), cox);
        assert_eq!(norm_map(&c, &cox, 5), cox);
        let c = su3_ctx(7);
        let wa = &c.simple_reflections[0];
        let wb = &c.simple_reflections[1];
        assert_eq!(norm_map(&c, wa, 2), wa.mul(wb));
    }

    #[test]
    fn stability() {
        let c = ctx("C2", Some(5));
        let stable = fr_stable_elliptic_classes(&c, 5);
        assert_eq!(stable.len(), 2);
        let c = su3_ctx(7);
        let stable = fr_stable_elliptic_classes(&c, 7);
        assert_eq!(stable.len(), 2, "both elliptic classes stable for q = 1 mod 6");
    }

    #[test]
    fn mismatched_product_not_stable() {
        // restriction of scalars: three G2 factors permuted cyclically
        let cartan_type = parse_cartan_type("G2xG2xG2").unwrap();
        let c = GroupContext::new(&GroupSpecData {
            cartan_type,
            isogeny: IsogenyChoice::SimplyConnected,
            sigma: DiagramAut::identity(6),
            fr: DiagramAut::from_perm(vec![2, 3, 4, 5, 0, 1]),
            p: 5,
            q: Some(5),
        })
        .unwrap();
        let w = c.try_weyl(2000).unwrap();
        // put distinct elliptic classes on the three factors
        let block = |i: usize, j: usize| -> SqMat {
            // product of reflections i..j of one G2 block embedded globally
            let mut m = SqMat::identity(6);
            for k in i..j {
                m = m.mul(&c.simple_reflections[k]);
            }
            m
        };
        let cox0 = block(0, 2);
        let a2_1 = {
            let r = c.simple_reflections[2].mul(&c.simple_reflections[3]);
            r.mul(&r)
        };
        let minus1_2 = block(4, 6).pow(3);
        let mixed = cox0.mul(&a2_1).mul(&minus1_2);
        assert!(is_elliptic(&c, &mixed));
        let table = sigma_classes(&c);
        let cls = table.class_of[w.id_of(&mixed)];
        let stable = fr_stable_elliptic_classes(&c, 5);
        assert!(
            !stable.contains(&cls),
            "mismatched factor classes cannot be Frobenius-norm stable"
        );
    }

    #[test]
    fn centralizers() {
        let c = ctx("C2", None);
        let cox = c.simple_reflections[0].mul(&c.simple_reflections[1]);
        let z = twisted_centralizer(&c, &cox);
        assert_eq!(z.len(), 4, "Coxeter centralizer is the cyclic group it generates");
        let minus_one = cox.pow(2);
        assert!(minus_one.is_minus_identity());
        assert_eq!(twisted_centralizer(&c, &minus_one).len(), 8);
        // ramified SU3: the long element centralizer is everything
        let c = su3_ctx(7);
        let w0 = c.simple_reflections[0]
            .mul(&c.simple_reflections[1])
            .mul(&c.simple_reflections[0]);
        assert!(w0.mul(&c.sigma_matrix()).is_minus_identity());
        assert_eq!(twisted_centralizer(&c, &w0).len(), 6);
    }

    #[test]
    fn w_fr_solutions() {
        // split A1, q odd: every element solves the descent equation
        let c = ctx("A1", Some(3));
        let refl = &c.simple_reflections[0];
        let sols = solve_w_fr(&c, refl, 3).unwrap();
        assert_eq!(sols.len(), 2);
        // G2, order 3 class: trivial solution iff q = 1 mod 3
        let c = ctx("G2", Some(7));
        let w = {
            let r = c.simple_reflections[0].mul(&c.simple_reflections[1]);
            r.mul(&r)
        };
        let sols = solve_w_fr(&c, &w, 7).unwrap();
        assert!(sols.contains(&c.weyl().identity()));
        let sols = solve_w_fr(&c, &w, 5).unwrap();
        assert!(!sols.contains(&c.weyl().identity()));
        let wa = c.weyl().id_of(&c.simple_reflections[0]);
        assert!(sols.contains(&wa), "q = -1 mod 6 descends through a reflection");
        // solution sets are cosets of the twisted centralizer
        let z = twisted_centralizer(&c, &w);
        assert_eq!(sols.len(), z.len());
        let wg = c.weyl();
        for &s in &sols {
            for &v in &z {
                assert!(sols.contains(&wg.mul(v, s)));
            }
        }
    }

    #[test]
    fn weyl_groups_are_rational() {
        for ty in ["A1", "A2", "A3", "C2", "G2"] {
            let c = ctx(ty, None);
            let w = c.weyl();
            let table = sigma_classes(&c);
            for i in 0..w.len() {
                let ord = w.elements[i].order(100);
                for j in 1..ord {
                    if num_integer::gcd(j, ord) == 1 {
                        let pw = w.id_of(&w.elements[i].pow(j));
                        assert_eq!(
                            table.class_of[i], table.class_of[pw],
                            "power {j} of element {i} in {ty} leaves its class"
                        );
                    }
                }
            }
        }
    }
}
