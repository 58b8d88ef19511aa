//! Alcove points and normalized Kac coordinates of tame elliptic twisted
//! classes, assigned by eigenvalue matching in the adjoint representation.
//!
//! For a class representative `w` with canonical lift `n`, the order of
//! `n sigma` in the extended lift group determines a torsion order `ell`;
//! among the lattice points `lambda` with `lambda / ell` in the closed
//! alcove, exactly one reproduces the eigenvalue multiset of `Ad(n) sigma`
//! as a torus point, and that point is the attached alcove point.

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::chevalley::{torus_sigma_profile, TitsTorsionModel};
use crate::error::Error;
use crate::rootdata::{
    alcove_membership, simple_affine_roots, AlcovePoint, GroupContext, Membership,
};
use crate::weyl::{self, TwistedClassTable};
use crate::Result;

/// The alcove point data of one tame elliptic twisted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KacPoint {
    pub class_id: usize,
    /// order of the lift times the inertia twist
    pub ell: u64,
    /// numerator cocharacter in coroot coordinates: point = lambda / ell
    pub lambda: Vec<Rational64>,
    pub point: AlcovePoint,
    /// least j with every wall value in (1/j) Z
    pub j: i64,
    /// normalized Kac coordinates (j * wall value) in wall order
    pub coords: Vec<i64>,
}

impl KacPoint {
    /// Point in lowest terms: numerator in coroot coordinates over a
    /// common denominator.
    pub fn reduced_point(&self) -> (Vec<i64>, i64) {
        let den = self.point.denominator();
        let num: Vec<i64> = self
            .point
            .coords
            .iter()
            .map(|c| {
                let v = c * Rational64::from_integer(den);
                assert!(v.denom().is_one());
                *v.numer()
            })
            .collect();
        (num, den)
    }
}

/// All lattice cocharacters `lambda` fixed by the inertia twist with
/// `lambda / ell` in the closed alcove.
pub fn candidate_points(ctx: &GroupContext, ell: u64) -> Result<Vec<Vec<Rational64>>> {
    let walls = simple_affine_roots(ctx)?;
    let r = ctx.rank;
    let ell_q = Rational64::from_integer(ell as i64);
    // bounding box in lattice coordinates from the scaled alcove vertices
    let vertices = alcove_vertex_coords(ctx)?;
    let mut lo = vec![Rational64::zero(); r];
    let mut hi = vec![Rational64::zero(); r];
    for v in &vertices {
        let scaled: Vec<Rational64> = v.iter().map(|x| x * ell_q).collect();
        let c = ctx.lattice.inv.apply(&scaled);
        for i in 0..r {
            lo[i] = lo[i].min(c[i]);
            hi[i] = hi[i].max(c[i]);
        }
    }
    let lo: Vec<i64> = lo.iter().map(|x| x.floor().to_integer()).collect();
    let hi: Vec<i64> = hi.iter().map(|x| x.ceil().to_integer()).collect();
    let sigma_mat = ctx.sigma_matrix();
    let mut out = Vec::new();
    let mut cursor = lo.clone();
    'outer: loop {
        let lambda = ctx.lattice.vector(&cursor);
        let accept = {
            let fixed = sigma_mat.apply_rational(&lambda) == lambda;
            fixed && {
                let x = AlcovePoint { coords: lambda.iter().map(|c| c / ell_q).collect() };
                walls
                    .iter()
                    .all(|w| !w.eval(&ctx.cartan, &x).lt(&Rational64::zero()))
            }
        };
        if accept {
            out.push(lambda);
        }
        for i in 0..r {
            cursor[i] += 1;
            if cursor[i] <= hi[i] {
                continue 'outer;
            }
            cursor[i] = lo[i];
        }
        break;
    }
    out.sort();
    Ok(out)
}

/// Vertices of the closed fundamental alcove in coroot coordinates.
fn alcove_vertex_coords(ctx: &GroupContext) -> Result<Vec<Vec<Rational64>>> {
    let r = ctx.rank;
    let mut out = vec![vec![Rational64::zero(); r]];
    if ctx.sigma.is_identity() {
        // per factor: fundamental coweights over the highest root marks
        let inv_cartan = crate::mat::QMat::from_sq(&ctx.cartan).inverse();
        for (fi, ty) in ctx.factors.iter().enumerate() {
            let off = ctx.factor_offset[fi];
            let marks = ctx.marks(fi);
            let mut factor_verts = Vec::new();
            for k in 0..ty.rank {
                // coweight of node off + k: row of the inverse Cartan
                let mut v = vec![Rational64::zero(); r];
                for j in 0..r {
                    v[j] = inv_cartan.at(off + k, j) / Rational64::from_integer(marks[k + 1]);
                }
                factor_verts.push(v);
            }
            // alcove of a product: sum of factor vertices; a bounding box
            // of the union of factor vertices and the origin is enough
            out.extend(factor_verts);
        }
        // product types need the combined corners for a safe box
        if ctx.factors.len() > 1 {
            let singles = out.clone();
            let mut sum = vec![Rational64::zero(); r];
            for v in &singles {
                for i in 0..r {
                    sum[i] += v[i];
                }
            }
            out.push(sum);
        }
        return Ok(out);
    }
    // ramified SU3 alcove: the segment from the origin to (1/4)(sum of coroots)
    if ctx.factors.len() == 1 && ctx.factors[0].letter == 'A' && ctx.factors[0].rank == 2 {
        out.push(vec![Rational64::new(1, 4), Rational64::new(1, 4)]);
        return Ok(out);
    }
    Err(Error::UnsupportedTwist("alcove vertices for this twist".into()))
}

/// Assign the alcove point of one tame elliptic class by profile matching.
///
/// `unit_exp` rescales the abstract primitive root of unity; the matched
/// point does not depend on it and callers may use that to fuzz.
pub fn assign_point(
    ctx: &GroupContext,
    table: &TwistedClassTable,
    class_id: usize,
    rep_choice: Option<usize>,
    unit_exp: u64,
) -> Result<KacPoint> {
    let w = ctx.weyl();
    let rep = match rep_choice {
        Some(member) => {
            assert!(table.classes[class_id].contains(&member));
            member
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
    let tits = TitsTorsionModel::new(ctx);
    let ell = tits.twisted_order(rep);
    assert!(unit_exp.gcd(&ell) == 1 || ell == 1, "unit must be prime to the order");
    let model = ctx.chevalley();
    let sigma_ad = if ctx.sigma.is_identity() {
        crate::chevalley::AdMonomial::identity(ctx.rank, model.n_roots)
    } else {
        model.pinned_auto(&ctx.sigma.perm)
    };
    let lift = &model.lifts(ctx)[rep];
    let target = lift.compose(&sigma_ad).profile()?;
    assert!(target.is_galois_stable());
    let mut matches = Vec::new();
    for lambda in candidate_points(ctx, ell)? {
        match torus_sigma_profile(model, &sigma_ad, &lambda, ell, unit_exp) {
            Ok(prof) => {
                if prof == target {
                    matches.push(lambda);
                }
            }
            Err(Error::NotGaloisStable) => {}
            Err(e) => return Err(e),
        }
    }
    match matches.len() {
        0 => Err(Error::NoMatch),
        1 => {
            let lambda = matches.pop().unwrap();
            let point = AlcovePoint {
                coords: lambda
                    .iter()
                    .map(|c| c / Rational64::from_integer(ell as i64))
                    .collect(),
            };
            debug_assert!(!matches!(
                alcove_membership(ctx, &point)?,
                Membership::Outside
            ));
            let (j, coords) = kac_coordinates(ctx, &point)?;
            Ok(KacPoint { class_id, ell, lambda, point, j, coords })
        }
        _ => Err(Error::AmbiguousMatch(
            matches.iter().map(|m| format!("{m:?}")).collect(),
        )),
    }
}

/// Normalized Kac coordinates of a point of the closed alcove: the least
/// `j` clearing every wall value to an integer, and the tuple of scaled
/// wall values in deterministic wall order.
pub fn kac_coordinates(ctx: &GroupContext, point: &AlcovePoint) -> Result<(i64, Vec<i64>)> {
    let walls = simple_affine_roots(ctx)?;
    let values: Vec<Rational64> = walls.iter().map(|w| w.eval(&ctx.cartan, point)).collect();
    let mut j: i64 = 1;
    for v in &values {
        j = num_integer::lcm(j, *v.denom());
    }
    let coords = values
        .iter()
        .map(|v| {
            let s = v * Rational64::from_integer(j);
            assert!(s.denom().is_one());
            *s.numer()
        })
        .collect();
    Ok((j, coords))
}

/// Alcove points for every tame elliptic twisted class, with the
/// pairwise distinctness of the class-to-point map asserted.
pub fn all_points(ctx: &GroupContext) -> Result<Vec<KacPoint>> {
    let w = ctx.weyl();
    let table = weyl::sigma_classes(ctx);
    let mut out = Vec::new();
    for c in 0..table.len() {
        let rep = &w.elements[table.reps[c]];
        if weyl::is_elliptic(ctx, rep) && weyl::is_tame_class(ctx, rep, ctx.p) {
            out.push(assign_point(ctx, &table, c, None, 1)?);
        }
    }
    for i in 0..out.len() {
        for j in i + 1..out.len() {
            if out[i].point == out[j].point {
                return Err(Error::CheckFailed(format!(
                    "distinct classes {} and {} share the alcove point {:?}",
                    out[i].class_id, out[j].class_id, out[i].point
                )));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::{parse_cartan_type, DiagramAut, GroupSpecData, IsogenyChoice};

    fn ctx(ty: &str, q: u64) -> GroupContext {
        let cartan_type = parse_cartan_type(ty).unwrap();
        let rank: usize = cartan_type.iter().map(|t| t.rank).sum();
        let mut p = 2;
        while q % p != 0 {
            p += 1;
        }
        GroupContext::new_permissive(&GroupSpecData {
            cartan_type,
            isogeny: IsogenyChoice::SimplyConnected,
            sigma: DiagramAut::identity(rank),
            fr: DiagramAut::identity(rank),
            p,
            q: Some(q),
        })
        .unwrap()
    }

    fn su3(q: u64) -> GroupContext {
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

    fn points_of(c: &GroupContext) -> Vec<(Vec<i64>, i64)> {
        all_points(c).unwrap().iter().map(|kp| kp.reduced_point()).collect()
    }

    #[test]
    fn candidates_contain_known_numerators() {
        let c = ctx("C2", 5);
        let cands = candidate_points(&c, 4).unwrap();
        let target = vec![Rational64::from_integer(1), Rational64::from_integer(2)];
        assert!(cands.contains(&target));
        let c = ctx("G2", 5);
        let cands = candidate_points(&c, 6).unwrap();
        let target = vec![Rational64::from_integer(3), Rational64::from_integer(5)];
        assert!(cands.contains(&target));
        let cands = candidate_points(&c, 1).unwrap();
        assert!(cands.contains(&vec![Rational64::zero(), Rational64::zero()]));
    }

    #[test]
    fn sp4_points() {
        let c = ctx("C2", 5);
        let pts = points_of(&c);
        assert_eq!(pts.len(), 2);
        assert!(pts.contains(&(vec![3, 4], 8)), "Coxeter point 3/8, 4/8: {pts:?}");
        assert!(pts.contains(&(vec![1, 2], 4)), "order two point 1/4, 2/4: {pts:?}");
    }

    #[test]
    fn g2_points() {
        let c = ctx("G2", 5);
        let pts = points_of(&c);
        assert_eq!(pts.len(), 3);
        assert!(pts.contains(&(vec![3, 5], 6)));
        assert!(pts.contains(&(vec![1, 2], 3)));
        assert!(pts.contains(&(vec![1, 2], 2)));
    }

    #[test]
    fn ramified_su3_points() {
        let c = su3(7);
        let pts = points_of(&c);
        assert_eq!(pts.len(), 2);
        assert!(pts.contains(&(vec![1, 1], 6)), "twisted Coxeter at (1,1)/6: {pts:?}");
        assert!(pts.contains(&(vec![0, 0], 1)), "long element at the base vertex: {pts:?}");
    }

    #[test]
    fn g2_coxeter_coordinates() {
        let c = ctx("G2", 5);
        let kps = all_points(&c).unwrap();
        let cox = kps.iter().find(|kp| kp.reduced_point() == (vec![3, 5], 6)).unwrap();
        assert_eq!(cox.j, 6);
        assert_eq!(cox.coords, vec![1, 1, 1]);
        // mark identity: sum of mark * coordinate = j
        let walls = simple_affine_roots(&c).unwrap();
        let total: i64 = walls.iter().zip(&cox.coords).map(|(w, c)| w.mark * c).sum();
        assert_eq!(total, cox.j);
    }

    #[test]
    fn base_vertex_coordinates() {
        let c = ctx("C2", 5);
        let (j, coords) = kac_coordinates(&c, &AlcovePoint::origin(2)).unwrap();
        assert_eq!(j, 1);
        // all level zero walls vanish, the affine wall evaluates to 1
        assert_eq!(coords, vec![1, 0, 0]);
        let kps = all_points(&c).unwrap();
        // order two point: wall values (1/2, 0, 1/2), so j = 2 even though
        // the lift has order 4
        let m1 = kps.iter().find(|kp| kp.reduced_point() == (vec![1, 2], 4)).unwrap();
        assert_eq!(m1.ell, 4);
        assert_eq!(m1.j, 2);
        assert_eq!(m1.coords, vec![1, 0, 1]);
        let walls = simple_affine_roots(&c).unwrap();
        let total: i64 = walls.iter().zip(&m1.coords).map(|(w, c)| w.mark * c).sum();
        assert_eq!(total, m1.j);
    }

    #[test]
    fn primitive_root_invariance() {
        let c = ctx("C2", 5);
        let table = weyl::sigma_classes(&c);
        for cl in 0..table.len() {
            let rep = &c.weyl().elements[table.reps[cl]];
            if !weyl::is_elliptic(&c, rep) {
                continue;
            }
            let base = assign_point(&c, &table, cl, None, 1).unwrap();
            let ell = base.ell;
            for u in 2..ell {
                if num_integer::gcd(u, ell) == 1 {
                    let other = assign_point(&c, &table, cl, None, u).unwrap();
                    assert_eq!(base.point, other.point);
                }
            }
        }
    }

    #[test]
    fn representative_invariance() {
        let c = ctx("G2", 5);
        let table = weyl::sigma_classes(&c);
        for cl in 0..table.len() {
            let rep = &c.weyl().elements[table.reps[cl]];
            if !weyl::is_elliptic(&c, rep) {
                continue;
            }
            let base = assign_point(&c, &table, cl, None, 1).unwrap();
            for &member in &table.classes[cl] {
                let other = assign_point(&c, &table, cl, Some(member), 1).unwrap();
                assert_eq!(base.point, other.point, "point depends on the representative");
            }
        }
    }
}
