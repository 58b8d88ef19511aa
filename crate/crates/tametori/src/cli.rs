//! Command line surface: spec file parsing, table rendering, alcove
//! figures, and the selftest runner.

use std::collections::BTreeSet;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::classify::{self, Choices};
use crate::error::Error;
use crate::kac;
use crate::rootdata::{
    parse_cartan_type, DiagramAut, GroupContext, GroupSpecData, IsogenyChoice, SimpleType,
};
use crate::weyl;
use crate::Result;

/// A parsed spec document.
#[derive(Debug, Clone)]
pub struct GroupSpecFile {
    pub data: GroupSpecData,
    pub q_list: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Machine,
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

/// Parse the key = value spec grammar. Recognized keys: type, isogeny,
/// sigma, fr, p, q. Unknown keys are rejected with their position.
pub fn parse_spec(text: &str) -> Result<GroupSpecFile> {
    let mut ty: Option<Vec<SimpleType>> = None;
    let mut isogeny = IsogenyChoice::SimplyConnected;
    let mut sigma_raw: Option<(String, usize)> = None;
    let mut fr_raw: Option<(String, usize)> = None;
    let mut p: u64 = 0;
    let mut q_list: Vec<u64> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let stripped = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        if stripped.trim().is_empty() {
            continue;
        }
        let eq = stripped
            .find('=')
            .ok_or_else(|| parse_err(line, 1, "expected 'key = value'"))?;
        let key = stripped[..eq].trim();
        let value = stripped[eq + 1..].trim();
        let col = eq + 2;
        match key {
            "type" => {
                ty = Some(parse_cartan_type(value).map_err(|e| parse_err(line, col, e.to_string()))?)
            }
            "isogeny" => {
                isogeny = match value {
                    "sc" => IsogenyChoice::SimplyConnected,
                    "ad" => IsogenyChoice::Adjoint,
                    other => IsogenyChoice::Explicit(
                        parse_matrix(other).map_err(|m| parse_err(line, col, m))?,
                    ),
                }
            }
            "sigma" => sigma_raw = Some((value.to_string(), line)),
            "fr" => fr_raw = Some((value.to_string(), line)),
            "p" => {
                p = value
                    .parse()
                    .map_err(|_| parse_err(line, col, "p must be a nonnegative integer"))?
            }
            "q" => {
                for part in value.split(',') {
                    let v: u64 = part
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(line, col, format!("bad q entry '{part}'")))?;
                    q_list.push(v);
                }
            }
            other => return Err(parse_err(line, 1, format!("unknown key '{other}'"))),
        }
    }
    let ty = ty.ok_or_else(|| parse_err(1, 1, "missing 'type'"))?;
    let rank: usize = ty.iter().map(|t| t.rank).sum();
    let sigma = match sigma_raw {
        None => DiagramAut::identity(rank),
        Some((s, line)) => parse_aut(&s, &ty, rank).map_err(|m| parse_err(line, 1, m))?,
    };
    let fr = match fr_raw {
        None => DiagramAut::identity(rank),
        Some((s, line)) => parse_aut(&s, &ty, rank).map_err(|m| parse_err(line, 1, m))?,
    };
    Ok(GroupSpecFile {
        data: GroupSpecData { cartan_type: ty, isogeny, sigma, fr, p, q: q_list.first().copied() },
        q_list,
    })
}

fn parse_rational(s: &str) -> std::result::Result<Rational64, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| format!("bad rational '{s}'"))?;
        let d: i64 = d.trim().parse().map_err(|_| format!("bad rational '{s}'"))?;
        if d == 0 {
            return Err("zero denominator".into());
        }
        Ok(Rational64::new(n, d))
    } else {
        let n: i64 = s.parse().map_err(|_| format!("bad integer '{s}'"))?;
        Ok(Rational64::from_integer(n))
    }
}

/// Matrix grammar: rows separated by ';' inside '[...]', entries by ','.
/// Entries may be rational, so intermediate lattices are expressible.
fn parse_matrix(s: &str) -> std::result::Result<Vec<Vec<Rational64>>, String> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(']'))
        .ok_or_else(|| "matrix must be wrapped in [...]".to_string())?;
    let mut rows = Vec::new();
    for row in inner.split(';') {
        let row = row.trim().trim_start_matches('[').trim_end_matches(']');
        let entries: std::result::Result<Vec<Rational64>, String> =
            row.split(',').map(parse_rational).collect();
        rows.push(entries?);
    }
    Ok(rows)
}

/// Automorphism grammar: `id`, `flip`, or one-indexed cycles `(1 2)(3 4)`.
fn parse_aut(
    s: &str,
    ty: &[SimpleType],
    rank: usize,
) -> std::result::Result<DiagramAut, String> {
    match s {
        "id" => Ok(DiagramAut::identity(rank)),
        "flip" => {
            if ty.len() != 1 {
                return Err("'flip' needs a single simple factor; use explicit cycles".into());
            }
            let t = ty[0];
            let perm: Vec<usize> = match t.letter {
                'A' => (0..t.rank).rev().collect(),
                'D' => {
                    let mut p: Vec<usize> = (0..t.rank).collect();
                    p.swap(t.rank - 2, t.rank - 1);
                    p
                }
                'E' if t.rank == 6 => vec![5, 1, 4, 3, 2, 0],
                _ => return Err(format!("type {t} has no flip")),
            };
            Ok(DiagramAut::from_perm(perm))
        }
        other => {
            let mut perm: Vec<usize> = (0..rank).collect();
            let mut rest = other.trim();
            while !rest.is_empty() {
                let open = rest.find('(').ok_or("expected '('")?;
                let close = rest.find(')').ok_or("unclosed cycle")?;
                let cycle: std::result::Result<Vec<usize>, String> = rest[open + 1..close]
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| format!("bad node '{t}'"))
                            .and_then(|v| {
                                if v >= 1 && v <= rank {
                                    Ok(v - 1)
                                } else {
                                    Err(format!("node {v} out of range"))
                                }
                            })
                    })
                    .collect();
                let cycle = cycle?;
                for w in 0..cycle.len() {
                    perm[cycle[w]] = cycle[(w + 1) % cycle.len()];
                }
                rest = rest[close + 1..].trim();
            }
            Ok(DiagramAut::from_perm(perm))
        }
    }
}

pub fn build_context(file: &GroupSpecFile) -> Result<GroupContext> {
    GroupContext::new(&file.data)
}

fn point_string(num: &[i64], den: i64) -> String {
    if num.iter().all(|&x| x == 0) {
        return "x0".into();
    }
    let coords: Vec<String> = num.iter().map(|c| c.to_string()).collect();
    format!("x0+({})/{}", coords.join(","), den)
}

// ---------------------------------------------------------------------------
// classes

#[derive(Serialize)]
struct ClassRow {
    label: String,
    size: usize,
    order: u64,
    tame: bool,
    elliptic: bool,
    stable_for_q: Vec<(u64, bool)>,
}

pub fn cmd_classes(file: &GroupSpecFile, format: Format) -> Result<String> {
    let ctx = build_context(file)?;
    let w = ctx.weyl();
    let table = weyl::sigma_classes(&ctx);
    let mut rows = Vec::new();
    for c in 0..table.len() {
        let rep = &w.elements[table.reps[c]];
        let tame = weyl::is_tame_class(&ctx, rep, ctx.p);
        let elliptic = weyl::is_elliptic(&ctx, rep);
        let stable_for_q: Vec<(u64, bool)> = file
            .q_list
            .iter()
            .map(|&q| {
                let img = w.id_of(&weyl::fr_norm(&ctx, rep, q));
                (q, tame && elliptic && table.class_of[img] == c)
            })
            .collect();
        rows.push(ClassRow {
            label: classify::class_label(&ctx, &table, c),
            size: table.classes[c].len(),
            order: weyl::twisted_order(&ctx, rep),
            tame,
            elliptic,
            stable_for_q,
        });
    }
    rows.sort_by(|a, b| (a.order, &a.label).cmp(&(b.order, &b.label)));
    match format {
        Format::Machine => Ok(serde_json::to_string_pretty(&rows).unwrap()),
        Format::Text => {
            let mut out = format!(
                "twisted classes of {} (sigma order {})\n",
                ctx.type_name(),
                ctx.sigma.order
            );
            out.push_str("label      size  order  tame  elliptic  stable(q)\n");
            for r in rows {
                let stability: Vec<String> = r
                    .stable_for_q
                    .iter()
                    .map(|(q, s)| format!("q={q}:{}", if *s { "yes" } else { "no" }))
                    .collect();
                out.push_str(&format!(
                    "{:<10} {:<5} {:<6} {:<5} {:<9} {}\n",
                    r.label,
                    r.size,
                    r.order,
                    if r.tame { "yes" } else { "no" },
                    if r.elliptic { "yes" } else { "no" },
                    stability.join(" ")
                ));
            }
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// kac table

#[derive(Serialize)]
struct KacRow {
    label: String,
    ell: u64,
    lambda: Vec<i64>,
    point: String,
    j: i64,
    coords: Vec<i64>,
}

pub fn cmd_kac(file: &GroupSpecFile, format: Format) -> Result<String> {
    let ctx = build_context(file)?;
    let table = weyl::sigma_classes(&ctx);
    let points = kac::all_points(&ctx)?;
    let mut rows = Vec::new();
    for kp in &points {
        let (num, den) = kp.reduced_point();
        let lambda: Vec<i64> = kp
            .lambda
            .iter()
            .map(|c| {
                assert!(c.denom().is_one());
                *c.numer()
            })
            .collect();
        rows.push(KacRow {
            label: classify::class_label(&ctx, &table, kp.class_id),
            ell: kp.ell,
            lambda,
            point: point_string(&num, den),
            j: kp.j,
            coords: kp.coords.clone(),
        });
    }
    rows.sort_by(|a, b| (a.ell, &a.label).cmp(&(b.ell, &b.label)));
    match format {
        Format::Machine => Ok(serde_json::to_string_pretty(&rows).unwrap()),
        Format::Text => {
            let mut out = format!("alcove points of {}\n", ctx.type_name());
            out.push_str("label      ell   lambda            point                 j    kac\n");
            for r in rows {
                out.push_str(&format!(
                    "{:<10} {:<5} {:<17} {:<21} {:<4} {:?}\n",
                    r.label,
                    r.ell,
                    format!("{:?}", r.lambda),
                    r.point,
                    r.j,
                    r.coords
                ));
            }
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// classify

pub fn cmd_classify(file: &GroupSpecFile, q_override: &[u64], format: Format) -> Result<String> {
    let ctx = build_context(file)?;
    let qs: Vec<u64> = if q_override.is_empty() {
        file.q_list.clone()
    } else {
        q_override.to_vec()
    };
    if qs.is_empty() {
        return Err(Error::Parse { line: 0, col: 0, msg: "no q values given".into() });
    }
    let mut reports = Vec::new();
    for &q in &qs {
        if ctx.p > 0 {
            let mut x = q;
            while x % ctx.p == 0 {
                x /= ctx.p;
            }
            if x != 1 {
                return Err(Error::IncompatibleTwists(format!(
                    "q = {q} is not a power of p = {}",
                    ctx.p
                )));
            }
        }
        reports.push(classify::full_report(&ctx, q, &Choices::default())?);
    }
    match format {
        Format::Machine => Ok(serde_json::to_string_pretty(&reports).unwrap()),
        Format::Text => {
            let mut out = String::new();
            for rep in &reports {
                out.push_str(&format!(
                    "classification of {} ({}), q = {}\n",
                    rep.group, rep.lattice, rep.q
                ));
                out.push_str(
                    "label      point                 stable  embeddings        rational  fibers\n",
                );
                for row in &rep.rows {
                    out.push_str(&format!(
                        "{:<10} {:<21} {:<7} {:<17} {:<9} {}\n",
                        row.label,
                        point_string(&row.point_numerator, row.point_denominator),
                        row.stable,
                        format!("{:?}", row.embeddings),
                        row.rational
                            .map(|r| r.to_string())
                            .unwrap_or_else(|| "unsupported".into()),
                        row.fibers
                            .as_ref()
                            .map(|f| format!("{f:?}"))
                            .unwrap_or_else(|| "-".into()),
                    ));
                }
                out.push('\n');
            }
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// alcove figure

/// Euclidean embedding of the coroot space from the symmetrized Cartan
/// matrix, for drawing only.
fn gram_matrix(ctx: &GroupContext) -> Vec<Vec<f64>> {
    let n = ctx.rank;
    // symmetrizer d with d_i a_ij = d_j a_ji
    let mut d = vec![0f64; n];
    for start in 0..n {
        if d[start] != 0.0 {
            continue;
        }
        d[start] = 1.0;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if i != j && ctx.cartan.at(i, j) != 0 && d[j] == 0.0 {
                    d[j] = d[i] * ctx.cartan.at(i, j) as f64 / ctx.cartan.at(j, i) as f64;
                    stack.push(j);
                }
            }
        }
    }
    (0..n)
        .map(|i| (0..n).map(|j| d[i] * ctx.cartan.at(i, j) as f64).collect())
        .collect()
}

fn embed_2d(gram: &[Vec<f64>]) -> Vec<[f64; 2]> {
    // Cholesky of the 2x2 or 1x1 Gram matrix
    let n = gram.len();
    let mut basis = vec![[0f64; 2]; n];
    if n == 1 {
        basis[0] = [gram[0][0].sqrt(), 0.0];
        return basis;
    }
    let a = gram[0][0].sqrt();
    basis[0] = [a, 0.0];
    let b = gram[0][1] / a;
    let c = (gram[1][1] - b * b).sqrt();
    basis[1] = [b, c];
    basis
}

pub fn cmd_alcove_svg(file: &GroupSpecFile) -> Result<String> {
    let ctx = build_context(file)?;
    let relative_rank = if ctx.sigma.is_identity() {
        ctx.rank
    } else {
        // dimension of the twist fixed subspace
        let orbits: BTreeSet<usize> = {
            let mut orbit_min = (0..ctx.rank).collect::<Vec<usize>>();
            for i in 0..ctx.rank {
                let mut j = ctx.sigma.perm[i];
                while j != i {
                    orbit_min[i] = orbit_min[i].min(j);
                    j = ctx.sigma.perm[j];
                }
            }
            orbit_min.into_iter().collect()
        };
        orbits.len()
    };
    if relative_rank > 2 {
        return Err(Error::RankTooLarge(relative_rank));
    }
    let points = kac::all_points(&ctx)?;
    let table = weyl::sigma_classes(&ctx);
    // vertices of the relative alcove
    let vertices: Vec<Vec<Rational64>> = if ctx.sigma.is_identity() {
        let inv = crate::mat::QMat::from_sq(&ctx.cartan).inverse();
        let mut vs = vec![vec![Rational64::zero(); ctx.rank]];
        for (fi, ty) in ctx.factors.iter().enumerate() {
            let off = ctx.factor_offset[fi];
            let marks = ctx.marks(fi);
            for k in 0..ty.rank {
                let mut v = vec![Rational64::zero(); ctx.rank];
                for j in 0..ctx.rank {
                    v[j] = inv.at(off + k, j) / Rational64::from_integer(marks[k + 1]);
                }
                vs.push(v);
            }
        }
        vs
    } else {
        vec![
            vec![Rational64::zero(); ctx.rank],
            vec![Rational64::new(1, 4); ctx.rank],
        ]
    };
    let gram = gram_matrix(&ctx);
    let basis = if ctx.sigma.is_identity() {
        embed_2d(&gram)
    } else {
        // project onto the diagonal line for the ramified rank one case
        vec![[1.0, 0.0]; ctx.rank]
    };
    let to_xy = |v: &[Rational64]| -> [f64; 2] {
        let mut x = 0.0;
        let mut y = 0.0;
        for (i, c) in v.iter().enumerate() {
            let cf = *c.numer() as f64 / *c.denom() as f64;
            x += cf * basis[i][0];
            y += cf * basis[i][1];
        }
        [x, y]
    };
    let mut corners: Vec<[f64; 2]> = vertices.iter().map(|v| to_xy(v)).collect();
    // simple convex ordering around the centroid for the polygon path
    let cx = corners.iter().map(|p| p[0]).sum::<f64>() / corners.len() as f64;
    let cy = corners.iter().map(|p| p[1]).sum::<f64>() / corners.len() as f64;
    corners.sort_by(|a, b| {
        let ta = (a[1] - cy).atan2(a[0] - cx);
        let tb = (b[1] - cy).atan2(b[0] - cx);
        ta.partial_cmp(&tb).unwrap()
    });
    let all: Vec<[f64; 2]> = corners
        .iter()
        .cloned()
        .chain(points.iter().map(|kp| to_xy(&kp.point.coords)))
        .collect();
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in &all {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let scale = 320.0 / (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let map = |p: [f64; 2]| -> (f64, f64) {
        (40.0 + (p[0] - lo[0]) * scale, 360.0 - (p[1] - lo[1]) * scale)
    };
    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\">\n",
    );
    let path: Vec<String> = corners
        .iter()
        .map(|&p| {
            let (x, y) = map(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    svg.push_str(&format!(
        "  <polygon points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
        path.join(" ")
    ));
    let (ox, oy) = map(to_xy(&vec![Rational64::zero(); ctx.rank]));
    svg.push_str(&format!(
        "  <circle cx=\"{ox:.3}\" cy=\"{oy:.3}\" r=\"3\" fill=\"black\"/>\n  <text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\">x0</text>\n",
        ox + 6.0,
        oy - 6.0
    ));
    for kp in &points {
        let (x, y) = map(to_xy(&kp.point.coords));
        let label = classify::class_label(&ctx, &table, kp.class_id);
        svg.push_str(&format!(
            "  <circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"3\" fill=\"black\"/>\n  <text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\">{label}</text>\n",
            x + 6.0,
            y - 6.0
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

// ---------------------------------------------------------------------------
// selftest

pub fn cmd_selftest(max_weyl_order: u64) -> (String, bool) {
    let checks = crate::selftest::run_all(max_weyl_order);
    let mut out = String::new();
    let mut all_pass = true;
    for c in &checks {
        out.push_str(&format!(
            "[{}] {} {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            if c.passed { c.detail.clone() } else { format!("-- {}", c.detail) }
        ));
        all_pass &= c.passed;
    }
    out.push_str(&format!(
        "{} checks, {} failed\n",
        checks.len(),
        checks.iter().filter(|c| !c.passed).count()
    ));
    (out, all_pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        let f = parse_spec("type = C2\nisogeny = sc\nsigma = id\nfr = id\np = 5\nq = 5, 7\n")
            .unwrap();
        assert_eq!(f.q_list, vec![5, 7]);
        assert_eq!(f.data.p, 5);
        let err = parse_spec("typ = C2\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn parse_twists() {
        let f = parse_spec("type = A2\nsigma = flip\np = 7\nq = 7\n").unwrap();
        assert_eq!(f.data.sigma.perm, vec![1, 0]);
        let f = parse_spec("type = G2xG2xG2\nfr = (1 3 5)(2 4 6)\np = 5\nq = 5\n").unwrap();
        assert_eq!(f.data.fr.perm, vec![2, 3, 4, 5, 0, 1]);
    }

    #[test]
    fn parse_explicit_lattice() {
        let f = parse_spec("type = A1\nisogeny = [[1/2]]\np = 0\n").unwrap();
        match f.data.isogeny {
            IsogenyChoice::Explicit(rows) => {
                assert_eq!(rows, vec![vec![Rational64::new(1, 2)]]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn classes_table_g2() {
        let f = parse_spec("type = G2\np = 5\nq = 5\n").unwrap();
        let text = cmd_classes(&f, Format::Text).unwrap();
        let elliptic_rows = text.lines().filter(|l| l.contains(" yes")).count();
        assert!(elliptic_rows >= 3, "{text}");
    }

    #[test]
    fn svg_shapes() {
        let f = parse_spec("type = C2\np = 5\nq = 5\n").unwrap();
        let svg = cmd_alcove_svg(&f).unwrap();
        assert!(svg.contains("<polygon"));
        assert_eq!(svg.matches("<circle").count(), 3, "base vertex plus two points");
        let f = parse_spec("type = A1\np = 3\nq = 3\n").unwrap();
        let svg = cmd_alcove_svg(&f).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
