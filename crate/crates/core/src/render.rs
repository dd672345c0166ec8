//! Circle placement by complex Descartes propagation and SVG/CSV output.
//!
//! Each circle carries `w = k·z` (curvature times centre); a line carries
//! its unit normal pointing away from the circles it touches. Replacing
//! entry `i` of a configuration maps `w_i ↦ 2(w_j + w_k + w_l) − w_i`, the
//! same rule as for curvatures.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::components::ComponentSnapshot;
use crate::enumerate::{walk, Visitor};
use crate::error::{Error, Result};
use crate::primes::is_odd_prime_curvature;
use crate::quadruple::{check_root, Quadruple};

/// Largest bound rendered in double precision.
pub const MAX_RENDER_BOUND: i64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Cx(f64, f64);

impl Cx {
    fn add(self, o: Cx) -> Cx {
        Cx(self.0 + o.0, self.1 + o.1)
    }
    fn sub(self, o: Cx) -> Cx {
        Cx(self.0 - o.0, self.1 - o.1)
    }
    fn mul(self, o: Cx) -> Cx {
        Cx(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn scale(self, s: f64) -> Cx {
        Cx(self.0 * s, self.1 * s)
    }
    fn norm(self) -> f64 {
        self.0.hypot(self.1)
    }
    fn sqrt(self) -> Cx {
        let r = self.norm();
        let re = ((r + self.0) / 2.0).max(0.0).sqrt();
        let im = ((r - self.0) / 2.0).max(0.0).sqrt();
        Cx(re, if self.1 < 0.0 { -im } else { im })
    }
}

/// A placed circle. Lines (curvature 0) have infinite radius and `(x, y)` is
/// the point of the line closest to the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedCircle {
    /// Id of the circle in traversal order, as in the circle table.
    pub id: u32,
    pub curvature: i64,
    pub x: f64,
    pub y: f64,
    pub r: f64,
    /// Ids of the three circles it was born tangent to.
    pub parents: [u32; 3],
}

impl PlacedCircle {
    pub fn is_line(&self) -> bool {
        self.curvature == 0
    }
}

/// Seed placement `(w, foot)` for the four root circles.
fn seed(root: &Quadruple) -> Result<[(Cx, Option<Cx>); 4]> {
    let k = root.0;
    if k == [0, 0, 1, 1] {
        return Ok([(Cx(0.0, -1.0), Some(Cx(0.0, -1.0))), (Cx(0.0, 1.0), Some(Cx(0.0, 1.0))), (Cx(0.0, 0.0), None), (Cx(2.0, 0.0), None)]);
    }
    let neg: Vec<usize> = (0..4).filter(|&j| k[j] < 0).collect();
    if neg.len() != 1 || k.contains(&0) {
        return Err(Error::PlacementUnavailable(format!("no seed placement for root ({root})")));
    }
    let a = neg[0];
    let rest: Vec<usize> = (0..4).filter(|&j| j != a).collect();
    let (b, c, d) = (rest[0], rest[1], rest[2]);
    let r = k.map(|x| 1.0 / (x as f64).abs());
    let za = Cx(0.0, 0.0);
    let zb = Cx(r[a] - r[b], 0.0);
    // |z| = R − r_c and |z − z_b| = r_b + r_c
    let (d1, d2, e) = (r[a] - r[c], r[b] + r[c], zb.0);
    let x = (d1 * d1 - d2 * d2 + e * e) / (2.0 * e);
    let zc = Cx(x, (d1 * d1 - x * x).max(0.0).sqrt());
    let w = |j: usize, z: Cx| z.scale(k[j] as f64);
    let (wa, wb, wc) = (w(a, za), w(b, zb), w(c, zc));
    let s = wa.add(wb).add(wc);
    let root_term = wa.mul(wb).add(wb.mul(wc)).add(wc.mul(wa)).sqrt().scale(2.0);
    let residual = |wd: Cx| {
        let zd = wd.scale(1.0 / k[d] as f64);
        [(a, za), (b, zb), (c, zc)]
            .iter()
            .map(|&(j, z)| (z.sub(zd).norm() - (1.0 / k[j] as f64 + 1.0 / k[d] as f64).abs()).abs())
            .fold(0.0, f64::max)
    };
    let (plus, minus) = (s.add(root_term), s.sub(root_term));
    let wd = if residual(plus) <= residual(minus) { plus } else { minus };
    let mut out = [(Cx(0.0, 0.0), None); 4];
    out[a] = (wa, None);
    out[b] = (wb, None);
    out[c] = (wc, None);
    out[d] = (wd, None);
    Ok(out)
}

struct Placer {
    w: Vec<Cx>,
    out: Vec<PlacedCircle>,
}

fn place(id: u32, k: i64, w: Cx, foot: Option<Cx>, parents: [u32; 3]) -> PlacedCircle {
    match foot {
        Some(f) => PlacedCircle { id, curvature: k, x: f.0, y: f.1, r: f64::INFINITY, parents },
        None => {
            let z = w.scale(1.0 / k as f64);
            PlacedCircle { id, curvature: k, x: z.0, y: z.1, r: 1.0 / (k as f64).abs(), parents }
        }
    }
}

impl Visitor for Placer {
    type Tag = u32;

    fn root(&mut self, _: &Quadruple) -> [u32; 4] {
        [0, 1, 2, 3]
    }

    fn enter(&mut self, q: &Quadruple, slot: usize, _: u32, tags: &[u32; 4]) -> u32 {
        let id = self.out.len() as u32;
        let mut sum = Cx(0.0, 0.0);
        let mut parents = [0u32; 3];
        let mut n = 0;
        for j in (0..4).filter(|&j| j != slot) {
            sum = sum.add(self.w[tags[j] as usize]);
            parents[n] = tags[j];
            n += 1;
        }
        let w = sum.scale(2.0).sub(self.w[tags[slot] as usize]);
        self.w.push(w);
        self.out.push(place(id, q.0[slot], w, None, parents));
        id
    }
}

/// Places every circle of curvature at most `bound`, in the id order of the
/// circle table.
pub fn place_circles(root: &Quadruple, bound: i64) -> Result<Vec<PlacedCircle>> {
    check_root(root)?;
    if bound > MAX_RENDER_BOUND {
        return Err(Error::BoundTooLarge(format!("rendering stops at curvature {MAX_RENDER_BOUND}")));
    }
    let seeds = seed(root)?;
    let mut p = Placer { w: Vec::new(), out: Vec::new() };
    for (j, &(w, foot)) in seeds.iter().enumerate() {
        let others: Vec<u32> = (0..4u32).filter(|&i| i != j as u32).collect();
        p.w.push(w);
        p.out.push(place(j as u32, root.0[j], w, foot, [others[0], others[1], others[2]]));
    }
    walk(root, bound, &mut p)?;
    Ok(p.out)
}

/// `|distance − expected|` between two placed circles, relative to the larger
/// finite radius.
pub fn tangency_residual(a: &PlacedCircle, b: &PlacedCircle) -> f64 {
    match (a.is_line(), b.is_line()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => {
            let (l, c) = if a.is_line() { (a, b) } else { (b, a) };
            let n = Cx(l.x, l.y).scale(1.0 / l.x.hypot(l.y));
            let dist = ((c.x - l.x) * n.0 + (c.y - l.y) * n.1).abs();
            (dist - c.r).abs() / c.r
        }
        (false, false) => {
            let dist = (a.x - b.x).hypot(a.y - b.y);
            let (sa, sb) = (1.0 / a.curvature as f64, 1.0 / b.curvature as f64);
            (dist - (sa + sb).abs()).abs() / a.r.max(b.r)
        }
    }
}

/// Largest residual of any circle against its parents.
pub fn max_residual(placed: &[PlacedCircle]) -> f64 {
    placed
        .iter()
        .flat_map(|c| c.parents.iter().map(move |&p| tangency_residual(c, &placed[p as usize])))
        .fold(0.0, f64::max)
}

/// How circles are coloured.
#[derive(Clone, Debug)]
pub enum Coloring {
    ResidueMod(u64),
    PrimeVsComposite,
    /// Members, thickening and everything else, by circle id.
    Component(ComponentSnapshot),
}

struct Palette {
    kind: Kind,
}

enum Kind {
    Residue(u64),
    Prime,
    Component(HashSet<u32>, HashSet<u32>),
}

const MEMBER: &str = "#e377c2";
const THICK: &str = "#1f77b4";
const OTHER: &str = "#9467bd";

impl Palette {
    fn new(c: &Coloring) -> Result<Self> {
        let kind = match c {
            Coloring::ResidueMod(m) if *m >= 1 => Kind::Residue(*m),
            Coloring::ResidueMod(m) => return Err(Error::BadModulus { modulus: *m, reason: "modulus must be positive" }),
            Coloring::PrimeVsComposite => Kind::Prime,
            Coloring::Component(s) => {
                if s.member_ids.is_empty() && !s.members.is_empty() {
                    return Err(Error::ConstraintViolation("component snapshot carries no circle ids".into()));
                }
                Kind::Component(s.member_ids.iter().copied().collect(), s.thickening_ids.iter().copied().collect())
            }
        };
        Ok(Palette { kind })
    }

    fn tag(&self, c: &PlacedCircle) -> String {
        match &self.kind {
            Kind::Residue(m) => c.curvature.rem_euclid(*m as i64).to_string(),
            Kind::Prime if is_odd_prime_curvature(c.curvature) || c.curvature == 2 => "prime".into(),
            Kind::Prime => "composite".into(),
            Kind::Component(m, _) if m.contains(&c.id) => "member".into(),
            Kind::Component(_, t) if t.contains(&c.id) => "thickening".into(),
            Kind::Component(..) => "other".into(),
        }
    }

    fn fill(&self, tag: &str) -> String {
        match &self.kind {
            Kind::Residue(m) => {
                let r: u64 = tag.parse().unwrap_or(0);
                format!("hsl({},70%,60%)", r * 360 / m)
            }
            Kind::Prime => if tag == "prime" { "#d62728" } else { "#c7c7c7" }.into(),
            Kind::Component(..) => match tag {
                "member" => MEMBER,
                "thickening" => THICK,
                _ => OTHER,
            }
            .into(),
        }
    }
}

/// Tags per circle, in input order.
pub fn tags(placed: &[PlacedCircle], coloring: &Coloring) -> Result<Vec<String>> {
    let p = Palette::new(coloring)?;
    Ok(placed.iter().map(|c| p.tag(c)).collect())
}

/// `curvature,x,y,r,tag` rows.
pub fn to_csv(placed: &[PlacedCircle], coloring: &Coloring) -> Result<String> {
    let tags = tags(placed, coloring)?;
    let mut s = String::from("curvature,x,y,r,tag\n");
    for (c, t) in placed.iter().zip(tags) {
        let _ = writeln!(s, "{},{:.9},{:.9},{:.9},{}", c.curvature, c.x, c.y, c.r, t);
    }
    Ok(s)
}

fn view_box(placed: &[PlacedCircle]) -> (f64, f64, f64, f64) {
    if let Some(b) = placed.iter().find(|c| c.curvature < 0) {
        return (b.x - b.r, b.y - b.r, 2.0 * b.r, 2.0 * b.r);
    }
    let finite: Vec<&PlacedCircle> = placed.iter().filter(|c| !c.is_line()).collect();
    if finite.is_empty() {
        return (-1.0, -1.0, 2.0, 2.0);
    }
    let lo_x = finite.iter().map(|c| c.x - c.r).fold(f64::INFINITY, f64::min);
    let hi_x = finite.iter().map(|c| c.x + c.r).fold(f64::NEG_INFINITY, f64::max);
    let lo_y = finite.iter().map(|c| c.y - c.r).fold(f64::INFINITY, f64::min);
    let hi_y = finite.iter().map(|c| c.y + c.r).fold(f64::NEG_INFINITY, f64::max);
    (lo_x, lo_y, hi_x - lo_x, hi_y - lo_y)
}

/// An SVG 1.1 document with one filled circle and one curvature label per
/// placed circle. The output depends only on the inputs and crate version.
pub fn emit_svg(placed: &[PlacedCircle], coloring: &Coloring) -> Result<String> {
    let p = Palette::new(coloring)?;
    let (x0, y0, w, h) = view_box(placed);
    let stroke = w.max(h) / 2000.0;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, "<!-- apollonian {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{x0:.6} {y0:.6} {w:.6} {h:.6}" width="800" height="{:.0}">"#,
        800.0 * h / w
    );
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="{stroke:.6}">"#);
    for c in placed {
        let tag = p.tag(c);
        let fill = p.fill(&tag);
        if c.is_line() {
            let _ = writeln!(s, r#"<line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" class="{tag}"/>"#, x0, c.y, x0 + w, c.y);
        } else if c.curvature < 0 {
            let _ = writeln!(s, r#"<circle cx="{:.9}" cy="{:.9}" r="{:.9}" fill="white" class="{tag}"/>"#, c.x, c.y, c.r);
        } else {
            let _ = writeln!(s, r#"<circle cx="{:.9}" cy="{:.9}" r="{:.9}" fill="{fill}" class="{tag}"/>"#, c.x, c.y, c.r);
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g font-family="sans-serif" text-anchor="middle" dominant-baseline="central">"#);
    for c in placed.iter().filter(|c| c.curvature > 0) {
        let size = c.r * 0.8 / (c.curvature.to_string().len() as f64).max(1.5);
        let _ = writeln!(s, r#"<text x="{:.9}" y="{:.9}" font-size="{:.9}">{}</text>"#, c.x, c.y, size, c.curvature);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(path: &Path, placed: &[PlacedCircle], coloring: &Coloring) -> Result<()> {
    std::fs::write(path, emit_svg(placed, coloring)?)?;
    Ok(())
}
