//! Hard-coded tables for the 17 wallpaper groups.
//!
//! Conventions: linear parts are Cartesian rotation/reflection matrices,
//! translations are fractional lattice coordinates in [0,1)². Square-lattice
//! groups use the unit square basis. cm and c2mm use the primitive rhombic
//! basis b1 = (1/2, 1/2), b2 = (1/2, -1/2) whose conventional tiling cell is
//! the unit square. Hexagonal groups use b1 = (1, 0), b2 = (1/2, √3/2) with
//! tiling cell 1 × √3/2.

use std::sync::LazyLock;

use nalgebra::{Matrix2, Vector2};

use super::{Isometry, WallpaperGroup};

static CATALOG: LazyLock<Vec<WallpaperGroup>> = LazyLock::new(build);

/// All 17 groups in catalog order (p1 .. p6mm).
pub fn all_groups() -> &'static [WallpaperGroup] {
    &CATALOG
}

/// Finds a group by canonical symbol or accepted alias.
pub fn lookup(name: &str) -> crate::Result<&'static WallpaperGroup> {
    let key = name.trim().to_ascii_lowercase();
    CATALOG
        .iter()
        .find(|g| g.name == key || g.aliases.contains(&key.as_str()))
        .ok_or_else(|| crate::Error::UnknownGroup(name.to_string()))
}

fn iso(a: Matrix2<f64>, cx: f64, cy: f64) -> Isometry {
    Isometry {
        linear: a,
        frac: Vector2::new(cx, cy),
    }
}

fn point_ops(mats: &[Matrix2<f64>]) -> Vec<Isometry> {
    mats.iter().map(|m| iso(*m, 0.0, 0.0)).collect()
}

fn poly(pts: &[(f64, f64)]) -> Vec<Vector2<f64>> {
    pts.iter().map(|&(x, y)| Vector2::new(x, y)).collect()
}

fn build() -> Vec<WallpaperGroup> {
    let s = 3.0_f64.sqrt() / 2.0;

    let id = Matrix2::identity();
    let r90 = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    let r180 = Matrix2::new(-1.0, 0.0, 0.0, -1.0);
    let r270 = Matrix2::new(0.0, 1.0, -1.0, 0.0);
    let r60 = Matrix2::new(0.5, -s, s, 0.5);
    let r120 = Matrix2::new(-0.5, -s, s, -0.5);
    let r240 = Matrix2::new(-0.5, s, -s, -0.5);
    let r300 = Matrix2::new(0.5, s, -s, 0.5);
    // m(α): reflection about the line through the origin at angle α.
    let m0 = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let m30 = Matrix2::new(0.5, s, s, -0.5);
    let m45 = Matrix2::new(0.0, 1.0, 1.0, 0.0);
    let m60 = Matrix2::new(-0.5, s, s, 0.5);
    let m90 = Matrix2::new(-1.0, 0.0, 0.0, 1.0);
    let m120 = Matrix2::new(-0.5, -s, -s, 0.5);
    let m135 = Matrix2::new(0.0, -1.0, -1.0, 0.0);
    let m150 = Matrix2::new(0.5, -s, -s, -0.5);

    let square = Matrix2::identity();
    let rhombic = Matrix2::new(0.5, 0.5, 0.5, -0.5);
    let hex = Matrix2::new(1.0, 0.5, 0.0, s);

    let mut groups = Vec::with_capacity(17);
    let mut add = |name: &'static str,
                   aliases: &'static [&'static str],
                   basis: Matrix2<f64>,
                   cell: (f64, f64),
                   reps: Vec<Isometry>,
                   fundamental: Vec<Vector2<f64>>| {
        groups.push(WallpaperGroup::new(name, aliases, basis, cell, reps, fundamental));
    };

    add("p1", &[], square, (1.0, 1.0), point_ops(&[id]), poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]));
    add("p2", &[], square, (1.0, 1.0), point_ops(&[id, r180]), poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.0, 0.5)]));
    add("pm", &["p1m1"], square, (1.0, 1.0), point_ops(&[id, m90]), poly(&[(0.0, 0.0), (0.5, 0.0), (0.5, 1.0), (0.0, 1.0)]));
    add("pg", &["p1g1"], square, (1.0, 1.0), vec![iso(id, 0.0, 0.0), iso(m0, 0.5, 0.0)], poly(&[(0.0, 0.0), (0.5, 0.0), (0.5, 1.0), (0.0, 1.0)]));
    add("cm", &["c1m1"], rhombic, (1.0, 1.0), point_ops(&[id, m0]), poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]));
    add("p2mm", &["pmm"], square, (1.0, 1.0), point_ops(&[id, r180, m90, m0]), poly(&[(0.0, 0.0), (0.5, 0.0), (0.5, 0.5), (0.0, 0.5)]));
    add("p2mg", &["pmg"], square, (1.0, 1.0), vec![iso(id, 0.0, 0.0), iso(r180, 0.0, 0.0), iso(m90, 0.5, 0.0), iso(m0, 0.5, 0.0)], poly(&[(0.25, 0.0), (0.75, 0.0), (0.75, 0.5), (0.25, 0.5)]));
    add("p2gg", &["pgg"], square, (1.0, 1.0), vec![iso(id, 0.0, 0.0), iso(r180, 0.0, 0.0), iso(m90, 0.5, 0.5), iso(m0, 0.5, 0.5)], poly(&[(0.0, 0.0), (0.5, 0.0), (0.5, 0.5), (0.0, 0.5)]));
    add("c2mm", &["cmm"], rhombic, (1.0, 1.0), point_ops(&[id, r180, m90, m0]), poly(&[(0.0, 0.0), (1.0, 0.0), (0.5, 0.5)]));
    add("p4", &[], square, (1.0, 1.0), point_ops(&[id, r90, r180, r270]), poly(&[(0.0, 0.0), (0.5, 0.0), (0.5, 0.5), (0.0, 0.5)]));
    add("p4mm", &["p4m"], square, (1.0, 1.0), point_ops(&[id, r90, r180, r270, m0, m45, m90, m135]), poly(&[(0.0, 0.0), (0.5, 0.0), (0.5, 0.5)]));
    add("p4gm", &["p4g"], square, (1.0, 1.0), {
        let mut v = point_ops(&[id, r90, r180, r270]);
        for m in [m90, m0, m45, m135] {
            v.push(iso(m, 0.5, 0.5));
        }
        v
    }, poly(&[(0.0, 0.0), (0.5, 0.0), (0.0, 0.5)]));
    add("p3", &[], hex, (1.0, s), point_ops(&[id, r120, r240]), poly(&[(0.0, 0.0), (1.0, 0.0), (2.0 / 3.0, 2.0 / 3.0)]));
    add("p3m1", &[], hex, (1.0, s), point_ops(&[id, r120, r240, m30, m90, m150]), poly(&[(0.0, 0.0), (1.0 / 3.0, 1.0 / 3.0), (2.0 / 3.0, -1.0 / 3.0)]));
    add("p31m", &[], hex, (1.0, s), point_ops(&[id, r120, r240, m0, m60, m120]), poly(&[(0.0, 0.0), (1.0, 0.0), (1.0 / 3.0, 1.0 / 3.0)]));
    add("p6", &[], hex, (1.0, s), point_ops(&[id, r60, r120, r180, r240, r300]), poly(&[(0.0, 0.0), (1.0, 0.0), (1.0 / 3.0, 1.0 / 3.0)]));
    add("p6mm", &["p6m"], hex, (1.0, s), point_ops(&[id, r60, r120, r180, r240, r300, m0, m30, m60, m90, m120, m150]), poly(&[(0.0, 0.0), (0.5, 0.0), (1.0 / 3.0, 1.0 / 3.0)]));

    groups
}
