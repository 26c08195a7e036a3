use std::sync::OnceLock;

use proptest::prelude::*;
use redirect_core::environment::{
    build_physical_space, generate_virtual_space, Experiment, SpaceMap, VirtualSpaceParams,
};
use redirect_core::geometry::Vec2;
use redirect_core::rng::{stream_rng, Stream};

fn scenes() -> &'static [SpaceMap] {
    static SCENES: OnceLock<Vec<SpaceMap>> = OnceLock::new();
    SCENES.get_or_init(|| {
        let mut v: Vec<SpaceMap> = Experiment::ALL
            .iter()
            .map(|&e| build_physical_space(e))
            .collect();
        for seed in 0..4 {
            let mut rng = stream_rng(seed, Stream::Scene);
            v.push(generate_virtual_space(&mut rng, &VirtualSpaceParams::default()).unwrap());
        }
        v
    })
}

/// Parametric ray/segment intersection solved with Cramer's rule.
fn oracle_ray_hit(o: Vec2, d: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let det = d.x * (-e.y) - d.y * (-e.x);
    if det.abs() < 1e-15 {
        return None;
    }
    let w = a - o;
    let t = (w.x * (-e.y) - w.y * (-e.x)) / det;
    let s = (d.x * w.y - d.y * w.x) / det;
    (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s)).then_some(t)
}

fn oracle_raycast(space: &SpaceMap, o: Vec2, d: Vec2, range: f64) -> f64 {
    let polys = std::iter::once(space.boundary()).chain(space.obstacles());
    let mut best = range;
    for poly in polys {
        let v = poly.vertices();
        for i in 0..v.len() {
            if let Some(t) = oracle_ray_hit(o, d, v[i], v[(i + 1) % v.len()]) {
                best = best.min(t);
            }
        }
    }
    best
}

/// A free point of scene `idx` chosen from unit-square coordinates.
fn free_point(idx: usize, ux: f64, uy: f64) -> Option<(&'static SpaceMap, Vec2)> {
    let s = &scenes()[idx];
    let (lo, hi) = s.boundary().bounds();
    let p = Vec2::new(lo.x + (hi.x - lo.x) * ux, lo.y + (hi.y - lo.y) * uy);
    (s.min_clearance(p) > 1e-6).then_some((s, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn raycast_matches_brute_force(idx in 0usize..8, ux in 0.0..1.0f64, uy in 0.0..1.0f64, ang in -3.2..3.2f64) {
        let Some((s, p)) = free_point(idx, ux, uy) else { return Ok(()) };
        let d = Vec2::from_angle(ang);
        let got = s.raycast(p, d, 100.0).unwrap();
        let want = oracle_raycast(s, p, d, 100.0);
        prop_assert!((got - want).abs() < 1e-9, "got {got} want {want}");
    }

    #[test]
    fn clearance_is_one_lipschitz(
        idx in 0usize..8,
        ux in 0.0..1.0f64, uy in 0.0..1.0f64,
        vx in 0.0..1.0f64, vy in 0.0..1.0f64,
    ) {
        let s = &scenes()[idx];
        let (lo, hi) = s.boundary().bounds();
        let at = |x: f64, y: f64| Vec2::new(lo.x + (hi.x - lo.x) * x, lo.y + (hi.y - lo.y) * y);
        let (p, q) = (at(ux, uy), at(vx, vy));
        let dc = (s.min_clearance(p) - s.min_clearance(q)).abs();
        prop_assert!(dc <= p.distance(q) + 1e-12);
    }

    #[test]
    fn raycast_is_rigid_motion_equivariant(
        idx in 0usize..8,
        ux in 0.0..1.0f64, uy in 0.0..1.0f64,
        ang in -3.2..3.2f64,
        rot in -3.2..3.2f64,
        tx in -20.0..20.0f64, ty in -20.0..20.0f64,
    ) {
        let Some((s, p)) = free_point(idx, ux, uy) else { return Ok(()) };
        let offset = Vec2::new(tx, ty);
        let moved = s.transformed(rot, offset);
        let d = Vec2::from_angle(ang);
        let a = s.raycast(p, d, 100.0).unwrap();
        let b = moved.raycast(p.rotated(rot) + offset, d.rotated(rot), 100.0).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn clearance_is_rigid_motion_invariant(
        idx in 0usize..8,
        ux in 0.0..1.0f64, uy in 0.0..1.0f64,
        rot in -3.2..3.2f64,
        tx in -20.0..20.0f64, ty in -20.0..20.0f64,
    ) {
        let Some((s, p)) = free_point(idx, ux, uy) else { return Ok(()) };
        let offset = Vec2::new(tx, ty);
        let moved = s.transformed(rot, offset);
        let a = s.min_clearance(p);
        let b = moved.min_clearance(p.rotated(rot) + offset);
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn raycast_rejects_points_outside() {
    let e3 = build_physical_space(Experiment::E3);
    assert!(e3.raycast(Vec2::ZERO, Vec2::new(1.0, 0.0), 10.0).is_err());
    assert!(e3
        .raycast(Vec2::new(9.0, 0.0), Vec2::new(1.0, 0.0), 10.0)
        .is_err());
    assert_eq!(
        e3.raycast(Vec2::new(3.0, 0.0), Vec2::new(-1.0, 0.0), 10.0)
            .unwrap(),
        1.0
    );
}
