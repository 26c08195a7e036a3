use rand::Rng;
use redirect_core::agent::plan_virtual_path;
use redirect_core::environment::{
    generate_virtual_space, spawn_target, NavGrid, SpaceKind, SpaceMap, VirtualSpaceParams,
};
use redirect_core::geometry::Vec2;
use redirect_core::rng::{stream_rng, Stream};

#[test]
fn generated_spaces_are_valid() {
    let params = VirtualSpaceParams::default();
    for seed in 0..1000 {
        let mut rng = stream_rng(seed, Stream::Scene);
        let s = generate_virtual_space(&mut rng, &params).unwrap();
        assert_eq!(s.kind(), SpaceKind::Virtual);
        // the checked constructor re-validates containment, non-overlap and connectivity
        SpaceMap::new(
            s.boundary().clone(),
            s.obstacles().to_vec(),
            SpaceKind::Virtual,
        )
        .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let grid = NavGrid::build(&s, NavGrid::DEFAULT_RESOLUTION, params.nav_radius);
        assert!(grid.largest_component_size() as f64 >= 0.95 * grid.free_cell_count() as f64);
    }
}

#[test]
fn spawned_targets_meet_their_postconditions() {
    let params = VirtualSpaceParams::default();
    let mut draws = 0;
    for seed in 0..20u64 {
        let mut rng = stream_rng(seed, Stream::Scene);
        let space = generate_virtual_space(&mut rng, &params).unwrap();
        let nav = NavGrid::build(&space, NavGrid::DEFAULT_RESOLUTION, params.nav_radius);
        let main = nav.largest_component().unwrap();
        let mut trng = stream_rng(seed, Stream::Targets);
        let (lo, hi) = space.boundary().bounds();
        while draws < (seed as usize + 1) * 500 {
            let p = Vec2::new(trng.gen_range(lo.x..hi.x), trng.gen_range(lo.y..hi.y));
            if space.min_clearance(p) < 0.3
                || nav.attach(&space, p).and_then(|c| nav.component_of(c)) != Some(main)
            {
                continue;
            }
            let t = spawn_target(&mut trng, p, &space, &nav, &params).unwrap();
            let d = t.position.distance(p);
            assert!((0.2..=8.0).contains(&d), "distance {d}");
            assert!(space.min_clearance(t.position) >= 0.3);
            assert_eq!(t.radius, 0.2);
            plan_virtual_path(p, &t, &space, &nav).unwrap();
            draws += 1;
        }
    }
    assert_eq!(draws, 10_000);
}
