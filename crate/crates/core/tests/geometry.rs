use orp_core::geometry::{
    chamfer_distance, convex_hull, convex_hull_indices, convex_intersect, min_area_rect,
    nearest_gt_corner, nearest_gt_corner_indices, point_in_convex_polygon, polygon_area,
    polygon_giou, polygon_iou, sample_contour_points, ConvexPolygon, Point2, PointSet, QuadBox,
    RotatedRect,
};
use orp_core::{Error, Point, Points, Polygon, Quad};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(x: f64, y: f64) -> Point {
    Point2::new(x, y)
}

fn unit_square() -> Polygon {
    ConvexPolygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap()
}

fn square_at(x: f64, y: f64) -> Polygon {
    unit_square().transformed(|q| q + p(x, y)).unwrap()
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Hull by testing every ordered pair as a CCW edge, O(n^3). Duplicates keep
/// their lowest index; the walk starts at the lowest-x, then lowest-y vertex.
fn hull_oracle(pts: &[Point]) -> Option<Vec<usize>> {
    let uniq: Vec<usize> = (0..pts.len())
        .filter(|&i| !(0..i).any(|j| pts[j] == pts[i]))
        .collect();
    let mut next = std::collections::BTreeMap::new();
    for &i in &uniq {
        for &j in &uniq {
            if i == j {
                continue;
            }
            let edge = uniq.iter().all(|&k| {
                let o = orient(pts[i], pts[j], pts[k]);
                if o != 0.0 {
                    return o > 0.0;
                }
                let (d, e) = (pts[j] - pts[i], pts[k] - pts[i]);
                let t = e.dot(d);
                t >= 0.0 && t <= d.dot(d)
            });
            if edge {
                next.insert(i, j);
            }
        }
    }
    if next.len() < 3 {
        return None;
    }
    let start = *next
        .keys()
        .min_by(|&&a, &&b| {
            pts[a]
                .x
                .total_cmp(&pts[b].x)
                .then(pts[a].y.total_cmp(&pts[b].y))
        })
        .unwrap();
    let mut out = vec![start];
    let mut cur = next[&start];
    while cur != start {
        out.push(cur);
        cur = next[&cur];
        if out.len() > pts.len() {
            return None;
        }
    }
    Some(out)
}

fn bounding_area(pts: &[Point], theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for q in pts {
        let u = q.x * c + q.y * s;
        let v = -q.x * s + q.y * c;
        lo_u = lo_u.min(u);
        hi_u = hi_u.max(u);
        lo_v = lo_v.min(v);
        hi_v = hi_v.max(v);
    }
    (hi_u - lo_u) * (hi_v - lo_v)
}

/// Minimum over a 0.05 degree sweep and every pairwise point direction.
fn rect_area_oracle(pts: &[Point]) -> f64 {
    let mut best = (0..1800)
        .map(|k| bounding_area(pts, (k as f64 * 0.05).to_radians()))
        .fold(f64::INFINITY, f64::min);
    for a in pts {
        for b in pts {
            if a != b {
                best = best.min(bounding_area(pts, (b.y - a.y).atan2(b.x - a.x)));
            }
        }
    }
    best
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| p(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
        .collect()
}

#[test]
fn hull_square_with_center() {
    let s = Points::new(vec![
        p(0.0, 0.0),
        p(1.0, 0.0),
        p(1.0, 1.0),
        p(0.0, 1.0),
        p(0.5, 0.5),
    ])
    .unwrap();
    let h = convex_hull(&s).unwrap();
    assert_eq!(
        h.vertices(),
        &[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]
    );
}

#[test]
fn hull_triangle_is_itself() {
    let pts = vec![p(0.0, 0.0), p(2.0, 0.5), p(0.3, 1.7)];
    let h = convex_hull(&Points::new(pts.clone()).unwrap()).unwrap();
    assert_eq!(h.vertices(), &pts[..]);
}

#[test]
fn hull_matches_pair_oracle_on_seeded_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let pts = random_points(&mut rng, 9);
        assert_eq!(convex_hull_indices(&pts).ok(), hull_oracle(&pts), "{pts:?}");
    }
}

#[test]
fn hull_matches_oracle_on_integer_grids() {
    // small integer lattices produce many collinear and duplicate points
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let n = rng.random_range(3..12);
        let pts: Vec<Point> = (0..n)
            .map(|_| p(rng.random_range(0..4) as f64, rng.random_range(0..4) as f64))
            .collect();
        assert_eq!(convex_hull_indices(&pts).ok(), hull_oracle(&pts), "{pts:?}");
    }
}

#[test]
fn hull_errors_on_collinear_or_coincident() {
    let line = Points::new(vec![p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)]).unwrap();
    assert!(matches!(convex_hull(&line), Err(Error::DegenerateInput(_))));
    let same = Points::new(vec![p(1.0, 1.0); 5]).unwrap();
    assert!(matches!(convex_hull(&same), Err(Error::DegenerateInput(_))));
}

#[test]
fn rect_of_unit_square() {
    let s = Points::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap();
    let r = min_area_rect(&s).unwrap();
    assert!((r.center.x - 0.5).abs() < 1e-12 && (r.center.y - 0.5).abs() < 1e-12);
    assert!((r.width - 1.0).abs() < 1e-12 && (r.height - 1.0).abs() < 1e-12);
    assert!(r.angle.abs() < 1e-9);
}

#[test]
fn rect_of_rotated_square() {
    let c = p(0.5, 0.5);
    let pts = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]
        .map(|q| c + (q - c).rotate(45f64.to_radians()))
        .to_vec();
    let r = min_area_rect(&Points::new(pts).unwrap()).unwrap();
    assert!((r.center.x - 0.5).abs() < 1e-12 && (r.center.y - 0.5).abs() < 1e-12);
    assert!((r.width - 1.0).abs() < 1e-12 && (r.height - 1.0).abs() < 1e-12);
    assert!((r.angle + 45.0).abs() < 1e-9, "{}", r.angle);
}

#[test]
fn rect_area_matches_sweep_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let pts = random_points(&mut rng, 9);
        let r = min_area_rect(&Points::new(pts.clone()).unwrap()).unwrap();
        let oracle = rect_area_oracle(&pts);
        assert!(
            (r.area() - oracle).abs() <= 1e-6 * oracle,
            "{} vs {oracle}",
            r.area()
        );
    }
}

#[test]
fn rect_is_canonical() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let r = min_area_rect(&Points::new(random_points(&mut rng, 7)).unwrap()).unwrap();
        assert!(r.width >= r.height);
        assert!((-90.0..90.0).contains(&r.angle));
    }
}

#[test]
fn nearest_corner_examples() {
    let gt = QuadBox::new([p(0.0, 0.0), p(2.0, 0.0), p(2.0, 1.0), p(0.0, 1.0)]).unwrap();
    let mut pts = vec![p(0.5, 0.5), p(1.0, 0.2), p(1.5, 0.8)];
    pts.extend(gt.corners());
    pts.extend([p(0.3, 0.3), p(1.2, 0.6)]);
    let q = nearest_gt_corner(&Points::new(pts).unwrap(), &gt).unwrap();
    assert_eq!(q.corners(), gt.corners());

    let same = Points::new(vec![p(3.0, 3.0); 9]).unwrap();
    assert!(matches!(
        nearest_gt_corner(&same, &gt),
        Err(Error::DegenerateOutput(_))
    ));
}

#[test]
fn nearest_corner_matches_exhaustive_search() {
    let gt = QuadBox::new([p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let pts: Vec<Point> = (0..9)
            .map(|_| p(rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)))
            .collect();
        let expect: Vec<usize> = gt
            .corners()
            .iter()
            .map(|c| {
                let mut best = 0;
                for i in 1..pts.len() {
                    if pts[i].dist(*c) < pts[best].dist(*c) {
                        best = i;
                    }
                }
                best
            })
            .collect();
        let set = Points::new(pts.clone()).unwrap();
        match nearest_gt_corner_indices(&set, &gt) {
            Ok(idx) => {
                let mut got = idx.to_vec();
                let mut want = expect.clone();
                got.sort_unstable();
                want.sort_unstable();
                assert_eq!(got, want);
                // same selection, possibly reordered to counter-clockwise
                let q = nearest_gt_corner(&set, &gt).unwrap();
                assert!(q.area() > 0.0);
            }
            Err(e) => {
                let sel: Vec<Point> = expect.iter().map(|&i| pts[i]).collect();
                assert!(
                    QuadBox::new([sel[0], sel[1], sel[2], sel[3]]).is_err(),
                    "{e}"
                );
            }
        }
    }
}

#[test]
fn areas() {
    assert_eq!(polygon_area(&unit_square()), 1.0);
    let tri = ConvexPolygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)]).unwrap();
    assert_eq!(polygon_area(&tri), 0.5);
}

#[test]
fn hexagon_area_matches_triangle_fan() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let mut angles: Vec<f64> = (0..6)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        let r = rng.random_range(0.5..3.0);
        let v: Vec<Point> = angles
            .iter()
            .map(|a| p(r * a.cos() + 1.0, r * a.sin() - 2.0))
            .collect();
        let Ok(poly) = ConvexPolygon::new(v.clone()) else {
            continue;
        };
        let fan: f64 = (1..v.len() - 1)
            .map(|k| 0.5 * ((v[k] - v[0]).cross(v[k + 1] - v[0])).abs())
            .sum();
        assert!((polygon_area(&poly) - fan).abs() < 1e-12);
    }
}

#[test]
fn intersections() {
    let a = unit_square();
    let same = convex_intersect(&a, &a).unwrap();
    assert!((same.area() - 1.0).abs() < 1e-15);
    assert!(convex_intersect(&a, &square_at(2.0, 0.0)).is_none());
    let half = convex_intersect(&a, &square_at(0.5, 0.0)).unwrap();
    assert!((half.area() - 0.5).abs() < 1e-15);
    // Monte-Carlo cross-check of the shifted case
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 1_000_000;
    let b = square_at(0.5, 0.0);
    let hits = (0..n)
        .filter(|_| {
            let q = p(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            point_in_convex_polygon(q, &b)
        })
        .count();
    assert!((hits as f64 / n as f64 - 0.5).abs() < 2e-3);
}

#[test]
fn iou_and_giou_examples() {
    let a = unit_square();
    assert_eq!(polygon_iou(&a, &a).unwrap(), 1.0);
    assert_eq!(polygon_iou(&a, &square_at(3.0, 0.0)).unwrap(), 0.0);
    assert!((polygon_iou(&a, &square_at(0.5, 0.0)).unwrap() - 1.0 / 3.0).abs() < 1e-9);
    assert!((polygon_giou(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    assert!((polygon_giou(&a, &square_at(0.5, 0.0)).unwrap() - 1.0 / 3.0).abs() < 1e-9);
    assert!(polygon_giou(&a, &square_at(100.0, 0.0)).unwrap() < -0.95);
}

#[test]
fn touching_squares_do_not_intersect() {
    let a = unit_square();
    assert!(convex_intersect(&a, &square_at(1.0, 0.0)).is_none());
    assert_eq!(polygon_iou(&a, &square_at(1.0, 1.0)).unwrap(), 0.0);
}

#[test]
fn contour_samples() {
    let q = QuadBox::new([p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap();
    assert_eq!(sample_contour_points(&q, 4).unwrap(), q.corners().to_vec());
    assert_eq!(
        sample_contour_points(&q, 8).unwrap(),
        vec![
            p(0.0, 0.0),
            p(0.5, 0.0),
            p(1.0, 0.0),
            p(1.0, 0.5),
            p(1.0, 1.0),
            p(0.5, 1.0),
            p(0.0, 1.0),
            p(0.0, 0.5)
        ]
    );
    assert!(sample_contour_points(&q, 6).is_err());

    let q = QuadBox::new([p(0.3, -0.2), p(2.1, 0.4), p(1.7, 1.9), p(-0.4, 1.1)]).unwrap();
    let s = sample_contour_points(&q, 40).unwrap();
    for edge in s.chunks(10) {
        let d0 = edge[0].dist(edge[1]);
        for w in edge.windows(2) {
            assert!((w[0].dist(w[1]) - d0).abs() < 1e-12);
        }
    }
}

fn chamfer_oracle(a: &[Point], b: &[Point]) -> f64 {
    let one = |x: &[Point], y: &[Point]| {
        let mut total = 0.0;
        for u in x {
            let mut m = f64::INFINITY;
            for v in y {
                m = m.min(u.dist(*v));
            }
            total += m;
        }
        total / x.len() as f64
    };
    0.5 * (one(a, b) + one(b, a))
}

#[test]
fn chamfer_examples() {
    let a = vec![p(0.0, 0.0), p(1.0, 2.0)];
    assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
    assert_eq!(
        chamfer_distance(&[p(0.0, 0.0)], &[p(1.0, 0.0)]).unwrap(),
        1.0
    );
    let r0 = RotatedRect::new(p(0.0, 0.0), 2.0, 1.0, 0.0)
        .to_quad()
        .unwrap();
    let r90 = QuadBox::new(r0.corners().map(|c| c.rotate(std::f64::consts::FRAC_PI_2))).unwrap();
    let (s0, s90) = (
        sample_contour_points(&r0, 40).unwrap(),
        sample_contour_points(&r90, 40).unwrap(),
    );
    assert_eq!(
        chamfer_distance(&s0, &s90).unwrap(),
        chamfer_oracle(&s0, &s90)
    );
    assert!(chamfer_distance::<f64>(&[], &a).is_err());
}

#[test]
fn containment_examples() {
    let s = unit_square();
    assert!(point_in_convex_polygon(p(0.5, 0.5), &s));
    assert!(!point_in_convex_polygon(p(2.0, 2.0), &s));
    assert!(point_in_convex_polygon(p(1.0, 0.5), &s));
}

#[test]
fn single_precision_agrees_with_double() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let pts = random_points(&mut rng, 9);
        let lo: Vec<Point2<f32>> = pts
            .iter()
            .map(|q| Point2::new(q.x as f32, q.y as f32))
            .collect();
        let r64 = min_area_rect(&Points::new(pts).unwrap()).unwrap();
        let r32 = min_area_rect(&PointSet::new(lo).unwrap()).unwrap();
        assert!((r64.area() - r32.area() as f64).abs() < 1e-4);
    }
}

fn point() -> impl Strategy<Value = Point> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| p(x, y))
}

fn polygon() -> impl Strategy<Value = Polygon> {
    prop::collection::vec(point(), 3..12)
        .prop_filter_map("degenerate", |v| convex_hull(&Points::new(v).ok()?).ok())
        .prop_filter("tiny", |h| h.area() > 1e-3)
}

fn rigid(q: Point, theta: f64, t: Point) -> Point {
    q.rotate(theta) + t
}

proptest! {
    #[test]
    fn hull_is_idempotent(pts in prop::collection::vec(point(), 3..30)) {
        let Ok(h) = convex_hull(&Points::new(pts).unwrap()) else { return Ok(()) };
        let again = convex_hull(&Points::new(h.vertices().to_vec()).unwrap()).unwrap();
        prop_assert_eq!(again, h);
    }

    #[test]
    fn hull_and_rect_contain_all_points(pts in prop::collection::vec(point(), 3..30)) {
        let set = Points::new(pts.clone()).unwrap();
        let Ok(h) = convex_hull(&set) else { return Ok(()) };
        let r = min_area_rect(&set).unwrap();
        let rp = r.to_polygon().unwrap();
        for q in &pts {
            prop_assert!(point_in_convex_polygon(*q, &h));
            // tolerance scaled to the coordinate range
            let c = r.center;
            let d = *q - c;
            let (u, n) = (r.axis(), r.axis().perp());
            prop_assert!(d.dot(u).abs() <= r.width / 2.0 + 1e-9 && d.dot(n).abs() <= r.height / 2.0 + 1e-9);
        }
        prop_assert!(rp.area() <= h.area() * 2.0 + 1e-9);
    }

    #[test]
    fn rect_never_beats_a_sweep(pts in prop::collection::vec(point(), 3..20)) {
        let set = Points::new(pts.clone()).unwrap();
        let Ok(r) = min_area_rect(&set) else { return Ok(()) };
        let sweep = (0..3600).map(|k| bounding_area(&pts, (k as f64 * 0.025).to_radians())).fold(f64::INFINITY, f64::min);
        prop_assert!(r.area() <= sweep * (1.0 + 1e-9));
    }

    #[test]
    fn iou_symmetric_bounded_and_above_giou(a in polygon(), b in polygon()) {
        let (ab, ba) = (polygon_iou(&a, &b).unwrap(), polygon_iou(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        let g = polygon_giou(&a, &b).unwrap();
        prop_assert!(g <= ab + 1e-12 && g > -1.0);
    }

    #[test]
    fn rigid_motion_invariance(a in polygon(), b in polygon(), theta in 0.0..std::f64::consts::TAU, tx in -50.0..50.0f64, ty in -50.0..50.0f64) {
        let t = p(tx, ty);
        let (ma, mb) = (a.transformed(|q| rigid(q, theta, t)).unwrap(), b.transformed(|q| rigid(q, theta, t)).unwrap());
        prop_assert!((polygon_iou(&a, &b).unwrap() - polygon_iou(&ma, &mb).unwrap()).abs() < 1e-9);
        prop_assert!((polygon_giou(&a, &b).unwrap() - polygon_giou(&ma, &mb).unwrap()).abs() < 1e-9);
        let (va, vb) = (a.vertices().to_vec(), b.vertices().to_vec());
        let (wa, wb): (Vec<Point>, Vec<Point>) = (va.iter().map(|q| rigid(*q, theta, t)).collect(), vb.iter().map(|q| rigid(*q, theta, t)).collect());
        prop_assert!((chamfer_distance(&va, &vb).unwrap() - chamfer_distance(&wa, &wb).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn chamfer_symmetric_nonnegative(a in prop::collection::vec(point(), 1..15), b in prop::collection::vec(point(), 1..15)) {
        let (ab, ba) = (chamfer_distance(&a, &b).unwrap(), chamfer_distance(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(chamfer_distance(&a, &a).unwrap() == 0.0);
    }

    #[test]
    fn quad_winding_is_normalized(cx in -5.0..5.0f64, cy in -5.0..5.0f64, w in 0.1..5.0f64, h in 0.1..5.0f64, a in -90.0..90.0f64) {
        let q: Quad = RotatedRect::new(p(cx, cy), w, h, a).to_quad().unwrap();
        let mut cw = *q.corners();
        cw.reverse();
        let r = QuadBox::new(cw).unwrap();
        prop_assert!(r.area() > 0.0);
        prop_assert!((r.area() - q.area()).abs() < 1e-9);
    }
}
