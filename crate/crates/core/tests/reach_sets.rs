use std::sync::Arc;

use ellipsum::exec::Strategy;
use ellipsum::geometry::{Ellipsoid, Exponent, PSumSet};
use ellipsum::linalg::{Matrix, SpdMatrix, Vector};
use ellipsum::metrics::{hausdorff_sampled, hausdorff_upper_bound, report, BoundKind, SphereSampler};
use ellipsum::oracle::{check_containment, psum_mvee_reference, KHACHIYAN_TOL};
use ellipsum::outer::{fold_minkowski_outer, fold_psum_outer, Criterion, FixedPointConfig};
use ellipsum::reach::{
    propagate_blocks, reach_support, reach_tube, ControlTiming, ExplicitControls, LtiSystem,
    ModulatedControls, TubeConfig, UncertaintyModel,
};
use ellipsum::scenarios::{self, Scenario};

fn tube_of(s: &Scenario) -> ellipsum::reach::ReachTube {
    reach_tube(&s.system, &s.model, s.horizon, &TubeConfig::default()).unwrap()
}

#[test]
fn tubes_contain_exact_reach_sets() {
    let sampler = SphereSampler::new(2, 2000, 0);
    for s in [scenarios::ellipsoidal(), scenarios::mixed_psum()] {
        let tube = tube_of(&s);
        assert_eq!(tube.steps.len(), s.horizon + 1);
        for st in &tube.steps {
            assert_eq!(st.blocks.blocks().len(), st.t + 1);
            for c in [Criterion::MinVolume, Criterion::MinTrace] {
                let r = check_containment(&st.result(c).ellipsoid(), |y| st.support(y), &sampler, 1e-8).unwrap();
                assert!(r.passed(), "{} t={} {c:?}: {}", s.name, st.t, r.min_margin);
            }
        }
    }
}

#[test]
fn tube_support_matches_direct_evaluation() {
    let s = scenarios::mixed_psum();
    let tube = tube_of(&s);
    let y = Vector::from_row_slice(&[0.6, -0.8]);
    for st in &tube.steps {
        let direct = reach_support(&s.system, &s.model, st.t, &y).unwrap();
        let summed: f64 = st.blocks.blocks().iter().map(|b| b.support(&y)).sum();
        assert!((direct - summed).abs() < 1e-12 * direct.abs().max(1.0));
        assert!((direct - st.support(&y)).abs() < 1e-12 * direct.abs().max(1.0));
    }
    let x0 = &s.model.initial;
    assert_eq!(reach_support(&s.system, &s.model, 0, &y).unwrap(), x0.support(&y));
}

#[test]
fn tube_is_identical_across_strategies() {
    let s = scenarios::mixed_psum();
    let run = |strategy| {
        reach_tube(&s.system, &s.model, s.horizon, &TubeConfig { strategy, ..Default::default() }).unwrap()
    };
    let a = run(Strategy::Sequential);
    let b = run(Strategy::Parallel);
    for (x, y) in a.steps.iter().zip(&b.steps) {
        assert_eq!(x.mvoe.shape, y.mvoe.shape);
        assert_eq!(x.mtoe.shape, y.mtoe.shape);
    }
}

#[test]
fn constant_inputs_give_closed_form_trace() {
    let q0 = SpdMatrix::from_rows(2, &[2.0, 0.4, 0.4, 1.0]).unwrap();
    let u = SpdMatrix::from_rows(2, &[0.5, -0.1, -0.1, 0.8]).unwrap();
    let sys = LtiSystem::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
    let controls = ModulatedControls::new(Exponent::ONE, Vector::zeros(2), vec![u.clone()], vec![0.0]).unwrap();
    let model = UncertaintyModel::new(
        PSumSet::centered(Exponent::ONE, vec![q0.clone()]).unwrap(),
        Some(Arc::new(controls)),
        ControlTiming::AppliedStep,
    );
    let tube = reach_tube(&sys, &model, 6, &TubeConfig::default()).unwrap();
    let cfg = FixedPointConfig::default();
    for st in &tube.steps {
        let blocks = st.blocks.blocks();
        for b in &blocks[1..] {
            assert_eq!(b.shapes()[0].matrix(), &(u.matrix() * 2.0));
        }
        let t = st.t as f64;
        let want = (t * (2.0 * u.trace()).sqrt() + q0.trace().sqrt()).powi(2);
        assert!((st.mtoe.trace() - want).abs() < 1e-10 * want);
        let es: Vec<Ellipsoid> = blocks.iter().map(|b| Ellipsoid::centered(b.shapes()[0].clone())).collect();
        let direct = fold_minkowski_outer(&es, Criterion::MinTrace, &cfg).unwrap();
        assert!((direct.trace() - st.mtoe.trace()).abs() < 1e-10 * want);
    }
}

#[test]
fn centers_propagate_through_the_dynamics() {
    let sys = scenarios::double_integrator(0.3);
    let c0 = Vector::from_row_slice(&[1.0, -1.0]);
    let uc = Vector::from_row_slice(&[0.5, 2.0]);
    let x0 = PSumSet::new(Exponent::Finite(2.5), c0.clone(), vec![SpdMatrix::identity(2); 2]).unwrap();
    let u = PSumSet::new(Exponent::Finite(1.5), uc.clone(), vec![SpdMatrix::identity(2)]).unwrap();
    let controls = ExplicitControls::new(vec![u; 4]).unwrap();
    let model = UncertaintyModel::new(x0, Some(Arc::new(controls)), ControlTiming::AppliedStep);
    let tube = reach_tube(&sys, &model, 4, &TubeConfig::default()).unwrap();
    let (f, g) = (sys.f(), sys.g());
    let mut x = c0;
    for st in &tube.steps {
        assert!((&st.center - &x).amax() < 1e-12);
        assert!((&st.mvoe.center - &x).amax() < 1e-12);
        x = f * x + g * &uc;
    }
}

#[test]
fn empty_controls_report_initial_volume() {
    let q = SpdMatrix::from_rows(2, &[3.0, 1.0, 1.0, 2.0]).unwrap();
    let model = UncertaintyModel::uncontrolled(PSumSet::centered(Exponent::ONE, vec![q.clone()]).unwrap());
    let sys = scenarios::double_integrator(0.3);
    let tube = reach_tube(&sys, &model, 3, &TubeConfig::default()).unwrap();
    let rows = report(&tube).unwrap();
    let want = Ellipsoid::centered(q).volume();
    assert!((rows[0].mvoe.volume - want).abs() < 1e-12 * want);
    // det F = 1, so the volume is carried along unchanged.
    for r in &rows {
        assert!((r.mvoe.volume - want).abs() < 1e-9 * want);
        assert_eq!(r.blocks, 1);
    }
}

#[test]
fn report_matches_tube_and_labels_bounds() {
    let e = report(&tube_of(&scenarios::ellipsoidal())).unwrap();
    for (r, want) in e[1..].iter().zip(scenarios::ELLIPSOIDAL_MVOE_VOLUMES) {
        assert!((r.mvoe.volume - want).abs() / want < 1e-3);
        assert_eq!(r.bound_kind, BoundKind::Upper);
        assert!(r.mvoe.hausdorff_bound >= 0.0);
    }
    let m = report(&tube_of(&scenarios::mixed_psum())).unwrap();
    assert!(m.iter().all(|r| r.bound_kind == BoundKind::Heuristic));
}

#[test]
fn report_volumes_are_rotation_invariant() {
    let base = scenarios::mixed_psum();
    let th: f64 = 0.7;
    let r = Matrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
    let sys = LtiSystem::new(&r * base.system.f() * r.transpose(), &r * base.system.g() * r.transpose()).unwrap();
    let x0 = base.model.initial.linear_map(&r).unwrap();
    let bases: Vec<SpdMatrix> = (0..3)
        .map(|_| SpdMatrix::from_diagonal(&[10.0, 0.1]).unwrap().congruence(&r).unwrap())
        .collect();
    let controls = ModulatedControls::new(Exponent::Finite(1.5), Vector::zeros(2), bases, vec![1.0, 2.0, 3.0]).unwrap();
    let model = UncertaintyModel::new(x0, Some(Arc::new(controls)), ControlTiming::CurrentStep);
    let rotated = report(&reach_tube(&sys, &model, 10, &TubeConfig::default()).unwrap()).unwrap();
    let original = report(&tube_of(&base)).unwrap();
    for (a, b) in original.iter().zip(&rotated) {
        assert!((a.mvoe.volume - b.mvoe.volume).abs() < 1e-8 * a.mvoe.volume);
        assert!((a.mtoe.volume - b.mtoe.volume).abs() < 1e-8 * a.mtoe.volume);
    }
}

#[test]
fn sampled_gap_stays_below_upper_bound() {
    let tube = tube_of(&scenarios::ellipsoidal());
    let sampler = SphereSampler::default_for(2);
    for st in &tube.steps {
        let ms: Vec<SpdMatrix> = st.blocks.blocks().iter().map(|b| b.shapes()[0].clone()).collect();
        let bound = hausdorff_upper_bound(&st.mvoe.shape, &ms).unwrap();
        let gap = hausdorff_sampled(&st.mvoe.ellipsoid(), |y| st.support(y), &sampler).unwrap();
        assert!(gap <= bound + 1e-12, "t={} gap {gap} bound {bound}", st.t);
    }
}

#[test]
fn sampled_gap_grows_with_nested_samples() {
    let tube = tube_of(&scenarios::mixed_psum());
    let st = &tube.steps[5];
    let outer = st.mvoe.ellipsoid();
    let mut last = 0.0;
    for n in [10, 100, 1000, 5000] {
        let s = SphereSampler::new(2, 1, 4).with_scheme(ellipsum::metrics::SphereScheme::QuasiRandom).with_count(n);
        let g = hausdorff_sampled(&outer, |y| st.support(y), &s).unwrap();
        assert!(g >= last);
        last = g;
    }
    let mut last = 0.0;
    for n in [45, 90, 360, 3600] {
        let g = hausdorff_sampled(&outer, |y| st.support(y), &SphereSampler::new(2, n, 0)).unwrap();
        assert!(g >= last);
        last = g;
    }
}

#[test]
fn first_step_blocks_are_mapped_shapes() {
    let s = scenarios::ellipsoidal();
    let blocks = propagate_blocks(&s.system, &s.model, 1).unwrap();
    let (f, g) = (s.system.f(), s.system.g());
    let scale = 1.0 + 1f64.cos().powi(2);
    let u1 = Matrix::from_diagonal(&Vector::from_row_slice(&[10.0 * scale, 0.1 * scale]));
    assert!((blocks[1].blocks()[0].shapes()[0].matrix() - f * f.transpose()).amax() < 1e-14);
    assert!((blocks[1].blocks()[1].shapes()[0].matrix() - g * u1 * g.transpose()).amax() < 1e-14);
}

#[test]
fn reference_never_beats_the_lowner_john_bound_by_much() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let cfg = FixedPointConfig::default();
    for i in 0..12 {
        let d = 2;
        let shapes: Vec<SpdMatrix> = (0..2)
            .map(|_| {
                let a = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
                SpdMatrix::new(&a * a.transpose() + Matrix::identity(d, d) * 0.1).unwrap()
            })
            .collect();
        let p = [Exponent::ONE, Exponent::Finite(1.5), Exponent::Finite(2.5), Exponent::Finite(10.0)][i % 4];
        let set = PSumSet::centered(p, shapes).unwrap();
        let reference = psum_mvee_reference(&set, 60, KHACHIYAN_TOL).unwrap();
        let mvoe = fold_psum_outer(&set, Criterion::MinVolume, &cfg).unwrap();
        assert!(reference.volume() <= mvoe.volume() * 1.01);
    }
}
