use ghostdiff::correlator::{tree_reduce, AccumulatorMode, MomentAccumulator};
use ghostdiff::optics::{
    apply_object, detect, split_beam, BeamSplitterSpec, DetectorSpec, FourierLens, OpticalConfig,
    TransmissionObject,
};
use ghostdiff::specklefield::{SpeckleGenerator, SpeckleSpec};
use ghostdiff::{GridAxis, IntensityFrame};
use proptest::prelude::*;
use std::f64::consts::PI;

fn bench_frames(
    gen: &SpeckleGenerator<f64>,
    lens: &FourierLens<f64>,
    obj: &TransmissionObject<f64>,
    master: u64,
    k: u64,
) -> (IntensityFrame<f64>, IntensityFrame<f64>) {
    let det = DetectorSpec::default();
    let (t, r) = split_beam(&gen.frame(master, k), &BeamSplitterSpec::balanced());
    let a = lens.apply(&apply_object(&t, obj)).unwrap();
    let b = lens.apply(&r).unwrap();
    (detect(&a, &det, 0).unwrap(), detect(&b, &det, 0).unwrap())
}

fn small_bench() -> (SpeckleGenerator<f64>, FourierLens<f64>) {
    let axis = GridAxis::centered(64, 1.5625).unwrap();
    let gen = SpeckleGenerator::new(SpeckleSpec::new(4.0, 80.0, axis)).unwrap();
    let lens = FourierLens::new(OpticalConfig::new(0.532, 50.0).unwrap(), axis).unwrap();
    (gen, lens)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_partition_merges_to_identical_sums(cuts in proptest::collection::vec(1u64..60, 1..5)) {
        let (gen, lens) = small_bench();
        let obj = TransmissionObject::Identity;
        let axis = lens.output_axis();
        let total = 60u64;
        let mode = AccumulatorMode::FixedPixel(vec![20, 32]);
        let run = |range: std::ops::Range<u64>| {
            let mut acc = MomentAccumulator::new(axis, axis, mode.clone()).unwrap().starting_at(range.start);
            for k in range {
                let (a, b) = bench_frames(&gen, &lens, &obj, 5, k);
                acc.accumulate_frame(&a, &b).unwrap();
            }
            acc
        };
        let sequential = run(0..total);
        let mut bounds: Vec<u64> = cuts.clone();
        bounds.push(0);
        bounds.push(total);
        bounds.sort();
        bounds.dedup();
        let mut merged = run(bounds[0]..bounds[1]);
        for w in bounds[1..].windows(2) {
            merged.merge(&run(w[0]..w[1])).unwrap();
        }
        prop_assert_eq!(merged.n_frames(), sequential.n_frames());
        // Block totals agree to rounding; the estimator inputs are sums of
        // the same numbers in a different order.
        let (_, a1, a2, ac, aa) = merged.raw_sums();
        let (_, b1, b2, bc, ba) = sequential.raw_sums();
        for (x, y) in a1.iter().chain(&a2).chain(&ac).chain(&aa).zip(b1.iter().chain(&b2).chain(&bc).chain(&ba)) {
            prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
}

#[test]
fn tree_reduction_is_independent_of_thread_count() {
    let (gen, lens) = small_bench();
    let obj = TransmissionObject::square_phase_grating(12.5, 4.2, 0.84 * PI).unwrap();
    let axis = lens.output_axis();
    let leaf = |range: std::ops::Range<u64>| {
        let mut acc = MomentAccumulator::new(axis, axis, AccumulatorMode::FullMatrix)
            .unwrap()
            .starting_at(range.start);
        for k in range {
            let (a, b) = bench_frames(&gen, &lens, &obj, 9, k);
            acc.accumulate_frame(&a, &b).unwrap();
        }
        acc
    };
    let merge = |mut a: MomentAccumulator<f64>, b: MomentAccumulator<f64>| {
        a.merge(&b).unwrap();
        a
    };
    let mut results = Vec::new();
    for threads in [1, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        results.push(pool.install(|| tree_reduce(0..500, 30, &leaf, &merge)));
    }
    assert_eq!(results[0], results[1]);
    let g0 = results[0].cross_correlation().unwrap();
    let g1 = results[1].cross_correlation().unwrap();
    assert_eq!(g0, g1);
}

#[test]
fn independent_arms_have_no_correlation() {
    let (gen, lens) = small_bench();
    let axis = lens.output_axis();
    let mut acc = MomentAccumulator::new(axis, axis, AccumulatorMode::FixedPixel(vec![32])).unwrap();
    let obj = TransmissionObject::Identity;
    for k in 0..4000 {
        let (a, _) = bench_frames(&gen, &lens, &obj, 1, k);
        let (_, b) = bench_frames(&gen, &lens, &obj, 2, k);
        acc.accumulate_frame(&a, &b).unwrap();
    }
    let g = acc.cross_correlation().unwrap();
    for (v, e) in g.values.iter().zip(&g.std_error) {
        assert!(v.abs() <= 3.0 * e, "{v} vs {e}");
    }
}

#[test]
fn ghost_pattern_moves_with_the_fixed_pixel() {
    let axis = GridAxis::centered(256, 12.5 / 8.0).unwrap();
    let gen = SpeckleGenerator::new(SpeckleSpec::new(3.2, 332.5, axis)).unwrap();
    let lens = FourierLens::new(OpticalConfig::new(0.532, 50.0).unwrap(), axis).unwrap();
    let obj = TransmissionObject::square_phase_grating(12.5, 4.2, 0.84 * PI).unwrap();
    let out = lens.output_axis();
    let c = out.center_index();
    let shift = 8;
    let mut acc = MomentAccumulator::new(out, out, AccumulatorMode::FixedPixel(vec![c, c + shift])).unwrap();
    for k in 0..3000 {
        let (a, b) = bench_frames(&gen, &lens, &obj, 3, k);
        acc.accumulate_frame(&a, &b).unwrap();
    }
    let p0 = acc.ghost_pattern_fixed_pixel(c, false).unwrap().values;
    let p1 = acc.ghost_pattern_fixed_pixel(c + shift, false).unwrap().values;
    let overlap = |s: usize| -> f64 { (0..256 - s).map(|j| p0[j] * p1[j + s]).sum() };
    let best = (0..32).max_by(|&a, &b| overlap(a).total_cmp(&overlap(b))).unwrap();
    assert_eq!(best, shift);
}
