use ghostdiff::optics::{
    apply_object, detect, lens_far_field, split_beam, BeamSplitterSpec, DetectorSpec,
    OpticalConfig, TransmissionObject,
};
use ghostdiff::analysis::{fwhm, grating_efficiency, integrate_peaks_at, Baseline, GratingSpec};
use ghostdiff::specklefield::{SpeckleGenerator, SpeckleSpec};
use ghostdiff::{Complex, ComplexField, GridAxis, Pattern};
use std::f64::consts::PI;

fn cfg() -> OpticalConfig<f64> {
    OpticalConfig::new(0.532, 50.0).unwrap()
}

fn field_from(axis: GridAxis<f64>, f: impl Fn(f64) -> Complex<f64>) -> ComplexField<f64> {
    ComplexField::new(axis, axis.coordinates().map(f).collect()).unwrap()
}

/// 1/e^2 intensity half-width from second moment of a sampled Gaussian.
fn intensity_waist(axis: &GridAxis<f64>, intensity: &[f64]) -> f64 {
    let total: f64 = intensity.iter().sum();
    let var: f64 = axis
        .coordinates()
        .zip(intensity)
        .map(|(x, i)| x * x * i)
        .sum::<f64>()
        / total;
    // I ~ exp(-2 x^2 / w^2) has variance w^2 / 4.
    2.0 * var.sqrt()
}

#[test]
fn gaussian_beam_waist_transforms_to_lambda_f_over_pi_w() {
    let axis = GridAxis::centered(2048, 0.5).unwrap();
    let w = 40.0;
    let field = field_from(axis, |x| Complex::new((-(x * x) / (w * w)).exp(), 0.0));
    let out = lens_far_field(&field, &cfg()).unwrap();
    let got = intensity_waist(&out.axis, &out.intensity().values);
    let want = 0.532 * 50_000.0 / (PI * w);
    assert!((got / want - 1.0).abs() < 0.01, "{got} vs {want}");
}

#[test]
fn slit_first_zero_at_lambda_f_over_width() {
    let axis = GridAxis::centered(4096, 0.25).unwrap();
    let width = 100.0;
    let field = field_from(axis, |x| {
        Complex::new(if x.abs() <= width / 2.0 { 1.0 } else { 0.0 }, 0.0)
    });
    let out = lens_far_field(&field, &cfg()).unwrap();
    let i = out.intensity().values;
    let c = out.axis.center_index();
    // First local minimum to the right of the centre.
    let m = (c + 1..i.len() - 1).find(|&k| i[k] <= i[k - 1] && i[k] <= i[k + 1]).unwrap();
    let want = 0.532 * 50_000.0 / width;
    assert!((out.axis.coordinate(m) - want).abs() <= out.axis.pitch(), "{}", out.axis.coordinate(m));
}

#[test]
fn parseval_and_double_transform_reversal() {
    let axis = GridAxis::centered(512, 0.4).unwrap();
    let spec = SpeckleSpec::new(3.0, 150.0, axis);
    let field = SpeckleGenerator::new(spec).unwrap().generate(77);
    let out = lens_far_field(&field, &cfg()).unwrap();
    let p_in: f64 = field.values.iter().map(|v| v.norm_sqr()).sum();
    let p_out: f64 = out.values.iter().map(|v| v.norm_sqr()).sum();
    assert!((p_in - p_out).abs() / p_in < 1e-10);

    // Second transform on a grid with the input pitch lands back on x -> -x.
    let back_cfg = OpticalConfig::new(0.532, 50.0).unwrap();
    let relabeled = ComplexField::new(axis, out.values.clone()).unwrap();
    let twice = lens_far_field(&relabeled, &back_cfg).unwrap();
    let n = axis.n_points();
    let scale = field.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for i in 1..n {
        let d = (twice.values[i] - field.values[n - i]).norm();
        assert!(d < 1e-10 * scale.max(1.0), "{i}: {d}");
    }
}

#[test]
fn unit_field_through_grating_gives_closed_form_orders() {
    // 8 periods of 64 samples: the discrete orders sit on exact bins.
    let d = 12.5;
    let axis = GridAxis::centered(512, d / 64.0).unwrap();
    let design = GratingSpec::new(d, 4.4, 0.71 * PI).unwrap();
    let g = design.sampled_on(&axis);
    let field = field_from(axis, |_| Complex::new(1.0, 0.0));
    let out = lens_far_field(&apply_object(&field, &design.to_object().unwrap()), &cfg()).unwrap();
    let i = out.intensity().values;
    let total: f64 = i.iter().sum();
    let c = out.axis.center_index();
    for n in -3i32..=3 {
        let bin = (c as i32 + 8 * n) as usize;
        let eta = i[bin] / total;
        // Sampling a period with 64 points changes eta_n by (pi n/64)^2/sin^2.
        let alias = if n == 0 { 1.0 } else {
            let t = PI * n as f64 / 64.0;
            (t / t.sin()).powi(2)
        };
        let want = grating_efficiency(&g, n);
        assert!((eta / alias - want).abs() < 1e-6 * want.max(1e-3), "n={n}: {eta} vs {want}");
    }
}

#[test]
fn pure_phase_object_keeps_modulus() {
    let axis = GridAxis::centered(256, 0.39).unwrap();
    let field = SpeckleGenerator::new(SpeckleSpec::new(2.0, 80.0, axis)).unwrap().generate(5);
    let obj = TransmissionObject::square_phase_grating(12.5, 4.4, 0.84 * PI).unwrap();
    let out = apply_object(&field, &obj);
    for (a, b) in field.values.iter().zip(&out.values) {
        assert!((a.norm() - b.norm()).abs() < 1e-15);
    }
    assert_eq!(apply_object(&field, &TransmissionObject::Identity), field);
}

#[test]
fn lossless_splitter_conserves_intensity() {
    let axis = GridAxis::<f64>::centered(64, 1.0).unwrap();
    let field = SpeckleGenerator::new(SpeckleSpec::new(4.0, 40.0, axis)).unwrap().generate(6);
    let (t, r) = split_beam(&field, &BeamSplitterSpec::balanced());
    for ((a, b), c) in t.values.iter().zip(&r.values).zip(&field.values) {
        assert!((a.norm_sqr() + b.norm_sqr() - c.norm_sqr()).abs() < 1e-14);
        assert!((a.norm_sqr() - 0.5 * c.norm_sqr()).abs() < 1e-14);
    }
}

#[test]
fn binning_overestimates_small_speckle() {
    // A 20 um source gives far-field speckle of about lambda F / D = 1330 um,
    // some 20 samples; the coarse pixel spans 32.
    let axis = GridAxis::centered(1024, 0.390625).unwrap();
    let gen = SpeckleGenerator::new(SpeckleSpec::new(2.0, 20.0, axis)).unwrap();
    let cfg = cfg();
    let fine = DetectorSpec::default();
    let far_pitch = cfg.far_field_axis(&axis).unwrap().pitch();
    let coarse = DetectorSpec::with_pixel_pitch(far_pitch * 32.0);
    let measure = |det: &DetectorSpec<f64>| {
        let frames: Vec<Vec<f64>> = (0..400)
            .map(|k| {
                let f = lens_far_field(&gen.frame(9, k), &cfg).unwrap();
                detect(&f, det, k).unwrap().values
            })
            .collect();
        let n = frames[0].len();
        let pitch = det.pixel_axis(&cfg.far_field_axis(&axis).unwrap()).unwrap().pitch();
        let c = n / 2;
        // Intensity autocorrelation about the centre pixel.
        let mean: Vec<f64> = (0..n).map(|x| frames.iter().map(|f| f[x]).sum::<f64>() / 400.0).collect();
        let corr: Vec<f64> = (0..n)
            .map(|x| frames.iter().map(|f| f[x] * f[c]).sum::<f64>() / 400.0 - mean[x] * mean[c])
            .collect();
        let p = Pattern::new(GridAxis::centered(n, pitch).unwrap(), corr);
        fwhm(&p).unwrap()
    };
    let w_fine = measure(&fine);
    let w_coarse = measure(&coarse);
    assert!(w_coarse > w_fine * 1.2, "{w_fine} -> {w_coarse}");
}

#[test]
fn synthetic_peaks_reproduce_grating_ratios() {
    let g = GratingSpec::new(12.5, 4.4, 0.84 * PI).unwrap();
    let axis = GridAxis::centered(4096, 3.0).unwrap();
    let psf = 12.0;
    let x1 = 2128.0;
    let values: Vec<f64> = axis
        .coordinates()
        .map(|x| {
            (-3..=3)
                .map(|n| {
                    let dx = x - n as f64 * x1;
                    grating_efficiency(&g, n) * (-dx * dx / (2.0 * psf * psf)).exp()
                })
                .sum::<f64>()
                + 0.3
        })
        .collect();
    let p = Pattern::new(axis, values);
    let peaks: Vec<(i32, f64)> = (-2..=2).map(|n| (n, n as f64 * x1)).collect();
    let t = integrate_peaks_at(&p, &peaks, 200.0, Baseline::FlankMedian).unwrap();
    for e in &t {
        let want = grating_efficiency(&g, e.order) / grating_efficiency(&g, 0);
        assert!((e.ratio_to_zero / want - 1.0).abs() < 0.01, "{e:?}");
    }
}
