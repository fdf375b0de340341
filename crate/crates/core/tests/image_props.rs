use genfair::image::{downsample_bilinear_aa, dssim, perturb_gaussian, ssim, Image};
use proptest::prelude::*;

fn image(w: usize, h: usize, c: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(0.0..=255.0f64, w * h * c)
        .prop_map(move |px| Image::new(w, h, c, px).unwrap())
}

fn pair() -> impl Strategy<Value = (Image, Image)> {
    (11usize..24, 11usize..24, prop::sample::select(vec![1usize, 3]))
        .prop_flat_map(|(w, h, c)| (image(w, h, c), image(w, h, c)))
}

fn mean(img: &Image) -> f64 {
    img.pixels().iter().sum::<f64>() / img.pixels().len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ssim_is_symmetric((x, y) in pair()) {
        let a = ssim(&x, &y).unwrap();
        let b = ssim(&y, &x).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn dssim_in_unit_interval((x, y) in pair()) {
        let d = dssim(&x, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&d), "{d}");
    }

    #[test]
    fn downsample_preserves_mean(
        (img, factor) in (1usize..6, 1usize..6, prop::sample::select(vec![2usize, 4, 8]))
            .prop_flat_map(|(w, h, f)| (image(w * f, h * f, 3), Just(f)))
    ) {
        let out = downsample_bilinear_aa(&img, img.width() / factor, img.height() / factor).unwrap();
        prop_assert!((mean(&out) - mean(&img)).abs() < 1e-6, "{} vs {}", mean(&out), mean(&img));
    }

    #[test]
    fn downsample_keeps_constant_images(
        w in 2usize..40, h in 2usize..40, v in 0.0..=255.0f64, ow in 1usize..40, oh in 1usize..40
    ) {
        let img = Image::constant(w, h, 1, v).unwrap();
        let out = downsample_bilinear_aa(&img, ow.min(w), oh.min(h)).unwrap();
        prop_assert!(out.pixels().iter().all(|p| (p - v).abs() < 1e-9));
    }

    #[test]
    fn perturb_is_pure(img in image(6, 5, 3), scale in 0.0..40.0f64, seed in any::<u64>()) {
        let a = perturb_gaussian(&img, scale, seed).unwrap();
        let b = perturb_gaussian(&img, scale, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
