use visdiag_core::render::{decode_png, encode_png, high_frequency_energy, render_scene, RasterImage};
use visdiag_core::scene::resolve_presets;
use visdiag_testkit::fixtures::blur_scene;

/// Independent high-pass measure: squared 4-neighbour Laplacian of luma.
fn laplacian_energy(img: &RasterImage) -> f64 {
    let (w, h) = (img.width as i64, img.height as i64);
    let luma = |x: i64, y: i64| {
        let p = img.pixel(x as u32, y as u32);
        0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])
    };
    let mut e = 0.0;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let l = luma(x - 1, y) + luma(x + 1, y) + luma(x, y - 1) + luma(x, y + 1) - 4.0 * luma(x, y);
            e += l * l;
        }
    }
    e
}

fn render(blur: &str) -> RasterImage {
    render_scene(&resolve_presets(&blur_scene(blur), 21).unwrap()).unwrap()
}

#[test]
fn blur_ladder_lowers_high_frequency_energy() {
    let ladder = ["none", "very_low", "low", "medium", "high", "very_high"];
    let energies: Vec<f64> = ladder
        .iter()
        .map(|b| {
            let img = render(b);
            let e = laplacian_energy(&img);
            assert!((e - high_frequency_energy(&img)).abs() <= 1e-6 * e.max(1.0));
            e
        })
        .collect();
    for (i, pair) in energies.windows(2).enumerate() {
        assert!(pair[1] < pair[0], "{} -> {}: {:?}", ladder[i], ladder[i + 1], energies);
    }
}

#[test]
fn rendering_is_deterministic_and_png_round_trips() {
    let a = render("low");
    assert_eq!((a.width, a.height), (640, 480));
    let bytes = encode_png(&a).unwrap();
    assert_eq!(bytes, encode_png(&render("low")).unwrap());
    assert_eq!(decode_png(&bytes).unwrap(), a);
    assert!(decode_png(b"not a png").is_err());
}
