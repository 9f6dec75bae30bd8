mod support;

use hicp_core::oks::{coco_thresholds, oks, OksParams, ScaleRule};
use hicp_core::{BBox, Keypoint, PersonAnnotation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_case(rng: &mut ChaCha8Rng) -> (Vec<Keypoint>, PersonAnnotation, Vec<f64>) {
    let n = rng.gen_range(1..=24);
    let mut gt: Vec<Keypoint> = (0..n)
        .map(|_| Keypoint::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0), f64::from(rng.gen_range(0..3u8))))
        .collect();
    if !gt.iter().any(Keypoint::is_labeled) {
        gt[0].c = 2.0;
    }
    let spread = rng.gen_range(0.0..40.0);
    let det = gt
        .iter()
        .map(|k| Keypoint::new(k.u + rng.gen_range(-spread..=spread), k.v + rng.gen_range(-spread..=spread), rng.gen()))
        .collect();
    let kappas = (0..n).map(|_| rng.gen_range(0.01..0.2)).collect();
    let mut ann = PersonAnnotation::new(1, 1, BBox::new(0.0, 0.0, rng.gen_range(5.0..600.0), rng.gen_range(5.0..400.0)), gt);
    ann.area = Some(rng.gen_range(50.0..150_000.0));
    (det, ann, kappas)
}

fn triples(k: &[Keypoint]) -> Vec<(f64, f64, f64)> {
    k.iter().map(|k| (k.u, k.v, k.c)).collect()
}

#[test]
fn thousand_random_cases_match_term_by_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c5);
    for case in 0..1000 {
        let (det, gt, kappas) = random_case(&mut rng);
        let rule = if case % 2 == 0 { ScaleRule::AnnotatedArea } else { ScaleRule::BboxArea };
        let s = match rule {
            ScaleRule::AnnotatedArea => gt.area.unwrap().sqrt(),
            ScaleRule::BboxArea => (gt.bbox.w * gt.bbox.h).sqrt(),
        };
        let params = OksParams::new(kappas.clone(), rule, coco_thresholds()).unwrap();
        let idx: Vec<usize> = (0..det.len()).collect();
        let lib = oks(&det, &gt, &params, &idx).unwrap();
        let expected = support::oks_terms(&triples(&det), &triples(&gt.keypoints), &kappas, s).unwrap();
        assert!((lib - expected).abs() <= 1e-12, "case {case}: {lib} vs {expected}");
    }
}

#[test]
fn distance_at_one_falloff_gives_inverse_e() {
    for (area, k) in [(100.0, 0.1), (2500.0, 0.05), (12345.0, 0.179)] {
        let s: f64 = f64::sqrt(area);
        let d = (2.0 * s * s * k * k).sqrt();
        let mut gt = PersonAnnotation::new(1, 1, BBox::new(0.0, 0.0, 10.0, 10.0), vec![Keypoint::new(30.0, 40.0, 2.0)]);
        gt.area = Some(area);
        let det = [Keypoint::new(30.0 + d, 40.0, 1.0)];
        let params = OksParams::new(vec![k], ScaleRule::AnnotatedArea, coco_thresholds()).unwrap();
        let v = oks(&det, &gt, &params, &[0]).unwrap();
        assert!((v - (-1f64).exp()).abs() <= 1e-12, "{v}");
    }
}
