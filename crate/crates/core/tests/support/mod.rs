//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library code it checks.

#![allow(dead_code)]

/// OKS evaluated term by term: `Σ exp(−dᵢ² / (2 s² kᵢ²)) δ(vᵢ > 0) / Σ δ(vᵢ > 0)`.
/// `det` and `gt` are `(u, v, visibility)` triples.
pub fn oks_terms(det: &[(f64, f64, f64)], gt: &[(f64, f64, f64)], kappas: &[f64], s: f64) -> Option<f64> {
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for i in 0..gt.len() {
        let delta = if gt[i].2 > 0.0 { 1.0 } else { 0.0 };
        let d2 = (det[i].0 - gt[i].0).powi(2) + (det[i].1 - gt[i].1).powi(2);
        numerator += delta * (-d2 / (2.0 * s.powi(2) * kappas[i].powi(2))).exp();
        denominator += delta;
    }
    (denominator > 0.0).then(|| numerator / denominator)
}

/// Assignment chosen by exhaustive enumeration: over every injective partial
/// assignment detection → gt with `oks ≥ threshold`, take the one whose
/// per-detection keys, listed in descending score order (ties by index), are
/// lexicographically largest. A key ranks an assigned gt by `(oks, lower gt
/// index)` and puts "unassigned" below everything.
pub fn lexmax_assignment(oks: &[Vec<f64>], scores: &[f64], threshold: f64) -> Vec<Option<usize>> {
    let n_det = oks.len();
    let n_gt = oks.first().map_or(0, Vec::len);
    let mut order: Vec<usize> = (0..n_det).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));

    type Key = Option<(f64, std::cmp::Reverse<usize>)>;
    let key_of = |d: usize, g: Option<usize>| -> Key { g.map(|g| (oks[d][g], std::cmp::Reverse(g))) };

    let mut best: Option<(Vec<Key>, Vec<Option<usize>>)> = None;
    let mut current = vec![None; n_det];
    fn recurse(
        d: usize,
        used: &mut Vec<bool>,
        current: &mut Vec<Option<usize>>,
        visit: &mut dyn FnMut(&[Option<usize>]),
        oks: &[Vec<f64>],
        threshold: f64,
    ) {
        if d == current.len() {
            visit(current);
            return;
        }
        current[d] = None;
        recurse(d + 1, used, current, visit, oks, threshold);
        for g in 0..used.len() {
            if !used[g] && oks[d][g] >= threshold {
                used[g] = true;
                current[d] = Some(g);
                recurse(d + 1, used, current, visit, oks, threshold);
                used[g] = false;
            }
        }
        current[d] = None;
    }
    let mut visit = |assign: &[Option<usize>]| {
        let keys: Vec<Key> = order.iter().map(|&d| key_of(d, assign[d])).collect();
        let better = match &best {
            None => true,
            Some((bk, _)) => keys.partial_cmp(bk) == Some(std::cmp::Ordering::Greater),
        };
        if better {
            best = Some((keys, assign.to_vec()));
        }
    };
    recurse(0, &mut vec![false; n_gt], &mut current, &mut visit, oks, threshold);
    best.map(|(_, a)| a).unwrap_or_default()
}

/// Median via a full sort; mean of the middle pair for even lengths.
pub fn sorted_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// One-to-one time pairing by enumeration: among all maximal matchings with
/// `|Δt| ≤ tol`, the one whose `(|Δt|, i, j)` keys, sorted ascending, are
/// lexicographically smallest.
pub fn brute_force_time_pairing(a: &[f64], b: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let edges: Vec<(f64, usize, usize)> = (0..a.len())
        .flat_map(|i| (0..b.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| (a[i] - b[j]).abs() <= tol)
        .map(|(i, j)| ((a[i] - b[j]).abs(), i, j))
        .collect();
    let mut best: Option<Vec<(f64, usize, usize)>> = None;
    for mask in 0u64..(1u64 << edges.len()) {
        let chosen: Vec<_> = (0..edges.len()).filter(|k| mask >> k & 1 == 1).map(|k| edges[k]).collect();
        let mut ua = vec![false; a.len()];
        let mut ub = vec![false; b.len()];
        let mut ok = true;
        for &(_, i, j) in &chosen {
            if ua[i] || ub[j] {
                ok = false;
                break;
            }
            ua[i] = true;
            ub[j] = true;
        }
        if !ok || edges.iter().any(|&(_, i, j)| !ua[i] && !ub[j]) {
            continue;
        }
        let mut keys = chosen;
        keys.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let better = match &best {
            None => true,
            Some(b) => keys.partial_cmp(b) == Some(std::cmp::Ordering::Less),
        };
        if better {
            best = Some(keys);
        }
    }
    let mut pairs: Vec<(usize, usize)> = best.unwrap_or_default().into_iter().map(|(_, i, j)| (i, j)).collect();
    pairs.sort_unstable();
    pairs
}

/// Pinhole projection written out per coordinate.
pub fn project(p: [f64; 3], fx: f64, fy: f64, cx: f64, cy: f64) -> (f64, f64) {
    (fx * p[0] / p[2] + cx, fy * p[1] / p[2] + cy)
}

/// First intersection depth of the pixel ray through `(u, v)` with a sphere,
/// from the quadratic in `z` (ray `z · ((u − cx)/fx, (v − cy)/fy, 1)`).
pub fn ray_sphere_depth(u: f64, v: f64, fx: f64, fy: f64, cx: f64, cy: f64, c: [f64; 3], r: f64) -> Option<f64> {
    let (a, b) = ((u - cx) / fx, (v - cy) / fy);
    let qa = a * a + b * b + 1.0;
    let qb = -2.0 * (a * c[0] + b * c[1] + c[2]);
    let qc = c[0] * c[0] + c[1] * c[1] + c[2] * c[2] - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    (disc >= 0.0).then(|| (-qb - disc.sqrt()) / (2.0 * qa))
}

/// Sample standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Midpoint of two marker positions.
pub fn midpoint(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0]
}

/// Counts per confidence threshold: `(#qualifying, median distance)` from
/// raw `(confidence, distance)` observations.
pub fn count_and_median(obs: &[(f64, f64)], threshold: f64) -> (usize, Option<f64>) {
    let d: Vec<f64> = obs.iter().filter(|(c, _)| *c >= threshold).map(|(_, d)| *d).collect();
    (d.len(), (!d.is_empty()).then(|| sorted_median(&d)))
}

/// Rotation matrix (row-major) from a unit quaternion `[w, x, y, z]`.
pub fn quat_to_matrix(q: [f64; 4]) -> [[f64; 3]; 3] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Angle of the relative rotation between `a` and `b`, from
/// `‖A − B‖_F = 2√2 · sin(θ / 2)`.
pub fn rotation_angle_between(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    let mut sq = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            sq += (a[i][k] - b[i][k]).powi(2);
        }
    }
    2.0 * (sq.sqrt() / (2.0 * 2f64.sqrt())).min(1.0).asin()
}

/// Standard normal by the Marsaglia polar method, from uniforms in [0, 1).
pub fn polar_normal(mut uniform: impl FnMut() -> f64) -> f64 {
    loop {
        let x = 2.0 * uniform() - 1.0;
        let y = 2.0 * uniform() - 1.0;
        let s = x * x + y * y;
        if s > 0.0 && s < 1.0 {
            return x * (-2.0 * s.ln() / s).sqrt();
        }
    }
}
