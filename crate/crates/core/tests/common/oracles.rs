//! Reference implementations written for clarity, not speed.

use vaselab_core::imaging::Image;

/// Felzenszwalb–Huttenlocher segmentation without union-find: components
/// are explicit label arrays relabeled on every merge. No pre-smoothing.
/// Returns dense labels numbered in raster order of first appearance.
pub fn egbis_brute_force(img: &Image, k: f64, min_size: usize) -> Vec<u32> {
    let (w, h) = (img.width, img.height);
    let c = img.channels.count();
    let n = w * h;
    let color = |p: usize| -> Vec<f64> { (0..c).map(|ch| img.data[p * c + ch] as f64).collect() };
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let neighbors = [
                (x + 1 < w).then(|| p + 1),
                (y + 1 < h && x > 0).then(|| p + w - 1),
                (y + 1 < h).then(|| p + w),
                (y + 1 < h && x + 1 < w).then(|| p + w + 1),
            ];
            for q in neighbors.into_iter().flatten() {
                let (cp, cq) = (color(p), color(q));
                let d = cp.iter().zip(&cq).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                edges.push((d, p.min(q), p.max(q)));
            }
        }
    }
    // stable sort on (weight, smaller endpoint)
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut label: Vec<usize> = (0..n).collect();
    let mut internal = vec![0.0f64; n];
    let size = |label: &[usize], l: usize| label.iter().filter(|&&x| x == l).count();
    let relabel = |label: &mut Vec<usize>, from: usize, to: usize| {
        for x in label.iter_mut() {
            if *x == from {
                *x = to;
            }
        }
    };
    for &(wt, a, b) in &edges {
        let (la, lb) = (label[a], label[b]);
        if la == lb {
            continue;
        }
        let ta = internal[la] + k / size(&label, la) as f64;
        let tb = internal[lb] + k / size(&label, lb) as f64;
        if wt <= ta.min(tb) {
            relabel(&mut label, lb, la);
            internal[la] = internal[la].max(internal[lb]).max(wt);
        }
    }
    for &(_, a, b) in &edges {
        let (la, lb) = (label[a], label[b]);
        if la != lb && (size(&label, la) < min_size || size(&label, lb) < min_size) {
            relabel(&mut label, lb, la);
        }
    }
    let mut dense = vec![u32::MAX; n];
    let mut out = Vec::with_capacity(n);
    let mut next = 0;
    for &l in &label {
        if dense[l] == u32::MAX {
            dense[l] = next;
            next += 1;
        }
        out.push(dense[l]);
    }
    out
}

/// HOG of a gray image whose side is a multiple of `cell`: centered
/// differences with clamped borders, unsigned orientation split linearly
/// between the two nearest of `bins` bin centers (at multiples of
/// 180°/bins), 2×2-cell blocks at a one-cell stride, L2-Hys.
pub fn hog_naive(img: &Image, cell: usize, bins: usize, clip: f64) -> Vec<f64> {
    let (w, h) = (img.width as i64, img.height as i64);
    let px = |x: i64, y: i64| -> f64 {
        let x = x.clamp(0, w - 1) as usize;
        let y = y.clamp(0, h - 1) as usize;
        img.gray(x, y) as f64
    };
    let cells_x = img.width / cell;
    let cells_y = img.height / cell;
    let mut hist = vec![vec![vec![0.0f64; bins]; cells_x]; cells_y];
    for (cy, row) in hist.iter_mut().enumerate() {
        for (cx, bins_of_cell) in row.iter_mut().enumerate() {
            for dy in 0..cell {
                for dx in 0..cell {
                    let (x, y) = ((cx * cell + dx) as i64, (cy * cell + dy) as i64);
                    let gx = px(x + 1, y) - px(x - 1, y);
                    let gy = px(x, y + 1) - px(x, y - 1);
                    let mag = gx.hypot(gy);
                    if mag == 0.0 {
                        continue;
                    }
                    let mut deg = gy.atan2(gx).to_degrees();
                    while deg < 0.0 {
                        deg += 180.0;
                    }
                    while deg >= 180.0 {
                        deg -= 180.0;
                    }
                    let width = 180.0 / bins as f64;
                    let lower = (deg / width).floor();
                    let t = deg / width - lower;
                    let b0 = lower as usize % bins;
                    bins_of_cell[b0] += mag * (1.0 - t);
                    bins_of_cell[(b0 + 1) % bins] += mag * t;
                }
            }
        }
    }
    let mut out = Vec::new();
    for by in 0..cells_y - 1 {
        for bx in 0..cells_x - 1 {
            let mut v: Vec<f64> = Vec::new();
            for (cy, cx) in [(by, bx), (by, bx + 1), (by + 1, bx), (by + 1, bx + 1)] {
                v.extend(&hist[cy][cx]);
            }
            let eps2 = 1e-6;
            let n1 = (v.iter().map(|a| a * a).sum::<f64>() + eps2).sqrt();
            let clipped: Vec<f64> = v.iter().map(|a| (a / n1).min(clip)).collect();
            let n2 = (clipped.iter().map(|a| a * a).sum::<f64>() + eps2).sqrt();
            out.extend(clipped.iter().map(|a| a / n2));
        }
    }
    out
}
