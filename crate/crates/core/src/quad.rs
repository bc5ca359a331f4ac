//! One-dimensional quadrature and fitting helpers shared by the
//! oracle and test-function modules.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its embedded 7-point Gauss error estimate on `[a, b]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod quadrature. Only interior nodes are
/// evaluated, so integrable endpoint singularities are tolerated.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    for _ in 0..20_000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, iv)| {
                if iv.3 > acc.1 {
                    (i, iv.3)
                } else {
                    acc
                }
            });
        let (lo, hi, v0, e0) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - v0;
        err += e1 + e2 - e0;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    // re-sum to shed the accumulated update round-off
    intervals.iter().map(|iv| iv.2).sum()
}

/// Composite midpoint rule with `cells` equal cells.
pub fn midpoint<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cells: usize) -> f64 {
    let h = (b - a) / cells as f64;
    (0..cells).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

/// Midpoint rule doubled from `min_cells` until consecutive values agree to `rel_tol`.
pub fn midpoint_refined<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    min_cells: usize,
    rel_tol: f64,
) -> f64 {
    let mut cells = min_cells.max(1);
    let mut prev = midpoint(&f, a, b, cells);
    for _ in 0..24 {
        cells *= 2;
        let next = midpoint(&f, a, b, cells);
        if (next - prev).abs() <= rel_tol * next.abs() || next == 0.0 {
            return next;
        }
        prev = next;
    }
    prev
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    LineFit { slope, intercept, r2 }
}
