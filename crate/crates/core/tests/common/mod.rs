//! Reference implementations shared by the integration tests.

pub fn mirror(idx: isize, n: usize) -> usize {
    // Walks the reflection one bounce at a time.
    let mut k = idx;
    let last = n as isize - 1;
    if last == 0 {
        return 0;
    }
    loop {
        if k < 0 {
            k = -k;
        } else if k > last {
            k = 2 * last - k;
        } else {
            return k as usize;
        }
    }
}

pub fn naive_nlm(y: &[f64], p: usize, s: Option<usize>, h: f64, sigma: f64) -> Vec<f64> {
    let n = y.len();
    let pi = p as isize;
    let mut a: Vec<f64> = (-pi..=pi)
        .map(|k| if sigma == 0.0 { 1.0 } else { (-((k * k) as f64) / (2.0 * sigma * sigma)).exp() })
        .collect();
    let total: f64 = a.iter().sum();
    a.iter_mut().for_each(|v| *v /= total);
    let at = |i: isize| y[mirror(i, n)];
    let mut out = vec![0.0; n];
    for i in 0..n {
        let (lo, hi) = match s {
            Some(s) => (i.saturating_sub(s), (i + s).min(n - 1)),
            None => (0, n - 1),
        };
        let mut num = 0.0;
        let mut z = 0.0;
        for j in lo..=hi {
            let mut d = 0.0;
            for k in -pi..=pi {
                let diff = at(i as isize + k) - at(j as isize + k);
                d += a[(k + pi) as usize] * diff * diff;
            }
            let w = (-d / (h * h)).exp();
            num += w * y[j];
            z += w;
        }
        out[i] = num / z;
    }
    out
}
