//! Slice kernels shared by the networks.

/// `y = W x + b` with `W` row-major `out × inp`.
pub fn dense_forward(w: &[f64], b: &[f64], x: &[f64], y: &mut [f64]) {
    let inp = x.len();
    debug_assert_eq!(w.len(), y.len() * inp);
    for (o, yo) in y.iter_mut().enumerate() {
        let row = &w[o * inp..(o + 1) * inp];
        let mut acc = b[o];
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        *yo = acc;
    }
}

/// Accumulates `dW += dy xᵀ`, `db += dy` and, when given, `dx += Wᵀ dy`.
pub fn dense_backward(
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let inp = x.len();
    for (o, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        db[o] += g;
        let row = &mut dw[o * inp..(o + 1) * inp];
        for (d, xi) in row.iter_mut().zip(x) {
            *d += g * xi;
        }
    }
    if let Some(dx) = dx {
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &w[o * inp..(o + 1) * inp];
            for (d, wi) in dx.iter_mut().zip(row) {
                *d += g * wi;
            }
        }
    }
}

pub fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Zeroes gradient entries whose activation was clipped.
pub fn relu_backward(activated: &[f64], grad: &mut [f64]) {
    for (g, &a) in grad.iter_mut().zip(activated) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&q| q > 0.0).map(|&q| q * q.ln()).sum::<f64>()
}
