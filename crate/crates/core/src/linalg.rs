//! Dense vector helpers shared by the embedding and clustering code.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales `v` to unit length in place and returns its previous norm. A zero
/// vector is left untouched.
pub fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Cosine similarity; zero when either side is the zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        0.0
    } else {
        dot(a, b) / d
    }
}

/// Removes the component of `g` along the unit vector `x`.
pub fn project_tangent(g: &mut [f64], x: &[f64]) {
    let p = dot(g, x);
    g.iter_mut().zip(x).for_each(|(gi, xi)| *gi -= p * xi);
}

/// Riemannian gradient step on the sphere followed by renormalization.
pub fn sphere_step(x: &mut [f64], grad: &[f64], lr: f64) {
    let p = dot(grad, x);
    x.iter_mut()
        .zip(grad)
        .for_each(|(xi, gi)| *xi -= lr * (gi - p * *xi));
    normalize(x);
}

/// Index of the largest element, earliest index on ties. `None` if empty.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}
