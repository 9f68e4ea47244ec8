//! Small dense tensor helpers for dimension-n component arrays.

pub type Mat = Vec<Vec<f64>>;
pub type T3 = Vec<Vec<Vec<f64>>>;
pub type T4 = Vec<Vec<Vec<Vec<f64>>>>;

pub fn t1<T>(n: usize, mut f: impl FnMut(usize) -> T) -> Vec<T> {
    (0..n).map(&mut f).collect()
}

pub fn t2<T>(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Vec<Vec<T>> {
    (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
}

pub fn t3<T>(n: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Vec<Vec<Vec<T>>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| f(i, j, k)).collect())
                .collect()
        })
        .collect()
}

#[allow(clippy::type_complexity)]
pub fn t4<T>(
    n: usize,
    mut f: impl FnMut(usize, usize, usize, usize) -> T,
) -> Vec<Vec<Vec<Vec<T>>>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| (0..n).map(|l| f(i, j, k, l)).collect())
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn sum1(n: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    (0..n).map(&mut f).sum()
}

pub fn max_abs1(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs2(m: &Mat) -> f64 {
    m.iter().map(|r| max_abs1(r)).fold(0.0, f64::max)
}

pub fn max_abs3(t: &T3) -> f64 {
    t.iter().map(max_abs2).fold(0.0, f64::max)
}

pub fn max_abs4(t: &T4) -> f64 {
    t.iter().map(max_abs3).fold(0.0, f64::max)
}

pub fn mat_identity(n: usize) -> Mat {
    t2(n, |i, j| if i == j { 1.0 } else { 0.0 })
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    t2(n, |i, j| sum1(n, |k| a[i][k] * b[k][j]))
}

pub fn mat_vec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(m, x)| m * x).sum())
        .collect()
}

pub fn mat_sub(a: &Mat, b: &Mat) -> Mat {
    t2(a.len(), |i, j| a[i][j] - b[i][j])
}
