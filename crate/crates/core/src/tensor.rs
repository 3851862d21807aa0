//! Row-major dense tensor helpers shared by the Hermite and calculus code.

use num_complex::Complex64;

/// Number of elements of a row-major tensor with the given shape.
pub fn volume(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Contracts axis `axis` of a row-major tensor with a dense `rows x shape[axis]`
/// matrix, returning the new tensor and its shape.
pub fn contract_axis(
    data: &[Complex64],
    shape: &[usize],
    axis: usize,
    matrix: &[f64],
    rows: usize,
) -> (Vec<Complex64>, Vec<usize>) {
    let cols = shape[axis];
    debug_assert_eq!(matrix.len(), rows * cols);
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * rows * inner];
    for o in 0..outer {
        let src = &data[o * cols * inner..(o + 1) * cols * inner];
        let dst = &mut out[o * rows * inner..(o + 1) * rows * inner];
        for r in 0..rows {
            let mrow = &matrix[r * cols..(r + 1) * cols];
            let d = &mut dst[r * inner..(r + 1) * inner];
            for (c, &m) in mrow.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let s = &src[c * inner..(c + 1) * inner];
                for (di, si) in d.iter_mut().zip(s) {
                    *di += si * m;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = rows;
    (out, new_shape)
}

/// Decomposes a flat row-major index into per-axis indices.
pub fn unravel(mut index: usize, shape: &[usize], out: &mut [usize]) {
    for axis in (0..shape.len()).rev() {
        out[axis] = index % shape[axis];
        index /= shape[axis];
    }
}

/// Linear convolution of two nonnegative sequences truncated to `len` terms.
pub fn convolve_truncated(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Entry `k` of the convolution of all `sequences`, i.e. the sum over
/// compositions `m_1 + ... + m_d = k` of the products `s_1[m_1] ... s_d[m_d]`.
pub fn composition_sums(sequences: &[Vec<f64>], len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    acc[0] = 1.0;
    for s in sequences {
        acc = convolve_truncated(&acc, s, len);
    }
    acc
}
