//! Per-sample layer kernels on channel-major `[c][y][x]` buffers.

use crate::tensor::Real;

/// Patch matrix `[c*9][h*w]` of a 3x3, stride 1, zero-padded convolution.
pub fn im2col<T: Real>(input: &[T], c: usize, h: usize, w: usize) -> Vec<T> {
    let n = h * w;
    let mut cols = vec![T::zero(); c * 9 * n];
    for ci in 0..c {
        let plane = &input[ci * n..(ci + 1) * n];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[(ci * 9 + ky * 3 + kx) * n..][..n];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &plane[sy as usize * w..][..w];
                    let dst = &mut row[y * w..][..w];
                    for (x, d) in dst.iter_mut().enumerate() {
                        let sx = x as isize + kx as isize - 1;
                        if sx >= 0 && sx < w as isize {
                            *d = src[sx as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Scatter-add of a patch-matrix gradient back onto the input plane.
pub fn col2im<T: Real>(cols: &[T], c: usize, h: usize, w: usize) -> Vec<T> {
    let n = h * w;
    let mut out = vec![T::zero(); c * n];
    for ci in 0..c {
        let plane = &mut out[ci * n..(ci + 1) * n];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[(ci * 9 + ky * 3 + kx) * n..][..n];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for x in 0..w {
                        let sx = x as isize + kx as isize - 1;
                        if sx >= 0 && sx < w as isize {
                            plane[sy as usize * w + sx as usize] = plane[sy as usize * w + sx as usize] + row[y * w + x];
                        }
                    }
                }
            }
        }
    }
    out
}

/// `out[o][n] = b[o] + sum_k w[o][k] cols[k][n]`.
pub fn conv_forward<T: Real>(cols: &[T], weights: &[T], bias: &[T], n: usize) -> Vec<T> {
    let k = cols.len() / n;
    let mut out = Vec::with_capacity(bias.len() * n);
    for (o, &b) in bias.iter().enumerate() {
        let mut row = vec![b; n];
        for (kk, &wv) in weights[o * k..(o + 1) * k].iter().enumerate() {
            if wv == T::zero() {
                continue;
            }
            for (r, &cv) in row.iter_mut().zip(&cols[kk * n..(kk + 1) * n]) {
                *r = *r + wv * cv;
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

/// Gradients of [`conv_forward`]: accumulates into `dw`, `db`; returns the
/// patch-matrix gradient when `want_input`.
pub fn conv_backward<T: Real>(
    cols: &[T],
    weights: &[T],
    dout: &[T],
    n: usize,
    dw: &mut [T],
    db: &mut [T],
    want_input: bool,
) -> Option<Vec<T>> {
    let k = cols.len() / n;
    for (o, d) in dout.chunks_exact(n).enumerate() {
        db[o] = db[o] + d.iter().copied().sum::<T>();
        for kk in 0..k {
            let c = &cols[kk * n..(kk + 1) * n];
            let s: T = d.iter().zip(c).map(|(&a, &b)| a * b).sum();
            dw[o * k + kk] = dw[o * k + kk] + s;
        }
    }
    if !want_input {
        return None;
    }
    let mut dcols = vec![T::zero(); k * n];
    for (o, d) in dout.chunks_exact(n).enumerate() {
        for kk in 0..k {
            let wv = weights[o * k + kk];
            if wv == T::zero() {
                continue;
            }
            for (dc, &dv) in dcols[kk * n..(kk + 1) * n].iter_mut().zip(d) {
                *dc = *dc + wv * dv;
            }
        }
    }
    Some(dcols)
}

pub fn relu<T: Real>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
}

/// Multiply `grad` by the ReLU derivative at the pre-activation `pre`.
pub fn relu_backward<T: Real>(pre: &[T], grad: &mut [T]) {
    for (g, &p) in grad.iter_mut().zip(pre) {
        if p <= T::zero() {
            *g = T::zero();
        }
    }
}

/// 2x2 max pooling, stride 2; returns the pooled planes and, per output,
/// the flat input index of the winner (first maximum on ties).
pub fn maxpool2<T: Real>(x: &[T], c: usize, h: usize, w: usize) -> (Vec<T>, Vec<usize>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut idx = Vec::with_capacity(c * oh * ow);
    for ci in 0..c {
        let base = ci * h * w;
        for y in 0..oh {
            for xo in 0..ow {
                let mut best = base + 2 * y * w + 2 * xo;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let j = base + (2 * y + dy) * w + 2 * xo + dx;
                    if x[j] > x[best] {
                        best = j;
                    }
                }
                out.push(x[best]);
                idx.push(best);
            }
        }
    }
    (out, idx)
}

/// Route pooled gradients back to the winning inputs.
pub fn unpool<T: Real>(grad: &[T], idx: &[usize], input_len: usize) -> Vec<T> {
    let mut out = vec![T::zero(); input_len];
    for (&g, &i) in grad.iter().zip(idx) {
        out[i] = out[i] + g;
    }
    out
}

/// Global max over each of `c` planes of length `n`.
pub fn global_max<T: Real>(x: &[T], c: usize, n: usize) -> (Vec<T>, Vec<usize>) {
    (0..c)
        .map(|ci| {
            let plane = &x[ci * n..(ci + 1) * n];
            let j = plane
                .iter()
                .enumerate()
                .fold(0, |best, (j, &v)| if v > plane[best] { j } else { best });
            (plane[j], ci * n + j)
        })
        .unzip()
}

/// Softmax with the row maximum subtracted first.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = logits.iter().map(|&v| (v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_copies_input() {
        let x: Vec<f64> = (0..12).map(|v| v as f64).collect();
        let cols = im2col(&x, 1, 3, 4);
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        assert_eq!(conv_forward(&cols, &w, &[0.5], 12), x.iter().map(|v| v + 0.5).collect::<Vec<_>>());
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        let (c, h, w) = (2, 4, 5);
        let x: Vec<f64> = (0..c * h * w).map(|v| (v as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..c * 9 * h * w).map(|v| (v as f64 * 0.11).cos()).collect();
        let lhs: f64 = im2col(&x, c, h, w).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(col2im(&y, c, h, w)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn pooling_picks_maxima() {
        let x = [1.0, 5.0, 2.0, 0.0, 3.0, 4.0, 7.0, 1.0f64];
        let (p, idx) = maxpool2(&x, 1, 2, 4);
        assert_eq!(p, vec![5.0, 7.0]);
        assert_eq!(idx, vec![1, 6]);
        assert_eq!(unpool(&[1.0, 2.0], &idx, 8), vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        let (g, gi) = global_max(&x, 2, 4);
        assert_eq!((g, gi), (vec![5.0, 7.0], vec![1, 6]));
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&[1.0, 2.0, -3.0f64]);
        let b = softmax(&[1001.0, 1002.0, 997.0f64]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
