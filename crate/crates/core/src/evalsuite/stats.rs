//! Rank correlation and the 2-component PCA used for plot exports.

use super::EvalError;

/// Average-rank treatment of ties, 1-based.
fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson correlation of average ranks.
/// A constant input vector has no defined correlation.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(EvalError::TooFewPairs { used: xs.len().min(ys.len()) });
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone)]
pub struct Pca2 {
    /// Orthonormal principal directions.
    pub components: [Vec<f64>; 2],
    /// Variance captured along each component.
    pub eigenvalues: [f64; 2],
    /// Input rows projected onto the two components.
    pub projections: Vec<(f64, f64)>,
}

/// Top-2 PCA via power iteration with deflation on the centered covariance.
pub fn pca2(vectors: &[Vec<f64>]) -> Result<Pca2, EvalError> {
    let n = vectors.len();
    if n < 3 {
        return Err(EvalError::NotEnoughData(format!("pca needs at least 3 vectors, got {n}")));
    }
    let dim = vectors[0].len();
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, &x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(&x, &m)| x - m).collect())
        .collect();
    let mut cov = vec![vec![0.0; dim]; dim];
    for row in &centered {
        for i in 0..dim {
            for j in 0..dim {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }
    let scale: f64 = (0..dim).map(|i| cov[i][i]).sum();
    if scale <= 1e-12 {
        return Err(EvalError::NotEnoughData("rank-0 data: all rows identical".into()));
    }

    let (v1, l1) = power_iteration(&cov, None);
    // Deflate and repeat, re-orthogonalizing against the first direction.
    let mut deflated = cov.clone();
    for i in 0..dim {
        for j in 0..dim {
            deflated[i][j] -= l1 * v1[i] * v1[j];
        }
    }
    let (v2, l2) = power_iteration(&deflated, Some(&v1));

    let proj = |v: &[f64], c: &[f64]| v.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
    let projections = centered.iter().map(|r| (proj(r, &v1), proj(r, &v2))).collect();
    Ok(Pca2 { components: [v1, v2], eigenvalues: [l1, l2.max(0.0)], projections })
}

fn power_iteration(matrix: &[Vec<f64>], orthogonal_to: Option<&[f64]>) -> (Vec<f64>, f64) {
    let dim = matrix.len();
    // Deterministic start: spread weight over all coordinates unevenly so we
    // are almost never orthogonal to the dominant eigenvector.
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + (i as f64 + 1.0).sqrt()).collect();
    normalize(&mut v, orthogonal_to);
    for _ in 0..10_000 {
        let mut next = vec![0.0; dim];
        for i in 0..dim {
            for j in 0..dim {
                next[i] += matrix[i][j] * v[j];
            }
        }
        normalize(&mut next, orthogonal_to);
        let delta: f64 =
            next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let flipped: f64 =
            next.iter().zip(&v).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
        v = next;
        if delta.min(flipped) < 1e-14 {
            break;
        }
    }
    let mut mv = vec![0.0; dim];
    for i in 0..dim {
        for j in 0..dim {
            mv[i] += matrix[i][j] * v[j];
        }
    }
    let lambda: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
    // Deterministic sign: the entry with the largest magnitude is positive.
    let lead = (0..dim).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
    if v[lead] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    (v, lambda)
}

fn normalize(v: &mut [f64], orthogonal_to: Option<&[f64]>) {
    if let Some(u) = orthogonal_to {
        let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        for (x, &y) in v.iter_mut().zip(u) {
            *x -= d * y;
        }
    }
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    } else if let Some(first) = v.first_mut() {
        // Degenerate direction (rank-1 data); any unit vector orthogonal to
        // the first component will do, built by Gram-Schmidt below.
        *first = 1.0;
        if let Some(u) = orthogonal_to {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (x, &y) in v.iter_mut().zip(u) {
                *x -= d * y;
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in v.iter_mut() {
                    *x /= norm;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spearman_perfect_agreement_and_reversal() {
        let xs = [1.0, 2.0, 5.0, 9.0];
        let up = [0.1, 0.5, 0.6, 2.0];
        let down = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&xs, &up).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &down).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_with_ties_matches_hand_ranked_oracle() {
        // xs = [1,2,2,4] -> ranks [1, 2.5, 2.5, 4]; ys = [1,3,2,4] -> [1,3,2,4].
        // Pearson of those ranks, by hand: 4.5 / sqrt(4.5 * 5) = 0.9486832...
        let rho = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        let hand = 4.5 / (4.5f64 * 5.0).sqrt();
        assert!((rho - hand).abs() < 1e-12, "{rho} vs {hand}");
    }

    #[test]
    fn spearman_rejects_constant_input() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(EvalError::ConstantInput)
        ));
        assert!(matches!(spearman(&[1.0], &[1.0]), Err(EvalError::TooFewPairs { .. })));
    }

    #[test]
    fn spearman_invariant_under_monotone_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for _ in 0..100 {
            let xs: Vec<f64> = (0..20).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let ys: Vec<f64> = (0..20).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let rho = spearman(&xs, &ys).unwrap();
            let xs2: Vec<f64> = xs.iter().map(|&x| (2.0 * x).exp()).collect();
            let ys2: Vec<f64> = ys.iter().map(|&y| y.powi(3) + 7.0).collect();
            let rho2 = spearman(&xs2, &ys2).unwrap();
            assert!((rho - rho2).abs() < 1e-9);
            assert!((spearman(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pca_on_a_line_has_negligible_second_variance() {
        let vectors: Vec<Vec<f64>> =
            (0..10).map(|i| vec![i as f64 * 2.0, i as f64 * -1.0, i as f64 * 0.5]).collect();
        let p = pca2(&vectors).unwrap();
        assert!(p.eigenvalues[0] > 1.0);
        assert!(p.eigenvalues[1].abs() < 1e-9, "second variance {}", p.eigenvalues[1]);
    }

    #[test]
    fn pca_isotropic_sample_splits_variance_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let vectors: Vec<Vec<f64>> = (0..5000)
            .map(|_| {
                (0..2)
                    .map(|_| {
                        let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                        let u2: f64 = rng.gen();
                        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                    })
                    .collect()
            })
            .collect();
        let p = pca2(&vectors).unwrap();
        let share = p.eigenvalues[0] / (p.eigenvalues[0] + p.eigenvalues[1]);
        assert!((share - 0.5).abs() < 0.05, "variance share {share}");
    }

    #[test]
    fn pca_components_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let vectors: Vec<Vec<f64>> =
            (0..20).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let p = pca2(&vectors).unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&p.components[0], &p.components[0]) - 1.0).abs() < 1e-8);
        assert!((dot(&p.components[1], &p.components[1]) - 1.0).abs() < 1e-8);
        assert!(dot(&p.components[0], &p.components[1]).abs() < 1e-8);
    }

    #[test]
    fn pca_eigenvalues_match_jacobi_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let vectors: Vec<Vec<f64>> =
            (0..20).map(|_| (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let p = pca2(&vectors).unwrap();

        // Independent dense eigensolver: cyclic Jacobi on the covariance.
        let n = vectors.len();
        let dim = 5;
        let mut mean = vec![0.0; dim];
        for v in &vectors {
            for (m, &x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut a = vec![vec![0.0; dim]; dim];
        for v in &vectors {
            for i in 0..dim {
                for j in 0..dim {
                    a[i][j] += (v[i] - mean[i]) * (v[j] - mean[j]);
                }
            }
        }
        for row in &mut a {
            for v in row.iter_mut() {
                *v /= (n - 1) as f64;
            }
        }
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..dim {
                for q in (p + 1)..dim {
                    off += a[p][q] * a[p][q];
                    if a[p][q].abs() < 1e-15 {
                        continue;
                    }
                    let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..dim {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..dim {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
            if off < 1e-30 {
                break;
            }
        }
        let mut eigs: Vec<f64> = (0..dim).map(|i| a[i][i]).collect();
        eigs.sort_by(|x, y| y.total_cmp(x));
        assert!((p.eigenvalues[0] - eigs[0]).abs() < 1e-6, "{} vs {}", p.eigenvalues[0], eigs[0]);
        assert!((p.eigenvalues[1] - eigs[1]).abs() < 1e-6, "{} vs {}", p.eigenvalues[1], eigs[1]);
    }

    #[test]
    fn pca_rejects_degenerate_inputs() {
        assert!(pca2(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        let same = vec![vec![3.0, 3.0]; 5];
        assert!(matches!(pca2(&same), Err(EvalError::NotEnoughData(_))));
    }
}
