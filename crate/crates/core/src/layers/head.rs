use crate::{ComplexTensor, Error, RealTensor, Result, Tape, Var};

fn rows(shape: &[usize]) -> Result<(usize, usize)> {
    if shape.len() != 2 || shape[1] < 2 {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "classifier head expects (N, K) with K >= 2".into(),
        });
    }
    Ok((shape[0], shape[1]))
}

fn log_softmax_rows(x: &[f64], k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(k) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        out.extend(row.iter().map(|v| v - lse));
    }
    out
}

/// Row-wise `log_softmax(|x|)`.
pub fn abs_log_softmax(x: &ComplexTensor) -> Result<RealTensor> {
    let (_, k) = rows(x.shape())?;
    RealTensor::new(x.shape(), log_softmax_rows(x.magnitude().data(), k))
}

/// Negative mean log-probability of the labelled class.
pub fn nll(logp: &RealTensor, labels: &[usize]) -> Result<f64> {
    let (n, k) = rows(logp.shape())?;
    check_labels(labels, n, k)?;
    Ok(-labels
        .iter()
        .enumerate()
        .map(|(i, &l)| logp.data()[i * k + l])
        .sum::<f64>()
        / n as f64)
}

fn check_labels(labels: &[usize], n: usize, k: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::InvalidArgument(format!("{} labels for batch of {n}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range [0, {k})")));
    }
    Ok(())
}

fn record_log_softmax(tape: &mut Tape, x: Var, kind: &'static str, use_abs: bool) -> Result<Var> {
    let xv = tape.shared(x)?;
    let (_, k) = rows(xv.shape())?;
    let mag = if use_abs {
        xv.magnitude().into_data()
    } else {
        xv.re().to_vec()
    };
    let out = log_softmax_rows(&mag, k);
    let value = ComplexTensor::from_planes(xv.shape(), out.clone(), vec![0.0; out.len()])?;
    tape.record(kind, &[x], value, move |g, _| {
        // d/da_j of (a_j − lse(a)) contracted with g: g_j − softmax_j·Σg
        let mut da = vec![0.0; out.len()];
        for ((d, o), gr) in da.chunks_mut(k).zip(out.chunks(k)).zip(g.re().chunks(k)) {
            let total: f64 = gr.iter().sum();
            for j in 0..k {
                d[j] = gr[j] - o[j].exp() * total;
            }
        }
        let mut gx = ComplexTensor::zeros(xv.shape()).unwrap();
        for (i, d) in da.into_iter().enumerate() {
            if use_abs {
                let (re, im) = (xv.re()[i], xv.im()[i]);
                let r = re.hypot(im);
                if r > 0.0 {
                    gx.re_mut()[i] = d * re / r;
                    gx.im_mut()[i] = d * im / r;
                }
            } else {
                gx.re_mut()[i] = d;
            }
        }
        vec![Some(gx)]
    })
}

/// Recorded `log_softmax(|x|)`; the result has a zero imaginary plane.
pub fn abs_logsoftmax_head(tape: &mut Tape, x: Var) -> Result<Var> {
    record_log_softmax(tape, x, "abs_logsoftmax_head", true)
}

/// Recorded `log_softmax(Re x)` for real-valued baselines.
pub fn log_softmax(tape: &mut Tape, x: Var) -> Result<Var> {
    record_log_softmax(tape, x, "log_softmax", false)
}

/// Recorded [`nll`] over the real plane of `logp`.
pub fn nll_loss(tape: &mut Tape, logp: Var, labels: &[usize]) -> Result<Var> {
    let lv = tape.value(logp)?;
    let shape = lv.shape().to_vec();
    let (n, k) = rows(&shape)?;
    check_labels(labels, n, k)?;
    let loss = -labels
        .iter()
        .enumerate()
        .map(|(i, &l)| lv.re()[i * k + l])
        .sum::<f64>()
        / n as f64;
    let labels = labels.to_vec();
    tape.record("nll_loss", &[logp], ComplexTensor::scalar(loss.into()), move |g, _| {
        let mut gx = ComplexTensor::zeros(&shape).unwrap();
        for (i, &l) in labels.iter().enumerate() {
            gx.re_mut()[i * k + l] = -g.re()[0] / n as f64;
        }
        vec![Some(gx)]
    })
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;

    fn row(values: &[(f64, f64)]) -> ComplexTensor {
        let v: Vec<Complex64> = values.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        ComplexTensor::from_complex(&[1, v.len()], &v).unwrap()
    }

    #[test]
    fn abs_log_softmax_examples() {
        let out = abs_log_softmax(&row(&[(3.0, 4.0), (0.0, 0.0)])).unwrap();
        // log-softmax of (5, 0): −ln(1 + e^{−5}) and −5 − ln(1 + e^{−5})
        let lse = (1.0 + (-5.0f64).exp()).ln();
        assert!((out.data()[0] + lse).abs() < 1e-12);
        assert!((out.data()[1] + 5.0 + lse).abs() < 1e-12);
        assert!((out.data()[0] - (-0.006715)).abs() < 1e-6);
        assert!((out.data()[1] - (-5.006715)).abs() < 1e-6);

        let half = 0.5f64.ln();
        for x in [row(&[(0.6, 0.8), (-1.0, 0.0)]), row(&[(0.0, 0.0), (0.0, 0.0)])] {
            let out = abs_log_softmax(&x).unwrap();
            assert!(out.data().iter().all(|v| (v - half).abs() < 1e-15));
        }
    }

    #[test]
    fn rows_exponentiate_to_one() {
        let x = row(&[(1.0, -2.0), (0.3, 0.3), (-7.0, 1.0), (0.0, 0.1)]);
        let out = abs_log_softmax(&x).unwrap();
        let s: f64 = out.data().iter().map(|v| v.exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nll_examples() {
        let perfect = RealTensor::new(&[2, 3], vec![0.0, -50.0, -50.0, -50.0, -50.0, 0.0]).unwrap();
        assert_eq!(nll(&perfect, &[0, 2]).unwrap(), 0.0);

        let uniform = RealTensor::new(&[1, 10], vec![(0.1f64).ln(); 10]).unwrap();
        assert!((nll(&uniform, &[4]).unwrap() - 10f64.ln()).abs() < 1e-12);
        assert!((nll(&uniform, &[4]).unwrap() - 10f64.ln()).abs() < 1e-12);

        assert!(nll(&uniform, &[10]).is_err());
    }

    #[test]
    fn single_class_rejected() {
        assert!(abs_log_softmax(&row(&[(1.0, 0.0)])).is_err());
    }
}
