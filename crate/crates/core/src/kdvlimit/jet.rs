//! Truncated Taylor series `f(x₀ + h) = Σ_k c_k h^k`, `k ≤ order`.

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn new(c: Vec<f64>) -> Self {
        assert!(!c.is_empty());
        Jet { c }
    }

    pub fn zero(order: usize) -> Self {
        Jet { c: vec![0.0; order + 1] }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// `f^{(m)}(x₀)`.
    pub fn deriv_at(&self, m: usize) -> f64 {
        self.c[m] * (1..=m).map(|i| i as f64).product::<f64>()
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// The jet of `f'`, one order shorter.
    pub fn derivative(&self) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate a constant jet");
        Jet {
            c: (1..self.c.len()).map(|k| k as f64 * self.c[k]).collect(),
        }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        Jet { c: self.c[..=order.min(self.order())].to_vec() }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet { c: (0..n).map(|k| self.c[k] + o.c[k]).collect() }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet { c: (0..n).map(|k| self.c[k] - o.c[k]).collect() }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet {
            c: (0..n).map(|k| (0..=k).map(|i| self.c[i] * o.c[k - i]).sum()).collect(),
        }
    }

    /// `f^α` for `f(x₀) > 0`, by the recurrence from `f (f^α)' = α f' f^α`.
    pub fn powf(&self, alpha: f64) -> Jet {
        let f0 = self.c[0];
        assert!(f0 > 0.0, "power of a jet needs a positive value");
        let mut g = vec![f0.powf(alpha); self.c.len()];
        for k in 1..self.c.len() {
            let s: f64 = (1..=k).map(|j| (alpha * j as f64 - (k - j) as f64) * self.c[j] * g[k - j]).sum();
            g[k] = s / (k as f64 * f0);
        }
        Jet { c: g }
    }
}

/// Determinant of a square matrix of jets, by cofactor expansion along the
/// first row (sizes stay below eight here).
pub fn det(m: &[Vec<Jet>]) -> Jet {
    let n = m.len();
    match n {
        1 => m[0][0].clone(),
        2 => m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])),
        _ => {
            let order = m.iter().flatten().map(Jet::order).min().unwrap();
            let mut acc = Jet::zero(order);
            for col in 0..n {
                let minor: Vec<Vec<Jet>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, x)| x.clone()).collect())
                    .collect();
                let term = m[0][col].mul(&det(&minor));
                acc = if col % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

/// For `d` vectors in dimension `d + 1`, the covector `w` with
/// `w · x = det(v_1, …, v_d, x)`; it annihilates every `v_i`.
pub fn cross(vectors: &[Vec<Jet>]) -> Vec<Jet> {
    let dim = vectors.len() + 1;
    assert!(vectors.iter().all(|v| v.len() == dim));
    (0..dim)
        .map(|i| {
            // Rows of the minor: components other than i; columns: the vectors.
            let minor: Vec<Vec<Jet>> = (0..dim)
                .filter(|&r| r != i)
                .map(|r| vectors.iter().map(|v| v[r].clone()).collect())
                .collect();
            let m = det(&minor);
            if (i + dim - 1) % 2 == 0 {
                m
            } else {
                m.scale(-1.0)
            }
        })
        .collect()
}

pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let order = a.iter().chain(b).map(Jet::order).min().unwrap();
    a.iter().zip(b).fold(Jet::zero(order), |acc, (x, y)| acc.add(&x.mul(y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(x: f64) -> Jet {
        Jet::new(vec![x, 0.0, 0.0])
    }

    #[test]
    fn product_and_power_match_series() {
        // (1 + h)² = 1 + 2h + h², sqrt(1 + h) = 1 + h/2 − h²/8 + h³/16.
        let f = Jet::new(vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(f.mul(&f).c, vec![1.0, 2.0, 1.0, 0.0]);
        let r = f.powf(0.5);
        for (a, b) in r.c.iter().zip([1.0, 0.5, -0.125, 0.0625]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(Jet::new(vec![0.0, 0.0, 3.0]).deriv_at(2), 6.0);
        assert_eq!(Jet::new(vec![5.0, 2.0, 3.0]).derivative().c, vec![2.0, 6.0]);
    }

    #[test]
    fn cross_annihilates_its_vectors() {
        let v = vec![
            vec![constant(1.0), constant(2.0), constant(0.5), constant(-1.0)],
            vec![constant(0.0), constant(1.0), constant(3.0), constant(2.0)],
            vec![constant(4.0), constant(-2.0), constant(1.0), constant(1.0)],
        ];
        let w = cross(&v);
        for x in &v {
            assert!(dot(&w, x).value().abs() < 1e-13);
        }
        // w · x = det(v_1, v_2, v_3, x) for x = e_0.
        let e0 = vec![constant(1.0), constant(0.0), constant(0.0), constant(0.0)];
        let mut cols = v.clone();
        cols.push(e0.clone());
        let m: Vec<Vec<Jet>> = (0..4).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect();
        assert!((det(&m).value() - dot(&w, &e0).value()).abs() < 1e-13);
    }
}
