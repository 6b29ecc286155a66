//! Elementary symmetric polynomials `e_0, …, e_n`.

use std::ops::{Add, Mul};

use num_traits::{One, Zero};

/// `e_j` for `j = 0..=n` by the product recurrence over `Π (1 + a_i z)`.
/// Exact for exact arithmetic types.
pub fn elementary_symmetric<T>(a: &[T]) -> Vec<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    let mut e = vec![T::zero(); a.len() + 1];
    e[0] = T::one();
    for (i, ai) in a.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] = e[j].clone() + e[j - 1].clone() * ai.clone();
        }
    }
    e
}

/// `e_j` by summing products over all `2^n` subsets. Only for small `n`.
pub fn elementary_symmetric_by_enumeration<T>(a: &[T]) -> Vec<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    let n = a.len();
    assert!(n < 31, "subset enumeration is limited to n < 31");
    let mut e = vec![T::zero(); n + 1];
    for mask in 0u32..(1 << n) {
        let mut prod = T::one();
        for (i, ai) in a.iter().enumerate() {
            if mask >> i & 1 == 1 {
                prod = prod * ai.clone();
            }
        }
        let j = mask.count_ones() as usize;
        e[j] = e[j].clone() + prod;
    }
    e
}

/// Double-double value `hi + lo`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        quick_two_sum(s, e + self.lo + o.lo)
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        quick_two_sum(p, e + self.lo * b)
    }
}

/// Product recurrence for `f64` inputs with double-double accumulation.
pub fn elementary_symmetric_f64(a: &[f64]) -> Vec<f64> {
    let zero = Dd { hi: 0.0, lo: 0.0 };
    let mut e = vec![zero; a.len() + 1];
    e[0] = Dd { hi: 1.0, lo: 0.0 };
    for (i, &ai) in a.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] = e[j].add(e[j - 1].mul_f64(ai));
        }
    }
    e.into_iter().map(|d| d.hi + d.lo).collect()
}
