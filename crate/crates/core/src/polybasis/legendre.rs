use crate::scalar::Scalar;

/// Values and first two derivatives of `P_0..=P_max` at one abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreTable<F> {
    pub values: Vec<F>,
    pub first: Vec<F>,
    pub second: Vec<F>,
}

/// Writes `P_0(z)..P_{len-1}(z)` into `out` using the three-term recurrence
/// `(n+1) P_{n+1} = (2n+1) z P_n - n P_{n-1}`.
pub fn fill_legendre<F: Scalar>(z: F, out: &mut [F]) {
    if out.is_empty() {
        return;
    }
    out[0] = F::one();
    if out.len() == 1 {
        return;
    }
    out[1] = z;
    for n in 1..out.len() - 1 {
        let nf = F::of_usize(n);
        let two_n1 = F::of_usize(2 * n + 1);
        out[n + 1] = (two_n1 * z * out[n] - nf * out[n - 1]) / (nf + F::one());
    }
}

/// Values, first and second derivatives via the differentiated recurrences
/// `P'_{n+1} = P'_{n-1} + (2n+1) P_n` and `P''_{n+1} = P''_{n-1} + (2n+1) P'_n`.
pub fn fill_legendre_derivs<F: Scalar>(z: F, values: &mut [F], first: &mut [F], second: &mut [F]) {
    let len = values.len();
    debug_assert!(first.len() == len && second.len() == len);
    fill_legendre(z, values);
    if len == 0 {
        return;
    }
    first[0] = F::zero();
    second[0] = F::zero();
    if len == 1 {
        return;
    }
    first[1] = F::one();
    second[1] = F::zero();
    for n in 1..len - 1 {
        let two_n1 = F::of_usize(2 * n + 1);
        first[n + 1] = first[n - 1] + two_n1 * values[n];
        second[n + 1] = second[n - 1] + two_n1 * first[n];
    }
}

pub fn legendre_values_1d<F: Scalar>(max_degree: usize, z: F) -> Vec<F> {
    let mut out = vec![F::zero(); max_degree + 1];
    fill_legendre(z, &mut out);
    out
}

pub fn legendre_derivs_1d<F: Scalar>(max_degree: usize, z: F) -> LegendreTable<F> {
    let mut values = vec![F::zero(); max_degree + 1];
    let mut first = values.clone();
    let mut second = values.clone();
    fill_legendre_derivs(z, &mut values, &mut first, &mut second);
    LegendreTable {
        values,
        first,
        second,
    }
}
