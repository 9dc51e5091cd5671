//! Order-preserving map over an index range, parallel when the `parallel` feature is on.

/// `(0..n).map(f).collect()`, run on the rayon pool when `parallel` is set and the feature is
/// compiled in. The output order is always the index order.
pub(crate) fn map_range<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && n > 1 {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let a = map_range(1000, true, |i| i * i);
        let b = map_range(1000, false, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(a[31], 961);
    }
}
