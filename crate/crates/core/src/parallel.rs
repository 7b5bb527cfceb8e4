//! Fixed-size worker pools. Results never depend on the worker count: every
//! task derives its own random stream and outputs keep input order.

use rayon::prelude::*;

pub fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool")
}

/// `f` over `items` on `workers` threads, results in input order.
pub fn map_ordered<T: Sync, R: Send>(workers: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    pool(workers).install(|| items.par_iter().map(f).collect())
}

/// Like [`map_ordered`] with per-thread scratch state from `init`.
pub fn map_ordered_init<T: Sync, S, R: Send>(
    workers: usize,
    items: &[T],
    init: impl Fn() -> S + Sync + Send,
    f: impl Fn(&mut S, &T) -> R + Sync + Send,
) -> Vec<R> {
    if workers <= 1 {
        let mut s = init();
        return items.iter().map(|x| f(&mut s, x)).collect();
    }
    pool(workers).install(|| items.par_iter().map_init(&init, |s, x| f(s, x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map_ordered(1, &xs, |x| x * x);
        let b = map_ordered(4, &xs, |x| x * x);
        assert_eq!(a, b);
        let c = map_ordered_init(3, &xs, Vec::<u64>::new, |s, x| {
            s.push(*x);
            x + 1
        });
        assert_eq!(c, (1..1001).collect::<Vec<_>>());
    }
}
