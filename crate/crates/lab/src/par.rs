//! Order-preserving parallel map. `threads == 1` runs inline; any other
//! value uses a rayon pool (0 = rayon's default size). Results are
//! identical either way because every job owns its random stream.

use rayon::prelude::*;

pub fn par_map<T, U, F>(threads: usize, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    if threads == 1 || items.len() < 2 {
        return items.iter().map(&f).collect();
    }
    if threads == 0 {
        return items.par_iter().map(&f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running inline");
            items.iter().map(&f).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_thread_count() {
        let xs: Vec<u64> = (0..500).collect();
        let serial = par_map(1, &xs, |x| x * x + 1);
        assert_eq!(par_map(0, &xs, |x| x * x + 1), serial);
        assert_eq!(par_map(3, &xs, |x| x * x + 1), serial);
    }
}
