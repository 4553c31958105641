use std::ops::Range;

/// Deterministic parallel map-reduce over `range`.
///
/// The range is cut into chunks of `chunk` items; `leaf` handles one chunk
/// and results are combined by `merge` along a balanced binary tree over the
/// chunk indices. The tree depends only on `range` and `chunk`, so
/// floating-point results are bit-identical for any thread count.
pub fn tree_reduce<T, L, M>(range: Range<u64>, chunk: u64, leaf: &L, merge: &M) -> T
where
    T: Send,
    L: Fn(Range<u64>) -> T + Sync,
    M: Fn(T, T) -> T + Sync,
{
    assert!(chunk > 0, "chunk size must be positive");
    let n_chunks = (range.end.saturating_sub(range.start)).div_ceil(chunk).max(1);
    reduce_chunks(range.start, range.end, chunk, 0, n_chunks, leaf, merge)
}

fn reduce_chunks<T, L, M>(start: u64, end: u64, chunk: u64, lo: u64, hi: u64, leaf: &L, merge: &M) -> T
where
    T: Send,
    L: Fn(Range<u64>) -> T + Sync,
    M: Fn(T, T) -> T + Sync,
{
    if hi - lo == 1 {
        let a = (start + lo * chunk).min(end);
        let b = (start + hi * chunk).min(end);
        return leaf(a..b);
    }
    let mid = lo + (hi - lo) / 2;
    let (left, right) = rayon::join(
        || reduce_chunks(start, end, chunk, lo, mid, leaf, merge),
        || reduce_chunks(start, end, chunk, mid, hi, leaf, merge),
    );
    merge(left, right)
}
