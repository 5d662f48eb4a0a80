//! Linear algebra over `Z/p^k`.
//!
//! The order of the row span of an integer matrix taken mod `d` factors over
//! the prime powers of `d`. For a prime modulus this is plain Gaussian
//! elimination over the field; for a prime power the ring is local, so a pivot
//! of minimal `p`-valuation divides every remaining entry and full
//! diagonalisation (Smith form) goes through without gcd steps.

/// Prime factorisation as `(p, k)` pairs in increasing `p`.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut k = 0;
            while n.is_multiple_of(p) {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == vec![(n, 1)]
}

fn inverse_mod(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "{a} is not a unit mod {m}");
    old_s.rem_euclid(m as i128) as u64
}

fn valuation(mut x: u64, p: u64) -> u32 {
    let mut v = 0;
    while x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v
}

/// Rank of the row span over the field `Z/p`.
pub fn rank_mod_prime(mut rows: Vec<Vec<u64>>, p: u64) -> usize {
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            *x %= p;
        }
    }
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = inverse_mod(rows[rank][col], p);
        for x in rows[rank].iter_mut() {
            *x = *x * inv % p;
        }
        let (top, rest) = rows.split_at_mut(rank + 1);
        let pivot = &top[rank];
        for row in rest.iter_mut() {
            let f = row[col];
            if f != 0 {
                for (x, &y) in row.iter_mut().zip(pivot.iter()) {
                    *x = (*x + p - f * y % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Valuations of the Smith-form diagonal over `Z/p^k` (only entries of
/// valuation `< k` are reported). The row span then has order
/// `p^(sum of (k - v))`.
pub fn smith_valuations_prime_power(mut rows: Vec<Vec<u64>>, p: u64, k: u32) -> Vec<u32> {
    let m = p.pow(k);
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            *x %= m;
        }
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut row_used = vec![false; nrows];
    let mut col_used = vec![false; ncols];
    let mut out = Vec::new();
    loop {
        let mut best: Option<(usize, usize, u32)> = None;
        'scan: for i in (0..nrows).filter(|&i| !row_used[i]) {
            for j in (0..ncols).filter(|&j| !col_used[j]) {
                let x = rows[i][j];
                if x == 0 {
                    continue;
                }
                let v = valuation(x, p);
                if best.is_none_or(|(_, _, bv)| v < bv) {
                    best = Some((i, j, v));
                    if v == 0 {
                        break 'scan;
                    }
                }
            }
        }
        let Some((pi, pj, v)) = best else { break };
        let pv = p.pow(v);
        let unit = rows[pi][pj] / pv;
        let inv = inverse_mod(unit % m, m);
        for x in rows[pi].iter_mut() {
            *x = *x * inv % m;
        }
        let pivot_row = rows[pi].clone();
        for i in (0..nrows).filter(|&i| i != pi && !row_used[i]) {
            let f = rows[i][pj];
            if f == 0 {
                continue;
            }
            let c = f / pv;
            for (x, &y) in rows[i].iter_mut().zip(pivot_row.iter()) {
                *x = (*x + m - c * y % m) % m;
            }
        }
        // the pivot column is now zero off the pivot, so column operations
        // clear the rest of the pivot row without touching other rows
        for j in (0..ncols).filter(|&j| j != pj) {
            rows[pi][j] = 0;
        }
        row_used[pi] = true;
        col_used[pj] = true;
        out.push(v);
    }
    out
}

/// Order of the row span mod `d`, as exponents per prime of `d`.
pub fn span_order(rows: &[Vec<u64>], d: u64) -> Vec<(u64, u32)> {
    factorize(d)
        .into_iter()
        .map(|(p, k)| {
            let e = if k == 1 {
                rank_mod_prime(rows.to_vec(), p) as u32
            } else {
                smith_valuations_prime_power(rows.to_vec(), p, k)
                    .into_iter()
                    .map(|v| k - v)
                    .sum()
            };
            (p, e)
        })
        .collect()
}
