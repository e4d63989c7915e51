use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Pairs up the values of two rankings given as `(item, value)`; larger
/// values rank higher. Both must cover the same items.
fn align(a: &[(String, f64)], b: &[(String, f64)]) -> Result<Vec<(f64, f64)>> {
    let bm: BTreeMap<&str, f64> = b.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let am: BTreeMap<&str, f64> = a.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    if am.len() != a.len() || bm.len() != b.len() {
        return Err(Error::Data("a ranking lists the same item twice".into()));
    }
    let shared = am.keys().filter(|k| bm.contains_key(*k)).count();
    if shared == 0 {
        return Err(Error::Data("rankings have disjoint item sets".into()));
    }
    if shared != am.len() || shared != bm.len() {
        return Err(Error::Data(format!(
            "rankings cover different items ({} vs {}, {shared} shared)",
            am.len(),
            bm.len()
        )));
    }
    Ok(am.iter().map(|(k, v)| (*v, bm[k])).collect())
}

/// Scores for an ordered list of items: the first item gets the largest.
pub fn scores_from_order(items: &[&str]) -> Vec<(String, f64)> {
    let n = items.len() as f64;
    items
        .iter()
        .enumerate()
        .map(|(i, s)| (s.to_string(), n - i as f64))
        .collect()
}

/// Kendall's tau-b.
pub fn kendall_tau(a: &[(String, f64)], b: &[(String, f64)]) -> Result<f64> {
    let pairs = align(a, b)?;
    let (mut conc, mut disc, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..pairs.len() {
        for j in 0..i {
            let da = pairs[i].0 - pairs[j].0;
            let db = pairs[i].1 - pairs[j].1;
            if da == 0.0 {
                ties_a += 1;
            }
            if db == 0.0 {
                ties_b += 1;
            }
            if da != 0.0 && db != 0.0 {
                if (da > 0.0) == (db > 0.0) {
                    conc += 1;
                } else {
                    disc += 1;
                }
            }
        }
    }
    let n0 = (pairs.len() * (pairs.len() - 1) / 2) as i64;
    let denom = (((n0 - ties_a) * (n0 - ties_b)) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::Data("tau is undefined when a ranking is entirely tied".into()));
    }
    Ok((conc - disc) as f64 / denom)
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman_rho(a: &[(String, f64)], b: &[(String, f64)]) -> Result<f64> {
    let pairs = align(a, b)?;
    let ra = average_ranks(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let rb = average_ranks(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Data("rho is undefined when a ranking is entirely tied".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}
