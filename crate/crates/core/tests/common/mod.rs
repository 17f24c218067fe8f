//! Brute-force oracles shared by the integration tests. Each one is written
//! from the definition, without calling the code it checks.
#![allow(dead_code)]

use cogrisk::matrix::Matrix;
use nalgebra::{DMatrix, DVector};

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    go(0, n, k, &mut vec![], &mut out);
    out
}

pub fn u_of(x: &[f64], y: &[f64]) -> f64 {
    let mut u = 0.0;
    for a in x {
        for b in y {
            u += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
        }
    }
    u
}

/// Two-sided Mann-Whitney p by relabelling every subset of the pooled sample.
pub fn mw_oracle(x: &[f64], y: &[f64]) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let mu = (x.len() * y.len()) as f64 / 2.0;
    let obs = (u_of(x, y) - mu).abs();
    let all = subsets(pooled.len(), x.len());
    let hits = all
        .iter()
        .filter(|s| {
            let a: Vec<f64> = s.iter().map(|&i| pooled[i]).collect();
            let b: Vec<f64> = (0..pooled.len()).filter(|i| !s.contains(i)).map(|i| pooled[i]).collect();
            (u_of(&a, &b) - mu).abs() >= obs - 1e-9
        })
        .count();
    hits as f64 / all.len() as f64
}

/// Pearson X^2 over the non-empty rows of an r x 2 table.
pub fn pearson(table: &[[u64; 2]]) -> f64 {
    let rows: Vec<&[u64; 2]> = table.iter().filter(|r| r[0] + r[1] > 0).collect();
    let n: u64 = rows.iter().map(|r| r[0] + r[1]).sum();
    let col = [rows.iter().map(|r| r[0]).sum::<u64>(), rows.iter().map(|r| r[1]).sum::<u64>()];
    let mut x2 = 0.0;
    for r in rows {
        for c in 0..2 {
            let e = (r[0] + r[1]) as f64 * col[c] as f64 / n as f64;
            if e > 0.0 {
                x2 += (r[c] as f64 - e).powi(2) / e;
            }
        }
    }
    x2
}

/// Exact chi-square p: share of outcome relabellings (class size fixed)
/// whose Pearson statistic is at least the observed one.
pub fn chi_oracle(levels: &[usize], outcome: &[usize]) -> f64 {
    let n = levels.len();
    let n_levels = levels.iter().max().unwrap() + 1;
    let ones = outcome.iter().filter(|&&v| v == 1).count();
    let table = |pos: &dyn Fn(usize) -> bool| -> Vec<[u64; 2]> {
        let mut t = vec![[0u64; 2]; n_levels];
        for i in 0..n {
            t[levels[i]][usize::from(pos(i))] += 1;
        }
        t
    };
    let obs = pearson(&table(&|i| outcome[i] == 1));
    let all = subsets(n, ones);
    let hits = all.iter().filter(|s| pearson(&table(&|i| s.contains(&i))) >= obs - 1e-9).count();
    hits as f64 / all.len() as f64
}

/// Negative Bernoulli log-likelihood and its gradient.
pub fn nll(x: &[Vec<f64>], y: &[u8], b: &[f64]) -> (f64, Vec<f64>) {
    let mut f = 0.0;
    let mut g = vec![0.0; b.len()];
    for (row, &yi) in x.iter().zip(y) {
        let eta: f64 = row.iter().zip(b).map(|(a, c)| a * c).sum();
        let p = 1.0 / (1.0 + (-eta).exp());
        f -= if yi == 1 { p.ln() } else { (1.0 - p).ln() };
        for j in 0..b.len() {
            g[j] += (p - yi as f64) * row[j];
        }
    }
    (f, g)
}

/// Likelihood maximizer by BFGS with Armijo backtracking.
pub fn bfgs(x: &[Vec<f64>], y: &[u8]) -> Vec<f64> {
    let p = x[0].len();
    let mut b = DVector::zeros(p);
    let mut h = DMatrix::identity(p, p);
    let (mut f, g0) = nll(x, y, b.as_slice());
    let mut g = DVector::from_vec(g0);
    for _ in 0..500 {
        if g.amax() < 1e-11 {
            break;
        }
        let d = -(&h * &g);
        let mut t = 1.0;
        let (mut fn_, mut gn) = nll(x, y, (&b + &d * t).as_slice());
        while fn_ > f + 1e-4 * t * g.dot(&d) && t > 1e-12 {
            t *= 0.5;
            (fn_, gn) = nll(x, y, (&b + &d * t).as_slice());
        }
        let s = &d * t;
        let gnew = DVector::from_vec(gn);
        let yv = &gnew - &g;
        let sy = s.dot(&yv);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(p, p);
            h = (&i - &s * yv.transpose() * rho) * &h * (&i - &yv * s.transpose() * rho) + &s * s.transpose() * rho;
        }
        b += s;
        f = fn_;
        g = gnew;
    }
    b.as_slice().to_vec()
}

/// Standard errors from a central-difference Hessian of [`nll`].
pub fn numeric_se(x: &[Vec<f64>], y: &[u8], beta: &[f64]) -> Vec<f64> {
    let p = beta.len();
    let h = 1e-5;
    let mut hess = DMatrix::zeros(p, p);
    for j in 0..p {
        let mut up = beta.to_vec();
        let mut dn = beta.to_vec();
        up[j] += h;
        dn[j] -= h;
        let (_, gu) = nll(x, y, &up);
        let (_, gd) = nll(x, y, &dn);
        for i in 0..p {
            hess[(i, j)] = (gu[i] - gd[i]) / (2.0 * h);
        }
    }
    let cov = hess.try_inverse().unwrap();
    (0..p).map(|j| cov[(j, j)].sqrt()).collect()
}

fn gini_of(c: [u64; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    let (a, b) = (c[0] as f64 / n, c[1] as f64 / n);
    1.0 - a * a - b * b
}

fn route(nodes: &[serde_json::Value], row: &[f64]) -> Vec<usize> {
    let mut path = vec![0usize];
    loop {
        let node = &nodes[*path.last().unwrap()];
        if node["type"] == "leaf" {
            return path;
        }
        let f = node["feature"].as_u64().unwrap() as usize;
        let t = node["threshold"].as_f64().unwrap();
        path.push(if row[f] < t { node["left"].as_u64() } else { node["right"].as_u64() }.unwrap() as usize);
    }
}

fn row_of(x: &Matrix, i: usize) -> Vec<f64> {
    (0..x.n_cols()).map(|j| x.get(i, j)).collect()
}

/// Per-node class counts obtained by routing each tree's bootstrap draws
/// (with multiplicity) through its serialized nodes.
pub fn recount_nodes(json: &serde_json::Value, x: &Matrix, y: &[u8]) -> Vec<Vec<[u64; 2]>> {
    json["trees"]
        .as_array()
        .unwrap()
        .iter()
        .map(|tree| {
            let nodes = tree["nodes"].as_array().unwrap();
            let mut counts = vec![[0u64; 2]; nodes.len()];
            for b in tree["bootstrap"].as_array().unwrap() {
                let i = b.as_u64().unwrap() as usize;
                for at in route(nodes, &row_of(x, i)) {
                    counts[at][usize::from(y[i])] += 1;
                }
            }
            counts
        })
        .collect()
}

/// Mean decrease in Gini per feature from recounted node counts.
pub fn recount_mdi(json: &serde_json::Value, x: &Matrix, y: &[u8], n_features: usize) -> Vec<f64> {
    let counts = recount_nodes(json, x, y);
    let mut raw = vec![0.0; n_features];
    for (tree, c) in json["trees"].as_array().unwrap().iter().zip(&counts) {
        let total = (c[0][0] + c[0][1]) as f64;
        for (at, node) in tree["nodes"].as_array().unwrap().iter().enumerate() {
            if node["type"] == "leaf" {
                continue;
            }
            let (l, r) = (node["left"].as_u64().unwrap() as usize, node["right"].as_u64().unwrap() as usize);
            let n_node = (c[at][0] + c[at][1]) as f64;
            let child: f64 = [l, r].iter().map(|&k| (c[k][0] + c[k][1]) as f64 / n_node * gini_of(c[k])).sum();
            raw[node["feature"].as_u64().unwrap() as usize] += n_node / total * (gini_of(c[at]) - child).max(0.0);
        }
    }
    raw
}

/// OOB error and coverage from the serialized trees: each row is voted on
/// by the trees whose bootstrap missed it, ties going to class 0.
pub fn recount_oob(json: &serde_json::Value, x: &Matrix, y: &[u8]) -> (f64, usize) {
    let n = y.len();
    let mut votes = vec![(0u32, 0u32); n];
    for tree in json["trees"].as_array().unwrap() {
        let boot: Vec<usize> = tree["bootstrap"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
        let nodes = tree["nodes"].as_array().unwrap();
        for i in 0..n {
            if boot.contains(&i) {
                continue;
            }
            let leaf = &nodes[*route(nodes, &row_of(x, i)).last().unwrap()];
            let c = leaf["counts"].as_array().unwrap();
            votes[i].0 += 1;
            votes[i].1 += u32::from(c[1].as_u64().unwrap() > c[0].as_u64().unwrap());
        }
    }
    let covered: Vec<usize> = (0..n).filter(|&i| votes[i].0 > 0).collect();
    let wrong = covered.iter().filter(|&&i| u8::from(2 * votes[i].1 > votes[i].0) != y[i]).count();
    (wrong as f64 / covered.len() as f64, covered.len())
}

/// KNN fill from exhaustive pairwise masked distances; a pair sharing no
/// observed coordinate is infinitely far.
pub fn knn_oracle(x: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let p = x[0].len();
    let mut out = x.to_vec();
    for i in 0..x.len() {
        for j in 0..p {
            if !x[i][j].is_nan() {
                continue;
            }
            let mut cands = vec![];
            for r in 0..x.len() {
                if r == i || x[r][j].is_nan() {
                    continue;
                }
                let shared: Vec<usize> = (0..p).filter(|&c| !x[i][c].is_nan() && !x[r][c].is_nan()).collect();
                let d = if shared.is_empty() {
                    f64::INFINITY
                } else {
                    let ss: f64 = shared.iter().map(|&c| (x[i][c] - x[r][c]).powi(2)).sum();
                    (ss * p as f64 / shared.len() as f64).sqrt()
                };
                cands.push((d, r, x[r][j]));
            }
            cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let take = &cands[..k.min(cands.len())];
            out[i][j] = take.iter().map(|c| c.2).sum::<f64>() / take.len() as f64;
        }
    }
    out
}
