use std::collections::HashSet;

use ktree_core::SeriesTable;
use num_bigint::BigUint;

fn u(k: usize, n: usize) -> Vec<u64> {
    let t = SeriesTable::build(k, n).unwrap();
    t.u_coefficients()[1..].iter().map(|x| x.to_string().parse().unwrap()).collect()
}

// A000055, free trees by vertex count, from 2 vertices on.
const FREE_TREES: [u64; 14] = [1, 1, 2, 3, 6, 11, 23, 47, 106, 235, 551, 1301, 3159, 7741];
// A000081, rooted trees by vertex count, from 2 vertices on.
const ROOTED_TREES: [u64; 12] = [1, 2, 4, 9, 20, 48, 115, 286, 719, 1842, 4766, 12486];
// A054581, unlabelled 2-trees by vertex count, from 3 vertices on.
const TWO_TREES: [u64; 12] = [1, 1, 2, 5, 12, 39, 136, 529, 2171, 9368, 41534, 188942];

#[test]
fn one_trees_are_free_trees() {
    assert_eq!(u(1, FREE_TREES.len()), FREE_TREES);
    let t = SeriesTable::build(1, ROOTED_TREES.len()).unwrap();
    let c: Vec<BigUint> = ROOTED_TREES.iter().map(|&x| BigUint::from(x)).collect();
    assert_eq!(&t.c_identity()[1..], &c[..]);
}

#[test]
fn two_trees() {
    assert_eq!(u(2, TWO_TREES.len()), TWO_TREES);
}

/// AHU code of the tree rooted at `root`.
fn ahu(adj: &[Vec<usize>], root: usize, parent: usize) -> String {
    let mut kids: Vec<String> = adj[root].iter().filter(|&&v| v != parent).map(|&v| ahu(adj, v, root)).collect();
    kids.sort();
    format!("({})", kids.concat())
}

/// Canonical form of a free tree: the least AHU code over its centres.
fn free_code(adj: &[Vec<usize>]) -> String {
    let n = adj.len();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut leaves: Vec<usize> = (0..n).filter(|&v| degree[v] <= 1).collect();
    let mut left = n;
    while left > 2 {
        left -= leaves.len();
        let mut next = Vec::new();
        for &l in &leaves {
            for &v in &adj[l] {
                degree[v] -= 1;
                if degree[v] == 1 {
                    next.push(v);
                }
            }
        }
        leaves = next;
    }
    leaves.iter().map(|&c| ahu(adj, c, usize::MAX)).min().unwrap()
}

/// Free trees on `m` labelled vertices, decoded from every Prüfer sequence.
fn count_by_pruefer(m: usize) -> usize {
    let mut seen = HashSet::new();
    let mut seq = vec![0usize; m - 2];
    loop {
        let mut degree = vec![1usize; m];
        for &x in &seq {
            degree[x] += 1;
        }
        let mut adj = vec![Vec::new(); m];
        for &x in &seq {
            let leaf = (0..m).find(|&v| degree[v] == 1).unwrap();
            adj[leaf].push(x);
            adj[x].push(leaf);
            degree[leaf] -= 1;
            degree[x] -= 1;
        }
        let rest: Vec<usize> = (0..m).filter(|&v| degree[v] == 1).collect();
        adj[rest[0]].push(rest[1]);
        adj[rest[1]].push(rest[0]);
        seen.insert(free_code(&adj));

        let mut i = 0;
        while i < seq.len() && seq[i] == m - 1 {
            seq[i] = 0;
            i += 1;
        }
        if i == seq.len() {
            return seen.len();
        }
        seq[i] += 1;
    }
}

#[test]
fn pruefer_oracle_matches_series() {
    let series = u(1, 6);
    for edges in 2..=6 {
        assert_eq!(count_by_pruefer(edges + 1) as u64, series[edges - 1], "{edges} edges");
    }
}
