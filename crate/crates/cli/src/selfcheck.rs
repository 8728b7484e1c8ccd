use std::time::Instant;

use ktree_core::gfsystem::{pointed_pieces, unreachable_mass};
use ktree_core::ktrees::{canonical_form, decode, default_colouring, encode};
use ktree_core::oracle::{enumerate_levels, level_census, rank_in, rooted_classes, Level, RootKind};
use ktree_core::{KTree, Permutation, SeriesTable};
use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::CliError;

type Check = Result<String, String>;

fn gf_vs_oracle(k: usize, table: &SeriesTable, levels: &[Level]) -> Check {
    for (i, level) in levels.iter().enumerate() {
        let n = i + 1;
        let pairs = [
            ("U", level.len(), &table.u_coefficients()[n]),
            ("B", rooted_classes(level, RootKind::Hedron).len(), &table.b_coefficients()[n]),
            ("C", rooted_classes(level, RootKind::FrontDistinguishable).len(), &table.c_identity()[n]),
            (
                "Bbar",
                rooted_classes(level, RootKind::FrontDistinguishableUniqueHedron).len(),
                &table.bbar_identity()[n],
            ),
        ];
        for (name, found, expected) in pairs {
            if BigUint::from(found) != *expected {
                return Err(format!("{name}[{n}] for k={k}: oracle {found}, series {expected}"));
            }
        }
    }
    Ok(format!("k={k} n<={}", levels.len()))
}

fn census(k: usize, table: &SeriesTable, levels: &[Level]) -> Check {
    let pieces = pointed_pieces(table);
    for (i, level) in levels.iter().enumerate() {
        let n = i + 1;
        let c = level_census(k, n, level);
        let nu = BigUint::from(n) * &table.u_coefficients()[n];
        if BigUint::from(c.total()) != nu {
            return Err(format!("k={k} n={n}: census total {} != nU = {nu}", c.total()));
        }
        if BigUint::from(c.v1) != table.b_coefficients()[n] {
            return Err(format!("k={k} n={n}: hedron-pointed {} != B", c.v1));
        }
        let mass = unreachable_mass(table, &pieces, n).map_err(|e| e.to_string())?;
        if c.unreachable() != mass {
            return Err(format!("k={k} n={n}: unreachable {} != {mass}", c.unreachable()));
        }
    }
    Ok(format!("k={k} n<={}", levels.len()))
}

fn reversed(t: &KTree) -> KTree {
    let m = t.vertex_count();
    t.relabel(&Permutation::new((0..m).rev().collect()).expect("permutation"))
}

fn roundtrips(k: usize, levels: &[Level]) -> Check {
    let mut checked = 0;
    for level in levels {
        for (i, t) in level.trees.iter().enumerate() {
            let parsed: KTree = t.to_string().parse().map_err(|e| format!("{e}"))?;
            if parsed != *t {
                return Err(format!("text round trip changed {t}"));
            }
            let (back, _) = decode(&encode(t, &default_colouring(t)));
            if canonical_form(&back) != canonical_form(t) {
                return Err(format!("coding-tree round trip changed {t}"));
            }
            if rank_in(level, &reversed(t)).map_err(|e| e.to_string())? != i {
                return Err(format!("rank is not relabelling-invariant for {t}"));
            }
            checked += 1;
        }
    }
    Ok(format!("k={k}, {checked} classes"))
}

fn integrality(k: usize, trunc: usize) -> Check {
    let t = SeriesTable::build(k, trunc).map_err(|e| e.to_string())?;
    if !t.u_coefficients()[0].is_zero() || t.u_coefficients()[1..].iter().any(|x| x.is_zero()) {
        return Err(format!("k={k}: U has a zero coefficient"));
    }
    Ok(format!("k={k} N={trunc}"))
}

pub fn run(quick: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let sizes: &[(usize, usize)] = if quick { &[(1, 6), (2, 6)] } else { &[(1, 10), (2, 7), (3, 5)] };
    let census_sizes: &[(usize, usize)] = if quick { &[(1, 6), (2, 6)] } else { &[(1, 8), (2, 6), (3, 5)] };
    let mut results: Vec<(String, Check)> = Vec::new();
    for &(k, nmax) in sizes {
        let table = SeriesTable::build(k, nmax)?;
        let levels = enumerate_levels(k, nmax, nmax)?;
        results.push(("series-vs-oracle".into(), gf_vs_oracle(k, &table, &levels)));
        results.push(("round-trips".into(), roundtrips(k, &levels)));
        if let Some(&(_, cmax)) = census_sizes.iter().find(|(ck, _)| *ck == k) {
            results.push(("census".into(), census(k, &table, &levels[..cmax])));
        }
    }
    let (kmax, trunc) = if quick { (2, 60) } else { (4, 100) };
    for k in 1..=kmax {
        results.push(("integrality".into(), integrality(k, trunc)));
    }
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("ok    {name:<18} {detail}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name:<18} {msg}");
            }
        }
    }
    println!(
        "{} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        return Err(CliError::SelfCheck(failed));
    }
    Ok(())
}
