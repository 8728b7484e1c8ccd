use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use ktree_core::constants::Constants;
use ktree_core::gfsystem::{pointed_pieces, pointing_defect_with};
use ktree_core::metrics::{self, census_tv, neighbourhood_census, Measurement};
use ktree_core::oracle::{default_bound, enumerate_levels, level_census};
use ktree_core::sampler::Sampler;
use ktree_core::{KTree, SeriesTable};
use rayon::prelude::*;
use serde_json::json;

use crate::error::CliError;
use crate::{CensusArgs, ConstantsArgs, CountArgs, OracleArgs, SampleArgs, StatsArgs};

fn stdout() -> BufWriter<io::StdoutLock<'static>> {
    BufWriter::new(io::stdout().lock())
}

fn out_err(e: io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

pub fn count(a: &CountArgs) -> Result<(), CliError> {
    let (k, n) = (a.k as usize, a.n as usize);
    let table = SeriesTable::build(k, n)?;
    let mut w = stdout();
    if a.json {
        writeln!(w, "{}", table.to_json()).map_err(out_err)?;
    } else if a.csv {
        let pieces = pointed_pieces(&table);
        writeln!(w, "n,U,B,C,E,defect").map_err(out_err)?;
        for i in 1..=n {
            let d = pointing_defect_with(&table, &pieces, i)?;
            writeln!(
                w,
                "{i},{},{},{},{},{d}",
                table.u_coefficients()[i],
                table.b_coefficients()[i],
                table.c_coefficients()[i],
                table.e_coefficients()[i],
            )
            .map_err(out_err)?;
        }
    } else {
        for i in 1..=n {
            writeln!(w, "{i} {}", table.u_coefficients()[i]).map_err(out_err)?;
        }
    }
    w.flush().map_err(out_err)
}

pub fn constants(a: &ConstantsArgs) -> Result<(), CliError> {
    let ks: Vec<usize> = a.k.clone().collect();
    let rows: Vec<Constants> = ks
        .par_iter()
        .map(|&k| Constants::compute(k, a.m))
        .collect::<Result<_, _>>()?;
    let mut w = stdout();
    if a.json {
        let v: Vec<_> = rows.iter().map(|c| c.to_json()).collect();
        writeln!(w, "{}", serde_json::Value::from(v)).map_err(out_err)?;
    } else if a.csv {
        writeln!(w, "k,c,rho,sqrt_factor").map_err(out_err)?;
        for r in rows.iter().map(|c| c.row()) {
            writeln!(w, "{},{:.12},{:.12},{:.12}", r.k, r.c, r.rho, r.sqrt_factor).map_err(out_err)?;
        }
    } else {
        writeln!(w, "{:>3}  {:>18}  {:>16}  {:>16}", "k", "c_k", "rho_k", "sqrt factor").map_err(out_err)?;
        for r in rows.iter().map(|c| c.row()) {
            writeln!(w, "{:>3}  {:>18.12}  {:>16.12}  {:>16.12}", r.k, r.c, r.rho, r.sqrt_factor).map_err(out_err)?;
        }
    }
    w.flush().map_err(out_err)
}

pub fn sample(a: &SampleArgs) -> Result<(), CliError> {
    let (k, n) = (a.k as usize, a.n as usize);
    let sampler = Sampler::new(k, n)?;
    let batch = sampler.sample_batch(n, a.count, a.seed, a.mode)?;
    match &a.out {
        Some(path) => {
            let name = path.display().to_string();
            let file = File::create(path).map_err(|e| CliError::io(&name, e))?;
            let mut w = BufWriter::new(file);
            for t in batch.trees() {
                writeln!(w, "{t}").map_err(|e| CliError::io(&name, e))?;
            }
            w.flush().map_err(|e| CliError::io(&name, e))?;
            let side = format!("{name}.json");
            let text = serde_json::to_string_pretty(&batch.summary()).expect("serializable");
            fs::write(&side, text + "\n").map_err(|e| CliError::io(&side, e))?;
        }
        None => {
            let mut w = stdout();
            for t in batch.trees() {
                writeln!(w, "{t}").map_err(out_err)?;
            }
            w.flush().map_err(out_err)?;
        }
    }
    Ok(())
}

/// Trees from a sample file, one per line; blank lines and `#` comments are skipped.
pub fn read_trees(path: &Path) -> Result<Vec<KTree>, CliError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CliError::io(&name, e))?;
    let trees = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<KTree>())
        .collect::<Result<Vec<_>, _>>()?;
    if trees.is_empty() {
        return Err(CliError::Usage(format!("{name}: no trees")));
    }
    let k = trees[0].k();
    if trees.iter().any(|t| t.k() != k) {
        return Err(CliError::Usage(format!("{name}: mixed values of k")));
    }
    Ok(trees)
}

fn common_n(trees: &[KTree]) -> usize {
    let n = trees[0].n();
    if trees.iter().all(|t| t.n() == n) {
        n
    } else {
        0
    }
}

pub fn stats(a: &StatsArgs) -> Result<(), CliError> {
    let trees = read_trees(&a.input)?;
    let k = trees[0].k();
    let c = match a.c {
        Some(c) => c,
        None => Constants::compute(k, ktree_core::constants::DEFAULT_TRUNCATION)?.row().c,
    };
    let both = !a.rayleigh && !a.diameter;
    let n_all = common_n(&trees);
    let row = |n: usize, statistic: &str, value: f64| Measurement {
        k,
        n,
        seed: a.seed,
        statistic: statistic.to_string(),
        value,
    };
    let mut rows = Vec::new();
    if a.rayleigh || both {
        let d = metrics::distance_statistic(&trees, c, a.pairs, a.seed);
        let sizes = trees.iter().flat_map(|t| std::iter::repeat_n(t.n(), a.pairs));
        rows.extend(d.iter().zip(sizes).map(|(&x, n)| row(n, "rayleigh", x)));
        rows.push(row(n_all, "rayleigh_mean", metrics::mean(&d)));
    }
    if a.diameter || both {
        let s = metrics::diameter_statistic(&trees, c);
        rows.extend(s.normalized.iter().zip(&trees).map(|(&x, t)| row(t.n(), "diameter", x)));
        rows.push(row(n_all, "diameter_mean", s.mean));
        rows.push(row(n_all, "diameter_second_moment", s.second_moment));
    }
    let mut w = stdout();
    metrics::write_csv(&mut w, &rows).map_err(out_err)?;
    w.flush().map_err(out_err)
}

pub fn census(a: &CensusArgs) -> Result<(), CliError> {
    let trees = read_trees(&a.input)?;
    let census = neighbourhood_census(&trees, a.r, a.seed);
    let mut v = json!({
        "k": trees[0].k(),
        "n": common_n(&trees),
        "r": a.r,
        "vertices": census.total,
        "support": census.support(),
        "codes": census.to_json(),
    });
    if let Some(other) = &a.compare {
        let second = neighbourhood_census(&read_trees(other)?, a.r, a.seed);
        v["tv"] = json!(census_tv(&census, &second));
    }
    println!("{v}");
    Ok(())
}

pub fn oracle(a: &OracleArgs) -> Result<(), CliError> {
    let (k, n) = (a.k as usize, a.n as usize);
    let bound = a.bound.unwrap_or_else(|| default_bound(k));
    let level = enumerate_levels(k, n, bound)?.pop().expect("n >= 1");
    let mut w = stdout();
    if a.census {
        let c = level_census(k, n, &level);
        let mut v = serde_json::to_value(&c).expect("serializable");
        v["classes"] = json!(level.len());
        v["total"] = json!(c.total());
        v["unreachable"] = json!(c.unreachable().to_string());
        writeln!(w, "{v}").map_err(out_err)?;
    } else {
        for t in &level.trees {
            writeln!(w, "{t}").map_err(out_err)?;
        }
    }
    w.flush().map_err(out_err)
}
