use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use arbor_core::catalog::{self, CatalogGroup};
use arbor_core::measure::{
    abstract_density_curve, bound_ledger, census_capped, census_p, check_monotone,
    estimate_abstract_torsion_density, estimate_torsion_density, to_f64, CensusKind, DensityRecord,
    TorsionEstimate,
};
use arbor_core::quotient::{profinite_rist_projection, section_set, RistSource};
use arbor_core::ring::AbstractSemidirectQuotient;
use arbor_core::{FiniteQuotient, GroupDef, Rational};
use clap::ValueEnum;
use serde_json::{json, Value};

use crate::cli::{Census, Command, Common, Format, Repr, Source, SourceChoice};
use crate::report::{float, int, opt_ratio, ratio, Report};
use crate::{load_group, CliError, CliResult};

/// Timing and progress lines, written to stderr after the command ends.
type Log = Vec<String>;

pub(crate) fn dispatch(
    command: Command,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    match command {
        Command::List => {
            for name in catalog::NAMES {
                writeln!(out, "{name}")?;
            }
            Ok(())
        }
        Command::Export { group, output } => {
            let def = tree(load_group(&group)?, "export")?;
            let text = def.to_text();
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(())
        }
        Command::Enumerate { common, repr } => execute(&common, Format::Csv, out, err, |log| {
            enumerate(&common, repr, log)
        }),
        Command::Density {
            common,
            census,
            n,
            bounds,
        } => execute(&common, Format::Csv, out, err, |log| {
            density(&common, &census, n, bounds, log)
        }),
        Command::Bounds {
            common,
            r,
            n,
            rist_source,
        } => execute(&common, Format::Json, out, err, |log| {
            bounds_report(&common, r, n, rist_source, log)
        }),
        Command::Rist { common, level } => execute(&common, Format::Csv, out, err, |log| {
            rist(&common, level, log)
        }),
        Command::Orbits { common, level } => execute(&common, Format::Csv, out, err, |log| {
            orbits(&common, level, log)
        }),
        Command::Sample {
            common,
            order_cap,
            count,
            exact,
        } => execute(&common, Format::Json, out, err, |log| {
            sample(&common, order_cap, count, exact, log)
        }),
    }
}

/// Runs `body` on a pool of `--threads` workers and writes its report.
fn execute<F>(
    common: &Common,
    default_format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
    body: F,
) -> CliResult<()>
where
    F: FnOnce(&mut Log) -> CliResult<Report> + Send,
{
    let mut log = Log::new();
    let result = match common.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Usage(format!("--threads {threads}: {e}")))?;
            pool.install(|| body(&mut log))
        }
        None => body(&mut log),
    };
    for line in &log {
        writeln!(err, "{line}")?;
    }
    let report = result?;
    let format = common.format.unwrap_or(default_format);
    match &common.output {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            report.write(format, &mut file)?;
            file.flush()?;
        }
        None => report.write(format, out)?,
    }
    Ok(())
}

fn tree(group: CatalogGroup, command: &str) -> CliResult<GroupDef> {
    match group {
        CatalogGroup::Tree(def) => Ok(def),
        CatalogGroup::Abstract { p } => Err(CliError::Usage(format!(
            "{command} needs a group acting on a tree; abstract-semidirect-{p} is not one"
        ))),
    }
}

fn new_report(command: &'static str, common: &Common) -> Report {
    let mut report = Report::new(command, &common.group, common.seed, common.max_elements);
    report.param("depth_min", *common.depth.start());
    report.param("depth_max", *common.depth.end());
    report
}

fn timed<T>(log: &mut Log, what: impl FnOnce() -> String, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let value = f();
    log.push(format!(
        "{} in {:.3}s",
        what(),
        start.elapsed().as_secs_f64()
    ));
    value
}

fn ring_summary(report: &mut Report, p: u64) {
    let (poly, stated) = catalog::ring_ranks(p);
    report
        .summary
        .insert("ring_rank_polynomial".into(), poly.into());
    report
        .summary
        .insert("ring_rank_stated".into(), stated.into());
}

fn enumerate(common: &Common, repr: Repr, log: &mut Log) -> CliResult<Report> {
    let mut report = new_report("enumerate", common);
    report.columns = vec!["k", "order", "representation"];
    let cap = common.max_elements;
    match load_group(&common.group)? {
        CatalogGroup::Abstract { p } => {
            ring_summary(&mut report, p);
            for k in common.depth.clone() {
                let q = AbstractSemidirectQuotient::new(p, k as u32, cap)?;
                report.push(vec![k.into(), int(q.order()), "ring".into()]);
            }
        }
        CatalogGroup::Tree(def) => {
            report.param("repr", repr.to_possible_value().unwrap().get_name());
            for k in common.depth.clone() {
                let (order, label) = timed(
                    log,
                    || format!("k={k}"),
                    || -> CliResult<_> {
                        Ok(match repr {
                            Repr::Enumerated => (
                                FiniteQuotient::enumerate(&def, k, cap)?.order(),
                                "enumerated",
                            ),
                            Repr::StabChain => {
                                (FiniteQuotient::stab_chain(&def, k)?.order(), "stab-chain")
                            }
                            Repr::Both => {
                                let chain = FiniteQuotient::stab_chain(&def, k)?.order();
                                let listed = FiniteQuotient::enumerate(&def, k, cap)?.order();
                                if chain != listed {
                                    return Err(arbor_core::Error::InvariantViolation(format!(
                                    "k={k}: stabilizer chain gives {chain}, enumeration {listed}"
                                ))
                                    .into());
                                }
                                (listed, "enumerated+stab-chain")
                            }
                        })
                    },
                )?;
                report.push(vec![k.into(), int(order), label.into()]);
            }
        }
    }
    Ok(report)
}

const DENSITY_COLUMNS: [&str; 11] = [
    "kind",
    "r",
    "n",
    "k",
    "count",
    "group_order",
    "ratio",
    "ratio_f64",
    "bound_upper",
    "bound_alpha",
    "rist_source",
];

fn density_row(rec: &DensityRecord) -> Vec<Value> {
    vec![
        rec.kind.as_str().into(),
        rec.r.into(),
        rec.n.into(),
        rec.k.into(),
        int(rec.count),
        int(rec.group_order),
        ratio(&rec.ratio),
        float(to_f64(&rec.ratio)),
        opt_ratio(&rec.bound_upper),
        opt_ratio(&rec.bound_alpha),
        rec.rist_source.map_or(Value::Null, |s| s.as_str().into()),
    ]
}

fn source(s: Source) -> RistSource {
    match s {
        Source::Finite => RistSource::FiniteQuotient,
        Source::Metadata => RistSource::Metadata,
    }
}

fn density(
    common: &Common,
    census: &Census,
    n: usize,
    bounds: Option<Source>,
    log: &mut Log,
) -> CliResult<Report> {
    let mut report = new_report("density", common);
    report.columns = DENSITY_COLUMNS.to_vec();
    let cap = common.max_elements;
    let group = load_group(&common.group)?;
    let records = match (group, census.r, census.order_cap) {
        (CatalogGroup::Abstract { p }, None, Some(order_cap)) => {
            ring_summary(&mut report, p);
            report.param("order_cap", order_cap);
            abstract_density_curve(p, order_cap, common.depth.clone(), cap)?
        }
        (CatalogGroup::Abstract { .. }, _, _) => {
            return Err(CliError::Usage(
                "abstract groups support only --order-cap censuses".into(),
            ))
        }
        (CatalogGroup::Tree(def), Some(r), None) => {
            report.param("r", r);
            report.param("n", n);
            let mut records = Vec::new();
            for k in common.depth.clone() {
                let rec = timed(
                    log,
                    || format!("k={k}"),
                    || -> CliResult<_> {
                        let q = FiniteQuotient::enumerate(&def, k, cap)?;
                        Ok(match bounds {
                            Some(s) => bound_ledger(&def, &q, r, n, source(s), cap)?.record,
                            None => {
                                let count = census_p(&q, r, n)?;
                                DensityRecord::new(CensusKind::Exact, r, n, k, count, q.order())
                            }
                        })
                    },
                )?;
                records.push(rec);
            }
            check_monotone(&records)?;
            records
        }
        (CatalogGroup::Tree(def), None, Some(order_cap)) => {
            if bounds.is_some() {
                return Err(CliError::Usage("--bounds needs an --r census".into()));
            }
            report.param("order_cap", order_cap);
            let mut records = Vec::new();
            for k in common.depth.clone() {
                let rec = timed(
                    log,
                    || format!("k={k}"),
                    || -> CliResult<_> {
                        let q = FiniteQuotient::enumerate(&def, k, cap)?;
                        let count = census_capped(&q, order_cap)?;
                        Ok(DensityRecord::new(
                            CensusKind::Capped,
                            order_cap,
                            0,
                            k,
                            count,
                            q.order(),
                        ))
                    },
                )?;
                records.push(rec);
            }
            check_monotone(&records)?;
            records
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --r and --order-cap".into(),
            ))
        }
    };
    if let Some(s) = bounds {
        report.param("bounds", source(s).as_str());
    }
    for rec in &records {
        report.push(density_row(rec));
    }
    Ok(report)
}

fn sizes(values: &[u128]) -> Value {
    Value::Array(values.iter().map(|&x| int(x)).collect())
}

fn bounds_report(
    common: &Common,
    r: u64,
    n: usize,
    choice: SourceChoice,
    log: &mut Log,
) -> CliResult<Report> {
    let def = tree(load_group(&common.group)?, "bounds")?;
    let mut report = new_report("bounds", common);
    report.param("r", r);
    report.param("n", n);
    report.columns = vec![
        "k",
        "rist_source",
        "rist_label",
        "count",
        "group_order",
        "ratio",
        "top_order",
        "level_size",
        "section_sizes",
        "upper",
        "upper_holds",
        "rist_order",
        "rist_section_sizes",
        "lower",
        "lower_holds",
        "index",
        "alpha",
        "alpha_vertex",
        "bound_alpha",
        "alpha_holds",
        "alpha_asserted",
    ];
    let has_metadata = !def.rist_decls().is_empty();
    let sources = match choice {
        SourceChoice::Finite => vec![RistSource::FiniteQuotient],
        SourceChoice::Metadata => vec![RistSource::Metadata],
        SourceChoice::Both if has_metadata => {
            vec![RistSource::FiniteQuotient, RistSource::Metadata]
        }
        SourceChoice::Both => vec![RistSource::FiniteQuotient],
    };
    report
        .summary
        .insert("metadata_available".into(), has_metadata.into());
    let cap = common.max_elements;
    for k in common.depth.clone() {
        let q = timed(
            log,
            || format!("k={k} enumerated"),
            || FiniteQuotient::enumerate(&def, k, cap),
        )?;
        for &s in &sources {
            let l = bound_ledger(&def, &q, r, n, s, cap)?;
            report.push(vec![
                k.into(),
                s.as_str().into(),
                l.rist_label.clone().into(),
                int(l.record.count),
                int(l.record.group_order),
                ratio(&l.record.ratio),
                int(l.top_order),
                l.level_size.into(),
                sizes(&l.section_sizes),
                int(l.upper),
                l.upper_holds.into(),
                int(l.rist_order),
                sizes(&l.rist_section_sizes),
                int(l.lower),
                l.lower_holds.into(),
                int(l.index),
                int(l.alpha),
                l.alpha_vertex.to_string().into(),
                opt_ratio(&l.record.bound_alpha),
                l.alpha_holds.into(),
                l.alpha_asserted.into(),
            ]);
        }
    }
    Ok(report)
}

fn rist(common: &Common, level: usize, log: &mut Log) -> CliResult<Report> {
    let def = tree(load_group(&common.group)?, "rist")?;
    let mut report = new_report("rist", common);
    report.param("level", level);
    report.columns = vec![
        "k",
        "level",
        "vertex",
        "rist_order",
        "section_order",
        "metadata_rist_order",
        "rist_level_order",
        "index",
        "level_transitive",
        "weakly_branch",
        "branch",
    ];
    let cap = common.max_elements;
    for k in common.depth.clone() {
        let q = timed(
            log,
            || format!("k={k} enumerated"),
            || FiniteQuotient::enumerate(&def, k, cap),
        )?;
        let level_rist = q.rigid_level_stabilizer(level)?;
        let index = q.index(&level_rist)?;
        let transitive = q.is_level_transitive();
        let weakly = !level_rist.is_trivial();
        for v in q.shape().vertices_at_level(level)? {
            let rv = q.rigid_stabilizer(&v)?;
            let section = section_set(rv.elements(), &v, k - level)?.len();
            let metadata = match def.rist_words(&v) {
                Some(_) => int(profinite_rist_projection(&def, &v, k, cap)?.order()),
                None => Value::Null,
            };
            report.push(vec![
                k.into(),
                level.into(),
                v.to_string().into(),
                int(rv.order()),
                section.into(),
                metadata,
                int(level_rist.order()),
                int(index),
                transitive.into(),
                weakly.into(),
                (transitive && weakly).into(),
            ]);
        }
    }
    Ok(report)
}

fn orbits(common: &Common, level: Option<usize>, log: &mut Log) -> CliResult<Report> {
    let def = tree(load_group(&common.group)?, "orbits")?;
    let mut report = new_report("orbits", common);
    if let Some(n) = level {
        report.param("level", n);
    }
    report.columns = vec!["k", "level", "orbit", "size", "members"];
    for k in common.depth.clone() {
        let q = timed(
            log,
            || format!("k={k} chain built"),
            || FiniteQuotient::stab_chain(&def, k),
        )?;
        let levels = match level {
            Some(n) => n..=n,
            None => 1..=k,
        };
        for n in levels {
            for (i, orbit) in q.orbits(n)?.iter().enumerate() {
                let members: Vec<Value> = orbit.iter().map(|v| v.to_string().into()).collect();
                report.push(vec![
                    k.into(),
                    n.into(),
                    i.into(),
                    orbit.len().into(),
                    Value::Array(members),
                ]);
            }
        }
    }
    Ok(report)
}

fn sample(
    common: &Common,
    order_cap: u64,
    count: u64,
    exact: bool,
    log: &mut Log,
) -> CliResult<Report> {
    let mut report = new_report("sample", common);
    report.param("order_cap", order_cap);
    report.param("count", count);
    report.param("exact", exact);
    report.columns = vec![
        "k",
        "order_cap",
        "samples",
        "hits",
        "estimate",
        "ci_low",
        "ci_high",
        "exact",
        "exact_f64",
        "covered",
    ];
    let cap = common.max_elements;
    let group = load_group(&common.group)?;
    if let CatalogGroup::Abstract { p } = group {
        ring_summary(&mut report, p);
    }
    for k in common.depth.clone() {
        let (est, truth): (TorsionEstimate, Option<Rational>) = timed(
            log,
            || format!("k={k}"),
            || -> CliResult<_> {
                match &group {
                    CatalogGroup::Tree(def) => {
                        let est = estimate_torsion_density(def, k, order_cap, count, common.seed)?;
                        let truth = if exact {
                            let q = FiniteQuotient::enumerate(def, k, cap)?;
                            Some(Rational::new(census_capped(&q, order_cap)?, q.order()))
                        } else {
                            None
                        };
                        Ok((est, truth))
                    }
                    CatalogGroup::Abstract { p } => {
                        let q = AbstractSemidirectQuotient::new(*p, k as u32, cap)?;
                        let est =
                            estimate_abstract_torsion_density(&q, k, order_cap, count, common.seed);
                        Ok((est, exact.then(|| q.capped_fraction(order_cap).1)))
                    }
                }
            },
        )?;
        report.push(vec![
            k.into(),
            order_cap.into(),
            est.samples.into(),
            est.hits.into(),
            float(est.estimate),
            float(est.ci_low),
            float(est.ci_high),
            opt_ratio(&truth),
            truth.map_or(Value::Null, |t| float(to_f64(&t))),
            truth.map_or(Value::Null, |t| json!(est.covers(to_f64(&t)))),
        ]);
    }
    Ok(report)
}
