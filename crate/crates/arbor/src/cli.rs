//! Command-line definitions.

use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "arbor",
    version,
    about = "Finite quotients and torsion censuses of groups acting on rooted trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orders of the finite quotients π_k(G).
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Repr::Enumerated)]
        repr: Repr,
    },
    /// Exact torsion densities #P_{r,n}(k) / |π_k|, or capped densities.
    Density {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        census: Census,
        /// Truncation level of the P_{r,n} census.
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Fill the bound columns using this rigid stabilizer source.
        #[arg(long, value_enum)]
        bounds: Option<Source>,
    },
    /// Upper, lower and α(n) bounds for #P_{r,n}(k).
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        r: u64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long = "rist-source", value_enum, default_value_t = SourceChoice::Both)]
        rist_source: SourceChoice,
    },
    /// Rigid vertex and level stabilizers of π_k(G).
    Rist {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Orbits of π_k(G) on the levels of the tree.
    Orbits {
        #[command(flatten)]
        common: Common,
        /// Only this level; all levels 1..=k otherwise.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Monte-Carlo estimate of the fraction of elements of order at most the cap.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long = "order-cap", visible_alias = "cap", default_value_t = 2)]
        order_cap: u64,
        #[arg(long, default_value_t = 10_000)]
        count: u64,
        /// Also compute the exact fraction by enumeration.
        #[arg(long)]
        exact: bool,
    },
    /// Print the `.ssg` definition of a group.
    Export {
        group: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// List the built-in groups.
    List,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Catalog name or path to a `.ssg` file.
    pub group: String,
    /// A depth `N` or an inclusive range `A..B`.
    #[arg(long, short = 'k', value_parser = parse_depths)]
    pub depth: RangeInclusive<usize>,
    #[arg(long, default_value_t = arbor_core::DEFAULT_SEED)]
    pub seed: u64,
    /// Largest quotient that may be enumerated.
    #[arg(
        long = "max-elements",
        env = "ARBOR_MAX_ELEMENTS",
        default_value_t = arbor_core::DEFAULT_ELEMENT_CAP
    )]
    pub max_elements: u64,
    /// Worker threads for censuses; the result does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Census {
    /// Element order for the P_{r,n} census.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub r: Option<u64>,
    /// Count elements of order at most this value instead.
    #[arg(long = "order-cap", value_parser = clap::value_parser!(u64).range(1..))]
    pub order_cap: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Repr {
    Enumerated,
    StabChain,
    /// Both, checked against each other.
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Finite,
    Metadata,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SourceChoice {
    Finite,
    Metadata,
    Both,
}

pub fn parse_depths(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("`{t}` is not a depth"))
    };
    let range = match s.split_once("..") {
        Some((a, b)) => num(a)?..=num(b.strip_prefix('=').unwrap_or(b))?,
        None => {
            let k = num(s)?;
            k..=k
        }
    };
    if range.is_empty() || *range.start() == 0 {
        return Err(format!("`{s}` is not a nonempty range of positive depths"));
    }
    Ok(range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn depth_syntax() {
        assert_eq!(parse_depths("4"), Ok(4..=4));
        assert_eq!(parse_depths("1..5"), Ok(1..=5));
        assert_eq!(parse_depths("2..=3"), Ok(2..=3));
        assert!(parse_depths("0").is_err());
        assert!(parse_depths("3..1").is_err());
        assert!(parse_depths("x").is_err());
    }

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
