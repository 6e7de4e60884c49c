//! Batch command-line front end. [`run`] returns the exit code and the text
//! to print, so the binary and the golden tests share one path.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{
    load_bundle, load_omega_chain, load_poset, load_structure, load_system, product_file,
    read_json, to_json,
};
use crate::logic::{
    classify, evaluate, parse_formula, parse_formula_with, Assignment, Budget, Formula, Term,
};
use crate::poset::{
    enumerate_filters, enumerate_prime_filters, is_prime_filter, parse_filter, point_filter,
    principal_upset_filter, Filter, Poset,
};
use crate::products::{
    appendix_transform, classical_reduced_product, filter_product, omega_prime_power,
    prime_product, random_bundle, AppendixBundle, FilterProduct,
};
use crate::structure::{enumerate_homs, find_hom, find_isomorphism, is_immersion, Hom, Structure};
use crate::systems::{hom_from_names, OrderedSystem};
use crate::verify::{
    core, hom_witnesses, is_pec, prime_power_equivalence, transfer_check,
    verify_h_inductive_persistence, verify_los, verify_los_omega,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COUNTEREXAMPLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "posmodel",
    version,
    about = "Finite-scale positive model theory workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct BudgetArgs {
    /// Largest number of connectives and quantifiers.
    #[arg(long, default_value_t = 5)]
    size: usize,
    /// Size of the variable pool.
    #[arg(long, default_value_t = 2)]
    vars: usize,
}

impl BudgetArgs {
    fn budget(self) -> Budget {
        Budget::new(self.size, self.vars)
    }
}

/// How to pick a filter over a system's index.
#[derive(Args, Debug, Clone)]
struct FilterArgs {
    /// Filter as JSON lists of index names, or a file holding them.
    #[arg(long, conflicts_with_all = ["point", "limit"])]
    filter: Option<String>,
    /// The point filter at an index point.
    #[arg(long, conflicts_with = "limit")]
    point: Option<String>,
    /// The filter of principal upsets of a chain index.
    #[arg(long)]
    limit: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a formula and print it with its syntax tree.
    Parse {
        formula: String,
        /// Structure file whose signature resolves the symbols.
        #[arg(long)]
        signature: Option<PathBuf>,
    },
    /// Report the most specific fragment of a formula.
    Classify { formula: String },
    /// Evaluate a formula in a structure.
    Eval {
        structure: PathBuf,
        formula: String,
        /// Bindings `var=element`.
        #[arg(long = "assign", value_delimiter = ',')]
        assign: Vec<String>,
    },
    /// Find or enumerate homomorphisms.
    Hom {
        source: PathBuf,
        target: PathBuf,
        /// List every homomorphism.
        #[arg(long)]
        all: bool,
        /// Stop after this many.
        #[arg(long)]
        max: Option<usize>,
    },
    /// Check whether a map reflects positive formulas within the budget.
    Immersion {
        source: PathBuf,
        target: PathBuf,
        /// The map as `u=a,v=b,...`.
        #[arg(long, value_delimiter = ',', required = true)]
        map: Vec<String>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Search for an isomorphism.
    Iso { source: PathBuf, target: PathBuf },
    /// Validate a poset file.
    PosetCheck { poset: PathBuf },
    /// List the upsets of a poset.
    Upsets { poset: PathBuf },
    /// List the filters of a poset's upset lattice.
    Filters {
        poset: PathBuf,
        #[arg(long)]
        prime: bool,
    },
    /// Build a filter product, or a classical reduced product or ultraproduct
    /// of the components over an antichain index.
    Product {
        system: PathBuf,
        #[command(flatten)]
        select: FilterArgs,
        /// Classical reduced product by the selected filter.
        #[arg(long, conflicts_with = "ultra")]
        reduced: bool,
        /// Classical ultraproduct by the principal ultrafilter at a point.
        #[arg(long)]
        ultra: Option<String>,
        /// Write the product file here instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Direct limit of an ω-chain.
    OmegaLimit { chain: PathBuf },
    /// Sweep the Positive Łoś biconditional.
    LosVerify {
        input: PathBuf,
        #[command(flatten)]
        select: FilterArgs,
        /// The input is an ω-chain; use eventual truth.
        #[arg(long)]
        omega: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Check that an h-inductive sentence persists in a prime product.
    Preserve {
        system: PathBuf,
        formula: String,
        #[command(flatten)]
        select: FilterArgs,
    },
    /// Decide positive equivalence by homomorphisms.
    Poseq {
        first: PathBuf,
        second: PathBuf,
        /// Also compare cores and print both chain presentations.
        #[arg(long)]
        cores: bool,
    },
    /// Compute the core with its retraction.
    Core { structure: PathBuf },
    /// Decide pec relative to a finite class, by both criteria.
    Pec {
        structure: PathBuf,
        /// Members of the class.
        #[arg(required = true)]
        class: Vec<PathBuf>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Transfer pec along an immersion `N -> M`.
    Transfer {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        map: Vec<String>,
        #[arg(long, required = true, num_args = 1..)]
        class: Vec<PathBuf>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Assemble an ultraproduct of chains as a prime product and verify it.
    Appendix {
        #[arg(required_unless_present = "random")]
        bundle: Option<PathBuf>,
        /// Generate this many random bundles instead.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Runs one invocation. `args` excludes the program name.
pub fn run<I, S>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv = std::iter::once("posmodel".to_string()).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return (EXIT_OK, e.to_string());
            }
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("usage error");
            return (EXIT_INPUT, format!("{line}\n"));
        }
    };
    match dispatch(cli.command) {
        Ok(out) => out,
        Err(e) => (EXIT_INPUT, format!("error: {e}\n")),
    }
}

fn formula_arg(text: &str, sig: Option<&Structure>) -> Result<Formula> {
    let r = match sig {
        Some(m) => parse_formula_with(text, m.signature()),
        None => parse_formula(text),
    };
    r.map_err(|e| Error::Input(format!("formula `{text}`: {e}")))
}

fn term_tree(t: &Term) -> String {
    t.to_string()
}

/// Prefix rendering of a formula's syntax tree.
pub fn tree(phi: &Formula) -> String {
    match phi {
        Formula::False => "falsum".into(),
        Formula::True => "verum".into(),
        Formula::Rel(..) => phi.to_string(),
        Formula::Eq(a, b) => format!("eq({}, {})", term_tree(a), term_tree(b)),
        Formula::And(a, b) => format!("and({}, {})", tree(a), tree(b)),
        Formula::Or(a, b) => format!("or({}, {})", tree(a), tree(b)),
        Formula::Implies(a, b) => format!("implies({}, {})", tree(a), tree(b)),
        Formula::Not(a) => format!("not({})", tree(a)),
        Formula::Exists(v, a) => format!("exists({v}, {})", tree(a)),
        Formula::Forall(v, a) => format!("forall({v}, {})", tree(a)),
    }
}

fn parse_map(m: &Structure, n: &Structure, pairs: &[String]) -> Result<Hom> {
    let mut map = BTreeMap::new();
    for p in pairs {
        let (a, b) = p
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("map entry `{p}` is not of the form u=a")))?;
        map.insert(a.trim().to_string(), b.trim().to_string());
    }
    hom_from_names(m, n, &map)
}

fn select_filter(sys_index: &Poset, sel: &FilterArgs) -> Result<Filter> {
    if let Some(spec) = &sel.filter {
        let lists: Vec<Vec<String>> = if Path::new(spec).is_file() {
            read_json(Path::new(spec))?
        } else {
            serde_json::from_str(spec)
                .map_err(|e| Error::Input(format!("--filter `{spec}`: {e}")))?
        };
        return parse_filter(sys_index, &lists);
    }
    if let Some(x) = &sel.point {
        return Ok(point_filter(sys_index, sys_index.element_or_err(x)?));
    }
    if sel.limit {
        return principal_upset_filter(sys_index);
    }
    Err(Error::Input(
        "choose a filter with --filter, --point or --limit".into(),
    ))
}

fn json_block(out: &mut String, json: &str) {
    out.push_str("---json---\n");
    out.push_str(json);
    out.push_str("\n---end---\n");
}

fn dispatch(cmd: Command) -> Result<(i32, String)> {
    let mut out = String::new();
    let code = match cmd {
        Command::Parse { formula, signature } => {
            let sig = signature.as_deref().map(load_structure).transpose()?;
            let phi = formula_arg(&formula, sig.as_ref())?;
            let free: Vec<String> = phi.free_vars_ordered();
            writeln!(out, "formula: {phi}").ok();
            writeln!(out, "tree: {}", tree(&phi)).ok();
            writeln!(out, "size: {}", phi.size()).ok();
            writeln!(
                out,
                "free: {}",
                if free.is_empty() {
                    "-".into()
                } else {
                    free.join(", ")
                }
            )
            .ok();
            EXIT_OK
        }
        Command::Classify { formula } => {
            let phi = formula_arg(&formula, None)?;
            writeln!(out, "{}", classify(&phi)).ok();
            EXIT_OK
        }
        Command::Eval {
            structure,
            formula,
            assign,
        } => {
            let m = load_structure(&structure)?;
            let phi = formula_arg(&formula, Some(&m))?;
            let mut alpha = Assignment::new();
            for a in &assign {
                let (v, e) = a
                    .split_once('=')
                    .ok_or_else(|| Error::Input(format!("binding `{a}` is not of the form x=a")))?;
                let el = m
                    .element(e.trim())
                    .ok_or_else(|| Error::UnknownElement(e.trim().to_string()))?;
                alpha.insert(v.trim().to_string(), el);
            }
            writeln!(out, "{}", evaluate(&m, &phi, &alpha)?).ok();
            EXIT_OK
        }
        Command::Hom {
            source,
            target,
            all,
            max,
        } => {
            let m = load_structure(&source)?;
            let n = load_structure(&target)?;
            if all || max.is_some() {
                let homs = enumerate_homs(&m, &n, max)?;
                writeln!(out, "{} homomorphisms", homs.len()).ok();
                for h in &homs {
                    writeln!(out, "{}", h.describe(&m, &n)).ok();
                }
            } else {
                match find_hom(&m, &n)? {
                    Some(h) => writeln!(out, "homomorphism: {}", h.describe(&m, &n)).ok(),
                    None => writeln!(out, "no homomorphism").ok(),
                };
            }
            EXIT_OK
        }
        Command::Immersion {
            source,
            target,
            map,
            budget,
        } => {
            let m = load_structure(&source)?;
            let n = load_structure(&target)?;
            let h = parse_map(&m, &n, &map)?;
            let r = is_immersion(&m, &n, &h, budget.budget())?;
            if r.immersion {
                writeln!(out, "immersion (budget {})", r.budget).ok();
            } else {
                writeln!(out, "not an immersion (budget {})", r.budget).ok();
            }
            if let Some(w) = &r.witness {
                let tuple: Vec<String> = w
                    .tuple
                    .iter()
                    .map(|(v, e)| format!("{v}={}", m.name(*e)))
                    .collect();
                writeln!(out, "formula: {}", w.formula).ok();
                writeln!(out, "elements: {}", tuple.join(", ")).ok();
            }
            json_block(&mut out, &to_json(&r));
            if r.immersion {
                EXIT_OK
            } else {
                EXIT_COUNTEREXAMPLE
            }
        }
        Command::Iso { source, target } => {
            let m = load_structure(&source)?;
            let n = load_structure(&target)?;
            match find_isomorphism(&m, &n)? {
                Some(h) => writeln!(out, "isomorphic: {}", h.describe(&m, &n)).ok(),
                None => writeln!(out, "not isomorphic").ok(),
            };
            EXIT_OK
        }
        Command::PosetCheck { poset } => {
            let p = load_poset(&poset)?;
            writeln!(
                out,
                "valid poset: {} elements; wellfounded forest: {}; chain: {}",
                p.len(),
                yes_no(p.is_wellfounded_forest()),
                yes_no(p.is_chain())
            )
            .ok();
            EXIT_OK
        }
        Command::Upsets { poset } => {
            let p = load_poset(&poset)?;
            let ups = p.upsets();
            writeln!(out, "{} upsets", ups.len()).ok();
            for u in ups {
                writeln!(out, "{}", p.format_set(u)).ok();
            }
            EXIT_OK
        }
        Command::Filters { poset, prime } => {
            let p = load_poset(&poset)?;
            let fs = if prime {
                enumerate_prime_filters(&p)
            } else {
                enumerate_filters(&p)
            };
            let labels: Vec<String> = fs.iter().map(|f| f.label(&p)).collect();
            writeln!(
                out,
                "{} {}filters: {}",
                fs.len(),
                if prime { "prime " } else { "" },
                labels.join(", ")
            )
            .ok();
            for f in &fs {
                writeln!(out, "{}: {}", f.label(&p), f.format(&p)).ok();
            }
            EXIT_OK
        }
        Command::Product {
            system,
            select,
            reduced,
            ultra,
            out: dest,
        } => {
            let sys = load_system(&system)?;
            let (summary, json) = if reduced || ultra.is_some() {
                classical(&sys, &select, ultra.as_deref())?
            } else {
                let f = select_filter(sys.index(), &select)?;
                let fp = best_product(&sys, &f)?;
                let summary = format!(
                    "product: {} elements over {} ({})",
                    fp.len(),
                    f.label(sys.index()),
                    if fp.is_prime() { "prime" } else { "not prime" }
                );
                (summary, to_json(&product_file(&fp)))
            };
            writeln!(out, "{summary}").ok();
            match dest {
                Some(path) => {
                    fs::write(&path, format!("{json}\n")).map_err(|e| {
                        Error::Input(format!("{}: cannot write: {e}", path.display()))
                    })?;
                    writeln!(out, "written to {}", path.display()).ok();
                }
                None => json_block(&mut out, &json),
            }
            EXIT_OK
        }
        Command::OmegaLimit { chain } => {
            let ch = load_omega_chain(&chain)?;
            let view = omega_prime_power(&ch)?;
            let c = &view.colimit;
            writeln!(
                out,
                "colimit: {} elements (cycle start {}, period {})",
                c.structure.len(),
                c.cycle_start,
                c.period
            )
            .ok();
            json_block(&mut out, &to_json(&c.structure.to_raw()));
            EXIT_OK
        }
        Command::LosVerify {
            input,
            select,
            omega,
            budget,
        } => {
            let r = if omega {
                let ch = load_omega_chain(&input)?;
                verify_los_omega(&omega_prime_power(&ch)?, budget.budget())?
            } else {
                let sys = load_system(&input)?;
                let f = select_filter(sys.index(), &select)?;
                let fp = best_product(&sys, &f)?;
                verify_los(&fp, budget.budget())?
            };
            out.push_str(&r.render());
            report_code(r.holds())
        }
        Command::Preserve {
            system,
            formula,
            select,
        } => {
            let sys = load_system(&system)?;
            let phi = formula_arg(&formula, Some(sys.structure(0)))?;
            let f = select_filter(sys.index(), &select)?;
            let r = verify_h_inductive_persistence(&sys, &f, &phi)?;
            out.push_str(&r.render());
            report_code(r.holds())
        }
        Command::Poseq {
            first,
            second,
            cores,
        } => {
            let m = load_structure(&first)?;
            let n = load_structure(&second)?;
            let (mn, nm) = hom_witnesses(&m, &n)?;
            match (&mn, &nm) {
                (Some(f), Some(g)) => writeln!(
                    out,
                    "positively equivalent (hom witnesses: {}; {})",
                    f.describe(&m, &n),
                    g.describe(&n, &m)
                ),
                (None, _) => writeln!(
                    out,
                    "not positively equivalent (no homomorphism {} -> {})",
                    first.display(),
                    second.display()
                ),
                (_, None) => writeln!(
                    out,
                    "not positively equivalent (no homomorphism {} -> {})",
                    second.display(),
                    first.display()
                ),
            }
            .ok();
            writeln!(
                out,
                "note: finite structures are isomorphic to their ultrapowers, so positive \
                 theories compare by homomorphisms"
            )
            .ok();
            if cores {
                let ppe = prime_power_equivalence(&m, &n)?;
                writeln!(
                    out,
                    "core of {}: {} elements; core of {}: {} elements",
                    first.display(),
                    ppe.core_m.structure.len(),
                    second.display(),
                    ppe.core_n.structure.len()
                )
                .ok();
                if let Some(iso) = &ppe.iso {
                    writeln!(
                        out,
                        "common prime power: {}",
                        iso.describe(&ppe.core_m.structure, &ppe.core_n.structure)
                    )
                    .ok();
                    writeln!(
                        out,
                        "chain over {}: e = {}",
                        first.display(),
                        ppe.core_m.endo.describe(&m, &m)
                    )
                    .ok();
                    writeln!(
                        out,
                        "chain over {}: e = {}",
                        second.display(),
                        ppe.core_n.endo.describe(&n, &n)
                    )
                    .ok();
                }
                out.push_str(&ppe.report.render());
                return Ok((report_code(ppe.report.holds()), out));
            }
            EXIT_OK
        }
        Command::Core { structure } => {
            let m = load_structure(&structure)?;
            let c = core(&m)?;
            writeln!(out, "core: {} elements", c.structure.len()).ok();
            writeln!(
                out,
                "retraction: {}",
                c.retraction.describe(&m, &c.structure)
            )
            .ok();
            writeln!(out, "idempotent endomorphism: {}", c.endo.describe(&m, &m)).ok();
            json_block(&mut out, &to_json(&c.structure.to_raw()));
            EXIT_OK
        }
        Command::Pec {
            structure,
            class,
            budget,
        } => {
            let m = load_structure(&structure)?;
            let k = class
                .iter()
                .map(|p| load_structure(p))
                .collect::<Result<Vec<_>>>()?;
            let r = is_pec(&m, &k, budget.budget())?.to_report(&m, &k);
            out.push_str(&r.render());
            report_code(r.holds())
        }
        Command::Transfer {
            source,
            target,
            map,
            class,
            budget,
        } => {
            let n = load_structure(&source)?;
            let m = load_structure(&target)?;
            let f = parse_map(&n, &m, &map)?;
            let k = class
                .iter()
                .map(|p| load_structure(p))
                .collect::<Result<Vec<_>>>()?;
            let r = transfer_check(&n, &m, &f, &k, budget.budget())?;
            out.push_str(&r.render());
            report_code(r.holds())
        }
        Command::Appendix {
            bundle,
            random,
            seed,
        } => {
            let mut all_ok = true;
            if let Some(count) = random {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for k in 0..count {
                    let (chains, u) = random_bundle(&mut rng, 3, 3, 3)?;
                    let b = appendix_transform(&chains, &u)?;
                    all_ok &= b.verified();
                    writeln!(out, "bundle {k}: {}", bundle_line(&b)).ok();
                }
                writeln!(
                    out,
                    "{count} bundles (seed {seed}): {}",
                    if all_ok { "all verified" } else { "failures" }
                )
                .ok();
            } else if let Some(path) = bundle {
                let (chains, u) = load_bundle(&path)?;
                let b = appendix_transform(&chains, &u)
                    .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
                all_ok = b.verified();
                writeln!(out, "{}", bundle_line(&b)).ok();
                json_block(&mut out, &to_json(&b.to_raw()));
            }
            report_code(all_ok)
        }
    };
    Ok((code, out))
}

/// The prime product when the filter is prime, else the filter product.
fn best_product(sys: &OrderedSystem, f: &Filter) -> Result<FilterProduct> {
    if is_prime_filter(sys.index(), f.members())? {
        prime_product(sys, f)
    } else {
        filter_product(sys, f)
    }
}

fn bundle_line(b: &AppendixBundle) -> String {
    format!(
        "{} chains, {} index points, ultraproduct {} elements, prime product {} elements: {}",
        b.chains.len(),
        b.system.index().len(),
        b.ultraproduct.structure.len(),
        b.product.len(),
        if b.verified() {
            "ĝ verified isomorphism".to_string()
        } else {
            format!("verification failed {:?}", b.checks)
        }
    )
}

fn classical(
    sys: &OrderedSystem,
    select: &FilterArgs,
    ultra: Option<&str>,
) -> Result<(String, String)> {
    let idx = sys.index();
    if (0..idx.len()).any(|x| idx.up_of(x).count_ones() > 1) {
        return Err(Error::Precondition(
            "classical products need an antichain index".into(),
        ));
    }
    let f = match ultra {
        Some(x) => point_filter(idx, idx.element_or_err(x)?),
        None => select_filter(idx, select)?,
    };
    let m = classical_reduced_product(sys.structures(), f.members())?;
    let summary = format!(
        "{}: {} elements over {}",
        if ultra.is_some() {
            "ultraproduct"
        } else {
            "reduced product"
        },
        m.len(),
        f.label(idx)
    );
    Ok((summary, to_json(&m.to_raw())))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn report_code(holds: bool) -> i32 {
    if holds {
        EXIT_OK
    } else {
        EXIT_COUNTEREXAMPLE
    }
}
