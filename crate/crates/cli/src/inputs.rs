//! Named systems, points and measures given on the command line.

use std::path::{Path, PathBuf};

use shadowtrace::construct::{dense_shadowable_example, extension_builder, fig1_circle, SubstitutionSubshift};
use shadowtrace::measure::{periodic_orbit_measure, EmpiricalMeasure};
use shadowtrace::rational::{self, rat};
use shadowtrace::space::symbolic::decode_word;
use shadowtrace::{Error, Rational, Result, SymbolicPoint, SymbolicSystem, System, SystemPoint};

pub const CACHE_ENV: &str = "SHADOWTRACE_CACHE_DIR";

/// Builds a named system: `fullshift:K`, `goldenmean`, `fig1:N`,
/// `example33:N[:BASE]`, `extension:N`.
pub fn named_system(name: &str) -> Result<Option<System>> {
    let mut parts = name.split(':');
    let head = parts.next().unwrap_or_default();
    let args: Vec<usize> = parts
        .map(|p| p.parse().map_err(|_| Error::Parse(format!("bad system parameter {p:?} in {name:?}"))))
        .collect::<Result<_>>()?;
    let arg = |i: usize, default: usize| args.get(i).copied().unwrap_or(default);
    let sys = match head {
        "fullshift" => SymbolicSystem::full_shift(arg(0, 2) as u8)?.into(),
        "goldenmean" => SymbolicSystem::golden_mean().into(),
        "fig1" => fig1_circle(arg(0, 360))?.into(),
        "example33" => dense_shadowable_example(arg(0, 12), arg(1, 200))?.system.into(),
        "extension" => extension_builder(&SubstitutionSubshift::fibonacci(20_000), arg(0, 4))?.layered.system.into(),
        _ => return Ok(None),
    };
    Ok(Some(sys))
}

fn cache_path(name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    Some(Path::new(&dir).join(format!("{}.json", name.replace(':', "_"))))
}

/// A named system (cached as JSON when the cache directory is set) or a
/// system file.
pub fn load_system(source: &str) -> Result<System> {
    if let Some(path) = cache_path(source) {
        if path.exists() {
            return System::load(&path);
        }
    }
    if let Some(sys) = named_system(source)? {
        if let Some(path) = cache_path(source) {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, sys.to_json())?;
        }
        return Ok(sys);
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(Error::InvalidArgument(format!("{source:?} is neither a known system name nor a file")));
    }
    System::load(path)
}

/// A net index, or a symbolic point `PERIOD` / `PRE|PERIOD` with the first
/// symbol at coordinate 0 and the period repeated to both sides.
pub fn parse_point(system: &System, s: &str) -> Result<SystemPoint> {
    let p = match system {
        System::Net(n) => {
            let i: usize = s
                .trim_start_matches('#')
                .parse()
                .map_err(|_| Error::Parse(format!("bad net point {s:?}")))?;
            if i >= n.len() {
                return Err(Error::ForeignPoint(s.to_string()));
            }
            SystemPoint::Net(i)
        }
        System::Symbolic(sys) => {
            let (pre, per) = s.split_once('|').unwrap_or(("", s));
            let pt = SymbolicPoint::new(sys.alphabet_size(), 0, decode_word(pre)?, decode_word(per)?, 0)?;
            SystemPoint::Symbolic(pt)
        }
    };
    system.check_point(&p)?;
    Ok(p)
}

/// `[w@]POINT,[w@]POINT,…`: a combination of periodic-orbit measures;
/// missing weights share the remaining mass equally. A path to a JSON
/// measure file is accepted as well.
pub fn parse_measure(system: &System, s: &str) -> Result<EmpiricalMeasure> {
    let path = Path::new(s);
    if path.extension().is_some_and(|e| e == "json") {
        let m: EmpiricalMeasure = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        m.check(system)?;
        return Ok(m);
    }
    let items: Vec<(Option<Rational>, &str)> = s
        .split(',')
        .map(|item| match item.split_once('@') {
            Some((w, p)) => Ok((Some(rational::parse(w)?), p)),
            None => Ok((None, item)),
        })
        .collect::<Result<_>>()?;
    let given: Rational = items.iter().filter_map(|(w, _)| w.clone()).sum();
    let free = items.iter().filter(|(w, _)| w.is_none()).count();
    let share = if free == 0 { rat(0, 1) } else { (rat(1, 1) - given) / rational::int(free as i64) };
    let parts = items
        .into_iter()
        .map(|(w, p)| Ok((w.unwrap_or_else(|| share.clone()), periodic_orbit_measure(system, &parse_point(system, p)?)?)))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::combine(&parts)
}

/// `A..B` (inclusive) or a comma list.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Parse(format!("bad range {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.parse().map_err(|_| bad())?;
        let b: usize = b.trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

pub fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}
