//! Run configuration: a TOML file with `[molecule]`, `[parameterization]`,
//! `[fragments]`, `[optimizer]`, `[output]` and, for scans, `[scan]`.
//! Every error names the key it is about.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use toml::{Table, Value};

use dmetgeo::co_optimizer::{CoOptConfig, GradientMode, ScanAxis, ScanMode, FCI_MAX_SPIN_ORBITALS, MIN_BOND_LENGTH};
use dmetgeo::dmet::projected_embedding_qubits;
use dmetgeo::geometry::{element_symbol, parse_xyz, GeometryParameterization, Molecule, SphericalAttachment};
use dmetgeo::integrals::sto3g_function_count;
use dmetgeo::simulator::MAX_QUBITS;
use dmetgeo::vqe_engine::OptimizerConfig;

/// A problem with one configuration key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { key: key.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // one line, whatever the underlying message looked like
        let msg = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "{}: {msg}", self.key)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    CoOpt,
    Nested,
    Scan,
    SinglePoint,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::CoOpt => "co-opt",
            Method::Nested => "nested",
            Method::Scan => "scan",
            Method::SinglePoint => "single-point",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Method::CoOpt, Method::Nested, Method::Scan, Method::SinglePoint].into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParameterizationSpec {
    Cartesian,
    BondChain { chain: Option<Vec<usize>>, gap_order: Option<Vec<usize>> },
    SphericalAttachment { axis_atoms: (usize, usize), attachments: Vec<(usize, usize)>, shared: bool, aux: Option<[f64; 3]> },
    RigidRotation { pivot: usize, group: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub mode: ScanMode,
    pub axes: Vec<ScanAxis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub molecule_path: PathBuf,
    pub charge: i32,
    pub parameterization: ParameterizationSpec,
    /// Starting x; the reference geometry's parameters when absent.
    pub initial: Option<Vec<f64>>,
    pub fragments: Option<Vec<Vec<usize>>>,
    pub method: Method,
    pub co_opt: CoOptConfig,
    pub vqe: OptimizerConfig,
    pub output_dir: PathBuf,
    pub integral_cache: Option<PathBuf>,
    pub scan: Option<ScanSpec>,
}

/// Typed access to one section, producing `section.key` in errors.
struct Section<'a> {
    name: String,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn of(root: &'a Table, name: &str) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(ConfigError::new(name, "must be a section")),
        };
        Ok(Section { name: name.to_string(), table })
    }

    fn present(&self) -> bool {
        self.table.is_some()
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn err(&self, k: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::new(self.key(k), msg)
    }

    fn get(&self, k: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(k))
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(self.err(k, format!("unknown key (expected one of: {})", allowed.join(", "))));
            }
        }
        Ok(())
    }

    fn string(&self, k: &str) -> Result<Option<&'a str>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(self.err(k, "expected a string")),
        }
    }

    fn require<T>(&self, k: &str, v: Result<Option<T>>) -> Result<T> {
        v?.ok_or_else(|| self.err(k, "required key is missing"))
    }

    fn float(&self, k: &str) -> Result<Option<f64>> {
        match self.get(k) {
            None => Ok(None),
            Some(v) => number(v).map(Some).ok_or_else(|| self.err(k, "expected a number")),
        }
    }

    fn positive(&self, k: &str) -> Result<Option<f64>> {
        match self.float(k)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(self.err(k, format!("must be positive and finite, got {v}"))),
            v => Ok(v),
        }
    }

    fn uint(&self, k: &str) -> Result<Option<usize>> {
        match self.get(k) {
            None => Ok(None),
            Some(v) => index(v).map(Some).ok_or_else(|| self.err(k, "expected a non-negative integer")),
        }
    }

    fn count(&self, k: &str) -> Result<Option<usize>> {
        match self.uint(k)? {
            Some(0) => Err(self.err(k, "must be at least 1")),
            v => Ok(v),
        }
    }

    fn boolean(&self, k: &str) -> Result<Option<bool>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(self.err(k, "expected true or false")),
        }
    }

    fn list<T>(&self, k: &str, item: impl Fn(&Value) -> Option<T>, what: &str) -> Result<Option<Vec<T>>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| item(v).ok_or_else(|| self.err(k, format!("expected a list of {what}"))))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(self.err(k, format!("expected a list of {what}"))),
        }
    }

    fn indices(&self, k: &str) -> Result<Option<Vec<usize>>> {
        self.list(k, index, "atom indices")
    }

    fn floats(&self, k: &str) -> Result<Option<Vec<f64>>> {
        self.list(k, number, "numbers")
    }

    fn index_lists(&self, k: &str) -> Result<Option<Vec<Vec<usize>>>> {
        self.list(
            k,
            |v| v.as_array().and_then(|a| a.iter().map(index).collect::<Option<Vec<_>>>()),
            "lists of atom indices",
        )
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn index(v: &Value) -> Option<usize> {
    v.as_integer().and_then(|i| usize::try_from(i).ok())
}

const SECTIONS: [&str; 6] = ["molecule", "parameterization", "fragments", "optimizer", "output", "scan"];

impl RunConfig {
    /// Read and parse a configuration file. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| {
            let key = e.span().map(|s| format!("config (byte {})", s.start)).unwrap_or_else(|| "config".into());
            ConfigError::new(key, format!("malformed TOML: {}", e.message()))
        })?;
        if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(ConfigError::new(k.clone(), format!("unknown section (expected one of: {})", SECTIONS.join(", "))));
        }
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        let m = Section::of(&root, "molecule")?;
        if !m.present() {
            return Err(ConfigError::new("molecule", "section is required"));
        }
        m.only(&["xyz", "charge"])?;
        let molecule_path = resolve(m.require("xyz", m.string("xyz"))?);
        let charge = match m.get("charge") {
            None => 0,
            Some(v) => v
                .as_integer()
                .and_then(|c| i32::try_from(c).ok())
                .ok_or_else(|| m.err("charge", "expected an integer"))?,
        };

        let p = Section::of(&root, "parameterization")?;
        if !p.present() {
            return Err(ConfigError::new("parameterization", "section is required"));
        }
        let kind = p.require("kind", p.string("kind"))?;
        let parameterization = match kind {
            "cartesian" => {
                p.only(&["kind", "initial"])?;
                ParameterizationSpec::Cartesian
            }
            "bond-chain" => {
                p.only(&["kind", "initial", "chain", "gap_order"])?;
                ParameterizationSpec::BondChain { chain: p.indices("chain")?, gap_order: p.indices("gap_order")? }
            }
            "spherical-attachment" => {
                p.only(&["kind", "initial", "axis_atoms", "attachments", "shared", "aux"])?;
                let axis = p.require("axis_atoms", p.indices("axis_atoms"))?;
                let [a, b] = axis[..] else {
                    return Err(p.err("axis_atoms", "expected exactly two atom indices"));
                };
                let attachments = p
                    .require("attachments", p.index_lists("attachments"))?
                    .into_iter()
                    .map(|pair| match pair[..] {
                        [child, parent] => Ok((child, parent)),
                        _ => Err(p.err("attachments", "each attachment is [child, parent]")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let aux = match p.floats("aux")? {
                    None => None,
                    Some(v) => Some(<[f64; 3]>::try_from(v).map_err(|_| p.err("aux", "expected three numbers"))?),
                };
                ParameterizationSpec::SphericalAttachment {
                    axis_atoms: (a, b),
                    attachments,
                    shared: p.boolean("shared")?.unwrap_or(true),
                    aux,
                }
            }
            "rigid-rotation" => {
                p.only(&["kind", "initial", "pivot", "group"])?;
                ParameterizationSpec::RigidRotation {
                    pivot: p.require("pivot", p.uint("pivot"))?,
                    group: p.require("group", p.indices("group"))?,
                }
            }
            other => {
                return Err(p.err(
                    "kind",
                    format!("unknown kind '{other}' (expected cartesian, bond-chain, spherical-attachment or rigid-rotation)"),
                ))
            }
        };
        let initial = p.floats("initial")?;

        let f = Section::of(&root, "fragments")?;
        f.only(&["atoms"])?;
        let fragments = if f.present() { Some(f.require("atoms", f.index_lists("atoms"))?) } else { None };

        let o = Section::of(&root, "optimizer")?;
        if !o.present() {
            return Err(ConfigError::new("optimizer", "section is required"));
        }
        o.only(&[
            "method",
            "theta_steps_per_x_step",
            "x_learning_rate",
            "x_gradient_step",
            "max_outer_iterations",
            "gradient_threshold",
            "energy_threshold",
            "bond_cap",
            "gradient_mode",
            "vqe_learning_rate",
            "vqe_max_iterations",
            "vqe_gradient_tolerance",
            "vqe_energy_tolerance",
        ])?;
        let method_name = o.require("method", o.string("method"))?;
        let method = Method::parse(method_name).ok_or_else(|| {
            o.err("method", format!("unknown method '{method_name}' (expected co-opt, nested, scan or single-point)"))
        })?;
        let d = CoOptConfig::default();
        let gradient_mode = match o.string("gradient_mode")? {
            None | Some("frozen-rdm") => GradientMode::FrozenRdm,
            Some("full-finite-difference") => GradientMode::FullFiniteDifference,
            Some(other) => {
                return Err(o.err(
                    "gradient_mode",
                    format!("unknown mode '{other}' (expected frozen-rdm or full-finite-difference)"),
                ))
            }
        };
        let bond_cap = o.positive("bond_cap")?.unwrap_or(d.bond_cap);
        if bond_cap <= MIN_BOND_LENGTH {
            return Err(o.err("bond_cap", format!("must exceed {MIN_BOND_LENGTH} Å")));
        }
        let co_opt = CoOptConfig {
            theta_steps_per_x_step: o.count("theta_steps_per_x_step")?.unwrap_or(d.theta_steps_per_x_step),
            x_learning_rate: o.positive("x_learning_rate")?.unwrap_or(d.x_learning_rate),
            x_gradient_step: o.positive("x_gradient_step")?.unwrap_or(d.x_gradient_step),
            max_outer_iterations: o.count("max_outer_iterations")?.unwrap_or(d.max_outer_iterations),
            gradient_threshold: o.positive("gradient_threshold")?.unwrap_or(d.gradient_threshold),
            energy_threshold: o.positive("energy_threshold")?.unwrap_or(d.energy_threshold),
            bond_cap,
            gradient_mode,
        };
        let v = OptimizerConfig::default();
        let vqe = OptimizerConfig {
            learning_rate: o.positive("vqe_learning_rate")?.unwrap_or(v.learning_rate),
            max_iterations: o.count("vqe_max_iterations")?.unwrap_or(v.max_iterations),
            gradient_tolerance: o.positive("vqe_gradient_tolerance")?.unwrap_or(v.gradient_tolerance),
            energy_tolerance: o.positive("vqe_energy_tolerance")?.unwrap_or(v.energy_tolerance),
        };

        let out = Section::of(&root, "output")?;
        if !out.present() {
            return Err(ConfigError::new("output", "section is required"));
        }
        out.only(&["dir", "integral_cache"])?;
        let output_dir = resolve(out.require("dir", out.string("dir"))?);
        let integral_cache = out.string("integral_cache")?.map(resolve);

        let s = Section::of(&root, "scan")?;
        let scan = if s.present() { Some(parse_scan(&s)?) } else { None };

        let cfg = RunConfig {
            molecule_path,
            charge,
            parameterization,
            initial,
            fragments,
            method,
            co_opt,
            vqe,
            output_dir,
            integral_cache,
            scan,
        };
        cfg.check_required(method)?;
        Ok(cfg)
    }

    /// Sections the given method cannot run without.
    pub fn check_required(&self, method: Method) -> Result<()> {
        let scan_needs_fragments = matches!(&self.scan, Some(s) if s.mode == ScanMode::DmetVqe);
        if method == Method::Scan && self.scan.is_none() {
            return Err(ConfigError::new("scan", "section is required for scans"));
        }
        let needs_fragments = match method {
            Method::Scan => scan_needs_fragments,
            _ => true,
        };
        if needs_fragments && self.fragments.is_none() {
            return Err(ConfigError::new("fragments", format!("section is required for method {}", method.name())));
        }
        Ok(())
    }
}

fn parse_scan(s: &Section<'_>) -> Result<ScanSpec> {
    s.only(&["mode", "axis"])?;
    let mode = match s.require("mode", s.string("mode"))? {
        "fci" => ScanMode::Fci,
        "dmet-vqe" => ScanMode::DmetVqe,
        other => return Err(s.err("mode", format!("unknown mode '{other}' (expected fci or dmet-vqe)"))),
    };
    let tables = match s.get("axis") {
        Some(Value::Array(a)) if !a.is_empty() && a.len() <= 2 => a,
        Some(Value::Array(_)) => return Err(s.err("axis", "a scan needs one or two [[scan.axis]] tables")),
        Some(_) => return Err(s.err("axis", "expected [[scan.axis]] tables")),
        None => return Err(s.err("axis", "required key is missing")),
    };
    let mut axes = Vec::new();
    for (i, t) in tables.iter().enumerate() {
        let Value::Table(t) = t else {
            return Err(s.err("axis", "expected [[scan.axis]] tables"));
        };
        let a = Section { name: format!("scan.axis[{i}]"), table: Some(t) };
        a.only(&["parameters", "start", "stop", "count"])?;
        let parameters = a.require("parameters", a.indices("parameters"))?;
        if parameters.is_empty() {
            return Err(a.err("parameters", "list at least one parameter index"));
        }
        let start = a.require("start", a.float("start"))?;
        let stop = a.require("stop", a.float("stop"))?;
        if !start.is_finite() || !stop.is_finite() {
            return Err(a.err("start", "scan bounds must be finite"));
        }
        let count = a.require("count", a.count("count"))?;
        axes.push(ScanAxis { parameters, start, stop, count });
    }
    Ok(ScanSpec { mode, axes })
}

/// Molecule, parameterization and starting point built from a config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub molecule: Molecule,
    pub param: GeometryParameterization,
    pub x0: Vec<f64>,
}

impl Prepared {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let text = std::fs::read_to_string(&cfg.molecule_path)
            .map_err(|e| ConfigError::new("molecule.xyz", format!("cannot read {}: {e}", cfg.molecule_path.display())))?;
        let parsed = parse_xyz(&text).map_err(|e| ConfigError::new("molecule.xyz", e.to_string()))?;
        let molecule = Molecule::new(parsed.atoms().to_vec(), cfg.charge)
            .map_err(|e| ConfigError::new("molecule.charge", e.to_string()))?;
        let key = "parameterization.kind";
        let built = match &cfg.parameterization {
            ParameterizationSpec::Cartesian => GeometryParameterization::cartesian(molecule.clone()),
            ParameterizationSpec::BondChain { chain, gap_order } => {
                GeometryParameterization::bond_chain(molecule.clone(), chain.clone(), gap_order.clone())
            }
            ParameterizationSpec::SphericalAttachment { axis_atoms, attachments, shared, aux } => {
                GeometryParameterization::spherical_attachment(
                    molecule.clone(),
                    *axis_atoms,
                    attachments.iter().map(|&(child, parent)| SphericalAttachment { child, parent }).collect(),
                    *shared,
                    aux.map(Vector3::from),
                )
            }
            ParameterizationSpec::RigidRotation { pivot, group } => {
                GeometryParameterization::rigid_group_rotation(molecule.clone(), *pivot, group.clone())
            }
        };
        let param = built.map_err(|e| ConfigError::new(key, e.to_string()))?;
        let x0 = match &cfg.initial {
            None => param.reference_parameters().to_vec(),
            Some(x) if x.len() != param.len() => {
                return Err(ConfigError::new(
                    "parameterization.initial",
                    format!("expected {} values ({}), got {}", param.len(), param.parameter_names().join(", "), x.len()),
                ))
            }
            Some(x) => x.clone(),
        };
        param.apply(&x0).map_err(|e| ConfigError::new("parameterization.initial", e.to_string()))?;
        Ok(Prepared { molecule, param, x0 })
    }

    /// Spatial orbitals per atom in STO-3G.
    pub fn orbitals_per_atom(&self) -> Result<Vec<usize>> {
        self.molecule
            .atoms()
            .iter()
            .map(|a| {
                sto3g_function_count(a.atomic_number).ok_or_else(|| {
                    ConfigError::new(
                        "molecule.xyz",
                        format!("no STO-3G basis for {}", element_symbol(a.atomic_number).unwrap_or("?")),
                    )
                })
            })
            .collect()
    }
}

/// Projected size of one fragment's embedded problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentReport {
    pub atoms: Vec<usize>,
    pub label: String,
    pub orbitals: usize,
    pub qubits: usize,
}

/// Everything `validate` knows without running a solve.
#[derive(Debug, Clone)]
pub struct Report {
    pub lines: Vec<String>,
    pub problems: Vec<ConfigError>,
    pub qubits_full: Option<usize>,
    pub fragments: Vec<FragmentReport>,
}

impl Report {
    pub fn qubits_embedded_max(&self) -> Option<usize> {
        self.fragments.iter().map(|f| f.qubits).max()
    }
}

/// Semantic checks that do not stop at the first problem: fragment cover,
/// qubit cap, electron parity, scan axes.
pub fn inspect(cfg: &RunConfig, prep: &Prepared, method: Method) -> Report {
    let mut lines = Vec::new();
    let mut problems = Vec::new();
    let mol = &prep.molecule;
    let n_atoms = mol.len();
    let per_atom = match prep.orbitals_per_atom() {
        Ok(v) => v,
        Err(e) => {
            problems.push(e);
            return Report { lines, problems, qubits_full: None, fragments: Vec::new() };
        }
    };
    let l_total: usize = per_atom.iter().sum();
    let n_el = mol.n_electrons();
    lines.push(format!(
        "molecule: {n_atoms} atoms, {n_el} electrons, {l_total} orbitals, {} qubits",
        2 * l_total
    ));
    if n_el % 2 == 1 {
        problems.push(ConfigError::new("molecule.charge", format!("{n_el} electrons; a closed shell is required")));
    }
    if n_el > 2 * l_total {
        problems.push(ConfigError::new("molecule.charge", format!("{n_el} electrons do not fit in {l_total} orbitals")));
    }
    lines.push(format!(
        "parameterization: {} with {} parameters [{}], x0 = {:?}",
        prep.param.kind_name(),
        prep.param.len(),
        prep.param.parameter_names().join(", "),
        prep.x0
    ));
    lines.push(format!("method: {}", method.name()));

    let mut reports = Vec::new();
    if let Some(frags) = &cfg.fragments {
        let key = "fragments.atoms";
        let mut owner: Vec<Option<usize>> = vec![None; n_atoms];
        if frags.is_empty() {
            problems.push(ConfigError::new(key, "no fragments listed"));
        }
        for (k, f) in frags.iter().enumerate() {
            if f.is_empty() {
                problems.push(ConfigError::new(key, format!("fragment {k} is empty")));
            }
            for &a in f {
                if a >= n_atoms {
                    problems.push(ConfigError::new(key, format!("fragment {k} lists atom {a}, molecule has {n_atoms}")));
                    continue;
                }
                match owner[a] {
                    Some(j) if j == k => {
                        problems.push(ConfigError::new(key, format!("fragment {k} lists atom {a} twice")))
                    }
                    Some(j) => problems.push(ConfigError::new(key, format!("fragments {j} and {k} overlap on atom {a}"))),
                    None => owner[a] = Some(k),
                }
            }
        }
        let uncovered: Vec<usize> = (0..n_atoms).filter(|&a| owner[a].is_none()).collect();
        if !uncovered.is_empty() {
            problems.push(ConfigError::new(key, format!("atoms {uncovered:?} belong to no fragment")));
        }
        lines.push(format!("fragments: {}", frags.len()));
        for (k, f) in frags.iter().enumerate() {
            let valid: Vec<usize> = f.iter().copied().filter(|&a| a < n_atoms).collect();
            let orbitals: usize = valid.iter().map(|&a| per_atom[a]).sum();
            let qubits = projected_embedding_qubits(orbitals, l_total, n_el / 2);
            let label = valid
                .iter()
                .map(|&a| format!("{}{a}", element_symbol(mol.atoms()[a].atomic_number).unwrap_or("?")))
                .collect::<Vec<_>>()
                .join("+");
            lines.push(format!("  fragment {k} {label}: {orbitals} orbitals, {qubits} qubits"));
            if qubits > MAX_QUBITS {
                problems.push(ConfigError::new(
                    key,
                    format!("fragment {k} ({label}) projects to {qubits} qubits, above the {MAX_QUBITS}-qubit simulator cap"),
                ));
            }
            reports.push(FragmentReport { atoms: f.clone(), label, orbitals, qubits });
        }
        if let Some(max) = reports.iter().map(|r| r.qubits).max() {
            lines.push(format!("qubits: {} full, {max} largest embedded", 2 * l_total));
        }
    }

    if let Some(scan) = &cfg.scan {
        for (i, a) in scan.axes.iter().enumerate() {
            if let Some(&p) = a.parameters.iter().find(|&&p| p >= prep.param.len()) {
                problems.push(ConfigError::new(
                    format!("scan.axis[{i}].parameters"),
                    format!("parameter {p} out of range for {} parameters", prep.param.len()),
                ));
            }
        }
        if scan.mode == ScanMode::Fci && 2 * l_total > FCI_MAX_SPIN_ORBITALS && method == Method::Scan {
            problems.push(ConfigError::new(
                "scan.mode",
                format!("fci scans are limited to {FCI_MAX_SPIN_ORBITALS} spin-orbitals, molecule has {}", 2 * l_total),
            ));
        }
        let points: usize = scan.axes.iter().map(|a| a.count).product();
        lines.push(format!("scan: {} axes, {points} points", scan.axes.len()));
    }
    if let Err(e) = cfg.check_required(method) {
        problems.push(e);
    }
    Report { lines, problems, qubits_full: Some(2 * l_total), fragments: reports }
}
