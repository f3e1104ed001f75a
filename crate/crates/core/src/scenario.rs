//! Scenario files: JSON descriptions of a Hilbert space, observables, generators,
//! states, propositions and valuation runs, validated eagerly on load.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use num_traits::Zero;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::Subspace;
use crate::linalg::{ExactMatrix, GaussianRational, Vector};
use crate::modal::{first_noncommuting, Observable};

/// A scalar literal: an integer or a string such as `"1/2-3/4 i"`.
#[derive(Clone, Debug)]
struct Scalar(GaussianRational);

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Scalar;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or an exact literal string like \"1/2+3/4 i\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Scalar, E> {
                Ok(Scalar(GaussianRational::from_int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Scalar, E> {
                i64::try_from(v)
                    .map(|v| Scalar(GaussianRational::from_int(v)))
                    .map_err(|_| E::custom("integer literal too large; use a string"))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Scalar, E> {
                Err(E::custom(format!(
                    "inexact literal {v}; write it as a fraction string"
                )))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Scalar, E> {
                v.parse()
                    .map(Scalar)
                    .map_err(|e: Error| E::custom(e.to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

type RawVector = Vec<Scalar>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservable {
    name: String,
    eigenspaces: Vec<Vec<RawVector>>,
    #[serde(default)]
    labels: Option<Vec<Scalar>>,
    #[serde(default)]
    matrix: Option<Vec<RawVector>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    name: String,
    matrix: Vec<RawVector>,
    #[serde(default)]
    under: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    name: String,
    vector: RawVector,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProposition {
    name: String,
    basis: Vec<RawVector>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSelection {
    Keyword(String),
    Names(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    name: String,
    state: String,
    observable: String,
    eigenspace: usize,
    #[serde(default)]
    propositions: Option<RawSelection>,
    #[serde(default)]
    extended: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubobject {
    name: String,
    rules: BTreeMap<String, Rule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    dimension: usize,
    observables: Vec<RawObservable>,
    #[serde(default)]
    generators: Vec<RawGenerator>,
    states: Vec<RawState>,
    #[serde(default)]
    propositions: Vec<RawProposition>,
    #[serde(default)]
    remainder_rays: Vec<RawVector>,
    #[serde(default)]
    caps: Caps,
    #[serde(default)]
    subobjects: Vec<RawSubobject>,
    runs: Vec<RawRun>,
}

/// Size limits for every generated structure.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(deny_unknown_fields, default)]
pub struct Caps {
    pub monoid: usize,
    pub orbit: usize,
    pub sieve_enum: usize,
    pub lattice: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            monoid: 256,
            orbit: 128,
            sieve_enum: 4096,
            lattice: 512,
        }
    }
}

impl Caps {
    /// Applies overrides written as `monoid=64,sieve_enum=1024`.
    pub fn apply_overrides(&mut self, spec: &str) -> Result<()> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| invalid("caps", format!("expected key=value, got `{part}`")))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| invalid(format!("caps.{}", key.trim()), "not a count"))?;
            match key.trim() {
                "monoid" => self.monoid = value,
                "orbit" => self.orbit = value,
                "sieve_enum" => self.sieve_enum = value,
                "lattice" => self.lattice = value,
                other => return Err(invalid(format!("caps.{other}"), "unknown cap")),
            }
        }
        Ok(())
    }
}

/// How a declared sub-presheaf picks propositions at objects of one level.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    All,
    None,
    /// Propositions containing the object's ray.
    RayFilter,
}

#[derive(Clone, Debug)]
pub struct SubobjectSpec {
    pub name: String,
    /// Rule per observable index; unlisted observables use `All`.
    pub rules: BTreeMap<usize, Rule>,
}

impl SubobjectSpec {
    pub fn rule(&self, rho: usize) -> Rule {
        self.rules.get(&rho).copied().unwrap_or(Rule::All)
    }
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub name: String,
    pub state: usize,
    pub observable: usize,
    pub eigenspace: usize,
    /// `None` selects the whole proposition universe.
    pub propositions: Option<Vec<usize>>,
    pub extended: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub dimension: usize,
    pub observables: Vec<Observable>,
    pub generators: Vec<(String, ExactMatrix)>,
    pub states: Vec<(String, Subspace)>,
    pub propositions: Vec<(String, Subspace)>,
    pub remainder_rays: Vec<Subspace>,
    pub caps: Caps,
    pub subobjects: Vec<SubobjectSpec>,
    pub runs: Vec<RunSpec>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawScenario =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::validate(raw)
    }

    pub fn run(&self, name: &str) -> Option<&RunSpec> {
        self.runs.iter().find(|r| r.name == name)
    }

    pub fn observable_index(&self, name: &str) -> Option<usize> {
        self.observables.iter().position(|o| o.name == name)
    }

    fn validate(raw: RawScenario) -> Result<Self> {
        let n = raw.dimension;
        if n == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        let vector = |field: String, v: &RawVector| -> Result<Vector> {
            if v.len() != n {
                return Err(invalid(
                    field,
                    format!("expected {n} entries, found {}", v.len()),
                ));
            }
            Ok(v.iter().map(|s| s.0.clone()).collect())
        };
        let matrix = |field: String, rows: &[RawVector]| -> Result<ExactMatrix> {
            if rows.len() != n {
                return Err(invalid(
                    field,
                    format!("expected {n} rows, found {}", rows.len()),
                ));
            }
            let rows = rows
                .iter()
                .enumerate()
                .map(|(k, r)| vector(format!("{field}[{k}]"), r))
                .collect::<Result<Vec<_>>>()?;
            ExactMatrix::from_rows(rows, n)
        };
        unique_names(
            "observables",
            raw.observables.iter().map(|o| o.name.as_str()),
        )?;
        unique_names("generators", raw.generators.iter().map(|o| o.name.as_str()))?;
        unique_names("states", raw.states.iter().map(|o| o.name.as_str()))?;
        unique_names(
            "propositions",
            raw.propositions.iter().map(|o| o.name.as_str()),
        )?;
        unique_names("runs", raw.runs.iter().map(|o| o.name.as_str()))?;
        unique_names("subobjects", raw.subobjects.iter().map(|o| o.name.as_str()))?;

        let mut observables = Vec::new();
        for (k, o) in raw.observables.iter().enumerate() {
            let field = format!("observables[{k}]");
            let eigenspaces = o
                .eigenspaces
                .iter()
                .enumerate()
                .map(|(j, basis)| {
                    let vs = basis
                        .iter()
                        .enumerate()
                        .map(|(i, v)| vector(format!("{field}.eigenspaces[{j}][{i}]"), v))
                        .collect::<Result<Vec<_>>>()?;
                    let s = Subspace::span(n, &vs)?;
                    if s.dim() != vs.len() {
                        return Err(invalid(
                            format!("{field}.eigenspaces[{j}]"),
                            "basis vectors are dependent or zero",
                        ));
                    }
                    Ok(s)
                })
                .collect::<Result<Vec<_>>>()?;
            let labels = match &o.labels {
                Some(ls) => {
                    let mut out = Vec::new();
                    for (j, l) in ls.iter().enumerate() {
                        if !l.0.im.is_zero() {
                            return Err(invalid(
                                format!("{field}.labels[{j}]"),
                                "eigenvalues must be real",
                            ));
                        }
                        out.push(l.0.re.clone());
                    }
                    Some(out)
                }
                None => None,
            };
            let obs = Observable::new(o.name.clone(), eigenspaces, labels)?;
            if let Some(m) = &o.matrix {
                obs.validate_matrix(&matrix(format!("{field}.matrix"), m)?)?;
            }
            observables.push(obs);
        }
        let obs_index = |field: String, name: &str| -> Result<usize> {
            observables
                .iter()
                .position(|o| o.name == name)
                .ok_or_else(|| invalid(field, format!("unknown observable `{name}`")))
        };

        let mut generators = Vec::new();
        for (k, g) in raw.generators.iter().enumerate() {
            let field = format!("generators[{k}]");
            let m = matrix(format!("{field}.matrix"), &g.matrix)?;
            if let Some(under) = &g.under {
                let rho = &observables[obs_index(format!("{field}.under"), under)?];
                if let Some(eig) = first_noncommuting(&m, rho) {
                    return Err(Error::CommutantViolation {
                        operator: g.name.clone(),
                        observable: rho.name.clone(),
                        eigenspace: eig,
                    });
                }
            }
            generators.push((g.name.clone(), m));
        }

        let mut states = Vec::new();
        for (k, s) in raw.states.iter().enumerate() {
            let field = format!("states[{k}].vector");
            let v = vector(field.clone(), &s.vector)?;
            let ray =
                Subspace::ray(&v).map_err(|_| invalid(field, "zero vector is not a state"))?;
            states.push((s.name.clone(), ray));
        }

        let mut propositions = Vec::new();
        for (k, p) in raw.propositions.iter().enumerate() {
            let vs = p
                .basis
                .iter()
                .enumerate()
                .map(|(i, v)| vector(format!("propositions[{k}].basis[{i}]"), v))
                .collect::<Result<Vec<_>>>()?;
            propositions.push((p.name.clone(), Subspace::span(n, &vs)?));
        }

        let remainder_rays = raw
            .remainder_rays
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let field = format!("remainder_rays[{k}]");
                Subspace::ray(&vector(field.clone(), v)?).map_err(|_| invalid(field, "zero vector"))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut subobjects = Vec::new();
        for (k, s) in raw.subobjects.iter().enumerate() {
            let mut rules = BTreeMap::new();
            for (name, rule) in &s.rules {
                rules.insert(obs_index(format!("subobjects[{k}].rules"), name)?, *rule);
            }
            subobjects.push(SubobjectSpec {
                name: s.name.clone(),
                rules,
            });
        }

        let mut runs = Vec::new();
        for (k, r) in raw.runs.iter().enumerate() {
            let field = format!("runs[{k}]");
            let state = states
                .iter()
                .position(|(name, _)| *name == r.state)
                .ok_or_else(|| {
                    invalid(
                        format!("{field}.state"),
                        format!("unknown state `{}`", r.state),
                    )
                })?;
            let observable = obs_index(format!("{field}.observable"), &r.observable)?;
            let rho = &observables[observable];
            if r.eigenspace >= rho.eigenspaces().len() {
                return Err(invalid(
                    format!("{field}.eigenspace"),
                    format!("`{}` has {} eigenspaces", rho.name, rho.eigenspaces().len()),
                ));
            }
            if states[state]
                .1
                .project_onto(&rho.eigenspaces()[r.eigenspace])
                .is_zero()
            {
                return Err(invalid(
                    format!("{field}.eigenspace"),
                    "the state has no component in this eigenspace",
                ));
            }
            let selection = match &r.propositions {
                None => None,
                Some(RawSelection::Keyword(w)) if w == "all" => None,
                Some(RawSelection::Keyword(w)) => {
                    return Err(invalid(
                        format!("{field}.propositions"),
                        format!("expected \"all\" or a list, got `{w}`"),
                    ))
                }
                Some(RawSelection::Names(names)) => Some(
                    names
                        .iter()
                        .map(|name| {
                            propositions
                                .iter()
                                .position(|(p, _)| p == name)
                                .ok_or_else(|| {
                                    invalid(
                                        format!("{field}.propositions"),
                                        format!("unknown proposition `{name}`"),
                                    )
                                })
                        })
                        .collect::<Result<Vec<_>>>()?,
                ),
            };
            let extended = r
                .extended
                .iter()
                .map(|name| obs_index(format!("{field}.extended"), name))
                .collect::<Result<Vec<_>>>()?;
            if !extended.is_empty() && !extended.contains(&observable) {
                return Err(invalid(
                    format!("{field}.extended"),
                    "must include the run's observable",
                ));
            }
            unique_names(
                &format!("{field}.extended"),
                r.extended.iter().map(String::as_str),
            )?;
            runs.push(RunSpec {
                name: r.name.clone(),
                state,
                observable,
                eigenspace: r.eigenspace,
                propositions: selection,
                extended,
            });
        }

        Ok(Self {
            name: raw.name,
            dimension: n,
            observables,
            generators,
            states,
            propositions,
            remainder_rays,
            caps: raw.caps,
            subobjects,
            runs,
        })
    }
}

fn unique_names<'a>(field: &str, names: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(invalid(field, format!("duplicate name `{name}`")));
        }
    }
    Ok(())
}
