//! Flat, line-oriented scenario files shared by every subcommand.
//!
//! A scenario has five sections introduced by bracketed headers:
//! `[topology]`, `[traffic]`, `[scheduler]`, `[sim]`, `[out]`. Each line
//! is a keyword followed by whitespace-separated fields; `#` starts a
//! comment. Link ids are 1-based everywhere in the file format.

use std::collections::BTreeMap;
use std::path::PathBuf;

use priosched::geometry::InterferenceModel;
use priosched::graph::InterferenceGraph;
use priosched::traffic::ArrivalModel;

#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.msg)
        } else {
            write!(f, "config line {}: {}", self.line, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        msg: msg.into(),
    })
}

#[derive(Debug, Clone)]
pub enum Topology {
    /// Conflict graph given inline with `links` and `edge` lines.
    Inline { graph_text: String },
    /// Conflict graph loaded from a graph-format file.
    GraphFile { path: PathBuf },
    /// Geometric network loaded from a network-format file plus a model.
    NetworkFile {
        path: PathBuf,
        model: InterferenceModel,
    },
    /// Generated geometric network.
    Geometric {
        nodes: usize,
        area: f64,
        range: f64,
        density: f64,
        model: InterferenceModel,
    },
}

#[derive(Debug, Clone)]
pub enum SchedulerKind {
    Fixed { ranks: Vec<usize> },
    FixedFile { path: PathBuf },
    Lqf,
    MaxWeight,
    Distribution { entries: Vec<(Vec<usize>, f64)> },
    DecompositionFile { path: PathBuf },
}

#[derive(Debug, Clone, Default)]
pub struct SchedulerCfg {
    pub kind: Option<SchedulerKind>,
    /// Slack for decompositions; defaults to half the feasibility
    /// certificate's slack, floored at 1e-4.
    pub eps: Option<f64>,
    /// Approximation fraction for approximate decompositions.
    pub tol: Option<f64>,
    /// Per-link delay exponent targets.
    pub targets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct SimCfg {
    pub slots: Option<u64>,
    pub reps: u64,
    pub seed: Option<u64>,
    pub thresholds: Vec<u64>,
    pub trace: bool,
}

#[derive(Debug, Clone, Default)]
pub struct OutCfg {
    pub summary: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub priority: Option<PathBuf>,
    pub decomposition: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug)]
pub struct Scenario {
    pub topology: Option<Topology>,
    pub traffic: BTreeMap<usize, ArrivalModel>,
    pub scheduler: SchedulerCfg,
    pub sim: SimCfg,
    pub out: OutCfg,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut scenario = Scenario {
            topology: None,
            traffic: BTreeMap::new(),
            scheduler: SchedulerCfg::default(),
            sim: SimCfg {
                reps: 1,
                ..SimCfg::default()
            },
            out: OutCfg::default(),
        };
        let mut section = String::new();
        // Topology sub-state for inline graphs and geometric parameters.
        let mut topo_kind: Option<String> = None;
        let mut graph_lines: Vec<String> = Vec::new();
        let mut topo_fields: BTreeMap<String, String> = BTreeMap::new();
        let mut topo_model: Option<InterferenceModel> = None;
        let mut dist_entries: Vec<(Vec<usize>, f64)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                match section.as_str() {
                    "topology" | "traffic" | "scheduler" | "sim" | "out" => {}
                    other => return err(lineno, format!("unknown section `[{other}]`")),
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let key = fields[0];
            match section.as_str() {
                "topology" => match key {
                    "kind" => topo_kind = Some(field(&fields, 1, lineno, "kind")?.to_string()),
                    "links" | "edge" => graph_lines.push(line.to_string()),
                    "nodes" | "area" | "range" | "density" | "graph" | "network" => {
                        topo_fields.insert(
                            key.to_string(),
                            field(&fields, 1, lineno, key)?.to_string(),
                        );
                    }
                    "model" => topo_model = Some(parse_model(&fields, lineno)?),
                    other => return err(lineno, format!("unknown topology key `{other}`")),
                },
                "traffic" => match key {
                    "link" => {
                        let (id, model) = parse_traffic_line(&fields, lineno)?;
                        if scenario.traffic.insert(id, model).is_some() {
                            return err(lineno, format!("duplicate traffic for link {}", id + 1));
                        }
                    }
                    other => return err(lineno, format!("unknown traffic key `{other}`")),
                },
                "scheduler" => match key {
                    "kind" => {
                        let kind = field(&fields, 1, lineno, "kind")?;
                        scenario.scheduler.kind = Some(match kind {
                            "fixed" => SchedulerKind::Fixed { ranks: Vec::new() },
                            "lqf" => SchedulerKind::Lqf,
                            "maxweight" => SchedulerKind::MaxWeight,
                            "distribution" => SchedulerKind::Distribution {
                                entries: Vec::new(),
                            },
                            "decomposition" => SchedulerKind::DecompositionFile {
                                path: PathBuf::new(),
                            },
                            other => {
                                return err(lineno, format!("unknown scheduler kind `{other}`"))
                            }
                        });
                    }
                    "priority" => {
                        let ranks = parse_usize_list(&fields[1..], lineno)?;
                        scenario.scheduler.kind = Some(SchedulerKind::Fixed { ranks });
                    }
                    "priority_file" => {
                        scenario.scheduler.kind = Some(SchedulerKind::FixedFile {
                            path: PathBuf::from(field(&fields, 1, lineno, "priority_file")?),
                        });
                    }
                    "path" => {
                        match scenario.scheduler.kind {
                            Some(SchedulerKind::DecompositionFile { ref mut path }) => {
                                *path = PathBuf::from(field(&fields, 1, lineno, "path")?);
                            }
                            _ => return err(lineno, "`path` needs `kind decomposition` first"),
                        }
                    }
                    "perm" => {
                        // perm <rank...> weight <w>
                        let wpos = fields
                            .iter()
                            .position(|&f| f == "weight")
                            .ok_or(ConfigError {
                                line: lineno,
                                msg: "`perm` line needs `weight <w>`".into(),
                            })?;
                        let ranks = parse_usize_list(&fields[1..wpos], lineno)?;
                        let w: f64 = parse_num(field(&fields, wpos + 1, lineno, "weight")?, lineno)?;
                        dist_entries.push((ranks, w));
                    }
                    "eps" => {
                        scenario.scheduler.eps =
                            Some(parse_num(field(&fields, 1, lineno, "eps")?, lineno)?)
                    }
                    "tol" => {
                        scenario.scheduler.tol =
                            Some(parse_num(field(&fields, 1, lineno, "tol")?, lineno)?)
                    }
                    "targets" => {
                        let mut t = Vec::new();
                        for f in &fields[1..] {
                            t.push(parse_num(f, lineno)?);
                        }
                        scenario.scheduler.targets = Some(t);
                    }
                    // `targets_qos <eps> <B...>`: per-link buffer sizes and
                    // one overflow probability, converted to exponent
                    // targets as -ln(eps)/B. An interpretation convenience;
                    // a zero B means no requirement for that link.
                    "targets_qos" => {
                        let eps: f64 = parse_num(field(&fields, 1, lineno, "targets_qos")?, lineno)?;
                        if !(eps > 0.0 && eps < 1.0) {
                            return err(lineno, "overflow probability must be in (0, 1)");
                        }
                        let mut t = Vec::new();
                        for f in &fields[2..] {
                            let b: f64 = parse_num(f, lineno)?;
                            t.push(if b > 0.0 { -eps.ln() / b } else { 0.0 });
                        }
                        scenario.scheduler.targets = Some(t);
                    }
                    other => return err(lineno, format!("unknown scheduler key `{other}`")),
                },
                "sim" => match key {
                    "slots" => {
                        scenario.sim.slots =
                            Some(parse_int(field(&fields, 1, lineno, "slots")?, lineno)?)
                    }
                    "reps" => {
                        scenario.sim.reps = parse_int(field(&fields, 1, lineno, "reps")?, lineno)?
                    }
                    "seed" => {
                        scenario.sim.seed =
                            Some(parse_int(field(&fields, 1, lineno, "seed")?, lineno)?)
                    }
                    "thresholds" => {
                        let mut t = Vec::new();
                        for f in &fields[1..] {
                            t.push(parse_int(f, lineno)?);
                        }
                        scenario.sim.thresholds = t;
                    }
                    "trace" => {
                        scenario.sim.trace = match field(&fields, 1, lineno, "trace")? {
                            "on" => true,
                            "off" => false,
                            other => return err(lineno, format!("trace must be on/off, got `{other}`")),
                        }
                    }
                    other => return err(lineno, format!("unknown sim key `{other}`")),
                },
                "out" => {
                    let path = PathBuf::from(field(&fields, 1, lineno, key)?);
                    match key {
                        "summary" => scenario.out.summary = Some(path),
                        "trace" => scenario.out.trace = Some(path),
                        "priority" => scenario.out.priority = Some(path),
                        "decomposition" => scenario.out.decomposition = Some(path),
                        "report" => scenario.out.report = Some(path),
                        other => return err(lineno, format!("unknown out key `{other}`")),
                    }
                }
                "" => return err(lineno, "content before any [section] header"),
                _ => unreachable!("section names validated above"),
            }
        }

        if !dist_entries.is_empty() {
            scenario.scheduler.kind = Some(SchedulerKind::Distribution {
                entries: dist_entries,
            });
        }

        scenario.topology = match topo_kind.as_deref() {
            None if graph_lines.is_empty() && topo_fields.is_empty() => None,
            None | Some("inline") => {
                if graph_lines.is_empty() {
                    return err(0, "topology is missing the `links` field");
                }
                Some(Topology::Inline {
                    graph_text: graph_lines.join("\n"),
                })
            }
            Some("geometric") => {
                let get = |k: &str| -> Result<f64, ConfigError> {
                    topo_fields
                        .get(k)
                        .ok_or(ConfigError {
                            line: 0,
                            msg: format!("geometric topology is missing the `{k}` field"),
                        })?
                        .parse()
                        .map_err(|_| ConfigError {
                            line: 0,
                            msg: format!("malformed `{k}` value"),
                        })
                };
                Some(Topology::Geometric {
                    nodes: get("nodes")? as usize,
                    area: get("area")?,
                    range: get("range")?,
                    density: get("density")?,
                    model: topo_model.ok_or(ConfigError {
                        line: 0,
                        msg: "geometric topology is missing the `model` field".into(),
                    })?,
                })
            }
            Some("file") => {
                if let Some(p) = topo_fields.get("graph") {
                    Some(Topology::GraphFile {
                        path: PathBuf::from(p),
                    })
                } else if let Some(p) = topo_fields.get("network") {
                    Some(Topology::NetworkFile {
                        path: PathBuf::from(p),
                        model: topo_model.ok_or(ConfigError {
                            line: 0,
                            msg: "file topology with `network` needs a `model` field".into(),
                        })?,
                    })
                } else {
                    return err(0, "file topology needs a `graph` or `network` field");
                }
            }
            Some(other) => return err(0, format!("unknown topology kind `{other}`")),
        };

        Ok(scenario)
    }

    /// Per-link models for a graph with `n` links, checking that every
    /// link got exactly one traffic line.
    pub fn models(&self, n: usize) -> Result<Vec<ArrivalModel>, ConfigError> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            match self.traffic.get(&i) {
                Some(m) => out.push(m.clone()),
                None => {
                    return err(
                        0,
                        format!("traffic section is missing the `link {}` line", i + 1),
                    )
                }
            }
        }
        if let Some((&id, _)) = self.traffic.iter().find(|(&id, _)| id >= n) {
            return err(
                0,
                format!("traffic for link {} but the topology has {n} links", id + 1),
            );
        }
        Ok(out)
    }

    /// Arrival rates implied by the traffic section.
    pub fn rates(&self, n: usize) -> Result<Vec<f64>, ConfigError> {
        Ok(self.models(n)?.iter().map(|m| m.rate()).collect())
    }
}

fn field<'a>(
    fields: &[&'a str],
    idx: usize,
    line: usize,
    what: &str,
) -> Result<&'a str, ConfigError> {
    fields.get(idx).copied().ok_or(ConfigError {
        line,
        msg: format!("`{what}` is missing a value"),
    })
}

fn parse_num(s: &str, line: usize) -> Result<f64, ConfigError> {
    s.parse().map_err(|_| ConfigError {
        line,
        msg: format!("malformed number `{s}`"),
    })
}

fn parse_int<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, ConfigError> {
    s.parse().map_err(|_| ConfigError {
        line,
        msg: format!("malformed integer `{s}`"),
    })
}

fn parse_usize_list(fields: &[&str], line: usize) -> Result<Vec<usize>, ConfigError> {
    fields.iter().map(|f| parse_int(f, line)).collect()
}

fn parse_model(fields: &[&str], line: usize) -> Result<InterferenceModel, ConfigError> {
    match field(fields, 1, line, "model")? {
        "primary" => Ok(InterferenceModel::Primary),
        "khop" => Ok(InterferenceModel::KHop {
            k: parse_int(field(fields, 2, line, "khop K")?, line)?,
        }),
        "phy" => Ok(InterferenceModel::Phy {
            snr_t: parse_num(field(fields, 2, line, "phy SNR_t")?, line)?,
            kappa: parse_num(field(fields, 3, line, "phy kappa")?, line)?,
        }),
        other => err(line, format!("unknown interference model `{other}`")),
    }
}

/// `link <id> <kind> <params...> [bound <b>]`
fn parse_traffic_line(
    fields: &[&str],
    line: usize,
) -> Result<(usize, ArrivalModel), ConfigError> {
    let id: usize = parse_int(field(fields, 1, line, "link id")?, line)?;
    if id == 0 {
        return err(line, "link ids are 1-based");
    }
    let kind = field(fields, 2, line, "traffic kind")?;
    // Split off the optional trailing `bound <b>`.
    let (params, bound) = match fields.iter().position(|&f| f == "bound") {
        Some(pos) => {
            let b: u32 = parse_int(field(fields, pos + 1, line, "bound")?, line)?;
            (&fields[3..pos], Some(b))
        }
        None => (&fields[3..], None),
    };
    let model = match kind {
        "bernoulli" => {
            let p = parse_num(
                params.first().copied().ok_or(ConfigError {
                    line,
                    msg: "bernoulli needs a probability".into(),
                })?,
                line,
            )?;
            ArrivalModel::bernoulli(p)
        }
        "batch" => {
            if params.is_empty() || params.len() % 2 != 0 {
                return err(line, "batch needs `<value> <prob>` pairs");
            }
            let mut values = Vec::new();
            let mut probs = Vec::new();
            for pair in params.chunks(2) {
                values.push(parse_int(pair[0], line)?);
                probs.push(parse_num(pair[1], line)?);
            }
            ArrivalModel::batch(values, probs)
        }
        "onoff" => {
            if params.len() != 3 {
                return err(line, "onoff needs `<p_on_off> <p_off_on> <batch>`");
            }
            ArrivalModel::markov_onoff(
                parse_num(params[0], line)?,
                parse_num(params[1], line)?,
                parse_int(params[2], line)?,
            )
        }
        "sync" => {
            if params.len() != 5 {
                return err(line, "sync needs `<period> <start> <len> <batch> <group>`");
            }
            ArrivalModel::sync_onoff(
                parse_int(params[0], line)?,
                parse_int(params[1], line)?,
                parse_int(params[2], line)?,
                parse_int(params[3], line)?,
                params[4],
            )
        }
        other => return err(line, format!("unknown traffic kind `{other}`")),
    };
    let model = model.map_err(|e| ConfigError {
        line,
        msg: e.to_string(),
    })?;
    let model = match bound {
        Some(b) => model.with_bound(b).map_err(|e| ConfigError {
            line,
            msg: e.to_string(),
        })?,
        None => model,
    };
    Ok((id - 1, model))
}

/// Resolves the topology into an interference graph. Geometric topologies
/// consume the scenario seed.
pub fn build_graph(
    topology: &Topology,
    seed: Option<u64>,
) -> Result<InterferenceGraph, String> {
    match topology {
        Topology::Inline { graph_text } => {
            InterferenceGraph::from_text(graph_text).map_err(|e| e.to_string())
        }
        Topology::GraphFile { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            InterferenceGraph::from_text(&text).map_err(|e| e.to_string())
        }
        Topology::NetworkFile { path, model } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            let net =
                priosched::geometry::GeometricNetwork::from_text(&text).map_err(|e| e.to_string())?;
            priosched::geometry::build_interference(&net, *model).map_err(|e| e.to_string())
        }
        Topology::Geometric {
            nodes,
            area,
            range,
            density,
            model,
        } => {
            let seed = seed.ok_or("geometric topologies need a seed".to_string())?;
            let net = priosched::geometry::generate_network(*nodes, *area, *range, *density, seed)
                .map_err(|e| e.to_string())?;
            if net.link_count() == 0 {
                return Err("generated network has no feasible links".into());
            }
            priosched::geometry::build_interference(&net, *model).map_err(|e| e.to_string())
        }
    }
}
