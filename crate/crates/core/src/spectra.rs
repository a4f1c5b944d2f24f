//! Scale scans over the distances of a space: HCS, CS, ECS, ES, MLS, the NC
//! profile and the T2 bound. Every reported value carries certificates.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chains::{ChainError, Move, MoveSequence};
use crate::complex::words::abelianize;
use crate::complex::{
    BaseFrame, ClassKey, ComplexError, Coordinates, Echelon, EntourageGroup, GroupKind, GroupModel, Obstruction,
    Triviality, Verdict, DEFAULT_BUDGET,
};
use crate::cover::{covers_equivalent, CoverEquivalence, CoverError};
use crate::entourage::{metric_entourage, Entourage, EntourageError, EntourageSpec, Provenance, Sigma};
use crate::rational::{render, serde_rational, Rational};
use crate::space::{covering_number, CoveringNumber, FiniteMetricSpace, SpaceError};

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("space is not connected at its base scale")]
    Disconnected,
    #[error("length bound must be positive")]
    NonpositiveBound,
    #[error("scale must be positive")]
    NonpositiveEps,
    #[error("family member {0} is not chained")]
    NotChained(usize),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Entourage(#[from] EntourageError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

impl From<crate::complex::LatticeOverflow> for SpectraError {
    fn from(e: crate::complex::LatticeOverflow) -> Self {
        SpectraError::Complex(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Hcs,
    Cs,
    Ecs,
    Es,
    Mls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    Exact,
    RelativeToFamily,
    BudgetLimited,
}

/// A loop that is essential at one entourage and, optionally, contracted at
/// a larger one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "loop")]
    pub loop_points: Vec<usize>,
    #[serde(with = "serde_rational")]
    pub length: Rational,
    pub non_null_at: EntourageSpec,
    pub obstruction: Obstruction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_at: Option<EntourageSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction: Option<MoveSequence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpectralValue {
    #[serde(with = "serde_rational")]
    pub value: Rational,
    pub multiplicity: usize,
    pub certificates: Vec<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfilePoint {
    #[serde(with = "serde_rational")]
    pub eps: Rational,
    pub nc: usize,
    /// Some member at or above this scale could not be classified.
    pub undecided: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpectrumReport {
    pub kind: SpectrumKind,
    pub values: Vec<SpectralValue>,
    pub method: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    pub completeness: Completeness,
    /// Values at or below the resolution floor, kept apart from `values`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<SpectralValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub profile: Vec<ProfilePoint>,
}

pub const REPORT_SCHEMA: &str = "spectra-report/1";

impl SpectrumReport {
    /// `(value, multiplicity)` pairs in increasing order.
    pub fn pairs(&self) -> Vec<(Rational, usize)> {
        self.values.iter().map(|v| (v.value, v.multiplicity)).collect()
    }

    pub fn value_set(&self) -> Vec<Rational> {
        self.values.iter().map(|v| v.value).collect()
    }

    /// JSON with sorted keys and the schema tag. Values are `[value,
    /// multiplicity]` pairs; certificates refer back to their value.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::{json, Map, Value};
        let pairs = |vs: &[SpectralValue]| -> Value {
            vs.iter().map(|v| json!([render(&v.value), v.multiplicity])).collect()
        };
        let mut certs = Vec::new();
        for v in &self.values {
            for c in &v.certificates {
                let mut o = serde_json::to_value(c).expect("certificate serializes");
                o.as_object_mut().expect("object").insert("value".into(), render(&v.value).into());
                certs.push(o);
            }
        }
        let mut m = Map::new();
        m.insert("schema".into(), REPORT_SCHEMA.into());
        m.insert("kind".into(), serde_json::to_value(self.kind).expect("kind"));
        m.insert("values".into(), pairs(&self.values));
        m.insert("certificates".into(), Value::Array(certs));
        m.insert("method".into(), json!(self.method));
        m.insert("completeness".into(), serde_json::to_value(self.completeness).expect("completeness"));
        if let Some(f) = &self.family {
            m.insert("family".into(), f.clone().into());
        }
        if let Some(f) = &self.floor {
            m.insert("floor".into(), f.clone().into());
        }
        if !self.artifacts.is_empty() {
            m.insert("artifacts".into(), pairs(&self.artifacts));
        }
        if !self.profile.is_empty() {
            m.insert("profile".into(), serde_json::to_value(&self.profile).expect("profile"));
        }
        Value::Object(m)
    }

    /// Every certificate, tagged with its value.
    pub fn certificates(&self) -> Vec<(Rational, &Certificate)> {
        self.values.iter().flat_map(|v| v.certificates.iter().map(move |c| (v.value, c))).collect()
    }

    /// Plain-text table, one value per line.
    pub fn table(&self) -> String {
        let name = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
        let kind = name(serde_json::to_value(self.kind).expect("kind"));
        let completeness = name(serde_json::to_value(self.completeness).expect("completeness"));
        let mut out = format!("{kind} ({completeness})\n");
        for v in &self.values {
            out.push_str(&format!("{}\t{}\n", render(&v.value), v.multiplicity));
        }
        for v in &self.artifacts {
            out.push_str(&format!("{}\t{}\tbelow floor\n", render(&v.value), v.multiplicity));
        }
        out
    }

    fn scaled(&self, kind: SpectrumKind, f: Rational) -> SpectrumReport {
        let sc = |vs: &[SpectralValue]| {
            vs.iter().map(|v| SpectralValue { value: v.value * f, ..v.clone() }).collect::<Vec<_>>()
        };
        SpectrumReport {
            kind,
            values: sc(&self.values),
            artifacts: sc(&self.artifacts),
            floor: self.floor.clone(),
            ..self.clone()
        }
    }
}

/// Describes an entourage declaratively, falling back to its pair list.
pub fn spec_of(e: &Entourage) -> EntourageSpec {
    match e.provenance() {
        Provenance::Metric { eps, strict } => EntourageSpec::Metric { eps: *eps, strict: *strict },
        _ if e.is_full() => EntourageSpec::Full,
        _ => EntourageSpec::Pairs(e.edges()),
    }
}

/// Rechecks a certificate from scratch.
pub fn verify_certificate(space: &FiniteMetricSpace, cert: &Certificate) -> Result<(), String> {
    let s = cert.non_null_at.build(space).map_err(|e| e.to_string())?;
    let pts = &cert.loop_points;
    crate::chains::validate_chain(&s, pts).map_err(|e| e.to_string())?;
    if pts.first() != pts.last() {
        return Err("witness is not a loop".into());
    }
    let len: Rational = pts.windows(2).map(|w| space.dist(w[0], w[1])).sum();
    if len != cert.length {
        return Err(format!("length {} recorded as {}", render(&len), render(&cert.length)));
    }
    let g = EntourageGroup::new(&s).map_err(|e| e.to_string())?;
    match g.decide(pts) {
        Triviality::NonTrivial(ob) if ob == cert.obstruction => {}
        other => return Err(format!("obstruction does not recompute: {other:?}")),
    }
    if let (Some(at), Some(seq)) = (&cert.null_at, &cert.contraction) {
        let c = at.build(space).map_err(|e| e.to_string())?;
        if &seq.start != pts {
            return Err("contraction does not start at the witness".into());
        }
        let end = seq.replay(&c).map_err(|e| e.to_string())?;
        if !end.is_constant() {
            return Err("contraction does not end at a constant chain".into());
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// Search budget for loops the group models cannot decide.
    pub budget: usize,
    /// Values at or below the floor are reported as artifacts. Defaults to
    /// twice the base scale.
    pub floor: Option<Rational>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { budget: DEFAULT_BUDGET, floor: None }
    }
}

impl ScanOptions {
    pub fn floor_for(&self, space: &FiniteMetricSpace) -> Rational {
        self.floor
            .unwrap_or_else(|| space.base_scale().unwrap_or_else(|| Rational::from_integer(0)) * 2)
    }
}

/// A distance at which loop classes die.
#[derive(Debug, Clone)]
pub struct Kill {
    pub value: Rational,
    pub multiplicity: usize,
    pub certificates: Vec<Certificate>,
    /// Certificate for the shortest killing triad.
    pub shortest: Certificate,
    pub exact: bool,
}

#[derive(Debug, Clone)]
pub struct Scan {
    pub kills: Vec<Kill>,
    pub exact: bool,
    pub strategies: Vec<String>,
}

fn is_abelian(m: &GroupModel) -> bool {
    m.kind() == GroupKind::Abelian || (m.kind() == GroupKind::Free && m.survivors().len() <= 1)
}

fn narrow(v: &[i128]) -> Vec<i64> {
    v.iter().map(|&x| x as i64).collect()
}

/// Pairs `a < b` grouped by distance, in increasing distance order.
fn pairs_by_distance(s: &FiniteMetricSpace) -> Vec<Vec<(usize, usize)>> {
    let vals = s.distance_values();
    let mut out = vec![Vec::new(); vals.len()];
    for a in 0..s.len() {
        for b in a + 1..s.len() {
            let k = vals.binary_search(&s.dist(a, b)).expect("distance is listed");
            out[k].push((a, b));
        }
    }
    out
}

/// Triads whose largest pairwise distance is `d`, each listed once.
fn triads_at(s: &FiniteMetricSpace, d: Rational, pairs: &[(usize, usize)]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for &(a, b) in pairs {
        for c in 0..s.len() {
            if c == a || c == b || s.dist(a, c) > d || s.dist(b, c) > d {
                continue;
            }
            let earlier = [(a.min(c), a.max(c)), (b.min(c), b.max(c))]
                .iter()
                .any(|&p| s.dist(p.0, p.1) == d && p < (a, b));
            if !earlier {
                let mut t = [a, b, c];
                t.sort();
                out.push((t[0], t[1], t[2]));
            }
        }
    }
    out.sort();
    out
}

/// Contraction of a refined triad at an entourage containing all three
/// refinement regions: clear each side, then fold the triad.
fn triad_contraction(
    e: &Entourage,
    coords: &Coordinates,
    (a, b, c): (usize, usize, usize),
) -> Result<MoveSequence, ChainError> {
    let pts = coords.refine_points(&[a, b, c, a]);
    let mut moves = Vec::new();
    for (side, (x, y)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
        for _ in 0..coords.edge_path(x, y).len() {
            moves.push(Move::Remove { pos: side + 1 });
        }
    }
    moves.push(Move::Remove { pos: 1 });
    moves.push(Move::Remove { pos: 1 });
    let seq = MoveSequence { start: pts, moves, end: vec![a, a] };
    seq.replay(e)?;
    Ok(seq)
}

/// Scans the closed metric entourages in increasing order, tracking the
/// relation lattice of the deck group in base coordinates.
pub fn scan(space: &FiniteMetricSpace, opts: &ScanOptions) -> Result<Scan, SpectraError> {
    let vals = space.distance_values().to_vec();
    let mut kills = Vec::new();
    let mut strategies: Vec<String> = vec!["abelianization".into()];
    let mut exact = true;
    if vals.is_empty() {
        return Ok(Scan { kills, exact, strategies });
    }
    let frame = BaseFrame::new(space).ok_or(SpectraError::Disconnected)?;
    let ng = frame.ngens();
    let pairs = pairs_by_distance(space);
    let mut lat = Echelon::new(ng);
    let mut prev = metric_entourage(space, vals[0], false)?;
    let mut prev_coords = Coordinates::base(&prev, &frame).ok_or(SpectraError::Disconnected)?;
    for (a, b, c) in triads_at(space, vals[0], &pairs[0]) {
        lat.insert(&abelianize(&prev_coords.chain_word(&[a, b, c, a]), ng))?;
    }
    let mut abelian = false;
    for k in 1..vals.len() {
        let d = vals[k];
        let ent = metric_entourage(space, d, false)?;
        let coords = Coordinates::base(&ent, &frame).ok_or(SpectraError::Disconnected)?;
        let triads = triads_at(space, d, &pairs[k]);
        let words: Vec<_> = triads.iter().map(|&(a, b, c)| coords.chain_word(&[a, b, c, a])).collect();
        let mut critical: Vec<(usize, Obstruction)> = Vec::new();
        let mut level_exact = true;
        for (i, w) in words.iter().enumerate() {
            let r = lat.residue(&abelianize(w, ng))?;
            if r.iter().any(|&x| x != 0) {
                critical.push((i, Obstruction::H1Residue(narrow(&r))));
            }
        }
        if critical.is_empty() && !abelian {
            let g = EntourageGroup::with_coords(&prev, prev_coords.clone())?;
            abelian = is_abelian(g.model());
            if !abelian {
                for (i, w) in words.iter().enumerate() {
                    match g.model().decide(w) {
                        Triviality::Trivial => {}
                        Triviality::NonTrivial(ob) => critical.push((i, ob)),
                        Triviality::Undetermined => {
                            let (a, b, c) = triads[i];
                            let pts = coords.refine_points(&[a, b, c, a]);
                            let v = g.decide_null(&pts, opts.budget)?;
                            match v.verdict {
                                Verdict::Null(_) => {}
                                Verdict::NonNull(ob) => critical.push((i, ob)),
                                Verdict::Unknown { .. } => level_exact = false,
                            }
                            note(&mut strategies, "bounded_search");
                        }
                    }
                }
                note(&mut strategies, "free_reduction");
            }
        }
        let before = lat.rank();
        let mut grew = HashSet::new();
        for (i, w) in words.iter().enumerate() {
            if lat.insert(&abelianize(w, ng))? {
                grew.insert(i);
            }
        }
        exact &= level_exact;
        if !critical.is_empty() {
            let multiplicity = (lat.rank() - before).max(1);
            let cert = |&(i, ref ob): &(usize, Obstruction)| -> Result<Certificate, SpectraError> {
                let t = triads[i];
                let seq = triad_contraction(&ent, &coords, t)?;
                let pts = seq.start.clone();
                Ok(Certificate {
                    length: pts.windows(2).map(|w| space.dist(w[0], w[1])).sum(),
                    loop_points: pts,
                    non_null_at: EntourageSpec::Metric { eps: d, strict: true },
                    obstruction: ob.clone(),
                    null_at: Some(EntourageSpec::Metric { eps: d, strict: false }),
                    contraction: Some(seq),
                })
            };
            let mut chosen: Vec<&(usize, Obstruction)> = critical.iter().filter(|(i, _)| grew.contains(i)).collect();
            if chosen.is_empty() {
                chosen.push(&critical[0]);
            }
            let certificates =
                chosen.into_iter().take(multiplicity).map(cert).collect::<Result<Vec<_>, _>>()?;
            let mut shortest: Option<Certificate> = None;
            for c in &critical {
                let (a, b, cc) = triads[c.0];
                let len: Rational = coords
                    .refine_points(&[a, b, cc, a])
                    .windows(2)
                    .map(|w| space.dist(w[0], w[1]))
                    .sum();
                if shortest.as_ref().is_none_or(|s| len < s.length) {
                    shortest = Some(cert(c)?);
                }
            }
            kills.push(Kill {
                value: d,
                multiplicity,
                certificates,
                shortest: shortest.expect("critical is nonempty"),
                exact: level_exact,
            });
        }
        prev = ent;
        prev_coords = coords;
        if lat.is_everything() {
            if abelian {
                break;
            }
            let g = EntourageGroup::with_coords(&prev, prev_coords.clone())?;
            abelian = is_abelian(g.model());
            if g.is_trivial() {
                break;
            }
        }
    }
    Ok(Scan { kills, exact, strategies })
}

fn note(v: &mut Vec<String>, s: &str) {
    if !v.iter().any(|x| x == s) {
        v.push(s.to_string());
    }
}

fn split_floor(values: Vec<SpectralValue>, floor: Rational) -> (Vec<SpectralValue>, Vec<SpectralValue>) {
    values.into_iter().partition(|v| v.value > floor)
}

fn hcs_from_scan(space: &FiniteMetricSpace, scan: &Scan, opts: &ScanOptions) -> SpectrumReport {
    let floor = opts.floor_for(space);
    let all = scan
        .kills
        .iter()
        .map(|k| SpectralValue { value: k.value, multiplicity: k.multiplicity, certificates: k.certificates.clone() })
        .collect();
    let (values, artifacts) = split_floor(all, floor);
    SpectrumReport {
        kind: SpectrumKind::Hcs,
        values,
        method: scan.strategies.clone(),
        family: None,
        completeness: if scan.exact { Completeness::Exact } else { Completeness::BudgetLimited },
        artifacts,
        floor: Some(render(&floor)),
        profile: Vec::new(),
    }
}

pub fn homotopy_critical_spectrum(space: &FiniteMetricSpace, opts: &ScanOptions) -> Result<SpectrumReport, SpectraError> {
    Ok(hcs_from_scan(space, &scan(space, opts)?, opts))
}

/// CS as the 3/2 multiple of HCS, with the same certificates.
pub fn covering_from_hcs(hcs: &SpectrumReport) -> SpectrumReport {
    hcs.scaled(SpectrumKind::Cs, Rational::new(3, 2))
}

pub fn covering_spectrum(space: &FiniteMetricSpace, opts: &ScanOptions) -> Result<SpectrumReport, SpectraError> {
    Ok(covering_from_hcs(&homotopy_critical_spectrum(space, opts)?))
}

/// Runs `f` on every loop at `v` of length at most `bound` whose class in
/// `g` is nontrivial, shortest first. `f` may lower the bound.
fn based_loops<F>(g: &EntourageGroup, v: usize, bound: Rational, mut f: F) -> Result<(), SpectraError>
where
    F: FnMut(Rational, &ClassKey, &[usize]) -> Result<Option<Rational>, SpectraError>,
{
    let e = g.entourage();
    let s = e.space();
    let model = g.model();
    let Some(id) = model.identity_key() else { return Ok(()) };
    let mut bound = bound;
    let mut settled: HashSet<(usize, ClassKey)> = HashSet::new();
    // (vertex, key, parent) per pushed state
    let mut states: Vec<(usize, ClassKey, usize)> = vec![(v, id.clone(), usize::MAX)];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Rational::from_integer(0), 0usize)));
    while let Some(Reverse((d, sid))) = heap.pop() {
        if d > bound {
            break;
        }
        let (u, key) = (states[sid].0, states[sid].1.clone());
        if !settled.insert((u, key.clone())) {
            continue;
        }
        if u == v && key != id {
            let mut chain = vec![u];
            let mut cur = states[sid].2;
            while cur != usize::MAX {
                chain.push(states[cur].0);
                cur = states[cur].2;
            }
            chain.reverse();
            if let Some(b) = f(d, &key, &chain)? {
                bound = bound.min(b);
            }
        }
        for w in e.neighbors(u).filter(|&w| w != u) {
            let nd = d + s.dist(u, w);
            if nd > bound {
                continue;
            }
            let Some(nk) = model.extend_key(&key, &g.coords().edge_word(u, w)) else {
                return Err(ComplexError::Overflow.into());
            };
            if settled.contains(&(w, nk.clone())) {
                continue;
            }
            states.push((w, nk, sid));
            heap.push(Reverse((nd, states.len() - 1)));
        }
    }
    Ok(())
}

/// Shortest loops essential in `sg` but null in `cg`, up to `bound`:
/// the length, one chain per free class attaining it, and whether every
/// candidate was decided.
fn shortest_critical(
    sg: &EntourageGroup,
    cg: &EntourageGroup,
    bound: Rational,
    budget: usize,
) -> Result<(Option<Rational>, Vec<Vec<usize>>, bool), SpectraError> {
    let mut best: Option<Rational> = None;
    let mut classes: BTreeMap<ClassKey, Vec<usize>> = BTreeMap::new();
    let mut decided = true;
    for v in 0..sg.entourage().len() {
        let limit = best.unwrap_or(bound);
        based_loops(sg, v, limit, |d, key, chain| {
            let killed = match cg.decide(chain) {
                Triviality::Trivial => true,
                Triviality::NonTrivial(_) => false,
                Triviality::Undetermined => match cg.decide_null(chain, budget)?.verdict {
                    Verdict::Null(_) => true,
                    Verdict::NonNull(_) => false,
                    Verdict::Unknown { .. } => {
                        decided = false;
                        false
                    }
                },
            };
            if !killed {
                return Ok(None);
            }
            if best.is_none_or(|b| d < b) {
                best = Some(d);
                classes.clear();
            }
            if best == Some(d) {
                classes.entry(sg.model().conjugacy_key(key)).or_insert_with(|| chain.to_vec());
            }
            Ok(Some(d))
        })?;
    }
    Ok((best, classes.into_values().collect(), decided))
}

fn es_value(
    sg: &EntourageGroup,
    cg: &EntourageGroup,
    shortest: &Certificate,
    budget: usize,
) -> Result<(SpectralValue, bool), SpectraError> {
    let (psi, loops, decided) = shortest_critical(sg, cg, shortest.length, budget)?;
    let mut exact = decided;
    let Some(psi) = psi else {
        // the triad itself is critical, so this only happens when the
        // models could not key classes
        return Ok((SpectralValue { value: shortest.length, multiplicity: 1, certificates: vec![shortest.clone()] }, false));
    };
    let cert = if psi == shortest.length {
        Some(shortest.clone())
    } else {
        let pts = loops[0].clone();
        let ob = match sg.decide(&pts) {
            Triviality::NonTrivial(ob) => Some(ob),
            _ => None,
        };
        let v = cg.decide_null(&pts, budget)?;
        match (ob, v.verdict) {
            (Some(ob), Verdict::Null(seq)) => Some(Certificate {
                length: psi,
                loop_points: pts,
                non_null_at: spec_of(sg.entourage()),
                obstruction: ob,
                null_at: Some(spec_of(cg.entourage())),
                contraction: Some(seq),
            }),
            _ => None,
        }
    };
    exact &= cert.is_some();
    Ok((SpectralValue { value: psi, multiplicity: loops.len().max(1), certificates: cert.into_iter().collect() }, exact))
}

/// ES over the strict/closed metric pairs at every distance.
pub fn entourage_spectrum(space: &FiniteMetricSpace, opts: &ScanOptions) -> Result<SpectrumReport, SpectraError> {
    let sc = scan(space, opts)?;
    let floor = opts.floor_for(space);
    let frame = BaseFrame::new(space).ok_or(SpectraError::Disconnected)?;
    let mut all: BTreeMap<Rational, SpectralValue> = BTreeMap::new();
    let mut artifacts = Vec::new();
    let mut exact = sc.exact;
    for kill in &sc.kills {
        let s_ent = metric_entourage(space, kill.value, true)?;
        let c_ent = metric_entourage(space, kill.value, false)?;
        let sg = EntourageGroup::with_frame(&s_ent, Some(&frame))?;
        let cg = EntourageGroup::with_frame(&c_ent, Some(&frame))?;
        let (v, ok) = es_value(&sg, &cg, &kill.shortest, opts.budget)?;
        exact &= ok;
        if kill.value <= floor {
            artifacts.push(v);
            continue;
        }
        all.entry(v.value)
            .and_modify(|x| {
                x.multiplicity += v.multiplicity;
                x.certificates.extend(v.certificates.clone());
            })
            .or_insert(v);
    }
    let mut method = sc.strategies.clone();
    note(&mut method, "cover_shortest_loops");
    Ok(SpectrumReport {
        kind: SpectrumKind::Es,
        values: all.into_values().collect(),
        method,
        family: Some("metric strict/closed pairs at all distances".into()),
        completeness: if exact { Completeness::RelativeToFamily } else { Completeness::BudgetLimited },
        artifacts,
        floor: Some(render(&floor)),
        profile: Vec::new(),
    })
}

/// ES over explicit (strict, closed) pairs with `strict ⊆ closed`.
pub fn entourage_spectrum_pairs(
    pairs: &[(Entourage, Entourage)],
    budget: usize,
) -> Result<SpectrumReport, SpectraError> {
    let mut all: BTreeMap<Rational, SpectralValue> = BTreeMap::new();
    let mut exact = true;
    for (i, (s, c)) in pairs.iter().enumerate() {
        for x in [s, c] {
            if !x.is_chained().chained {
                return Err(SpectraError::NotChained(i));
            }
        }
        let frame = BaseFrame::new(s.space());
        let sg = EntourageGroup::with_frame(s, frame.as_ref())?;
        let cg = EntourageGroup::with_frame(c, frame.as_ref())?;
        // the refinement of a triad of c into s is null in c, so the
        // shortest essential one bounds the critical length
        let mut bound: Option<Rational> = None;
        let mut gap = None;
        crate::complex::for_each_triad(c, |a, b, d| {
            let mut pts = vec![a];
            for (x, y) in [(a, b), (b, d), (d, a)] {
                match crate::chains::refine_gap(c, s, x, y) {
                    Some(inner) => pts.extend(inner),
                    None => {
                        gap = Some(i);
                        return;
                    }
                }
                pts.push(y);
            }
            let len: Rational = pts.windows(2).map(|w| s.space().dist(w[0], w[1])).sum();
            if bound.is_some_and(|m| len >= m) {
                return;
            }
            if matches!(sg.decide(&pts), Triviality::NonTrivial(_) | Triviality::Undetermined) {
                bound = Some(len);
            }
        });
        if let Some(i) = gap {
            return Err(SpectraError::NotChained(i));
        }
        let Some(bound) = bound else { continue };
        let (psi, loops, decided) = shortest_critical(&sg, &cg, bound, budget)?;
        exact &= decided;
        let Some(psi) = psi else { continue };
        let pts = loops[0].clone();
        let cert = match (sg.decide(&pts), cg.decide_null(&pts, budget)?.verdict) {
            (Triviality::NonTrivial(ob), Verdict::Null(seq)) => Some(Certificate {
                length: psi,
                loop_points: pts,
                non_null_at: spec_of(s),
                obstruction: ob,
                null_at: Some(spec_of(c)),
                contraction: Some(seq),
            }),
            _ => None,
        };
        exact &= cert.is_some();
        let v = SpectralValue { value: psi, multiplicity: loops.len(), certificates: cert.into_iter().collect() };
        all.entry(psi)
            .and_modify(|x| {
                x.multiplicity += v.multiplicity;
                x.certificates.extend(v.certificates.clone());
            })
            .or_insert(v);
    }
    Ok(SpectrumReport {
        kind: SpectrumKind::Es,
        values: all.into_values().collect(),
        method: vec!["cover_shortest_loops".into()],
        family: Some(format!("{} custom pairs", pairs.len())),
        completeness: if exact { Completeness::RelativeToFamily } else { Completeness::BudgetLimited },
        artifacts: Vec::new(),
        floor: None,
        profile: Vec::new(),
    })
}

/// Lengths of the shortest loops in each nontrivial free class of `e`, up
/// to `bound`.
pub fn minimum_length_spectrum(e: &Entourage, bound: Rational, _budget: usize) -> Result<SpectrumReport, SpectraError> {
    if bound <= Rational::from_integer(0) {
        return Err(SpectraError::NonpositiveBound);
    }
    if let Some((x, y)) = e.is_chained().witness {
        return Err(CoverError::NotChained(x, y).into());
    }
    let g = EntourageGroup::new(e)?;
    let mut completeness = Completeness::Exact;
    let mut best: BTreeMap<ClassKey, (Rational, Vec<usize>, ClassKey)> = BTreeMap::new();
    if g.model().identity_key().is_none() {
        completeness = Completeness::BudgetLimited;
    }
    for v in 0..e.len() {
        based_loops(&g, v, bound, |d, key, chain| {
            let ck = g.model().conjugacy_key(key);
            match best.get(&ck) {
                Some((b, _, _)) if *b <= d => {}
                _ => {
                    best.insert(ck, (d, chain.to_vec(), key.clone()));
                }
            }
            Ok(None)
        })?;
    }
    let mut by_len: BTreeMap<Rational, SpectralValue> = BTreeMap::new();
    for (_, (d, chain, _)) in best {
        let ob = match g.decide(&chain) {
            Triviality::NonTrivial(ob) => ob,
            _ => continue,
        };
        let cert = Certificate {
            loop_points: chain,
            length: d,
            non_null_at: spec_of(e),
            obstruction: ob,
            null_at: None,
            contraction: None,
        };
        let entry = by_len.entry(d).or_insert(SpectralValue { value: d, multiplicity: 0, certificates: Vec::new() });
        entry.multiplicity += 1;
        entry.certificates.push(cert);
    }
    Ok(SpectrumReport {
        kind: SpectrumKind::Mls,
        values: by_len.into_values().collect(),
        method: vec!["cover_shortest_loops".into()],
        family: Some(format!("{} up to length {}", e.label(), render(&bound))),
        completeness,
        artifacts: Vec::new(),
        floor: None,
        profile: Vec::new(),
    })
}

/// Strict and closed metric entourages at every distance, skipping those
/// below the base scale.
pub fn metric_family(space: &FiniteMetricSpace) -> Result<Vec<Entourage>, SpectraError> {
    let mut out = Vec::new();
    for (i, &d) in space.distance_values().iter().enumerate() {
        if i > 0 {
            out.push(metric_entourage(space, d, true)?);
        }
        out.push(metric_entourage(space, d, false)?);
    }
    Ok(out)
}

/// Partition of a family into cover classes.
#[derive(Debug, Clone)]
pub struct CoverClasses {
    /// Class index per member; the implicit full relation is last.
    pub class_of: Vec<usize>,
    pub sigma: Vec<Sigma>,
    /// Members that could not be compared with some representative.
    pub undecided: Vec<bool>,
}

pub fn cover_classes(family: &[Entourage]) -> Result<CoverClasses, SpectraError> {
    let Some(first) = family.first() else {
        return Ok(CoverClasses { class_of: Vec::new(), sigma: Vec::new(), undecided: Vec::new() });
    };
    let mut members: Vec<Entourage> = family.to_vec();
    members.push(Entourage::full(first.space()));
    let frame = BaseFrame::new(first.space());
    let mut reps: Vec<usize> = Vec::new();
    let mut class_of = vec![usize::MAX; members.len()];
    let mut undecided = vec![false; members.len()];
    let mut trivial_class: Option<usize> = None;
    // the full relation first, so the trivial class is class 0
    let order: Vec<usize> = std::iter::once(members.len() - 1).chain(0..members.len() - 1).collect();
    let mut seen: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    for i in order {
        let m = &members[i];
        if !m.is_chained().chained {
            return Err(SpectraError::NotChained(i));
        }
        if let Some(&c) = seen.get(&m.edges()) {
            class_of[i] = c;
            continue;
        }
        let g = EntourageGroup::with_frame(m, frame.as_ref())?;
        let mut found = None;
        if g.is_trivial() {
            found = trivial_class;
        }
        if found.is_none() {
            for (c, &r) in reps.iter().enumerate() {
                if Some(c) == trivial_class && g.is_trivial() {
                    found = Some(c);
                    break;
                }
                match covers_equivalent(&members[r], m)? {
                    CoverEquivalence::Equivalent => {
                        found = Some(c);
                        break;
                    }
                    CoverEquivalence::Inequivalent { .. } => {}
                    CoverEquivalence::Unknown { .. } => undecided[i] = true,
                }
            }
        }
        let c = found.unwrap_or_else(|| {
            reps.push(i);
            reps.len() - 1
        });
        if g.is_trivial() && trivial_class.is_none() {
            trivial_class = Some(c);
        }
        class_of[i] = c;
        seen.insert(m.edges(), c);
    }
    let sigma = members.iter().map(|m| m.sigma()).collect();
    Ok(CoverClasses { class_of, sigma, undecided })
}

/// NC(ε) over the family (plus the full relation) at every bounded σ value,
/// and the ECS where it jumps.
pub fn nc_profile(family: &[Entourage], family_label: &str) -> Result<SpectrumReport, SpectraError> {
    let cc = cover_classes(family)?;
    let mut grid: Vec<Rational> = cc
        .sigma
        .iter()
        .filter_map(|s| match s {
            Sigma::Finite(r) => Some(*r),
            Sigma::Unbounded => None,
        })
        .collect();
    grid.sort();
    grid.dedup();
    let nc_at = |eps: Option<Rational>| {
        let mut classes = HashSet::new();
        let mut undecided = false;
        for (i, s) in cc.sigma.iter().enumerate() {
            let inside = match (eps, s) {
                (_, Sigma::Unbounded) => true,
                (Some(e), Sigma::Finite(r)) => *r >= e,
                (None, Sigma::Finite(_)) => false,
            };
            if inside {
                classes.insert(cc.class_of[i]);
                undecided |= cc.undecided[i];
            }
        }
        (classes.len(), undecided)
    };
    let profile: Vec<ProfilePoint> = grid
        .iter()
        .map(|&e| {
            let (nc, undecided) = nc_at(Some(e));
            ProfilePoint { eps: e, nc, undecided }
        })
        .collect();
    let mut values = Vec::new();
    for (i, p) in profile.iter().enumerate() {
        let above = profile.get(i + 1).map_or_else(|| nc_at(None).0, |q| q.nc);
        if p.nc > above {
            values.push(SpectralValue { value: p.eps, multiplicity: p.nc - above, certificates: Vec::new() });
        }
    }
    let undecided = profile.iter().any(|p| p.undecided);
    Ok(SpectrumReport {
        kind: SpectrumKind::Ecs,
        values,
        method: vec!["cover_equivalence".into()],
        family: Some(family_label.to_string()),
        completeness: if undecided { Completeness::BudgetLimited } else { Completeness::RelativeToFamily },
        artifacts: Vec::new(),
        floor: None,
        profile,
    })
}

/// `log2` of the bound `2^(C(ε/4)^(40·C(ε/2)))` on NC(ε).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct T2Bound {
    pub eps: Rational,
    pub c_quarter: CoveringNumber,
    pub c_half: CoveringNumber,
    pub log2: BigUint,
}

impl T2Bound {
    /// `true` when `count ≤ 2^log2`.
    pub fn admits(&self, count: usize) -> bool {
        if count <= 1 {
            return true;
        }
        let bits = usize::BITS - (count - 1).leading_zeros();
        self.log2 >= BigUint::from(bits)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let log2 = self.log2.to_string();
        serde_json::json!({
            "schema": REPORT_SCHEMA,
            "kind": "t2_bound",
            "eps": render(&self.eps),
            "c_quarter": self.c_quarter,
            "c_half": self.c_half,
            "log2_bound": log2,
            "log2_bound_digits": log2.len(),
        })
    }
}

pub fn t2_bound(space: &FiniteMetricSpace, eps: Rational) -> Result<T2Bound, SpectraError> {
    if eps <= Rational::from_integer(0) {
        return Err(SpectraError::NonpositiveEps);
    }
    let c_quarter = covering_number(space, eps / 4)?;
    let c_half = covering_number(space, eps / 2)?;
    let exp = u32::try_from(40 * c_half.count).unwrap_or(u32::MAX);
    let log2 = BigUint::from(c_quarter.count).pow(exp);
    Ok(T2Bound { eps, c_quarter, c_half, log2 })
}
