use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use super::config::{Mode, PipelineConfig};
use super::schedule::{build_schedule_for, OpKind, ScheduledOp};
use crate::clashfree::{address_schedule, AccessSchedule};
use crate::engine::{activate, cross_entropy, Activation, Optimizer, SparseModel, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BankKind {
    Weight,
    Act,
    ActDeriv,
    Delta,
    Bias,
}

impl BankKind {
    /// Weight, delta and bias memories have a read port and a write port; activation
    /// memories have a single port.
    pub fn dual_ported(self) -> bool {
        !matches!(self, BankKind::Act | BankKind::ActDeriv)
    }

    pub fn prefix(self) -> &'static str {
        match self {
            BankKind::Weight => "W",
            BankKind::Act => "a",
            BankKind::ActDeriv => "da",
            BankKind::Delta => "delta",
            BankKind::Bias => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rw {
    Read,
    Write,
}

impl fmt::Display for Rw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rw::Read => "r",
            Rw::Write => "w",
        })
    }
}

/// One memory access. `layer` is the layer a value belongs to; weight banks use the
/// junction number. `version` is the physical copy within a queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Access {
    pub slot: u32,
    pub cycle: u32,
    pub junction: u16,
    pub op: OpKind,
    pub bank: BankKind,
    pub layer: u16,
    pub version: u16,
    pub memory: u32,
    pub address: u32,
    pub rw: Rw,
}

impl Access {
    pub fn bank_name(&self) -> String {
        match self.bank {
            BankKind::Weight | BankKind::Bias => format!("{}{}", self.bank.prefix(), self.layer),
            _ => format!("{}{}[{}]", self.bank.prefix(), self.layer, self.version),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineTrace {
    pub mode: Mode,
    pub n_inputs: usize,
    pub slots: Vec<Vec<ScheduledOp>>,
    pub slot_cycles: usize,
    pub junction_cycles: Vec<usize>,
    pub total_cycles: u64,
    /// Every access in execution order, when recording was enabled.
    pub accesses: Vec<Access>,
    /// Largest number of simultaneously live copies seen per (bank kind, layer).
    pub max_live: BTreeMap<(BankKind, usize), usize>,
}

impl PipelineTrace {
    pub fn junctions(&self) -> usize {
        self.junction_cycles.len()
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub trace: PipelineTrace,
    /// Softmax output per input.
    pub outputs: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    pub model: SparseModel,
}

struct Queue {
    occupant: Vec<Option<usize>>,
    buffers: Vec<Vec<f64>>,
}

impl Queue {
    fn new(depth: usize, width: usize) -> Self {
        Self {
            occupant: vec![None; depth],
            buffers: vec![vec![0.0; width]; depth],
        }
    }

    fn phys(&self, input: usize) -> usize {
        input % self.occupant.len()
    }

    fn alloc(&mut self, input: usize, name: &str) -> Result<usize> {
        if self.occupant.is_empty() {
            return Err(Error::BankOverflow(format!("{name} queue has depth 0")));
        }
        let p = self.phys(input);
        match self.occupant[p] {
            Some(other) if other != input => Err(Error::BankOverflow(format!(
                "{name} queue of depth {} still holds input {other} when input {input} arrives",
                self.occupant.len()
            ))),
            _ => {
                self.occupant[p] = Some(input);
                self.buffers[p].fill(0.0);
                Ok(p)
            }
        }
    }

    fn free(&mut self, input: usize) {
        let p = self.phys(input);
        if self.occupant[p] == Some(input) {
            self.occupant[p] = None;
        }
    }

    fn live(&self) -> usize {
        self.occupant.iter().filter(|o| o.is_some()).count()
    }
}

struct Banks {
    act: Vec<Queue>,
    act_deriv: Vec<Queue>,
    delta: Vec<Queue>,
}

impl Banks {
    fn queue(&mut self, kind: BankKind, layer: usize) -> &mut Queue {
        match kind {
            BankKind::Act => &mut self.act[layer],
            BankKind::ActDeriv => &mut self.act_deriv[layer],
            BankKind::Delta => &mut self.delta[layer],
            _ => unreachable!("weights and biases are not queued"),
        }
    }

    fn alloc(&mut self, kind: BankKind, layer: usize, input: usize) -> Result<()> {
        let name = format!("{}{layer}", kind.prefix());
        self.queue(kind, layer).alloc(input, &name).map(|_| ())
    }
}

#[derive(Default)]
struct JunctionOps {
    ff: Option<usize>,
    bp: Option<usize>,
    up: Option<usize>,
    load: Option<usize>,
}

struct Recorder {
    slot: u32,
    cycle: u32,
    junction: u16,
    buf: Vec<Access>,
}

impl Recorder {
    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn push(
        &mut self,
        op: OpKind,
        bank: BankKind,
        layer: usize,
        version: usize,
        memory: usize,
        address: usize,
        rw: Rw,
    ) {
        self.buf.push(Access {
            slot: self.slot,
            cycle: self.cycle,
            junction: self.junction,
            op,
            bank,
            layer: layer as u16,
            version: version as u16,
            memory: memory as u32,
            address: address as u32,
            rw,
        });
    }
}

/// Same-cell same-direction accesses in one cycle share a port use.
fn check_clashes(buf: &[Access], keys: &mut Vec<(BankKind, u16, u16, u32, Rw, u32)>) -> Result<()> {
    keys.clear();
    keys.extend(
        buf.iter()
            .map(|a| (a.bank, a.layer, a.version, a.memory, a.rw, a.address)),
    );
    keys.sort_unstable();
    keys.dedup();
    let mut i = 0;
    while i < keys.len() {
        let k = keys[i];
        let mut j = i;
        let (mut reads, mut writes) = (0, 0);
        while j < keys.len()
            && keys[j].0 == k.0
            && keys[j].1 == k.1
            && keys[j].2 == k.2
            && keys[j].3 == k.3
        {
            match keys[j].4 {
                Rw::Read => reads += 1,
                Rw::Write => writes += 1,
            }
            j += 1;
        }
        let ok = if k.0.dual_ported() {
            reads <= 1 && writes <= 1
        } else {
            reads + writes <= 1
        };
        if !ok {
            let a = &buf[0];
            let addrs: Vec<String> = keys[i..j]
                .iter()
                .map(|x| format!("{}{}", x.4, x.5))
                .collect();
            return Err(Error::Clash(format!(
                "slot {} cycle {} junction {}: {}{} copy {} memory {} gets {}",
                a.slot,
                a.cycle,
                a.junction,
                k.0.prefix(),
                k.1,
                k.2,
                k.3,
                addrs.join(" ")
            )));
        }
        i = j;
    }
    Ok(())
}

fn check_patterns(
    model: &SparseModel,
    cfg: &PipelineConfig,
    schedules: &[AccessSchedule],
) -> Result<()> {
    if model.layer_sizes() != cfg.network().layer_sizes() {
        return Err(Error::Config(format!(
            "model layers {:?} differ from pipeline layers {:?}",
            model.layer_sizes(),
            cfg.network().layer_sizes()
        )));
    }
    if model
        .activations()
        .iter()
        .rev()
        .skip(1)
        .any(|&a| a != Activation::Relu)
    {
        return Err(Error::Config("simulator expects ReLU hidden layers".into()));
    }
    for (j, (p, s)) in model.patterns().iter().zip(schedules).enumerate() {
        let d_in = cfg.network().in_degree(j);
        let z = s.z();
        let seq_ok = p.left_indices().iter().enumerate().all(|(e, &k)| {
            let cell = s.cycle(e / z)[e % z];
            cell.neuron(z) == k as usize
        });
        let rows_ok = p.offsets().iter().enumerate().all(|(r, &o)| o == r * d_in);
        if !seq_ok || !rows_ok || p.edge_count() != s.cycles() * z {
            return Err(Error::Config(format!(
                "junction {}: model pattern does not follow the junction's access schedule",
                j + 1
            )));
        }
    }
    Ok(())
}

/// Runs the schedule cycle by cycle, training a copy of `model` on the input sequence.
///
/// Every read sees the memory contents at that cycle: weights read by FF or BP in a cycle
/// are the values before that cycle's UP writes. Any clash or queue overflow aborts.
pub fn simulate(
    model: &SparseModel,
    cfg: &PipelineConfig,
    train: &TrainConfig,
    inputs: &[&[f64]],
    labels: &[usize],
) -> Result<SimOutcome> {
    train.validate()?;
    if inputs.len() != labels.len() {
        return Err(Error::Config(format!(
            "{} inputs but {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    let l = cfg.num_junctions();
    let sizes = cfg.network().layer_sizes().to_vec();
    let schedules: Vec<AccessSchedule> = cfg.specs().iter().map(address_schedule).collect();
    check_patterns(model, cfg, &schedules)?;
    for (n, (x, &y)) in inputs.iter().zip(labels).enumerate() {
        if x.len() != sizes[0] || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "input {n}: expected {} finite values",
                sizes[0]
            )));
        }
        if y >= sizes[l] {
            return Err(Error::Config(format!(
                "input {n}: label {y} >= {} classes",
                sizes[l]
            )));
        }
    }

    let mut model = model.clone();
    let mut opt = Optimizer::new(&model, train);
    let depths = &cfg.depths;
    let mut banks = Banks {
        act: (0..l)
            .map(|i| Queue::new(depths.activations[i], sizes[i]))
            .collect(),
        act_deriv: (0..l)
            .map(|i| {
                Queue::new(
                    if i == 0 {
                        0
                    } else {
                        depths.activation_derivatives[i]
                    },
                    sizes[i],
                )
            })
            .collect(),
        delta: (0..=l)
            .map(|i| Queue::new(if i == 0 { 0 } else { depths.deltas }, sizes[i]))
            .collect(),
    };
    let schedule = build_schedule_for(l, inputs.len(), cfg.mode);
    let junction_cycles = cfg.junction_cycles();
    let slot_cycles = cfg.slot_cycles();
    let mut trace = PipelineTrace {
        mode: cfg.mode,
        n_inputs: inputs.len(),
        slots: schedule.slots().map(<[ScheduledOp]>::to_vec).collect(),
        slot_cycles,
        junction_cycles: junction_cycles.clone(),
        total_cycles: (schedule.len() * slot_cycles) as u64,
        accesses: Vec::new(),
        max_live: BTreeMap::new(),
    };
    let mut outputs = vec![Vec::new(); inputs.len()];
    let mut losses = vec![f64::NAN; inputs.len()];
    let mut rec = Recorder {
        slot: 0,
        cycle: 0,
        junction: 0,
        buf: Vec::new(),
    };
    let mut keys = Vec::new();

    for (s, ops) in schedule.slots().enumerate() {
        let mut per_junction: Vec<JunctionOps> = (0..l).map(|_| JunctionOps::default()).collect();
        for o in ops {
            match o.op {
                OpKind::Load => {
                    banks.alloc(BankKind::Act, 0, o.input)?;
                    per_junction[0].load = Some(o.input);
                }
                OpKind::Ff => {
                    if o.junction < l {
                        banks.alloc(BankKind::Act, o.junction, o.input)?;
                        banks.alloc(BankKind::ActDeriv, o.junction, o.input)?;
                    } else {
                        banks.alloc(BankKind::Delta, l, o.input)?;
                    }
                    per_junction[o.junction - 1].ff = Some(o.input);
                }
                OpKind::Bp => {
                    banks.alloc(BankKind::Delta, o.junction - 1, o.input)?;
                    per_junction[o.junction - 1].bp = Some(o.input);
                }
                OpKind::Up => per_junction[o.junction - 1].up = Some(o.input),
            }
        }
        for (kind, queues) in [
            (BankKind::Act, &banks.act),
            (BankKind::ActDeriv, &banks.act_deriv),
            (BankKind::Delta, &banks.delta),
        ] {
            for (layer, q) in queues.iter().enumerate() {
                if !q.occupant.is_empty() {
                    let e = trace.max_live.entry((kind, layer)).or_insert(0);
                    *e = (*e).max(q.live());
                }
            }
        }

        rec.slot = s as u32;
        for (j, jops) in per_junction.iter().enumerate() {
            rec.junction = (j + 1) as u16;
            let h_out = run_junction(
                j,
                jops,
                cfg,
                &schedules[j],
                &mut model,
                &mut opt,
                &mut banks,
                inputs,
                &mut rec,
                &mut keys,
                &mut trace.accesses,
            )?;
            if let (Some(n), Some(h)) = (jops.ff, h_out) {
                let q = &mut banks.delta[l];
                let p = q.phys(n);
                let (a, loss) = flush_output(&h, labels[n], &mut q.buffers[p]);
                outputs[n] = a;
                losses[n] = loss;
            }
        }

        for o in ops {
            match o.op {
                OpKind::Up => {
                    banks.act[o.junction - 1].free(o.input);
                    banks.delta[o.junction].free(o.input);
                }
                OpKind::Bp => banks.act_deriv[o.junction - 1].free(o.input),
                _ => {}
            }
        }
    }
    Ok(SimOutcome {
        trace,
        outputs,
        losses,
        model,
    })
}

/// Softmax and output deltas for one input, computed after the last FF cycle.
fn flush_output(h: &[f64], label: usize, delta: &mut [f64]) -> (Vec<f64>, f64) {
    let mut a = vec![0.0; h.len()];
    let mut da = vec![0.0; h.len()];
    activate(Activation::Softmax, h, &mut a, &mut da);
    for (r, d) in delta.iter_mut().enumerate() {
        let y = if r == label { 1.0 } else { 0.0 };
        *d = a[r] - y;
    }
    (a, cross_entropy(h, label))
}

#[allow(clippy::too_many_arguments)]
fn run_junction(
    j: usize,
    ops: &JunctionOps,
    cfg: &PipelineConfig,
    sched: &AccessSchedule,
    model: &mut SparseModel,
    opt: &mut Optimizer,
    banks: &mut Banks,
    inputs: &[&[f64]],
    rec: &mut Recorder,
    keys: &mut Vec<(BankKind, u16, u16, u32, Rw, u32)>,
    log: &mut Vec<Access>,
) -> Result<Option<Vec<f64>>> {
    let l = cfg.num_junctions();
    let last = j + 1 == l;
    let z = sched.z();
    let depth = sched.depth();
    let sweeps = cfg.specs()[j].sweeps();
    let d_in = cfg.network().in_degree(j);
    let n_right = cfg.network().right_size(j);
    let m_right = cfg.memories(j + 1);
    let record = cfg.record_accesses;
    let jn = j + 1;

    // loads and values written this slot are moved out of their queues while in use
    let mut load_buf = ops.load.map(|n| {
        let q = &mut banks.act[0];
        let p = q.phys(n);
        (p, std::mem::take(&mut q.buffers[p]))
    });
    let mut a_right = ops.ff.filter(|_| !last).map(|n| {
        let q = &mut banks.act[j + 1];
        let p = q.phys(n);
        (p, std::mem::take(&mut q.buffers[p]))
    });
    let mut da_right = ops.ff.filter(|_| !last).map(|n| {
        let q = &mut banks.act_deriv[j + 1];
        let p = q.phys(n);
        (p, std::mem::take(&mut q.buffers[p]))
    });
    let mut delta_left = ops.bp.map(|n| {
        let q = &mut banks.delta[j];
        let p = q.phys(n);
        (p, std::mem::take(&mut q.buffers[p]))
    });
    let mut h_out = (ops.ff.is_some() && last).then(|| vec![0.0; n_right]);
    let mut ff_acc = vec![0.0; if ops.ff.is_some() { n_right } else { 0 }];
    let mut ff_bias = ff_acc.clone();

    let phys = |q: &Queue, n: usize| q.phys(n);
    let ff_left = ops.ff.map(|n| {
        let q = &banks.act[j];
        let p = phys(q, n);
        (p, &q.buffers[p])
    });
    let up_left = ops.up.map(|n| {
        let q = &banks.act[j];
        let p = phys(q, n);
        (p, &q.buffers[p])
    });
    let bp_da = ops.bp.map(|n| {
        let q = &banks.act_deriv[j];
        let p = phys(q, n);
        (p, &q.buffers[p])
    });
    let right_delta = ops.bp.or(ops.up).map(|n| {
        let q = &banks.delta[j + 1];
        let p = phys(q, n);
        (p, &q.buffers[p])
    });
    let hp = ops.up.map(|n| opt.params(n as u64 + 1));

    if let (Some(n), Some((_, buf))) = (ops.load, load_buf.as_mut()) {
        buf.copy_from_slice(inputs[n]);
    }
    let active = ops.ff.is_some() || ops.bp.is_some() || ops.up.is_some();
    let w = &mut model.weights[j];
    let b = &mut model.biases[j];
    let mut bad_edge = None;
    for c in 0..sched.cycles() {
        rec.cycle = c as u32;
        rec.buf.clear();
        if let Some((p, _)) = &load_buf {
            if c < depth {
                for lane in 0..z {
                    rec.push(OpKind::Load, BankKind::Act, 0, *p, lane, c, Rw::Write);
                }
            }
        }
        if !active {
            if !rec.buf.is_empty() {
                check_clashes(&rec.buf, keys)?;
                if record {
                    log.extend_from_slice(&rec.buf);
                }
            }
            continue;
        }
        let cells = sched.cycle(c);
        let sweep = c / depth;
        for (lane, cell) in cells.iter().enumerate() {
            let e = c * z + lane;
            let k = cell.neuron(z);
            let r = e / d_in;
            let first = e % d_in == 0;
            let last_edge = e % d_in == d_in - 1;
            let (rm, ra) = (r % m_right, r / m_right);
            if let Some((pa, a_left)) = ff_left {
                rec.push(OpKind::Ff, BankKind::Weight, jn, 0, lane, c, Rw::Read);
                rec.push(
                    OpKind::Ff,
                    BankKind::Act,
                    j,
                    pa,
                    cell.memory,
                    cell.address,
                    Rw::Read,
                );
                if first {
                    rec.push(OpKind::Ff, BankKind::Bias, jn, 0, rm, ra, Rw::Read);
                    ff_acc[r] = 0.0;
                    ff_bias[r] = b[r];
                }
                ff_acc[r] += w[e] * a_left[k];
                if last_edge {
                    let h = ff_acc[r] + ff_bias[r];
                    if let Some(out) = h_out.as_mut() {
                        out[r] = h;
                    } else {
                        let (pa_r, a_r) = a_right.as_mut().expect("hidden layer");
                        let (pd_r, d_r) = da_right.as_mut().expect("hidden layer");
                        activate(Activation::Relu, &[h], &mut a_r[r..=r], &mut d_r[r..=r]);
                        rec.push(OpKind::Ff, BankKind::Act, j + 1, *pa_r, rm, ra, Rw::Write);
                        rec.push(
                            OpKind::Ff,
                            BankKind::ActDeriv,
                            j + 1,
                            *pd_r,
                            rm,
                            ra,
                            Rw::Write,
                        );
                    }
                }
            }
            if let Some((pd, acc)) = delta_left.as_mut() {
                let (pr, d_right) = right_delta.expect("BP reads right deltas");
                rec.push(OpKind::Bp, BankKind::Weight, jn, 0, lane, c, Rw::Read);
                if first {
                    rec.push(OpKind::Bp, BankKind::Delta, j + 1, pr, rm, ra, Rw::Read);
                }
                if sweep > 0 {
                    rec.push(
                        OpKind::Bp,
                        BankKind::Delta,
                        j,
                        *pd,
                        cell.memory,
                        cell.address,
                        Rw::Read,
                    );
                }
                acc[k] += w[e] * d_right[r];
                if sweep + 1 == sweeps {
                    let (pda, da) = bp_da.expect("BP reads derivatives");
                    rec.push(
                        OpKind::Bp,
                        BankKind::ActDeriv,
                        j,
                        pda,
                        cell.memory,
                        cell.address,
                        Rw::Read,
                    );
                    acc[k] = da[k] * acc[k];
                }
                rec.push(
                    OpKind::Bp,
                    BankKind::Delta,
                    j,
                    *pd,
                    cell.memory,
                    cell.address,
                    Rw::Write,
                );
            }
            if let (Some((pa, a_left)), Some(hp)) = (up_left, hp.as_ref()) {
                let (pr, d_right) = right_delta.expect("UP reads right deltas");
                rec.push(OpKind::Up, BankKind::Weight, jn, 0, lane, c, Rw::Read);
                rec.push(
                    OpKind::Up,
                    BankKind::Act,
                    j,
                    pa,
                    cell.memory,
                    cell.address,
                    Rw::Read,
                );
                if first {
                    rec.push(OpKind::Up, BankKind::Delta, j + 1, pr, rm, ra, Rw::Read);
                    rec.push(OpKind::Up, BankKind::Bias, jn, 0, rm, ra, Rw::Read);
                }
                let g = a_left[k] * d_right[r];
                opt.update_weight(hp, j, e, &mut w[e], g);
                if !w[e].is_finite() {
                    bad_edge = Some(e);
                }
                rec.push(OpKind::Up, BankKind::Weight, jn, 0, lane, c, Rw::Write);
                if last_edge {
                    opt.update_bias(hp, j, r, &mut b[r], d_right[r]);
                    rec.push(OpKind::Up, BankKind::Bias, jn, 0, rm, ra, Rw::Write);
                }
            }
        }
        check_clashes(&rec.buf, keys)?;
        if let Some(e) = bad_edge {
            return Err(Error::Numeric(format!(
                "slot {} junction {jn}: weight {e} became non-finite",
                rec.slot
            )));
        }
        if record {
            log.extend_from_slice(&rec.buf);
        }
    }

    if let Some((p, buf)) = load_buf {
        banks.act[0].buffers[p] = buf;
    }
    if let Some((p, buf)) = a_right {
        banks.act[j + 1].buffers[p] = buf;
    }
    if let Some((p, buf)) = da_right {
        banks.act_deriv[j + 1].buffers[p] = buf;
    }
    if let Some((p, buf)) = delta_left {
        banks.delta[j].buffers[p] = buf;
    }
    Ok(h_out)
}

/// One line per access: slot, cycle, junction, op, bank, memory, address, rw.
pub fn write_trace_csv(trace: &PipelineTrace, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = crate::engine::csv_err;
    out.write_record([
        "slot", "cycle", "junction", "op", "bank", "memory", "address", "rw",
    ])
    .map_err(err)?;
    for a in &trace.accesses {
        out.write_record([
            a.slot.to_string(),
            a.cycle.to_string(),
            a.junction.to_string(),
            a.op.to_string(),
            a.bank_name(),
            a.memory.to_string(),
            a.address.to_string(),
            a.rw.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush()?;
    Ok(())
}
