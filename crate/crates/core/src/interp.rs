//! Reference interpreter and trace-equivalence oracle.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::fmt::Write;
use std::rc::Rc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::lang::*;

#[derive(Clone, Debug)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(Rc<str>),
    Array(Rc<RefCell<Vec<Value>>>),
    Object(Rc<RefCell<Object>>),
    Null,
}

#[derive(Clone, Debug)]
pub struct Object {
    pub class: String,
    pub fields: Vec<(String, Value)>,
}

impl Value {
    fn default_for(t: &Type) -> Value {
        match t {
            Type::Int => Value::Int(0),
            Type::Bool => Value::Bool(false),
            Type::Str => Value::Str("".into()),
            _ => Value::Null,
        }
    }

    /// Deterministic textual rendering; shared structure is expanded, cycles are cut.
    pub fn render(&self) -> String {
        let mut out = String::new();
        render(self, &mut out, &mut HashSet::new());
        out
    }
}

fn render(v: &Value, out: &mut String, stack: &mut HashSet<usize>) {
    match v {
        Value::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Str(s) => out.push_str(s),
        Value::Null => out.push_str("null"),
        Value::Array(a) => {
            let key = Rc::as_ptr(a) as usize;
            if !stack.insert(key) {
                out.push_str("<cycle>");
                return;
            }
            out.push('[');
            for (i, x) in a.borrow().iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render(x, out, stack);
            }
            out.push(']');
            stack.remove(&key);
        }
        Value::Object(o) => {
            let key = Rc::as_ptr(o) as usize;
            if !stack.insert(key) {
                out.push_str("<cycle>");
                return;
            }
            let o = o.borrow();
            let _ = write!(out, "{}{{", o.class);
            for (i, (f, x)) in o.fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{f}=");
                render(x, out, stack);
            }
            out.push('}');
            stack.remove(&key);
        }
    }
}

/// Plain-data argument values, materialized into fresh heap values per run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum InputValue {
    Int(i64),
    Bool(bool),
    Str(String),
    Array(Vec<InputValue>),
    Object {
        class: String,
        fields: Vec<(String, InputValue)>,
    },
    Null,
}

impl InputValue {
    pub fn to_value(&self) -> Value {
        match self {
            InputValue::Int(i) => Value::Int(*i),
            InputValue::Bool(b) => Value::Bool(*b),
            InputValue::Str(s) => Value::Str(s.as_str().into()),
            InputValue::Array(xs) => {
                Value::Array(Rc::new(RefCell::new(xs.iter().map(Self::to_value).collect())))
            }
            InputValue::Object { class, fields } => Value::Object(Rc::new(RefCell::new(Object {
                class: class.clone(),
                fields: fields.iter().map(|(f, v)| (f.clone(), v.to_value())).collect(),
            }))),
            InputValue::Null => Value::Null,
        }
    }

    pub fn render(&self) -> String {
        self.to_value().render()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Event {
    Print { text: String },
    FileWrite { file: String, text: String },
    ReturnValue { value: String },
    /// Final state of a reference argument, visible to the caller.
    ArgFinalState { index: usize, value: String },
    GlobalFinalState { name: String, value: String },
    RuntimeError { message: String },
    Timeout,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OutputTrace {
    pub events: Vec<Event>,
}

impl OutputTrace {
    pub fn timed_out(&self) -> bool {
        self.events.last() == Some(&Event::Timeout)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("unknown method '{0}'")]
    UnknownMethod(String),
    #[error("method '{method}' expects {expected} arguments, got {got}")]
    Arity {
        method: String,
        expected: usize,
        got: usize,
    },
    #[error("fuel must be positive")]
    NoFuel,
}

enum Stop {
    Return(Value),
    Error(String),
    Timeout,
}

type Flow<T> = Result<T, Stop>;

struct Machine<'p> {
    program: &'p Program,
    globals: HashMap<String, Value>,
    events: Vec<Event>,
    fuel: u64,
    depth: usize,
}

const MAX_DEPTH: usize = 200;

fn err<T>(msg: impl Into<String>) -> Flow<T> {
    Err(Stop::Error(msg.into()))
}

impl<'p> Machine<'p> {
    fn tick(&mut self) -> Flow<()> {
        if self.fuel == 0 {
            return Err(Stop::Timeout);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn call(&mut self, m: &'p Method, args: Vec<Value>) -> Flow<Value> {
        self.tick()?;
        if self.depth >= MAX_DEPTH {
            return err("call depth exceeded");
        }
        self.depth += 1;
        let mut frame: HashMap<String, Value> = HashMap::new();
        for (p, a) in m.params.iter().zip(args) {
            frame.insert(p.name.clone(), a);
        }
        let r = self.block(&m.body, &mut frame);
        self.depth -= 1;
        match r {
            Ok(()) => Ok(Value::Null),
            Err(Stop::Return(v)) => Ok(v),
            Err(other) => Err(other),
        }
    }

    fn block(&mut self, list: &'p [Stmt], frame: &mut HashMap<String, Value>) -> Flow<()> {
        for s in list {
            self.stmt(s, frame)?;
        }
        Ok(())
    }

    fn simple(&mut self, s: &'p Simple, frame: &mut HashMap<String, Value>) -> Flow<()> {
        match s {
            Simple::Decl(d) => self.decl(d, frame),
            Simple::Assign(a) => self.assign(a, frame),
            Simple::Call(e) => self.expr(e, frame).map(|_| ()),
        }
    }

    fn decl(&mut self, d: &'p VarDecl, frame: &mut HashMap<String, Value>) -> Flow<()> {
        let v = match &d.init {
            Some(e) => self.expr(e, frame)?,
            None => Value::default_for(&d.ty),
        };
        frame.insert(d.name.clone(), v);
        Ok(())
    }

    fn stmt(&mut self, s: &'p Stmt, frame: &mut HashMap<String, Value>) -> Flow<()> {
        self.tick()?;
        match &s.kind {
            StmtKind::VarDecl(d) => self.decl(d, frame),
            StmtKind::Assign(a) => self.assign(a, frame),
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                if self.truth(cond, frame)? {
                    self.block(then_body, frame)
                } else if let Some(e) = else_body {
                    self.block(e, frame)
                } else {
                    Ok(())
                }
            }
            StmtKind::While { cond, body } => {
                while self.truth(cond, frame)? {
                    self.tick()?;
                    self.block(body, frame)?;
                }
                Ok(())
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                if let Some(i) = init {
                    self.simple(i, frame)?;
                }
                while self.truth(cond, frame)? {
                    self.tick()?;
                    self.block(body, frame)?;
                    if let Some(u) = update {
                        self.simple(u, frame)?;
                    }
                }
                Ok(())
            }
            StmtKind::Block(body) => self.block(body, frame),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.expr(e, frame)?,
                    None => Value::Null,
                };
                Err(Stop::Return(v))
            }
            StmtKind::Print(e) => {
                let text = self.expr(e, frame)?.render();
                self.events.push(Event::Print { text });
                Ok(())
            }
            StmtKind::Write { file, value } => {
                let text = self.expr(value, frame)?.render();
                self.events.push(Event::FileWrite {
                    file: file.clone(),
                    text,
                });
                Ok(())
            }
            StmtKind::Call(e) => self.expr(e, frame).map(|_| ()),
        }
    }

    fn truth(&mut self, e: &'p Expr, frame: &mut HashMap<String, Value>) -> Flow<bool> {
        match self.expr(e, frame)? {
            Value::Bool(b) => Ok(b),
            other => err(format!("expected bool, found {}", other.render())),
        }
    }

    fn read_var(&self, name: &str, frame: &HashMap<String, Value>) -> Flow<Value> {
        frame
            .get(name)
            .or_else(|| self.globals.get(name))
            .cloned()
            .map_or_else(|| err(format!("unbound variable '{name}'")), Ok)
    }

    fn assign(&mut self, a: &'p Assign, frame: &mut HashMap<String, Value>) -> Flow<()> {
        if a.target.path.is_empty() {
            let v = self.expr(&a.value, frame)?;
            if frame.contains_key(&a.target.root) {
                frame.insert(a.target.root.clone(), v);
            } else {
                self.globals.insert(a.target.root.clone(), v);
            }
            return Ok(());
        }
        // Evaluate the container path (all but the last access), then the
        // final index, then the value, matching left-to-right order.
        let mut base = self.read_var(&a.target.root, frame)?;
        let (last, prefix) = a.target.path.split_last().expect("non-empty path");
        for access in prefix {
            base = match access {
                Access::Field(f) => self.get_field(&base, f)?,
                Access::Index(i) => {
                    let idx = self.int(i, frame)?;
                    self.get_index(&base, idx)?
                }
            };
        }
        match last {
            Access::Field(f) => {
                let v = self.expr(&a.value, frame)?;
                let Value::Object(o) = base else {
                    return err(format!("field '{f}' of null"));
                };
                let mut o = o.borrow_mut();
                match o.fields.iter_mut().find(|(n, _)| n == f) {
                    Some(slot) => slot.1 = v,
                    None => return err(format!("no field '{f}'")),
                }
                Ok(())
            }
            Access::Index(i) => {
                let idx = self.int(i, frame)?;
                let v = self.expr(&a.value, frame)?;
                let Value::Array(arr) = base else {
                    return err("index into null");
                };
                let mut arr = arr.borrow_mut();
                let len = arr.len();
                match usize::try_from(idx).ok().filter(|&u| u < len) {
                    Some(u) => {
                        arr[u] = v;
                        Ok(())
                    }
                    None => err(format!("index {idx} out of bounds for length {len}")),
                }
            }
        }
    }

    fn get_field(&self, base: &Value, f: &str) -> Flow<Value> {
        match base {
            Value::Object(o) => o
                .borrow()
                .fields
                .iter()
                .find(|(n, _)| n == f)
                .map(|(_, v)| v.clone())
                .map_or_else(|| err(format!("no field '{f}'")), Ok),
            _ => err(format!("field '{f}' of null")),
        }
    }

    fn get_index(&self, base: &Value, idx: i64) -> Flow<Value> {
        match base {
            Value::Array(a) => {
                let a = a.borrow();
                match usize::try_from(idx).ok().and_then(|u| a.get(u)) {
                    Some(v) => Ok(v.clone()),
                    None => err(format!("index {idx} out of bounds for length {}", a.len())),
                }
            }
            _ => err("index into null"),
        }
    }

    fn int(&mut self, e: &'p Expr, frame: &mut HashMap<String, Value>) -> Flow<i64> {
        match self.expr(e, frame)? {
            Value::Int(i) => Ok(i),
            other => err(format!("expected int, found {}", other.render())),
        }
    }

    fn expr(&mut self, e: &'p Expr, frame: &mut HashMap<String, Value>) -> Flow<Value> {
        Ok(match e {
            Expr::Int(i) => Value::Int(*i),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Str(s) => Value::Str(s.as_str().into()),
            Expr::Var(n) => self.read_var(n, frame)?,
            Expr::Field(base, f) => {
                let b = self.expr(base, frame)?;
                self.get_field(&b, f)?
            }
            Expr::Index(base, idx) => {
                let b = self.expr(base, frame)?;
                let i = self.int(idx, frame)?;
                self.get_index(&b, i)?
            }
            Expr::Unary(UnOp::Neg, inner) => Value::Int(self.int(inner, frame)?.wrapping_neg()),
            Expr::Unary(UnOp::Not, inner) => Value::Bool(!self.truth(inner, frame)?),
            Expr::Binary(op, l, r) => {
                let lv = self.expr(l, frame)?;
                let rv = self.expr(r, frame)?;
                binary(*op, lv, rv)?
            }
            Expr::Call {
                receiver,
                name,
                args,
            } => {
                let mut vals = Vec::with_capacity(args.len() + 1);
                if let Some(r) = receiver {
                    vals.push(self.expr(r, frame)?);
                }
                for a in args {
                    vals.push(self.expr(a, frame)?);
                }
                if receiver.is_none() && name == "len" {
                    return match &vals[0] {
                        Value::Array(a) => Ok(Value::Int(a.borrow().len() as i64)),
                        _ => err("len of null"),
                    };
                }
                if receiver.is_some() && matches!(vals[0], Value::Null) {
                    return err(format!("call '{name}' on null"));
                }
                let m = self
                    .program
                    .method(name)
                    .map_or_else(|| err(format!("unknown method '{name}'")), Ok)?;
                self.call(m, vals)?
            }
            Expr::New(c) => {
                let class = self
                    .program
                    .class(c)
                    .map_or_else(|| err(format!("unknown class '{c}'")), Ok)?;
                Value::Object(Rc::new(RefCell::new(Object {
                    class: c.clone(),
                    fields: class
                        .fields
                        .iter()
                        .map(|(f, t)| (f.clone(), Value::default_for(t)))
                        .collect(),
                })))
            }
            Expr::NewArray(t, len) => {
                let n = self.int(len, frame)?;
                if n < 0 {
                    return err(format!("negative array size {n}"));
                }
                if n > 1_000_000 {
                    return err(format!("array size {n} too large"));
                }
                Value::Array(Rc::new(RefCell::new(vec![Value::default_for(t); n as usize])))
            }
            Expr::ArrayLit(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for i in items {
                    vals.push(self.expr(i, frame)?);
                }
                Value::Array(Rc::new(RefCell::new(vals)))
            }
        })
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Flow<Value> {
    use BinOp::*;
    Ok(match (op, &l, &r) {
        (Add, Value::Str(_), _) | (Add, _, Value::Str(_)) => {
            Value::Str(format!("{}{}", l.render(), r.render()).into())
        }
        (Eq, _, _) => Value::Bool(values_equal(&l, &r)),
        (Ne, _, _) => Value::Bool(!values_equal(&l, &r)),
        (And, Value::Bool(a), Value::Bool(b)) => Value::Bool(*a && *b),
        (Or, Value::Bool(a), Value::Bool(b)) => Value::Bool(*a || *b),
        (_, Value::Int(a), Value::Int(b)) => {
            let (a, b) = (*a, *b);
            match op {
                Add => Value::Int(a.wrapping_add(b)),
                Sub => Value::Int(a.wrapping_sub(b)),
                Mul => Value::Int(a.wrapping_mul(b)),
                Div | Rem if b == 0 => return err("division by zero"),
                Div => Value::Int(a.wrapping_div(b)),
                Rem => Value::Int(a.wrapping_rem(b)),
                Lt => Value::Bool(a < b),
                Le => Value::Bool(a <= b),
                Gt => Value::Bool(a > b),
                Ge => Value::Bool(a >= b),
                _ => return err("bad operands"),
            }
        }
        _ => return err(format!("bad operands for '{}'", op.symbol())),
    })
}

fn values_equal(l: &Value, r: &Value) -> bool {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => a == b,
        (Value::Bool(a), Value::Bool(b)) => a == b,
        (Value::Str(a), Value::Str(b)) => a == b,
        (Value::Array(a), Value::Array(b)) => Rc::ptr_eq(a, b),
        (Value::Object(a), Value::Object(b)) => Rc::ptr_eq(a, b),
        (Value::Null, Value::Null) => true,
        _ => false,
    }
}

/// Runs `method` on `args` with a step budget. Events: prints and file
/// writes in order, then the return value, the final state of reference
/// arguments, and every global's final value. A runtime error or exhausted
/// fuel ends the trace with a distinguished event.
pub fn run(program: &Program, method: &str, args: &[InputValue], fuel: u64) -> Result<OutputTrace, RunError> {
    let m = program
        .method(method)
        .ok_or_else(|| RunError::UnknownMethod(method.to_string()))?;
    if args.len() != m.params.len() {
        return Err(RunError::Arity {
            method: method.to_string(),
            expected: m.params.len(),
            got: args.len(),
        });
    }
    if fuel == 0 {
        return Err(RunError::NoFuel);
    }
    let mut machine = Machine {
        program,
        globals: HashMap::new(),
        events: Vec::new(),
        fuel,
        depth: 0,
    };
    let mut init_error = None;
    for g in &program.globals {
        let v = match &g.init {
            Some(e) => match machine.expr(e, &mut HashMap::new()) {
                Ok(v) => v,
                Err(Stop::Error(msg)) => {
                    init_error = Some(msg);
                    Value::default_for(&g.ty)
                }
                Err(_) => Value::default_for(&g.ty),
            },
            None => Value::default_for(&g.ty),
        };
        machine.globals.insert(g.name.clone(), v);
    }
    if let Some(message) = init_error {
        return Ok(OutputTrace {
            events: vec![Event::RuntimeError { message }],
        });
    }
    let values: Vec<Value> = args.iter().map(InputValue::to_value).collect();
    let result = machine.call(m, values.clone());
    let mut events = std::mem::take(&mut machine.events);
    match result {
        Ok(v) => {
            if m.ret != Type::Void {
                events.push(Event::ReturnValue { value: v.render() });
            }
            for (i, (p, v)) in m.params.iter().zip(&values).enumerate() {
                if p.ty.is_reference() {
                    events.push(Event::ArgFinalState {
                        index: i,
                        value: v.render(),
                    });
                }
            }
            for g in &program.globals {
                events.push(Event::GlobalFinalState {
                    name: g.name.clone(),
                    value: machine.globals[&g.name].render(),
                });
            }
        }
        Err(Stop::Error(message)) => events.push(Event::RuntimeError { message }),
        Err(Stop::Timeout) => events.push(Event::Timeout),
        Err(Stop::Return(_)) => unreachable!("returns are caught by call"),
    }
    Ok(OutputTrace { events })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub input_index: usize,
    pub args: Vec<String>,
    pub event_index: usize,
    pub left: Option<Event>,
    pub right: Option<Event>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Equivalence {
    pub equivalent: bool,
    pub divergence: Option<Divergence>,
}

/// Compares traces of the same method in two programs on every input.
pub fn equivalent(
    p1: &Program,
    p2: &Program,
    method: &str,
    inputs: &[Vec<InputValue>],
    fuel: u64,
) -> Result<Equivalence, RunError> {
    for (k, args) in inputs.iter().enumerate() {
        let a = run(p1, method, args, fuel)?;
        let b = run(p2, method, args, fuel)?;
        if a != b {
            let n = a.events.len().max(b.events.len());
            let i = (0..n)
                .find(|&i| a.events.get(i) != b.events.get(i))
                .unwrap_or(n);
            return Ok(Equivalence {
                equivalent: false,
                divergence: Some(Divergence {
                    input_index: k,
                    args: args.iter().map(InputValue::render).collect(),
                    event_index: i,
                    left: a.events.get(i).cloned(),
                    right: b.events.get(i).cloned(),
                }),
            });
        }
    }
    Ok(Equivalence {
        equivalent: true,
        divergence: None,
    })
}

const ALPHABET: &[u8] = b"abxy";

fn random_value(program: &Program, t: &Type, rng: &mut ChaCha8Rng, depth: usize) -> InputValue {
    match t {
        Type::Int | Type::Void => InputValue::Int(rng.gen_range(-100..=100)),
        Type::Bool => InputValue::Bool(rng.gen()),
        Type::Str => {
            let n = rng.gen_range(0..=4);
            InputValue::Str(
                (0..n)
                    .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
                    .collect(),
            )
        }
        Type::Array(elem) => {
            let n = rng.gen_range(0..=8);
            InputValue::Array((0..n).map(|_| random_value(program, elem, rng, depth + 1)).collect())
        }
        Type::Class(c) => {
            if depth > 2 {
                return InputValue::Null;
            }
            let Some(class) = program.class(c) else {
                return InputValue::Null;
            };
            InputValue::Object {
                class: c.clone(),
                fields: class
                    .fields
                    .iter()
                    .map(|(f, ft)| (f.clone(), random_value(program, ft, rng, depth + 1)))
                    .collect(),
            }
        }
    }
}

/// `count` argument tuples for `method` from a seeded generator: ints in
/// [-100, 100], arrays of length 0..=8, short strings over a small alphabet.
pub fn random_inputs(
    program: &Program,
    method: &str,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<InputValue>>, RunError> {
    let m = program
        .method(method)
        .ok_or_else(|| RunError::UnknownMethod(method.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            m.params
                .iter()
                .map(|p| random_value(program, &p.ty, &mut rng, 0))
                .collect()
        })
        .collect())
}

/// Converts a JSON value to an argument of type `t`.
pub fn input_from_json(program: &Program, t: &Type, v: &serde_json::Value) -> Option<InputValue> {
    use serde_json::Value as J;
    Some(match (t, v) {
        (_, J::Null) if t.is_reference() => InputValue::Null,
        (Type::Int, J::Number(n)) => InputValue::Int(n.as_i64()?),
        (Type::Bool, J::Bool(b)) => InputValue::Bool(*b),
        (Type::Str, J::String(s)) => InputValue::Str(s.clone()),
        (Type::Array(elem), J::Array(items)) => InputValue::Array(
            items
                .iter()
                .map(|i| input_from_json(program, elem, i))
                .collect::<Option<_>>()?,
        ),
        (Type::Class(c), J::Object(map)) => {
            let class = program.class(c)?;
            let mut fields = Vec::new();
            for (f, ft) in &class.fields {
                let fv = match map.get(f) {
                    Some(x) => input_from_json(program, ft, x)?,
                    None => match ft {
                        Type::Int => InputValue::Int(0),
                        Type::Bool => InputValue::Bool(false),
                        Type::Str => InputValue::Str(String::new()),
                        _ => InputValue::Null,
                    },
                };
                fields.push((f.clone(), fv));
            }
            InputValue::Object {
                class: c.clone(),
                fields,
            }
        }
        _ => return None,
    })
}
