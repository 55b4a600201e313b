//! The slice of the Java standard library the corpus programs lean on.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::rc::Rc;

use super::interp::RuntimeErrorKind as K;
use super::value::{CollKind, Key, Value};

pub type BResult = Result<Value, (K, String)>;

fn err<T>(kind: K, msg: impl Into<String>) -> Result<T, (K, String)> {
    Err((kind, msg.into()))
}

fn int(v: &Value) -> Result<i64, (K, String)> {
    v.as_i64().ok_or_else(|| (K::Type, format!("expected an integer, got {}", v.type_name())))
}

fn float(v: &Value) -> Result<f64, (K, String)> {
    v.as_f64().ok_or_else(|| (K::Type, format!("expected a number, got {}", v.type_name())))
}

fn key(v: &Value) -> Result<Key, (K, String)> {
    v.key().ok_or_else(|| (K::Unsupported, format!("{} cannot be a map or set key", v.type_name())))
}

fn index(i: i64, len: usize) -> Result<usize, (K, String)> {
    if i < 0 || i as usize >= len {
        return err(K::IndexOutOfBounds, format!("index {i} out of bounds for length {len}"));
    }
    Ok(i as usize)
}

fn int_value(v: i64) -> Value {
    match i32::try_from(v) {
        Ok(i) => Value::Int(i),
        Err(_) => Value::Long(v),
    }
}

/// Same numeric kind as `like`: `Math.max` on ints stays int.
fn numeric_like(like: &[&Value], v: f64) -> Value {
    if like.iter().any(|x| matches!(x, Value::Double(_))) {
        Value::Double(v)
    } else if like.iter().any(|x| matches!(x, Value::Long(_))) {
        Value::Long(v as i64)
    } else {
        Value::Int(v as i32)
    }
}

pub fn static_field(class: &str, name: &str) -> Option<Value> {
    Some(match (class, name) {
        ("Integer", "MAX_VALUE") => Value::Int(i32::MAX),
        ("Integer", "MIN_VALUE") => Value::Int(i32::MIN),
        ("Long", "MAX_VALUE") => Value::Long(i64::MAX),
        ("Long", "MIN_VALUE") => Value::Long(i64::MIN),
        ("Double", "MAX_VALUE") => Value::Double(f64::MAX),
        ("Double", "MIN_VALUE") => Value::Double(f64::MIN_POSITIVE),
        ("Math", "PI") => Value::Double(std::f64::consts::PI),
        _ => return None,
    })
}

fn sort_values(items: &mut [Value]) {
    items.sort_by(|a, b| a.compare(b));
}

pub fn call_static(class: &str, name: &str, args: &[Value]) -> Option<BResult> {
    let a = |i: usize| args.get(i).cloned().unwrap_or(Value::Void);
    Some(match (class, name, args.len()) {
        ("Math", "max", 2) | ("Math", "min", 2) => (|| {
            let pick_max = name == "max";
            if args.iter().any(|v| matches!(v, Value::Double(_))) {
                let (x, y) = (float(&args[0])?, float(&args[1])?);
                return Ok(Value::Double(if pick_max { x.max(y) } else { x.min(y) }));
            }
            let (x, y) = (int(&args[0])?, int(&args[1])?);
            let r = if pick_max { x.max(y) } else { x.min(y) };
            Ok(numeric_like(&[&args[0], &args[1]], r as f64).with_int(r))
        })(),
        ("Math", "abs", 1) => match &args[0] {
            Value::Double(d) => Ok(Value::Double(d.abs())),
            Value::Long(l) => Ok(Value::Long(l.wrapping_abs())),
            other => int(other).map(|i| Value::Int((i as i32).wrapping_abs())),
        },
        ("Math", "pow", 2) => (|| Ok(Value::Double(float(&args[0])?.powf(float(&args[1])?))))(),
        ("Math", "sqrt", 1) => float(&a(0)).map(|x| Value::Double(x.sqrt())),
        ("Math", "floor", 1) => float(&a(0)).map(|x| Value::Double(x.floor())),
        ("Math", "ceil", 1) => float(&a(0)).map(|x| Value::Double(x.ceil())),
        ("Math", "round", 1) => float(&a(0)).map(|x| Value::Long((x + 0.5).floor() as i64)),
        ("Math", "floorMod", 2) => (|| {
            let (x, y) = (int(&args[0])?, int(&args[1])?);
            if y == 0 {
                return err(K::DivisionByZero, "/ by zero");
            }
            Ok(numeric_like(&[&args[0], &args[1]], 0.0).with_int(x.rem_euclid(y)))
        })(),
        ("Integer", "parseInt", 1) | ("Integer", "valueOf", 1) => match &args[0] {
            Value::Str(s) => s
                .trim()
                .parse::<i32>()
                .map(Value::Int)
                .or_else(|_| err(K::Type, format!("NumberFormatException: {s:?}"))),
            other => int(other).map(|i| Value::Int(i as i32)),
        },
        ("Integer", "toString", 1) | ("String", "valueOf", 1) | ("Long", "toString", 1) => {
            Ok(Value::str(&a(0).to_string()))
        }
        ("Integer", "compare", 2) => (|| Ok(Value::Int(int(&args[0])?.cmp(&int(&args[1])?) as i32)))(),
        ("Character", "isDigit", 1) => char_pred(&a(0), |c| c.is_ascii_digit()),
        ("Character", "isLetter", 1) => char_pred(&a(0), char::is_alphabetic),
        ("Character", "isLetterOrDigit", 1) => char_pred(&a(0), char::is_alphanumeric),
        ("Character", "isUpperCase", 1) => char_pred(&a(0), char::is_uppercase),
        ("Character", "isLowerCase", 1) => char_pred(&a(0), char::is_lowercase),
        ("Character", "isWhitespace", 1) => char_pred(&a(0), char::is_whitespace),
        ("Character", "toUpperCase", 1) => to_char(&a(0)).map(|c| Value::Char(c.to_ascii_uppercase())),
        ("Character", "toLowerCase", 1) => to_char(&a(0)).map(|c| Value::Char(c.to_ascii_lowercase())),
        ("Character", "getNumericValue", 1) => {
            to_char(&a(0)).map(|c| Value::Int(c.to_digit(36).map_or(-1, |d| d as i32)))
        }
        ("Arrays", "sort", 1) => match &args[0] {
            Value::Array(arr) => {
                sort_values(&mut arr.borrow_mut());
                Ok(Value::Void)
            }
            other => err(K::Type, format!("Arrays.sort on {}", other.type_name())),
        },
        ("Arrays", "fill", 2) => match &args[0] {
            Value::Array(arr) => {
                let mut arr = arr.borrow_mut();
                for slot in arr.iter_mut() {
                    *slot = coerce_like(slot, args[1].clone());
                }
                Ok(Value::Void)
            }
            other => err(K::Type, format!("Arrays.fill on {}", other.type_name())),
        },
        ("Arrays", "toString", 1) => Ok(Value::str(&a(0).to_string())),
        ("Arrays", "asList", _) | ("List", "of", _) => Ok(Value::list(CollKind::ArrayList, args.iter().cloned())),
        ("Arrays", "copyOf", 2) | ("Arrays", "copyOfRange", 3) => match &args[0] {
            Value::Array(arr) => (|| {
                let src = arr.borrow();
                let (from, to) = if args.len() == 3 {
                    (int(&args[1])?, int(&args[2])?)
                } else {
                    (0, int(&args[1])?)
                };
                if from < 0 || from as usize > src.len() || to < from {
                    return err(K::IndexOutOfBounds, format!("range {from}..{to} for length {}", src.len()));
                }
                let fill = src.first().map(|v| coerce_like(v, Value::Int(0))).unwrap_or(Value::Int(0));
                let out = (from..to).map(|i| src.get(i as usize).cloned().unwrap_or_else(|| fill.clone())).collect();
                Ok(Value::array(out))
            })(),
            other => err(K::Type, format!("Arrays.copyOf on {}", other.type_name())),
        },
        ("Collections", "sort", 1) => match &args[0] {
            Value::List(_, l) => {
                sort_values(l.borrow_mut().make_contiguous());
                Ok(Value::Void)
            }
            other => err(K::Type, format!("Collections.sort on {}", other.type_name())),
        },
        ("Collections", "reverse", 1) => match &args[0] {
            Value::List(_, l) => {
                l.borrow_mut().make_contiguous().reverse();
                Ok(Value::Void)
            }
            other => err(K::Type, format!("Collections.reverse on {}", other.type_name())),
        },
        ("Collections", "swap", 3) => match &args[0] {
            Value::List(_, l) => (|| {
                let mut l = l.borrow_mut();
                let len = l.len();
                let (i, j) = (index(int(&args[1])?, len)?, index(int(&args[2])?, len)?);
                l.swap(i, j);
                Ok(Value::Void)
            })(),
            other => err(K::Type, format!("Collections.swap on {}", other.type_name())),
        },
        ("Collections", "max", 1) | ("Collections", "min", 1) => match &args[0] {
            Value::List(_, l) => {
                let l = l.borrow();
                let best = if name == "max" {
                    l.iter().max_by(|a, b| a.compare(b))
                } else {
                    l.iter().min_by(|a, b| a.compare(b))
                };
                best.cloned().ok_or((K::NoSuchElement, "empty collection".into()))
            }
            other => err(K::Type, format!("Collections.{name} on {}", other.type_name())),
        },
        ("System", "arraycopy", 5) => (|| {
            let (Value::Array(src), Value::Array(dst)) = (&args[0], &args[2]) else {
                return err(K::Type, "System.arraycopy needs arrays");
            };
            let (sp, dp, n) = (int(&args[1])?, int(&args[3])?, int(&args[4])?);
            let items: Vec<Value> = {
                let s = src.borrow();
                if sp < 0 || n < 0 || (sp + n) as usize > s.len() {
                    return err(K::IndexOutOfBounds, "arraycopy source range");
                }
                s[sp as usize..(sp + n) as usize].to_vec()
            };
            let mut d = dst.borrow_mut();
            if dp < 0 || (dp + n) as usize > d.len() {
                return err(K::IndexOutOfBounds, "arraycopy destination range");
            }
            for (i, v) in items.into_iter().enumerate() {
                d[dp as usize + i] = v;
            }
            Ok(Value::Void)
        })(),
        _ => return None,
    })
}

trait WithInt {
    fn with_int(self, v: i64) -> Value;
}

impl WithInt for Value {
    fn with_int(self, v: i64) -> Value {
        match self {
            Value::Long(_) => Value::Long(v),
            _ => Value::Int(v as i32),
        }
    }
}

fn to_char(v: &Value) -> Result<char, (K, String)> {
    match v {
        Value::Char(c) => Ok(*c),
        other => int(other).map(|i| char::from_u32(i as u32).unwrap_or('\u{fffd}')),
    }
}

fn char_pred(v: &Value, f: impl Fn(char) -> bool) -> BResult {
    to_char(v).map(|c| Value::Bool(f(c)))
}

/// Convert `v` to the primitive kind of `like`, for stores into typed slots.
pub fn coerce_like(like: &Value, v: Value) -> Value {
    match (like, &v) {
        (Value::Int(_), Value::Char(c)) => Value::Int(*c as i32),
        (Value::Long(_), Value::Int(_) | Value::Char(_)) => Value::Long(v.as_i64().unwrap_or(0)),
        (Value::Double(_), Value::Int(_) | Value::Long(_) | Value::Char(_)) => Value::Double(v.as_f64().unwrap_or(0.0)),
        (Value::Char(_), Value::Int(i)) => Value::Char(char::from_u32(*i as u32).unwrap_or('\u{fffd}')),
        _ => v,
    }
}

fn pq_insert(l: &mut VecDeque<Value>, v: Value) {
    let pos = l.iter().position(|x| x.compare(&v) == std::cmp::Ordering::Greater).unwrap_or(l.len());
    l.insert(pos, v);
}

/// Instance method on a library value. `None` means the method is unknown.
pub fn call_method(recv: &Value, name: &str, args: &[Value]) -> Option<BResult> {
    Some(match recv {
        Value::Null => err(K::NullPointer, format!("cannot invoke {name}() on null")),
        Value::Str(s) => string_method(s, name, args)?,
        Value::Builder(b) => builder_method(recv, b, name, args)?,
        Value::List(kind, l) => list_method(*kind, l, name, args)?,
        Value::Map(m) => map_method(m, name, args)?,
        Value::Set(s) => set_method(s, name, args)?,
        Value::Entry(e) => match name {
            "getKey" => Ok(e.0.clone()),
            "getValue" => Ok(e.1.clone()),
            _ => return None,
        },
        Value::Array(a) if name == "clone" => Ok(Value::array(a.borrow().clone())),
        Value::Int(_) | Value::Long(_) | Value::Double(_) | Value::Char(_) | Value::Bool(_) => match (name, args) {
            ("intValue", []) => float(recv).map(|x| Value::Int(x as i32)),
            ("longValue", []) => float(recv).map(|x| Value::Long(x as i64)),
            ("doubleValue", []) => float(recv).map(Value::Double),
            ("equals", [o]) => Ok(Value::Bool(recv.java_equals(o))),
            ("compareTo", [o]) => Ok(Value::Int(recv.compare(o) as i32)),
            ("toString", []) => Ok(Value::str(&recv.to_string())),
            _ => return None,
        },
        _ => return None,
    })
}

fn string_method(s: &Rc<str>, name: &str, args: &[Value]) -> Option<BResult> {
    let chars: Vec<char> = s.chars().collect();
    let text = |v: &Value| v.to_string();
    Some(match (name, args) {
        ("length", []) => Ok(Value::Int(chars.len() as i32)),
        ("isEmpty", []) => Ok(Value::Bool(chars.is_empty())),
        ("charAt", [i]) => int(i).and_then(|i| index(i, chars.len())).map(|i| Value::Char(chars[i])),
        ("substring", [from]) => int(from).and_then(|f| {
            if f < 0 || f as usize > chars.len() {
                return err(K::IndexOutOfBounds, format!("begin {f}, length {}", chars.len()));
            }
            Ok(Value::str(&chars[f as usize..].iter().collect::<String>()))
        }),
        ("substring", [from, to]) => (|| {
            let (f, t) = (int(from)?, int(to)?);
            if f < 0 || t < f || t as usize > chars.len() {
                return err(K::IndexOutOfBounds, format!("begin {f}, end {t}, length {}", chars.len()));
            }
            Ok(Value::str(&chars[f as usize..t as usize].iter().collect::<String>()))
        })(),
        ("indexOf", [x]) => {
            let needle = text(x);
            Ok(Value::Int(s.find(&needle).map_or(-1, |b| s[..b].chars().count() as i32)))
        }
        ("lastIndexOf", [x]) => {
            let needle = text(x);
            Ok(Value::Int(s.rfind(&needle).map_or(-1, |b| s[..b].chars().count() as i32)))
        }
        ("contains", [x]) => Ok(Value::Bool(s.contains(&text(x)))),
        ("startsWith", [x]) => Ok(Value::Bool(s.starts_with(&text(x)))),
        ("endsWith", [x]) => Ok(Value::Bool(s.ends_with(&text(x)))),
        ("equals", [x]) => Ok(Value::Bool(matches!(x, Value::Str(o) if o == s))),
        ("equalsIgnoreCase", [x]) => Ok(Value::Bool(matches!(x, Value::Str(o) if o.to_lowercase() == s.to_lowercase()))),
        ("compareTo", [Value::Str(o)]) => Ok(Value::Int(match s.as_ref().cmp(o.as_ref()) {
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Greater => 1,
        })),
        ("trim", []) => Ok(Value::str(s.trim())),
        ("toUpperCase", []) => Ok(Value::str(&s.to_uppercase())),
        ("toLowerCase", []) => Ok(Value::str(&s.to_lowercase())),
        ("toCharArray", []) => Ok(Value::array(chars.iter().map(|c| Value::Char(*c)).collect())),
        ("concat", [x]) => Ok(Value::str(&format!("{s}{}", text(x)))),
        ("repeat", [n]) => int(n).map(|n| Value::str(&s.repeat(n.max(0) as usize))),
        ("replace", [a, b]) => Ok(Value::str(&s.replace(&text(a), &text(b)))),
        ("toString", []) => Ok(Value::Str(s.clone())),
        ("hashCode", []) => {
            let h = chars.iter().fold(0i32, |h, c| h.wrapping_mul(31).wrapping_add(*c as i32));
            Ok(Value::Int(h))
        }
        _ => return None,
    })
}

fn builder_method(recv: &Value, b: &Rc<RefCell<String>>, name: &str, args: &[Value]) -> Option<BResult> {
    Some(match (name, args) {
        ("append", [x]) => {
            b.borrow_mut().push_str(&x.to_string());
            Ok(recv.clone())
        }
        ("toString", []) => Ok(Value::str(&b.borrow())),
        ("length", []) => Ok(Value::Int(b.borrow().chars().count() as i32)),
        ("charAt", [i]) => {
            let chars: Vec<char> = b.borrow().chars().collect();
            int(i).and_then(|i| index(i, chars.len())).map(|i| Value::Char(chars[i]))
        }
        ("reverse", []) => {
            let r: String = b.borrow().chars().rev().collect();
            *b.borrow_mut() = r;
            Ok(recv.clone())
        }
        ("insert", [i, x]) => (|| {
            let mut chars: Vec<char> = b.borrow().chars().collect();
            let i = int(i)?;
            if i < 0 || i as usize > chars.len() {
                return err(K::IndexOutOfBounds, format!("offset {i}"));
            }
            let ins: Vec<char> = x.to_string().chars().collect();
            chars.splice(i as usize..i as usize, ins);
            *b.borrow_mut() = chars.into_iter().collect();
            Ok(recv.clone())
        })(),
        ("deleteCharAt", [i]) => (|| {
            let mut chars: Vec<char> = b.borrow().chars().collect();
            let i = index(int(i)?, chars.len())?;
            chars.remove(i);
            *b.borrow_mut() = chars.into_iter().collect();
            Ok(recv.clone())
        })(),
        ("setCharAt", [i, c]) => (|| {
            let mut chars: Vec<char> = b.borrow().chars().collect();
            let i = index(int(i)?, chars.len())?;
            chars[i] = to_char(c)?;
            *b.borrow_mut() = chars.into_iter().collect();
            Ok(Value::Void)
        })(),
        _ => return None,
    })
}

fn list_method(kind: CollKind, l: &Rc<RefCell<VecDeque<Value>>>, name: &str, args: &[Value]) -> Option<BResult> {
    let empty = || err(K::NoSuchElement, format!("{name}() on empty collection"));
    let stack = kind == CollKind::Stack;
    let mut l = l.borrow_mut();
    Some(match (name, args) {
        ("add", [x]) | ("offer", [x]) | ("addLast", [x]) | ("offerLast", [x]) => {
            if kind == CollKind::PriorityQueue {
                pq_insert(&mut l, x.clone());
            } else {
                l.push_back(x.clone());
            }
            Ok(if name == "addLast" { Value::Void } else { Value::Bool(true) })
        }
        ("add", [i, x]) => int(i).and_then(|i| {
            if i < 0 || i as usize > l.len() {
                return err(K::IndexOutOfBounds, format!("index {i} out of bounds for length {}", l.len()));
            }
            l.insert(i as usize, x.clone());
            Ok(Value::Void)
        }),
        ("addFirst", [x]) | ("offerFirst", [x]) => {
            l.push_front(x.clone());
            Ok(Value::Void)
        }
        ("push", [x]) => {
            if stack {
                l.push_back(x.clone());
            } else {
                l.push_front(x.clone());
            }
            Ok(x.clone())
        }
        ("pop", []) => match if stack { l.pop_back() } else { l.pop_front() } {
            Some(v) => Ok(v),
            None => empty(),
        },
        ("peek", []) => Ok(if stack { l.back() } else { l.front() }.cloned().unwrap_or(Value::Null)),
        ("peekFirst", []) => Ok(l.front().cloned().unwrap_or(Value::Null)),
        ("peekLast", []) => Ok(l.back().cloned().unwrap_or(Value::Null)),
        ("poll", []) | ("pollFirst", []) => Ok(l.pop_front().unwrap_or(Value::Null)),
        ("pollLast", []) => Ok(l.pop_back().unwrap_or(Value::Null)),
        ("remove", []) | ("removeFirst", []) => l.pop_front().map_or_else(empty, Ok),
        ("removeLast", []) => l.pop_back().map_or_else(empty, Ok),
        ("element", []) | ("getFirst", []) | ("firstElement", []) => l.front().cloned().map_or_else(empty, Ok),
        ("getLast", []) | ("lastElement", []) => l.back().cloned().map_or_else(empty, Ok),
        // List.remove(int) removes by index; every other collection removes by value
        ("remove", [Value::Int(i)]) if matches!(kind, CollKind::ArrayList | CollKind::LinkedList | CollKind::Stack) => {
            index(*i as i64, l.len()).map(|i| l.remove(i).expect("index checked"))
        }
        ("remove", [x]) => Ok(Value::Bool(match l.iter().position(|v| v.java_equals(x)) {
            Some(p) => {
                l.remove(p);
                true
            }
            None => false,
        })),
        ("get", [i]) => int(i).and_then(|i| index(i, l.len())).map(|i| l[i].clone()),
        ("set", [i, x]) => int(i).and_then(|i| index(i, l.len())).map(|i| std::mem::replace(&mut l[i], x.clone())),
        ("size", []) => Ok(Value::Int(l.len() as i32)),
        ("isEmpty", []) | ("empty", []) => Ok(Value::Bool(l.is_empty())),
        ("contains", [x]) => Ok(Value::Bool(l.iter().any(|v| v.java_equals(x)))),
        ("indexOf", [x]) => Ok(Value::Int(l.iter().position(|v| v.java_equals(x)).map_or(-1, |p| p as i32))),
        ("clear", []) => {
            l.clear();
            Ok(Value::Void)
        }
        ("toString", []) => Ok(Value::str(&Value::list(kind, l.iter().cloned()).to_string())),
        _ => return None,
    })
}

fn map_method(m: &Rc<RefCell<BTreeMap<Key, Value>>>, name: &str, args: &[Value]) -> Option<BResult> {
    let mut m = m.borrow_mut();
    Some(match (name, args) {
        ("put", [k, v]) => key(k).map(|k| m.insert(k, v.clone()).unwrap_or(Value::Null)),
        ("putIfAbsent", [k, v]) => key(k).map(|k| match m.get(&k) {
            Some(old) => old.clone(),
            None => {
                m.insert(k, v.clone());
                Value::Null
            }
        }),
        ("get", [k]) => key(k).map(|k| m.get(&k).cloned().unwrap_or(Value::Null)),
        ("getOrDefault", [k, d]) => key(k).map(|k| m.get(&k).cloned().unwrap_or_else(|| d.clone())),
        ("containsKey", [k]) => key(k).map(|k| Value::Bool(m.contains_key(&k))),
        ("containsValue", [v]) => Ok(Value::Bool(m.values().any(|x| x.java_equals(v)))),
        ("remove", [k]) => key(k).map(|k| m.remove(&k).unwrap_or(Value::Null)),
        ("size", []) => Ok(Value::Int(m.len() as i32)),
        ("isEmpty", []) => Ok(Value::Bool(m.is_empty())),
        ("clear", []) => {
            m.clear();
            Ok(Value::Void)
        }
        ("keySet", []) => Ok(Value::Set(Rc::new(RefCell::new(m.keys().cloned().collect())))),
        ("values", []) => Ok(Value::list(CollKind::ArrayList, m.values().cloned())),
        ("entrySet", []) => Ok(Value::list(
            CollKind::ArrayList,
            m.iter().map(|(k, v)| Value::Entry(Rc::new((Value::from_key(k), v.clone())))),
        )),
        _ => return None,
    })
}

fn set_method(s: &Rc<RefCell<BTreeSet<Key>>>, name: &str, args: &[Value]) -> Option<BResult> {
    let mut s = s.borrow_mut();
    Some(match (name, args) {
        ("add", [x]) => key(x).map(|k| Value::Bool(s.insert(k))),
        ("contains", [x]) => key(x).map(|k| Value::Bool(s.contains(&k))),
        ("remove", [x]) => key(x).map(|k| Value::Bool(s.remove(&k))),
        ("size", []) => Ok(Value::Int(s.len() as i32)),
        ("isEmpty", []) => Ok(Value::Bool(s.is_empty())),
        ("clear", []) => {
            s.clear();
            Ok(Value::Void)
        }
        _ => return None,
    })
}

/// `new T(args)` for library types.
pub fn construct(ty: &str, args: &[Value]) -> Option<BResult> {
    if let Some(kind) = CollKind::from_type(ty) {
        let mut items: VecDeque<Value> = match args.first() {
            Some(Value::List(_, src)) => src.borrow().clone(),
            Some(Value::Set(src)) => src.borrow().iter().map(Value::from_key).collect(),
            _ => VecDeque::new(),
        };
        if kind == CollKind::PriorityQueue {
            sort_values(items.make_contiguous());
        }
        return Some(Ok(Value::List(kind, Rc::new(RefCell::new(items)))));
    }
    Some(Ok(match ty {
        "HashMap" | "TreeMap" | "LinkedHashMap" | "Map" => {
            let init = match args.first() {
                Some(Value::Map(src)) => src.borrow().clone(),
                _ => BTreeMap::new(),
            };
            Value::Map(Rc::new(RefCell::new(init)))
        }
        "HashSet" | "TreeSet" | "LinkedHashSet" | "Set" => {
            let init: BTreeSet<Key> = match args.first() {
                Some(Value::List(_, src)) => src.borrow().iter().filter_map(Value::key).collect(),
                Some(Value::Set(src)) => src.borrow().clone(),
                _ => BTreeSet::new(),
            };
            Value::Set(Rc::new(RefCell::new(init)))
        }
        "StringBuilder" | "StringBuffer" => {
            let init = match args.first() {
                Some(Value::Str(s)) => s.to_string(),
                _ => String::new(),
            };
            Value::Builder(Rc::new(RefCell::new(init)))
        }
        "String" => Value::str(&args.first().map(|v| v.to_string()).unwrap_or_default()),
        _ => return None,
    }))
}

/// Elements a for-each loop walks over.
pub fn iterate(v: &Value) -> Result<Vec<Value>, (K, String)> {
    match v {
        Value::Array(a) => Ok(a.borrow().clone()),
        Value::List(_, l) => Ok(l.borrow().iter().cloned().collect()),
        Value::Set(s) => Ok(s.borrow().iter().map(Value::from_key).collect()),
        Value::Null => err(K::NullPointer, "iterating over null"),
        other => err(K::Type, format!("cannot iterate over {}", other.type_name())),
    }
}

pub(super) fn int_result(v: i64) -> Value {
    int_value(v)
}
