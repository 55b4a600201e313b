use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::rc::Rc;

use crate::lang::{ClassId, TypeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollKind {
    ArrayList,
    LinkedList,
    ArrayDeque,
    Stack,
    PriorityQueue,
}

impl CollKind {
    pub fn from_type(name: &str) -> Option<Self> {
        Some(match name {
            "ArrayList" | "List" | "Vector" => CollKind::ArrayList,
            "LinkedList" | "Queue" | "Deque" => CollKind::LinkedList,
            "ArrayDeque" => CollKind::ArrayDeque,
            "Stack" => CollKind::Stack,
            "PriorityQueue" => CollKind::PriorityQueue,
            _ => return None,
        })
    }
}

/// Keys for maps and sets. Iteration follows key order, which matches what
/// Java's hash containers do for small non-negative integers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Key {
    Null,
    Bool(bool),
    Int(i64),
    Char(char),
    Str(Rc<str>),
}

#[derive(Debug, Clone)]
pub enum Value {
    Void,
    Null,
    Bool(bool),
    Int(i32),
    Long(i64),
    Double(f64),
    Char(char),
    Str(Rc<str>),
    Array(Rc<RefCell<Vec<Value>>>),
    List(CollKind, Rc<RefCell<VecDeque<Value>>>),
    Map(Rc<RefCell<BTreeMap<Key, Value>>>),
    Set(Rc<RefCell<BTreeSet<Key>>>),
    Builder(Rc<RefCell<String>>),
    Entry(Rc<(Value, Value)>),
    /// Instance of a user class. Fields are held globally, so only the class matters.
    Object(ClassId),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Rc::from(s))
    }

    pub fn array(items: Vec<Value>) -> Value {
        Value::Array(Rc::new(RefCell::new(items)))
    }

    pub fn list(kind: CollKind, items: impl IntoIterator<Item = Value>) -> Value {
        Value::List(kind, Rc::new(RefCell::new(items.into_iter().collect())))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Void => "void",
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Int(_) => "int",
            Value::Long(_) => "long",
            Value::Double(_) => "double",
            Value::Char(_) => "char",
            Value::Str(_) => "String",
            Value::Array(_) => "array",
            Value::List(..) => "list",
            Value::Map(_) => "map",
            Value::Set(_) => "set",
            Value::Builder(_) => "StringBuilder",
            Value::Entry(_) => "Map.Entry",
            Value::Object(_) => "object",
        }
    }

    /// Default value for a declared type (array elements, uninitialised fields).
    pub fn default_for(ty: &TypeRef) -> Value {
        if ty.dims > 0 {
            return Value::Null;
        }
        match ty.base.as_str() {
            "int" | "short" | "byte" => Value::Int(0),
            "long" => Value::Long(0),
            "double" | "float" => Value::Double(0.0),
            "boolean" => Value::Bool(false),
            "char" => Value::Char('\0'),
            _ => Value::Null,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v as i64),
            Value::Long(v) => Some(*v),
            Value::Char(c) => Some(*c as i64),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Double(v) => Some(*v),
            other => other.as_i64().map(|v| v as f64),
        }
    }

    pub fn key(&self) -> Option<Key> {
        Some(match self {
            Value::Null => Key::Null,
            Value::Bool(b) => Key::Bool(*b),
            Value::Int(v) => Key::Int(*v as i64),
            Value::Long(v) => Key::Int(*v),
            Value::Char(c) => Key::Char(*c),
            Value::Str(s) => Key::Str(s.clone()),
            _ => return None,
        })
    }

    pub fn from_key(k: &Key) -> Value {
        match k {
            Key::Null => Value::Null,
            Key::Bool(b) => Value::Bool(*b),
            Key::Int(v) => match i32::try_from(*v) {
                Ok(i) => Value::Int(i),
                Err(_) => Value::Long(*v),
            },
            Key::Char(c) => Value::Char(*c),
            Key::Str(s) => Value::Str(s.clone()),
        }
    }

    /// Java `equals` semantics for the value domain: structural for boxed
    /// primitives and strings, identity for containers.
    pub fn java_equals(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) | (Value::Void, Value::Void) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Double(_), _) | (_, Value::Double(_)) => match (self.as_f64(), other.as_f64()) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            },
            (Value::Array(a), Value::Array(b)) => Rc::ptr_eq(a, b),
            (Value::List(_, a), Value::List(_, b)) => Rc::ptr_eq(a, b),
            (Value::Map(a), Value::Map(b)) => Rc::ptr_eq(a, b),
            (Value::Set(a), Value::Set(b)) => Rc::ptr_eq(a, b),
            (Value::Builder(a), Value::Builder(b)) => Rc::ptr_eq(a, b),
            (Value::Entry(a), Value::Entry(b)) => Rc::ptr_eq(a, b),
            (Value::Object(a), Value::Object(b)) => a == b,
            _ => match (self.as_i64(), other.as_i64()) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            },
        }
    }

    /// Natural ordering used by sorting and priority queues.
    pub fn compare(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            _ => match (self.as_f64(), other.as_f64()) {
                (Some(a), Some(b)) => a.partial_cmp(&b).unwrap_or(Ordering::Equal),
                _ => Ordering::Equal,
            },
        }
    }

    pub fn is_truthy(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

fn fmt_double(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v.is_finite() && v == v.trunc() && v.abs() < 1e7 {
        write!(f, "{v:.1}")
    } else if v.is_nan() {
        write!(f, "NaN")
    } else if v.is_infinite() {
        write!(f, "{}Infinity", if v < 0.0 { "-" } else { "" })
    } else {
        write!(f, "{v}")
    }
}

fn fmt_seq<'a>(f: &mut fmt::Formatter<'_>, items: impl Iterator<Item = &'a Value>) -> fmt::Result {
    write!(f, "[")?;
    for (i, v) in items.enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{v}")?;
    }
    write!(f, "]")
}

/// Java `toString` rendering.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Void => write!(f, "void"),
            Value::Null => write!(f, "null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Long(v) => write!(f, "{v}"),
            Value::Double(v) => fmt_double(*v, f),
            Value::Char(c) => write!(f, "{c}"),
            Value::Str(s) => write!(f, "{s}"),
            Value::Array(a) => fmt_seq(f, a.borrow().iter()),
            Value::List(_, l) => fmt_seq(f, l.borrow().iter()),
            Value::Set(s) => {
                let items: Vec<Value> = s.borrow().iter().map(Value::from_key).collect();
                fmt_seq(f, items.iter())
            }
            Value::Map(m) => {
                write!(f, "{{")?;
                for (i, (k, v)) in m.borrow().iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}={v}", Value::from_key(k))?;
                }
                write!(f, "}}")
            }
            Value::Builder(b) => write!(f, "{}", b.borrow()),
            Value::Entry(e) => write!(f, "{}={}", e.0, e.1),
            Value::Object(c) => write!(f, "object#{}", c.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn java_style_rendering() {
        assert_eq!(Value::Double(1.0).to_string(), "1.0");
        assert_eq!(Value::Double(0.25).to_string(), "0.25");
        assert_eq!(Value::array(vec![Value::Int(1), Value::Int(2)]).to_string(), "[1, 2]");
        let m = Value::Map(Rc::new(RefCell::new(BTreeMap::from([(Key::Int(2), Value::str("b"))]))));
        assert_eq!(m.to_string(), "{2=b}");
    }

    #[test]
    fn equality_is_identity_for_containers() {
        let a = Value::array(vec![]);
        let b = Value::array(vec![]);
        assert!(a.java_equals(&a.clone()));
        assert!(!a.java_equals(&b));
        assert!(Value::Int(3).java_equals(&Value::Long(3)));
        assert!(Value::Char('a').java_equals(&Value::Int(97)));
    }
}
