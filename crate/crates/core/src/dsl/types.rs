use std::fmt;

/// Static value types of the language.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Num,
    Bool,
    Label,
    Str,
    Image,
    Shape,
    Point,
    List(Box<Type>),
    /// Parameter-only wildcard accepted by `len`.
    AnyList,
}

impl Type {
    pub fn list(elem: Type) -> Type {
        Type::List(Box::new(elem))
    }

    pub(crate) fn accepts(&self, actual: &Type) -> bool {
        match (self, actual) {
            (Type::AnyList, Type::List(_)) => true,
            (a, b) => a == b,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Num => f.write_str("number"),
            Type::Bool => f.write_str("bool"),
            Type::Label => f.write_str("Label"),
            Type::Str => f.write_str("string"),
            Type::Image => f.write_str("image"),
            Type::Shape => f.write_str("shape"),
            Type::Point => f.write_str("point"),
            Type::List(t) => write!(f, "list<{t}>"),
            Type::AnyList => f.write_str("list"),
        }
    }
}
