//! Scalar expressions in the chart coordinates, used by configuration files.
//!
//! Variables: `x`, `y`, `z` (also `x0`, `x1`, `x2`), `r = |x|` and `pi`.
//! Common functions (`sqrt`, `abs`, `exp`, `ln`, `sin`, `cos`, ...) may be
//! written without the `math::` prefix. Integer literals are read as floats.

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value,
};

use crate::error::{Error, Result};

const ALIASES: &[&str] = &[
    "sqrt", "abs", "exp", "ln", "log10", "log2", "sin", "cos", "tan", "atan", "atan2", "sinh", "cosh", "tanh",
    "pow", "hypot", "cbrt", "asin", "acos",
];

#[derive(Debug, Clone)]
pub struct ScalarExpr {
    source: String,
    tree: Node<DefaultNumericTypes>,
}

impl ScalarExpr {
    pub fn parse(source: &str) -> Result<Self> {
        let rewritten = rewrite(source);
        let tree = build_operator_tree::<DefaultNumericTypes>(&rewritten)
            .map_err(|e| Error::Expression(format!("{source}: {e}")))?;
        Ok(Self { source: source.to_string(), tree })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates at a chart point.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        let r = point.iter().map(|v| v * v).sum::<f64>().sqrt();
        let set = |ctx: &mut HashMapContext<DefaultNumericTypes>, name: &str, v: f64| {
            ctx.set_value(name.into(), Value::Float(v))
                .map_err(|e| Error::Expression(e.to_string()))
        };
        for (k, &v) in point.iter().enumerate() {
            set(&mut ctx, &format!("x{k}"), v)?;
            if let Some(name) = ["x", "y", "z"].get(k) {
                set(&mut ctx, name, v)?;
            }
        }
        set(&mut ctx, "r", r)?;
        set(&mut ctx, "pi", std::f64::consts::PI)?;
        self.tree
            .eval_number_with_context(&ctx)
            .map_err(|e| Error::Expression(format!("{}: {e}", self.source)))
    }

    /// Evaluates with only `r` (and `pi`) bound.
    pub fn eval_radial(&self, r: f64) -> Result<f64> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        for (name, v) in [("r", r), ("pi", std::f64::consts::PI)] {
            ctx.set_value(name.into(), Value::Float(v))
                .map_err(|e| Error::Expression(e.to_string()))?;
        }
        self.tree
            .eval_number_with_context(&ctx)
            .map_err(|e| Error::Expression(format!("{}: {e}", self.source)))
    }
}

fn rewrite(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() + 16);
    let mut i = 0;
    let is_ident = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == ':';
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && is_ident(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if ALIASES.contains(&word.as_str()) {
                out.push_str("math::");
            }
            out.push_str(&word);
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut float = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                float = true;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            if lit.starts_with('.') {
                out.push('0');
            }
            out.push_str(&lit);
            if !float {
                out.push_str(".0");
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}
