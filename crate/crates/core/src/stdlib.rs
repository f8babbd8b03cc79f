//! Bundled rule files.

use crate::pattern::RuleSet;
use crate::syntax::parse_rule_file;

/// Arithmetic identities, literal folding and the power-of-two division
/// rule.
pub const ARITH: &str = "\
rule add_zero : forall (n : int), n + 0 => n
rule zero_add : forall (n : int), 0 + n => n
rule sub_zero : forall (n : int), n - 0 => n
rule mul_one : forall (n : int), n * 1 => n
rule one_mul : forall (n : int), 1 * n => n
rule mul_zero : forall (n : int), n * 0 => 0
rule zero_mul : forall (n : int), 0 * n => 0
rule fold_add : forall ('a : int) ('b : int), a + b => '(a + b)
rule fold_sub : forall ('a : int) ('b : int), a - b => '(a - b)
rule fold_mul : forall ('a : int) ('b : int), a * b => '(a * b)
rule div_pow2 : forall (n : int) ('m : int), when 2 ^ log2floor m == m, n / m => n >> '(log2floor m)
rule fst_pair : forall (a : int) (b : int), fst (a, b) => a
rule snd_pair : forall (a : int) (b : int), snd (a, b) => b
";

/// Carry-free addition of zero, justified by clip bounds.
pub const BOUNDS: &str = "\
rule adc64_zero : forall ('l : int) ('u : int) (n : int), when 0 <= l && u <= 2 ^ 64, add_with_carry64 (clip[l,u](n)) 0 => (0, clip[l,u](n))
";

/// `map` over integer lists as an opaque symbol with its two equations.
pub const LISTS: &str = "\
symbol map : (int -> int) -> list int -> list int = \\f l. list_rect [] (\\h t r. f h :: r) l
rule map_nil : forall (f : int -> int), map f [] => []
rule map_cons : forall (f : int -> int) (x : int) (xs : list int), map f (x :: xs) => f x :: map f xs
";

/// Just `n + 0 => n`.
pub const ADD_ZERO: &str = "rule add_zero : forall (n : int), n + 0 => n\n";

/// Every bundled file, concatenated.
pub fn all_sources() -> String {
    [ARITH, BOUNDS, LISTS].concat()
}

pub fn load(src: &str) -> RuleSet {
    parse_rule_file(src)
        .and_then(|f| f.into_rule_set().map_err(|e| crate::syntax::ParseError { line: 0, col: 0, message: e.to_string() }))
        .expect("bundled rules are valid")
}

pub fn standard() -> RuleSet {
    load(&all_sources())
}
