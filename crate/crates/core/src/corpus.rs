//! A fixed collection of closed programs of type `real`, used by the
//! test suites and benchmarks.

use crate::interval::IntervalSet;

pub struct Program {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! corpus {
    ($($name:literal => $src:literal,)*) => {
        pub const PROGRAMS: &[Program] = &[$(Program { name: $name, source: $src },)*];
    };
}

corpus! {
    "numeral" => "42",
    "sum" => "3 + 2",
    "arith" => "(1 + 2) * 3 - 4 / 2",
    "neg" => "-(2 * 3) + 1",
    "beta" => "(fun x : real -> x * x) 3",
    "curried" => "(fun x : real -> fun y : real -> x - y) 5 2",
    "higher_order" => "(fun f : real -> real -> f (f 1)) (fun y : real -> y * 3)",
    "let_num" => "let x = 4 in x + x",
    "ifz_then" => "ifz 0 then 1 else 2",
    "ifz_else" => "ifz 3 then 1 else 2",
    "cmp" => "2 < 3",
    "chi_atom" => "chi[[0,1]](0.5)",
    "sample" => "sample",
    "sample_shift" => "sample + 1",
    "sample_scale" => "2 * sample",
    "sample_neg" => "-sample",
    "let_diag" => "let x = sample in x = x",
    "cbn_diag" => "(fun x : real -> x = x) sample",
    "bernoulli" => "#bernoulli 0.3",
    "bernoulli_half" => "#bernoulli 0.5",
    "coin_branch" => "ifz #bernoulli 0.25 then 10 else 20",
    "chi_sample" => "chi[[0,0.25]](sample)",
    "ifz_sample" => "ifz chi[[0,0.4]](sample) then sample else 3",
    "let_square" => "let x = sample in x * x",
    "sqrt_sample" => "sqrt(sample)",
    "exp_sample" => "exp(sample)",
    "log_sample" => "log(sample)",
    "exponential" => "#exponential",
    "exponential_shift" => "#exponential + 1",
    "min_two" => "min(sample, 0.5)",
    "max_let" => "let x = sample in max(x, 1 - x)",
    "abs_centered" => "abs(sample - 0.5)",
    "sum_two" => "sample + sample",
    "let_sum" => "let x = sample in let y = sample in x + y",
    "diff_two" => "sample - sample",
    "lt_two" => "sample < sample",
    "mixture" => "ifz #bernoulli 0.5 then sample else sample + 2",
    "observe" => "#observe[[0,0.5]] sample",
    "observe_exp" => "#observe[[0,1]] #exponential",
    "observe_atoms" => "#observe[{1}] (#bernoulli 0.3)",
    "geometric" => "fix (fun g : real -> ifz #bernoulli 0.5 then 0 else 1 + g)",
    "countdown" => "fix (fun f : real -> real -> fun n : real -> ifz n then 7 else f (n - 1)) 3",
    "loop_zero" => "fix (fun x : real -> x)",
    "fix_const" => "fix (fun x : real -> 5)",
    "fix_fun" => "fix (fun f : real -> real -> fun x : real -> x + 1) 2",
    "if_higher" => "#if[{0}](0, fun y : real -> y + 1, fun y : real -> y - 1) 5",
    "gaussian" => "#gaussian 1 2",
    "expectation_2" => "#expectation_2 (fun x : real -> x) sample",
    "defs" => "let half = 0.5 in ifz #bernoulli half then half else 2 * half",
    "nested_let" => "let a = #bernoulli 0.5 in let b = #bernoulli 0.5 in a + b",
    "normal" => "#normal",
}

pub fn get(name: &str) -> Option<&'static Program> {
    PROGRAMS.iter().find(|p| p.name == name)
}

/// Sets on which corpus denotations are compared.
pub fn probe_sets() -> Vec<IntervalSet> {
    vec![
        IntervalSet::point(0.0),
        IntervalSet::point(1.0),
        IntervalSet::closed(0.0, 0.5),
        IntervalSet::interval(0.5, 2.0, false, true),
        IntervalSet::at_most(-0.25),
        IntervalSet::at_most(1.5).complement(),
        IntervalSet::real(),
    ]
}
