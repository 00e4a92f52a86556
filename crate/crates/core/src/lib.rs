//! A probabilistic call-by-name PCF: syntax, a sampling interpreter, a
//! measure-valued denotational interpreter, a harness comparing the two, and
//! numerical checks for absolute monotonicity of functions on the unit cube.

pub mod corpus;
pub mod denotational;
pub mod harness;
pub mod interval;
pub mod measure;
pub mod operational;
pub mod parser;
pub mod stability;
pub mod syntax;

pub use denotational::{interpret, DenotationError, Env, FixConfig, Interpreter, SemValue};
pub use harness::{adequacy_check, adequacy_check_with, AdequacyConfig, AdequacyReport, QueryResult};
pub use interval::{Interval, IntervalSet};
pub use measure::{Measure, MeasureError, QuadratureConfig};
pub use operational::{estimate_mass, run, Estimate, Outcome, RngStream};
pub use parser::{parse, parse_term, pretty, ParseError, SourceProgram};
pub use stability::{check_pre_stable, delta_signed, iterated_delta, PointFn, StabilityReport};
pub use syntax::sugar::{expand_sugar, Surface, SugarError};
pub use syntax::{
    alpha_eq, free_vars, substitute, typecheck, Name, PrimOp, Primitive, PrimitiveTable, Term,
    TermKind, Type, TypeError, TypingContext,
};
