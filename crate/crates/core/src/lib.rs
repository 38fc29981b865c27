//! Construction-grammar tooling over Universal Dependencies treebanks.
//!
//! The crate covers the whole pipeline around a constructicon:
//!
//! * [`conllu`] reads and writes CoNLL-U sentences, including the
//!   `CXN=<id>:<label>` construction marks carried in MISC.
//! * [`conllc`] reads and writes construction definitions in the 13-column
//!   conll-c format and the yaml entries that wrap them.
//! * [`matcher`] compiles a construction into a tree pattern and enumerates
//!   its constructs in sentences, with a brute-force oracle for testing.
//! * [`queryc`] emits grew-style query text for a compiled pattern.
//! * [`gcxn`] holds the construction graph: consistency checks, vertical
//!   link inference by subsumption and annotation propagation.
//! * [`corpus`] applies accepted matches as annotations, re-validates
//!   annotations and splits the example body into train/dev/test.
//! * [`review`] persists the candidate review queue and decision log.

pub mod conllc;
pub mod conllu;
pub mod corpus;
pub mod diag;
pub mod gcxn;
pub mod matcher;
pub mod queryc;
pub mod review;

pub use conllc::{Cxn, CxnTokenId, NodeConstraint};
pub use conllu::{CxnMark, Sentence, Token};
pub use diag::{Diagnostic, Severity};

pub use gcxn::GcxnGraph;
pub use matcher::{compile, match_sentence, CompiledPattern, Match, MatchRecord};
