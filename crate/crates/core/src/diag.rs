//! Diagnostics and the rule catalog.
//!
//! Every finding produced anywhere in the toolchain carries a stable [`Code`].
//! The severity of a code is fixed by the catalog, so a diagnostic can never
//! disagree with the published rule table.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Which stage of the pipeline owns a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Workspace,
    Specification,
    Configuration,
    Assembly,
    Refinement,
}

macro_rules! catalog {
    ($( $variant:ident => $code:literal, $sev:ident, $stage:ident, $desc:literal; )*) => {
        /// Stable diagnostic codes.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Code {
            $( $variant, )*
        }

        impl Code {
            pub const ALL: &'static [Code] = &[ $( Code::$variant, )* ];

            pub fn as_str(self) -> &'static str {
                match self { $( Code::$variant => $code, )* }
            }

            pub fn severity(self) -> Severity {
                match self { $( Code::$variant => Severity::$sev, )* }
            }

            pub fn stage(self) -> Stage {
                match self { $( Code::$variant => Stage::$stage, )* }
            }

            pub fn description(self) -> &'static str {
                match self { $( Code::$variant => $desc, )* }
            }

            pub fn from_code(s: &str) -> Option<Code> {
                match s { $( $code => Some(Code::$variant), )* _ => None }
            }
        }
    };
}

catalog! {
    Lex01 => "E-LEX-01", Error, Parse, "unrecognized character, unterminated string or out-of-range number";
    Parse01 => "E-PARSE-01", Error, Parse, "unexpected token";
    Parse02 => "E-PARSE-02", Error, Parse, "duplicate declaration within one namespace";
    Parse03 => "E-PARSE-03", Error, Parse, "missing required attribute";
    Parse04 => "E-PARSE-04", Error, Parse, "invalid attribute value";
    Ws01 => "E-WS-01", Error, Workspace, "duplicate document name";
    Ws02 => "E-WS-02", Error, Workspace, "link does not point to the level directly above";
    Ws03 => "E-WS-03", Error, Workspace, "dangling reference to an undeclared document or element";
    Conn01 => "E-CONN-01", Error, Specification, "connection end kinds are not an allowed pair";
    Conn02 => "E-CONN-02", Error, Specification, "protocol given on a specification connection";
    Conn03 => "E-CONN-03", Error, Configuration, "robot connected directly to a component or service below specification level";
    Conn04 => "E-CONN-04", Error, Specification, "connection end does not resolve to exactly one element";
    Role01 => "E-ROLE-01", Error, Specification, "role declares no interfaces and is not marked incomplete";
    Spec01 => "W-SPEC-01", Warning, Specification, "role takes part in no connection";
    Host01 => "E-HOST-01", Error, Configuration, "implementation host is not exactly one VM or robot";
    Proto01 => "E-PROTO-01", Error, Configuration, "connection between implementations on different hosts has no protocol";
    Os01 => "W-OS-01", Warning, Configuration, "virtual machine has no operating system";
    Net01 => "E-NET-01", Error, Assembly, "flat-network cloud hosts VMs from different subnets";
    Place01 => "E-PLACE-01", Error, Assembly, "virtual machine has no placement";
    Place02 => "E-PLACE-02", Error, Assembly, "placement names an unknown cloud or machine";
    Place03 => "E-PLACE-03", Error, Assembly, "placement names an unknown virtual machine";
    Place04 => "E-PLACE-04", Error, Assembly, "virtual machine placed more than once";
    Cap01 => "E-CAP-01", Error, Assembly, "VM memory on a machine exceeds its capacity";
    Inst01 => "E-INST-01", Error, Assembly, "implementation has no instance";
    Cloud01 => "E-CLOUD-01", Error, Assembly, "cloud declares no physical machine";
    Ref01 => "E-REF-01", Error, Refinement, "role has no realizing implementation";
    Ref02 => "E-REF-02", Error, Refinement, "implementation lacks interfaces of its role";
    Ref03 => "E-REF-03", Error, Refinement, "concept robot not realized or sensor/actuator kinds not covered";
    Ref04 => "E-REF-04", Error, Refinement, "abstract robot link has no realization";
    Ref05 => "E-REF-05", Error, Refinement, "role connection has no implementation-level connection";
    Ref06 => "E-REF-06", Error, Refinement, "instance of an implementation absent from the configuration";
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub span: Option<Span>,
}

impl Diagnostic {
    pub fn new(code: Code, message: impl Into<String>, span: Option<Span>) -> Self {
        Diagnostic {
            severity: code.severity(),
            code,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    fn sort_key(&self) -> (Option<(&str, usize, usize)>, Code, &str) {
        (
            self.span.as_ref().map(|s| (&*s.file, s.start, s.end)),
            self.code,
            &self.message,
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: {}", self.severity, self.code, self.message)
    }
}

/// Sorts diagnostics by (file, start, end), then code and message.
pub fn sort(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Sorts and removes exact duplicates.
pub fn normalize(mut diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    sort(&mut diags);
    diags.dedup();
    diags
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
