//! BML documents: one facial expression plus a self-directed and an
//! other-directed gesture, with canonical serialization and validation.

use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::affect::{tables, AppraisalResult, BehaviorSet};
use crate::emotion::EmotionLabel;

pub const DEFAULT_DOCUMENT_ID: &str = "bml-1";
pub const DEFAULT_CHARACTER: &str = "agent";
pub const FACE_TIMING: (f64, f64) = (0.0, 2.0);
pub const SELF_GESTURE_TIMING: (f64, f64) = (0.0, 2.5);
pub const OTHER_GESTURE_TIMING: (f64, f64) = (0.5, 2.5);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BmlError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("unknown lexeme {0:?}")]
    UnknownLexeme(String),
    #[error("bad timing on {0}")]
    BadTiming(String),
    #[error("bad amount on {0}")]
    BadAmount(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GestureMode {
    #[serde(rename = "SELF")]
    SelfDirected,
    #[serde(rename = "OTHER")]
    OtherDirected,
}

impl GestureMode {
    pub fn name(self) -> &'static str {
        match self {
            GestureMode::SelfDirected => "SELF",
            GestureMode::OtherDirected => "OTHER",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "SELF" => Some(GestureMode::SelfDirected),
            "OTHER" => Some(GestureMode::OtherDirected),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceDirective {
    pub id: String,
    pub lexeme: String,
    pub amount: f64,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureDirective {
    pub id: String,
    pub lexeme: String,
    pub mode: GestureMode,
    pub description: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmlDocument {
    pub id: String,
    pub character: String,
    pub face: FaceDirective,
    /// The SELF gesture first, then the OTHER gesture.
    pub gestures: [GestureDirective; 2],
}

/// Gesture lexeme for a behavior label: the first comma-separated part,
/// uppercased, spaces replaced by underscores.
pub fn gesture_lexeme(label: &str) -> String {
    let first = label.split(',').next().unwrap_or(label).trim();
    first.split_whitespace().collect::<Vec<_>>().join("_").to_uppercase()
}

/// The 16 gesture lexemes (self and other behavior of every emotion).
pub fn gesture_lexicon() -> Vec<String> {
    tables()
        .rows
        .iter()
        .flat_map(|r| [gesture_lexeme(&r.self_behavior), gesture_lexeme(&r.other_behavior)])
        .collect()
}

pub fn face_lexeme(emotion: EmotionLabel) -> String {
    emotion.name().to_uppercase()
}

pub fn compose(appraisal: &AppraisalResult, behaviors: &BehaviorSet) -> BmlDocument {
    compose_with_id(appraisal, behaviors, DEFAULT_DOCUMENT_ID)
}

pub fn compose_with_id(appraisal: &AppraisalResult, behaviors: &BehaviorSet, id: &str) -> BmlDocument {
    let gesture = |gid: &str, label: &str, mode, (start, end)| GestureDirective {
        id: gid.into(),
        lexeme: gesture_lexeme(label),
        mode,
        description: label.into(),
        start,
        end,
    };
    BmlDocument {
        id: id.into(),
        character: DEFAULT_CHARACTER.into(),
        face: FaceDirective {
            id: "f1".into(),
            lexeme: face_lexeme(appraisal.dominant),
            amount: appraisal.intensity,
            start: FACE_TIMING.0,
            end: FACE_TIMING.1,
        },
        gestures: [
            gesture("g1", &behaviors.self_behavior, GestureMode::SelfDirected, SELF_GESTURE_TIMING),
            gesture("g2", &behaviors.other_behavior, GestureMode::OtherDirected, OTHER_GESTURE_TIMING),
        ],
    }
}

/// Shortest round-trip decimal with at least one fractional digit.
pub fn format_number(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || !x.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn esc(s: &str) -> std::borrow::Cow<'_, str> {
    quick_xml::escape::escape(s)
}

pub fn serialize(doc: &BmlDocument) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(out, "<bml id=\"{}\" character=\"{}\">", esc(&doc.id), esc(&doc.character)).unwrap();
    let f = &doc.face;
    writeln!(
        out,
        "  <face id=\"{}\" lexeme=\"{}\" amount=\"{}\" start=\"{}\" end=\"{}\"/>",
        esc(&f.id),
        esc(&f.lexeme),
        format_number(f.amount),
        format_number(f.start),
        format_number(f.end)
    )
    .unwrap();
    for g in &doc.gestures {
        writeln!(
            out,
            "  <gesture id=\"{}\" lexeme=\"{}\" mode=\"{}\" description=\"{}\" start=\"{}\" end=\"{}\"/>",
            esc(&g.id),
            esc(&g.lexeme),
            g.mode.name(),
            esc(&g.description),
            format_number(g.start),
            format_number(g.end)
        )
        .unwrap();
    }
    out.push_str("</bml>\n");
    out
}

type Attrs = Vec<(String, String)>;

fn attributes(e: &BytesStart, errors: &mut Vec<BmlError>) -> Attrs {
    let mut out = Vec::new();
    for attr in e.attributes() {
        match attr {
            Ok(a) => {
                let key = AsRef::<str>::as_ref(&a.key).to_string();
                match a.normalized_value(quick_xml::XmlVersion::Implicit1_0) {
                    Ok(v) => out.push((key, v.into_owned())),
                    Err(err) => errors.push(BmlError::Malformed(format!("attribute {key}: {err}"))),
                }
            }
            Err(err) => errors.push(BmlError::Malformed(format!("attribute: {err}"))),
        }
    }
    out
}

struct Element {
    name: String,
    attrs: Attrs,
}

impl Element {
    fn label(&self) -> String {
        self.get("id").map_or_else(|| self.name.clone(), str::to_string)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn required(&self, key: &str, errors: &mut Vec<BmlError>) -> String {
        match self.get(key) {
            Some(v) => v.to_string(),
            None => {
                errors.push(BmlError::Malformed(format!("<{}> missing attribute {key}", self.name)));
                String::new()
            }
        }
    }

    fn number(&self, key: &str, errors: &mut Vec<BmlError>) -> f64 {
        let raw = self.required(key, errors);
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => {
                if !raw.is_empty() {
                    errors.push(BmlError::Malformed(format!("<{}> {key}={raw:?} is not a number", self.name)));
                }
                f64::NAN
            }
        }
    }

    fn timing(&self, errors: &mut Vec<BmlError>) -> (f64, f64) {
        let (start, end) = (self.number("start", errors), self.number("end", errors));
        if !(start.is_nan() || end.is_nan()) && !(0.0 <= start && start < end) {
            errors.push(BmlError::BadTiming(self.label()));
        }
        (start, end)
    }
}

/// Parses and checks a document, collecting every violation.
pub fn validate(xml: &str) -> Result<BmlDocument, Vec<BmlError>> {
    let mut errors = Vec::new();
    let mut root: Option<Element> = None;
    let mut children: Vec<Element> = Vec::new();
    let mut depth = 0usize;
    let mut closed = false;
    let mut reader = Reader::from_str(xml);
    loop {
        let event = match reader.read_event() {
            Ok(e) => e,
            Err(e) => {
                errors.push(BmlError::Malformed(format!("at byte {}: {e}", reader.buffer_position())));
                return Err(errors);
            }
        };
        match event {
            Event::Eof => break,
            Event::Decl(_) | Event::Comment(_) => {}
            Event::Text(t) if t.trim().is_empty() => {}
            Event::Start(e) if depth == 0 => {
                open_root(&e, &mut root, closed, &mut errors);
                depth = 1;
            }
            Event::Empty(e) if depth == 0 => {
                open_root(&e, &mut root, closed, &mut errors);
                closed = true;
            }
            Event::Empty(e) if depth == 1 => children.push(Element {
                name: AsRef::<str>::as_ref(&e.name()).to_string(),
                attrs: attributes(&e, &mut errors),
            }),
            Event::Start(e) => {
                errors.push(BmlError::Malformed(format!(
                    "unexpected nested element <{}>",
                    AsRef::<str>::as_ref(&e.name())
                )));
                depth += 1;
            }
            Event::End(_) => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    closed = true;
                }
            }
            Event::Empty(e) => errors.push(BmlError::Malformed(format!(
                "unexpected element <{}>",
                AsRef::<str>::as_ref(&e.name())
            ))),
            other => errors.push(BmlError::Malformed(format!("unexpected content {other:?}"))),
        }
    }
    let Some(root) = root else {
        errors.push(BmlError::Malformed("no <bml> element".into()));
        return Err(errors);
    };
    if !closed {
        errors.push(BmlError::Malformed("<bml> is not closed".into()));
    }
    let doc_id = root.required("id", &mut errors);
    let character = root.required("character", &mut errors);

    let mut ids = vec![doc_id.clone()];
    let mut face = None;
    let mut self_gesture = None;
    let mut other_gesture = None;
    let lexicon = gesture_lexicon();
    for child in &children {
        let id = child.required("id", &mut errors);
        if ids.contains(&id) {
            errors.push(BmlError::Malformed(format!("duplicate id {id:?}")));
        }
        ids.push(id.clone());
        let lexeme = child.required("lexeme", &mut errors);
        match child.name.as_str() {
            "face" => {
                if !EmotionLabel::ALL.iter().any(|e| face_lexeme(*e) == lexeme) {
                    errors.push(BmlError::UnknownLexeme(lexeme.clone()));
                }
                let amount = child.number("amount", &mut errors);
                if !amount.is_nan() && !(amount > 0.0 && amount <= 1.0) {
                    errors.push(BmlError::BadAmount(child.label()));
                }
                let (start, end) = child.timing(&mut errors);
                if face.is_some() {
                    errors.push(BmlError::Malformed("more than one <face>".into()));
                }
                face = Some(FaceDirective {
                    id,
                    lexeme,
                    amount,
                    start,
                    end,
                });
            }
            "gesture" => {
                if !lexicon.contains(&lexeme) {
                    errors.push(BmlError::UnknownLexeme(lexeme.clone()));
                }
                let mode_raw = child.required("mode", &mut errors);
                let description = child.required("description", &mut errors);
                let (start, end) = child.timing(&mut errors);
                let Some(mode) = GestureMode::parse(&mode_raw) else {
                    if !mode_raw.is_empty() {
                        errors.push(BmlError::Malformed(format!("gesture mode {mode_raw:?}")));
                    }
                    continue;
                };
                let slot = match mode {
                    GestureMode::SelfDirected => &mut self_gesture,
                    GestureMode::OtherDirected => &mut other_gesture,
                };
                if slot.is_some() {
                    errors.push(BmlError::Malformed(format!("more than one {} gesture", mode.name())));
                }
                *slot = Some(GestureDirective {
                    id,
                    lexeme,
                    mode,
                    description,
                    start,
                    end,
                });
            }
            other => errors.push(BmlError::Malformed(format!("unexpected element <{other}>"))),
        }
    }
    if face.is_none() {
        errors.push(BmlError::Malformed("missing <face>".into()));
    }
    if self_gesture.is_none() {
        errors.push(BmlError::Malformed("missing SELF gesture".into()));
    }
    if other_gesture.is_none() {
        errors.push(BmlError::Malformed("missing OTHER gesture".into()));
    }
    match (face, self_gesture, other_gesture) {
        (Some(face), Some(s), Some(o)) if errors.is_empty() => Ok(BmlDocument {
            id: doc_id,
            character,
            face,
            gestures: [s, o],
        }),
        _ => Err(errors),
    }
}

/// Alias of [`validate`].
pub fn parse(xml: &str) -> Result<BmlDocument, Vec<BmlError>> {
    validate(xml)
}

fn open_root(e: &BytesStart, root: &mut Option<Element>, closed: bool, errors: &mut Vec<BmlError>) {
    let name = AsRef::<str>::as_ref(&e.name()).to_string();
    if root.is_some() || closed {
        errors.push(BmlError::Malformed("more than one root element".into()));
    }
    if name != "bml" {
        errors.push(BmlError::Malformed(format!("root element is <{name}>, expected <bml>")));
    }
    *root = Some(Element {
        name,
        attrs: attributes(e, errors),
    });
}
