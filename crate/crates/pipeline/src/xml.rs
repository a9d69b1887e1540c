//! XML pipeline documents.
//!
//! ```xml
//! <xpiwit>
//! <pipeline>
//!   <item item_id="item_0002">
//!     <name>MedianImageFilter</name>
//!     <input>
//!       <image item_id_ref="item_0001" number_of_output="1">
//!     </input>
//!     <arguments>
//!       <parameter key="Radius" value="2">
//!     </arguments>
//!   </item>
//! </pipeline>
//! </xpiwit>
//! ```
//!
//! `<image>`, `<meta>` and `<parameter>` are void elements: the open-tag form
//! above and the self-closing form are both accepted, and a stray closing tag
//! for them is ignored. Inputs referencing `cmd` take the run configuration
//! input whose index is `number_of_output`; other outputs count from 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::error::{DocFault, Error, Result};
use crate::registry::{lookup, Kind};

/// Reserved source name for run configuration inputs.
pub const CMD: &str = "cmd";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputKind {
    Image,
    Meta,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputRef {
    pub kind: InputKind,
    pub item_id_ref: String,
    pub number_of_output: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Item {
    pub item_id: String,
    pub name: String,
    pub inputs: Vec<InputRef>,
    pub args: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PipelineDoc {
    pub items: Vec<Item>,
}

fn doc_err<T>(fault: DocFault, item: Option<&str>, line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Doc { fault, item: item.map(str::to_string), line, msg: msg.into() })
}

fn line_at(text: &str, pos: usize) -> usize {
    let end = pos.min(text.len());
    text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

fn attrs(e: &BytesStart, item: Option<&str>, line: usize) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for a in e.attributes() {
        let a = match a {
            Ok(a) => a,
            Err(err) => return doc_err(DocFault::Syntax, item, line, err.to_string()),
        };
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = match a.unescape_value() {
            Ok(v) => v.into_owned(),
            Err(err) => return doc_err(DocFault::Syntax, item, line, err.to_string()),
        };
        out.insert(key, value);
    }
    Ok(out)
}

fn required<'a>(a: &'a BTreeMap<String, String>, key: &str, tag: &str, item: Option<&str>, line: usize) -> Result<&'a str> {
    match a.get(key) {
        Some(v) => Ok(v),
        None => doc_err(DocFault::Structure, item, line, format!("<{tag}> lacks attribute {key}")),
    }
}

struct Partial {
    item_id: String,
    line: usize,
    name: Option<String>,
    inputs: Vec<InputRef>,
    args: BTreeMap<String, String>,
}

/// Parses and validates a pipeline document.
pub fn parse_pipeline(text: &str) -> Result<PipelineDoc> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    reader.config_mut().check_end_names = false;

    let mut stack: Vec<String> = Vec::new();
    let mut items: Vec<Item> = Vec::new();
    let mut lines: Vec<usize> = Vec::new();
    let mut current: Option<Partial> = None;
    let mut seen_root = false;
    loop {
        let event = reader.read_event();
        let line = line_at(text, reader.buffer_position() as usize);
        let cur_id = current.as_ref().map(|p| p.item_id.clone());
        let cur = cur_id.as_deref();
        let event = match event {
            Ok(e) => e,
            Err(err) => return doc_err(DocFault::Syntax, cur, line, err.to_string()),
        };
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                let tag = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                let parent = stack.last().map(String::as_str);
                let expected = match tag.as_str() {
                    "xpiwit" => None,
                    "pipeline" => Some("xpiwit"),
                    "item" => Some("pipeline"),
                    "name" | "input" | "arguments" => Some("item"),
                    "image" | "meta" => Some("input"),
                    "parameter" => Some("arguments"),
                    _ => return doc_err(DocFault::Structure, cur, line, format!("unexpected element <{tag}>")),
                };
                if parent != expected {
                    let place = parent.map_or("the top level".to_string(), |p| format!("<{p}>"));
                    return doc_err(DocFault::Structure, cur, line, format!("<{tag}> is not allowed inside {place}"));
                }
                let a = attrs(e, cur, line)?;
                match tag.as_str() {
                    "xpiwit" => {
                        if seen_root {
                            return doc_err(DocFault::Structure, None, line, "more than one <xpiwit> root");
                        }
                        seen_root = true;
                    }
                    "item" => {
                        let id = required(&a, "item_id", "item", None, line)?.to_string();
                        current = Some(Partial { item_id: id, line, name: None, inputs: Vec::new(), args: BTreeMap::new() });
                    }
                    "image" | "meta" => {
                        let r = required(&a, "item_id_ref", &tag, cur, line)?.to_string();
                        let n = required(&a, "number_of_output", &tag, cur, line)?;
                        let Ok(n) = n.trim().parse::<usize>() else {
                            return doc_err(DocFault::Structure, cur, line, format!("number_of_output {n:?} is not a count"));
                        };
                        let kind = if tag == "image" { InputKind::Image } else { InputKind::Meta };
                        if let Some(p) = current.as_mut() {
                            p.inputs.push(InputRef { kind, item_id_ref: r, number_of_output: n });
                        }
                    }
                    "parameter" => {
                        let k = required(&a, "key", "parameter", cur, line)?.to_string();
                        let v = required(&a, "value", "parameter", cur, line)?.to_string();
                        if let Some(p) = current.as_mut() {
                            p.args.insert(k, v);
                        }
                    }
                    _ => {}
                }
                let void = matches!(tag.as_str(), "image" | "meta" | "parameter");
                if !void && !empty {
                    stack.push(tag);
                } else if tag == "item" {
                    finish(&mut current, &mut items, &mut lines)?;
                }
            }
            Event::End(e) => {
                let tag = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                if matches!(tag.as_str(), "image" | "meta" | "parameter") {
                    continue;
                }
                match stack.pop() {
                    Some(open) if open == tag => {}
                    Some(open) => {
                        return doc_err(DocFault::Structure, cur, line, format!("</{tag}> closes <{open}>"));
                    }
                    None => return doc_err(DocFault::Structure, cur, line, format!("unmatched </{tag}>")),
                }
                if tag == "item" {
                    finish(&mut current, &mut items, &mut lines)?;
                }
            }
            Event::Text(t) => {
                let s = match t.unescape() {
                    Ok(s) => s.into_owned(),
                    Err(err) => return doc_err(DocFault::Syntax, cur, line, err.to_string()),
                };
                if stack.last().map(String::as_str) == Some("name") {
                    if let Some(p) = current.as_mut() {
                        p.name = Some(s.trim().to_string());
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    let last = line_at(text, text.len());
    if let Some(open) = stack.last() {
        return doc_err(DocFault::Structure, None, last, format!("<{open}> is never closed"));
    }
    if !seen_root {
        return doc_err(DocFault::Structure, None, last, "document has no <xpiwit> root");
    }
    let doc = PipelineDoc { items };
    validate_lines(&doc, &lines)?;
    Ok(doc)
}

fn finish(current: &mut Option<Partial>, items: &mut Vec<Item>, lines: &mut Vec<usize>) -> Result<()> {
    let Some(p) = current.take() else { return Ok(()) };
    let Some(name) = p.name else {
        return doc_err(DocFault::Structure, Some(&p.item_id), p.line, "item has no <name>");
    };
    items.push(Item { item_id: p.item_id, name, inputs: p.inputs, args: p.args });
    lines.push(p.line);
    Ok(())
}

impl PipelineDoc {
    /// Checks ids, operator names, references, input kinds and acyclicity.
    pub fn validate(&self) -> Result<()> {
        validate_lines(self, &vec![0; self.items.len()])
    }

    pub fn item(&self, id: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.item_id == id)
    }

    /// Item indices in execution order: every item after the items it reads,
    /// ties broken by declaration order.
    pub fn execution_order(&self) -> Result<Vec<usize>> {
        execution_order(self, &vec![0; self.items.len()])
    }

    /// Serializes the document with self-closing void elements.
    pub fn to_xml(&self) -> String {
        let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<xpiwit>\n<pipeline>\n");
        for it in &self.items {
            let _ = writeln!(s, "\t<item item_id=\"{}\">", escape(&it.item_id));
            let _ = writeln!(s, "\t\t<name>{}</name>", escape(&it.name));
            s.push_str("\t\t<input>\n");
            for r in &it.inputs {
                let tag = match r.kind {
                    InputKind::Image => "image",
                    InputKind::Meta => "meta",
                };
                let _ = writeln!(
                    s,
                    "\t\t\t<{tag} item_id_ref=\"{}\" number_of_output=\"{}\"/>",
                    escape(&r.item_id_ref),
                    r.number_of_output
                );
            }
            s.push_str("\t\t</input>\n\t\t<arguments>\n");
            for (k, v) in &it.args {
                let _ = writeln!(s, "\t\t\t<parameter key=\"{}\" value=\"{}\"/>", escape(k), escape(v));
            }
            s.push_str("\t\t</arguments>\n\t</item>\n");
        }
        s.push_str("</pipeline>\n</xpiwit>\n");
        s
    }
}

fn validate_lines(doc: &PipelineDoc, lines: &[usize]) -> Result<()> {
    let mut ids = BTreeSet::new();
    for (k, it) in doc.items.iter().enumerate() {
        let (id, line) = (Some(it.item_id.as_str()), lines[k]);
        if it.item_id == CMD {
            return doc_err(DocFault::Structure, id, line, "item id \"cmd\" is reserved");
        }
        if !ids.insert(it.item_id.as_str()) {
            return doc_err(DocFault::DuplicateId, id, line, format!("duplicate item id {}", it.item_id));
        }
    }
    for (k, it) in doc.items.iter().enumerate() {
        let (id, line) = (Some(it.item_id.as_str()), lines[k]);
        let Some(op) = lookup(&it.name) else {
            return doc_err(DocFault::UnknownOperator(it.name.clone()), id, line, format!("unknown operator {}", it.name));
        };
        if it.inputs.len() != op.inputs.len() {
            return doc_err(
                DocFault::Structure,
                id,
                line,
                format!("{} takes {} input(s), got {}", op.name, op.inputs.len(), it.inputs.len()),
            );
        }
        for (slot, (r, want)) in it.inputs.iter().zip(op.inputs).enumerate() {
            let slot = slot + 1;
            if (r.kind == InputKind::Meta) != want.is_meta() {
                let tag = if want.is_meta() { "meta" } else { "image" };
                return doc_err(DocFault::Structure, id, line, format!("input {slot} of {} must be an <{tag}>", op.name));
            }
            let got = if r.item_id_ref == CMD {
                Kind::Image
            } else {
                let Some(src) = doc.item(&r.item_id_ref) else {
                    return doc_err(
                        DocFault::DanglingRef(r.item_id_ref.clone()),
                        id,
                        line,
                        format!("input {slot} references unknown item {}", r.item_id_ref),
                    );
                };
                let Some(src_op) = lookup(&src.name) else { continue };
                match r.number_of_output.checked_sub(1).and_then(|o| src_op.outputs.get(o)) {
                    Some(k) => *k,
                    None => {
                        return doc_err(
                            DocFault::Structure,
                            id,
                            line,
                            format!("{} has no output {}", r.item_id_ref, r.number_of_output),
                        )
                    }
                }
            };
            if got != *want {
                return doc_err(
                    DocFault::Structure,
                    id,
                    line,
                    format!("input {slot} of {} expects {want:?}, {} output {} is {got:?}", op.name, r.item_id_ref, r.number_of_output),
                );
            }
        }
    }
    execution_order(doc, lines).map(|_| ())
}

fn execution_order(doc: &PipelineDoc, lines: &[usize]) -> Result<Vec<usize>> {
    let n = doc.items.len();
    let index: BTreeMap<&str, usize> = doc.items.iter().enumerate().map(|(k, it)| (it.item_id.as_str(), k)).collect();
    let mut indeg = vec![0usize; n];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, it) in doc.items.iter().enumerate() {
        for r in &it.inputs {
            if let Some(&src) = index.get(r.item_id_ref.as_str()) {
                indeg[k] += 1;
                users[src].push(k);
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&k| indeg[k] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(k) = ready.pop_first() {
        order.push(k);
        for &u in &users[k] {
            indeg[u] -= 1;
            if indeg[u] == 0 {
                ready.insert(u);
            }
        }
    }
    if let Some(k) = (0..n).find(|&k| indeg[k] > 0) {
        let it = &doc.items[k];
        return doc_err(DocFault::Cycle, Some(&it.item_id), lines[k], format!("item {} is part of a reference cycle", it.item_id));
    }
    Ok(order)
}
