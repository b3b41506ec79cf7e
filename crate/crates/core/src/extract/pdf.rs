//! Positioned glyphs from PDF content streams.
//!
//! A small text-state interpreter over lopdf's decoded operations. It tracks
//! the CTM, text and line matrices, font size, spacing and horizontal scale,
//! and follows form XObjects. Rotated text is placed by its origin only.

use std::collections::HashMap;

use lopdf::content::Content;
use lopdf::Encoding;
use lopdf::{Dictionary, Document, Object, ObjectId};

use crate::metrics::helvetica_width;

const MAX_FORM_DEPTH: usize = 8;
const DEFAULT_MEDIA_BOX: [f64; 4] = [0.0, 0.0, 612.0, 792.0];

/// One decoded character code placed on the page.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Glyph {
    pub text: String,
    pub x: f64,
    pub baseline: f64,
    pub size: f64,
    pub advance: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct PageGlyphs {
    pub media_box: [f64; 4],
    pub glyphs: Vec<Glyph>,
}

type Matrix = [f64; 6];
const IDENTITY: Matrix = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0];

fn mul(m1: &Matrix, m2: &Matrix) -> Matrix {
    [
        m1[0] * m2[0] + m1[1] * m2[2],
        m1[0] * m2[1] + m1[1] * m2[3],
        m1[2] * m2[0] + m1[3] * m2[2],
        m1[2] * m2[1] + m1[3] * m2[3],
        m1[4] * m2[0] + m1[5] * m2[2] + m2[4],
        m1[4] * m2[1] + m1[5] * m2[3] + m2[5],
    ]
}

fn translate(tx: f64, ty: f64) -> Matrix {
    [1.0, 0.0, 0.0, 1.0, tx, ty]
}

fn num(o: &Object) -> Option<f64> {
    match o {
        Object::Integer(i) => Some(*i as f64),
        Object::Real(r) => Some(*r as f64),
        _ => None,
    }
}

fn nums<const N: usize>(operands: &[Object]) -> Option<[f64; N]> {
    if operands.len() < N {
        return None;
    }
    let mut out = [0.0; N];
    for (slot, o) in out.iter_mut().zip(&operands[operands.len() - N..]) {
        *slot = num(o)?;
    }
    Some(out)
}

fn resolve<'a>(doc: &'a Document, o: &'a Object) -> &'a Object {
    doc.dereference(o).map(|(_, o)| o).unwrap_or(o)
}

struct Font<'a> {
    encoding: Option<Encoding<'a>>,
    two_byte: bool,
    first_char: i64,
    widths: Vec<f64>,
    cid_widths: HashMap<u32, f64>,
    default_width: Option<f64>,
}

impl<'a> Font<'a> {
    fn load(doc: &'a Document, dict: &'a Dictionary) -> Self {
        let two_byte = dict.get(b"Subtype").and_then(Object::as_name).is_ok_and(|s| s == b"Type0");
        let encoding = dict.get_font_encoding(doc).ok();
        let first_char = dict.get(b"FirstChar").ok().and_then(|o| resolve(doc, o).as_i64().ok()).unwrap_or(0);
        let widths = dict
            .get(b"Widths")
            .ok()
            .and_then(|o| resolve(doc, o).as_array().ok())
            .map(|a| a.iter().map(|w| num(resolve(doc, w)).unwrap_or(0.0)).collect())
            .unwrap_or_default();
        let mut cid_widths = HashMap::new();
        let mut default_width = None;
        if two_byte {
            default_width = Some(1000.0);
            let descendant = dict
                .get(b"DescendantFonts")
                .ok()
                .and_then(|o| resolve(doc, o).as_array().ok())
                .and_then(|a| a.first())
                .and_then(|o| resolve(doc, o).as_dict().ok());
            if let Some(cid) = descendant {
                if let Some(dw) = cid.get(b"DW").ok().and_then(|o| num(resolve(doc, o))) {
                    default_width = Some(dw);
                }
                if let Some(w) = cid.get(b"W").ok().and_then(|o| resolve(doc, o).as_array().ok()) {
                    parse_cid_widths(doc, w, &mut cid_widths);
                }
            }
        }
        Font { encoding, two_byte, first_char, widths, cid_widths, default_width }
    }

    fn decode(&self, code: &[u8]) -> String {
        let decoded = self.encoding.as_ref().and_then(|e| e.bytes_to_string(code).ok());
        match decoded {
            Some(s) => s.replace('\u{fffd}', ""),
            None if !self.two_byte => crate::metrics::win_ansi_char(code[0]).map(String::from).unwrap_or_default(),
            None => String::new(),
        }
    }

    /// Advance width in glyph space (1/1000 em).
    fn width(&self, code: u32, text: &str) -> f64 {
        if self.two_byte {
            return self.cid_widths.get(&code).copied().or(self.default_width).unwrap_or(1000.0);
        }
        let slot = code as i64 - self.first_char;
        if slot >= 0 && (slot as usize) < self.widths.len() {
            let w = self.widths[slot as usize];
            if w > 0.0 {
                return w;
            }
        }
        text.chars().map(|c| helvetica_width(c) as f64).sum::<f64>().max(if text.is_empty() { 0.0 } else { 1.0 })
    }
}

fn parse_cid_widths(doc: &Document, w: &[Object], out: &mut HashMap<u32, f64>) {
    let mut i = 0;
    while i < w.len() {
        let Some(first) = num(resolve(doc, &w[i])) else { break };
        match w.get(i + 1).map(|o| resolve(doc, o)) {
            Some(Object::Array(list)) => {
                for (k, v) in list.iter().enumerate() {
                    if let Some(v) = num(resolve(doc, v)) {
                        out.insert(first as u32 + k as u32, v);
                    }
                }
                i += 2;
            }
            Some(last) => {
                let (Some(last), Some(v)) = (num(last), w.get(i + 2).and_then(|o| num(resolve(doc, o)))) else {
                    break;
                };
                for c in first as u32..=last as u32 {
                    out.insert(c, v);
                }
                i += 3;
            }
            None => break,
        }
    }
}

#[derive(Clone)]
struct GraphicsState {
    ctm: Matrix,
    font: Option<Vec<u8>>,
    size: f64,
    char_spacing: f64,
    word_spacing: f64,
    scale: f64,
    leading: f64,
    rise: f64,
}

impl Default for GraphicsState {
    fn default() -> Self {
        Self {
            ctm: IDENTITY,
            font: None,
            size: 0.0,
            char_spacing: 0.0,
            word_spacing: 0.0,
            scale: 1.0,
            leading: 0.0,
            rise: 0.0,
        }
    }
}

struct Interpreter<'a> {
    doc: &'a Document,
    fonts: HashMap<(Option<ObjectId>, Vec<u8>), Font<'a>>,
    glyphs: Vec<Glyph>,
}

fn font_dicts<'a>(doc: &'a Document, resources: &'a Dictionary) -> Vec<(Vec<u8>, &'a Dictionary)> {
    let Some(fonts) = resources.get(b"Font").ok().and_then(|o| resolve(doc, o).as_dict().ok()) else {
        return Vec::new();
    };
    fonts.iter().filter_map(|(name, o)| resolve(doc, o).as_dict().ok().map(|d| (name.clone(), d))).collect()
}

impl<'a> Interpreter<'a> {
    fn run(
        &mut self,
        ops: &[lopdf::content::Operation],
        resources: &'a Dictionary,
        scope: Option<ObjectId>,
        base: GraphicsState,
        depth: usize,
    ) {
        for (name, dict) in font_dicts(self.doc, resources) {
            self.fonts.entry((scope, name)).or_insert_with(|| Font::load(self.doc, dict));
        }
        let mut gs = base;
        let mut stack: Vec<GraphicsState> = Vec::new();
        let mut tm = IDENTITY;
        let mut tlm = IDENTITY;

        for op in ops {
            let args = &op.operands;
            match op.operator.as_str() {
                "q" => stack.push(gs.clone()),
                "Q" => {
                    if let Some(prev) = stack.pop() {
                        gs = prev;
                    }
                }
                "cm" => {
                    if let Some(m) = nums::<6>(args) {
                        gs.ctm = mul(&m, &gs.ctm);
                    }
                }
                "BT" => {
                    tm = IDENTITY;
                    tlm = IDENTITY;
                }
                "Tf" => {
                    if let (Some(Object::Name(n)), Some(size)) = (args.first(), args.get(1).and_then(num)) {
                        gs.font = Some(n.clone());
                        gs.size = size;
                    }
                }
                "Tc" => gs.char_spacing = args.first().and_then(num).unwrap_or(gs.char_spacing),
                "Tw" => gs.word_spacing = args.first().and_then(num).unwrap_or(gs.word_spacing),
                "Tz" => gs.scale = args.first().and_then(num).map_or(gs.scale, |s| s / 100.0),
                "TL" => gs.leading = args.first().and_then(num).unwrap_or(gs.leading),
                "Ts" => gs.rise = args.first().and_then(num).unwrap_or(gs.rise),
                "Td" | "TD" => {
                    if let Some([tx, ty]) = nums::<2>(args) {
                        if op.operator == "TD" {
                            gs.leading = -ty;
                        }
                        tlm = mul(&translate(tx, ty), &tlm);
                        tm = tlm;
                    }
                }
                "Tm" => {
                    if let Some(m) = nums::<6>(args) {
                        tlm = m;
                        tm = m;
                    }
                }
                "T*" => {
                    tlm = mul(&translate(0.0, -gs.leading), &tlm);
                    tm = tlm;
                }
                "Tj" | "'" | "\"" => {
                    if op.operator != "Tj" {
                        if op.operator == "\"" {
                            if let Some([aw, ac]) = args.get(..2).and_then(nums::<2>) {
                                gs.word_spacing = aw;
                                gs.char_spacing = ac;
                            }
                        }
                        tlm = mul(&translate(0.0, -gs.leading), &tlm);
                        tm = tlm;
                    }
                    if let Some(Object::String(bytes, _)) = args.last() {
                        self.show(bytes, &gs, scope, &mut tm);
                    }
                }
                "TJ" => {
                    if let Some(Object::Array(items)) = args.first() {
                        for item in items {
                            match item {
                                Object::String(bytes, _) => self.show(bytes, &gs, scope, &mut tm),
                                other => {
                                    if let Some(adj) = num(other) {
                                        let tx = -adj / 1000.0 * gs.size * gs.scale;
                                        tm = mul(&translate(tx, 0.0), &tm);
                                    }
                                }
                            }
                        }
                    }
                }
                "Do" if depth < MAX_FORM_DEPTH => {
                    if let Some(Object::Name(name)) = args.first() {
                        self.form(name, resources, scope, &gs, depth);
                    }
                }
                _ => {}
            }
        }
    }

    fn form(
        &mut self,
        name: &[u8],
        resources: &'a Dictionary,
        scope: Option<ObjectId>,
        gs: &GraphicsState,
        depth: usize,
    ) {
        let doc = self.doc;
        let Some(xobjects) = resources.get(b"XObject").ok().and_then(|o| resolve(doc, o).as_dict().ok()) else {
            return;
        };
        let Ok(entry) = xobjects.get(name) else { return };
        let Ok((id, object)) = doc.dereference(entry) else { return };
        let Ok(stream) = object.as_stream() else { return };
        if stream.dict.get(b"Subtype").and_then(Object::as_name).ok() != Some(b"Form".as_slice()) {
            return;
        }
        let Ok(data) = stream.get_plain_content() else { return };
        let Ok(content) = Content::decode(&data) else { return };
        let mut inner = gs.clone();
        if let Some(m) = stream.dict.get(b"Matrix").ok().and_then(|o| o.as_array().ok()).and_then(|a| nums::<6>(a)) {
            inner.ctm = mul(&m, &inner.ctm);
        }
        match stream.dict.get(b"Resources").ok().and_then(|o| resolve(doc, o).as_dict().ok()) {
            Some(own) => self.run(&content.operations, own, id.or(scope), inner, depth + 1),
            None => self.run(&content.operations, resources, scope, inner, depth + 1),
        }
    }

    fn show(&mut self, bytes: &[u8], gs: &GraphicsState, scope: Option<ObjectId>, tm: &mut Matrix) {
        let Some(font_name) = gs.font.as_ref() else { return };
        let Some(font) = self.fonts.get(&(scope, font_name.clone())) else { return };
        let step = if font.two_byte { 2 } else { 1 };
        for code_bytes in bytes.chunks(step) {
            let code = code_bytes.iter().fold(0u32, |acc, &b| (acc << 8) | b as u32);
            let text = font.decode(code_bytes);
            let w0 = font.width(code, &text) / 1000.0;
            let word = if step == 1 && code == 32 { gs.word_spacing } else { 0.0 };
            let tx = (w0 * gs.size + gs.char_spacing + word) * gs.scale;

            let trm = mul(&[gs.size * gs.scale, 0.0, 0.0, gs.size, 0.0, gs.rise], &mul(tm, &gs.ctm));
            let user = mul(tm, &gs.ctm);
            let x_scale = user[0].hypot(user[1]);
            let y_scale = user[2].hypot(user[3]);
            if !text.is_empty() {
                self.glyphs.push(Glyph {
                    text,
                    x: trm[4],
                    baseline: trm[5],
                    size: (gs.size * y_scale).abs(),
                    advance: (w0 * gs.size * gs.scale * x_scale).abs(),
                });
            }
            *tm = mul(&translate(tx, 0.0), tm);
        }
    }
}

fn media_box(doc: &Document, page_id: ObjectId) -> [f64; 4] {
    let mut current = doc.get_dictionary(page_id).ok();
    let mut hops = 0;
    while let Some(dict) = current {
        if let Some(arr) = dict.get(b"MediaBox").ok().and_then(|o| resolve(doc, o).as_array().ok()) {
            let vals: Vec<f64> = arr.iter().filter_map(|o| num(resolve(doc, o))).collect();
            if vals.len() == 4 {
                return [vals[0].min(vals[2]), vals[1].min(vals[3]), vals[0].max(vals[2]), vals[1].max(vals[3])];
            }
        }
        hops += 1;
        if hops > 32 {
            break;
        }
        current =
            dict.get(b"Parent").ok().and_then(|o| o.as_reference().ok()).and_then(|id| doc.get_dictionary(id).ok());
    }
    DEFAULT_MEDIA_BOX
}

fn page_resources(doc: &Document, page_id: ObjectId) -> Option<&Dictionary> {
    let (direct, ids) = doc.get_page_resources(page_id).ok()?;
    direct.or_else(|| ids.into_iter().find_map(|id| doc.get_dictionary(id).ok()))
}

/// Decodes every page into positioned glyphs.
pub(crate) fn read_pages(doc: &Document) -> Vec<PageGlyphs> {
    let empty = Dictionary::new();
    doc.get_pages()
        .values()
        .map(|&page_id| {
            let media_box = media_box(doc, page_id);
            let resources = page_resources(doc, page_id).unwrap_or(&empty);
            let data = doc.get_page_content(page_id);
            let mut interp = Interpreter { doc, fonts: HashMap::new(), glyphs: Vec::new() };
            if let Ok(content) = Content::decode(&data) {
                interp.run(&content.operations, resources, None, GraphicsState::default(), 0);
            }
            PageGlyphs { media_box, glyphs: interp.glyphs }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_product_order() {
        let scale = [2.0, 0.0, 0.0, 2.0, 0.0, 0.0];
        let shift = translate(10.0, 5.0);
        assert_eq!(mul(&shift, &scale), [2.0, 0.0, 0.0, 2.0, 20.0, 10.0]);
        assert_eq!(mul(&scale, &shift), [2.0, 0.0, 0.0, 2.0, 10.0, 5.0]);
    }

    #[test]
    fn cid_width_forms() {
        let doc = Document::new();
        let w = vec![
            Object::Integer(1),
            Object::Array(vec![Object::Integer(500), Object::Integer(600)]),
            Object::Integer(10),
            Object::Integer(12),
            Object::Integer(250),
        ];
        let mut out = HashMap::new();
        parse_cid_widths(&doc, &w, &mut out);
        assert_eq!(out[&1], 500.0);
        assert_eq!(out[&2], 600.0);
        assert_eq!(out[&11], 250.0);
        assert_eq!(out.len(), 5);
    }
}
