use proptest::prelude::*;

use voxseg_pipeline::registry::{lookup, Kind, OPERATORS};
use voxseg_pipeline::{parse_pipeline, DocFault, Error, InputKind, InputRef, Item, PipelineDoc};

const READER_MEDIAN: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<xpiwit>
<pipeline>
	<item item_id="item_0001">
		<name>ImageReader</name>
		<input>
			<image item_id_ref="cmd" number_of_output="0">
		</input>
		<arguments>
			<parameter key="SpacingX" value="1.0">
			<parameter key="SpacingY" value="1.0">
			<parameter key="SpacingZ" value="5.0">
			<parameter key="MaxThreads" value="12">
			<parameter key="BufferOriginalImage" value="0">
			<parameter key="WriteResult" value="0">
		</arguments>
	</item>
	<item item_id="item_0002">
		<name>MedianImageFilter</name>
		<input>
			<image item_id_ref="item_0001" number_of_output="1">
		</input>
		<arguments>
			<parameter key="WriteResult" value="0">
			<parameter key="Radius" value="2">
			<parameter key="FilterMask3D" value="0">
			<parameter key="MaxThreads" value="12">
		</arguments>
	</item>
</pipeline>
</xpiwit>
"#;

fn fault(text: &str) -> (DocFault, Option<String>, usize) {
    match parse_pipeline(text) {
        Err(Error::Doc { fault, item, line, .. }) => (fault, item, line),
        other => panic!("expected a document error, got {other:?}"),
    }
}

#[test]
fn reader_median_listing() {
    let doc = parse_pipeline(READER_MEDIAN).unwrap();
    assert_eq!(doc.items.len(), 2);
    let (reader, median) = (&doc.items[0], &doc.items[1]);
    assert_eq!(reader.name, "ImageReader");
    assert_eq!(reader.inputs, vec![InputRef { kind: InputKind::Image, item_id_ref: "cmd".into(), number_of_output: 0 }]);
    assert_eq!(reader.args["SpacingZ"], "5.0");
    assert_eq!(reader.args.len(), 6);
    assert_eq!(median.item_id, "item_0002");
    assert_eq!(median.name, "MedianImageFilter");
    assert_eq!(median.inputs[0].item_id_ref, "item_0001");
    assert_eq!(median.inputs[0].number_of_output, 1);
    assert_eq!(median.args["Radius"], "2");
    assert_eq!(doc.execution_order().unwrap(), vec![0, 1]);
}

#[test]
fn self_closing_form_parses_the_same() {
    let closed = READER_MEDIAN.replace("\">\n", "\"/>\n").replace("<item item_id=\"item_0001\"/>", "<item item_id=\"item_0001\">");
    let closed = closed.replace("<item item_id=\"item_0002\"/>", "<item item_id=\"item_0002\">");
    assert_eq!(parse_pipeline(&closed).unwrap(), parse_pipeline(READER_MEDIAN).unwrap());
}

#[test]
fn self_reference_is_a_cycle() {
    let text = READER_MEDIAN.replace("item_id_ref=\"item_0001\"", "item_id_ref=\"item_0002\"");
    let (f, item, line) = fault(&text);
    assert_eq!(f, DocFault::Cycle);
    assert_eq!(item.as_deref(), Some("item_0002"));
    assert_eq!(line, 18);
}

#[test]
fn two_item_cycle_is_rejected() {
    let text = READER_MEDIAN
        .replace("<name>ImageReader</name>", "<name>MedianImageFilter</name>")
        .replace("item_id_ref=\"cmd\"", "item_id_ref=\"item_0002\" ")
        .replace("number_of_output=\"0\"", "number_of_output=\"1\"");
    assert_eq!(fault(&text).0, DocFault::Cycle);
}

#[test]
fn unknown_operator_is_named() {
    let text = READER_MEDIAN.replace("MedianImageFilter", "FancyFilter");
    let (f, item, line) = fault(&text);
    assert_eq!(f, DocFault::UnknownOperator("FancyFilter".into()));
    assert_eq!(item.as_deref(), Some("item_0002"));
    assert_eq!(line, 18);
    let msg = parse_pipeline(&text).unwrap_err().to_string();
    assert!(msg.contains("FancyFilter"), "{msg}");
}

#[test]
fn dangling_reference() {
    let text = READER_MEDIAN.replace("item_id_ref=\"item_0001\"", "item_id_ref=\"item_0009\"");
    assert_eq!(fault(&text).0, DocFault::DanglingRef("item_0009".into()));
}

#[test]
fn duplicate_ids() {
    let text = READER_MEDIAN.replace("item_id=\"item_0002\"", "item_id=\"item_0001\"");
    assert_eq!(fault(&text).0, DocFault::DuplicateId);
}

#[test]
fn out_of_range_output_and_wrong_kind() {
    let text = READER_MEDIAN.replace("number_of_output=\"1\"", "number_of_output=\"2\"");
    assert_eq!(fault(&text).0, DocFault::Structure);
    let text = READER_MEDIAN.replace("<image item_id_ref=\"item_0001\"", "<meta item_id_ref=\"item_0001\"");
    assert_eq!(fault(&text).0, DocFault::Structure);
}

#[test]
fn malformed_documents() {
    assert_eq!(fault("<xpiwit><pipeline>").0, DocFault::Structure);
    assert_eq!(fault("<pipeline></pipeline>").0, DocFault::Structure);
    assert_eq!(fault("<xpiwit><pipeline><item><name>ImageReader</name></item></pipeline></xpiwit>").0, DocFault::Structure);
    let (f, _, line) = fault("<xpiwit>\n<pipeline>\n<item item_id=\"a\">\n<bogus/>\n</item></pipeline></xpiwit>");
    assert_eq!((f, line), (DocFault::Structure, 4));
    assert_eq!(fault("<xpiwit><pipeline a=\"1></pipeline></xpiwit>").0, DocFault::Syntax);
}

#[test]
fn forward_references_are_ordered() {
    let text = r#"<xpiwit><pipeline>
        <item item_id="b"><name>MedianImageFilter</name><input><image item_id_ref="a" number_of_output="1"/></input><arguments/></item>
        <item item_id="a"><name>ImageReader</name><input><image item_id_ref="cmd" number_of_output="0"/></input><arguments/></item>
    </pipeline></xpiwit>"#;
    let doc = parse_pipeline(text).unwrap();
    assert_eq!(doc.execution_order().unwrap(), vec![1, 0]);
}

fn arb_doc() -> impl Strategy<Value = PipelineDoc> {
    let text = "[a-zA-Z0-9 _<>&\"'.,:=-]{0,10}";
    let args = prop::collection::btree_map("[A-Za-z:_<&][A-Za-z0-9:_<&\" ]{0,8}", text, 0..5);
    prop::collection::vec((0..OPERATORS.len(), args, any::<u64>()), 1..8).prop_map(|specs| {
        let mut items: Vec<Item> = Vec::new();
        for (k, (op_ix, args, pick)) in specs.into_iter().enumerate() {
            let producers = |want: Kind| -> Vec<(String, usize)> {
                items
                    .iter()
                    .flat_map(|it| {
                        let outs = lookup(&it.name).unwrap().outputs;
                        outs.iter().enumerate().filter(|(_, o)| **o == want).map(|(n, _)| (it.item_id.clone(), n + 1)).collect::<Vec<_>>()
                    })
                    .collect()
            };
            let mut op = &OPERATORS[op_ix];
            if op.inputs.iter().any(|w| *w != Kind::Image && producers(*w).is_empty()) {
                op = &OPERATORS[0];
            }
            let mut inputs = Vec::new();
            for (slot, want) in op.inputs.iter().enumerate() {
                let from = producers(*want);
                let kind = if want.is_meta() { InputKind::Meta } else { InputKind::Image };
                let (r, n) = if from.is_empty() || (*want == Kind::Image && pick % 3 == 0) {
                    ("cmd".to_string(), slot)
                } else {
                    from[(pick as usize + slot) % from.len()].clone()
                };
                inputs.push(InputRef { kind, item_id_ref: r, number_of_output: n });
            }
            items.push(Item { item_id: format!("item_{k:04}&<\"x\">"), name: op.name.into(), inputs, args });
        }
        PipelineDoc { items }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]
    #[test]
    fn serialize_then_parse_is_identity(doc in arb_doc()) {
        doc.validate().unwrap();
        let back = parse_pipeline(&doc.to_xml()).unwrap();
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn execution_order_respects_edges(doc in arb_doc()) {
        let order = doc.execution_order().unwrap();
        let pos: std::collections::BTreeMap<&str, usize> =
            order.iter().enumerate().map(|(p, &k)| (doc.items[k].item_id.as_str(), p)).collect();
        for it in &doc.items {
            for r in it.inputs.iter().filter(|r| r.item_id_ref != "cmd") {
                prop_assert!(pos[r.item_id_ref.as_str()] < pos[it.item_id.as_str()]);
            }
        }
    }
}
