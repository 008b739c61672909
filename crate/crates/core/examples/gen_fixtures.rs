//! Regenerates the `fixtures/` corpus.
//!
//! cargo run -p farkas-core --example gen_fixtures -- [out_dir]

use std::fs;
use std::path::{Path, PathBuf};

use farkas_core::codec::{
    serialize_network, serialize_proof, serialize_property, serialize_query, write_value,
    VectorStyle,
};
use farkas_core::encoder::{BoxProperty, Interval};
use farkas_core::harness::{example_mutations, fuzz, structural_defects, Expect, FuzzConfig};
use farkas_core::proof::NodePath;
use farkas_core::{worked_example, Backend, Rational, Vector};

const BENCH_SEED: u64 = 2024;
const BENCH_PROOFS: usize = 8;

fn write(path: &Path, text: &str) {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).expect("create fixture dir");
    }
    fs::write(path, text).expect("write fixture");
    println!("wrote {}", path.display());
}

fn expect_name(e: Expect) -> String {
    match e {
        Expect::Valid => "VALID".into(),
        Expect::Invalid(r) => r.name().into(),
    }
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    let dense = VectorStyle::Dense;

    let fig2 = worked_example::proof(Backend::Dense);
    write(&out.join("fig2.proof.json"), &serialize_proof(&fig2, dense));

    let mut bad = fig2.clone();
    if let Some(node) = bad.node_at_mut(&NodePath(vec![0])) {
        node.body = farkas_core::proof::NodeBody::Contradiction(Vector::from_ints(
            &[0, 0, 1, -1, 0],
            Backend::Dense,
        ));
    }
    write(&out.join("fig2_badleaf.proof.json"), &serialize_proof(&bad, dense));

    write(
        &out.join("ex1.query.json"),
        &serialize_query(&worked_example::query(), dense),
    );
    write(
        &out.join("fig1.net.json"),
        &serialize_network(&worked_example::network()),
    );
    write(
        &out.join("ex1.prop.json"),
        &serialize_property(&worked_example::property()),
    );
    let iv = |l: i64, u: i64| Interval::new(Rational::from(l), Rational::from(u));
    let sat = BoxProperty::new(vec![iv(-1, 1), iv(-1, 1)], vec![iv(0, 3)]).expect("ordered");
    write(&out.join("fig1_sat.prop.json"), &serialize_property(&sat));
    write(&out.join("notjson.txt"), "this is not a proof\n");

    for (tag, p) in structural_defects(Backend::Dense) {
        write(
            &out.join("invalid").join(format!("{tag}.proof.json")),
            &serialize_proof(&p, dense),
        );
    }

    let mut expected = serde_json::Map::new();
    for (i, m) in example_mutations(Backend::Dense).into_iter().enumerate() {
        let file = format!("{:02}_{}.proof.json", i + 1, m.name);
        write(&out.join("mutations").join(&file), &serialize_proof(&m.proof, dense));
        expected.insert(
            file,
            serde_json::json!({ "full": expect_name(m.full), "partial": expect_name(m.partial) }),
        );
    }
    write(
        &out.join("mutations").join("expected.json"),
        &write_value(&serde_json::Value::Object(expected)),
    );

    let bench = out.join("bench");
    write(&bench.join("fig2.proof.json"), &serialize_proof(&fig2, dense));
    let report = fuzz(FuzzConfig {
        seed: BENCH_SEED,
        count: 60,
        witness_samples: 0,
        mutants_per_kind: 0,
        ..FuzzConfig::default()
    });
    let mut proofs: Vec<_> = report
        .cases
        .iter()
        .filter_map(|c| c.proof.as_ref().map(|p| (c.index, p)))
        .collect();
    proofs.sort_by_key(|(i, p)| (std::cmp::Reverse(p.root.count_nodes()), *i));
    for (k, (index, p)) in proofs.into_iter().take(BENCH_PROOFS).enumerate() {
        let style = if k % 2 == 0 { VectorStyle::Sparse } else { dense };
        write(
            &bench.join(format!("fuzz_s{BENCH_SEED}_c{index:03}.proof.json")),
            &serialize_proof(p, style),
        );
    }
}
