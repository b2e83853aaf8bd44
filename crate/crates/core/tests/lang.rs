use emslice::lang::{self, LangError, StmtKind};

fn fixture(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

fn type_error(src: &str) -> String {
    match lang::parse(src) {
        Err(e @ (LangError::Type { .. } | LangError::Name { .. })) => e.to_string(),
        other => panic!("expected a semantic error, got {other:?}"),
    }
}

#[test]
fn fixtures_parse_with_preorder_ids() {
    let p = lang::parse(&fixture("delete_parent.mj")).unwrap();
    let m = &p.methods[0];
    assert_eq!(m.stmt_count, 13);
    let ids: Vec<u32> = m.all_stmts().iter().map(|s| s.id).collect();
    assert_eq!(ids, (1..=13).collect::<Vec<_>>());
    assert!(matches!(m.stmt(2).unwrap().kind, StmtKind::While { .. }));
    assert!(matches!(m.stmt(13).unwrap().kind, StmtKind::Return(Some(_))));

    let p = lang::parse(&fixture("sort_and_normalize.mj")).unwrap();
    assert_eq!(p.methods[0].stmt_count, 18);
    assert!(matches!(p.methods[0].stmt(10).unwrap().kind, StmtKind::While { .. }));
}

#[test]
fn unparse_round_trips() {
    for name in ["delete_parent.mj", "sort_and_normalize.mj"] {
        let p = lang::parse(&fixture(name)).unwrap();
        let text = lang::unparse(&p);
        let q = lang::parse(&text).unwrap();
        assert_eq!(p, q, "{name}");
        assert_eq!(text, lang::unparse(&q));
    }
}

#[test]
fn expression_parenthesization_survives_round_trip() {
    let src = "int f(int a, int b) { int x = (a - b) - (a - b) * -(a + 1); \
               bool c = !(a < b) || a == b && true; return x % (b / 2 + 1); }";
    let p = lang::parse(src).unwrap();
    assert_eq!(p, lang::parse(&lang::unparse(&p)).unwrap());
}

#[test]
fn else_if_and_classes_round_trip() {
    let src = r#"
class Point { int x; int y; }
int count = 0;
void shift(Point this, int d) { this.x = this.x + d; }
string label(int v) {
    if (v < 0) { return "neg"; } else if (v == 0) { return "zero"; } else { return "pos\n"; }
}
void main() {
    Point p = new Point();
    p.shift(3);
    int[] a = new int[4];
    a[0] = p.x;
    count = count + len(a);
    write("out.txt", label(a[0]));
    { int scoped = 1; print(scoped); }
}
"#;
    let p = lang::parse(src).unwrap();
    assert_eq!(p.entry.as_deref(), Some("main"));
    assert_eq!(p, lang::parse(&lang::unparse(&p)).unwrap());
}

#[test]
fn rejects_use_before_definite_assignment() {
    let msg = type_error("int f(bool c) { int x; if (c) { x = 1; } return x; }");
    assert!(msg.contains("might not have been initialized"), "{msg}");
    lang::parse("int f(bool c) { int x; if (c) { x = 1; } else { x = 2; } return x; }").unwrap();
}

#[test]
fn rejects_shadowing_but_allows_sibling_reuse() {
    let msg = type_error("void f() { int x = 1; if (true) { int x = 2; } }");
    assert!(msg.contains("already declared"), "{msg}");
    lang::parse("void f() { if (true) { int x = 2; } else { int x = 3; } }").unwrap();
}

#[test]
fn final_rules() {
    type_error("void f() { final int x = 1; x = 2; }");
    type_error("void f(bool c) { final int x; while (c) { x = 1; } }");
    type_error("void f(bool c) { final int x; if (c) { x = 1; } x = 2; }");
    lang::parse("int f(bool c) { final int x; if (c) { x = 1; } else { x = 2; } return x; }")
        .unwrap();
}

#[test]
fn rejects_type_errors_and_missing_returns() {
    type_error("int f() { bool b = 1; return 0; }");
    type_error("int f(int a) { if (a > 0) { return 1; } }");
    type_error("void f() { return; print(1); }");
    type_error("void f() { g(); }");
    type_error("void f(int[] a) { a.x = 1; }");
    assert!(matches!(
        lang::parse("void f() {} void f() {}"),
        Err(LangError::DuplicateMethod(_))
    ));
}

#[test]
fn syntax_errors_carry_positions() {
    match lang::parse("void f() {\n  int x = ;\n}") {
        Err(LangError::Syntax { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}
