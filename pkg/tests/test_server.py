from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request
from pathlib import Path

import pytest

from kas.annotator import annotate_corpus
from kas.config import Config
from kas.gencorpus import generate_random
from kas.index import build_index
from kas.matcher import render_results, search
from kas.queryproc import parse_query
from kas.server import AppState, make_server

GOLDEN = Path(__file__).parent / "golden" / "scenario1_query.json"


@pytest.fixture(scope="module")
def served(resources, plans):
    docs, _ = generate_random(55, 120)
    annotations, _ = annotate_corpus(plans, docs)
    index = build_index(annotations, docs, pattern_ids=[p.pattern_id for p in plans])
    state = AppState(resources=resources, index=index, config=Config())
    server = make_server(state, host="127.0.0.1", port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield state, index, f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


def _get(base, path):
    try:
        with urllib.request.urlopen(base + path) as r:
            return r.status, r.read().decode()
    except urllib.error.HTTPError as e:
        return e.code, e.read().decode()


def _post(base, path, obj):
    req = urllib.request.Request(
        base + path, data=json.dumps(obj).encode(), method="POST",
        headers={"Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(req) as r:
            return r.status, r.read().decode()
    except urllib.error.HTTPError as e:
        return e.code, e.read().decode()


def test_patterns_endpoint(served, resources):
    _, _, base = served
    status, body = _get(base, "/api/patterns")
    assert status == 200
    patterns = json.loads(body)["patterns"]
    assert len(patterns) == 8
    by_id = {p["id"]: p for p in patterns}
    assert by_id["EPDI"]["classes"] == ["ENTITY", "PRONOUN", "DOSAGE", "INTERVAL"]
    assert by_id["ERD"]["gaps"] == [0, 4]


def test_entity_options_match_knowledge_walk(served, resources):
    _, _, base = served
    status, body = _get(base, "/api/classes/ENTITY/options")
    assert status == 200
    payload = json.loads(body)
    assert payload["source"] == "ontology"
    got = {(c["id"], c["parent"]) for c in payload["concepts"]}
    expected = {(c.id, c.parent) for c in resources.model.concepts.values()}
    assert got == expected


def test_dosage_and_interval_options(served):
    _, _, base = served
    status, body = _get(base, "/api/classes/DOSAGE/options")
    payload = json.loads(body)
    assert status == 200
    assert {o["symbol"] for o in payload["operators"]} == {">", "<", ">=", "<=", "="}
    assert set(payload["units"]) == {"mg", "mcg", "g", "kg"}
    status, body = _get(base, "/api/classes/INTERVAL/options")
    subcats = json.loads(body)["subcategories"]
    assert "BY_DAY" in subcats and "BY_HOUR" in subcats and "BY_INDICATOR" not in subcats


def test_pronoun_options_list_subcategories(served):
    _, _, base = served
    status, body = _get(base, "/api/classes/PRONOUN/options")
    assert status == 200
    assert "PERSONAL_PRONOUN" in json.loads(body)["subcategories"]


def test_unknown_class_404(served):
    _, _, base = served
    status, body = _get(base, "/api/classes/NOPE/options")
    assert status == 404
    assert json.loads(body)["error"] == "unknown_class"


def test_doc_endpoint(served):
    state, index, base = served
    doc_id = index.doc_order[0]
    status, body = _get(base, f"/api/docs/{doc_id}")
    assert status == 200
    assert json.loads(body)["text"] == index.doc(doc_id)["text"]
    status, body = _get(base, "/api/docs/nope")
    assert status == 404


def test_search_parity_with_inprocess_results(served, resources):
    state, index, base = served
    obj = json.loads(GOLDEN.read_text())
    status, body = _post(base, "/api/search", obj)
    assert status == 200
    query = parse_query(resources.grammar, resources.model, resources.tables, obj)
    expected = render_results(*search(index, resources.tables, query))
    assert body == expected


def test_cli_and_api_results_byte_identical(served, resources, plans, tmp_path, capsys):
    from kas.cli import main
    from kas.index import save

    _, index, base = served
    index_path = tmp_path / "parity.kix"
    save(index, index_path)
    obj = json.loads(GOLDEN.read_text())
    _, api_body = _post(base, "/api/search", obj)

    qfile = tmp_path / "q.json"
    qfile.write_text(GOLDEN.read_text(), encoding="utf-8")
    code = main(["search", "--index", str(index_path), "--query", f"@{qfile}"])
    cli_out = capsys.readouterr().out
    assert code == 0
    assert cli_out.encode() == api_body.encode() + b"\n"


def test_search_empty_elements_400(served):
    _, _, base = served
    status, body = _post(base, "/api/search", {"elements": []})
    assert status == 400
    assert json.loads(body)["error"] == "invalid_query"


def test_search_invalid_json_400(served):
    _, _, base = served
    req = urllib.request.Request(base + "/api/search", data=b"{nope", method="POST")
    try:
        urllib.request.urlopen(req)
        status = 200
    except urllib.error.HTTPError as e:
        status = e.code
        body = e.read().decode()
    assert status == 400
    assert json.loads(body)["error"] == "invalid_json"


def test_unknown_route_404(served):
    _, _, base = served
    status, _ = _get(base, "/api/unknown")
    assert status == 404


def test_restart_reproduces_responses(resources, plans):
    docs, _ = generate_random(55, 60)
    annotations, _ = annotate_corpus(plans, docs)
    index = build_index(annotations, docs, pattern_ids=[p.pattern_id for p in plans])
    obj = json.loads(GOLDEN.read_text())
    bodies = []
    for _ in range(2):
        state = AppState(resources=resources, index=index, config=Config())
        server = make_server(state, host="127.0.0.1", port=0)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        base = f"http://127.0.0.1:{server.server_address[1]}"
        bodies.append(_post(base, "/api/search", obj))
        bodies.append(_get(base, "/api/patterns"))
        server.shutdown()
        server.server_close()
    assert bodies[0] == bodies[2]
    assert bodies[1] == bodies[3]


def test_static_ui_serving(resources, plans, tmp_path):
    docs, _ = generate_random(55, 10)
    annotations, _ = annotate_corpus(plans, docs)
    index = build_index(annotations, docs, pattern_ids=[p.pattern_id for p in plans])
    (tmp_path / "index.html").write_text("<html>explorer</html>", encoding="utf-8")
    cfg = Config()
    cfg.ui_dir = tmp_path
    state = AppState(resources=resources, index=index, config=cfg)
    server = make_server(state, host="127.0.0.1", port=0)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    status, body = _get(base, "/")
    assert status == 200 and "explorer" in body
    status, _ = _get(base, "/../etc/passwd")
    assert status == 404
    server.shutdown()
    server.server_close()
