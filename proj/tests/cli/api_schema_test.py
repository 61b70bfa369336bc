"""Drives the HTTP API of `sqlknow serve --mock` and validates every response
against the shipped schemas."""

import json
import os
import re
import shutil
import subprocess
import sys
import urllib.error
import urllib.request

from schema_check import Env

FIG1 = ("Show me number of non-carcinogenic molecules and number of carcinogenic molecules "
        "with least common elements.")


def main():
    env = Env(sys.argv)
    state = env.out("api")
    shutil.rmtree(state, ignore_errors=True)
    os.makedirs(state)
    dictionary = shutil.copy(env.dictionary, state)
    store = shutil.copy(env.store, state)
    proc = subprocess.Popen(
        [env.bin, "serve", "--db", env.db, "--database-id", "toxicology", "--store", store, "--dict", dictionary,
         "--sessions", f"{state}/sessions", "--port", "0", "--mock", env.mock, "--cors", "http://localhost:5173"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    try:
        line = proc.stdout.readline()
        m = re.match(r"listening on (http://\S+)", line)
        if not m:
            proc.kill()
            sys.exit(f"server did not start: {line!r} {proc.stderr.read()}")
        drive(env, m.group(1), state)
    finally:
        proc.terminate()
        proc.wait(timeout=10)
    env.finish("api schema")


def call(base, method, path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(base + path, data=data, method=method, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=60) as r:
            return r.status, json.loads(r.read() or b"null")
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read() or b"null")


def drive(env, base, state):
    def ok(method, path, schema, body=None):
        status, doc = call(base, method, path, body)
        env.expect(status == 200, f"{method} {path}: status {status}: {doc}")
        env.validate(schema, doc, f"{method} {path}")
        return doc

    def err(method, path, want, body=None):
        status, doc = call(base, method, path, body)
        env.expect(status == want, f"{method} {path}: status {status}, wanted {want}")
        env.validate("error", doc, f"{method} {path}")
        return doc

    ok("GET", "/health", "health")
    handle = ok("POST", "/sessions", "session_handle", {"database_id": "toxicology"})
    sid = handle["session_id"]
    ok("GET", f"/sessions/{sid}", "session_handle")
    err("GET", f"/sessions/{sid}/graph", 404)
    err("POST", "/sessions", 404, {"database_id": "financial"})
    err("POST", "/sessions", 400, {})
    err("GET", "/sessions/zzz", 404)

    summary = ok("POST", f"/sessions/{sid}/generate", "generated_query_summary", {"instruction": FIG1})
    titles = {i["title"].lower() for i in summary["items"]}
    env.expect("limit to 1 result" in titles, f"generate: no 'limit to 1 result' item in {sorted(titles)}")
    ok("GET", f"/sessions/{sid}/graph", "dependency_graph")
    ok("GET", f"/sessions/{sid}/knowledge", "knowledge_view")
    for item in summary["items"]:
        ok("GET", f"/sessions/{sid}/items/{urllib.request.quote(item['id'], safe='')}/result?generation=1",
           "fragment_metadata")
    for unit in summary["units"]:
        ok("GET", f"/sessions/{sid}/subqueries/{unit['id']}/result", "result_table")

    edit = {"mode": "Modify", "target": {"type": "Item", "id": "least_com_el/output"},
            "instruction": "Consider multiple least common elements"}
    env.validate("refinement_request", edit, "refine request")
    refined = ok("POST", f"/sessions/{sid}/refine", "generated_query_summary", edit)
    env.expect(refined["generation"] == 2, "refine: generation is not 2")
    err("GET", f"/sessions/{sid}/items/least_com_el%2Fgroup/result?generation=1", 409)
    err("POST", f"/sessions/{sid}/refine", 404, {"mode": "Delete", "target": {"type": "Item", "id": "nowhere/output"}})
    err("POST", f"/sessions/{sid}/refine", 400, {"mode": "Explode", "target": {"type": "Item", "id": "x"}})
    delete = {"mode": "Delete", "target": {"type": "Item", "id": "carci_mol/output"}}
    ok("POST", f"/sessions/{sid}/refine", "generated_query_summary", delete)

    ok("GET", "/dictionary", "data_dictionary")
    ok("PUT", "/dictionary", "data_dictionary",
       {"columns": [{"table": "bond", "column": "bond_type", "description": "Bond kind: - single, = double, # triple."}]})
    ok("POST", "/dictionary/complete", "dictionary_completion",
       {"table": "molecule", "column": "label", "partial": "+ means carcinogenic"})
    err("POST", "/dictionary/complete", 400, {"table": "molecule", "column": "label", "partial": ""})
    ok("POST", "/offline/extract", "offline_report", {"scripts_path": env.path("tests/fixtures/history")})
    err("GET", "/no/such/route", 404)

    with open(f"{state}/sessions/{sid}.json") as f:
        env.validate("session_file", json.load(f), "session file")
    with open(f"{state}/toxicology_dictionary.json") as f:
        env.validate("data_dictionary", json.load(f), "saved dictionary")


if __name__ == "__main__":
    main()
