"""CLI contract: flags, exit codes, output schemas and the golden ablation report."""

import json
import sys

from schema_check import Env


def load(path):
    with open(path) as f:
        return json.load(f)


def main():
    env = Env(sys.argv)
    common = ["--mock", env.mock]

    # serve without a database: usage error naming the flag
    r = env.run("serve", "--port", "0", expect=2)
    env.expect("--db" in r.stderr, f"serve without --db: message does not name the flag: {r.stderr!r}")
    r = env.run("serve", "--db", env.out("absent.db"), "--port", "0", expect=2)
    env.expect("--db" in r.stderr, f"serve with a missing file: {r.stderr!r}")
    env.run("serve", "--bogus", expect=2)
    env.run("eval", "ablation", "--db", env.db, "--tasks", env.tasks, "--mode", "sideways", *common, expect=2)
    env.run("eval", "ablation", "--db", env.db, "--tasks", env.tasks, "--mode", "rag", *common, expect=2)
    env.run("offline", "extract", "--db", env.db, "--scripts", env.out("none"), "--out", env.out("x.jsonl"), expect=2)

    # fragment dump
    q = env.out("q.sql")
    with open(q, "w") as f:
        f.write("SELECT a FROM t")
    dump = json.loads(env.run("fragment", q).stdout)
    env.validate("fragment_dump", dump, "fragment q.sql")
    env.expect(len(dump["fragments"]) == 2, f"fragment: {len(dump['fragments'])} fragments, wanted 2")

    # dictionary and offline extraction reproduce the committed fixtures
    d = env.out("dictionary.json")
    env.run("dict", "suggest", "--db", env.db, "--out", d, *common)
    env.run("dict", "complete", "--db", env.db, "--dict", d, "--table", "molecule", "--column", "label",
            "--partial", "+ means carcinogenic", *common)
    env.validate("data_dictionary", load(d), "dict suggest")
    env.expect(load(d) == load(env.dictionary), "dict suggest + complete differs from the committed dictionary")
    store = env.out("store.jsonl")
    report = json.loads(env.run("offline", "extract", "--db", env.db, "--scripts", env.histories, "--dict", d,
                                "--out", store, *common).stdout)
    env.validate("offline_report", report, "offline extract")
    with open(store) as f:
        lines = [json.loads(l) for l in f]
    for i, rec in enumerate(lines):
        env.validate("knowledge_record", rec, f"store line {i + 1}")
    with open(store) as a, open(env.store) as b:
        env.expect(a.read() == b.read(), "offline extract differs from the committed store")

    # evaluation reports
    env.validate("eval_tasks", load(env.tasks), "tasks fixture")
    base = ["--db", env.db, "--store", env.store, "--dict", env.dictionary, *common]
    env.run("eval", "recon", *base, "--scripts", env.histories, "--out", env.out("recon.json"))
    env.run("eval", "retrieval", "--store", env.store, "--tasks", env.tasks, *common, "--out", env.out("retrieval.json"))
    env.run("eval", "ablation", *base, "--tasks", env.tasks, "--out", env.out("ablation.json"))
    env.run("eval", "ablation", *base, "--tasks", env.tasks, "--mode", "rag", "--out", env.out("ablation_rag.json"))
    for name, schema in [("recon", "reconstruction_report"), ("retrieval", "retrieval_report"),
                         ("ablation", "ablation_report"), ("ablation_rag", "ablation_report")]:
        doc = load(env.out(f"{name}.json"))
        env.validate(schema, doc, f"eval {name}")
        env.expect(doc["identity_violations"] == [], f"eval {name}: {doc['identity_violations']}")
    env.expect(load(env.out("ablation_rag.json")) == load(env.path("tests/golden/ablation_rag.json")),
               "eval ablation --mode rag differs from tests/golden/ablation_rag.json")
    modes = {r["Mode"]: r["Success Ratio"] for r in load(env.out("ablation.json"))["rows"]}
    env.expect(modes["Direct"] < modes["RAG"] <= modes["Pipeline"], f"ablation ordering: {modes}")

    # repeated runs report means alongside the first run
    env.run("eval", "retrieval", "--store", env.store, "--tasks", env.tasks, *common, "--repeat", "2",
            "--out", env.out("retrieval2.json"))
    rep = load(env.out("retrieval2.json"))
    env.validate("retrieval_report", rep, "eval retrieval --repeat 2")
    env.expect(rep["repetitions"]["count"] == 2 and rep["repetitions"]["mean_rows"] == rep["rows"],
               "mock repetitions should average to the single-run rows")

    # dataset synthesis and review round trip
    tasks = env.out("dataset.json")
    review = env.out("review.json")
    env.run("eval", "dataset", "--db", env.db, "--store", env.store, "--scripts", env.histories, "--dict",
            env.dictionary, "--database-id", "toxicology", "-n", "4", "--out", tasks, "--review", review, *common)
    env.validate("eval_tasks", load(tasks), "eval dataset")
    rv = load(review)
    for entry in rv:
        entry["decision"] = "accept"
    with open(review, "w") as f:
        json.dump(rv, f)
    accepted = env.out("accepted.json")
    env.run("eval", "review", "--review", review, "--db", env.db, "--store", env.store, "--scripts", env.histories,
            "--out", accepted)
    env.expect(load(accepted) == load(tasks), "accepting every task changes the task list")

    # the example server config is accepted by the config schema
    env.validate("server_config", load(env.path("tools/server.example.json")), "server.example.json")
    env.finish("cli")


if __name__ == "__main__":
    main()
