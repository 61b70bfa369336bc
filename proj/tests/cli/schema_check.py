"""Shared helpers: schema registry, CLI paths, fixture database."""

import glob
import json
import os
import subprocess
import sys

from jsonschema import Draft202012Validator
from referencing import Registry, Resource


class Env:
    def __init__(self, argv):
        if len(argv) != 4:
            sys.exit(f"usage: {argv[0]} <sqlknow binary> <source dir> <work dir>")
        self.bin, self.src, self.work = argv[1], argv[2], argv[3]
        os.makedirs(self.work, exist_ok=True)
        self.mock = self.path("tests/mock/toxicology")
        self.dictionary = self.path("tests/fixtures/toxicology_dictionary.json")
        self.store = self.path("tests/fixtures/eval/store.jsonl")
        self.tasks = self.path("tests/fixtures/eval/tasks.json")
        self.histories = self.path("tests/fixtures/eval/histories.json")
        self.db = os.path.join(self.work, "toxicology.db")
        if not os.path.exists(self.db):
            self.run("db", "init", "--sql", self.path("tests/fixtures/toxicology.sql"), "--out", self.db)
        self.registry = Registry()
        for p in glob.glob(self.path("schemas/*.schema.json")):
            with open(p) as f:
                doc = json.load(f)
            self.registry = self.registry.with_resource(doc["$id"], Resource.from_contents(doc))
        self.failures = []
        self.checked = 0

    def path(self, rel):
        return os.path.join(self.src, rel)

    def out(self, name):
        return os.path.join(self.work, name)

    def run(self, *args, expect=0):
        r = subprocess.run([self.bin, *args], capture_output=True, text=True, timeout=300)
        if expect is not None and r.returncode != expect:
            raise AssertionError(f"sqlknow {' '.join(args)} exited {r.returncode}, wanted {expect}\n{r.stderr}")
        return r

    def validate(self, schema, instance, where):
        with open(self.path(f"schemas/{schema}.schema.json")) as f:
            doc = json.load(f)
        errors = list(Draft202012Validator(doc, registry=self.registry).iter_errors(instance))
        self.checked += 1
        for e in errors[:5]:
            self.failures.append(f"{where}: {schema}: {e.message[:300]} at {list(e.absolute_path)}")

    def expect(self, cond, message):
        if not cond:
            self.failures.append(message)

    def finish(self, what):
        for f in self.failures:
            print("FAIL", f)
        print(f"{what}: {self.checked} documents validated, {len(self.failures)} failures")
        sys.exit(1 if self.failures else 0)
