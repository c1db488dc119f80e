#!/usr/bin/env python3
# Copyright 2026 The vulgraph Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates tests/fixtures/cpg: small CPG documents with explicit splits."""

import json
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent / "cpg"
FILLERS = [
    ("Identifier", "@"),
    ("Literal", "0"),
    ("Assignment", "@ = 1"),
    ("Call", "log_event(@)"),
    ("Return", "return @"),
]
CWES = ["CWE-120", "CWE-787", "CWE-476"]


def document(index, label, rng):
    n = rng.randint(5, 9)
    motif = rng.randint(1, n - 1)
    nodes = [{"id": 1, "type": "Method", "code": f"f{index}"}]
    edges = []
    lines = [f"void f{index}(char *dst, const char *src, int n, int cap) {{"]
    for i in range(1, n):
        if i == motif:
            kind, code = ("BufferCopy", "memcpy(dst, src, n)") if label else ("BoundsCheck", "if (n < cap)")
        else:
            kind, code = rng.choice(FILLERS)
            code = code.replace("@", f"v{index}_{i}")
        nid = i + 1
        nodes.append({"id": nid, "type": kind, "code": code})
        edges.append({"src": 1, "dst": nid, "kind": "AST"})
        if i > 1:
            edges.append({"src": nid - 1, "dst": nid, "kind": "CFG"})
        if i > 2 and rng.random() < 0.4:
            edges.append({"src": rng.randint(2, nid - 1), "dst": nid, "kind": "DDG"})
        lines.append(f"  {code};")
    edges.append({"src": 1, "dst": motif + 1, "kind": "CDG"})
    lines.append("}")
    cwe = [CWES[index % 3]] if label else []
    return {
        "function_id": f"fixture_{index}",
        "label": label,
        "cwe": cwe,
        "code": "\n".join(lines) + "\n",
        "nodes": nodes,
        "edges": edges,
    }


def main():
    rng = random.Random(20240611)
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.json*"):
        old.unlink()
    splits = ["train"] * 16 + ["valid"] * 6 + ["test"] * 6
    docs = []
    for i, split in enumerate(splits):
        doc = document(i, i % 2, rng)
        doc["split"] = split
        docs.append(doc)
    for doc in docs[:20]:
        (OUT / f"{doc['function_id']}.json").write_text(json.dumps(doc, indent=1) + "\n")
    with open(OUT / "batch.jsonl", "w") as f:
        for doc in docs[20:]:
            f.write(json.dumps(doc) + "\n")
        dup = dict(docs[0], function_id="fixture_duplicate")
        f.write(json.dumps(dup) + "\n")
    (OUT / "zz_malformed.json").write_text('{"function_id": "broken", "label": 1, "nodes": [}\n')


if __name__ == "__main__":
    main()
