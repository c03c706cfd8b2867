"""Builds data/taxonomy.json from the numbered outline in taxonomy_outline.txt."""
import json, re, sys, pathlib

here = pathlib.Path(__file__).resolve().parent
outline = (here / "taxonomy_outline.txt").read_text(encoding="utf-8").splitlines()
roots, stack = [], []
for line in outline:
    m = re.match(r"^\s*((?:\d+\.)+)\s+(.*)$", line)
    if not m:
        continue
    depth = m.group(1).count(".")
    node = {"name": m.group(2).strip(), "children": []}
    while stack and stack[-1][0] >= depth:
        stack.pop()
    (stack[-1][1]["children"] if stack else roots).append(node)
    stack.append((depth, node))

def strip(n):
    return {"name": n["name"], "children": [strip(c) for c in n["children"]]} if n["children"] else {"name": n["name"]}

out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else here.parent.parent / "data" / "taxonomy.json"
out.write_text(json.dumps([strip(r) for r in roots], indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
