"""Renders the two tcolorbox prompts of a markdown source to golden files.

Usage: render_prompts.py SOURCE.md [DEST_DIR]

Markup handling is deliberately small: bold/italic/tt wrappers are dropped,
enumerate items become "1." or "a)", itemize items become "-", verbatim
blocks are copied as-is, LaTeX line breaks are removed and trailing spaces
stripped. The "{}" placeholder is kept for substitution.
"""
import pathlib
import re
import sys

here = pathlib.Path(__file__).resolve().parent
source = pathlib.Path(sys.argv[1]).read_text(encoding="utf-8")


def box(title):
    start = source.index("title=\\textit{%s}" % title)
    body_start = source.index("\n", start) + 1
    end = source.index("\\end{tcolorbox}", body_start)
    return source[body_start:end]


def strip_inline(s):
    prev = None
    while prev != s:
        prev = s
        s = re.sub(r"\\text(?:bf|it|tt)\{([^{}]*)\}", r"\1", s)
    return s.replace("\\\\", "").rstrip()


def render(src):
    out, stack, verbatim = [], [], False
    for raw in src.split("\n"):
        line = raw.rstrip()
        s = line.strip()
        if verbatim:
            if s == "\\end{verbatim}":
                verbatim = False
            else:
                out.append(line)
            continue
        if s == "\\begin{verbatim}":
            verbatim = True
            continue
        m = re.match(r"\\begin\{(enumerate|itemize)\}(\[label=\\alph\*\)\])?", s)
        if m:
            stack.append([m.group(1), "alpha" if m.group(2) else "num", 0])
            continue
        if re.match(r"\\end\{(enumerate|itemize)\}", s):
            stack.pop()
            continue
        if s.startswith("\\item"):
            kind, style, n = stack[-1]
            stack[-1][2] = n + 1
            indent = "    " * (len(stack) - 1)
            if kind == "itemize":
                marker = "-"
            elif style == "alpha":
                marker = "%s)" % "abcdefghij"[n]
            else:
                marker = "%d." % (n + 1)
            out.append(indent + marker + " " + strip_inline(s[len("\\item"):].strip()))
            continue
        out.append(strip_inline(s))
    text = "\n".join(out)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip("\n")


structuring = render(box("Structuring Prompt"))
disease = render(box("Diseases prompt"))

dest = pathlib.Path(sys.argv[2]) if len(sys.argv) > 2 else here.parent / "golden"
(dest / "structuring_prompt_template.txt").write_text(structuring + "\n", encoding="utf-8")
(dest / "disease_prompt_published.txt").write_text(disease + "\n", encoding="utf-8")

# Worked substitutions used by the byte-equality tests. The disease list is
# replaced by the leaves of the bundled tree since the printed list is
# incomplete.
import json

tree = json.loads((here.parent.parent / "data" / "taxonomy.json").read_text(encoding="utf-8"))


def leaves(n):
    kids = n.get("children") or []
    return [n["name"]] if not kids else [x for c in kids for x in leaves(c)]


leaf_names = [x for r in tree for x in leaves(r)]
head, rest = disease.split("2) List of possible diseases:\n", 1)
_, tail = rest.split("\n\n3)", 1)
disease_tpl = head + "2) List of possible diseases:\n" + "\n".join("- " + n for n in leaf_names) + "\n\n3)" + tail

report = "CHEST PA: clear lungs."
(dest / "structuring_prompt_example.txt").write_bytes(structuring.replace("{}", report).encode("utf-8"))
findings = ["No pneumothorax.", "Small left pleural effusion.", "Heart size is normal."]
(dest / "disease_prompt_example.txt").write_bytes(disease_tpl.replace("{}", "\n".join(findings)).encode("utf-8"))
