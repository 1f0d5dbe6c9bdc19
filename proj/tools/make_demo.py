"""Writes a small synthetic corpus and a keyword-world mock script.

    python tools/make_demo.py OUT_DIR [--subjects N] [--chapters N] [--sections N]

OUT_DIR/corpus/<Subject>/<NN>_chapter-<NN>/{body.md,exam.md} and OUT_DIR/mock.json.
Each section mentions one keyword; exam question q is about section ((q-1) % sections) + 1.
"""

import argparse
import json
from pathlib import Path

SUBJECTS = ["Microbiology", "Chemistry", "Economics", "Sociology", "US History"]


def keyword(subject, chapter, section):
    return f"KW{subject:02d}{chapter:02d}{section:02d}Z"


def write_chapter(subject_dir, subject, ordinal, sections, questions):
    body = [f"# Chapter {ordinal}", "", "## Learning Objectives", "", "List the goals.", ""]
    for s in range(1, sections + 1):
        body += [f"## Part {s}", "",
                 f"Passage {subject}.{ordinal}.{s} explains {keyword(subject, ordinal, s)} "
                 "through a worked illustration of tidal marsh ecology.", ""]
    body += ["## Summary", "", "A recap.", ""]
    exam = ["# Review Questions", ""]
    for q in range(1, questions + 1):
        s = (q - 1) % sections + 1
        exam.append(f"{q}. Explain the role of {keyword(subject, ordinal, s)} in case {q}.")
        if q % 2 == 1:
            exam.append(f"Answer: It concerns {keyword(subject, ordinal, s)}.")
        exam.append("")
    d = subject_dir / f"{ordinal:02d}_chapter-{ordinal:02d}"
    d.mkdir(parents=True, exist_ok=True)
    (d / "body.md").write_text("\n".join(body))
    (d / "exam.md").write_text("\n".join(exam))


def mock_script(keywords):
    uniform = {"tokens": [f"t{i}" for i in range(4)], "probs": [0.25] * 4}
    reader = "Imagine you are a reader encountering"
    rules = [
        {"contains": "[LEARNING MATERIALS]", "responder": "keyword-learner"},
        {"contains": "You are a teacher who is evaluating", "responder": "keyword-evaluator"},
        {"contains": "# TARGET TEXTBOOK CONTENT:", "responder": "segment-headers"},
        {"contains": "Classify the questions into one of the six", "responder": "bloom-constant",
         "options": {"cycle": True}},
        {"contains": "<section index=", "responder": "keyword-aligner"},
        {"contains": "to generate the next paragraph", "responder": "keyword-paragraph"},
        {"contains": "Answer each question shortly", "responder": "keyword-answerer"},
        {"contains": "Scoring Criteria", "responder": "keyword-salience"},
        {"contains": reader, "ends_with": "Answer:", "response": "It", "logprobs": uniform},
        {"contains": reader, "response": "is", "logprobs": {"tokens": ["is"], "probs": [1.0]}},
        {"contains": "currently reading the section: ", "responder": "keyword-question"},
        {"contains": "Input context: ", "responder": "keyword-question"},
        {"default": True, "response": "{}"},
    ]
    return {"keywords": keywords, "embedding_dim": 32, "rules": rules}


def make_demo(out, subjects=1, chapters=3, sections=3, questions=10):
    out = Path(out)
    keywords = []
    for i in range(subjects):
        subject = i + 1
        for c in range(1, chapters + 1):
            write_chapter(out / "corpus" / SUBJECTS[i % len(SUBJECTS)], subject, c, sections, questions)
            keywords += [keyword(subject, c, s) for s in range(1, sections + 1)]
    (out / "mock.json").write_text(json.dumps(mock_script(keywords), indent=2))
    return out / "corpus", out / "mock.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--subjects", type=int, default=1)
    ap.add_argument("--chapters", type=int, default=3)
    ap.add_argument("--sections", type=int, default=3)
    ap.add_argument("--questions", type=int, default=10)
    a = ap.parse_args()
    corpus, script = make_demo(a.out, a.subjects, a.chapters, a.sections, a.questions)
    print(corpus)
    print(script)


if __name__ == "__main__":
    main()
