"""Drives the studysim binary against a generated demo corpus and checks exit codes."""

import shutil
import subprocess
import sys
from pathlib import Path

binary, make_demo, work = sys.argv[1], sys.argv[2], Path(sys.argv[3])
shutil.rmtree(work, ignore_errors=True)
work.mkdir(parents=True)
subprocess.run([sys.executable, make_demo, str(work / "demo")], check=True, capture_output=True)
corpus, script = work / "demo" / "corpus", work / "demo" / "mock.json"
base = [binary, "--backend", f"mock:{script}", "--out", str(work / "runs"), "--cache-dir", str(work / "cache"),
        "--run-id", "cli", "--log-level", "error"]


def expect(code, *args):
    r = subprocess.run(base + list(args), capture_output=True, text=True)
    if r.returncode != code:
        sys.exit(f"{' '.join(args)}: exit {r.returncode}, want {code}\n{r.stdout}\n{r.stderr}")


(work / "empty").mkdir()
expect(2, "ingest", str(work / "empty"))
expect(3, "utility")
expect(0, "ingest", str(corpus))
expect(0, "generate")
expect(0, "run")
expect(0, "utility")
expect(0, "metrics")
expect(0, "filter", "--theta", "0.35")
expect(2, "filter", "--theta", "0.2")
expect(0, "emit-finetune", "--mode", "cross", "--sft")
expect(0, "report")
assert (work / "runs" / "cli" / "report" / "report.md").exists()
print("ok")
