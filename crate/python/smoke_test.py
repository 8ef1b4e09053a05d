"""Smoke test for the crossalpaca_py extension module.

Build and install with `maturin develop -m crates/python/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import json
import re
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import crossalpaca_py as ca


class AnswerKeyHandler(BaseHTTPRequestHandler):
    """Completions endpoint that replies with the `[[answer:X]]` marker in the prompt."""

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        found = re.search(r"\[\[answer:(.*?)\]\]", body["prompt"])
        reply = json.dumps({"choices": [{"text": " " + (found.group(1) if found else "") + "\n"}]})
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(reply.encode())

    def log_message(self, *args):
        pass


def main():
    tsv = "".join(f"The house number {i} is red.\tDas Haus Nummer {i} ist rot.\n" for i in range(50))
    corpus = ca.ParallelCorpus.from_tsv(tsv, "en", "de")
    assert len(corpus) == 50
    kept, report = corpus.filter(min_chars=1, max_chars=2048, max_length_ratio=3.0)
    assert report["retained"] == 50 and len(kept) == 50

    translations = ca.build_translation_set(kept, "de", 20, seed=7)
    assert translations.counts()["en_x"] == 10 and translations.counts()["x_en"] == 10
    again = ca.build_translation_set(kept, "de", 20, seed=7)
    assert translations.to_json() == again.to_json()
    instruction, _, _ = translations.records()[0]
    assert instruction == "Translate the following sentences from English to German."

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        records = [{"instruction": f"Nenne Zahl {i}.", "input": "", "output": str(i)} for i in range(6)]
        (tmp / "inst.json").write_text(json.dumps(records), encoding="utf-8")
        instructions = ca.DemonstrationSet.load_instructions(tmp / "inst.json", "de")
        mixed = ca.mix_sets([instructions, translations], seed=ca.derive_seed(7, "mix"))
        assert len(mixed) == 26
        mixed.write(tmp / "de-crossalpaca.json")
        loaded = ca.DemonstrationSet.read(tmp / "de-crossalpaca.json")
        assert loaded.to_json() == mixed.to_json()
        assert set(json.loads(loaded.to_json())[0]) == {"instruction", "input", "output"}
        assert len(loaded.subsample(10, seed=1, stratify=False)) == 10

        paragraphs = [
            {
                "context": f"Kontext {i}. [[answer:{'Antwort ' + str(i) if i < 3 else 'falsch'}]]",
                "qas": [{"id": f"q{i}", "question": f"Frage {i}?", "answers": [{"text": f"Antwort {i}", "answer_start": 0}]}],
            }
            for i in range(4)
        ]
        (tmp / "xquad.json").write_text(json.dumps({"data": [{"title": "t", "paragraphs": paragraphs}]}), encoding="utf-8")
        bench = ca.Benchmark.load(tmp / "xquad.json", "XQUAD", "de")
        assert len(bench) == 4 and bench.name == "XQUAD"
        assert "### Response:" in bench.prompt(0)

        server = HTTPServer(("127.0.0.1", 0), AnswerKeyHandler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            result = json.loads(bench.evaluate(f"http://127.0.0.1:{server.server_port}", "m", concurrency=2))
        finally:
            server.shutdown()
        assert (result["n_items"], result["n_correct"]) == (4, 3), result

    assert ca.normalize_answer("The  Answer!", "en") == "answer"
    assert ca.exact_match("Hund.", ["hund"], "de")
    assert not ca.exact_match("der Hund", ["Hund"], "de")
    assert sorted(ca.sample_without_replacement(10, 10, 3)) == list(range(10))

    table = ca.aggregate(
        [("a", "MLQA", 0.336), ("b", "MLQA", 0.5), ("c", "MLQA", 0.9)],
        groups=[("ab", ["a", "b"])],
        comparisons=[("c vs ab", "c", "ab")],
        format="json",
    )
    report = json.loads(table)
    assert report["averages"][0]["values"]["MLQA"] == 0.42, report
    print("smoke test ok", ca.NORMALIZATION_VERSION)


if __name__ == "__main__":
    main()
