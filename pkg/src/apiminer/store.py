"""Flat on-disk model store: one JSON file per (key, format) plus an index.

The index maps object keys to model files with a format tag ("hapi" for the
hidden-state models, "ngram" for the baseline) and training metadata. Writes
go through a temp-file-then-rename so a crashed run never leaves a torn
index.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from .errors import UnknownModelError
from .hmm import UsageHmm
from .ngram import NgramModel
from .sequences import ObjectKey

FORMAT_HMM = "hapi"
FORMAT_NGRAM = "ngram"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _model_filename(key: ObjectKey, fmt: str) -> str:
    digest = hashlib.sha1(key.display.encode()).hexdigest()[:12]
    return f"{fmt}-{digest}.json"


class ModelStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.json"

    def _read_index(self) -> list[dict]:
        if not self.index_path.exists():
            return []
        return json.loads(self.index_path.read_text())["models"]

    def _write_index(self, entries: list[dict]) -> None:
        entries = sorted(entries, key=lambda e: (e["types"], e["format"]))
        _atomic_write(self.index_path,
                      json.dumps({"models": entries}, indent=1) + "\n")

    def entries(self) -> list[dict]:
        return self._read_index()

    def _save(self, key: ObjectKey, fmt: str, payload: dict,
              meta: dict) -> Path:
        filename = _model_filename(key, fmt)
        _atomic_write(self.root / filename,
                      json.dumps(payload, indent=1) + "\n")
        entries = [e for e in self._read_index()
                   if not (e["types"] == list(key.types) and e["format"] == fmt)]
        entries.append({"types": list(key.types), "format": fmt,
                        "path": filename, "meta": meta})
        self._write_index(entries)
        return self.root / filename

    def save_hmm(self, model: UsageHmm) -> Path:
        if model.key is None:
            raise ValueError("model has no object key")
        meta = {"k": model.n_states}
        if model.meta is not None:
            meta.update({"loglik": model.meta.loglik,
                         "iters": model.meta.iters, "seed": model.meta.seed})
        return self._save(model.key, FORMAT_HMM, model.to_json_dict(), meta)

    def save_ngram(self, model: NgramModel) -> Path:
        if model.key is None:
            raise ValueError("model has no object key")
        meta = {"n": model.n, "delta": model.delta}
        return self._save(model.key, FORMAT_NGRAM, model.to_json_dict(), meta)

    def _find(self, key: ObjectKey, fmt: str) -> dict:
        for entry in self._read_index():
            if entry["types"] == list(key.types) and entry["format"] == fmt:
                return entry
        raise UnknownModelError(f"no {fmt} model for key {key.display}")

    def load_hmm(self, key: ObjectKey) -> UsageHmm:
        entry = self._find(key, FORMAT_HMM)
        data = json.loads((self.root / entry["path"]).read_text())
        return UsageHmm.from_json_dict(data)

    def load_ngram(self, key: ObjectKey) -> NgramModel:
        entry = self._find(key, FORMAT_NGRAM)
        data = json.loads((self.root / entry["path"]).read_text())
        return NgramModel.from_json_dict(data)

    def load(self, key: ObjectKey, fmt: str):
        if fmt == FORMAT_HMM:
            return self.load_hmm(key)
        if fmt == FORMAT_NGRAM:
            return self.load_ngram(key)
        raise UnknownModelError(f"unknown model format '{fmt}'")
