"""File-per-version persistence.

Layout under one base directory:

    taxonomies/<id>/v<N>.json     canonical serialization, one file per version
    sessions/<id>.json            dialogue export + engine internals
    templates/<id>.json           writing template (original + revised text)
    annotations/<template>/<coder>.json
    reports/<name>.json

Every write goes through temp-file-plus-rename, so a crash at any point
leaves either the old state or the new state, never a torn file. Writers for
one taxonomy id are serialized by a per-id lock; version numbers must arrive
consecutively.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
import threading
from pathlib import Path

from .dialogue import DialogueSession, restore_session, session_internals, session_to_dict
from .errors import ActiveSessionExists, InvalidInput, IoError, NotFound, VersionConflict
from .icr import AnnotationRecord, record_from_dict, record_to_dict
from .serialization import deserialize, serialize
from .taxonomy import Taxonomy, now_rfc3339

_VERSION_FILE = re.compile(r"^v(\d+)\.json$")
_SAFE_ID = re.compile(r"^[A-Za-z0-9._-]+$")


def _check_id(kind: str, value: str) -> str:
    # ids become path segments; keep them out of traversal territory
    if not value or not _SAFE_ID.match(value) or value.startswith("."):
        raise InvalidInput(f"unusable {kind} id: {value!r}")
    return value


class WorkbenchStore:
    def __init__(self, base_dir, clock=now_rfc3339):
        self.base = Path(base_dir)
        self.clock = clock
        self._master = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        # test seam: called after the temp file is written, before the rename
        self.before_rename_hook = None
        for sub in ("taxonomies", "sessions", "templates", "annotations", "reports"):
            (self.base / sub).mkdir(parents=True, exist_ok=True)

    def _lock_for(self, key: str) -> threading.Lock:
        with self._master:
            return self._locks.setdefault(key, threading.Lock())

    def _write_atomic(self, path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        tmp = Path(tmp_name)
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
                handle.flush()
                os.fsync(handle.fileno())
            if self.before_rename_hook is not None:
                self.before_rename_hook()
            os.replace(tmp, path)
        except OSError as exc:
            raise IoError(f"writing {path}: {exc}") from exc
        finally:
            tmp.unlink(missing_ok=True)

    # ------------------------------------------------------------------
    # Taxonomies
    # ------------------------------------------------------------------

    def _tax_dir(self, taxonomy_id: str) -> Path:
        return self.base / "taxonomies" / _check_id("taxonomy", taxonomy_id)

    def versions(self, taxonomy_id: str) -> list[int]:
        directory = self._tax_dir(taxonomy_id)
        if not directory.is_dir():
            return []
        found = []
        for entry in directory.iterdir():
            match = _VERSION_FILE.match(entry.name)
            if match:
                found.append(int(match.group(1)))
        return sorted(found)

    def latest_version(self, taxonomy_id: str) -> int | None:
        versions = self.versions(taxonomy_id)
        return versions[-1] if versions else None

    def put_taxonomy_version(self, tax: Taxonomy) -> int:
        data = serialize(tax)   # validates as a side effect
        with self._lock_for(f"tax:{tax.taxonomy_id}"):
            latest = self.latest_version(tax.taxonomy_id)
            expected = 1 if latest is None else latest + 1
            if tax.version != expected:
                raise VersionConflict(
                    f"{tax.taxonomy_id}: version {tax.version} submitted, "
                    f"expected {expected}")
            self._write_atomic(self._tax_dir(tax.taxonomy_id) / f"v{tax.version}.json",
                               data)
            return tax.version

    def get_taxonomy_bytes(self, taxonomy_id: str, version: int) -> bytes:
        path = self._tax_dir(taxonomy_id) / f"v{version}.json"
        if not path.is_file():
            raise NotFound(f"{taxonomy_id} v{version} not stored")
        return path.read_bytes()

    def get_taxonomy(self, taxonomy_id: str, version: int | None = None) -> Taxonomy:
        if version is None:
            version = self.latest_version(taxonomy_id)
            if version is None:
                raise NotFound(f"no versions stored for {taxonomy_id}")
        return deserialize(self.get_taxonomy_bytes(taxonomy_id, version))

    def list_taxonomies(self) -> dict[str, list[int]]:
        root = self.base / "taxonomies"
        return {entry.name: self.versions(entry.name)
                for entry in sorted(root.iterdir()) if entry.is_dir()}

    # ------------------------------------------------------------------
    # Sessions
    # ------------------------------------------------------------------

    def _session_path(self, session_id: str) -> Path:
        return self.base / "sessions" / f"{_check_id('session', session_id)}.json"

    def save_session(self, session: DialogueSession) -> None:
        payload = {
            "export": session_to_dict(session),
            "internals": session_internals(session),
            "current_version": session.current_version,
        }
        data = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
        self._write_atomic(self._session_path(session.session_id),
                           data.encode("utf-8"))

    def load_session_payload(self, session_id: str) -> dict:
        path = self._session_path(session_id)
        if not path.is_file():
            raise NotFound(f"session {session_id} not stored")
        return json.loads(path.read_text("utf-8"))

    def load_session(self, session_id: str, clock=None,
                     on_commit=None) -> DialogueSession:
        payload = self.load_session_payload(session_id)
        current = self.get_taxonomy(payload["export"]["taxonomy_id"],
                                    payload["current_version"])
        return restore_session(payload["export"], payload["internals"], current,
                               clock=clock or self.clock, on_commit=on_commit)

    def list_sessions(self) -> list[dict]:
        root = self.base / "sessions"
        out = []
        for path in sorted(root.glob("*.json")):
            payload = json.loads(path.read_text("utf-8"))
            out.append(payload["export"])
        return out

    def find_active_session(self, taxonomy_id: str) -> str | None:
        for export in self.list_sessions():
            if export["taxonomy_id"] == taxonomy_id and export["state"] != "finalized":
                return export["session_id"]
        return None

    def ensure_no_active_session(self, taxonomy_id: str) -> None:
        active = self.find_active_session(taxonomy_id)
        if active is not None:
            raise ActiveSessionExists(
                f"session {active} is still open for {taxonomy_id}")

    # ------------------------------------------------------------------
    # Templates
    # ------------------------------------------------------------------

    def _template_path(self, template_id: str) -> Path:
        return self.base / "templates" / f"{_check_id('template', template_id)}.json"

    def put_template(self, original: str, revised: str,
                     template_id: str | None = None) -> dict:
        with self._lock_for("templates"):
            if template_id is None:
                taken = {p.stem for p in (self.base / "templates").glob("tpl-*.json")}
                n = 1
                while f"tpl-{n}" in taken:
                    n += 1
                template_id = f"tpl-{n}"
            payload = {"template_id": template_id, "original": original,
                       "revised": revised, "created_at": self.clock()}
            data = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
            self._write_atomic(self._template_path(template_id), data.encode("utf-8"))
            return payload

    def get_template(self, template_id: str) -> dict:
        path = self._template_path(template_id)
        if not path.is_file():
            raise NotFound(f"template {template_id} not stored")
        return json.loads(path.read_text("utf-8"))

    def list_templates(self) -> list[str]:
        return sorted(p.stem for p in (self.base / "templates").glob("*.json"))

    # ------------------------------------------------------------------
    # Annotations
    # ------------------------------------------------------------------

    def put_annotations(self, template_id: str, coder_id: str,
                        records: list[AnnotationRecord]) -> None:
        self.get_template(template_id)   # NotFound if absent
        _check_id("coder", coder_id)
        if not records:
            raise InvalidInput("no annotation records to store")
        for record in records:
            if record.template_id != template_id or record.coder_id != coder_id:
                raise InvalidInput(
                    f"record for {record.template_id}/{record.coder_id} does not "
                    f"belong under {template_id}/{coder_id}")
        data = json.dumps([record_to_dict(r) for r in records],
                          indent=2, ensure_ascii=False) + "\n"
        path = self.base / "annotations" / template_id / f"{coder_id}.json"
        with self._lock_for(f"ann:{template_id}"):
            self._write_atomic(path, data.encode("utf-8"))

    def get_annotations(self, template_id: str) -> list[AnnotationRecord]:
        directory = self.base / "annotations" / _check_id("template", template_id)
        if not directory.is_dir():
            return []
        records = []
        for path in sorted(directory.glob("*.json")):
            for item in json.loads(path.read_text("utf-8")):
                records.append(record_from_dict(item))
        return records

    # ------------------------------------------------------------------
    # Reports
    # ------------------------------------------------------------------

    def write_report(self, name: str, payload: dict) -> Path:
        path = self.base / "reports" / f"{_check_id('report', name)}.json"
        data = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
        self._write_atomic(path, data.encode("utf-8"))
        return path

    # ------------------------------------------------------------------
    # Integrity
    # ------------------------------------------------------------------

    def verify(self) -> list[str]:
        """Problems across the whole store; empty list means healthy."""
        problems = []
        for taxonomy_id, versions in self.list_taxonomies().items():
            if versions != list(range(1, len(versions) + 1)):
                problems.append(f"{taxonomy_id}: versions not consecutive: {versions}")
            for version in versions:
                try:
                    self.get_taxonomy(taxonomy_id, version)
                except Exception as exc:
                    problems.append(f"{taxonomy_id} v{version}: {exc}")
        return problems
