"""Read-only HTTP API over an index store, plus the browser UI assets.

Every response carries the store version header; an update swaps the whole
store reference at once, so concurrent readers always see exactly one
version. Error bodies are ``{"code": ..., "message": ...}``.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .index import IndexStore, load

VERSION_HEADER = "x-store-version"


class StoreHolder:
    """Mutable reference to the currently served store."""

    def __init__(self, store: IndexStore):
        self._store = store
        self._lock = threading.Lock()

    @property
    def store(self) -> IndexStore:
        return self._store

    def swap(self, new_store: IndexStore) -> None:
        # single reference assignment: readers see the old or the new store,
        # never a mixture
        with self._lock:
            self._store = new_store

    def reload(self, directory) -> None:
        self.swap(load(directory))


def _error(status: int, code: str, message: str,
           version: str) -> JSONResponse:
    return JSONResponse({"code": code, "message": message},
                        status_code=status,
                        headers={VERSION_HEADER: version})


def _paginate(items: list, offset: int, limit: int) -> list:
    offset = max(offset, 0)
    limit = max(limit, 0)
    return items[offset:offset + limit]


def create_app(holder: StoreHolder, ui_dir=None) -> FastAPI:
    app = FastAPI(title="trendweave index", version=str(holder.store.version))

    @app.middleware("http")
    async def stamp_version(request: Request, call_next):
        store = holder.store
        response = await call_next(request)
        response.headers.setdefault(VERSION_HEADER, store.version)
        return response

    @app.get("/health")
    def health():
        store = holder.store
        return {"status": "ok", "store_version": store.version,
                "api_version": store.api_version}

    @app.get("/slices")
    def slices():
        return holder.store.slices

    @app.get("/topics")
    def topics():
        store = holder.store
        return [{
            "id": t["id"],
            "overall_proportion": t["overall_proportion"],
            "slice_proportions": t["slice_proportions"],
            "top_words": t["words_overall"][:10],
        } for t in store.topics]

    def _topic_or_none(store: IndexStore, k: int):
        if 0 <= k < len(store.topics):
            return store.topics[k]
        return None

    @app.get("/topics/{k}")
    def topic_detail(k: int):
        store = holder.store
        topic = _topic_or_none(store, k)
        if topic is None:
            return _error(404, "topic_not_found", f"no topic {k}",
                          store.version)
        return {
            "id": topic["id"],
            "overall_proportion": topic["overall_proportion"],
            "slice_proportions": topic["slice_proportions"],
            "top_words": topic["words_overall"][:10],
            "sentiment": store.sentiment["topics_overall"].get(str(k)),
        }

    def _slice_ok(store: IndexStore, t: int) -> bool:
        return 0 <= t < len(store.slices["slices"])

    @app.get("/topics/{k}/words")
    def topic_words(k: int, slice: int | None = None, offset: int = 0,
                    limit: int = 50):
        store = holder.store
        topic = _topic_or_none(store, k)
        if topic is None:
            return _error(404, "topic_not_found", f"no topic {k}",
                          store.version)
        if slice is None:
            words = topic["words_overall"]
            triples = store.sentiment["terms_overall"]
        else:
            if not _slice_ok(store, slice):
                return _error(404, "slice_not_found", f"no slice {slice}",
                              store.version)
            words = topic["words_by_slice"][slice]
            triples = store.sentiment["terms_by_slice"][slice]
        page = _paginate(words, offset, limit)
        return [{**w, "sentiment": triples.get(w["term"])} for w in page]

    @app.get("/topics/{k}/docs")
    def topic_docs(k: int, slice: int | None = None, offset: int = 0,
                   limit: int = 20):
        store = holder.store
        topic = _topic_or_none(store, k)
        if topic is None:
            return _error(404, "topic_not_found", f"no topic {k}",
                          store.version)
        if slice is None:
            docs = topic["docs_overall"]
        else:
            if not _slice_ok(store, slice):
                return _error(404, "slice_not_found", f"no slice {slice}",
                              store.version)
            docs = topic["docs_by_slice"][slice]
        out = []
        for entry in _paginate(docs, offset, limit):
            opinion = store.opinions[entry["id"]]
            out.append({"id": entry["id"], "membership": entry["membership"],
                        "title": opinion["title"],
                        "date": opinion["date"],
                        "n_tokens": opinion["n_tokens"]})
        return out

    @app.get("/topics/{k}/sentiment")
    def topic_sentiment(k: int):
        store = holder.store
        if _topic_or_none(store, k) is None:
            return _error(404, "topic_not_found", f"no topic {k}",
                          store.version)
        return {
            "overall": store.sentiment["topics_overall"].get(str(k)),
            "slices": [row.get(str(k))
                       for row in store.sentiment["topics_by_slice"]],
        }

    @app.get("/docs/{doc_id}")
    def doc_detail(doc_id: str):
        store = holder.store
        opinion = store.opinions.get(doc_id)
        if opinion is None:
            return _error(404, "doc_not_found", f"no document {doc_id!r}",
                          store.version)
        return {"id": doc_id, **opinion}

    @app.get("/docs/{doc_id}/sentiment")
    def doc_sentiment(doc_id: str):
        store = holder.store
        if doc_id not in store.opinions:
            return _error(404, "doc_not_found", f"no document {doc_id!r}",
                          store.version)
        triple = store.sentiment["documents"].get(doc_id)
        return {"id": doc_id, "sentiment": triple}

    @app.get("/docs/{doc_id}/sentences")
    def doc_sentences(doc_id: str):
        store = holder.store
        if doc_id not in store.opinions:
            return _error(404, "doc_not_found", f"no document {doc_id!r}",
                          store.version)
        return [s for s in store.sentiment["sentences"]
                if s["doc_id"] == doc_id]

    @app.get("/words/{term}/topics")
    def word_topics(term: str):
        store = holder.store
        entry = store.words.get(term)
        if entry is None:
            return _error(404, "term_not_found", f"no term {term!r}",
                          store.version)
        return {"term": term, "id": entry["id"],
                "frequency": entry["frequency"], "topics": entry["topics"]}

    @app.get("/words/{term}/sentiment")
    def word_sentiment(term: str):
        store = holder.store
        if term not in store.words:
            return _error(404, "term_not_found", f"no term {term!r}",
                          store.version)
        return {
            "term": term,
            "overall": store.sentiment["terms_overall"].get(term),
            "slices": [row.get(term)
                       for row in store.sentiment["terms_by_slice"]],
        }

    @app.get("/embedding")
    def embedding(slice: int | None = None):
        store = holder.store
        if slice is None:
            return store.embedding
        if not _slice_ok(store, slice):
            return _error(404, "slice_not_found", f"no slice {slice}",
                          store.version)
        return store.embedding[slice]

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")

    return app


def serve(store_dir, bind: str = "127.0.0.1:8080", ui_dir=None) -> None:
    """Load a store and serve it until interrupted."""
    import uvicorn

    holder = StoreHolder(load(store_dir))
    app = create_app(holder, ui_dir=ui_dir)
    host, _, port = bind.partition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080),
                    log_level="warning")
    except OSError as exc:
        raise OSError(f"cannot bind {bind}: {exc}") from exc
