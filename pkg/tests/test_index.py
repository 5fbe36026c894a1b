"""Index store: build integrity, truncation rules, persistence."""

import copy

import pytest

from trendweave import index


class TestBuild:
    def test_every_document_indexed(self, mini_pipeline):
        store = mini_pipeline["store"]
        assert len(store.opinions) == mini_pipeline["sliced"].n_docs
        for topic in store.topics:
            for entry in topic["docs_overall"]:
                assert entry["id"] in store.opinions

    def test_doc_lists_truncated_to_top_20_sorted(self, mini_pipeline):
        store = mini_pipeline["store"]
        for topic in store.topics:
            assert len(topic["docs_overall"]) <= index.TOP_DOCS
            members = [d["membership"] for d in topic["docs_overall"]]
            assert members == sorted(members, reverse=True)
            for slice_docs in topic["docs_by_slice"]:
                assert len(slice_docs) <= index.TOP_DOCS

    def test_word_lists_truncated_to_top_50(self, mini_pipeline):
        store = mini_pipeline["store"]
        for topic in store.topics:
            assert len(topic["words_overall"]) <= index.TOP_WORDS
            for words in topic["words_by_slice"]:
                assert len(words) <= index.TOP_WORDS

    def test_term_frequencies_match_corpus(self, mini_pipeline):
        store = mini_pipeline["store"]
        vocab = mini_pipeline["vocab"]
        for term, entry in store.words.items():
            assert entry["frequency"] == int(
                vocab.frequencies[vocab.id_of(term)])

    def test_missing_raw_record_is_an_error(self, mini_pipeline):
        with pytest.raises(index.IndexError_, match="no raw record"):
            index.build(mini_pipeline["model"], mini_pipeline["sliced"],
                        mini_pipeline["records"][:-5],
                        mini_pipeline["analysis"],
                        mini_pipeline["embeddings"])

    def test_validate_names_dangling_id(self, mini_pipeline):
        store = copy.deepcopy(mini_pipeline["store"])
        store.topics[0]["docs_overall"][0]["id"] = "ghost-doc"
        with pytest.raises(index.IndexError_, match="ghost-doc"):
            index.validate(store)


class TestPersistence:
    def test_round_trip(self, mini_pipeline, tmp_path):
        store = mini_pipeline["store"]
        index.persist(store, tmp_path)
        loaded = index.load(tmp_path)
        assert loaded.version == store.version
        assert loaded.segments() == store.segments()

    def test_tampered_segment_detected(self, mini_pipeline, tmp_path):
        index.persist(mini_pipeline["store"], tmp_path)
        target = tmp_path / "words.json"
        target.write_text(target.read_text().replace("frequency",
                                                     "frequenzy"))
        with pytest.raises(index.IndexError_, match="version stamp"):
            index.load(tmp_path)

    def test_api_version_mismatch(self, mini_pipeline, tmp_path):
        import json
        index.persist(mini_pipeline["store"], tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        manifest["api_version"] = 42
        (tmp_path / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(index.IndexError_, match="42"):
            index.load(tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(index.IndexError_, match="manifest"):
            index.load(tmp_path)

    def test_identical_builds_share_a_version_stamp(self, mini_pipeline):
        a = index.build(mini_pipeline["model"], mini_pipeline["sliced"],
                        mini_pipeline["records"], mini_pipeline["analysis"],
                        mini_pipeline["embeddings"])
        assert a.version == mini_pipeline["store"].version
