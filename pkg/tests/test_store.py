import json
import multiprocessing

import numpy as np
import pytest

from refpred.catalog import catalog_for
from refpred.errors import CatalogMismatch, EmptyClass
from refpred.store import (
    IOFailure,
    NONE_LABEL,
    ShardWriter,
    append_instances,
    build_training_table,
    init_dataset,
    load_instances,
    observed_counts,
    read_manifest,
    write_table_csv,
)
from refpred.taxonomy import ElementKey, ElementLevel, LabeledInstance, RefactoringType

EC = RefactoringType.EXTRACT_CLASS
MC = RefactoringType.MOVE_CLASS


def instance(i, refactoring=None, level=ElementLevel.CLASS, rng=None, include_history=False):
    rng = rng or np.random.default_rng(i)
    size = len(catalog_for(level, include_history))
    method = "m(int)" if level is not ElementLevel.CLASS else None
    variable = "v" if level is ElementLevel.VARIABLE else None
    key = ElementKey("proj", f"c{i}", f"src/F{i}.java", f"app.F{i}", method, variable)
    return LabeledInstance(key, level, refactoring, rng.normal(size=size) * 10.0 ** rng.integers(-5, 6), 1000 + i)


@pytest.fixture
def dataset(tmp_path):
    init_dataset(tmp_path / "ds", "proj", 50, created=0)
    return tmp_path / "ds"


def _worker(args):
    path, worker, n = args
    items = [instance(worker * 1000 + i, EC if i % 3 == 0 else None) for i in range(n)]
    return append_instances(path, items, worker_id=f"w{worker}")


class TestAppend:
    def test_count_and_manifest_delta(self, dataset):
        before = read_manifest(dataset).count(ElementLevel.CLASS, NONE_LABEL)
        assert append_instances(dataset, [instance(i) for i in range(3)]) == 3
        assert read_manifest(dataset).count(ElementLevel.CLASS, NONE_LABEL) == before + 3

    def test_wrong_length(self, dataset):
        bad = LabeledInstance(ElementKey("p", "c", "F.java", "F"), ElementLevel.CLASS, None, [1.0, 2.0])
        with pytest.raises(CatalogMismatch):
            append_instances(dataset, [bad])
        assert read_manifest(dataset).counts == {}

    def test_round_trip_bit_exact(self, dataset):
        items = [instance(i, EC if i % 2 else None) for i in range(10)]
        items += [instance(100 + i, RefactoringType.EXTRACT_METHOD, ElementLevel.METHOD) for i in range(3)]
        items += [instance(200 + i, RefactoringType.RENAME_VARIABLE, ElementLevel.VARIABLE) for i in range(2)]
        append_instances(dataset, items)
        loaded = (load_instances(dataset, ElementLevel.CLASS, EC.name)
                  + load_instances(dataset, ElementLevel.CLASS, NONE_LABEL)
                  + load_instances(dataset, ElementLevel.METHOD, "EXTRACT_METHOD")
                  + load_instances(dataset, ElementLevel.VARIABLE, "RENAME_VARIABLE"))
        expected = [i for i in items[:10] if i.refactoring] + [i for i in items[:10] if not i.refactoring] + items[10:]
        assert loaded == expected

    def test_counts_match_files(self, dataset):
        append_instances(dataset, [instance(i, EC if i < 4 else None) for i in range(9)])
        append_instances(dataset, [instance(i, MC) for i in range(20, 22)])
        assert read_manifest(dataset).counts == observed_counts(dataset) == {
            "CLASS": {"EXTRACT_CLASS": 4, "MOVE_CLASS": 2, "NONE": 5}}

    def test_two_workers(self, dataset):
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(2) as pool:
            written = pool.map(_worker, [(str(dataset), 1, 150), (str(dataset), 2, 120)])
        assert sum(written) == 270
        counts = read_manifest(dataset).counts["CLASS"]
        assert sum(counts.values()) == 270
        assert counts == observed_counts(dataset)["CLASS"]
        assert not any((dataset / ".shards").iterdir())

    def test_failed_writer_leaves_no_rows(self, dataset):
        with pytest.raises(RuntimeError):
            with ShardWriter(dataset) as w:
                w.write(instance(1))
                raise RuntimeError("boom")
        assert observed_counts(dataset) == {}

    def test_history_mismatch(self, dataset):
        with pytest.raises(CatalogMismatch):
            init_dataset(dataset, "proj", 50, include_history=True)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(IOFailure):
            read_manifest(tmp_path)

    def test_tampered_catalog(self, dataset):
        data = json.loads((dataset / "manifest.json").read_text())
        data["catalog_hashes"]["CLASS"] = "0" * 64
        (dataset / "manifest.json").write_text(json.dumps(data))
        with pytest.raises(CatalogMismatch):
            append_instances(dataset, [instance(1)])


class TestTrainingTable:
    def test_five_and_five(self, dataset):
        append_instances(dataset, [instance(i, EC if i < 5 else None) for i in range(10)])
        table = build_training_table(dataset, EC)
        assert table.X.shape == (10, 46)
        assert (table.positives, table.negatives) == (5, 5)
        assert table.y.tolist() == [1] * 5 + [0] * 5

    def test_no_negatives(self, dataset):
        append_instances(dataset, [instance(i, EC) for i in range(3)])
        with pytest.raises(EmptyClass) as info:
            build_training_table(dataset, EC)
        assert info.value.side == "negative"

    def test_no_positives(self, dataset):
        append_instances(dataset, [instance(i) for i in range(3)])
        with pytest.raises(EmptyClass) as info:
            build_training_table(dataset, EC)
        assert info.value.side == "positive"

    def test_shared_negative_pool(self, dataset):
        append_instances(dataset, [instance(i, [EC, MC, None, None][i % 4]) for i in range(12)])
        a, b = build_training_table(dataset, EC), build_training_table(dataset, MC)
        assert np.array_equal(a.X[a.y == 0], b.X[b.y == 0])
        assert a.keys[a.positives:] == b.keys[b.positives:]

    def test_deterministic_order(self, dataset):
        append_instances(dataset, [instance(i, EC if i % 2 else None) for i in range(8)])
        a, b = build_training_table(dataset, EC), build_training_table(dataset, EC)
        assert np.array_equal(a.X, b.X) and a.keys == b.keys

    def test_export(self, dataset, tmp_path):
        append_instances(dataset, [instance(i, EC if i % 2 else None) for i in range(4)])
        table = build_training_table(dataset, EC)
        out = tmp_path / "t.csv"
        write_table_csv(table, out)
        lines = out.read_text().splitlines()
        assert len(lines) == 5
        assert lines[0].split(",")[46] == "label"
        assert [ln.split(",")[46] for ln in lines[1:]] == ["true", "true", "false", "false"]
