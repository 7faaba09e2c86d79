import json

import pytest

from refpred import codemetrics, histmetrics
from refpred.catalog import (
    CLASS_SOURCE_FEATURES,
    METHOD_SOURCE_FEATURES,
    OWNERSHIP_FEATURES,
    PROCESS_FEATURES,
    FeatureCatalog,
    all_catalogs,
    catalog_by_hash,
    catalog_for,
)
from refpred.errors import CatalogMismatch
from refpred.taxonomy import (
    ElementKey,
    ElementLevel,
    LabeledInstance,
    RefactoringType,
    canonical_taxonomy,
    refactorings_at,
)


class TestTaxonomy:
    def test_twenty_entries(self):
        assert len(canonical_taxonomy()) == 20

    def test_level_partition(self):
        counts = {lvl: len(refactorings_at(lvl)) for lvl in ElementLevel}
        assert counts == {ElementLevel.CLASS: 7, ElementLevel.METHOD: 7, ElementLevel.VARIABLE: 6}
        names = [r.display for r in canonical_taxonomy()]
        assert len(set(names)) == 20

    @pytest.mark.parametrize("name,level", [
        ("Extract Class", ElementLevel.CLASS),
        ("Extract and Move Method", ElementLevel.METHOD),
        ("Move and Rename Class", ElementLevel.CLASS),
        ("Inline Method", ElementLevel.METHOD),
        ("Rename Method", ElementLevel.METHOD),
        ("Move Class", ElementLevel.CLASS),
        ("Extract Method", ElementLevel.METHOD),
    ])
    def test_attested_names(self, name, level):
        assert RefactoringType.from_name(name).level is level

    def test_from_member_name(self):
        assert RefactoringType.from_name("EXTRACT_CLASS") is RefactoringType.EXTRACT_CLASS
        with pytest.raises(KeyError):
            RefactoringType.from_name("Extract Everything")

    def test_level_parse(self):
        assert ElementLevel.parse(" method ") is ElementLevel.METHOD
        with pytest.raises(ValueError):
            ElementLevel.parse("field")


class TestElementKey:
    def test_level_from_fields(self):
        assert ElementKey("p", "c", "F.java", "a.F").level is ElementLevel.CLASS
        assert ElementKey("p", "c", "F.java", "a.F", "m()").level is ElementLevel.METHOD
        assert ElementKey("p", "c", "F.java", "a.F", "m()", "x").level is ElementLevel.VARIABLE

    def test_check_rejects_mismatch(self):
        with pytest.raises(ValueError):
            ElementKey("p", "c", "F.java", "a.F").check(ElementLevel.METHOD)
        with pytest.raises(ValueError):
            ElementKey("p", "c", "F.java", "a.F", "m()").check(ElementLevel.VARIABLE)

    def test_class_sorts_before_its_methods(self):
        cls = ElementKey("p", "c", "F.java", "a.F")
        method = ElementKey("p", "c", "F.java", "a.F", "m()")
        assert cls.sort_key() < method.sort_key()

    def test_instance_level_consistency(self):
        key = ElementKey("p", "c", "F.java", "a.F")
        with pytest.raises(ValueError):
            LabeledInstance(key, ElementLevel.CLASS, RefactoringType.EXTRACT_METHOD)
        inst = LabeledInstance(key, ElementLevel.CLASS, None, [1, 2])
        assert inst.features == (1.0, 2.0) and not inst.is_refactoring


class TestCatalog:
    def test_sizes(self):
        assert len(CLASS_SOURCE_FEATURES) == 37
        assert len(catalog_for(ElementLevel.CLASS)) == 46
        assert len(catalog_for(ElementLevel.METHOD)) == 57
        assert len(catalog_for(ElementLevel.METHOD, True)) == 66
        assert len(catalog_for(ElementLevel.VARIABLE)) == 58
        assert catalog_for(ElementLevel.VARIABLE).names[-1] == "variable_usage_count"

    def test_pure(self):
        a, b = catalog_for(ElementLevel.METHOD), catalog_for("METHOD", False)
        assert a.names == b.names and a.catalog_hash == b.catalog_hash

    def test_hashes_distinct(self):
        hashes = [c.catalog_hash for c in all_catalogs()]
        assert len(set(hashes)) == len(hashes)
        for c in all_catalogs():
            assert catalog_by_hash(c.catalog_hash) == c
        with pytest.raises(CatalogMismatch):
            catalog_by_hash("0" * 64)

    def test_named_metrics_present(self):
        names = set(catalog_for(ElementLevel.CLASS).names)
        for required in ("class_cbo", "class_wmc", "class_rfc", "class_lcom", "class_default_fields",
                         "class_synchronized_fields", "class_default_methods", "class_loop_qty",
                         "class_comparisons_qty", "class_math_operations_qty", "class_parenthesized_exps_qty"):
            assert required in names

    def test_every_extractor_name_in_exactly_one_catalog_slot(self):
        produced = set(codemetrics.ClassMetrics.__dataclass_fields__)
        produced = {f"class_{n}" for n in produced}
        produced |= {f"method_{n}" for n in codemetrics.MethodMetrics.__dataclass_fields__}
        produced |= set(PROCESS_FEATURES) | set(OWNERSHIP_FEATURES)
        assert produced == set(CLASS_SOURCE_FEATURES) | set(METHOD_SOURCE_FEATURES) | set(PROCESS_FEATURES) | set(
            OWNERSHIP_FEATURES)
        for c in all_catalogs():
            assert len(c.names) == len(set(c.names))
        assert len(histmetrics.ProcessStats().vector()) == len(PROCESS_FEATURES)

    def test_manifest_round_trip(self):
        cat = catalog_for(ElementLevel.VARIABLE, True)
        back = FeatureCatalog.from_manifest(json.loads(cat.to_json()))
        assert back == cat

    def test_tampered_manifest(self):
        data = catalog_for(ElementLevel.CLASS).to_manifest()
        data["entries"] = data["entries"][::-1]
        with pytest.raises(CatalogMismatch):
            FeatureCatalog.from_manifest(data)
