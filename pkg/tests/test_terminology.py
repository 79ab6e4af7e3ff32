from __future__ import annotations

import re
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from datasus_openehr.errors import DuplicateCodeError, FormatError, UnknownSystemError
from datasus_openehr.terminology import (
    BUILTIN_SYSTEMS,
    Terminology,
    load_code_lists,
    parse_code_list,
    shipped_codes_dir,
    validate_code,
)

GENDER_CODES = {"F", "M", "0"}


def test_gender_female():
    r = validate_code("SUS-GENDER", "F")
    assert r.valid and r.display == "feminino" and r.reason is None


def test_gender_unknown_token():
    r = validate_code("SUS-GENDER", "X")
    assert not r.valid and r.reason == "not in enumeration"


@given(st.text(min_size=1, max_size=3))
def test_gender_accepts_exactly_three_codes(token):
    assert validate_code("SUS-GENDER", token).valid == (token in GENDER_CODES)


@pytest.mark.parametrize("code", ["I21.0", "I21", "I210", "C50.9", "Z00.00"])
def test_icd10_shape(code):
    assert validate_code("ICD10", code).valid


@pytest.mark.parametrize("code", ["i21", "I2", "21.0", "I21.", "I21.000", "II21"])
def test_icd10_rejects(code):
    assert not validate_code("ICD10", code).valid


def test_cnes_eight_digits():
    r = validate_code("CNES", "12345678")
    assert not r.valid and r.reason == "expected 7 digits"
    assert validate_code("CNES", "1234567").valid


# Independent oracle: digit strings of a fixed length.
@given(st.text(alphabet="0123456789a ", min_size=0, max_size=12))
def test_numeric_patterns_match_length_oracle(code):
    assert validate_code("CNES", code).valid == (len(code) == 7 and code.isdigit())
    assert validate_code("SIGTAP", code).valid == (len(code) == 10 and code.isdigit())


def test_unknown_system():
    with pytest.raises(UnknownSystemError):
        validate_code("NOPE", "1")


def test_shipped_gender_file_has_three_entries():
    systems = load_code_lists(shipped_codes_dir())
    assert set(systems["SUS-GENDER"].entries) == GENDER_CODES


def test_display_matches_file_bytes():
    # Reverse lookup returns labels exactly as written in each flat file.
    t = Terminology.load()
    for path in Path(shipped_codes_dir()).glob("*.tsv"):
        sid = path.stem.upper()
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line or line.startswith("#"):
                continue
            code, label = line.split("\t")
            r = t.validate_code(sid, code)
            assert r.valid and r.display == label


def test_duplicate_code():
    with pytest.raises(DuplicateCodeError) as info:
        parse_code_list("F\tfeminino\nM\tmasculino\nF\tfemale\n", "SUS-GENDER", source="g.tsv")
    assert info.value.line == 3


@pytest.mark.parametrize("text", ["F feminino\n", "F\t\n", "F\ta\tb\n", "# nothing\n"])
def test_format_errors(text):
    with pytest.raises(FormatError):
        parse_code_list(text, "X")


def test_empty_directory(tmp_path):
    assert load_code_lists(tmp_path) == {}
    t = Terminology.load(tmp_path)
    assert set(t.systems) == set(BUILTIN_SYSTEMS)


def test_replaceable_lists(tmp_path):
    (tmp_path / "sus-race.tsv").write_text("A\talpha\n", encoding="utf-8")
    t = Terminology.load(tmp_path)
    assert t.validate_code("SUS-RACE", "A").display == "alpha"
    assert "SUS-GENDER" not in t


def test_shipped_system_ids_follow_convention():
    for sid in load_code_lists(shipped_codes_dir()):
        assert re.fullmatch(r"SUS-[A-Z-]+", sid)
