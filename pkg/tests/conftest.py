import pytest

HEADER = "token_id\tclause_id\tsurface\trole\tagent\tpatient"


@pytest.fixture
def overt_tsv() -> str:
    """One subject token (ch1), one verb whose agent references it, one object."""
    rows = [
        HEADER,
        "1\t1\t王子\tS\tch1\t-",
        "2\t1\t跑\tV\t1\t-",
        "3\t1\t门\tO\t-\t-",
    ]
    return "\n".join(rows) + "\n"


@pytest.fixture
def dropped_tsv() -> str:
    """Same discourse but the subject is dropped and resolved on the verb row."""
    rows = [
        HEADER,
        "1\t1\t就\t-\t-\t-",
        "2\t1\t跑\tV\tch1!\t-",
        "3\t1\t门\tO\t-\t-",
    ]
    return "\n".join(rows) + "\n"
