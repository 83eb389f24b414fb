"""PASS/FAIL lines gathered by the acceptance suite, printed at session end."""

ACCEPTANCE: list[str] = []
