import pathlib

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"


def corpus_files() -> list[pathlib.Path]:
    return sorted(CORPUS.glob("*.choo"))


# Filled in by test_acceptance.py; printed after the run so every criterion
# gets its own pass/fail line in the terminal output.
acceptance_results: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in acceptance_results:
            terminalreporter.write_line(line)
