"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES = []


def record(number, passed, detail, status=None):
    status = status or ("PASS" if passed else "FAIL")
    line = f"criterion {number:>2}: {status}  {detail}"
    LINES.append(line)
    print(line)
    return passed
