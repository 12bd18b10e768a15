import pytest

HEADER = "iter,error,sigma_r_core,leakage_x,leakage_y,weak_opt,eta_used,elapsed_ns"

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    def record(number, ok, detail):
        _ACCEPTANCE[number] = (bool(ok), detail)
        assert ok, f"criterion {number} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria (figures)")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")


@pytest.fixture
def make_trace(tmp_path):
    """Write a minimal schema-conformant trace file and return its path."""

    def write(name, errors, header=HEADER, comments=True):
        lines = []
        if comments:
            lines += ["# config: m=4 r=2 seed=0", "# termination: converged"]
        lines.append(header)
        for t, e in enumerate(errors):
            lines.append(f"{t},{e!r},1.0,1e-12,nan,0.5,0.5,{t * 100}")
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return path

    return write
