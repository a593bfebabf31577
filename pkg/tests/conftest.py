ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE[number] = (title, bool(ok), detail)
    print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{n:2d} {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())
