"""CPLEX-style LP text writer and reader.

Coefficients whose value has a finite decimal expansion are written exactly.
Others are written as a 17-digit approximation followed later by a comment
``\\ exact <where> ... p/q`` that the reader uses to restore the rational, so
write -> read is lossless.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ContractViolation
from .lp import LinearProgram

_ALLOWED = re.compile(r"[^A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~]")
_LINE = 200


def sanitize(name: str) -> str:
    s = _ALLOWED.sub("_", name)
    if not s or s[0].isdigit() or s[0] == ".":
        s = "_" + s
    if re.fullmatch(r"[eE][0-9+\-].*", s):
        s = "_" + s
    return s


def _terminating(p: Fraction) -> bool:
    d = p.denominator
    for f in (2, 5):
        while d % f == 0:
            d //= f
    return d == 1


def decimal_str(p: Fraction) -> str:
    """Exact decimal text when the expansion terminates, else a 17-digit approximation."""
    if p.denominator == 1:
        return str(p.numerator)
    if not _terminating(p):
        return repr(float(p))
    sign = "-" if p < 0 else ""
    p = abs(p)
    digits = 0
    while (p * 10 ** digits).denominator != 1:
        digits += 1
    whole = int(p * 10 ** digits)
    s = str(whole).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def _frac_text(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


class _Writer:
    def __init__(self):
        self.lines = []
        self.exact = []

    def coef(self, value: Fraction, where: str) -> str:
        if not _terminating(value):
            self.exact.append(f"\\ exact {where} {_frac_text(value)}")
        return decimal_str(value)

    def expr(self, head: str, coeffs, names, where: str) -> None:
        parts = []
        for j, a in coeffs:
            txt = self.coef(abs(a), f"{where} {names[j]}")
            sign = "-" if a < 0 else "+"
            parts.append(f"{sign} {txt} {names[j]}" if txt != "1" else f"{sign} {names[j]}")
        if not parts:
            parts = ["+ 0 " + names[0]] if names else ["0"]
        line = head
        for p in parts:
            if len(line) + len(p) + 1 > _LINE:
                self.lines.append(line)
                line = "   "
            line += " " + p
        self.lines.append(line)


def export_lp(lp: LinearProgram, sink=None) -> str:
    names = [sanitize(n) for n in lp.names]
    if len(set(names)) != len(names):
        raise ContractViolation("variable names collide after sanitization")
    rnames = [sanitize(r.name) for r in lp.rows]
    if len(set(rnames)) != len(rnames) or "obj" in rnames:
        raise ContractViolation("row names collide after sanitization")
    w = _Writer()
    w.lines.append("\\ exact rationals without a finite decimal form are listed at the end")
    w.lines.append("Maximize" if lp.sense == "max" else "Minimize")
    w.expr(" obj:", sorted(lp.objective.items()), names, "obj")
    w.lines.append("Subject To")
    sense_txt = {"<=": "<=", ">=": ">=", "=": "="}
    for r, rn in zip(lp.rows, rnames):
        w.expr(f" {rn}:", sorted(r.coeffs.items()), names, f"row {rn}")
        w.lines[-1] += f" {sense_txt[r.sense]} {w.coef(r.rhs, f'rhs {rn}')}"
    bounds = []
    for j, (lo, hi) in enumerate(lp.bounds):
        nm = names[j]
        if lo == 0 and hi is None:
            continue
        if lo is None and hi is None:
            bounds.append(f" {nm} free")
        elif lo is not None and hi is not None and lo == hi:
            bounds.append(f" {nm} = {w.coef(lo, f'fix {nm}')}")
        else:
            lo_t = "-inf" if lo is None else w.coef(lo, f"lo {nm}")
            if hi is None:
                bounds.append(f" {nm} >= {lo_t}")
            else:
                bounds.append(f" {lo_t} <= {nm} <= {w.coef(hi, f'hi {nm}')}")
    if bounds:
        w.lines.append("Bounds")
        w.lines.extend(bounds)
    w.lines.append("End")
    w.lines.extend(w.exact)
    for i in range(0, len(names), 20):
        w.lines.append("\\ columns " + " ".join(names[i:i + 20]))
    text = "\n".join(w.lines) + "\n"
    if sink is not None:
        if hasattr(sink, "write"):
            sink.write(text)
        else:
            with open(sink, "w") as fh:
                fh.write(text)
    return text


# -- reader ---------------------------------------------------------------

_SECTIONS = {
    "maximize": "obj", "maximum": "obj", "max": "obj",
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds", "end": "end",
}
_NUM = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def _parse_terms(tokens):
    """[sign] [coef] name ... -> list of (coef, name)."""
    out = []
    i, sign = 0, 1
    coef = None
    while i < len(tokens):
        tok = tokens[i]
        if tok in "+-":
            sign = -1 if tok == "-" else 1
        elif _NUM.match(tok):
            coef = Fraction(tok)
        else:
            out.append((sign * (Fraction(1) if coef is None else coef), tok))
            sign, coef = 1, None
        i += 1
    return out


def _tokens(text: str):
    return re.findall(r"<=|>=|=<|=>|[<>=]|[+-](?![0-9.])|[+-]?[0-9.][0-9.eE+\-]*|[^\s+\-<>=:]+:?|:", text)


def parse_lp(text: str) -> LinearProgram:
    """Read CPLEX LP text; malformed input raises ContractViolation."""
    try:
        return _parse_lp(text)
    except (ValueError, StopIteration, IndexError, ZeroDivisionError) as exc:
        if isinstance(exc, ContractViolation):
            raise
        raise ContractViolation(f"malformed LP text: {exc}") from exc


def _parse_lp(text: str) -> LinearProgram:
    exact = {}
    order = []
    body_lines = []
    for raw in text.splitlines():
        s = raw.strip()
        if s.startswith("\\"):
            m = re.match(r"\\ exact (.+) (-?\d+/\d+)$", s)
            if m:
                exact[m.group(1)] = Fraction(m.group(2))
            elif s.startswith("\\ columns "):
                order.extend(s.split()[2:])
            continue
        if "\\" in raw:
            raw = raw[: raw.index("\\")]
        body_lines.append(raw)

    sections = {"obj": [], "st": [], "bounds": []}
    sense = "max"
    cur = None
    for raw in body_lines:
        key = raw.strip().lower()
        if key in _SECTIONS:
            cur = _SECTIONS[key]
            if cur == "obj":
                sense = "max" if key.startswith("max") else "min"
            if cur == "end":
                break
            continue
        if cur is None:
            if raw.strip():
                raise ContractViolation(f"text before first section: {raw!r}")
            continue
        sections[cur].append(raw)

    lp = LinearProgram(sense=sense)

    def var(name):
        if name not in lp.index:
            lp.add_var(name)
        return lp.index[name]

    def fix(where, value):
        return exact.get(where, value)

    # objective
    toks = _tokens(" ".join(sections["obj"]))
    if toks and toks[0].endswith(":"):
        toks = toks[1:]
    objective = []
    for c, name in _parse_terms(toks):
        mag = fix(f"obj {name}", abs(c))
        objective.append((name, mag if c >= 0 else -mag))

    # rows: split on labels
    rows = []
    cur_row = None
    for tok in _tokens(" ".join(sections["st"])):
        if tok.endswith(":") and len(tok) > 1:
            cur_row = [tok[:-1], []]
            rows.append(cur_row)
        else:
            if cur_row is None:
                raise ContractViolation("unnamed constraint")
            cur_row[1].append(tok)
    parsed_rows = []
    for rname, toks in rows:
        k = next(i for i, t in enumerate(toks) if t in ("<=", ">=", "=", "<", ">", "=<", "=>"))
        sns = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(toks[k], toks[k])
        rhs = fix(f"rhs {rname}", Fraction(toks[k + 1]))
        terms = []
        for c, name in _parse_terms(toks[:k]):
            mag = fix(f"row {rname} {name}", abs(c))
            terms.append((name, mag if c >= 0 else -mag))
        parsed_rows.append((rname, terms, sns, rhs))

    for name in order:
        var(name)
    for name, _ in objective:
        var(name)
    for _, terms, _, _ in parsed_rows:
        for name, _ in terms:
            var(name)
    for name, c in objective:
        if c:
            lp.add_obj(lp.index[name], c)
    for rname, terms, sns, rhs in parsed_rows:
        coeffs = {}
        for name, c in terms:
            coeffs[lp.index[name]] = coeffs.get(lp.index[name], 0) + c
        lp.add_row(rname, coeffs, sns, rhs)

    def num(tok, where):
        if tok.lower() in ("-inf", "-infinity"):
            return None
        if tok.lower() in ("inf", "+inf", "infinity", "+infinity"):
            return None
        return fix(where, Fraction(tok))

    for raw in sections["bounds"]:
        toks = raw.split()
        if not toks:
            continue
        if len(toks) == 2 and toks[1].lower() == "free":
            lp.bounds[var(toks[0])] = (None, None)
        elif len(toks) == 3 and toks[1] == "=":
            v = num(toks[2], f"fix {toks[0]}")
            lp.bounds[var(toks[0])] = (v, v)
        elif len(toks) == 3 and toks[1] == ">=":
            j = var(toks[0])
            lp.bounds[j] = (num(toks[2], f"lo {toks[0]}"), lp.bounds[j][1])
        elif len(toks) == 3 and toks[1] == "<=":
            j = var(toks[0])
            lp.bounds[j] = (lp.bounds[j][0], num(toks[2], f"hi {toks[0]}"))
        elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
            nm = toks[2]
            lp.bounds[var(nm)] = (num(toks[0], f"lo {nm}"), num(toks[4], f"hi {nm}"))
        else:
            raise ContractViolation(f"cannot parse bound line {raw!r}")
    return lp
