"""Text grammar for F_p[t] and (F_p[t])[y].

Accepted input looks like ``"y^3 + (t+1)*y"``, ``"t^3+2*t+1"`` or ``"y^{p+1} - y"``.
Integers are reduced mod p, ``^`` takes a nonnegative integer exponent which may
use the symbol ``p`` (``y^p``, ``y^{2p}``, ``y^{p^2+1}``), and juxtaposition such
as ``2y`` or ``3(t+1)`` means multiplication.
"""

from __future__ import annotations

import re

from .fpt_ring import FpPoly, PrimeChar

MAX_EXPONENT = 1 << 20


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}\n  {text}\n  {' ' * pos}^")


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_]\w*)|(\S))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        if m.group(1) is not None:
            toks.append(("int", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            toks.append(("name", m.group(2), m.start(2)))
        elif m.group(3) is not None:
            toks.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


# values are dicts {y-exponent: FpPoly}
def _add(a: dict, b: dict, p: int, sign: int = 1) -> dict:
    out = dict(a)
    for e, c in b.items():
        v = out.get(e, FpPoly(p)) + (c if sign > 0 else -c)
        if v.is_zero():
            out.pop(e, None)
        else:
            out[e] = v
    return out


def _mul(a: dict, b: dict, p: int) -> dict:
    out: dict = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            v = out.get(e1 + e2, FpPoly(p)) + c1 * c2
            if v.is_zero():
                out.pop(e1 + e2, None)
            else:
                out[e1 + e2] = v
    return out


def _pow(a: dict, n: int, p: int) -> dict:
    out = {0: FpPoly(p, (1,))}
    while n:
        if n & 1:
            out = _mul(out, a, p)
        a = _mul(a, a, p)
        n >>= 1
    return out


class _Parser:
    def __init__(self, text: str, p: int, allow_y: bool):
        self.text = text
        self.p = int(PrimeChar(p))
        self.allow_y = allow_y
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg: str, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.text, tok[2])

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value:
            self.error(f"expected {value!r}", tok)

    def parse(self) -> dict:
        if self.peek()[0] == "end":
            self.error("empty expression")
        v = self.expr()
        if self.peek()[0] != "end":
            self.error("unexpected token")
        return v

    def expr(self) -> dict:
        v = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            v = _add(v, self.term(), self.p, 1 if op == "+" else -1)
        return v

    def _starts_primary(self, tok) -> bool:
        return tok[0] in ("int", "name") or tok[1] == "("

    def term(self) -> dict:
        v = self.factor()
        while True:
            tok = self.peek()
            if tok[1] == "*":
                self.take()
                v = _mul(v, self.factor(), self.p)
            elif self._starts_primary(tok):
                v = _mul(v, self.factor(), self.p)
            else:
                return v

    def factor(self) -> dict:
        if self.peek()[1] == "-":
            self.take()
            return _add({}, self.factor(), self.p, -1)
        if self.peek()[1] == "+":
            self.take()
            return self.factor()
        base = self.primary()
        if self.peek()[1] == "^":
            self.take()
            tok = self.peek()
            n = self.exponent()
            if n < 0 or n > MAX_EXPONENT:
                self.error(f"exponent {n} out of range", tok)
            base = _pow(base, n, self.p)
        return base

    def primary(self) -> dict:
        tok = self.take()
        kind, val, _ = tok
        p = self.p
        if kind == "int":
            c = int(val) % p
            return {0: FpPoly(p, (c,))} if c else {}
        if kind == "name":
            if val == "t":
                return {0: FpPoly.t(p)}
            if val == "y":
                if not self.allow_y:
                    self.error("variable 'y' not allowed here", tok)
                return {1: FpPoly(p, (1,))}
            if val == "p":
                return {}  # p == 0 in characteristic p
            self.error(f"unknown symbol {val!r}", tok)
        if val == "(":
            v = self.expr()
            self.expect(")")
            return v
        self.error("expected a number, 't', 'y' or '('", tok)

    # integer exponent sub-language
    def exponent(self) -> int:
        tok = self.peek()
        if tok[1] == "{":
            self.take()
            n = self.iexpr()
            self.expect("}")
            return n
        if tok[1] == "(":
            self.take()
            n = self.iexpr()
            self.expect(")")
            return n
        return self.iatom()

    def iexpr(self) -> int:
        n = self.iterm()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            m = self.iterm()
            n = n + m if op == "+" else n - m
        return n

    def iterm(self) -> int:
        n = self.ipow()
        while True:
            tok = self.peek()
            if tok[1] == "*":
                self.take()
                n *= self.ipow()
            elif tok[0] in ("int", "name") or tok[1] == "(":
                n *= self.ipow()
            else:
                return n

    def ipow(self) -> int:
        n = self.iatom()
        if self.peek()[1] == "^":
            self.take()
            tok = self.peek()
            e = self.ipow()
            if e < 0 or e > 64:
                self.error("exponent out of range", tok)
            n = n**e
        return n

    def iatom(self) -> int:
        tok = self.take()
        if tok[0] == "int":
            return int(tok[1])
        if tok[1] == "p":
            return self.p
        if tok[1] == "(":
            n = self.iexpr()
            self.expect(")")
            return n
        self.error("expected an integer exponent", tok)


def parse_polyy_terms(text: str, p: int) -> dict[int, FpPoly]:
    """Parse a polynomial in y with F_p[t] coefficients into ``{exponent: coeff}``."""
    return _Parser(text, p, allow_y=True).parse()


def parse_fpt(text: str, p: int) -> FpPoly:
    v = _Parser(text, p, allow_y=False).parse()
    return v.get(0, FpPoly(int(p)))
