"""Constant-expression evaluation with lazy, memoized variable forcing.

Implements the operator/type matrix for constant variables: arithmetic with
int/float promotion, bool logic, comparisons, string concatenation, bitwise
operations, `round`/`floor`/`ceil`/`log`, array literals and insertion, and
integer ranges. Integer arithmetic is 64-bit; overflow is a compile error
rather than silent wraparound.
"""

from __future__ import annotations

import math
from typing import Optional

from .context import EvalContext
from .errors import ResolutionError, Span, TydiError, TypeError_
from .model import EvalState, Scope, Variable, enclosing_package_scope, resolve_name
from .tree import AstNode
from .values import (ArrayValue, BoolValue, ClockDomainValue, FloatValue,
                     IntValue, StrValue, Value, format_float, in_int64_range,
                     variant_name)

PRECEDENCE = {
    "||": 1, "&&": 2, "|": 3, "&": 4, "==": 5, "!=": 5,
    "<": 6, ">": 6, "<=": 6, ">=": 6, "<<": 7, ">>": 7,
    "+": 8, "-": 8, "*": 9, "/": 9, "%": 9, "^": 10,
}

RANGE_ELEMENT_LIMIT = 1_000_000


def generated_clockdomain(package_name: str, var_id: str) -> str:
    """Deterministic expression for a bare `const x: clockdomain;`."""
    return f"$generated${package_name}${var_id}"


def _check_int(n: int, span: Optional[Span], path, what: str = "integer") -> int:
    if not in_int64_range(n):
        raise TypeError_(f"{what} overflows 64-bit range: {n}", path, span)
    return n


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _trunc_mod(a: int, b: int) -> int:
    r = abs(a) % abs(b)
    return r if a >= 0 else -r


class ExpressionEvaluator:
    """Evaluates one expression tree within a scope.

    Referenced variables are forced through the context's once-only guards,
    so each variable is computed a single time no matter how many
    expressions mention it.
    """

    def __init__(self, ctx: EvalContext, scope: Scope):
        self.ctx = ctx
        self.scope = scope
        self.path = ctx.path_for(scope)

    def err(self, message: str, span: Optional[Span] = None) -> TydiError:
        return TypeError_(message, self.path, span)

    # -- entry points ----------------------------------------------------------

    def eval_exp(self, exp: AstNode) -> Value:
        terms = [c for c in exp.children if c.kind == "Term"]
        ops = [c.leaf_text for c in exp.children if c.kind == "InfixOp"]
        value, idx = self._climb(terms, ops, exp, 0, 1)
        return value

    def _climb(self, terms, ops, exp, i, min_prec):
        left = self.eval_term(terms[i])
        while i < len(ops) and PRECEDENCE[ops[i]] >= min_prec:
            op = ops[i]
            right, i = self._climb(terms, ops, exp, i + 1, PRECEDENCE[op] + 1)
            left = self.apply_binary(op, left, right, exp.span)
        return left, i

    def eval_term(self, term: AstNode) -> Value:
        inner = term.children[0]
        if inner.kind == "Exp":
            return self.eval_exp(inner)
        if inner.kind == "UnaryExp":
            op = inner.children[0].leaf_text
            operand = self.eval_term(inner.children[1])
            return self.apply_unary(op, operand, inner.span)
        if inner.kind == "ArrayExp":
            elems = tuple(self.eval_exp(e) for e in inner.children)
            kinds = {type(e) for e in elems}
            if len(kinds) > 1:
                raise self.err("array elements must all have the same type", inner.span)
            if ArrayValue in kinds:
                raise self.err("nested arrays are not supported", inner.span)
            return ArrayValue(elems)
        return self.eval_atom(inner)

    # -- atoms ------------------------------------------------------------------

    def eval_atom(self, atom: AstNode) -> Value:
        kind = atom.kind
        if kind == "IntExp":
            leaf = atom.children[0]
            text = leaf.leaf_text
            n = int(text) if leaf.kind == "INT_RAW_NORAML" else int(text, 0)
            return IntValue(_check_int(n, atom.span, self.path, "integer literal"))
        if kind == "FloatExp":
            return FloatValue(float(atom.children[0].leaf_text))
        if kind == "StringExp":
            return StrValue(atom.children[0].leaf_text)
        if kind == "BoolExp":
            return BoolValue(atom.children[0].leaf_text == "true")
        if kind == "ClockDomainExp":
            # synthesized by for-expansion when the loop value is a clockdomain
            return ClockDomainValue(atom.children[0].leaf_text)
        if kind == "VarExp":
            return self.eval_reference(atom)
        if kind == "IndexExp":
            return self.eval_index(atom)
        if kind == "FunctionExp":
            return self.eval_function(atom)
        if kind == "MemberExtractExp":
            from .elaboration import extract_member_value
            return extract_member_value(self.ctx, self.scope, atom)
        raise self.err(f"cannot evaluate {kind}", atom.span)

    def eval_reference(self, atom: AstNode) -> Value:
        ids = [c.leaf_text for c in atom.children]
        if len(ids) == 1:
            var, _ = self._resolve_variable(ids[0], atom.span)
            return force_variable(self.ctx, var)
        var = self._resolve_package_member(ids[0], ids[1], atom.span)
        return force_variable(self.ctx, var)

    def _resolve_variable(self, name: str, span) -> tuple[Variable, Scope]:
        try:
            return resolve_name(self.scope, name, "variable")
        except ResolutionError as e:
            raise TydiError("resolution", e.message, self.path, span) from None

    def _resolve_package_member(self, pkg_name: str, member: str, span) -> Variable:
        pkg_scope = enclosing_package_scope(self.scope)
        if pkg_scope is None or f"$package${pkg_name}" not in pkg_scope.variables:
            raise TydiError(
                "resolution",
                f"package {pkg_name!r} is not imported here", self.path, span)
        target = self.ctx.project.packages.get(pkg_name)
        if target is None:
            raise TydiError(
                "resolution",
                f"package {pkg_name!r} does not exist in the project",
                self.path, span)
        var = target.scope.variables.get(member)
        if var is None:
            raise TydiError(
                "resolution",
                f"variable {member!r} not found in package {pkg_name!r}",
                self.path, span)
        return var

    def eval_index(self, atom: AstNode) -> Value:
        ids = [c.leaf_text for c in atom.children if c.kind == "ID"]
        index_exp = atom.children[-1]
        if len(ids) == 1:
            var, _ = self._resolve_variable(ids[0], atom.span)
        else:
            var = self._resolve_package_member(ids[0], ids[1], atom.span)
        arr = force_variable(self.ctx, var)
        if not isinstance(arr, ArrayValue):
            raise self.err(f"{ids[-1]!r} is not an array", atom.span)
        idx = self.eval_exp(index_exp)
        if not isinstance(idx, IntValue):
            raise self.err("array index must be an int", index_exp.span)
        if not 0 <= idx.value < len(arr.elements):
            raise self.err(
                f"index {idx.value} out of bounds for array of size "
                f"{len(arr.elements)}", atom.span)
        return arr.elements[idx.value]

    def eval_function(self, atom: AstNode) -> Value:
        func = atom.children[0].leaf_text
        if func == "log":
            base = self.eval_exp(atom.children[1])
            arg = self.eval_exp(atom.children[2])
            return self._eval_log(base, arg, atom.span)
        arg = self.eval_exp(atom.children[1])
        if not isinstance(arg, FloatValue):
            raise self.err(f"{func} expects a float, got {variant_name(arg)}", atom.span)
        x = arg.value
        if func == "round":
            n = math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)
        elif func == "floor":
            n = math.floor(x)
        elif func == "ceil":
            n = math.ceil(x)
        else:
            raise self.err(f"unknown function {func!r}", atom.span)
        return IntValue(_check_int(int(n), atom.span, self.path, f"{func} result"))

    def _eval_log(self, base: Value, arg: Value, span) -> Value:
        for v, what in ((base, "base"), (arg, "argument")):
            if not isinstance(v, (IntValue, FloatValue)):
                raise self.err(f"log {what} must be numeric, got {variant_name(v)}", span)
        b = base.value
        x = arg.value
        if x <= 0:
            raise self.err(f"log argument must be positive, got {x}", span)
        if b <= 0 or b == 1:
            raise self.err(f"log base must be positive and not 1, got {b}", span)
        if b == 2:
            return FloatValue(math.log2(x))
        if b == 10:
            return FloatValue(math.log10(x))
        return FloatValue(math.log(x) / math.log(b))

    # -- operators ---------------------------------------------------------------

    def apply_unary(self, op: str, v: Value, span) -> Value:
        if op == "-":
            if isinstance(v, IntValue):
                return IntValue(_check_int(-v.value, span, self.path))
            if isinstance(v, FloatValue):
                return FloatValue(-v.value)
            raise self.err(f"unary '-' expects int or float, got {variant_name(v)}", span)
        if op == "!":
            if isinstance(v, BoolValue):
                return BoolValue(not v.value)
            raise self.err(f"unary '!' expects bool, got {variant_name(v)}", span)
        if op == "~":
            if isinstance(v, IntValue):
                return IntValue(_check_int(~v.value, span, self.path))
            raise self.err(f"unary '~' expects int, got {variant_name(v)}", span)
        raise self.err(f"unknown unary operator {op!r}", span)

    def apply_binary(self, op: str, a: Value, b: Value, span) -> Value:
        if op == "+" and (isinstance(a, ArrayValue) or isinstance(b, ArrayValue)):
            return self._array_insert(a, b, span)

        if op in ("&&", "||"):
            if isinstance(a, BoolValue) and isinstance(b, BoolValue):
                return BoolValue(a.value and b.value if op == "&&"
                                 else a.value or b.value)
            raise self._bin_err(op, a, b, span)

        if op in ("==", "!="):
            if type(a) is not type(b) or isinstance(a, ArrayValue):
                raise self._bin_err(op, a, b, span)
            if isinstance(a, ClockDomainValue):
                same = a.expression == b.expression
            else:
                same = a.value == b.value
            return BoolValue(same if op == "==" else not same)

        if op in ("<", ">", "<=", ">="):
            if not (isinstance(a, (IntValue, FloatValue))
                    and isinstance(b, (IntValue, FloatValue))):
                raise self._bin_err(op, a, b, span)
            x, y = a.value, b.value
            result = {"<": x < y, ">": x > y, "<=": x <= y, ">=": x >= y}[op]
            return BoolValue(result)

        if op in ("<<", ">>", "&", "|", "%"):
            if not (isinstance(a, IntValue) and isinstance(b, IntValue)):
                raise self._bin_err(op, a, b, span)
            x, y = a.value, b.value
            if op == "%":
                if y == 0:
                    raise self.err("modulo by zero", span)
                return IntValue(_trunc_mod(x, y))
            if op in ("<<", ">>"):
                if not 0 <= y < 64:
                    raise self.err(f"shift amount must be in [0, 64), got {y}", span)
                n = x << y if op == "<<" else x >> y
                return IntValue(_check_int(n, span, self.path, "shift result"))
            n = x & y if op == "&" else x | y
            return IntValue(_check_int(n, span, self.path))

        if op == "+" and (isinstance(a, StrValue) or isinstance(b, StrValue)):
            return self._str_concat(a, b, span)

        if op in ("+", "-", "*", "/", "^"):
            if not (isinstance(a, (IntValue, FloatValue))
                    and isinstance(b, (IntValue, FloatValue))):
                raise self._bin_err(op, a, b, span)
            return self._numeric(op, a, b, span)

        raise self.err(f"unknown operator {op!r}", span)

    def _numeric(self, op: str, a: Value, b: Value, span) -> Value:
        both_int = isinstance(a, IntValue) and isinstance(b, IntValue)
        x, y = a.value, b.value
        if op == "/":
            if both_int:
                if y == 0:
                    raise self.err("division by zero", span)
                return IntValue(_check_int(_trunc_div(x, y), span, self.path))
            if y == 0:
                raise self.err("division by zero", span)
            return FloatValue(x / y)
        if op == "^":
            if both_int:
                if y >= 0:
                    n = x ** y
                    return IntValue(_check_int(n, span, self.path, "power result"))
                return FloatValue(float(x) ** y)
            try:
                return FloatValue(float(x) ** float(y))
            except (OverflowError, ValueError):
                raise self.err(f"power result out of range: {x} ^ {y}", span) from None
        n = {"+": x + y, "-": x - y, "*": x * y}[op]
        if both_int:
            return IntValue(_check_int(n, span, self.path))
        return FloatValue(float(n))

    def _str_concat(self, a: Value, b: Value, span) -> Value:
        def text(v: Value) -> str:
            if isinstance(v, StrValue):
                return v.value
            if isinstance(v, IntValue):
                return str(v.value)
            if isinstance(v, FloatValue):
                return format_float(v.value)
            if isinstance(v, BoolValue):
                return "true" if v.value else "false"
            raise self._bin_err("+", a, b, span)

        return StrValue(text(a) + text(b))

    def _array_insert(self, a: Value, b: Value, span) -> Value:
        if isinstance(a, ArrayValue) and isinstance(b, ArrayValue):
            raise self.err("cannot add two arrays", span)
        arr, elem, append = (a, b, True) if isinstance(a, ArrayValue) else (b, a, False)
        if isinstance(elem, ArrayValue):
            raise self.err("nested arrays are not supported", span)
        if arr.elements and type(arr.elements[0]) is not type(elem):
            raise self.err(
                f"inserted {variant_name(elem)} does not match array of "
                f"{variant_name(arr.elements[0])}", span)
        elements = arr.elements + (elem,) if append else (elem,) + arr.elements
        return ArrayValue(elements)

    def _bin_err(self, op, a, b, span) -> TydiError:
        return self.err(
            f"operator {op!r} not defined for {variant_name(a)} * {variant_name(b)}",
            span)


def evaluate_expression(ctx: EvalContext, scope: Scope, exp: AstNode) -> Value:
    return ExpressionEvaluator(ctx, scope).eval_exp(exp)


def evaluate_range(ctx: EvalContext, scope: Scope, range_exp: AstNode) -> ArrayValue:
    """`start=step=>end` produces the half-open int sequence [start, end)."""
    ev = ExpressionEvaluator(ctx, scope)
    vals = [ev.eval_exp(c) for c in range_exp.children]
    for v in vals:
        if not isinstance(v, IntValue):
            raise ev.err("range bounds must all be int", range_exp.span)
    start, step, stop = (v.value for v in vals)
    if step == 0:
        raise ev.err("range step must not be zero", range_exp.span)
    size = max(0, -(-(stop - start) // step))
    if size > RANGE_ELEMENT_LIMIT:
        raise ev.err(f"range produces too many elements ({size})", range_exp.span)
    return ArrayValue(tuple(IntValue(n) for n in range(start, stop, step)))


def force_variable(ctx: EvalContext, var: Variable) -> Value:
    """Evaluate a variable at most once; concurrent requests wait."""
    if var.state is EvalState.EVALUATED:
        return var.value
    if var.state is EvalState.ERROR:
        raise var.error
    if not ctx.begin(var, var.label()):
        if var.state is EvalState.ERROR:
            raise var.error
        return var.value
    try:
        value = _compute_variable(ctx, var)
        var.value = value
        var.state = EvalState.EVALUATED
        return value
    except TydiError as e:
        var.error = e
        var.state = EvalState.ERROR
        raise
    finally:
        ctx.finish(var)


def _compute_variable(ctx: EvalContext, var: Variable) -> Value:
    ctx.count_eval(var.label())
    path = ctx.path_for(var.scope) if var.scope else None
    if var.is_magic:
        raise TydiError(
            "resolution",
            f"{var.id!r} cannot be used as a value here", path, var.span)
    if var.declared_kind == "clockdomain":
        if var.expr_ast is None:
            pkg = ctx.package_of(var.scope)
            pkg_name = pkg.name if pkg else "?"
            return ClockDomainValue(generated_clockdomain(pkg_name, var.id))
        v = evaluate_expression(ctx, var.scope, var.expr_ast)
        if not isinstance(v, StrValue):
            raise TypeError_(
                f"clockdomain initializer must be a string, got {variant_name(v)}",
                path, var.span)
        return ClockDomainValue(v.value)
    if var.expr_ast is None:
        raise TypeError_(f"variable {var.id!r} has no initializer", path, var.span)
    value = evaluate_expression(ctx, var.scope, var.expr_ast)
    if var.declared_kind is not None and variant_name(value) != var.declared_kind:
        raise TypeError_(
            f"variable {var.id!r} declared {var.declared_kind} but evaluates to "
            f"{variant_name(value)}", path, var.span)
    return value
