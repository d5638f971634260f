"""Transform parsed files into the code structure (scope graph).

Classifies AST statements into scope entries and adds the invisible language
elements: scope relationships and the magic ``$package$``/``$arg$`` variables.
Nothing is evaluated here; every entry starts in the NotInferred state.
"""

from __future__ import annotations

from typing import Optional

from .errors import Span, TydiError
from .model import (Connection, EndRef, Implementation, Instance, Package,
                    Port, Project, Scope, ScopeRelationKind, Streamlet,
                    TemplateParam, TypeEntry, Variable, declare)
from .parser import ParsedFile
from .tree import AstNode


def snip(text: str, span: Span) -> str:
    return text.encode("utf-8")[span.start:span.end].decode("utf-8")


def name_of(name_node: AstNode, path: Optional[str] = None) -> str:
    """Concrete identifier text; interpolation holes must be gone by now."""
    if name_node.kind == "ID":
        return name_node.leaf_text
    raise TydiError(
        "resolution",
        "interpolated identifier is only usable inside a for scope",
        path, name_node.span)


class StatementBuilder:
    """Builds scope entries from statement ASTs.

    Also used by generative for/if expansion, which clones statement subtrees
    and materializes them into an already-evaluating implementation.
    """

    def __init__(self, text: str, path: str):
        self.text = text
        self.path = path

    def snip(self, span: Span) -> str:
        return snip(self.text, span)

    # -- variables -----------------------------------------------------------

    def build_const(self, stmt: AstNode, scope: Scope) -> Variable:
        ids = stmt.children_of("ID")
        name = ids[0].leaf_text
        kind_node = stmt.child("DeclKind")
        exp = stmt.child("Exp")
        declared = kind_node.leaf_text if kind_node else None
        return Variable(
            id=name,
            raw=self.snip(exp.span) if exp is not None else "",
            scope=scope,
            declared_kind=declared,
            expr_ast=exp,
            dump_tag=declared or "UnknownType",
            span=stmt.span)

    # -- logical types ---------------------------------------------------------

    def build_type_entry(self, stmt: AstNode, scope: Scope) -> TypeEntry:
        first = stmt.children[0]
        if first.kind in ("LogicalGroupType", "LogicalUnionType"):
            # type Group Date { ... };  registers the group's own name
            return self.build_group_entry(first, first.children[0].leaf_text,
                                          scope, attached=True)
        name = first.leaf_text
        ty = stmt.children[1]
        inner = ty.children[0]
        if inner.kind in ("LogicalGroupType", "LogicalUnionType"):
            # type alias = Group g { ... };  the group scope is detached and
            # the inline name is invisible outside the alias
            return self.build_group_entry(inner, name, scope, attached=False)
        return TypeEntry(id=name, ast=ty, scope=scope, span=stmt.span,
                         src_text=self.text)

    def build_group_entry(self, group_ast: AstNode, entry_id: str, scope: Scope,
                          attached: bool) -> TypeEntry:
        is_group = group_ast.kind == "LogicalGroupType"
        group_name = group_ast.children[0].leaf_text
        prefix = "group" if is_group else "union"
        own = Scope(f"{prefix}_{group_name}", prefix)
        if attached:
            own.add_relation(
                ScopeRelationKind.GROUP if is_group else ScopeRelationKind.UNION,
                scope)
        entry = TypeEntry(id=entry_id, ast=group_ast, scope=scope, own_scope=own,
                          span=group_ast.span, src_text=self.text)
        for item in group_ast.children[1:]:
            if item.kind == "SubItemItem":
                fname = item.children[0].leaf_text
                fentry = TypeEntry(id=fname, ast=item.children[1], scope=own,
                                   span=item.span, src_text=self.text)
                declare(own, fentry, "type", item.span, self.path)
                entry.field_names.append(fname)
            elif item.kind == "ConstDecl":
                declare(own, self.build_const(item, own), "variable", item.span, self.path)
            elif item.kind == "TypeDecl":
                declare(own, self.build_type_entry(item, own), "type", item.span, self.path)
            elif item.kind == "AssertStmt":
                entry.asserts.append(item)
            else:
                raise TydiError("syntax", f"unexpected {item.kind} in group body",
                                self.path, item.span)
        return entry

    # -- streamlets ------------------------------------------------------------

    def build_template_params(self, node: AstNode) -> list[TemplateParam]:
        params = []
        for p in node.children:
            pname = p.children[0].leaf_text
            kind = p.children[1]
            if kind.kind == "ImplOfKind":
                params.append(TemplateParam(pname, "impl", kind.children[0].leaf_text))
            else:
                params.append(TemplateParam(pname, kind.leaf_text))
        return params

    def declare_param_magic(self, scope: Scope, params: list[TemplateParam]):
        tags = {"int": "DummyInt", "str": "DummyStr", "float": "DummyFloat",
                "bool": "DummyBool", "clockdomain": "DummyClockDomain",
                "type": "DummyLogicalData", "impl": "DummyImplement"}
        for p in params:
            scope.variables[p.name] = Variable(
                id=p.name, raw=f"$arg${p.name}", scope=scope,
                dump_tag=tags[p.kind], is_magic=True)

    def build_streamlet(self, stmt: AstNode, scope: Scope) -> Streamlet:
        doc_node = stmt.child("DOC")
        name = stmt.child("ID").leaf_text
        own = Scope(f"streamlet_{name}", "streamlet")
        own.add_relation(ScopeRelationKind.STREAMLET, scope)
        s = Streamlet(id=name, scope=own,
                      doc=doc_node.leaf_text if doc_node else None, span=stmt.span)
        s.ports = own.ports
        tparams = stmt.child("TemplateParams")
        if tparams is not None:
            s.template_params = self.build_template_params(tparams)
            self.declare_param_magic(own, s.template_params)
        for item in stmt.children:
            if item.kind == "PortDecl":
                declare(own, self.build_port(item), "port", item.span, self.path)
            elif item.kind == "ConstDecl":
                declare(own, self.build_const(item, own), "variable", item.span, self.path)
            elif item.kind == "TypeDecl":
                declare(own, self.build_type_entry(item, own), "type", item.span, self.path)
            elif item.kind == "AssertStmt":
                s.asserts.append(item)
        return s

    def build_port(self, item: AstNode) -> Port:
        name = item.children[0].leaf_text
        ty = item.child("LogicalType")
        size = item.child("ArraySize")
        cd = item.child("ClockDomainAnn")
        return Port(
            name=name,
            type_ast=ty,
            raw_type=self.snip(ty.span),
            direction=item.child("DIR").leaf_text,
            array_size_ast=size.children[0] if size else None,
            raw_size=self.snip(size.children[0].span) if size else None,
            cd_ast=cd,
            raw_cd=self.snip(cd.children[0].span) if cd else None,
            span=item.span)

    # -- implementations ---------------------------------------------------------

    def build_impl(self, stmt: AstNode, scope: Scope) -> Implementation:
        doc_node = stmt.child("DOC")
        name = stmt.child("ID").leaf_text
        own = Scope(f"implement_{name}", "implement")
        own.add_relation(ScopeRelationKind.IMPLEMENT, scope)
        impl = Implementation(id=name, scope=own,
                              doc=doc_node.leaf_text if doc_node else None,
                              span=stmt.span, src_text=self.text)
        impl.instances = own.instances
        impl.connections = own.connections
        if stmt.kind == "ImplInstDecl":
            impl.derived_from = stmt.child("TemplateInstance")
            impl.raw_of = self.snip(impl.derived_from.span)
            return impl
        impl.external = stmt.child("External") is not None
        of = stmt.child("OfStreamlet")
        impl.of_ast = of.children[0]
        impl.raw_of = self.snip(impl.of_ast.span)
        tparams = stmt.child("TemplateParams")
        if tparams is not None:
            impl.template_params = self.build_template_params(tparams)
            self.declare_param_magic(own, impl.template_params)
        body = [c for c in stmt.children
                if c.kind not in ("DOC", "ID", "External", "TemplateParams", "OfStreamlet")]
        if impl.external and body:
            raise TydiError(
                "syntax",
                f"external implementation {name!r} must have an empty body",
                self.path, body[0].span)
        for item in body:
            self.build_impl_item(item, impl, own)
        return impl

    def build_impl_item(self, item: AstNode, impl: Implementation, own: Scope):
        kind = item.kind
        if kind == "ConstDecl":
            declare(own, self.build_const(item, own), "variable", item.span, self.path)
        elif kind == "TypeDecl":
            declare(own, self.build_type_entry(item, own), "type", item.span, self.path)
        elif kind == "AssertStmt":
            impl.asserts.append(item)
        elif kind == "InstanceDecl":
            inst = self.build_instance(item)
            declare(own, inst, "instance", item.span, self.path)
        elif kind == "ConnectionStmt":
            own.connections.append(self.build_connection(item))
        elif kind in ("IfBlock", "ForBlock"):
            impl.generative.append(item)
        elif kind == "ProcessBlock":
            impl.process_block = item.leaf_text
        else:
            raise TydiError("syntax", f"unexpected {kind} in implementation body",
                            self.path, item.span)

    def build_instance(self, item: AstNode) -> Instance:
        name = name_of(item.children[0], self.path)
        target = item.children[1]
        size = item.child("ArraySize")
        return Instance(
            name=name,
            target_ast=target,
            raw_target=self.snip(target.span),
            array_size_ast=size.children[0] if size else None,
            span=item.span)

    def build_connection(self, item: AstNode, name_suffix: str = "") -> Connection:
        ends = item.children_of("PathEnd")
        fifo = item.child("FifoDepth")
        cname_node = item.child("ConnName")
        cname = cname_node.leaf_text if cname_node else \
            f"connection_{item.span.start}-{item.span.end}"
        fifo_exp = fifo.children[0] if fifo else None
        return Connection(
            name=cname + name_suffix,
            source=self.build_end(ends[0]),
            sink=self.build_end(ends[1]),
            fifo_ast=fifo_exp,
            raw_fifo=self.snip(fifo_exp.span) if fifo_exp is not None else None,
            no_strict=item.child("NoStrictMarker") is not None,
            span=item.span)

    def build_end(self, end: AstNode) -> EndRef:
        owner = end.child("PathOwner")
        port = end.child("PathPort")
        oidx = owner.child("Index") if owner else None
        pidx = port.child("Index")
        return EndRef(
            owner_ast=owner.children[0] if owner else None,
            owner_index_ast=oidx.children[0] if oidx else None,
            port_ast=port.children[0],
            port_index_ast=pidx.children[0] if pidx else None,
            raw_owner=self.snip(owner.span) if owner else None,
            raw_port=self.snip(port.span))


class PackageBuilder(StatementBuilder):
    def __init__(self, project: Project, parsed: ParsedFile):
        super().__init__(parsed.source.text, parsed.source.path)
        self.project = project
        self.parsed = parsed

    def build(self) -> Package:
        name = self.parsed.source.package_name
        scope = Scope(f"package_{name}", "package")
        pkg = Package(name, scope, self.path, self.text)
        self._add_package_magic(scope, name)
        for stmt in self.parsed.ast.children:
            self.build_statement(stmt, scope)
        return pkg

    def _add_package_magic(self, scope: Scope, pkg_name: str):
        var = Variable(id=f"$package${pkg_name}", raw="", scope=scope,
                       dump_tag="PackageType", is_magic=True)
        scope.variables[var.id] = var

    def build_statement(self, stmt: AstNode, scope: Scope):
        kind = stmt.kind
        if kind == "ImportStmt":
            target = stmt.children[0].leaf_text
            magic = f"$package${target}"
            if magic not in scope.variables:
                scope.variables[magic] = Variable(
                    id=magic, raw="", scope=scope, dump_tag="PackageType",
                    is_magic=True)
            return
        if kind == "ConstDecl":
            declare(scope, self.build_const(stmt, scope), "variable", stmt.span, self.path)
            return
        if kind == "TypeDecl":
            declare(scope, self.build_type_entry(stmt, scope), "type", stmt.span, self.path)
            return
        if kind == "StreamletDecl":
            s = self.build_streamlet(stmt, scope)
            declare(scope, s, "streamlet", stmt.span, self.path)
            return
        if kind in ("ImplDecl", "ImplInstDecl"):
            i = self.build_impl(stmt, scope)
            declare(scope, i, "implementation", stmt.span, self.path)
            return
        raise TydiError("syntax", f"unexpected statement {kind}", self.path, stmt.span)


def build_project(name: str, parsed_files: dict[str, ParsedFile]) -> Project:
    project = Project(name)
    for pkg_name in sorted(parsed_files):
        builder = PackageBuilder(project, parsed_files[pkg_name])
        project.packages[pkg_name] = builder.build()
    return project
