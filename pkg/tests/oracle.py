"""Naive reference model editor: the acceptance oracle.

Deliberately primitive: unbounded associative maps, no slot arrays, a full
rescan wherever the kernel might be clever.  Shares no code with the
package under test; values are tagged tuples, identifiers plain strings.
Must reproduce the documented wire behavior bit for bit.
"""

KINDS = ("RootFolder", "Namespace", "Class", "Attribute", "DataType", "Unit",
         "Composition", "Inheritance", "Association", "Constraint", "Instance")
RANK = {k: i for i, k in enumerate(KINDS)}
PRIMS = ("boolean", "integer", "real", "string")
REL = {"Composition": [("name", 0, "str"), ("source", 0, "Class"), ("target", 0, "Class"),
                       ("lower", 0, "nat"), ("upper", 0, "bound")]}
CATALOG = {
    "RootFolder": [("name", 0, "str"), ("namespaces", 1, "Namespace")],
    "Namespace": [("name", 0, "str"), ("classes", 1, "Class"),
                  ("namespaces", 1, "Namespace"), ("constraints", 1, "Constraint")],
    "Class": [("name", 0, "str"), ("classification", 0, "cls"), ("attributes", 1, "Attribute"),
              ("parent", 0, "Inheritance"), ("compositions", 1, "Composition"),
              ("associations", 1, "Association")],
    "Attribute": [("name", 0, "str"), ("datatype", 0, "DataType"), ("unit", 0, "Unit"),
                  ("potency", 0, "nat"), ("perlevel", 0, "bool"), ("lower", 0, "nat"),
                  ("upper", 0, "bound")],
    "DataType": [("name", 0, "str"), ("primitive", 0, "prim")],
    "Unit": [("name", 0, "str"), ("symbol", 0, "str")],
    "Composition": REL["Composition"],
    "Inheritance": [("subclass", 0, "Class"), ("superclass", 0, "Class")],
    "Association": REL["Composition"],
    "Constraint": [("name", 0, "str"), ("expression", 0, "str")],
    "Instance": [("name", 0, "str"), ("identifier", 0, "str"), ("meta", 0, "Class"),
                 ("level", 0, "int"), ("classification", 0, "cls")],
}
VK = {k: {n: v for n, _, v in rows} for k, rows in CATALOG.items()}
ARITY = {k: {n: a for n, a, _ in rows} for k, rows in CATALOG.items()}
CONTAIN = {"RootFolder": {"namespaces"}, "Namespace": {"classes", "namespaces", "constraints"},
           "Class": {"attributes", "parent", "compositions", "associations"}}
FROZEN = {("Instance", "identifier"), ("Instance", "level")}
DECL_LISTS = ("attributes", "compositions", "associations")


class Err(Exception):
    def __init__(self, code, detail):
        self.line = f"error {code} {detail}"


def kind_of(eid):
    return eid.split(":", 1)[0]


def skey(eid):
    k, i = eid.split(":", 1)
    return (RANK[k], int(i))


def is_id(token):
    k, _, d = token.partition(":")
    return bool(_ and k in RANK and d.isdigit() and d == str(int(d)) and int(d) >= 1)


def tok(line):
    out, i, n = [], 0, len(line)
    while i < n:
        c = line[i]
        if c in " \t":
            i += 1
        elif c == '"':
            j = i + 1
            while j < n and line[j] != '"':
                j += 2 if line[j] == "\\" else 1
            if j >= n:
                raise Err("ParseError", "malformed request")
            out.append(line[i:j + 1])
            i = j + 1
            if i < n and line[i] not in " \t":
                raise Err("ParseError", "malformed request")
        else:
            j = i
            while j < n and line[j] not in " \t":
                if line[j] == '"':
                    raise Err("ParseError", "malformed request")
                j += 1
            out.append(line[i:j])
            i = j
    return out


def unq(lex):
    import re
    if len(lex) < 2 or lex[-1] != '"':
        raise Err("ParseError", "malformed request")
    out, i = [], 1
    while i < len(lex) - 1:
        c = lex[i]
        if c == "\\":
            i += 1
            nxt = lex[i] if i < len(lex) - 1 else None
            if nxt not in ("\\", '"', "n", "t", "r"):
                raise Err("ParseError", "malformed request")
            out.append({"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}[nxt])
        elif c == '"':
            raise Err("ParseError", "malformed request")
        else:
            out.append(c)
        i += 1
    return "".join(out)


def lit(token):
    import re
    if token.startswith('"'):
        return ("s", unq(token))
    if token in ("true", "false"):
        return ("b", token == "true")
    if token == "void":
        return ("void",)
    if token == "*":
        return ("star",)
    if re.fullmatch(r"-?(0|[1-9][0-9]*)", token):
        return ("i", int(token))
    if re.fullmatch(r"-?(0|[1-9][0-9]*)\.[0-9]+([eE][+-]?[0-9]+)?", token):
        return ("r", float(token))
    if is_id(token):
        return ("ref", token)
    raise Err("ParseError", "malformed request")


def rend(v):
    tag = v[0]
    if tag == "b":
        return "true" if v[1] else "false"
    if tag == "i":
        return str(v[1])
    if tag == "r":
        t = repr(v[1])
        if "e" in t or "E" in t:
            m, _, e = t.partition("e")
            return (m if "." in m else m + ".0") + "e" + e
        return t if "." in t else t + ".0"
    if tag == "s":
        rep = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}
        return '"' + "".join(rep.get(c, c) for c in v[1]) + '"'
    if tag == "ref":
        return v[1]
    return "*"


class Oracle:
    def __init__(self, capacities=None):
        self.cap = dict.fromkeys(KINDS, 1024)
        self.cap.update(capacities or {})
        self.el = {"RootFolder:1": {}}
        self.dead = set()
        self.fresh = dict.fromkeys(KINDS, 1)
        self.fresh["RootFolder"] = 2

    # -- naive helpers ----------------------------------------------------
    def alive(self, eid):
        return eid in self.el

    def get(self, eid, key):
        return self.el[eid].get(key, [])

    def chain(self, cid, first_sup=None, skip_own_edge=False):
        out, seen, cur = [cid], {cid}, cid
        sup = first_sup if skip_own_edge else self._sup(cid)
        while sup is not None and sup not in seen:
            out.append(sup)
            seen.add(sup)
            sup = self._sup(sup)
        return out

    def _sup(self, cid):
        rec = self.el.get(cid)
        if rec is None:
            return None
        par = rec.get("parent")
        if not par:
            return None
        inh = self.el.get(par[0][1])
        if not inh:
            return None
        sup = inh.get("superclass")
        return sup[0][1] if sup and sup[0][1] in self.el else None

    def decls_of(self, chain):
        out = []
        for origin in chain:
            rec = self.el.get(origin)
            if rec and kind_of(origin) == "Class":
                for lst in DECL_LISTS:
                    out.extend(v[1] for v in rec.get(lst, []))
        return out

    def effective(self, rec):
        meta = rec.get("meta")
        if not meta or meta[0][1] not in self.el or kind_of(meta[0][1]) != "Class":
            return []
        return self.decls_of(self.chain(meta[0][1]))

    def conforms(self, meta_id, target_id):
        return target_id in self.chain(meta_id)

    def cont_keys(self, eid, rec):
        for key in CONTAIN.get(kind_of(eid), ()):
            yield key
        if kind_of(eid) == "Instance":
            for key in rec:
                if ":" in key and kind_of(key) == "Composition":
                    yield key

    def container_of(self, target):
        for eid in sorted(self.el, key=skey):
            rec = self.el[eid]
            for key in self.cont_keys(eid, rec):
                for pos, v in enumerate(rec.get(key, []), 1):
                    if v[1] == target:
                        return eid, key, pos
        return None

    def holders(self, decl):
        out = []
        for eid in sorted(self.el, key=skey):
            if kind_of(eid) == "Instance" and self.el[eid].get(decl):
                out.append(eid)
        return out

    def ids(self, eids):
        return " ".join(sorted(set(eids), key=skey))

    def primitive_of(self, attr_rec):
        dt = attr_rec.get("datatype")
        if not dt or dt[0][1] not in self.el:
            return None
        prim = self.el[dt[0][1]].get("primitive")
        return prim[0][1] if prim else None

    def match_prim(self, v, prim):
        return {"boolean": "b", "integer": "i", "real": "r", "string": "s"}.get(prim) == v[0]

    def potency(self, attr_rec):
        p = attr_rec.get("potency")
        pl = attr_rec.get("perlevel")
        return (p[0][1] if p else 1, pl[0][1] if pl else False)

    def verdict(self, value, per_level, level):
        if not (1 <= level < 2 and 1 <= value <= 1):
            return "Forbidden"
        if per_level and 2 - value <= level <= 1:
            return "Required"
        return "Required" if level == 2 - value else "Forbidden"

    # -- verbs --------------------------------------------------------------
    def create(self, target):
        if ":" in target:
            if not self.alive(target):
                raise Err("UnknownIdentifier", target)
            if kind_of(target) != "Class":
                raise Err("LevelViolation", target)
            eid = self.alloc("Instance")
            self.el[eid] = {"identifier": [("s", eid)], "meta": [("ref", target)],
                            "level": [("i", 1)], "classification": [("s", "logical")]}
            return eid
        if target not in RANK:
            raise Err("UnknownKind", target)
        if target == "Instance":
            raise Err("LevelViolation", "Instance")
        eid = self.alloc(target)
        self.el[eid] = {"classification": [("s", "logical")]} if target == "Class" else {}
        return eid

    def alloc(self, kind):
        if kind == "RootFolder":
            raise Err("SingletonViolation", "RootFolder")
        if self.fresh[kind] > self.cap[kind]:
            raise Err("CapacityExceeded", kind)
        eid = f"{kind}:{self.fresh[kind]}"
        self.fresh[kind] += 1
        if kind == "Instance":
            self.el[eid] = {"identifier": [("s", eid)]}
        return eid

    def read(self, eid, feature):
        if not self.alive(eid):
            raise Err("UnknownIdentifier", eid)
        rec = self.el[eid]
        if feature == "identifier":
            return [("s", eid)]
        if ":" not in feature:
            if feature not in VK[kind_of(eid)]:
                raise Err("UnknownFeature", feature)
            return rec.get(feature, [])
        if kind_of(eid) != "Instance" or feature not in self.effective(rec):
            raise Err("UnknownFeature", feature)
        return rec.get(feature, [])

    def update(self, eid, feature, pos, value):
        if not self.alive(eid):
            raise Err("UnknownIdentifier", eid)
        rec, kind = self.el[eid], kind_of(eid)
        void = value[0] == "void"
        # feature resolution + frozen
        if ":" not in feature:
            if feature == "identifier":
                raise Err("FrozenFeature", "identifier")
            if feature not in VK[kind]:
                raise Err("UnknownFeature", feature)
            if (kind, feature) in FROZEN:
                raise Err("FrozenFeature", feature)
            is_list, bound, cont = ARITY[kind][feature] == 1, None, feature in CONTAIN.get(kind, ())
            decl = None
        else:
            if kind != "Instance" or feature not in self.effective(rec):
                raise Err("UnknownFeature", feature)
            decl = self.el[feature]
            up = decl.get("upper")
            if up:
                bound = None if up[0][0] == "star" else up[0][1]
            else:
                bound = 1 if kind_of(feature) == "Attribute" else None
            is_list, cont = True, kind_of(feature) == "Composition"
        if not void:
            self.check_type(kind, feature, decl, value)
        values = rec.get(feature, [])
        if void:
            if not 1 <= pos <= len(values):
                raise Err("PositionOutOfRange", str(pos))
        elif is_list:
            if not 1 <= pos <= len(values) + 1:
                raise Err("PositionOutOfRange", str(pos))
        elif pos != 1:
            raise Err("PositionOutOfRange", str(pos))
        if not void and decl is not None and kind_of(feature) == "Attribute":
            level = rec.get("level", [("i", 1)])[0][1]
            pv, pl = self.potency(decl)
            if self.verdict(pv, pl, level) != "Required":
                raise Err("PotencyViolation", feature)
        if not void and is_list and pos == len(values) + 1 and bound is not None \
                and len(values) + 1 > bound:
            raise Err("CardinalityViolation", feature)
        self.check_integrity(eid, rec, kind, feature, pos, value, values, cont)
        if void:
            del values[pos - 1]
            if not values:
                del rec[feature]
        elif feature not in rec:
            rec[feature] = [value]
        elif pos == len(values) + 1:
            values.append(value)
        else:
            values[pos - 1] = value

    def check_type(self, kind, feature, decl, value):
        if decl is None:
            vk = VK[kind][feature]
            if vk in RANK:
                if value[0] != "ref" or kind_of(value[1]) != vk:
                    raise Err("TypeMismatch", feature)
                if not self.alive(value[1]):
                    raise Err("UnknownIdentifier", value[1])
            elif vk == "str":
                if value[0] != "s":
                    raise Err("TypeMismatch", feature)
            elif vk in ("nat", "int"):
                if value[0] != "i" or (vk == "nat" and value[1] < 0):
                    raise Err("TypeMismatch", feature)
            elif vk == "bool":
                if value[0] != "b":
                    raise Err("TypeMismatch", feature)
            elif vk == "bound":
                if not (value[0] == "star" or (value[0] == "i" and value[1] >= 0)):
                    raise Err("TypeMismatch", feature)
            elif vk == "cls":
                if value[0] != "s" or value[1] not in ("logical", "physical"):
                    raise Err("TypeMismatch", feature)
            elif vk == "prim":
                if value[0] != "s" or value[1] not in PRIMS:
                    raise Err("TypeMismatch", feature)
            return
        if kind_of(feature) == "Attribute":
            prim = self.primitive_of(decl)
            if prim is None or not self.match_prim(value, prim):
                raise Err("TypeMismatch", feature)
            return
        if value[0] != "ref" or kind_of(value[1]) != "Instance":
            raise Err("TypeMismatch", feature)
        if not self.alive(value[1]):
            raise Err("UnknownIdentifier", value[1])
        target = decl.get("target")
        vmeta = self.el[value[1]].get("meta")
        if not target or not vmeta or vmeta[0][1] not in self.el \
                or not self.conforms(vmeta[0][1], target[0][1]):
            raise Err("TypeMismatch", feature)

    def guard_departing(self, class_id, departing):
        if not departing:
            return
        blockers = []
        for inst in sorted(self.el, key=skey):
            rec = self.el[inst]
            meta = rec.get("meta")
            if kind_of(inst) != "Instance" or not meta or meta[0][1] not in self.el \
                    or not self.conforms(meta[0][1], class_id):
                continue
            if any(rec.get(d) for d in departing):
                blockers.append(inst)
        if blockers:
            raise Err("IntegrityViolation", self.ids(blockers))

    def check_integrity(self, eid, rec, kind, feature, pos, value, values, cont):
        void = value[0] == "void"
        if void and feature in ("meta", "classification"):
            raise Err("IntegrityViolation", eid)
        if feature == "meta":
            level = rec.get("level", [("i", 1)])[0][1]
            if level + 1 != 2:
                raise Err("LevelViolation", value[1])
            new_eff = set(self.decls_of(self.chain(value[1])))
            carrying = [k for k in rec if ":" in k and rec.get(k) and k not in new_eff]
            if carrying:
                raise Err("IntegrityViolation", self.ids(carrying))
            return
        if kind == "Class" and feature == "parent":
            if not void:
                inh = self.el[value[1]]
                sub = inh.get("subclass")
                if not sub or sub[0][1] != eid:
                    raise Err("IntegrityViolation", value[1])
                sup = inh.get("superclass")
                new_sup = sup[0][1] if sup and sup[0][1] in self.el else None
                if new_sup is not None and (new_sup == eid or eid in self.chain(new_sup)):
                    raise Err("IntegrityViolation", value[1])
            else:
                new_sup = None
            departing = set(self.decls_of(self.chain(eid))) - set(
                self.decls_of(self.chain(eid, new_sup, True)))
            self.guard_departing(eid, departing)
            return
        if kind == "Inheritance" and feature in ("subclass", "superclass"):
            linked = next((c for c in sorted(self.el, key=skey)
                           if kind_of(c) == "Class" and self.el[c].get("parent")
                           and self.el[c]["parent"][0][1] == eid), None)
            if feature == "subclass":
                if linked is not None and (void or value[1] != linked):
                    raise Err("IntegrityViolation", linked)
                return
            if linked is None:
                return
            new_sup = None if void else value[1]
            if new_sup is not None and (new_sup == linked or linked in self.chain(new_sup)):
                raise Err("IntegrityViolation", value[1])
            departing = set(self.decls_of(self.chain(linked))) - set(
                self.decls_of(self.chain(linked, new_sup, True)))
            self.guard_departing(linked, departing)
            return
        if kind == "Attribute" and feature in ("potency", "perlevel", "datatype", "upper"):
            self.guard_attribute(eid, rec, feature, value)
            return
        if kind == "DataType" and feature == "primitive":
            blockers = []
            prim = None if void else value[1]
            for attr in sorted(self.el, key=skey):
                if kind_of(attr) != "Attribute" or not self.el[attr].get("datatype") \
                        or self.el[attr]["datatype"][0][1] != eid:
                    continue
                for inst in self.holders(attr):
                    vals = self.el[inst][attr]
                    if prim is None or not all(self.match_prim(v, prim) for v in vals):
                        blockers.append(inst)
            if blockers:
                raise Err("IntegrityViolation", self.ids(blockers))
            return
        if kind in ("Composition", "Association") and feature in ("target", "upper"):
            blockers = []
            for inst in self.holders(eid):
                vals = self.el[inst][eid]
                if feature == "target":
                    for v in vals:
                        vm = self.el[v[1]].get("meta") if v[1] in self.el else None
                        if void or not vm or vm[0][1] not in self.el \
                                or not self.conforms(vm[0][1], value[1]):
                            blockers.append(inst)
                            break
                else:
                    bound = "*" if void else ("*" if value[0] == "star" else value[1])
                    if bound != "*" and len(vals) > bound:
                        blockers.append(inst)
            if blockers:
                raise Err("IntegrityViolation", self.ids(blockers))
            return
        if kind == "Class" and feature in DECL_LISTS:
            if pos <= len(values):
                departing = values[pos - 1][1]
                if void or value[1] != departing:
                    self.guard_departing(eid, {departing})
            if void:
                return
        if cont and not void:
            child = value[1]
            up, seen, cur = [], {eid}, eid
            while True:
                found = self.container_of(cur)
                if not found or found[0] in seen:
                    break
                up.append(found[0])
                seen.add(found[0])
                cur = found[0]
            if child == eid or child in up:
                raise Err("IntegrityViolation", child)
            found = self.container_of(child)
            if found is not None and found != (eid, feature, pos):
                raise Err("IntegrityViolation", found[0])

    def guard_attribute(self, attr, rec, feature, value):
        insts = self.holders(attr)
        if not insts:
            return
        void = value[0] == "void"
        blockers = []
        if feature in ("potency", "perlevel"):
            pv, pl = self.potency(rec)
            if feature == "potency":
                pv = 1 if void else value[1]
            else:
                pl = False if void else value[1]
            for inst in insts:
                level = self.el[inst].get("level", [("i", 1)])[0][1]
                if self.verdict(pv, pl, level) != "Required":
                    blockers.append(inst)
        elif feature == "datatype":
            prim = None
            if not void and value[1] in self.el:
                p = self.el[value[1]].get("primitive")
                prim = p[0][1] if p else None
            for inst in insts:
                vals = self.el[inst][attr]
                if prim is None or not all(self.match_prim(v, prim) for v in vals):
                    blockers.append(inst)
        elif feature == "upper":
            bound = 1 if void else ("*" if value[0] == "star" else value[1])
            if bound != "*":
                for inst in insts:
                    if len(self.el[inst][attr]) > bound:
                        blockers.append(inst)
        if blockers:
            raise Err("IntegrityViolation", self.ids(blockers))

    def delete(self, eid):
        if not self.alive(eid):
            raise Err("UnknownIdentifier", eid)
        if eid == "RootFolder:1":
            raise Err("RootDeletion", "RootFolder:1")
        order, seen, stack = [], set(), [eid]
        while stack:
            cur = stack.pop()
            if cur in seen or cur not in self.el:
                continue
            seen.add(cur)
            order.append(cur)
            rec = self.el[cur]
            kids = []
            for key in self.cont_keys(cur, rec):
                kids.extend(v[1] for v in rec.get(key, []))
            stack.extend(reversed(kids))
        blockers = set()
        for holder in sorted(self.el, key=skey):
            if holder in seen:
                continue
            rec = self.el[holder]
            cont = set(self.cont_keys(holder, rec))
            for key, vals in rec.items():
                if ":" in key and key in seen and vals:
                    blockers.add(holder)
                    break
                hit = any(v[0] == "ref" and v[1] in seen and not (key in cont and v[1] == eid)
                          for v in vals)
                if hit:
                    blockers.add(holder)
                    break
        if blockers:
            raise Err("IntegrityViolation", self.ids(blockers))
        found = self.container_of(eid)
        if found:
            holder, key, pos = found
            del self.el[holder][key][pos - 1]
            if not self.el[holder][key]:
                del self.el[holder][key]
        for member in order:
            del self.el[member]
            self.dead.add(member)

    # -- wire ---------------------------------------------------------------
    def execute(self, line):
        try:
            t = tok(line)
            if not t:
                raise Err("ParseError", "malformed request")
            if t[0] == "create" and len(t) == 2 and not t[1].startswith('"') and t[1]:
                if ":" in t[1] and not is_id(t[1]):
                    raise Err("ParseError", "malformed request")
                return "ok " + self.create(t[1])
            if t[0] == "read" and len(t) == 3:
                vals = self.read(self.rid(t[1]), self.feat(t[2]))
                return ("ok " + " ".join(rend(v) for v in vals)).rstrip()
            if t[0] == "update" and len(t) == 5:
                if not (t[3].isdigit() and t[3] == str(int(t[3])) and int(t[3]) >= 1):
                    raise Err("ParseError", "malformed request")
                self.update(self.rid(t[1]), self.feat(t[2]), int(t[3]), lit(t[4]))
                return "ok"
            if t[0] == "delete" and len(t) == 2:
                self.delete(self.rid(t[1]))
                return "ok"
            raise Err("ParseError", "malformed request")
        except Err as e:
            return e.line

    def rid(self, token):
        if not is_id(token):
            raise Err("ParseError", "malformed request")
        return token

    def feat(self, token):
        if token.startswith('"') or not token:
            raise Err("ParseError", "malformed request")
        if ":" in token and not is_id(token):
            raise Err("ParseError", "malformed request")
        return token

    def serialize(self):
        lines = ["metacore-snapshot v1"]
        lines += [f"capacity {k} {self.cap[k]}" for k in KINDS]
        lines += [f"fresh {k} {self.fresh[k]}" for k in KINDS]
        for kind in KINDS:
            for index in range(1, self.fresh[kind]):
                eid = f"{kind}:{index}"
                if eid in self.dead:
                    lines.append(f"tombstone {eid}")
                    continue
                rec = self.el[eid]
                parts = [eid]
                for name, _, _vk in CATALOG[kind]:
                    if rec.get(name):
                        parts.append(name + "=" + ",".join(rend(v) for v in rec[name]))
                for key in sorted((k for k in rec if ":" in k), key=skey):
                    if rec[key]:
                        parts.append(key + "=" + ",".join(rend(v) for v in rec[key]))
                lines.append(" ".join(parts))
        return ("\n".join(lines) + "\n").encode("utf-8")
