#!/usr/bin/env python3
"""Independent reference implementation used to produce data/golden/.

Re-derives the demo outputs that do not depend on embedding training:
tokenization, rule matching, novelty profiles, class tables, the citation
regression, premia regressions and PSM. Text and count tables are written in
the exact byte format of the CLI; numeric regression/matching tables are
compared with a tolerance by the test suite.
"""

import configparser
import json
import math
import os
import re
import sys
from decimal import Decimal

import numpy as np
import statsmodels.api as sm

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")
OUT = os.path.join(DATA, "golden")

UNITS = set("""nm um mm cm dm m km ft inch g mg kg l ml w kw mw gw wh kwh mwh gwh v kv mv ma ah mah hz khz mhz
ghz pa kpa mpa gpa bar mbar psi ms rpm db mol ppm wt vol nm3 m2 m3 cm2 cm3 mm2 kj mj kcal lm lx""".split())
NUM = r"\d+(?:[.,]\d+)*"
UNIT_ALT = "|".join(sorted((re.escape(u) for u in UNITS), key=len, reverse=True))
RUN_RE = re.compile(r"(?:[a-z0-9]|(?<=[0-9])[.,](?=[0-9]))+")
NUM_RE = re.compile(rf"^{NUM}$")
TERM = rf"{NUM}(?:{UNIT_ALT})?"
ATTACHED_RE = re.compile(rf"^{TERM}(?:x{TERM})*$")


# ---------------------------------------------------------------- formatting

def fmt_num(v):
    """Shortest round-trip, fixed vs scientific by length (fixed on ties), integral without '.0'."""
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return ""
    if v == 0:
        return "0"
    r = repr(float(v))
    d = Decimal(r)
    sign, digits, exp = d.as_tuple()
    ds = "".join(map(str, digits)).rstrip("0") or "0"
    exp += len("".join(map(str, digits))) - len(ds)
    # value = ds * 10^exp
    n = len(ds)
    point = n + exp  # position of decimal point relative to start of ds
    if point <= 0:
        fixed = "0." + "0" * (-point) + ds
    elif point >= n:
        fixed = ds + "0" * (point - n)
    else:
        fixed = ds[:point] + "." + ds[point:]
    e10 = point - 1
    mant = ds[0] + ("." + ds[1:] if n > 1 else "")
    sci = f"{mant}e{'-' if e10 < 0 else '+'}{abs(e10):02d}"
    s = fixed if len(fixed) <= len(sci) else sci
    return ("-" if sign else "") + s


def csv_cell(s):
    s = str(s)
    if any(c in s for c in ',"\n\r'):
        return '"' + s.replace('"', '""') + '"'
    return s


# ---------------------------------------------------------------- resources

def read_data_lines(path):
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            yield line


class Resources:
    def __init__(self, stop, lem, pos):
        self.stop = {l.strip().lower() for l in read_data_lines(stop)}
        self.lemma = {}
        for l in read_data_lines(lem):
            a, b = l.split("\t")
            self.lemma[a.strip().lower()] = b.strip().lower()
        self.pos = {}
        for l in read_data_lines(pos):
            a, b = l.split("\t")
            self.pos[a.strip().lower()] = b.strip()
        # resolve chains
        for k in list(self.lemma):
            seen = {k}
            cur = self.lemma[k]
            while cur in self.lemma and cur not in seen:
                seen.add(cur)
                cur = self.lemma[cur]
            self.lemma[k] = cur

    def keep(self, w):
        if w in self.stop:
            return False
        return self.pos.get(w, "NOUN") != "OTHER"

    def tokens(self, text):
        if any(ord(c) > 127 for c in text):
            raise SystemExit("oracle handles ASCII fixtures only")
        runs = RUN_RE.findall(text.lower())
        kinds = []
        for r in runs:
            if NUM_RE.match(r):
                kinds.append("num")
            elif ATTACHED_RE.match(r) and (("x" in r and r[0].isdigit()) or re.match(rf"^{NUM}(?:{UNIT_ALT})", r)):
                kinds.append("measure")
            else:
                kinds.append("word")
        # the attached test above is redundant for pure numbers; recheck unit-less single terms
        for i, r in enumerate(runs):
            if kinds[i] == "measure" and re.fullmatch(NUM, r):
                kinds[i] = "num"
        out = []
        i = 0
        while i < len(runs):
            k = kinds[i]
            if k in ("num", "measure"):
                has_unit = k == "measure"
                j = i + 1
                if k == "num" and j < len(runs) and kinds[j] == "word" and runs[j] in UNITS:
                    has_unit = True
                    j += 1
                terms = 1
                while j + 1 < len(runs) and kinds[j] == "word" and runs[j] == "x" and kinds[j + 1] in ("num", "measure"):
                    j += 1
                    if kinds[j] == "measure":
                        has_unit = True
                        j += 1
                    elif j + 1 < len(runs) and kinds[j + 1] == "word" and runs[j + 1] in UNITS:
                        has_unit = True
                        j += 2
                    else:
                        j += 1
                    terms += 1
                out.append("<measure>" if (terms >= 2 or has_unit) else "<num>")
                i = j
                continue
            w = runs[i]
            lem = self.lemma.get(w, w)
            if self.keep(w) and self.keep(lem):
                out.append(lem)
            i += 1
        return out


# ---------------------------------------------------------------- corpus

FIELDS = ["patent_id", "family_id", "title", "abstract", "cpc_codes", "priority_year", "grant_year",
          "citation_count", "family_size", "baseline_green"]


def load_corpus(path):
    good, rejects = [], []
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            obj = json.loads(line)
            missing = [k for k in ("patent_id", "family_id", "title", "abstract", "cpc_codes", "family_size",
                                   "baseline_green") if k not in obj]
            if missing:
                rejects.append({"line": n, "reason": f"missing field: {missing[0]}", "raw": line})
                continue
            good.append({k: obj.get(k) for k in FIELDS})
    good.sort(key=lambda r: r["patent_id"])
    return good, rejects


def dumps(obj):
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


# ---------------------------------------------------------------- rules

def compile_rules(path, res):
    rules = []
    for line in read_data_lines(path):
        f = line.split("\t")
        if f[0] == "S":
            r = ("S", tuple(res.tokens(f[1])), (), 20)
        else:
            groups, cur = [], []
            for w in f[2].split():
                if w == "OR":
                    groups.append(cur)
                    cur = []
                else:
                    cur.append(w)
            groups.append(cur)
            alts = []
            for g in groups:
                t = tuple(res.tokens(" ".join(g)))
                if t and t not in alts:
                    alts.append(t)
            window = int(f[3]) if len(f) > 3 and f[3].strip() else 20
            r = ("C", tuple(res.tokens(f[1])), tuple(alts), window)
        if r not in rules:
            rules.append(r)
    return rules


def label(rule):
    kind, phrase, alts, window = rule
    if kind == "S":
        return " ".join(phrase)
    return f"{' '.join(phrase)} & {' OR '.join(' '.join(a) for a in alts)} [{window}]"


def starts(tokens, phrase):
    n = len(phrase)
    return [i for i in range(len(tokens) - n + 1) if tuple(tokens[i:i + n]) == phrase]


def match(tokens, rules):
    fired = []
    for rule in rules:
        kind, phrase, alts, window = rule
        ks = starts(tokens, phrase)
        if not ks:
            continue
        if kind == "S":
            fired.append({"rule": label(rule), "kind": "single", "positions": ks})
            continue
        best = None
        for a in alts:
            for p in starts(tokens, a):
                for k in ks:
                    cand = (abs(k - p), k, p)
                    if best is None or cand < best:
                        best = cand
        if best is not None and best[0] <= window:
            fired.append({"rule": label(rule), "kind": "cooc", "positions": [best[1], best[2]]})
    return fired


# ---------------------------------------------------------------- novelty

def grams(tokens):
    u = set(tokens)
    b = {" ".join(tokens[i:i + 2]) for i in range(len(tokens) - 1)}
    t = {" ".join(tokens[i:i + 3]) for i in range(len(tokens) - 2)}
    su = sorted(u)
    p = {f"{su[i]} {su[j]}" for i in range(len(su)) for j in range(i + 1, len(su))}
    return u, b, t, p


def novelty(patents, res, cutoff, q):
    seen = [set(), set(), set(), set()]
    for p in patents:
        if p["priority_year"] is not None and p["priority_year"] < cutoff:
            for s, g in zip(seen, grams(res.tokens(p["abstract"]))):
                s |= g
    later = sorted((p for p in patents if p["priority_year"] is not None and p["priority_year"] >= cutoff),
                   key=lambda p: (p["priority_year"], p["patent_id"]))
    rows = []
    for p in later:
        g = grams(res.tokens(p["title"]) + res.tokens(p["abstract"]))
        counts = [len(x - s) for x, s in zip(g, seen)]
        for s, x in zip(seen, g):
            s |= x
        rows.append([p["patent_id"], p["priority_year"]] + counts)
    by_year = {}
    for r in rows:
        by_year.setdefault(r[1], []).append(r[5])
    thr = {y: float(np.quantile(np.array(v, dtype=float), 1.0 - q)) for y, v in by_year.items()}
    lines = ["patent_id,new_unigrams,new_bigrams,new_trigrams,new_pairs,high_novelty"]
    for r in rows:
        lines.append(",".join([r[0]] + [str(c) for c in r[2:]] + ["1" if r[5] >= thr[r[1]] else "0"]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- stats

def class_table(patents, tg, level):
    by = {}
    for p, t in zip(patents, tg):
        classes = {c.strip()[:level].upper() for c in p["cpc_codes"] if len(c.strip()) >= level}
        for c in classes:
            row = by.setdefault(c, [0, 0, 0])
            row[0] += 1
            row[1] += bool(p["baseline_green"])
            row[2] += bool(t)
    return [(c, *by[c]) for c in sorted(by)]


def rca(counts, idx):
    g = [c[idx] for c in counts]
    n = [c[1] - c[idx] for c in counts]
    out = []
    for i in range(len(counts)):
        gr = sum(g) - g[i]
        nr = sum(n) - n[i]
        out.append((g[i] / n[i]) / (gr / nr) if n[i] > 0 and gr > 0 and nr > 0 else None)
    return out


# ---------------------------------------------------------------- econometrics

def independent_columns(X, names, n_nuisance):
    keep = []
    R = np.linalg.qr(X, mode="r") if X.shape[1] else None
    for j in range(X.shape[1]):
        norm = np.linalg.norm(X[:, j])
        rjj = abs(R[j, j]) if j < R.shape[0] else 0.0
        if norm > 0 and rjj > 1e-9 * norm:
            keep.append(j)
        elif j < X.shape[1] - n_nuisance:
            raise SystemExit(f"collinear main column {names[j]}")
    return keep


def dummies(labels, prefix):
    levels = sorted(set(labels))[1:]
    cols = np.array([[1.0 if l == lv else 0.0 for lv in levels] for l in labels]).reshape(len(labels), len(levels))
    return cols, [prefix + lv for lv in levels]


def ols_cluster(y, main, main_names, fe_blocks, clusters):
    """Dummy-variable OLS with intercept; returns rows for the main regressors."""
    Xs, names = [np.ones((len(y), 1)), main], ["const"] + main_names
    for labels, prefix in fe_blocks:
        D, nm = dummies(labels, prefix)
        Xs.append(D)
        names += nm
    X = np.hstack(Xs)
    keep = independent_columns(X, names, X.shape[1] - 1 - len(main_names))
    X = X[:, keep]
    names = [names[k] for k in keep]
    model = sm.OLS(y, X)
    fit = model.fit(cov_type="cluster", cov_kwds={"groups": np.unique(clusters, return_inverse=True)[1],
                                                  "use_correction": True, "df_correction": True}, use_t=True)
    out = []
    for name in main_names:
        j = names.index(name)
        out.append((name, fit.params[j], fit.bse[j], fit.tvalues[j], fit.pvalues[j], int(fit.nobs), fit.rsquared_adj))
    return out


def reg_lines(outcome, rows):
    return [",".join([outcome, n] + [fmt_num(float(v)) for v in (c, s, t, p)] + [str(nobs), fmt_num(float(a))])
            for n, c, s, t, p, nobs, a in rows]


def load_firms(path):
    import csv
    with open(path, encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    def val(r, k):
        return float(r[k]) if r[k] != "" else None
    out = []
    for r in rows:
        out.append({"firm": r["firm_id"], "year": int(r["year"]), "country": r["country"], "nace": r["nace2"],
                    **{k: val(r, k) for k in ("employees", "age_years", "sales", "market_share", "labor_productivity",
                                             "capital_intensity", "roce", "ebit", "tfp")},
                    "pat": r["granted_patent"] == "true", "tg": r["granted_true_green"] == "true",
                    "hn": r["granted_high_novelty"] == "true"})
    out.sort(key=lambda r: (r["firm"], r["year"]))
    return out


OUTCOMES = ["sales", "market_share", "labor_productivity", "capital_intensity", "roce", "ebit", "tfp"]


def outcome_value(r, o):
    v = r[o]
    if v is None:
        return None
    if o in ("sales", "labor_productivity", "capital_intensity", "tfp"):
        return math.log(v) if v > 0 else None
    if o == "roce":
        return math.asinh(v)
    return v


def premia(firms):
    lines = ["outcome,term,coef,se,t,p,n_obs,adj_r2"]
    for o in OUTCOMES:
        rows = [r for r in firms if outcome_value(r, o) is not None and r["employees"] is not None]
        y = np.array([outcome_value(r, o) for r in rows])
        main = np.array([[float(r["tg"]), float(r["pat"]), r["employees"]] for r in rows])
        res = ols_cluster(y, main, ["true_green", "patenting", "firm_size"],
                          [([r["nace"] for r in rows], "nace2_"), ([r["country"] for r in rows], "country_"),
                           ([str(r["year"]) for r in rows], "year_")], np.array([r["firm"] for r in rows]))
        lines += reg_lines(o, res)
    return "\n".join(lines) + "\n"


def psm(firms, treat, pool, outcomes=OUTCOMES):
    rows = []
    for i, r in enumerate(firms):
        t = treat(r)
        if not t and not pool(r):
            continue
        if i == 0 or firms[i - 1]["firm"] != r["firm"] or firms[i - 1]["year"] != r["year"] - 1:
            continue
        p = firms[i - 1]
        if None in (r["capital_intensity"], p["capital_intensity"], r["roce"], p["roce"], r["age_years"]):
            continue
        if r["capital_intensity"] <= 0 or p["capital_intensity"] <= 0:
            continue
        lag = math.log(p["capital_intensity"])
        rows.append({"r": r, "t": t, "x": [1.0, lag, math.log(r["capital_intensity"]) - lag, p["roce"],
                                           r["roce"] - p["roce"], math.log1p(r["age_years"])]})
    changed = True
    while changed:
        changed = False
        for key in ("country", "nace", "year"):
            tally = {}
            for row in rows:
                k = row["r"][key]
                a = tally.setdefault(k, [0, 0])
                a[0] += row["t"]
                a[1] += 1
            keep = [row for row in rows if 0 < tally[row["r"][key]][0] < tally[row["r"][key]][1]]
            if len(keep) != len(rows):
                rows, changed = keep, True
    if not any(row["t"] for row in rows):
        return None
    X = np.array([row["x"] for row in rows])
    names = ["const", "a", "b", "c", "d", "e"]
    blocks = []
    for key, prefix in (("country", "country_"), ("nace", "nace2_"), ("year", "year_")):
        D, nm = dummies([str(row["r"][key]) for row in rows], prefix)
        blocks.append(D)
        names += nm
    X = np.hstack([X] + blocks)
    keep = independent_columns(X, names, X.shape[1] - 6)
    X = X[:, keep]
    y = np.array([1.0 if row["t"] else 0.0 for row in rows])
    fit = sm.Logit(y, X).fit(method="newton", tol=1e-13, maxiter=200, disp=0)
    score = fit.predict(X)
    ids = [f"{row['r']['firm']}@{row['r']['year']}" for row in rows]
    pairs = []
    n_t = sum(1 for row in rows if row["t"])
    n_c = len(rows) - n_t
    dropped = 0
    for year in sorted({row["r"]["year"] for row in rows}):
        idx = [i for i, row in enumerate(rows) if row["r"]["year"] == year]
        tr = [i for i in idx if rows[i]["t"]]
        co = [i for i in idx if not rows[i]["t"]]
        if not tr or not co:
            continue
        lo = max(min(score[i] for i in tr), min(score[i] for i in co))
        hi = min(max(score[i] for i in tr), max(score[i] for i in co))
        if lo > hi:
            dropped += len(idx)
            continue
        inside = [i for i in idx if lo <= score[i] <= hi]
        dropped += len(idx) - len(inside)
        avail = [i for i in inside if not rows[i]["t"]]
        for t in sorted((i for i in inside if rows[i]["t"]), key=lambda i: (-score[i], ids[i])):
            if not avail:
                break
            c = min(avail, key=lambda i: (abs(score[t] - score[i]), ids[i]))
            avail.remove(c)
            pairs.append((t, c))
    lines = ["outcome,atet,se,t,n_treated,n_untreated,n_dropped_support"]
    for o in outcomes:
        d = []
        for t, c in pairs:
            a, b = outcome_value(rows[t]["r"], o), outcome_value(rows[c]["r"], o)
            if a is not None and b is not None:
                d.append(a - b)
        d = np.array(d)
        m = d.mean()
        se = d.std(ddof=1) / math.sqrt(len(d))
        lines.append(",".join([o, fmt_num(m), fmt_num(se), fmt_num(m / se), str(n_t), str(n_c), str(dropped)]))
    pair_lines = ["treated_id,control_id,score_t,score_c"] + [
        f"{ids[t]},{ids[c]},{fmt_num(score[t])},{fmt_num(score[c])}" for t, c in pairs]
    return "\n".join(lines) + "\n", "\n".join(pair_lines) + "\n"


# ---------------------------------------------------------------- main

def main():
    cfg = configparser.ConfigParser()
    cfg.read(os.path.join(DATA, "demo.ini"))
    P = lambda k: os.path.join(DATA, cfg["paths"][k])
    res = Resources(P("stopwords"), P("lemmas"), P("pos"))
    patents, rejects = load_corpus(P("corpus"))
    os.makedirs(OUT, exist_ok=True)

    def write(name, text):
        with open(os.path.join(OUT, name), "w", encoding="utf-8", newline="") as f:
            f.write(text)

    write("patents.jsonl.rejects.jsonl", "".join(dumps(r) + "\n" for r in rejects))
    write("patents.jsonl", "".join(dumps(p) + "\n" for p in patents))
    docs = [res.tokens(p["title"]) + res.tokens(p["abstract"]) for p in patents]
    write("processed.jsonl", "".join(dumps({"patent_id": p["patent_id"], "tokens": d}) + "\n" for p, d in zip(patents, docs)))

    rules = compile_rules(P("rules"), res)
    tg, lines = [], []
    for p, d in zip(patents, docs):
        fired = match(d, rules)
        t = bool(p["baseline_green"]) and bool(fired)
        tg.append(t)
        lines.append(dumps({"patent_id": p["patent_id"], "true_green": t, "fired_rules": fired}))
    write("classified.jsonl", "\n".join(lines) + "\n")

    write("novelty.csv", novelty(patents, res, int(cfg["novelty"]["cutoff_year"]), float(cfg["novelty"]["q"])))

    level = int(cfg["stats"]["class_level"])
    counts = class_table(patents, tg, level)
    cc = ["class_code,patents,green_patents,true_green_patents,true_green_pct"]
    for c, n, g, t in counts:
        cc.append(f"{c},{n},{g},{t},{fmt_num(100.0 * t / g) if g else ''}")
    write("class_counts.csv", "\n".join(cc) + "\n")
    rg, rt = rca(counts, 2), rca(counts, 3)
    write("rca.csv", "class_code,rca_green,rca_true_green\n" +
          "".join(f"{c[0]},{fmt_num(a)},{fmt_num(b)}\n" for c, a, b in zip(counts, rg, rt)))
    write("density.csv", "class_code,share\n" + "".join(f"{c},{fmt_num(t / g)}\n" for c, n, g, t in counts if g))
    years = {}
    for p, t in zip(patents, tg):
        if p["grant_year"] is None:
            continue
        a = years.setdefault(p["grant_year"], [0, 0, 0])
        a[0] += 1
        a[1] += bool(p["baseline_green"])
        a[2] += t
    write("shares.csv", "year,n_granted,n_green,n_true_green,share_green,share_true_green\n" +
          "".join(f"{y},{a[0]},{a[1]},{a[2]},{fmt_num(a[1] / a[0])},{fmt_num(a[2] / a[0])}\n"
                  for y, a in sorted(years.items())))

    # citation regression
    rows = []
    for p, t in zip(patents, tg):
        if p["citation_count"] is None or p["priority_year"] is None or p["grant_year"] is None:
            continue
        klass = next((c.strip()[:3].upper() for c in p["cpc_codes"] if len(c.strip()) >= 3), None)
        if klass is None:
            continue
        rows.append((p, t, klass))
    ref = max(p["grant_year"] for p, _, _ in rows)
    y = np.array([math.log(p["citation_count"] + 1.0) for p, _, _ in rows])
    main = np.array([[float(t), float(ref - p["grant_year"]), float(p["family_size"])] for p, t, _ in rows])
    res_c = ols_cluster(y, main, ["true_green", "age", "family_size"],
                        [([f"{k}*{p['priority_year']}" for p, _, k in rows], "g_")],
                        np.array([p["family_id"] for p, _, _ in rows]))
    write("cite_reg.csv", "outcome,term,coef,se,t,p,n_obs,adj_r2\n" + "\n".join(reg_lines("log_citations", res_c)) + "\n")

    firms = load_firms(P("firms"))
    write("premia.csv", premia(firms))
    table, pairs = psm(firms, lambda r: r["tg"], lambda r: r["pat"])
    write("psm.csv", table)
    write("psm_pairs.csv", pairs)

    avg = {}
    for r in firms:
        if r["employees"] is not None:
            avg.setdefault(r["firm"], []).append(r["employees"])
    avg = {f: sum(v) / len(v) for f, v in avg.items()}
    med = float(np.median(np.array(sorted(avg.values()))))
    old = set("AT BE DK FI FR DE GR EL IE IT LU NL PT ES SE".split())
    new = set("BG HR CY CZ EE HU LV LT MT PL RO SK SI".split())
    groups = {
        "small": [r for r in firms if r["firm"] in avg and avg[r["firm"]] <= med],
        "large": [r for r in firms if r["firm"] in avg and avg[r["firm"]] > med],
        "old_eu": [r for r in firms if r["country"] in old],
        "new_eu": [r for r in firms if r["country"] in new],
    }
    for name, sub in groups.items():
        out = psm(sub, lambda r: r["tg"], lambda r: r["pat"])
        if out:
            write(f"psm_{name}.csv", out[0])
            write(f"psm_{name}_pairs.csv", out[1])
    out = psm(firms, lambda r: r["tg"] and r["hn"], lambda r: r["hn"])
    write("psm_high_novelty.csv", out[0])
    write("psm_high_novelty_pairs.csv", out[1])


if __name__ == "__main__":
    sys.exit(main())
