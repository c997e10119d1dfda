#!/usr/bin/env python3
"""Regenerate the synthetic demo fixtures under data/fixtures/ (fixed seed)."""

import json
import math
import os
import random

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
OUT = os.path.join(ROOT, "data", "fixtures")

rng = random.Random(20240611)

GREEN_TOPICS = {
    "solar": {
        "cpc": ["Y02E 10/50", "H01L 31/04", "H02S 40/38"],
        "words": "solar module photovoltaic cell panel inverter sunlight silicon wafer array tracker roof irradiance".split(),
        "phrases": ["solar panels", "photovoltaic", "renewable energy", "clean energy", "solar energy"],
    },
    "wind": {
        "cpc": ["F03D 1/06", "Y02E 10/72", "F03D 7/02"],
        "words": "wind rotor blade tower nacelle gearbox hub turbine yaw pitch generator offshore".split(),
        "phrases": ["wind turbines", "windmill", "renewable energy", "windpower"],
    },
    "fuelcell": {
        "cpc": ["H01M 8/10", "Y02E 60/50", "H01M 4/86"],
        "words": "hydrogen electrode membrane anode cathode stack electrolyte proton oxygen platinum humidifier".split(),
        "phrases": ["fuel cells", "fuelcell", "electrochemical fuel cell", "hydrogen production"],
    },
    "water": {
        "cpc": ["C02F 1/44", "C02F 3/28", "B01D 61/02"],
        "words": "water membrane sludge effluent filtration basin pump chlorine pollutant settling tank sewage".split(),
        "phrases": ["water treatment", "reverse osmosis", "membrane filtration", "seawater desalination",
                    "ultrafiltration water treatment"],
    },
    "bio": {
        "cpc": ["C12P 7/10", "C10L 5/44", "Y02E 50/30"],
        "words": "biomass ferment yeast straw cellulose digester sugar feedstock lignin residue enzyme methane".split(),
        "phrases": ["biofuel", "anaerobic digestion", "bioethanol", "biomass", "biodiesel"],
    },
    "recycle": {
        "cpc": ["B09B 3/00", "Y02W 30/62", "B29B 17/02"],
        "words": "scrap shredder plastic bottle pellet sorting granulate container packaging polymer melt flake".split(),
        "phrases": ["recycling", "recycled materials", "waste recycling", "recyclable", "circular economy"],
    },
    "ev": {
        "cpc": ["B60L 50/60", "Y02T 10/70", "B60L 7/10"],
        "words": "vehicle battery charger motor wheel torque inverter drivetrain controller pack axle brake".split(),
        "phrases": ["electric vehicles", "regenerative braking", "hybrid vehicle", "electric powertrain"],
    },
}

OTHER_TOPICS = {
    "chem": {
        "cpc": ["B01J 23/40", "C07C 2/00", "B01J 37/02"],
        "words": "catalyst oxide metal support precursor impregnate calcine honeycomb sphere paste zeolite alumina".split(),
    },
    "med": {
        "cpc": ["A61K 9/20", "A61B 5/00", "A61P 35/00"],
        "words": "patient tablet dose compound receptor antibody tumor injection formulation therapy sensor implant".split(),
    },
    "comp": {
        "cpc": ["G06F 16/20", "H04L 9/32", "G06N 3/08"],
        "words": "processor memory packet server client query network encryption display user image layer".split(),
    },
    "mech": {
        "cpc": ["F16H 1/28", "B23K 26/00", "F16B 5/02"],
        "words": "gear shaft bearing bolt spring lever housing clamp weld flange seal piston".split(),
    },
}

FILLER = ("the invention relates to a method for producing an apparatus comprising a unit wherein said "
          "device is arranged to provide an improved arrangement with a first and a second element").split()
VERBS = "comprises includes provides controls holds connects supplies forms reduces measures".split()
NEOLOGISMS = ["graphene", "perovskite", "blockchain", "lidar", "nanowire", "metamaterial", "crispr",
              "exoskeleton", "microfluidic", "quantum", "biochar", "powerwall", "hyperloop", "smartmeter"]

GREEN_FUEL = ("The method for producing green fuel comprises a fermentation of vegetable materials, a separation "
              "of the fermented suspension, an anaerobic digestion of said organic material suspension, producing "
              "electricity and heat by combusting this biogas, and supplying energy to at least one step of the method.")
CATALYST = ("The invention relates to a method for the preparation of metal or metal oxide catalysts that are supported "
            "on porous materials. The inventive method is characterised in that it comprises the following steps "
            "consisting in: impregnating activated carbon with a catalytically-active phase or with precursors of the "
            "catalytically-active phase, shaping a paste, forming structures such as honeycomb or spheres, and "
            "subjecting the product to heat treatment to eliminate the activated carbon.")


def sentence(words, year):
    n = rng.randint(6, 11)
    out = []
    for _ in range(n):
        r = rng.random()
        if r < 0.45:
            out.append(rng.choice(words))
        elif r < 0.8:
            out.append(rng.choice(FILLER))
        else:
            out.append(rng.choice(VERBS))
    if year >= 2000 and rng.random() < 0.25:
        k = min(len(NEOLOGISMS), 1 + (year - 2000) // 2)
        out.insert(rng.randrange(len(out) + 1), rng.choice(NEOLOGISMS[:k]))
    if rng.random() < 0.2:
        a, b = rng.randint(2, 90), rng.randint(2, 90)
        out.append(rng.choice([f"{a} x {b} mm", f"{a} mm", f"{a}", f"{a}x{b}"]))
    return " ".join(out)


def make_patents():
    records = []
    n = 420
    years = []
    for i in range(n):
        if i < 70:
            years.append(rng.randint(1965, 1979))
        else:
            years.append(rng.randint(1980, 2022))
    topics = list(GREEN_TOPICS) + list(OTHER_TOPICS)
    families = []
    for i in range(n):
        prio = years[i]
        is_green_topic = rng.random() < 0.45
        topic = rng.choice(list(GREEN_TOPICS)) if is_green_topic else rng.choice(list(OTHER_TOPICS))
        spec = GREEN_TOPICS.get(topic) or OTHER_TOPICS[topic]
        words = spec["words"]
        title_words = [rng.choice(words) for _ in range(rng.randint(2, 4))]
        title = " ".join(title_words).capitalize()
        sentences = [sentence(words, prio) for _ in range(rng.randint(2, 4))]
        if is_green_topic and rng.random() < 0.8:
            phrase = rng.choice(spec["phrases"])
            sentences.insert(rng.randrange(len(sentences) + 1), f"for {phrase} applications")
        if not is_green_topic and topic == "chem" and rng.random() < 0.4:
            # generic carbon mention without a capture context
            sentences.append("the carbon content is low")
        abstract = ". ".join(s[0].upper() + s[1:] for s in sentences) + "."
        codes = rng.sample(spec["cpc"], rng.randint(1, 2))
        if rng.random() < 0.2:
            other = rng.choice(topics)
            codes.append(rng.choice((GREEN_TOPICS.get(other) or OTHER_TOPICS[other])["cpc"]))
        codes = list(dict.fromkeys(codes))
        green_codes = any(c.startswith(("Y02", "C02F", "F03D", "H01M", "B09B", "C10L", "B60L", "H02S")) for c in codes)
        baseline_green = rng.random() < (0.92 if green_codes else 0.12)
        granted = rng.random() < 0.85
        grant_year = prio + rng.randint(1, 5) if granted else None
        if grant_year is not None and grant_year > 2023:
            grant_year = None
        if families and rng.random() < 0.15:
            fam = rng.choice(families)
        else:
            fam = f"F{len(families) + 1:05d}"
            families.append(fam)
        cites = int(math.floor(rng.expovariate(0.25))) if rng.random() > 0.03 else None
        records.append({
            "patent_id": f"{rng.choice(['EP', 'US', 'WO'])}{1000000 + i * 37:07d}",
            "family_id": fam,
            "title": title,
            "abstract": abstract,
            "cpc_codes": codes,
            "priority_year": prio,
            "grant_year": grant_year,
            "citation_count": cites,
            "family_size": rng.randint(1, 8),
            "baseline_green": baseline_green,
        })
    records.append({"patent_id": "EP2950001", "family_id": "F90001", "title": "Method for producing green fuel",
                    "abstract": GREEN_FUEL, "cpc_codes": ["C10L 3/00", "Y02E 50/30"], "priority_year": 2011,
                    "grant_year": 2015, "citation_count": 7, "family_size": 4, "baseline_green": True})
    records.append({"patent_id": "EP2950002", "family_id": "F90002",
                    "title": "Preparation of supported metal oxide catalysts", "abstract": CATALYST,
                    "cpc_codes": ["B01J 37/02", "B01D 53/86"], "priority_year": 2012, "grant_year": 2016,
                    "citation_count": 3, "family_size": 2, "baseline_green": True})
    return records


def write_patents(records):
    lines = [json.dumps(r, ensure_ascii=False) for r in records]
    # one malformed row: abstract missing
    bad = dict(records[5])
    bad["patent_id"] = "EP9999999"
    del bad["abstract"]
    lines.insert(40, json.dumps(bad))
    with open(os.path.join(OUT, "patents.jsonl"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


OLD_EU = ["DE", "FR", "IT", "ES", "NL", "SE", "AT", "BE"]
NEW_EU = ["PL", "CZ", "HU", "RO"]
NACE = ["20", "25", "26", "27", "28", "29"]


def fmt(x):
    return repr(round(x, 6))


def logistic(z):
    return 1.0 / (1.0 + math.exp(-z))


def make_firms():
    rows = []
    n_firms = 320
    for f in range(n_firms):
        country = rng.choice(OLD_EU) if rng.random() < 0.7 else rng.choice(NEW_EU)
        nace = rng.choice(NACE)
        log_emp = rng.gauss(4.0, 1.0)
        age0 = rng.randint(1, 60)
        log_ci = rng.gauss(0.0, 0.8)
        roce = rng.gauss(0.08, 0.1)
        patenting_propensity = rng.gauss(0.0, 1.0)
        firm_effect = rng.gauss(0.0, 0.3)
        for year in range(2010, 2020):
            log_ci_new = 0.7 * log_ci + rng.gauss(0.0, 0.4)
            roce_new = 0.6 * roce + 0.03 + rng.gauss(0.0, 0.05)
            patent = rng.random() < logistic(-0.3 + patenting_propensity + 0.3 * (log_emp - 4.0))
            tg = patent and rng.random() < logistic(-1.2 + 0.9 * log_ci)
            hn = patent and rng.random() < 0.45
            emp = math.exp(log_emp + rng.gauss(0.0, 0.05))
            log_sales = 2.0 + 0.9 * log_emp + 0.2 * log_ci_new + firm_effect + 0.5 * tg + rng.gauss(0.0, 0.3)
            sales = math.exp(log_sales)
            share = min(1.0, sales / 60000.0)
            lab = sales / emp
            ci = math.exp(log_ci_new)
            ebit = 0.1 * sales + rng.gauss(0.0, 3.0)
            tfp = math.exp(0.5 + 0.1 * tg + rng.gauss(0.0, 0.2))
            row = {
                "firm_id": f"FIRM{f:04d}", "year": str(year), "country": country, "nace2": nace,
                "employees": fmt(emp), "age_years": str(age0 + year - 2010), "sales": fmt(sales),
                "market_share": fmt(share), "labor_productivity": fmt(lab), "capital_intensity": fmt(ci),
                "roce": fmt(roce_new), "ebit": fmt(ebit), "tfp": fmt(tfp),
                "granted_patent": "true" if patent else "false",
                "granted_true_green": "true" if tg else "false",
                "granted_high_novelty": "true" if hn else "false",
            }
            for key in ("tfp", "ebit", "labor_productivity"):
                if rng.random() < 0.03:
                    row[key] = ""
            rows.append(row)
            log_ci, roce = log_ci_new, roce_new
            log_emp += rng.gauss(0.01, 0.03)
    # panel gap: one firm skips a year
    rows = [r for r in rows if not (r["firm_id"] == "FIRM0003" and r["year"] == "2014")]
    header = list(rows[0].keys())
    with open(os.path.join(OUT, "firms.csv"), "w", encoding="utf-8") as f:
        f.write(",".join(header) + "\n")
        for r in rows:
            f.write(",".join(r[h] for h in header) + "\n")


def make_gold():
    pairs = []
    groups = [GREEN_TOPICS[t]["words"][:6] for t in GREEN_TOPICS] + [OTHER_TOPICS[t]["words"][:6] for t in OTHER_TOPICS]
    for g in groups:
        for _ in range(3):
            a, b = rng.sample(g, 2)
            pairs.append((a, b, round(rng.uniform(6.5, 9.5), 2)))
    for _ in range(20):
        g1, g2 = rng.sample(groups, 2)
        pairs.append((rng.choice(g1), rng.choice(g2), round(rng.uniform(0.5, 3.5), 2)))
    with open(os.path.join(OUT, "gold.tsv"), "w", encoding="utf-8") as f:
        f.write("word1\tword2\tscore\n")
        for a, b, s in pairs:
            f.write(f"{a}\t{b}\t{s}\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    write_patents(make_patents())
    make_firms()
    make_gold()


if __name__ == "__main__":
    main()
