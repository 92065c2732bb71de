#!/usr/bin/env python3
"""Build the CSV copies of the three UCI benchmark datasets under data/.

The UCI files are taken from two PyPI wheels that vendor them verbatim:

  * keel-ds    -> MAGIC Gamma Telescope (magic.dat), Statlog German Credit (german.dat)
  * rdatasets  -> Breast Cancer Wisconsin (Original), as MASS::biopsy (keeps the
                  sample code column and the 16 rows with a missing bare_nuclei cell)

Usage:  pip download --no-deps keel-ds rdatasets -d /tmp/wheels
        python3 scripts/prepare_datasets.py /tmp/wheels
"""
import csv
import glob
import lzma
import os
import pickle
import sys
import zipfile

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")

WISCONSIN_COLUMNS = [
    "sample_code", "clump_thickness", "cell_size_uniformity", "cell_shape_uniformity",
    "marginal_adhesion", "single_epithelial_cell_size", "bare_nuclei", "bland_chromatin",
    "normal_nucleoli", "mitoses", "class",
]
GERMAN_COLUMNS = [
    "checking_status", "duration", "credit_history", "purpose", "credit_amount", "savings",
    "employment", "installment_rate", "personal_status", "other_debtors", "residence_since",
    "property", "age", "other_installment_plans", "housing", "existing_credits", "job",
    "num_dependents", "telephone", "foreign_worker", "class",
]
TELESCOPE_COLUMNS = [
    "fLength", "fWidth", "fSize", "fConc", "fConc1", "fAsym", "fM3Long", "fM3Trans",
    "fAlpha", "fDist", "class",
]


def wheel(pattern, wheels):
    [path] = glob.glob(os.path.join(wheels, pattern))
    return zipfile.ZipFile(path)


def write(name, header, rows):
    with open(os.path.join(OUT, name), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def german(raw):
    rows = []
    for line in raw.decode().splitlines():
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 21:
            continue
        out = []
        for attr, cell in enumerate(cells[:-1], start=1):
            # qualitative codes look like A<attr><value>; keep the value as an ordinal
            out.append(cell[len("A%d" % attr):] if cell.startswith("A") else cell)
        out.append(cells[-1])
        rows.append(out)
    return rows


def main(wheels):
    keel = wheel("keel_ds-*.whl", wheels)
    base = "keel_ds/data/balanced/raw/"
    telescope = [
        [c.strip() for c in line.split(",")]
        for line in keel.read(base + "magic.dat").decode().splitlines()
        if line.strip() and not line.startswith("@")
    ]
    write("telescope.csv", TELESCOPE_COLUMNS, telescope)
    write("german.csv", GERMAN_COLUMNS, german(keel.read(base + "german.dat")))

    rdat = wheel("rdatasets-*.whl", wheels)
    df = pickle.loads(lzma.decompress(rdat.read("rdatasets/_data/MASS/biopsy.pkl.compress")))
    rows = []
    for rec in df.itertuples(index=False):
        values = [rec.ID] + [getattr(rec, "V%d" % i) for i in range(1, 10)]
        cells = []
        for v in values:
            if isinstance(v, float) and v != v:
                cells.append("?")
            elif isinstance(v, float):
                cells.append(str(int(v)))
            else:
                cells.append(str(v))
        cells.append("2" if rec._11 == "benign" else "4")
        rows.append(cells)
    write("wisconsin.csv", WISCONSIN_COLUMNS, rows)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "/tmp/wheels")
