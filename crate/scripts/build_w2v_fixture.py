"""Build the bundled word2vec fixture from the GoogleNews vectors shipped in
the `wefe` and `responsibly` wheels.

Both wheels carry subsets of the same pre-trained GoogleNews word2vec vectors
(`wefe` raw, `responsibly` unit-normalised). Rows are unit-normalised and
written in glove_text format with six decimals.

    pip download --no-deps wefe==1.0.1 responsibly==0.1.2
    python scripts/build_w2v_fixture.py wefe.whl responsibly.whl out.txt
"""
import json
import sys
import tempfile
import zipfile

import numpy as np
from gensim.models import KeyedVectors

WORDS = """
male man boy brother he him his son female woman girl sister she her hers daughter
doctor engineer lawyer mathematician banker homemaker receptionist dancer maid nurse
strong intelligent brave important pretty beautiful shy homely
king queen obnoxious considerate plain fancy attentive majestic
guy grandpa uncle nephew Mr gal grandma aunt niece scientist programmer dad mom
rational arrogant gossip moody emotional hysterical boys girls men women
father mother husband wife gentleman lady sons daughters brothers sisters
prince princess royal royalty common ordinary
John Paul Mike Kevin Steve Greg Jeff Bill Jack Tom Peter Robert David James
Amy Joan Lisa Sarah Diana Kate Ann Donna Susan Mary Emily Linda Jennifer Karen
""".split()


def main(wefe_whl, resp_whl, out, filler=450):
    tmp = tempfile.mkdtemp()
    zipfile.ZipFile(wefe_whl).extract("wefe/datasets/data/test_model.kv", tmp)
    rz = zipfile.ZipFile(resp_whl)
    for name in ("GoogleNews-vectors-negative300-bolukbasi.bin", "bolukbasi.json"):
        rz.extract("responsibly/we/data/" + name, tmp)
    raw = KeyedVectors.load(tmp + "/wefe/datasets/data/test_model.kv")
    small = KeyedVectors.load_word2vec_format(
        tmp + "/responsibly/we/data/GoogleNews-vectors-negative300-bolukbasi.bin",
        binary=True,
    )
    data = json.load(open(tmp + "/responsibly/we/data/bolukbasi.json"))["gender"]

    words = list(WORDS)
    words += [p[0] for p in data["professions"] if "_" not in p[0]]
    for pairs in (data["definitional_pairs"], data["equalize_pairs"]):
        for a, b in pairs:
            words += [a, b]
    words += [w for w in small.index_to_key[:filler] if w.isalpha()]

    seen, rows = set(), []
    for w in words:
        if w in seen:
            continue
        if w in raw.key_to_index:
            v = np.asarray(raw[w], dtype=np.float64)
        elif w in small.key_to_index:
            v = np.asarray(small[w], dtype=np.float64)
        else:
            continue
        seen.add(w)
        rows.append((w, v / np.linalg.norm(v)))

    with open(out, "w", encoding="utf-8") as fh:
        for w, v in rows:
            fh.write(w + " " + " ".join("%.6f" % x for x in v) + "\n")
    print(len(rows), "rows written to", out)


if __name__ == "__main__":
    main(*sys.argv[1:4])
