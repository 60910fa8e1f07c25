"""
Reading and writing LIBSVM files
================================

Parses sparse ``label idx:val`` text, shows the three label mappings used
for multi-class sources, and round-trips a dataset through a gzip file.
"""

import tempfile
from pathlib import Path

from scwlearn.data import (LabelMapping, load_libsvm, load_manifest, parse_libsvm,
                           save_libsvm)

text = """\
3 1:0.5 4:1.5   # feature indices are 1-based and ascending
1 2:-1
2 1:2 3:0.25
1
"""

# 'ova:1' keeps everything, class 1 -> +1 and the rest -> -1
ova = parse_libsvm(text.splitlines(), LabelMapping.parse("ova:1"))
print("ova:1 ", ova.labels.tolist(), "dim", ova.dim)

# 'pair:1,2' keeps only classes 1 and 2
pair = parse_libsvm(text.splitlines(), LabelMapping.parse("pair:1,2"))
print("pair:1,2", pair.labels.tolist())

# an example with no features is legal; learners predict +1 and skip the update
print("last example is zero:", ova[-1].is_zero())

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "tiny.libsvm.gz"
    save_libsvm(ova, path)
    back = load_libsvm(path)
    print("round trip equal:", back.examples == ova.examples, "name:", back.name)

# public benchmark files are described in a bundled manifest
for name, entry in load_manifest().items():
    print(f"{name:>10}: {entry['examples']:>7} examples, {entry['features']:>6} features, "
          f"labels {entry['label_mapping']}")
