"""Matrix Market, bundle, sweep CSV and report JSON files."""

import csv
import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .circuit import descriptor_from_blocks
from .descriptor import DescriptorSystem
from .exceptions import DimensionMismatch, ManifestError, ParseError
from .reduction import FrequencySweep
from .sparse import as_sparse

BUNDLE_VERSION = 1
MANIFEST = "bundle.json"
_MANIFEST_KEYS = {"format_version", "matrices", "dimensions", "ports", "description"}
_MATRIX_ROLES = {"E", "A", "G", "C", "M", "W", "B", "L", "D"}
_DIMENSION_KEYS = {"N", "n", "m", "p", "q"}
_PORT_KEYS = {"inputs", "outputs"}


def read_matrix_market(path):
    """Read a real coordinate Matrix Market file into a canonical CSR matrix.

    Duplicate entries are summed, explicit zeros dropped and symmetric
    storage expanded.
    """
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(1, "empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        raise ParseError(1, "missing %%MatrixMarket header")
    obj, fmt, field, symmetry = (h.lower() for h in header[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError(1, f"only 'matrix coordinate' is supported, got {obj} {fmt}")
    if field not in ("real", "integer"):
        raise ParseError(1, f"unsupported field {field!r}")
    if symmetry not in ("general", "symmetric"):
        raise ParseError(1, f"unsupported symmetry {symmetry!r}")

    lineno = 1
    size = None
    rows, cols, vals = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        text = line.strip()
        if not text or text.startswith("%"):
            continue
        tokens = text.split()
        if size is None:
            if len(tokens) != 3:
                raise ParseError(lineno, "size line must hold 'rows cols nnz'")
            try:
                size = tuple(int(t) for t in tokens)
            except ValueError:
                raise ParseError(lineno, "non-integer size line") from None
            if min(size) < 0:
                raise ParseError(lineno, "negative size")
            continue
        if len(tokens) != 3:
            raise ParseError(lineno, f"expected 'row col value', got {len(tokens)} fields")
        try:
            i, j, v = int(tokens[0]), int(tokens[1]), float(tokens[2])
        except ValueError:
            raise ParseError(lineno, "malformed entry") from None
        if not (1 <= i <= size[0] and 1 <= j <= size[1]):
            raise ParseError(lineno, f"index ({i}, {j}) outside {size[0]}x{size[1]}")
        if symmetry == "symmetric" and j > i:
            raise ParseError(lineno, "symmetric storage must be lower triangular")
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if symmetry == "symmetric" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)
    if size is None:
        raise ParseError(lineno, "missing size line")
    nentries = len(vals) if symmetry == "general" else sum(1 for r, c in zip(rows, cols) if r >= c)
    if nentries != size[2]:
        raise ParseError(lineno, f"declared {size[2]} entries, found {nentries}")
    return as_sparse(sp.coo_matrix((vals, (rows, cols)), shape=size[:2]))


def write_matrix_market(path, X, comment=None):
    """Write a real matrix in general coordinate format (17 significant digits)."""
    M = sp.coo_matrix(as_sparse(X))
    order = np.lexsort((M.row, M.col))
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            fh.write(f"% {comment}\n")
        fh.write(f"{M.shape[0]} {M.shape[1]} {M.nnz}\n")
        for k in order:
            fh.write(f"{M.row[k] + 1} {M.col[k] + 1} {M.data[k]:.17g}\n")


def _load_manifest(directory):
    directory = Path(directory)
    path = directory / MANIFEST if directory.is_dir() else directory
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(manifest, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    unknown = set(manifest) - _MANIFEST_KEYS
    if unknown:
        raise ManifestError(f"{path}: unknown manifest keys {sorted(unknown)}")
    if manifest.get("format_version") != BUNDLE_VERSION:
        raise ManifestError(f"{path}: unsupported format_version {manifest.get('format_version')!r}")
    for key, allowed in (("matrices", _MATRIX_ROLES), ("dimensions", _DIMENSION_KEYS),
                         ("ports", _PORT_KEYS)):
        section = manifest.get(key, {})
        if not isinstance(section, dict):
            raise ManifestError(f"{path}: '{key}' must be an object")
        bad = set(section) - allowed
        if bad:
            raise ManifestError(f"{path}: unknown {key} entries {sorted(bad)}")
    return path.parent, manifest


def read_bundle(directory):
    """Load a :class:`DescriptorSystem` from a bundle directory.

    The manifest names either ``E`` and ``A`` directly or the MNA blocks
    ``G, C, M, W``; ``B`` and ``L`` are required, ``D`` optional.
    """
    root, manifest = _load_manifest(directory)
    files = manifest.get("matrices", {})
    for role in ("B", "L"):
        if role not in files:
            raise ManifestError(f"bundle lacks required matrix {role}")
    direct = {"E", "A"} <= set(files)
    mna = {"G", "C", "W"} <= set(files)
    if direct == mna:
        raise ManifestError("bundle must give either (E, A) or (G, C, M, W), not both or neither")

    mats = {}
    for role, name in files.items():
        fpath = root / name
        if not fpath.exists():
            raise ManifestError(f"matrix file for {role} not found: {fpath}")
        try:
            mats[role] = read_matrix_market(fpath)
        except ParseError as exc:
            raise ParseError(exc.line, f"{fpath.name}: {exc.reason}") from None

    ports = manifest.get("ports", {})
    D = mats["D"].toarray() if "D" in mats else None
    dims = manifest.get("dimensions", {})
    if direct:
        sys = DescriptorSystem(mats["E"], mats["A"], mats["B"], mats["L"], D,
                               n_nodes=dims.get("n"), input_names=ports.get("inputs"),
                               output_names=ports.get("outputs"))
    else:
        W = mats["W"]
        M = mats.get("M", sp.csr_matrix((W.shape[1], W.shape[1])))
        try:
            sys = descriptor_from_blocks(mats["G"], mats["C"], M, W, mats["B"], mats["L"], D,
                                         input_names=ports.get("inputs"),
                                         output_names=ports.get("outputs"))
        except ValueError as exc:
            raise DimensionMismatch(f"inconsistent MNA blocks: {exc}") from None
    declared = {"N": sys.order, "p": sys.n_inputs, "q": sys.n_outputs}
    if sys.n_nodes is not None:
        declared["n"] = sys.n_nodes
        declared["m"] = sys.order - sys.n_nodes
    for key, value in dims.items():
        if key in declared and declared[key] != value:
            raise DimensionMismatch(f"manifest declares {key}={value}, matrices give {declared[key]}")
    return sys


def write_bundle(directory, E, A, B, L, D=None, n_nodes=None, input_names=None,
                 output_names=None, description=None):
    """Write an (E, A, B, L[, D]) bundle with its manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {"E": "E.mtx", "A": "A.mtx", "B": "B.mtx", "L": "L.mtx"}
    mats = {"E": E, "A": A, "B": B, "L": L}
    if D is not None:
        files["D"] = "D.mtx"
        mats["D"] = D
    for role, name in files.items():
        write_matrix_market(directory / name, mats[role])
    Bs, Ls = as_sparse(B), as_sparse(L)
    dims = {"N": Bs.shape[0], "p": Bs.shape[1], "q": Ls.shape[0]}
    if n_nodes is not None:
        dims["n"] = n_nodes
    manifest = {"format_version": BUNDLE_VERSION, "matrices": files, "dimensions": dims}
    if input_names or output_names:
        manifest["ports"] = {"inputs": list(input_names or []), "outputs": list(output_names or [])}
    if description:
        manifest["description"] = description
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory


def write_system_bundle(directory, sys, description=None):
    E, A, B, L, D = sys.to_dense() if not isinstance(sys, DescriptorSystem) else (
        sys.E, sys.A, sys.B, sys.L, sys.D)
    return write_bundle(directory, E, A, B, L, D,
                        n_nodes=getattr(sys, "n_nodes", None),
                        input_names=getattr(sys, "input_names", None),
                        output_names=getattr(sys, "output_names", None),
                        description=description)


def _sweep_header(q, p, output_names=None, input_names=None):
    outs = output_names or [str(i) for i in range(q)]
    ins = input_names or [str(j) for j in range(p)]
    header = ["omega"]
    for i in range(q):
        for j in range(p):
            header += [f"H[{outs[i]}:{ins[j]}].{part}" for part in ("re", "im", "abs")]
    return header


def write_sweep_csv(sweep, path, output_names=None, input_names=None):
    """One row per frequency: omega, then re/im/abs of ``H[out:in]`` for every pair."""
    npts, q, p = sweep.values.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_sweep_header(q, p, output_names, input_names))
        for k in range(npts):
            row = [f"{sweep.omega[k]:.17g}"]
            for i in range(q):
                for j in range(p):
                    h = sweep.values[k, i, j]
                    row += [f"{h.real:.17g}", f"{h.imag:.17g}", f"{abs(h):.17g}"]
            w.writerow(row)


def read_sweep_csv(path, shape=None):
    """Read a sweep CSV back; ``shape=(q, p)`` defaults to a single row of inputs."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    if header[0] != "omega" or (len(header) - 1) % 3:
        raise ParseError(1, "not a sweep CSV header")
    npairs = (len(header) - 1) // 3
    q, p = shape if shape is not None else (1, npairs)
    if q * p != npairs:
        raise DimensionMismatch(f"shape {shape} does not match {npairs} column triples")
    omega = np.array([float(r[0]) for r in data])
    values = np.empty((len(data), q, p), dtype=complex)
    for k, r in enumerate(data, start=0):
        if len(r) != len(header):
            raise ParseError(k + 2, f"expected {len(header)} fields, got {len(r)}")
        nums = np.array([float(x) for x in r[1:]]).reshape(q, p, 3)
        values[k] = nums[..., 0] + 1j * nums[..., 1]
    return FrequencySweep(omega, values)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if hasattr(obj, "__dataclass_fields__"):
        return {k: _jsonable(getattr(obj, k)) for k in obj.__dataclass_fields__}
    return obj


def write_report_json(report, path):
    """Write a run report deterministically (sorted keys, fixed indent)."""
    Path(path).write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")


def read_report_json(path):
    return json.loads(Path(path).read_text())
