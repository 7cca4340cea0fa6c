"""Smoke test for the molflow Python extension.

Build and install first:
    pip install --no-build-isolation ./crates/python
Then run:
    python python/smoke_test.py
"""

import os
import tempfile

import molflow


def main() -> None:
    ethanol = molflow.Molecule("CCO")
    assert ethanol.atoms == ["C", "C", "O"]
    assert ethanol.bonds == [(0, 1, 1), (1, 2, 1)]
    assert abs(ethanol.property("mol_weight") - 46.069) < 1e-9
    assert molflow.tanimoto(ethanol, molflow.Molecule("OCC")) == 1.0
    assert ethanol.to_xyz("ethanol").startswith("3\nethanol\n")
    assert ethanol.to_svg().startswith("<svg")
    try:
        molflow.Molecule("C1CC")
    except ValueError as e:
        print("malformed SMILES rejected:", e)
    else:
        raise AssertionError("C1CC should not parse")

    model = molflow.FlowModel(n_max=9)
    z = model.encode(ethanol)
    assert len(z) == model.dim
    back, corrected = model.decode(z)
    assert back.is_isomorphic(ethanol) and not corrected

    corpus = ["CCO", "CC=O", "CC(=O)O", "C1CC1", "CN", "C=CC=C", "OCCO", "CC#N"]
    before = model.bits_per_dim(corpus)
    history = model.train(corpus, epochs=3, lr=1e-3, batch=4, seed=0)
    after = model.bits_per_dim(corpus)
    print(f"bits/dim {before:.4f} -> {after:.4f} (epochs: {[round(h, 4) for h in history]})")
    assert after < before

    cells = molflow.grid(model, "CCO", steps=3, delta=0.0)
    assert all(c["smiles"] == cells[1][1]["smiles"] for row in cells for c in row)
    path = molflow.interpolate(model, "CCO", "CC(=O)O", steps=4)
    assert len(path) == 4
    traj = molflow.optimize(model, "CCO", property="heavy_atoms", steps=5, seed=1)
    scores = [e["score"] for e in traj if e["accepted"]]
    assert scores == sorted(scores)

    with tempfile.TemporaryDirectory() as d:
        ckpt = os.path.join(d, "model.ckpt")
        model.save(ckpt)
        again = molflow.FlowModel.load(ckpt)
        assert again.encode(ethanol) == model.encode(ethanol)
    samples = model.sample(20, temperature=0.7, seed=3)
    assert all(m.is_valid() for m in samples)
    print("samples:", [m.smiles for m in samples[:5]])
    print("ok")


if __name__ == "__main__":
    main()
