import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afresnet import (
    ModelConfig,
    analytic_param_count,
    build_model,
    count_parameters,
    load_checkpoint,
    parse_config,
    preset,
    save_checkpoint,
)
from afresnet.grid import GRAMMAR_ENTRIES, PRESET_ENTRIES
from afresnet.model import (
    CheckpointError,
    Network,
    forward,
    forward_features,
    resolve_model,
    stage_lengths,
)
from afresnet.nn import ShapeError, Tensor


@pytest.mark.parametrize("text,expected", GRAMMAR_ENTRIES)
def test_reference_grid_counts(text, expected):
    cfg = parse_config(text)
    assert analytic_param_count(cfg) == expected
    assert count_parameters(build_model(cfg)) == expected


@pytest.mark.parametrize("name,expected", PRESET_ENTRIES)
def test_preset_counts(name, expected):
    assert count_parameters(preset(name)) == expected
    assert analytic_param_count(name) == expected


def test_reference_grid_deltas():
    def count(i):
        return analytic_param_count(parse_config(GRAMMAR_ENTRIES[i][0]))

    assert count(1) - count(0) == 600     # input filters 8 -> 32
    assert count(13) - count(12) == 320   # cnacna -> ncnacn
    assert count(15) - count(14) == 1160  # same, more blocks
    assert count(2) - count(0) == 3368    # cna -> cnacna
    assert count(3) - count(0) == 3368    # one block -> two blocks


def test_micro_config_hand_count():
    # 7 (stem conv) + 2 (stem norm) + 3 (block conv) + 1 (skip)
    # + 2 (head weight) + 2 (head bias) = 17
    cfg = parse_config("1; c; [1]; [1]")
    assert analytic_param_count(cfg) == 17
    assert count_parameters(build_model(cfg)) == 17


def test_empty_network_counts_zero():
    assert count_parameters(Network(config_text="")) == 0


valid_configs = st.builds(
    lambda f0, mid, pairs: ModelConfig(
        f0,
        "c" + "".join(mid),
        tuple(p[0] for p in pairs),
        tuple(p[1] for p in pairs),
    ),
    st.integers(1, 16),
    st.lists(st.sampled_from("cna"), max_size=5),
    st.lists(st.tuples(st.integers(1, 8), st.integers(1, 3)), min_size=1, max_size=4),
)


@given(valid_configs)
@settings(max_examples=40, deadline=None)
def test_analytic_equals_structural(cfg):
    assert analytic_param_count(cfg) == count_parameters(build_model(cfg))


@given(st.integers(1, 16), st.lists(st.sampled_from("cna"), max_size=5),
       st.lists(st.tuples(st.integers(1, 8), st.integers(1, 3)),
                min_size=1, max_size=4))
@settings(max_examples=20, deadline=None)
def test_leading_norm_layouts(f0, mid, pairs):
    # 'n' before the first 'c' normalizes the block's input channel count
    cfg = ModelConfig(f0, "n" + "".join(mid) + "c",
                      tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))
    assert analytic_param_count(cfg) == count_parameters(build_model(cfg))


def test_unknown_preset():
    with pytest.raises(KeyError, match="ResNet50"):
        preset("ResNet50")


@pytest.mark.parametrize("text", ["8; ncnacn; [4, 8]; [2, 3]", "ResNet34",
                                  "32; cna; [4]; [1]"])
def test_layer_plan_domains(text):
    net = resolve_model(text)
    for lp in net.layers():
        if lp.kind == "conv":
            assert lp.kernel in (1, 3, 7)
        assert lp.stride in (1, 2)


def test_zero_input_yields_head_bias(rng):
    net = build_model(parse_config("8; cna; [4, 4]; [1, 1]"), seed=5)
    net.params["head.dense.bias"].data = rng.normal(size=2)
    logits = forward(net, Tensor(np.zeros((3, 1, 64))), mode="eval")
    np.testing.assert_allclose(
        logits.data, np.tile(net.params["head.dense.bias"].data, (3, 1)),
        atol=1e-12,
    )


def test_identical_rows_give_identical_logits(rng):
    net = build_model(parse_config("8; cnacna; [4]; [2]"), seed=2)
    row = rng.normal(size=(1, 1, 48))
    batch = np.repeat(row, 4, axis=0)
    logits = forward(net, Tensor(batch), mode="eval")
    assert np.all(logits.data == logits.data[0])


def test_stage_lengths_formula_chain():
    net = build_model(parse_config("8; cna; [4, 4, 8, 8, 16, 16, 20]; "
                                   "[1, 1, 1, 1, 1, 1, 1]"))
    # applying Lout = (L + 2p - K) // stride + 1 stage by stage from 3000
    expected = [1500, 750, 375, 188, 94, 47, 24, 12]
    assert stage_lengths(net, 3000) == expected
    feats = forward_features(net.eval(), Tensor(np.zeros((1, 1, 3000))), "eval")
    assert feats.data.shape == (1, 20, expected[-1])


def test_total_downsample_factor_256():
    net = build_model(parse_config("8; cna; [4, 4, 8, 8, 16, 16, 20]; "
                                   "[1, 1, 1, 1, 1, 1, 1]"))
    for length in (256, 512, 3072):
        assert stage_lengths(net, length)[-1] == length // 256


def test_preset_first_group_keeps_length():
    net = preset("ResNet18")
    # stem halves; groups 2-4 halve; group 1 does not
    assert stage_lengths(net, 512) == [256, 256, 128, 64, 32]


def test_too_short_input_names_stage():
    net = build_model(parse_config("8; cna; [4]; [1]"))
    with pytest.raises(ShapeError, match="stem.norm"):
        forward(net, Tensor(np.zeros((1, 1, 1))), mode="train")


def test_train_forward_touches_only_running_stats(rng):
    net = build_model(parse_config("8; cna; [4, 4]; [1, 1]"), seed=0)
    params_before = {k: p.data.tobytes() for k, p in net.params.items()}
    running_before = {k: v.tobytes() for k, v in net.running.items()}
    forward(net, Tensor(rng.normal(size=(2, 1, 64))), mode="train")
    assert all(net.params[k].data.tobytes() == v for k, v in params_before.items())
    assert any(net.running[k].tobytes() != v for k, v in running_before.items())


def test_eval_forward_is_pure(rng):
    net = build_model(parse_config("8; cna; [4, 4]; [1, 1]"), seed=0)
    running_before = {k: v.tobytes() for k, v in net.running.items()}
    x = Tensor(rng.normal(size=(2, 1, 64)))
    a = forward(net, x, mode="eval")
    b = forward(net, x, mode="eval")
    assert a.data.tobytes() == b.data.tobytes()
    assert all(net.running[k].tobytes() == v for k, v in running_before.items())


def test_build_rejects_invalid_config():
    from afresnet.config import ConfigValidationError

    with pytest.raises(ConfigValidationError):
        build_model(ModelConfig(8, "cna", (4, 8), (1,)))


class TestCheckpoints:
    def _probe(self, net, rng):
        return forward(net, Tensor(rng.normal(size=(2, 1, 96))), mode="eval").data

    def test_round_trip_bitwise(self, tmp_path, rng):
        net = build_model(parse_config("8; cnacna; [4, 8]; [1, 2]"), seed=9)
        # make running stats non-trivial before saving
        forward(net, Tensor(rng.normal(size=(2, 1, 96))), mode="train")
        before = self._probe(net, np.random.default_rng(0))
        save_checkpoint(net, tmp_path / "net.ckpt")
        loaded = load_checkpoint(tmp_path / "net.ckpt")
        after = self._probe(loaded, np.random.default_rng(0))
        assert before.tobytes() == after.tobytes()

    def test_preset_round_trip(self, tmp_path):
        net = preset("ResNet18", seed=1)
        save_checkpoint(net, tmp_path / "r18.ckpt")
        loaded = load_checkpoint(tmp_path / "r18.ckpt")
        assert loaded.config_text == "ResNet18"
        assert count_parameters(loaded) == 3843138

    def test_f32_file_size_formula(self, tmp_path):
        from afresnet.model import _checkpoint_entries

        text = "8; cna; [4, 4, 8, 8, 16, 16, 20]; [1, 1, 1, 1, 1, 1, 1]"
        net = build_model(parse_config(text))
        path = tmp_path / "net32.ckpt"
        save_checkpoint(net, path, dtype="f32")
        n_params = count_parameters(net)
        n_running = sum(v.size for v in net.running.values())
        entries = [(name, np.asarray(arr)) for name, arr in _checkpoint_entries(net)]
        header = 4 + 4 + 4 + len(text.encode()) + 4
        per_entry = sum(4 + len(n.encode()) + 2 + 4 * a.ndim for n, a in entries)
        values = 4 * (n_params + n_running + 2)  # +2 metadata scalars
        assert path.stat().st_size == header + per_entry + values

    def test_f32_round_trip_is_stable(self, tmp_path, rng):
        net = build_model(parse_config("8; cna; [4]; [1]"), seed=4)
        save_checkpoint(net, tmp_path / "a.ckpt", dtype="f32")
        first = load_checkpoint(tmp_path / "a.ckpt")
        save_checkpoint(first, tmp_path / "b.ckpt", dtype="f32")
        second = load_checkpoint(tmp_path / "b.ckpt")
        a = self._probe(first, np.random.default_rng(0))
        b = self._probe(second, np.random.default_rng(0))
        assert a.tobytes() == b.tobytes()

    def test_corrupted_magic(self, tmp_path):
        net = build_model(parse_config("8; cna; [4]; [1]"))
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(raw)
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_truncated_file(self, tmp_path):
        net = build_model(parse_config("8; cna; [4]; [1]"))
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        path.write_bytes(path.read_bytes()[:-20])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path)

    def test_unknown_tensor_name(self, tmp_path):
        net = build_model(parse_config("8; cna; [4]; [1]"))
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        raw = path.read_bytes()
        # rename the stem conv weight inside the file
        raw = raw.replace(b"stem.conv.weight", b"stem.conv.bogusw", 1)
        path.write_bytes(raw)
        with pytest.raises(CheckpointError, match="unknown tensor name"):
            load_checkpoint(path)

    def test_version_mismatch(self, tmp_path):
        net = build_model(parse_config("8; cna; [4]; [1]"))
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        raw = bytearray(path.read_bytes())
        raw[4:8] = (99).to_bytes(4, "little")
        path.write_bytes(raw)
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_resolve_model_accepts_presets_and_grammar(self):
        assert count_parameters(resolve_model("ResNet34")) == 7217474
        assert count_parameters(resolve_model("1; c; [1]; [1]")) == 17
