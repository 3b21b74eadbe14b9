"""Command-line interface: exit codes, reports, file outputs."""

import pytest

from mqttdiff.automata import load_model
from mqttdiff.cli import main
from mqttdiff.crosscheck import parse_diff_report


def read_report(path):
    items = {}
    for line in path.read_text().splitlines():
        key, value = line.split("\t", 1)
        items[key] = value
    return items


def learn_args(target, out, *extra):
    return ["learn", target, "--mapper", "simple", "--oracle", "w-method",
            "--depth", "2", "--out", str(out), "--no-fig", *extra]


def test_learn_writes_model_dot_and_report(tmp_path, capsys):
    out = tmp_path / "ref.model"
    assert main(learn_args("sim:reference", out)) == 0
    assert out.exists()
    assert out.with_suffix(".dot").exists()
    assert not out.with_suffix(".png").exists()  # --no-fig
    report = read_report(out.with_suffix(".report.tsv"))
    assert report["states"] == "6"
    assert report["oracle"] == "w-method"
    assert report["converged"] == "true"
    machine = load_model(out)
    assert machine.run(("Connect", "Connect")) == ("C_Ack", "ConnectionClosed")


def test_learn_renders_figure_by_default(tmp_path):
    out = tmp_path / "ref.model"
    args = ["learn", "sim:reference", "--mapper", "simple", "--oracle",
            "w-method", "--depth", "1", "--out", str(out)]
    assert main(args) == 0
    png = out.with_suffix(".png")
    assert png.exists()
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_learned_bug_model_ends_with_empty(tmp_path):
    out = tmp_path / "hb.model"
    assert main(learn_args("sim:hbmqtt-bug", out)) == 0
    machine = load_model(out)
    assert machine.run(("Connect", "Connect")) == ("C_Ack", "Empty")


def test_random_walk_defaults_appear_in_report(tmp_path):
    out = tmp_path / "rw.model"
    args = ["learn", "sim:reference", "--mapper", "simple",
            "--oracle", "random-walk", "--out", str(out), "--no-fig"]
    assert main(args) == 0
    report = read_report(out.with_suffix(".report.tsv"))
    assert report["reset_prob"] == "0.05"
    assert report["max_steps"] == "10000"
    assert report["reset_on_ce"] == "true"
    assert report["rng"] == "mersenne-twister"
    assert report["seed"] == "0"


def test_random_walk_flags_are_used_verbatim(tmp_path):
    out = tmp_path / "rw.model"
    args = ["learn", "sim:reference", "--mapper", "simple",
            "--oracle", "random-walk", "--reset-prob", "0.1",
            "--max-steps", "2000", "--no-reset-on-ce", "--seed", "9",
            "--out", str(out), "--no-fig"]
    assert main(args) == 0
    report = read_report(out.with_suffix(".report.tsv"))
    assert report["reset_prob"] == "0.1"
    assert report["max_steps"] == "2000"
    assert report["reset_on_ce"] == "false"
    assert report["seed"] == "9"


def test_unknown_target_is_a_usage_error(tmp_path):
    assert main(learn_args("sim:nope", tmp_path / "x.model")) == 2
    assert main(learn_args("carrier-pigeon://x", tmp_path / "x.model")) == 2


def test_models_are_byte_identical_across_runs(tmp_path):
    first = tmp_path / "a.model"
    second = tmp_path / "b.model"
    assert main(learn_args("sim:reference", first)) == 0
    assert main(learn_args("sim:reference", second)) == 0
    assert first.read_bytes() == second.read_bytes()


def test_crosscheck_exit_codes_and_report(tmp_path, capsys):
    ref = tmp_path / "ref.model"
    bug = tmp_path / "bug.model"
    assert main(learn_args("sim:reference", ref)) == 0
    assert main(learn_args("sim:hbmqtt-bug", bug)) == 0
    capsys.readouterr()

    assert main(["crosscheck", str(ref), str(ref)]) == 0
    assert "no differences" in capsys.readouterr().out

    out_file = tmp_path / "diffs.txt"
    code = main(["crosscheck", str(ref), str(bug), "--max-diffs", "1",
                 "--out", str(out_file)])
    assert code == 1
    stdout = capsys.readouterr().out
    diffs = parse_diff_report(stdout)
    assert diffs and diffs[0].inputs == ("Connect", "Connect")
    assert out_file.read_text() == stdout


def test_crosscheck_max_diffs_two_is_a_superset(tmp_path, capsys):
    ref = tmp_path / "ref.model"
    bug = tmp_path / "bug.model"
    main(learn_args("sim:reference", ref))
    main(learn_args("sim:hbmqtt-bug", bug))
    capsys.readouterr()
    main(["crosscheck", str(ref), str(bug), "--max-diffs", "1"])
    one = {d.inputs for d in parse_diff_report(capsys.readouterr().out)}
    main(["crosscheck", str(ref), str(bug), "--max-diffs", "2"])
    two = {d.inputs for d in parse_diff_report(capsys.readouterr().out)}
    assert one <= two and len(two) >= len(one)


def test_crosscheck_alphabet_mismatch_exit_code(tmp_path, capsys):
    simple = tmp_path / "simple.model"
    will = tmp_path / "will.model"
    assert main(["extract", "reference", "--mapper", "simple",
                 "--out", str(simple), "--no-fig"]) == 0
    assert main(["extract", "reference", "--mapper",
                 "two-client-retained-will", "--out", str(will),
                 "--no-fig"]) == 0
    assert main(["crosscheck", str(simple), str(will)]) == 2


def test_crosscheck_filters_hide_matching_diffs(tmp_path, capsys):
    ref = tmp_path / "ref.model"
    bug = tmp_path / "bug.model"
    main(learn_args("sim:reference", ref))
    main(learn_args("sim:hbmqtt-bug", bug))
    filters = tmp_path / "filters.txt"
    filters.write_text("* Connect\n")
    capsys.readouterr()
    code = main(["crosscheck", str(ref), str(bug), "--filters", str(filters)])
    stdout = capsys.readouterr().out
    # every diff for this pair ends in Connect preceded by something
    assert code == 0
    assert "no differences" in stdout


def test_replay_confirms_real_diffs(tmp_path, capsys):
    ref = tmp_path / "ref.model"
    bug = tmp_path / "bug.model"
    main(learn_args("sim:reference", ref))
    main(learn_args("sim:hbmqtt-bug", bug))
    diff_file = tmp_path / "diffs.txt"
    main(["crosscheck", str(ref), str(bug), "--out", str(diff_file)])
    capsys.readouterr()
    code = main(["replay", str(diff_file), "sim:reference", "sim:hbmqtt-bug",
                 "--mapper", "simple"])
    assert code == 0
    assert "CONFIRMED" in capsys.readouterr().out


def test_replay_against_same_target_vanishes(tmp_path, capsys):
    ref = tmp_path / "ref.model"
    bug = tmp_path / "bug.model"
    main(learn_args("sim:reference", ref))
    main(learn_args("sim:hbmqtt-bug", bug))
    diff_file = tmp_path / "diffs.txt"
    main(["crosscheck", str(ref), str(bug), "--out", str(diff_file)])
    capsys.readouterr()
    code = main(["replay", str(diff_file), "sim:reference", "sim:reference",
                 "--mapper", "simple"])
    assert code == 1
    assert "VANISHED" in capsys.readouterr().out


def test_replay_spurious_on_edited_diff(tmp_path, capsys):
    diff_file = tmp_path / "diffs.txt"
    diff_file.write_text(
        "#1\n"
        "  in: Connect  Connect\n"
        "  A:  C_Ack    Wrong\n"
        "  B:  C_Ack    Empty\n"
    )
    code = main(["replay", str(diff_file), "sim:reference", "sim:hbmqtt-bug",
                 "--mapper", "simple"])
    assert code == 1
    assert "SPURIOUS_A" in capsys.readouterr().out


def test_replay_rejects_alien_inputs(tmp_path, capsys):
    diff_file = tmp_path / "diffs.txt"
    diff_file.write_text(
        "#1\n"
        "  in: Warp\n"
        "  A:  x\n"
        "  B:  y\n"
    )
    assert main(["replay", str(diff_file), "sim:reference", "sim:reference",
                 "--mapper", "simple"]) == 2


def test_extract_command_writes_equivalent_model(tmp_path, capsys):
    learned = tmp_path / "learned.model"
    extracted = tmp_path / "extracted.model"
    assert main(learn_args("sim:reference", learned)) == 0
    assert main(["extract", "reference", "--mapper", "simple",
                 "--out", str(extracted), "--no-fig"]) == 0
    capsys.readouterr()
    assert main(["crosscheck", str(learned), str(extracted)]) == 0


def test_extract_unknown_broker_is_a_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["extract", "mosquitto", "--out", str(tmp_path / "x.model")])
    assert info.value.code == 2
