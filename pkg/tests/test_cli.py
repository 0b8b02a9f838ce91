import json

import pytest

from jitfeedback.cli import run
from jitfeedback.domain import ErrorLabel
from jitfeedback.simulator import DEFAULT_QUIZ, ESSAY_MARKERS, synth_essay


@pytest.fixture
def sim_config_file(tmp_path):
    path = tmp_path / "sim.cfg"
    path.write_text(
        "\n".join(
            [
                "n_students = 15",
                "seed = 4",
                "p_continue = 0.7",
                "max_turns = 4",
                "transition_correct = 0.7,0.1,0.1,0.1",
                "transition_direction = 0.5,0.3,0.1,0.1",
                "transition_position = 0.4,0.1,0.4,0.1",
                "transition_position_direction = 0.4,0.1,0.2,0.3",
            ]
        )
    )
    return path


@pytest.fixture
def small_log(tmp_path, sim_config_file):
    out = tmp_path / "events.jsonl"
    assert run(["simulate", "--config", str(sim_config_file), "--out", str(out)]) == 0
    return out


def write_bank(tmp_path, per_label):
    path = tmp_path / "bank.jsonl"
    lines = []
    for label in ErrorLabel:
        count = per_label.get(label, 3) if isinstance(per_label, dict) else per_label
        for i in range(count):
            lines.append(
                json.dumps(
                    {
                        "essay": synth_essay(label, 52 + i),
                        "label": label.value,
                        "feedback": "watch the object and the sense of the push",
                    }
                )
            )
    path.write_text("\n".join(lines) + "\n")
    return path


def write_quizzes(tmp_path):
    path = tmp_path / "quizzes.json"
    path.write_text(json.dumps([DEFAULT_QUIZ.to_dict()]))
    return path


def write_scripted(tmp_path):
    path = tmp_path / "responses.jsonl"
    lines = []
    for label, marker in ESSAY_MARKERS.items():
        lines.append(
            json.dumps(
                {
                    "contains": marker,
                    "response": json.dumps(
                        {
                            "classification": label.value,
                            "confidence": 4,
                            "secondary_classification": label.value,
                            "feedback": "think once more about your plan",
                        }
                    ),
                }
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def write_dataset(tmp_path, per_label=5):
    path = tmp_path / "dataset.jsonl"
    lines = []
    for label in ErrorLabel:
        for i in range(per_label):
            lines.append(
                json.dumps({"essay": synth_essay(label, 55 + i), "label": label.value})
            )
    path.write_text("\n".join(lines) + "\n")
    return path


class TestUsageErrors:
    def test_missing_required_flag_exits_2(self, capsys):
        assert run(["eval"]) == 2
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_flag_rejected(self, capsys):
        assert run(["report", "--log", "x", "--frobnicate"]) == 2

    def test_unknown_command(self):
        assert run(["dance"]) == 2


class TestSimulateAndReport:
    def test_simulate_then_report_text(self, small_log, capsys):
        assert run(["report", "--log", str(small_log)]) == 0
        out = capsys.readouterr().out
        assert "Total instances" in out
        assert "15" in out

    def test_report_json_format(self, small_log, capsys):
        assert run(["report", "--log", str(small_log), "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["conv_stats"]["total_instances"] == 15

    def test_report_csv_dir(self, small_log, tmp_path, capsys):
        csv_dir = tmp_path / "csv"
        assert run(
            ["report", "--log", str(small_log), "--csv-dir", str(csv_dir)]
        ) == 0
        assert (csv_dir / "transitions.csv").exists()

    def test_missing_log_is_domain_error(self, tmp_path, capsys):
        assert run(["report", "--log", str(tmp_path / "nope.jsonl")]) == 1
        assert "error" in capsys.readouterr().err.lower()

    def test_simulate_refuses_overwrite(self, small_log, sim_config_file, capsys):
        assert (
            run(["simulate", "--config", str(sim_config_file), "--out", str(small_log)]) == 1
        )


class TestReplayCommand:
    def test_integrity_ok(self, small_log, capsys):
        assert run(["replay", "--log", str(small_log)]) == 0
        assert "integrity ok" in capsys.readouterr().out

    def test_corruption_detected(self, small_log, capsys):
        lines = small_log.read_text().splitlines()
        del lines[1]
        small_log.write_text("\n".join(lines) + "\n")
        assert run(["replay", "--log", str(small_log)]) == 1
        assert "integrity violation" in capsys.readouterr().err

    def test_json_format(self, small_log, capsys):
        assert run(["replay", "--log", str(small_log), "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["sessions"] == 15
        assert payload["integrity"] == "ok"


class TestValidateBank:
    def test_ok_bank(self, tmp_path, capsys):
        bank = write_bank(tmp_path, 3)
        assert run(["validate-bank", "--bank", str(bank), "--k", "3"]) == 0
        assert "bank ok" in capsys.readouterr().out

    def test_insufficient_position_examples(self, tmp_path, capsys):
        bank = write_bank(tmp_path, {ErrorLabel.POSITION: 2})
        assert run(["validate-bank", "--bank", str(bank), "--k", "3"]) == 1
        out = capsys.readouterr().out
        assert "label=position" in out and "have=2" in out and "need=3" in out

    def test_json_format(self, tmp_path, capsys):
        bank = write_bank(tmp_path, 3)
        assert run(["validate-bank", "--bank", str(bank), "--k", "3", "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["ok"] is True


class TestEval:
    def test_offline_eval_with_scripted_backend(self, tmp_path, capsys):
        dataset = write_dataset(tmp_path)
        bank = write_bank(tmp_path, 3)
        quizzes = write_quizzes(tmp_path)
        scripted = write_scripted(tmp_path)
        code = run(
            [
                "eval",
                "--dataset", str(dataset),
                "--bank", str(bank),
                "--quizzes", str(quizzes),
                "--quiz-id", DEFAULT_QUIZ.quiz_id,
                "--scripted", str(scripted),
                "--mode", "zero-shot",
                "--k", "0",
                "--trials", "2",
                "--format", "json",
            ]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["accuracy_mean"] == 1.0
        assert payload["macro_f1_mean"] == 1.0
        assert payload["trials"] == 2
        assert payload["accuracy_halfrange"] == 0.0

    def test_text_table(self, tmp_path, capsys):
        dataset = write_dataset(tmp_path, per_label=2)
        bank = write_bank(tmp_path, 3)
        quizzes = write_quizzes(tmp_path)
        scripted = write_scripted(tmp_path)
        code = run(
            [
                "eval",
                "--dataset", str(dataset),
                "--bank", str(bank),
                "--quizzes", str(quizzes),
                "--quiz-id", DEFAULT_QUIZ.quiz_id,
                "--scripted", str(scripted),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "Method" in out and "Accuracy" in out and "Macro F1" in out

    def test_requires_backend_choice(self, tmp_path, capsys):
        dataset = write_dataset(tmp_path, per_label=1)
        bank = write_bank(tmp_path, 3)
        quizzes = write_quizzes(tmp_path)
        code = run(
            [
                "eval",
                "--dataset", str(dataset),
                "--bank", str(bank),
                "--quizzes", str(quizzes),
                "--quiz-id", DEFAULT_QUIZ.quiz_id,
            ]
        )
        assert code == 1
