import pytest
from hypothesis import given, strategies as st

from helmetid.core import BoundingBox, LabeledBox, PlayerLabel, Side
from helmetid.metrics import ScoreBreakdown, match_predictions, summary, weighted_accuracy, write_score_report

L = [PlayerLabel(Side.HOME, j) for j in range(60)]


def _b(frame, x, label, impact=False, size=10.0):
    return LabeledBox(frame, BoundingBox(x, 0.0, size, size), label, impact)


def test_identical_box_same_label():
    m = match_predictions([_b(1, 0, L[1])], [_b(1, 0, L[1])])
    assert len(m) == 1 and m[0].correct and m[0].iou == 1.0


def test_barely_touching_boxes_do_not_match():
    pred = [LabeledBox(1, BoundingBox(0, 0, 10, 10), L[1])]
    gt = [LabeledBox(1, BoundingBox(9, 9, 10, 10), L[1])]
    assert match_predictions(pred, gt) == []


def test_wrong_label_matched_but_incorrect():
    (m,) = match_predictions([_b(1, 0, L[2])], [_b(1, 0, L[1])])
    assert not m.correct


def test_duplicate_predicted_labels_rejected():
    with pytest.raises(ValueError, match="H1"):
        match_predictions([_b(1, 0, L[1]), _b(1, 50, L[1])], [_b(1, 0, L[1])])


def test_fixture_all_correct():
    gt = [_b(1, 20 * k, L[k]) for k in range(4)]
    assert weighted_accuracy(gt, gt).weighted_accuracy == 1.0


def test_fixture_impact_weighting():
    gt = [_b(1, 0, L[0]), _b(1, 20, L[1]), _b(1, 40, L[2], impact=True)]
    pred = [_b(1, 0, L[0]), _b(1, 20, L[5]), _b(1, 40, L[2])]
    s = weighted_accuracy(pred, gt)
    assert (s.correct_nonimp, s.total_nonimp, s.correct_imp, s.total_imp) == (1, 2, 1, 1)
    assert s.weighted_accuracy == 1001 / 1002


def test_fixture_three_of_four():
    gt = [_b(1, 20 * k, L[k]) for k in range(4)]
    pred = gt[:3] + [_b(1, 60, L[9])]
    assert weighted_accuracy(pred, gt).weighted_accuracy == 0.75


def test_empty_ground_truth_rejected():
    with pytest.raises(ValueError):
        weighted_accuracy([], [])


def test_greedy_and_hungarian_can_differ():
    # greedy grabs the single best overlap, the optimal matcher keeps two pairs
    gt = [LabeledBox(1, BoundingBox(0, 0, 10, 10), L[0]), LabeledBox(1, BoundingBox(4, 0, 10, 10), L[1])]
    pred = [LabeledBox(1, BoundingBox(2, 0, 10, 10), L[0]), LabeledBox(1, BoundingBox(-3, 0, 10, 10), L[1])]
    assert len(match_predictions(pred, gt, mode="greedy")) == 1
    assert len(match_predictions(pred, gt, mode="hungarian")) == 2
    with pytest.raises(ValueError):
        match_predictions(pred, gt, mode="best")


scenes = st.lists(
    st.tuples(st.integers(1, 3), st.integers(0, 20), st.booleans(), st.floats(-4, 4), st.booleans()),
    min_size=1,
    max_size=25,
    unique_by=lambda t: (t[0], t[1]),
)


def _scene(rows):
    gt, pred = [], []
    for frame, k, impact, dx, wrong in rows:
        gt.append(_b(frame, 30.0 * k, L[k], impact))
        pred.append(_b(frame, 30.0 * k + dx, L[k + 30] if wrong else L[k]))
    return pred, gt


@given(scenes, st.randoms())
def test_score_range_and_order_free(rows, rnd):
    pred, gt = _scene(rows)
    s = weighted_accuracy(pred, gt)
    assert 0 <= s.weighted_accuracy <= 1
    p2, g2 = pred[:], gt[:]
    rnd.shuffle(p2)
    rnd.shuffle(g2)
    assert weighted_accuracy(p2, g2) == s


@given(scenes)
def test_plain_accuracy_without_impacts(rows):
    rows = [(f, k, False, dx, w) for f, k, _, dx, w in rows]
    pred, gt = _scene(rows)
    s = weighted_accuracy(pred, gt)
    correct = sum(m.correct for m in match_predictions(pred, gt))
    assert s.weighted_accuracy == pytest.approx(correct / len(gt))


@given(scenes, st.data())
def test_fixing_a_label_never_hurts(rows, data):
    pred, gt = _scene(rows)
    wrong = [i for i, r in enumerate(rows) if r[4]]
    if not wrong:
        return
    i = data.draw(st.sampled_from(wrong))
    fixed = pred[:]
    fixed[i] = LabeledBox(pred[i].frame, pred[i].box, gt[i].label)
    labels = [b.label for b in fixed if b.frame == fixed[i].frame]
    if len(set(labels)) != len(labels):
        return
    assert weighted_accuracy(fixed, gt).weighted_accuracy >= weighted_accuracy(pred, gt).weighted_accuracy


def test_breakdown_invariants():
    with pytest.raises(ValueError):
        ScoreBreakdown(3, 2, 0, 0, 1.0)
    s = ScoreBreakdown.from_counts(1, 2, 1, 1)
    assert "1/2" in summary(s)


def test_score_report(tmp_path):
    s = ScoreBreakdown.from_counts(3, 4, 0, 0)
    path = tmp_path / "r.csv"
    write_score_report([("1_1_Sideline", s), ("1_2_Sideline", ScoreBreakdown.from_counts(1, 1, 1, 1))], path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("play,correct_nonimp")
    assert lines[1] == "1_1_Sideline,3,4,0,0,0.75"
    assert lines[-1].startswith("ALL,4,5,1,1,")
