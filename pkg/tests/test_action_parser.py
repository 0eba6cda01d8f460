import pytest

from utils.action_parser import ActionParser, format_action, looks_hallucinated, parse_action
from utils.blocksworld import Action
from utils.errors import ParseFailure


@pytest.mark.parametrize(
    "text, expected",
    [
        ("I will measure first. <measure a>", Action.measure("a")),
        ("<Pick up b>", Action.pick_up("b")),
        ("<pickup b>", Action.pick_up("b")),
        ("<stack a on c>", Action.stack("a", "c")),
        ("<stack block a on top of block c>", Action.stack("a", "c")),
        ("<put down d>", Action.put_down("d")),
        ("<towers [a, b]; [c]>", Action.declare_towers([["a", "b"], ["c"]])),
        ("<height 7.53cm>", Action.height(7.53)),
        ("<height 12>", Action.height(12.0)),
        ("<done>", Action.done()),
        ("```\n<done>\n```", Action.done()),
    ],
)
def test_parse_valid_tags(text, expected):
    assert parse_action(text) == expected


def test_last_valid_tag_wins():
    assert parse_action("<measure a> then <measure b>") == Action.measure("b")
    assert parse_action("<measure a> and <fly away>") == Action.measure("a")


def test_raw_text_is_kept():
    assert parse_action("ok <stack a on b>").raw_text == "<stack a on b>"


@pytest.mark.parametrize(
    "text",
    [
        "no tag at all",
        "<fly to the moon>",
        "<towers [a, a]; [b]>",
        "<towers [a] and more [b]>",
        "",
    ],
)
def test_parse_failures(text):
    with pytest.raises(ParseFailure) as info:
        parse_action(text)
    assert info.value.text == text


@pytest.mark.parametrize(
    "action",
    [
        Action.measure("c"),
        Action.pick_up("a"),
        Action.stack("b", "a"),
        Action.put_down("e"),
        Action.declare_towers([["a"], ["b", "c"]]),
        Action.height(8.25),
        Action.done(),
    ],
)
def test_formatted_actions_parse_back(action):
    assert parse_action(format_action(action)) == action


def test_hallucination_heuristic():
    assert not looks_hallucinated("<measure a> <measure b> <measure c>")
    assert looks_hallucinated("<measure a> a: 5cm <measure b> <measure c> <measure d>")


def test_parser_instances_are_independent():
    parser = ActionParser()
    assert parser.find_tags("<a> text <b>") == ["<a>", "<b>"]
